#include "spheregc/segmenter.hpp"

#include "spheregc/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace spheregc {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

} // namespace

bool is_smooth(const std::vector<int>& boundary, const std::vector<std::vector<int>>& adjacency,
               int delta_r) {
    for (std::size_t r = 0; r < adjacency.size(); ++r) {
        for (int other : adjacency[r]) {
            if (std::abs(boundary[r] - boundary[static_cast<std::size_t>(other)]) > delta_r) {
                return false;
            }
        }
    }
    return true;
}

SurfaceSolution solve_surface(const CostTable& costs, const std::vector<std::vector<int>>& adjacency,
                              int delta_r) {
    const auto graph_start = Clock::now();
    const FlowNetwork net = build_flow_network(costs, adjacency, delta_r);
    SurfaceSolution sol;
    sol.graph_ms = elapsed_ms(graph_start);
    sol.node_count = static_cast<std::size_t>(net.node_count);
    sol.arc_count = net.arcs.size();

    const CutResult cut = max_flow(net);
    sol.flow_value = cut.flow_value;
    sol.cut_stats = cut.stats;

    for (std::size_t k = 0; k < net.z_arc_count + net.r_arc_count; ++k) {
        const Arc& a = net.arcs[k];
        if (cut.source_side[static_cast<std::size_t>(a.from)] &&
            !cut.source_side[static_cast<std::size_t>(a.to)]) {
            throw Error("minimum cut severed a structural arc");
        }
    }

    sol.boundary_index.assign(static_cast<std::size_t>(costs.rays), -1);
    for (int r = 0; r < costs.rays; ++r) {
        for (int z = costs.nodes_per_ray - 1; z >= 0; --z) {
            if (cut.source_side[costs.index(r, z)]) {
                sol.boundary_index[static_cast<std::size_t>(r)] = z;
                break;
            }
        }
        if (sol.boundary_index[static_cast<std::size_t>(r)] < 0) {
            throw Error("ray " + std::to_string(r) + " has no node on the source side");
        }
        sol.objective += costs(r, sol.boundary_index[static_cast<std::size_t>(r)]);
    }
    if (!is_smooth(sol.boundary_index, adjacency, delta_r)) {
        throw Error("optimal boundary violates the smoothness constraint");
    }
    return sol;
}

EnumeratedSurface enumerate_optimal_surface(const CostTable& costs,
                                            const std::vector<std::vector<int>>& adjacency,
                                            int delta_r) {
    const int rays = costs.rays;
    const int z_count = costs.nodes_per_ray;
    if (rays > kEnumerateMaxRays || z_count > kEnumerateMaxNodes) {
        throw InvalidArgument("exhaustive surface search limited to " +
                              std::to_string(kEnumerateMaxRays) + " rays and " +
                              std::to_string(kEnumerateMaxNodes) + " nodes per ray");
    }
    if (adjacency.size() != static_cast<std::size_t>(rays)) {
        throw InvalidArgument("adjacency does not match the cost table");
    }
    const bool nonnegative =
        std::all_of(costs.values.begin(), costs.values.end(), [](double c) { return c >= 0.0; });

    EnumeratedSurface best;
    best.objective = std::numeric_limits<double>::infinity();
    std::vector<int> current(static_cast<std::size_t>(rays), 0);

    // Depth-first in lexicographic order; only rays already assigned are
    // checked against the constraint.
    auto search = [&](auto&& self, int r, double partial) -> void {
        if (nonnegative && partial >= best.objective) {
            return;
        }
        if (r == rays) {
            best.objective = partial;
            best.boundary_index = current;
            return;
        }
        for (int z = 0; z < z_count; ++z) {
            bool ok = true;
            for (int other : adjacency[static_cast<std::size_t>(r)]) {
                if (other < r && std::abs(current[static_cast<std::size_t>(other)] - z) > delta_r) {
                    ok = false;
                    break;
                }
            }
            if (!ok) {
                continue;
            }
            current[static_cast<std::size_t>(r)] = z;
            self(self, r + 1, partial + costs(r, z));
        }
    };
    search(search, 0, 0.0);
    return best;
}

std::array<int, 3> nearest_voxel(const Geometry& grid, const WorldPoint& p) {
    const Vec3 c = grid.world_to_voxel(p);
    std::array<int, 3> ijk{};
    for (int a = 0; a < 3; ++a) {
        ijk[a] = std::clamp(static_cast<int>(std::floor(c[a] + 0.5)), 0, grid.dims[a] - 1);
    }
    return ijk;
}

Mask3D voxelize(const IcoMesh& mesh, const std::vector<double>& radii_mm, const WorldPoint& seed,
                const Geometry& grid) {
    if (radii_mm.size() != mesh.vertex_count()) {
        throw InvalidArgument("one radius per mesh vertex is required");
    }
    double max_radius = 0.0;
    for (double r : radii_mm) {
        if (!(r > 0.0) || !std::isfinite(r)) {
            throw InvalidArgument("boundary radii must be positive and finite");
        }
        max_radius = std::max(max_radius, r);
    }

    Mask3D mask(grid);
    int lo[3];
    int hi[3];
    for (int a = 0; a < 3; ++a) {
        const double c = (seed[a] - grid.origin[a]) / grid.spacing[a];
        const double reach = max_radius / grid.spacing[a];
        lo[a] = std::max(0, static_cast<int>(std::floor(c - reach)));
        hi[a] = std::min(grid.dims[a] - 1, static_cast<int>(std::ceil(c + reach)));
    }

    const auto& faces = mesh.faces();
    for (int k = lo[2]; k <= hi[2]; ++k) {
        for (int j = lo[1]; j <= hi[1]; ++j) {
            for (int i = lo[0]; i <= hi[0]; ++i) {
                const Vec3 d = grid.voxel_to_world(i, j, k) - seed;
                const double dist = norm(d);
                if (dist > max_radius) {
                    continue;
                }
                if (dist == 0.0) {
                    mask.set(i, j, k);
                    continue;
                }
                const TriangleHit hit = locate_triangle(mesh, d / dist);
                const Face& f = faces[static_cast<std::size_t>(hit.face)];
                const double radius = hit.weights[0] * radii_mm[static_cast<std::size_t>(f[0])] +
                                      hit.weights[1] * radii_mm[static_cast<std::size_t>(f[1])] +
                                      hit.weights[2] * radii_mm[static_cast<std::size_t>(f[2])];
                if (dist <= radius) {
                    mask.set(i, j, k);
                }
            }
        }
    }
    if (grid.contains_world(seed)) {
        const auto s = nearest_voxel(grid, seed);
        mask.set(s[0], s[1], s[2]);
    }
    return mask;
}

double boundary_radius(int boundary_index, const SegmentationParams& params) {
    const double step = params.step_mm();
    return std::min((boundary_index + 1.5) * step, params.ray_length_mm);
}

SegmentationResult segment(const Volume3D& vol, const WorldPoint& seed,
                           const SegmentationParams& params) {
    params.validate();
    require_seed_inside(vol, seed);
    const auto total_start = Clock::now();

    SegmentationResult result;
    result.seed = seed;
    result.params = params;

    auto t = Clock::now();
    const IcoMesh mesh = mesh_at_level(params.mesh_level);
    const auto adjacency = vertex_adjacency(mesh);
    result.timings.mesh_ms = elapsed_ms(t);

    t = Clock::now();
    result.seed_mean = estimate_seed_mean(vol, seed, params.seed_stat_radius_mm);
    const RaySamples samples = sample_rays(vol, seed, mesh, params);
    result.timings.sampling_ms = elapsed_ms(t);

    t = Clock::now();
    const CostTable deviation = node_costs(samples, result.seed_mean);
    CostTable costs;
    if (params.cost_model == CostModel::Region) {
        result.region_threshold = params.region_threshold >= 0.0
                                      ? params.region_threshold
                                      : region_threshold(samples, deviation);
        costs = region_costs(deviation, result.region_threshold);
    } else {
        costs = deviation;
    }
    if (std::all_of(deviation.values.begin(), deviation.values.end(),
                    [](double c) { return c == 0.0; })) {
        result.warnings.push_back(
            "all ray samples match the seed intensity; the segmentation fills the whole ray length");
    }
    result.timings.costs_ms = elapsed_ms(t);

    const SurfaceSolution sol = solve_surface(costs, adjacency, params.delta_r);
    result.timings.graph_ms = sol.graph_ms;
    result.timings.maxflow_ms = sol.cut_stats.solve_ms;
    result.boundary_index = sol.boundary_index;
    result.objective = sol.objective;
    result.flow_value = sol.flow_value;
    result.node_count = sol.node_count;
    result.arc_count = sol.arc_count;

    result.boundary_radius_mm.reserve(result.boundary_index.size());
    result.boundary_points.reserve(result.boundary_index.size());
    for (std::size_t r = 0; r < result.boundary_index.size(); ++r) {
        const double radius = boundary_radius(result.boundary_index[r], params);
        result.boundary_radius_mm.push_back(radius);
        result.boundary_points.push_back(samples.position(static_cast<int>(r), result.boundary_index[r]));
    }

    t = Clock::now();
    result.mask = voxelize(mesh, result.boundary_radius_mm, seed, vol.geometry());
    result.timings.voxelize_ms = elapsed_ms(t);
    result.timings.total_ms = elapsed_ms(total_start);
    return result;
}

std::string report_json(const SegmentationResult& result, bool include_timings) {
    using nlohmann::ordered_json;
    const SegmentationParams& p = result.params;
    ordered_json j;
    j["seed_mm"] = result.seed.to_array();
    j["params"] = {
        {"mesh_level", p.mesh_level},
        {"rays", vertex_count_at_level(p.mesh_level)},
        {"nodes_per_ray", p.nodes_per_ray},
        {"ray_length_mm", p.ray_length_mm},
        {"delta_r", p.delta_r},
        {"seed_stat_radius_mm", p.seed_stat_radius_mm},
        {"oob_policy", to_string(p.oob_policy)},
        {"cost_model", to_string(p.cost_model)},
    };
    j["seed_mean"] = result.seed_mean;
    j["region_threshold"] = result.region_threshold;
    j["objective"] = result.objective;
    j["flow_value"] = result.flow_value;
    j["graph"] = {{"nodes", result.node_count}, {"arcs", result.arc_count}};
    const std::size_t voxels = result.mask.count();
    j["mask_voxels"] = voxels;
    j["mask_volume_cm3"] =
        static_cast<double>(voxels) * result.mask.geometry().voxel_volume_mm3() / 1000.0;
    if (include_timings) {
        const StageTimings& t = result.timings;
        j["timings_ms"] = {{"mesh", t.mesh_ms},         {"sampling", t.sampling_ms},
                           {"costs", t.costs_ms},       {"graph", t.graph_ms},
                           {"maxflow", t.maxflow_ms},   {"voxelize", t.voxelize_ms},
                           {"total", t.total_ms}};
    }
    j["warnings"] = result.warnings;
    return j.dump(2);
}

} // namespace spheregc
