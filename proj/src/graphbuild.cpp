#include "spheregc/graphbuild.hpp"

#include "spheregc/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace spheregc {

std::string to_string(OutOfBoundsPolicy p) {
    return p == OutOfBoundsPolicy::ZeroIntensity ? "zero-intensity" : "clamp-to-edge";
}

std::string to_string(CostModel m) { return m == CostModel::Region ? "region" : "deviation"; }

OutOfBoundsPolicy oob_policy_from_name(const std::string& name) {
    if (name == "zero-intensity") return OutOfBoundsPolicy::ZeroIntensity;
    if (name == "clamp-to-edge") return OutOfBoundsPolicy::ClampToEdge;
    throw InvalidArgument("unknown out-of-bounds policy '" + name + "'");
}

CostModel cost_model_from_name(const std::string& name) {
    if (name == "region") return CostModel::Region;
    if (name == "deviation") return CostModel::Deviation;
    throw InvalidArgument("unknown cost model '" + name + "'");
}

void SegmentationParams::validate() const {
    if (mesh_level < 0 || mesh_level > kMaxMeshLevel) {
        throw InvalidArgument("mesh_level must be in 0.." + std::to_string(kMaxMeshLevel));
    }
    if (nodes_per_ray < 2) {
        throw InvalidArgument("nodes_per_ray must be at least 2");
    }
    if (!(ray_length_mm > 0.0) || !std::isfinite(ray_length_mm)) {
        throw InvalidArgument("ray_length_mm must be positive");
    }
    if (delta_r < 0 || delta_r > nodes_per_ray - 1) {
        throw InvalidArgument("delta_r must be in 0..nodes_per_ray-1");
    }
    if (!(seed_stat_radius_mm > 0.0) || !std::isfinite(seed_stat_radius_mm)) {
        throw InvalidArgument("seed_stat_radius_mm must be positive");
    }
    if (!std::isfinite(region_threshold)) {
        throw InvalidArgument("region_threshold must be finite");
    }
}

void require_seed_inside(const Volume3D& vol, const WorldPoint& seed) {
    if (!is_finite(seed) || !vol.geometry().contains_world(seed)) {
        std::ostringstream os;
        os << "seed (" << seed.x << ", " << seed.y << ", " << seed.z << ") mm is outside the volume";
        throw SeedOutOfBounds(os.str());
    }
}

double estimate_seed_mean(const Volume3D& vol, const WorldPoint& seed, double radius_mm) {
    require_seed_inside(vol, seed);
    if (!(radius_mm > 0.0)) {
        throw InvalidArgument("seed statistics radius must be positive");
    }
    const auto& sp = vol.geometry().spacing;
    const double step = std::min({sp[0], sp[1], sp[2]}) / 2.0;
    const int n = static_cast<int>(std::floor(radius_mm / step + 1e-9));
    const double r2 = radius_mm * radius_mm * (1.0 + 1e-12);

    double sum = 0.0;
    std::size_t count = 0;
    for (int k = -n; k <= n; ++k) {
        for (int j = -n; j <= n; ++j) {
            for (int i = -n; i <= n; ++i) {
                const Vec3 off(i * step, j * step, k * step);
                if (dot(off, off) > r2) {
                    continue;
                }
                const Sample s = sample_trilinear(vol, seed + off);
                if (s.in_bounds) {
                    sum += s.value;
                    ++count;
                }
            }
        }
    }
    if (count == 0) {
        throw SeedOutOfBounds("seed neighbourhood lies entirely outside the volume");
    }
    return sum / static_cast<double>(count);
}

RaySamples sample_rays(const Volume3D& vol, const WorldPoint& seed, const IcoMesh& mesh,
                       const SegmentationParams& params) {
    params.validate();
    require_seed_inside(vol, seed);

    RaySamples samples;
    samples.seed = seed;
    samples.step_mm = params.step_mm();
    samples.directions = mesh.vertices();
    const int rays = static_cast<int>(mesh.vertex_count());
    const int z_count = params.nodes_per_ray;
    samples.intensity = RayTable<double>(rays, z_count);
    samples.out_of_bounds = RayTable<char>(rays, z_count);

    for (int r = 0; r < rays; ++r) {
        for (int z = 0; z < z_count; ++z) {
            const WorldPoint p = samples.position(r, z);
            const Sample s = sample_trilinear(vol, p);
            samples.out_of_bounds(r, z) = s.in_bounds ? 0 : 1;
            if (s.in_bounds || params.oob_policy == OutOfBoundsPolicy::ZeroIntensity) {
                samples.intensity(r, z) = s.value;
            } else {
                samples.intensity(r, z) = sample_clamped(vol, p);
            }
        }
    }
    samples.clamp_out_of_bounds = params.oob_policy == OutOfBoundsPolicy::ClampToEdge;
    return samples;
}

CostTable node_costs(const RaySamples& samples, double mean) {
    if (!std::isfinite(mean)) {
        throw InvalidArgument("seed mean must be finite");
    }
    CostTable costs(samples.rays(), samples.nodes_per_ray());
    double max_inside = 0.0;
    bool any_outside = false;
    for (std::size_t i = 0; i < costs.values.size(); ++i) {
        const bool penalised = samples.out_of_bounds.values[i] && !samples.clamp_out_of_bounds;
        if (penalised) {
            any_outside = true;
            continue;
        }
        costs.values[i] = std::abs(samples.intensity.values[i] - mean);
        max_inside = std::max(max_inside, costs.values[i]);
    }
    if (any_outside) {
        const double penalty = max_inside + 1.0;
        for (std::size_t i = 0; i < costs.values.size(); ++i) {
            if (samples.out_of_bounds.values[i] && !samples.clamp_out_of_bounds) {
                costs.values[i] = penalty;
            }
        }
    }
    return costs;
}

double region_threshold(const RaySamples& samples, const CostTable& deviation) {
    std::vector<double> values;
    values.reserve(deviation.values.size());
    for (std::size_t i = 0; i < deviation.values.size(); ++i) {
        if (!samples.out_of_bounds.values[i] || samples.clamp_out_of_bounds) {
            values.push_back(deviation.values[i]);
        }
    }
    if (values.empty()) {
        return 0.0;
    }
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (hi <= lo) {
        return 0.0;
    }

    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    double threshold = sum / static_cast<double>(values.size());
    for (int iter = 0; iter < 200; ++iter) {
        double s0 = 0.0;
        double s1 = 0.0;
        std::size_t n0 = 0;
        std::size_t n1 = 0;
        for (double v : values) {
            if (v <= threshold) {
                s0 += v;
                ++n0;
            } else {
                s1 += v;
                ++n1;
            }
        }
        if (n0 == 0 || n1 == 0) {
            break;
        }
        const double next = 0.5 * (s0 / static_cast<double>(n0) + s1 / static_cast<double>(n1));
        if (std::abs(next - threshold) <= 1e-9 * (1.0 + std::abs(threshold))) {
            threshold = next;
            break;
        }
        threshold = next;
    }
    return threshold;
}

CostTable region_costs(const CostTable& deviation, double threshold) {
    CostTable out(deviation.rays, deviation.nodes_per_ray);
    double lowest = 0.0;
    bool first = true;
    for (int r = 0; r < deviation.rays; ++r) {
        double running = 0.0;
        for (int z = 0; z < deviation.nodes_per_ray; ++z) {
            running += deviation(r, z) - threshold;
            out(r, z) = running;
            if (first || running < lowest) {
                lowest = running;
                first = false;
            }
        }
    }
    for (double& v : out.values) {
        v = std::max(0.0, v - lowest);
    }
    return out;
}

FlowNetwork build_flow_network(const CostTable& costs,
                               const std::vector<std::vector<int>>& adjacency, int delta_r) {
    const int rays = costs.rays;
    const int z_count = costs.nodes_per_ray;
    if (rays <= 0 || z_count <= 0 ||
        costs.values.size() != static_cast<std::size_t>(rays) * static_cast<std::size_t>(z_count)) {
        throw InvalidArgument("cost table is inconsistent with its dimensions");
    }
    if (adjacency.size() != static_cast<std::size_t>(rays)) {
        throw InvalidArgument("adjacency has " + std::to_string(adjacency.size()) +
                              " entries for " + std::to_string(rays) + " rays");
    }
    if (delta_r < 0) {
        throw InvalidArgument("delta_r must be non-negative");
    }

    double total = 0.0;
    for (double c : costs.values) {
        if (!(c >= 0.0) || !std::isfinite(c)) {
            throw InvalidArgument("node costs must be finite and non-negative");
        }
        total += c;
    }
    const double force = total + 1.0;

    FlowNetwork net(rays * z_count);
    for (int r = 0; r < rays; ++r) {
        for (int z = 0; z < z_count; ++z) {
            const double w = z == 0 ? costs(r, 0) - force : costs(r, z) - costs(r, z - 1);
            const int v = static_cast<int>(costs.index(r, z));
            if (w < 0.0) {
                net.add_source(v, -w);
            } else if (w > 0.0) {
                net.add_sink(v, w);
            }
        }
    }
    net.infinity = structural_capacity(net);

    std::size_t cross = 0;
    for (const auto& n : adjacency) {
        cross += n.size();
    }
    net.arcs.reserve(static_cast<std::size_t>(rays) * static_cast<std::size_t>(z_count - 1) +
                     cross * static_cast<std::size_t>(z_count));

    for (int r = 0; r < rays; ++r) {
        for (int z = 1; z < z_count; ++z) {
            net.add_arc(static_cast<int>(costs.index(r, z)), static_cast<int>(costs.index(r, z - 1)),
                        net.infinity);
        }
    }
    net.z_arc_count = net.arcs.size();

    for (int r = 0; r < rays; ++r) {
        for (int other : adjacency[static_cast<std::size_t>(r)]) {
            if (other < 0 || other >= rays) {
                throw InvalidArgument("adjacency refers to a ray outside the table");
            }
            for (int z = 0; z < z_count; ++z) {
                const int target = std::max(0, z - delta_r);
                net.add_arc(static_cast<int>(costs.index(r, z)),
                            static_cast<int>(costs.index(other, target)), net.infinity);
            }
        }
    }
    net.r_arc_count = net.arcs.size() - net.z_arc_count;
    return net;
}

double structural_capacity(const FlowNetwork& net) {
    double sum = 0.0;
    for (double c : net.source_capacity) {
        sum += c;
    }
    for (double c : net.sink_capacity) {
        sum += c;
    }
    return sum + 1.0;
}

} // namespace spheregc
