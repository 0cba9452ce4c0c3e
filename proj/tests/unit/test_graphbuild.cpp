#include "doctest.h"

#include "spheregc/error.hpp"
#include "spheregc/evalkit.hpp"
#include "spheregc/graphbuild.hpp"
#include "spheregc/maxflow.hpp"
#include "spheregc/segmenter.hpp"

#include <cmath>
#include <random>

using namespace spheregc;

namespace {

Geometry cube(int n, double spacing = 1.0, std::array<double, 3> origin = {0, 0, 0}) {
    Geometry g;
    g.dims = {n, n, n};
    g.spacing = {spacing, spacing, spacing};
    g.origin = origin;
    return g;
}

template <typename Fn>
Volume3D field(const Geometry& g, Fn&& f) {
    std::vector<float> data(g.voxel_count());
    for (int k = 0; k < g.dims[2]; ++k) {
        for (int j = 0; j < g.dims[1]; ++j) {
            for (int i = 0; i < g.dims[0]; ++i) {
                data[g.index(i, j, k)] = static_cast<float>(f(g.voxel_to_world(i, j, k)));
            }
        }
    }
    return Volume3D(g, std::move(data));
}

CostTable random_costs(std::mt19937& rng, int rays, int z_count, int max_cost = 9) {
    CostTable c(rays, z_count);
    std::uniform_int_distribution<int> d(0, max_cost);
    for (double& v : c.values) {
        v = d(rng);
    }
    return c;
}

// Source set induced by a boundary vector: node (r,z) is inside iff z <= z_r.
std::vector<bool> induced_set(const std::vector<int>& boundary, int z_count) {
    std::vector<bool> in(boundary.size() * static_cast<std::size_t>(z_count), false);
    for (std::size_t r = 0; r < boundary.size(); ++r) {
        for (int z = 0; z <= boundary[r]; ++z) {
            in[r * static_cast<std::size_t>(z_count) + static_cast<std::size_t>(z)] = true;
        }
    }
    return in;
}

} // namespace

TEST_CASE("parameter validation") {
    SegmentationParams p;
    CHECK_NOTHROW(p.validate());
    CHECK(p.step_mm() == 1.0);
    auto bad = [](auto mutate) {
        SegmentationParams q;
        mutate(q);
        CHECK_THROWS_AS(q.validate(), InvalidArgument);
    };
    bad([](SegmentationParams& q) { q.nodes_per_ray = 1; });
    bad([](SegmentationParams& q) { q.ray_length_mm = 0; });
    bad([](SegmentationParams& q) { q.delta_r = -1; });
    bad([](SegmentationParams& q) { q.delta_r = 50; });
    bad([](SegmentationParams& q) { q.seed_stat_radius_mm = 0; });
    bad([](SegmentationParams& q) { q.mesh_level = 8; });
    CHECK(oob_policy_from_name("clamp-to-edge") == OutOfBoundsPolicy::ClampToEdge);
    CHECK(to_string(OutOfBoundsPolicy::ZeroIntensity) == "zero-intensity");
    CHECK(cost_model_from_name(to_string(CostModel::Deviation)) == CostModel::Deviation);
    CHECK_THROWS_AS(cost_model_from_name("gradient"), InvalidArgument);
}

TEST_CASE("seed mean estimate") {
    const Geometry g = cube(21);
    const Volume3D constant = field(g, [](const Vec3&) { return 42.0; });
    CHECK(estimate_seed_mean(constant, {10, 10, 10}, 2.0) == doctest::Approx(42.0));

    const Volume3D ramp = field(g, [](const Vec3& p) { return p.x; });
    CHECK(std::abs(estimate_seed_mean(ramp, {10, 10, 10}, 2.0) - 10.0) < 1e-6);
    CHECK(std::abs(estimate_seed_mean(ramp, {10.3, 9.1, 7.7}, 3.0) - 10.3) < 1e-6);

    CHECK_THROWS_AS(estimate_seed_mean(constant, {-1, 10, 10}, 2.0), SeedOutOfBounds);
    CHECK_THROWS_AS(estimate_seed_mean(constant, {10, 10, 10}, 0.0), InvalidArgument);

    SUBCASE("noisy phantom agrees with a direct average over the same lattice") {
        PhantomSpec spec;
        spec.dims = {48, 48, 48};
        spec.semi_axes_mm = {12, 12, 12};
        spec.noise_sigma = 20;
        spec.rng_seed = 4;
        const Phantom ph = make_phantom(spec);
        const double mu = estimate_seed_mean(ph.volume, ph.center, 2.0);
        double sum = 0.0;
        int n = 0;
        for (double z = -2.0; z <= 2.0; z += 0.5) {
            for (double y = -2.0; y <= 2.0; y += 0.5) {
                for (double x = -2.0; x <= 2.0; x += 0.5) {
                    if (x * x + y * y + z * z <= 4.0 + 1e-9) {
                        sum += sample_trilinear(ph.volume, ph.center + Vec3(x, y, z)).value;
                        ++n;
                    }
                }
            }
        }
        CHECK(mu == doctest::Approx(sum / n).epsilon(1e-9));
        CHECK(std::abs(mu - 200.0) < 3.0 * 20.0 / std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("ray sampling") {
    const IcoMesh mesh = mesh_at_level(1);
    SegmentationParams p;
    p.nodes_per_ray = 2;
    p.ray_length_mm = 50;

    const Geometry g = cube(11, 10.0);
    const Vec3 center(50, 50, 50);
    const Volume3D constant = field(g, [](const Vec3&) { return 7.0; });
    const RaySamples s = sample_rays(constant, center, mesh, p);
    REQUIRE(s.rays() == 32);
    for (int r = 0; r < s.rays(); ++r) {
        CHECK(norm(s.position(r, 0) - center) == doctest::Approx(25.0));
        CHECK(norm(s.position(r, 1) - center) == doctest::Approx(50.0));
        CHECK_FALSE(s.out_of_bounds(r, 0));
        CHECK(s.intensity(r, 0) == doctest::Approx(7.0));
        CHECK(s.intensity(r, 1) == doctest::Approx(7.0));
    }

    SUBCASE("out-of-image policies") {
        const Volume3D small = field(cube(21), [](const Vec3&) { return 9.0; });
        SegmentationParams q;
        q.mesh_level = 0;
        q.nodes_per_ray = 20;
        q.ray_length_mm = 20;
        const RaySamples zero = sample_rays(small, {10, 10, 10}, build_icosahedron(), q);
        q.oob_policy = OutOfBoundsPolicy::ClampToEdge;
        const RaySamples clamp = sample_rays(small, {10, 10, 10}, build_icosahedron(), q);
        int outside = 0;
        for (std::size_t i = 0; i < zero.intensity.values.size(); ++i) {
            if (zero.out_of_bounds.values[i]) {
                ++outside;
                CHECK(zero.intensity.values[i] == 0.0);
                CHECK(clamp.intensity.values[i] == doctest::Approx(9.0));
            }
        }
        CHECK(outside > 0);
        const CostTable zc = node_costs(zero, 9.0);
        const CostTable cc = node_costs(clamp, 9.0);
        for (std::size_t i = 0; i < zc.values.size(); ++i) {
            CHECK(zc.values[i] == (zero.out_of_bounds.values[i] ? 1.0 : 0.0));
            CHECK(cc.values[i] == 0.0);
        }
    }
}

TEST_CASE("node costs") {
    const Volume3D v = field(cube(31), [](const Vec3& p) { return std::sin(p.x) * 50 + p.y; });
    const IcoMesh mesh = mesh_at_level(2);
    SegmentationParams p;
    p.nodes_per_ray = 10;
    p.ray_length_mm = 12;
    const RaySamples s = sample_rays(v, {15, 15, 15}, mesh, p);
    const double mu = 17.25;
    const CostTable c = node_costs(s, mu);
    for (int r = 0; r < s.rays(); ++r) {
        for (int z = 0; z < s.nodes_per_ray(); ++z) {
            const double direct = std::abs(sample_trilinear(v, s.position(r, z)).value - mu);
            CHECK(c(r, z) == doctest::Approx(direct).epsilon(1e-12));
        }
    }

    RaySamples flat = s;
    std::fill(flat.intensity.values.begin(), flat.intensity.values.end(), mu);
    const CostTable zero = node_costs(flat, mu);
    for (double x : zero.values) {
        CHECK(x == 0.0);
    }
    flat.intensity(3, 4) = mu + 7;
    const CostTable one = node_costs(flat, mu);
    CHECK(one(3, 4) == 7.0);
    CHECK(std::count(one.values.begin(), one.values.end(), 0.0) ==
          static_cast<long>(one.values.size()) - 1);
}

TEST_CASE("region costs and threshold") {
    CostTable d(2, 4);
    d.values = {0, 1, 10, 10, 1, 0, 9, 11};
    const CostTable b = region_costs(d, 5.0);
    // Prefix sums of d - 5 on each ray, then shifted by the global minimum (-9).
    const std::vector<double> expected = {4, 0, 5, 10, 5, 0, 4, 10};
    CHECK(b.values == expected);

    RaySamples s;
    s.intensity = RayTable<double>(2, 4);
    s.out_of_bounds = RayTable<char>(2, 4);
    CHECK(region_threshold(s, d) == doctest::Approx(5.25));
    CostTable flat(2, 4, 3.0);
    CHECK(region_threshold(s, flat) == 0.0);
}

TEST_CASE("network structure") {
    const IcoMesh mesh = build_icosahedron();
    const auto adj = vertex_adjacency(mesh);
    std::mt19937 rng(8);
    const CostTable c = random_costs(rng, 12, 3);
    const FlowNetwork net = build_flow_network(c, adj, 1);
    CHECK(net.node_count == 36);
    CHECK(net.z_arc_count == 24);
    CHECK(net.r_arc_count == 180);
    CHECK(net.arcs.size() == 204);
    double total = 0.0;
    for (int v = 0; v < net.node_count; ++v) {
        CHECK((net.source_capacity[v] == 0.0 || net.sink_capacity[v] == 0.0));
        total += net.source_capacity[v] + net.sink_capacity[v];
    }
    CHECK(net.infinity == total + 1.0);
    CHECK(structural_capacity(net) == net.infinity);
    for (std::size_t k = 0; k < net.z_arc_count; ++k) {
        const Arc& a = net.arcs[k];
        CHECK(a.to == a.from - 1);
        CHECK(a.capacity == net.infinity);
    }
    for (std::size_t k = net.z_arc_count; k < net.arcs.size(); ++k) {
        const Arc& a = net.arcs[k];
        const int r = a.from / 3, z = a.from % 3, r2 = a.to / 3, z2 = a.to % 3;
        CHECK(std::find(adj[r].begin(), adj[r].end(), r2) != adj[r].end());
        CHECK(z2 == std::max(0, z - 1));
        CHECK(a.capacity == net.infinity);
    }

    double force = 1.0;
    for (double x : c.values) {
        force += x;
    }
    for (int r = 0; r < 12; ++r) {
        CHECK(net.source_capacity[3 * r] == doctest::Approx(force - c(r, 0)));
        for (int z = 1; z < 3; ++z) {
            const double w = c(r, z) - c(r, z - 1);
            CHECK(net.source_capacity[3 * r + z] == (w < 0 ? -w : 0.0));
            CHECK(net.sink_capacity[3 * r + z] == (w > 0 ? w : 0.0));
        }
    }
    CHECK_THROWS_AS(build_flow_network(c, std::vector<std::vector<int>>(5), 1), InvalidArgument);
}

TEST_CASE("all-zero costs give a zero cut and the full closed set") {
    const auto adj = vertex_adjacency(mesh_at_level(1));
    const CostTable c(32, 5, 0.0);
    const FlowNetwork net = build_flow_network(c, adj, 1);
    for (int r = 0; r < 32; ++r) {
        CHECK(net.source_capacity[5 * r] == 1.0);
        for (int z = 1; z < 5; ++z) {
            CHECK(net.source_capacity[5 * r + z] == 0.0);
            CHECK(net.sink_capacity[5 * r + z] == 0.0);
        }
    }
    const CutResult cut = max_flow(net);
    CHECK(cut.flow_value == 0.0);
    CHECK(std::all_of(cut.source_side.begin(), cut.source_side.end(), [](bool b) { return b; }));
}

TEST_CASE("induced cut equals objective plus a constant for every smooth boundary") {
    const auto adj = vertex_adjacency(build_icosahedron());
    std::mt19937 rng(12);
    for (int trial = 0; trial < 10; ++trial) {
        const int delta = trial % 3;
        const CostTable c = random_costs(rng, 12, 3);
        const FlowNetwork net = build_flow_network(c, adj, delta);
        double offset = 0.0;
        bool have_offset = false;
        int checked = 0;
        for (int code = 0; code < 531441 && checked < 300; code += 1 + trial) {
            std::vector<int> b(12);
            for (int r = 0, x = code; r < 12; ++r, x /= 3) {
                b[r] = x % 3;
            }
            if (!is_smooth(b, adj, delta)) {
                continue;
            }
            ++checked;
            double objective = 0.0;
            for (int r = 0; r < 12; ++r) {
                objective += c(r, b[r]);
            }
            const double cut = net.cut_capacity(induced_set(b, 3));
            CHECK(cut < net.infinity);
            if (!have_offset) {
                offset = cut - objective;
                have_offset = true;
            }
            CHECK(cut - objective == doctest::Approx(offset));
        }
        CHECK(checked > 0);
    }
}

TEST_CASE("optimal objective is non-increasing in delta_r") {
    const auto adj = vertex_adjacency(build_icosahedron());
    std::mt19937 rng(44);
    for (int trial = 0; trial < 20; ++trial) {
        const CostTable c = random_costs(rng, 12, 4);
        double previous = 1e300;
        for (int delta = 0; delta <= 3; ++delta) {
            const double obj = solve_surface(c, adj, delta).objective;
            CHECK(obj <= previous);
            previous = obj;
        }
    }
}
