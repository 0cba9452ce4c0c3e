#include "doctest.h"

#include "spheregc/error.hpp"
#include "spheregc/spheremesh.hpp"

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

using namespace spheregc;

namespace {

std::map<std::pair<int, int>, int> edge_use(const IcoMesh& mesh) {
    std::map<std::pair<int, int>, int> use;
    for (const Face& f : mesh.faces()) {
        for (int e = 0; e < 3; ++e) {
            const int a = f[e], b = f[(e + 1) % 3];
            ++use[{std::min(a, b), std::max(a, b)}];
        }
    }
    return use;
}

Vec3 random_direction(std::mt19937& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return normalized(Vec3(n(rng), n(rng), n(rng)));
}

// Independent Cramer solve for w with w0 a + w1 b + w2 c = dir.
std::array<double, 3> solve_weights(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    const double det = dot(a, cross(b, c));
    return {dot(d, cross(b, c)) / det, dot(a, cross(d, c)) / det, dot(a, cross(b, d)) / det};
}

} // namespace

TEST_CASE("icosahedron") {
    const IcoMesh m = build_icosahedron();
    CHECK(m.vertex_count() == 12);
    CHECK(m.face_count() == 20);
    CHECK(edge_use(m).size() == 30);
    double min_angle = 10.0;
    std::vector<double> nearest;
    for (std::size_t i = 0; i < 12; ++i) {
        double best = 10.0;
        for (std::size_t j = 0; j < 12; ++j) {
            if (i != j) {
                best = std::min(best, std::acos(std::clamp(dot(m.vertices()[i], m.vertices()[j]), -1.0, 1.0)));
            }
        }
        nearest.push_back(best);
        min_angle = std::min(min_angle, best);
    }
    for (double a : nearest) {
        CHECK(std::abs(a - min_angle) < 1e-9);
    }
}

TEST_CASE("mesh series and invariants") {
    const std::size_t expected[] = {12, 32, 92, 272, 812, 2432, 7292};
    for (int k = 0; k <= 6; ++k) {
        const IcoMesh m = mesh_at_level(k);
        CHECK(m.level() == k);
        CHECK(m.vertex_count() == expected[k]);
        CHECK(vertex_count_at_level(k) == expected[k]);
        const auto use = edge_use(m);
        const long long v = static_cast<long long>(m.vertex_count());
        const long long e = static_cast<long long>(use.size());
        const long long f = static_cast<long long>(m.face_count());
        CHECK(v - e + f == 2);
        bool manifold = true;
        for (const auto& [edge, n] : use) {
            manifold = manifold && n == 2;
        }
        CHECK(manifold);
        bool unit = true;
        for (const Vec3& p : m.vertices()) {
            unit = unit && std::abs(norm(p) - 1.0) < 1e-9;
        }
        CHECK(unit);
        bool outward = true;
        for (const Face& fc : m.faces()) {
            const Vec3& a = m.vertices()[fc[0]];
            const Vec3& b = m.vertices()[fc[1]];
            const Vec3& c = m.vertices()[fc[2]];
            outward = outward && dot(cross(b - a, c - a), a + b + c) > 0.0;
        }
        CHECK(outward);
        if (k > 0) {
            const IcoMesh prev = mesh_at_level(k - 1);
            CHECK(m.vertex_count() == prev.vertex_count() + prev.face_count());
            CHECK(m.face_count() == 3 * prev.face_count());
            for (std::size_t i = 0; i < prev.vertex_count(); ++i) {
                CHECK(m.vertices()[i] == prev.vertices()[i]);
            }
            // New vertices are normalised face centroids in face order.
            for (std::size_t f2 = 0; f2 < prev.face_count(); f2 += 97) {
                const Face& pf = prev.faces()[f2];
                const Vec3 c = normalized(prev.vertices()[pf[0]] + prev.vertices()[pf[1]] + prev.vertices()[pf[2]]);
                CHECK(norm(m.vertices()[prev.vertex_count() + f2] - c) < 1e-12);
            }
        }
    }
    CHECK(vertex_count_at_level(7) == 21872);
    CHECK_THROWS_AS(mesh_at_level(8), InvalidArgument);
    CHECK_THROWS_AS(mesh_at_level(-1), InvalidArgument);
}

TEST_CASE("vertex adjacency") {
    const auto ico = vertex_adjacency(build_icosahedron());
    for (const auto& n : ico) {
        CHECK(n.size() == 5);
    }

    for (int k : {1, 2}) {
        const IcoMesh m = mesh_at_level(k);
        const auto adj = vertex_adjacency(m);
        // Brute-force recount from the face list.
        std::vector<std::set<int>> brute(m.vertex_count());
        for (const Face& f : m.faces()) {
            for (int a = 0; a < 3; ++a) {
                for (int b = 0; b < 3; ++b) {
                    if (a != b) {
                        brute[f[a]].insert(f[b]);
                    }
                }
            }
        }
        for (std::size_t v = 0; v < m.vertex_count(); ++v) {
            CHECK(adj[v] == std::vector<int>(brute[v].begin(), brute[v].end()));
            for (int w : adj[v]) {
                const auto& back = adj[static_cast<std::size_t>(w)];
                CHECK(std::find(back.begin(), back.end(), static_cast<int>(v)) != back.end());
            }
        }
        if (k == 1) {
            for (std::size_t v = 12; v < 32; ++v) {
                CHECK(adj[v].size() == 3);
            }
        }
    }
}

TEST_CASE("locate_triangle") {
    SUBCASE("vertex directions") {
        const IcoMesh m = mesh_at_level(3);
        for (std::size_t v = 0; v < m.vertex_count(); v += 7) {
            const TriangleHit hit = locate_triangle(m, m.vertices()[v]);
            const Face& f = m.faces()[hit.face];
            bool found = false;
            for (int a = 0; a < 3; ++a) {
                if (f[a] == static_cast<int>(v)) {
                    found = true;
                    CHECK(std::abs(hit.weights[a] - 1.0) < 1e-9);
                }
            }
            CHECK(found);
        }
    }
    SUBCASE("face centroids") {
        const IcoMesh m = mesh_at_level(2);
        for (std::size_t fi = 0; fi < m.face_count(); fi += 5) {
            const Face& f = m.faces()[fi];
            const Vec3 c = normalized(m.vertices()[f[0]] + m.vertices()[f[1]] + m.vertices()[f[2]]);
            const TriangleHit hit = locate_triangle(m, c);
            CHECK(hit.face == static_cast<int>(fi));
            for (double w : hit.weights) {
                CHECK(std::abs(w - 1.0 / 3.0) < 1e-9);
            }
        }
    }
    SUBCASE("random directions against exhaustive containment") {
        const IcoMesh m = mesh_at_level(3);
        std::mt19937 rng(17);
        for (int n = 0; n < 1000; ++n) {
            const Vec3 d = random_direction(rng);
            const TriangleHit hit = locate_triangle(m, d);
            const Face& f = m.faces()[hit.face];
            const Vec3& a = m.vertices()[f[0]];
            const Vec3& b = m.vertices()[f[1]];
            const Vec3& c = m.vertices()[f[2]];
            CHECK(dot(d, cross(a, b)) >= -1e-12);
            CHECK(dot(d, cross(b, c)) >= -1e-12);
            CHECK(dot(d, cross(c, a)) >= -1e-12);
            double sum = 0.0;
            for (double w : hit.weights) {
                CHECK(w >= 0.0);
                sum += w;
            }
            CHECK(std::abs(sum - 1.0) < 1e-12);
            const Vec3 rec = normalized(a * hit.weights[0] + b * hit.weights[1] + c * hit.weights[2]);
            CHECK(norm(rec - d) < 1e-6);
            const auto w = solve_weights(a, b, c, d);
            const double ws = w[0] + w[1] + w[2];
            for (int i = 0; i < 3; ++i) {
                CHECK(std::abs(w[i] / ws - hit.weights[i]) < 1e-9);
            }
            int first = -1;
            for (std::size_t fi = 0; fi < m.face_count(); ++fi) {
                if (face_contains(m, m.faces()[fi], d)) {
                    first = static_cast<int>(fi);
                    break;
                }
            }
            CHECK(hit.face == first);
        }
    }
    SUBCASE("totality") {
        const IcoMesh m = mesh_at_level(2);
        std::mt19937 rng(23);
        int uncovered = 0;
        for (int n = 0; n < 10000; ++n) {
            const Vec3 d = random_direction(rng);
            int passing = 0;
            for (const Face& f : m.faces()) {
                passing += face_contains(m, f, d) ? 1 : 0;
            }
            uncovered += passing == 0 ? 1 : 0;
        }
        CHECK(uncovered == 0);
    }
}

TEST_CASE("OBJ export") {
    const IcoMesh m = mesh_at_level(1);
    std::ostringstream out;
    write_obj(m, out);
    std::istringstream in(out.str());
    std::string tag;
    int v = 0, f = 0, max_index = 0;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        ls >> tag;
        if (tag == "v") {
            ++v;
        } else if (tag == "f") {
            ++f;
            int a, b, c;
            ls >> a >> b >> c;
            max_index = std::max({max_index, a, b, c});
        }
    }
    CHECK(v == 32);
    CHECK(f == 60);
    CHECK(max_index == 32);
}
