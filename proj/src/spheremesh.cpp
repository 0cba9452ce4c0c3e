#include "spheregc/spheremesh.hpp"

#include "spheregc/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace spheregc {

IcoMesh build_icosahedron() {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    const Vec3 raw[12] = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
                          {0, -1, t}, {0, 1, t},  {0, -1, -t}, {0, 1, -t},
                          {t, 0, -1}, {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
    static constexpr Face kFaces[20] = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
        {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
        {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};

    IcoMesh mesh;
    mesh.vertices_.reserve(12);
    for (const Vec3& v : raw) {
        mesh.vertices_.push_back(normalized(v));
    }
    std::vector<Face> faces(std::begin(kFaces), std::end(kFaces));
    // Orient every face counter-clockwise seen from outside.
    for (Face& f : faces) {
        const Vec3& a = mesh.vertices_[f[0]];
        const Vec3& b = mesh.vertices_[f[1]];
        const Vec3& c = mesh.vertices_[f[2]];
        if (dot(cross(b - a, c - a), a + b + c) < 0.0) {
            std::swap(f[1], f[2]);
        }
    }
    mesh.levels_.push_back(std::move(faces));
    return mesh;
}

IcoMesh subdivide_centroid(const IcoMesh& mesh) {
    IcoMesh out = mesh;
    const auto& parent = mesh.faces();
    std::vector<Face> children;
    children.reserve(parent.size() * 3);
    out.vertices_.reserve(mesh.vertices_.size() + parent.size());
    for (const Face& f : parent) {
        const Vec3 c = normalized(mesh.vertices_[f[0]] + mesh.vertices_[f[1]] + mesh.vertices_[f[2]]);
        const int m = static_cast<int>(out.vertices_.size());
        out.vertices_.push_back(c);
        children.push_back({f[0], f[1], m});
        children.push_back({f[1], f[2], m});
        children.push_back({f[2], f[0], m});
    }
    out.levels_.push_back(std::move(children));
    return out;
}

IcoMesh mesh_at_level(int level) {
    if (level < 0 || level > kMaxMeshLevel) {
        throw InvalidArgument("mesh level must be in 0.." + std::to_string(kMaxMeshLevel) +
                              " (got " + std::to_string(level) + ")");
    }
    IcoMesh mesh = build_icosahedron();
    for (int k = 0; k < level; ++k) {
        mesh = subdivide_centroid(mesh);
    }
    return mesh;
}

std::size_t vertex_count_at_level(int level) {
    // V_k = V_{k-1} + F_{k-1}, F_k = 20 * 3^k
    std::size_t v = 12;
    std::size_t f = 20;
    for (int k = 0; k < level; ++k) {
        v += f;
        f *= 3;
    }
    return v;
}

std::vector<std::vector<int>> vertex_adjacency(const IcoMesh& mesh) {
    std::vector<std::vector<int>> adj(mesh.vertex_count());
    for (const Face& f : mesh.faces()) {
        for (int e = 0; e < 3; ++e) {
            const int a = f[e];
            const int b = f[(e + 1) % 3];
            adj[a].push_back(b);
            adj[b].push_back(a);
        }
    }
    for (auto& list : adj) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    return adj;
}

namespace {

// Smallest of the three edge-plane signed distances; >= 0 means inside.
double containment_score(const std::vector<Vec3>& v, const Face& f, const Vec3& dir) {
    const Vec3& a = v[f[0]];
    const Vec3& b = v[f[1]];
    const Vec3& c = v[f[2]];
    return std::min({dot(dir, cross(a, b)), dot(dir, cross(b, c)), dot(dir, cross(c, a))});
}

int pick_face(const std::vector<Vec3>& v, const std::vector<Face>& faces, int first, int count,
              const Vec3& dir) {
    int best = first;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int f = first; f < first + count; ++f) {
        const double s = containment_score(v, faces[f], dir);
        if (s >= -1e-12) {
            return f;
        }
        if (s > best_score) {
            best_score = s;
            best = f;
        }
    }
    return best;
}

} // namespace

bool face_contains(const IcoMesh& mesh, const Face& face, const Vec3& dir, double tolerance) {
    return containment_score(mesh.vertices(), face, dir) >= -tolerance;
}

TriangleHit locate_triangle(const IcoMesh& mesh, const Vec3& dir_in) {
    const Vec3 dir = normalized(dir_in);
    const auto& v = mesh.vertices();

    int face = pick_face(v, mesh.faces_at(0), 0, static_cast<int>(mesh.faces_at(0).size()), dir);
    for (int level = 1; level <= mesh.level(); ++level) {
        face = pick_face(v, mesh.faces_at(level), 3 * face, 3, dir);
    }

    const Face& f = mesh.faces()[face];
    const Vec3& a = v[f[0]];
    const Vec3& b = v[f[1]];
    const Vec3& c = v[f[2]];
    // Solve dir = wa*a + wb*b + wc*c by Cramer's rule, then rescale so the
    // weights sum to one.
    const double det = dot(a, cross(b, c));
    double w[3] = {dot(dir, cross(b, c)) / det, dot(a, cross(dir, c)) / det,
                   dot(a, cross(b, dir)) / det};
    double sum = 0.0;
    for (double& x : w) {
        x = std::max(x, 0.0);
        sum += x;
    }
    TriangleHit hit;
    hit.face = face;
    for (int i = 0; i < 3; ++i) {
        hit.weights[i] = w[i] / sum;
    }
    return hit;
}

void write_obj(const IcoMesh& mesh, std::ostream& out) {
    out << "# icosphere level " << mesh.level() << ": " << mesh.vertex_count() << " vertices, "
        << mesh.face_count() << " faces\n";
    out.precision(17);
    for (const Vec3& p : mesh.vertices()) {
        out << "v " << p.x << ' ' << p.y << ' ' << p.z << '\n';
    }
    for (const Face& f : mesh.faces()) {
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    }
}

} // namespace spheregc
