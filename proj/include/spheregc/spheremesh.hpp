#pragma once

#include "spheregc/vec3.hpp"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <vector>

namespace spheregc {

using Face = std::array<int, 3>;

// Triangulated unit sphere produced by repeated 1-to-3 centroid
// subdivision of a regular icosahedron. Vertices double as ray directions.
//
// Every subdivision level is retained: face f of level L is split into
// faces 3f, 3f+1 and 3f+2 of level L+1, and the spherical triangles of
// the children tile their parent. locate() walks that hierarchy.
class IcoMesh {
public:
    const std::vector<Vec3>& vertices() const { return vertices_; }
    const std::vector<Face>& faces() const { return levels_.back(); }
    const std::vector<Face>& faces_at(int level) const { return levels_.at(static_cast<std::size_t>(level)); }
    int level() const { return static_cast<int>(levels_.size()) - 1; }

    std::size_t vertex_count() const { return vertices_.size(); }
    std::size_t face_count() const { return faces().size(); }
    std::size_t edge_count() const { return faces().size() * 3 / 2; }

private:
    friend IcoMesh build_icosahedron();
    friend IcoMesh subdivide_centroid(const IcoMesh& mesh);

    std::vector<Vec3> vertices_;
    std::vector<std::vector<Face>> levels_;
};

IcoMesh build_icosahedron();

// One new vertex per face at the normalised centroid; each face becomes
// three. V' = V + F and F' = 3F. New vertices follow the existing ones in
// face-index order.
IcoMesh subdivide_centroid(const IcoMesh& mesh);

inline constexpr int kMaxMeshLevel = 7;

// Throws InvalidArgument for level outside 0..kMaxMeshLevel.
IcoMesh mesh_at_level(int level);

// Closed-form vertex count after `level` centroid subdivisions.
std::size_t vertex_count_at_level(int level);

// Sorted, deduplicated neighbour lists derived from face edges.
std::vector<std::vector<int>> vertex_adjacency(const IcoMesh& mesh);

struct TriangleHit {
    int face = -1;
    std::array<double, 3> weights{0.0, 0.0, 0.0}; // aligned with mesh.faces()[face]
};

// Face of the finest level whose cone contains `dir`, with non-negative
// barycentric weights summing to 1. On shared edges and vertices the
// lowest face index wins.
TriangleHit locate_triangle(const IcoMesh& mesh, const Vec3& dir);

// Sign test for cone containment used by locate_triangle, exposed for
// verification.
bool face_contains(const IcoMesh& mesh, const Face& face, const Vec3& dir, double tolerance = 1e-12);

// Wavefront OBJ (1-based "v" and "f" records).
void write_obj(const IcoMesh& mesh, std::ostream& out);

} // namespace spheregc
