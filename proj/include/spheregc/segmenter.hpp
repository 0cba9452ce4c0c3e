#pragma once

#include "spheregc/graphbuild.hpp"
#include "spheregc/maxflow.hpp"
#include "spheregc/spheremesh.hpp"
#include "spheregc/volume.hpp"

#include <string>
#include <vector>

namespace spheregc {

struct StageTimings {
    double mesh_ms = 0.0;
    double sampling_ms = 0.0;
    double costs_ms = 0.0;
    double graph_ms = 0.0;
    double maxflow_ms = 0.0;
    double voxelize_ms = 0.0;
    double total_ms = 0.0;
};

// Optimal smooth boundary for a given cost table.
struct SurfaceSolution {
    std::vector<int> boundary_index; // z_r per ray
    double objective = 0.0;          // sum_r c(r, z_r)
    double flow_value = 0.0;
    std::size_t node_count = 0;
    std::size_t arc_count = 0;
    CutStats cut_stats;
    double graph_ms = 0.0;
};

// Builds the closed-set network, solves the cut, and reads back
// z_r = max{z : (r,z) on the source side}. Throws Error if a structural
// arc ends up cut or the result violates the smoothness constraint.
SurfaceSolution solve_surface(const CostTable& costs, const std::vector<std::vector<int>>& adjacency,
                              int delta_r);

// |z_r - z_r'| <= delta_r for every adjacent pair.
bool is_smooth(const std::vector<int>& boundary, const std::vector<std::vector<int>>& adjacency,
               int delta_r);

struct EnumeratedSurface {
    double objective = 0.0;
    std::vector<int> boundary_index;
};

inline constexpr int kEnumerateMaxRays = 12;
inline constexpr int kEnumerateMaxNodes = 4;

// Exhaustive minimum of sum_r c(r, z_r) over all smooth boundary vectors,
// lexicographically least argmin. Limited to 12 rays and 4 nodes per ray.
EnumeratedSurface enumerate_optimal_surface(const CostTable& costs,
                                            const std::vector<std::vector<int>>& adjacency,
                                            int delta_r);

// Star-shaped mask around the seed: voxel centre q is inside when
// |q - seed| <= the barycentric blend of the per-vertex radii on the mesh
// triangle hit by (q - seed). The voxel containing the seed is always set.
Mask3D voxelize(const IcoMesh& mesh, const std::vector<double>& radii_mm, const WorldPoint& seed,
                const Geometry& grid);

struct SegmentationResult {
    WorldPoint seed;
    SegmentationParams params;
    std::vector<int> boundary_index;
    // Surface radius per ray: midway between the last object node
    // (z_r + 1) * step and the next node, capped at the ray length.
    std::vector<double> boundary_radius_mm;
    // Position of each ray's boundary node, seed + (z_r + 1) * step * dir(r).
    std::vector<WorldPoint> boundary_points;
    Mask3D mask;
    double objective = 0.0;
    double seed_mean = 0.0;
    double region_threshold = 0.0;
    double flow_value = 0.0;
    std::size_t node_count = 0;
    std::size_t arc_count = 0;
    StageTimings timings;
    std::vector<std::string> warnings;
};

double boundary_radius(int boundary_index, const SegmentationParams& params);

// Seed -> mesh -> rays -> costs -> network -> cut -> mask. Throws
// SeedOutOfBounds for seeds outside the image and InvalidArgument for bad
// parameters.
SegmentationResult segment(const Volume3D& vol, const WorldPoint& seed,
                           const SegmentationParams& params = {});

// Nearest voxel index to a world point, clamped to the grid.
std::array<int, 3> nearest_voxel(const Geometry& grid, const WorldPoint& p);

// JSON sidecar: seed, params, objective, timings, voxel count, volume.
std::string report_json(const SegmentationResult& result, bool include_timings = true);

} // namespace spheregc
