#pragma once

#include "spheregc/flow_network.hpp"
#include "spheregc/spheremesh.hpp"
#include "spheregc/volume.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace spheregc {

enum class OutOfBoundsPolicy {
    // Nodes outside the image get the out-of-bounds penalty cost.
    ZeroIntensity,
    // Nodes outside the image read the nearest in-image value.
    ClampToEdge,
};

enum class CostModel {
    // Per-ray cost of placing the boundary at node z is the accumulated
    // (deviation - threshold) over nodes 0..z: object-like nodes pull the
    // boundary outwards, background-like nodes push it back in.
    Region,
    // Per-ray cost is the deviation |I - mu| of the boundary node alone.
    Deviation,
};

std::string to_string(OutOfBoundsPolicy p);
std::string to_string(CostModel m);
OutOfBoundsPolicy oob_policy_from_name(const std::string& name);
CostModel cost_model_from_name(const std::string& name);

struct SegmentationParams {
    int mesh_level = 5;          // 2432 rays
    int nodes_per_ray = 50;      // Z
    double ray_length_mm = 50.0; // L
    int delta_r = 1;             // max boundary index step between neighbouring rays
    double seed_stat_radius_mm = 2.0;
    OutOfBoundsPolicy oob_policy = OutOfBoundsPolicy::ZeroIntensity;
    CostModel cost_model = CostModel::Region;
    // Deviation separating object from background for the region model;
    // a negative value selects it automatically from the ray samples.
    double region_threshold = -1.0;

    double step_mm() const { return ray_length_mm / nodes_per_ray; }

    // Throws InvalidArgument when an invariant is violated.
    void validate() const;
};

// Row-major (ray, node) table; entry (r, z) lives at r * nodes_per_ray + z.
template <typename T>
struct RayTable {
    int rays = 0;
    int nodes_per_ray = 0;
    std::vector<T> values;

    RayTable() = default;
    RayTable(int r, int z, T fill = T{})
        : rays(r), nodes_per_ray(z),
          values(static_cast<std::size_t>(r) * static_cast<std::size_t>(z), fill) {}

    std::size_t index(int r, int z) const {
        return static_cast<std::size_t>(r) * static_cast<std::size_t>(nodes_per_ray) +
               static_cast<std::size_t>(z);
    }
    T& operator()(int r, int z) { return values[index(r, z)]; }
    const T& operator()(int r, int z) const { return values[index(r, z)]; }
};

using CostTable = RayTable<double>;

struct RaySamples {
    WorldPoint seed;
    double step_mm = 0.0;
    std::vector<Vec3> directions;
    RayTable<double> intensity;
    RayTable<char> out_of_bounds;
    // Out-of-image nodes carry edge-clamped intensities instead of the
    // out-of-bounds penalty.
    bool clamp_out_of_bounds = false;

    int rays() const { return intensity.rays; }
    int nodes_per_ray() const { return intensity.nodes_per_ray; }
    // seed + (z + 1) * step * dir(r)
    WorldPoint position(int r, int z) const {
        return seed + directions[static_cast<std::size_t>(r)] * ((z + 1) * step_mm);
    }
};

// Mean of trilinear samples on a cubic lattice of pitch min(spacing)/2
// centred on the seed, restricted to the ball of the given radius and to
// in-image samples. Throws SeedOutOfBounds when the seed is outside the
// image.
double estimate_seed_mean(const Volume3D& vol, const WorldPoint& seed, double radius_mm);

// Throws SeedOutOfBounds when the seed is outside the voxel-centre box.
void require_seed_inside(const Volume3D& vol, const WorldPoint& seed);

RaySamples sample_rays(const Volume3D& vol, const WorldPoint& seed, const IcoMesh& mesh,
                       const SegmentationParams& params);

// c(r,z) = |I(r,z) - mu|; out-of-image nodes cost the largest in-image
// cost plus one.
CostTable node_costs(const RaySamples& samples, double mean);

// Two-class split of the in-image deviations (iterated midpoint of the
// class means). Returns 0 when all deviations are equal.
double region_threshold(const RaySamples& samples, const CostTable& deviation);

// b(r,z) = sum_{k<=z} (c(r,k) - threshold), shifted so the smallest entry
// is zero.
CostTable region_costs(const CostTable& deviation, double threshold);

// Minimal-closed-set network for per-ray boundary costs:
//   w(r,0) = c(r,0) - FORCE with FORCE = sum(c) + 1,
//   w(r,z) = c(r,z) - c(r,z-1) for z >= 1,
// negative weights become s->v arcs, positive ones v->t arcs. Along-ray
// arcs (r,z)->(r,z-1) and cross-ray arcs (r,z)->(r',max(0,z-delta_r)) for
// every mesh edge carry a saturating capacity larger than any finite cut.
FlowNetwork build_flow_network(const CostTable& costs,
                               const std::vector<std::vector<int>>& adjacency, int delta_r);

// Total of all terminal capacities plus one; used as the structural-arc capacity.
double structural_capacity(const FlowNetwork& net);

} // namespace spheregc
