#pragma once

#include "spheregc/volume.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace spheregc {

// Dice similarity 2|A n R| / (|A| + |R|), with set sizes measured as voxel
// volumes. Throws GeometryMismatch for differing grids and InvalidArgument
// when both masks are empty.
double dice(const Mask3D& a, const Mask3D& r);

double mask_volume_cm3(const Mask3D& m);

// Counter-based generator: the n-th draw depends only on (seed, n).
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t bits(std::uint64_t counter) const;
    // Uniform in (0, 1).
    double uniform(std::uint64_t counter) const;
    // Standard normal draw number `index` (Box-Muller over draws 2i, 2i+1).
    double gaussian(std::uint64_t index) const;

private:
    std::uint64_t seed_;
};

enum class PhantomShape { Sphere, Ellipsoid };

PhantomShape phantom_shape_from_name(const std::string& name);

struct PhantomSpec {
    PhantomShape shape = PhantomShape::Sphere;
    std::array<double, 3> semi_axes_mm{20.0, 20.0, 20.0};
    // World position of the object centre; unset means the grid centre.
    std::optional<WorldPoint> center;
    std::array<int, 3> dims{128, 128, 128};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    std::array<double, 3> origin{0.0, 0.0, 0.0};
    double object_intensity = 200.0;
    double background_intensity = 0.0;
    double noise_sigma = 0.0;
    std::uint64_t rng_seed = 1;
};

struct Phantom {
    Volume3D volume;
    Mask3D truth;
    WorldPoint center;
};

// Voxel in truth <=> its centre satisfies the ellipsoid inequality.
// Intensities are object/background plus Gaussian noise. Throws
// InvalidArgument when the object does not fit inside the grid.
Phantom make_phantom(const PhantomSpec& spec);

WorldPoint grid_center(const Geometry& g);

struct EvalCase {
    std::string id;
    double dsc = 0.0; // fraction
    double vol_auto_cm3 = 0.0;
    double vol_ref_cm3 = 0.0;
    std::size_t voxels_auto = 0;
    std::size_t voxels_ref = 0;
    std::optional<double> manual_time_min;
};

EvalCase evaluate_case(const std::string& id, const Mask3D& automatic, const Mask3D& reference,
                       std::optional<double> manual_time_min = std::nullopt);

struct MetricSummary {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double stddev = 0.0; // population (divisor n)
};

MetricSummary summarize_values(const std::vector<double>& values);

struct SummaryReport {
    std::size_t case_count = 0;
    MetricSummary vol_ref_cm3;
    MetricSummary vol_auto_cm3;
    MetricSummary voxels_ref;
    MetricSummary voxels_auto;
    MetricSummary dsc_percent;
    std::optional<MetricSummary> manual_time_min;
};

// Throws InvalidArgument for an empty list.
SummaryReport summarize(const std::vector<EvalCase>& cases);

// Aligned text table with min / max / mu +- sigma rows over the columns
// volume (manual, algorithm), voxel count (manual, algorithm), DSC (%) and,
// when present, manual segmentation time.
std::string render_table(const SummaryReport& report);

std::string cases_to_json(const std::vector<EvalCase>& cases);

struct ManifestEntry {
    std::string id;
    std::filesystem::path automatic;
    std::filesystem::path reference;
    std::optional<double> manual_time_min;
};

// JSON list of {"id", "auto", "ref"[, "manual_time_min"]}. Relative paths
// resolve against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

} // namespace spheregc
