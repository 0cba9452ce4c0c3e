#pragma once

#include "spheregc/vec3.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace spheregc {

// Grid geometry shared by volumes and masks. Data is row-major with x
// fastest; `origin` is the world position of the centre of voxel (0,0,0).
struct Geometry {
    std::array<int, 3> dims{0, 0, 0};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    std::array<double, 3> origin{0.0, 0.0, 0.0};

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
               static_cast<std::size_t>(dims[2]);
    }
    double voxel_volume_mm3() const { return spacing[0] * spacing[1] * spacing[2]; }

    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * static_cast<std::size_t>(dims[1]) +
                static_cast<std::size_t>(j)) *
                   static_cast<std::size_t>(dims[0]) +
               static_cast<std::size_t>(i);
    }
    bool contains_index(int i, int j, int k) const {
        return i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2];
    }

    Vec3 voxel_to_world(const Vec3& ijk) const {
        return {origin[0] + ijk.x * spacing[0], origin[1] + ijk.y * spacing[1],
                origin[2] + ijk.z * spacing[2]};
    }
    Vec3 voxel_to_world(int i, int j, int k) const {
        return voxel_to_world(Vec3(i, j, k));
    }
    Vec3 world_to_voxel(const WorldPoint& p) const {
        return {(p.x - origin[0]) / spacing[0], (p.y - origin[1]) / spacing[1],
                (p.z - origin[2]) / spacing[2]};
    }

    // True when p lies inside the box spanned by the voxel centres.
    bool contains_world(const WorldPoint& p) const;

    // Throws InvalidArgument unless dims > 0 and spacing is finite and > 0.
    void validate() const;

    bool operator==(const Geometry&) const = default;
};

enum class ScalarType { U8, I16, U16, F32 };

std::string scalar_type_name(ScalarType t);
ScalarType scalar_type_from_name(const std::string& name);

// Scalar 3D image. Immutable after construction.
class Volume3D {
public:
    Volume3D() = default;
    // Throws InvalidArgument on a size mismatch or non-finite sample.
    Volume3D(Geometry geometry, std::vector<float> data);

    const Geometry& geometry() const { return geometry_; }
    const std::array<int, 3>& dims() const { return geometry_.dims; }
    std::span<const float> data() const { return data_; }

    float at(int i, int j, int k) const { return data_[geometry_.index(i, j, k)]; }

    std::pair<float, float> intensity_range() const;

    bool operator==(const Volume3D&) const = default;

private:
    Geometry geometry_;
    std::vector<float> data_;
};

// Binary mask on a voxel grid; one byte per voxel holding 0 or 1.
class Mask3D {
public:
    Mask3D() = default;
    explicit Mask3D(Geometry geometry);
    Mask3D(Geometry geometry, std::vector<std::uint8_t> data);

    const Geometry& geometry() const { return geometry_; }
    const std::array<int, 3>& dims() const { return geometry_.dims; }
    std::span<const std::uint8_t> data() const { return data_; }

    bool at(int i, int j, int k) const { return data_[geometry_.index(i, j, k)] != 0; }
    void set(int i, int j, int k, bool value = true) {
        data_[geometry_.index(i, j, k)] = value ? 1 : 0;
    }
    bool at(std::size_t linear) const { return data_[linear] != 0; }
    void set(std::size_t linear, bool value = true) { data_[linear] = value ? 1 : 0; }

    std::size_t count() const;

    bool operator==(const Mask3D&) const = default;

private:
    Geometry geometry_;
    std::vector<std::uint8_t> data_;
};

// Throws GeometryMismatch when the two grids differ.
void require_same_geometry(const Geometry& a, const Geometry& b, const std::string& what);

struct Sample {
    double value = 0.0;
    bool in_bounds = false;
};

// Trilinear interpolation between the eight surrounding voxel centres.
// Points outside the voxel-centre bounding box yield `outside_value` and
// in_bounds = false.
Sample sample_trilinear(const Volume3D& vol, const WorldPoint& p, double outside_value = 0.0);

// Same interpolation after clamping p into the voxel-centre bounding box.
double sample_clamped(const Volume3D& vol, const WorldPoint& p);

enum class Axis { Axial, Coronal, Sagittal };

Axis axis_from_name(const std::string& name);
std::string axis_name(Axis axis);

struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels; // row-major, `width` pixels per row

    std::uint8_t at(int x, int y) const {
        return pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(x)];
    }
};

// Window/level mapping of one value onto 0..255, rounding half up.
std::uint8_t window_level(double value, double center, double width);

// Axial slices span (x, y), coronal (x, z), sagittal (y, z). The first
// listed axis runs along image columns.
GrayImage extract_slice(const Volume3D& vol, Axis axis, int index, double center, double width);

// Mask plane with the same axis conventions as extract_slice (0 or 1 per pixel).
GrayImage extract_mask_slice(const Mask3D& mask, Axis axis, int index);

// File I/O. The format is chosen by content on load ("n+1" NIfTI-1 magic
// or an RVOL JSON header) and by extension on save (".nii" => NIfTI-1,
// anything else => RVOL).
Volume3D load_volume(const std::filesystem::path& path);
Mask3D load_mask(const std::filesystem::path& path);
void save_volume(const Volume3D& vol, const std::filesystem::path& path,
                 ScalarType type = ScalarType::F32);
void save_mask(const Mask3D& mask, const std::filesystem::path& path);

// Decoded file header plus the undecoded little-endian payload.
struct RawImage {
    Geometry geometry;
    ScalarType type = ScalarType::F32;
    double slope = 1.0;
    double intercept = 0.0;
    std::vector<std::byte> payload;
};

namespace detail {
RawImage read_nifti(const std::filesystem::path& path);
void write_nifti(const std::filesystem::path& path, const Geometry& g, ScalarType type,
                 std::span<const std::byte> payload);
RawImage read_rvol(const std::filesystem::path& path);
void write_rvol(const std::filesystem::path& path, const Geometry& g, ScalarType type,
                std::span<const std::byte> payload);
bool has_nifti_extension(const std::filesystem::path& path);
std::size_t scalar_size(ScalarType t);
} // namespace detail

} // namespace spheregc
