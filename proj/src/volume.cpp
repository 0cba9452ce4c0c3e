#include "spheregc/volume.hpp"

#include "spheregc/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace spheregc {

static_assert(std::endian::native == std::endian::little,
              "volume payloads are decoded in place as little-endian");

bool Geometry::contains_world(const WorldPoint& p) const {
    const Vec3 c = world_to_voxel(p);
    for (int a = 0; a < 3; ++a) {
        if (!(c[a] >= 0.0 && c[a] <= static_cast<double>(dims[a] - 1))) {
            return false;
        }
    }
    return true;
}

void Geometry::validate() const {
    for (int a = 0; a < 3; ++a) {
        if (dims[a] <= 0) {
            throw InvalidArgument("dims must be positive");
        }
        if (!(std::isfinite(spacing[a]) && spacing[a] > 0.0)) {
            throw InvalidArgument("spacing must be finite and positive");
        }
        if (!std::isfinite(origin[a])) {
            throw InvalidArgument("origin must be finite");
        }
    }
}

std::string scalar_type_name(ScalarType t) {
    switch (t) {
    case ScalarType::U8: return "u8";
    case ScalarType::I16: return "i16";
    case ScalarType::U16: return "u16";
    case ScalarType::F32: return "f32";
    }
    return "?";
}

ScalarType scalar_type_from_name(const std::string& name) {
    if (name == "u8") return ScalarType::U8;
    if (name == "i16") return ScalarType::I16;
    if (name == "u16") return ScalarType::U16;
    if (name == "f32") return ScalarType::F32;
    throw FormatError("unsupported datatype '" + name + "'");
}

Volume3D::Volume3D(Geometry geometry, std::vector<float> data)
    : geometry_(geometry), data_(std::move(data)) {
    geometry_.validate();
    if (data_.size() != geometry_.voxel_count()) {
        throw InvalidArgument("volume data length does not match dims");
    }
    for (float v : data_) {
        if (!std::isfinite(v)) {
            throw InvalidArgument("volume contains a non-finite sample");
        }
    }
}

std::pair<float, float> Volume3D::intensity_range() const {
    if (data_.empty()) {
        return {0.0f, 0.0f};
    }
    const auto [lo, hi] = std::minmax_element(data_.begin(), data_.end());
    return {*lo, *hi};
}

Mask3D::Mask3D(Geometry geometry) : geometry_(geometry) {
    geometry_.validate();
    data_.assign(geometry_.voxel_count(), 0);
}

Mask3D::Mask3D(Geometry geometry, std::vector<std::uint8_t> data)
    : geometry_(geometry), data_(std::move(data)) {
    geometry_.validate();
    if (data_.size() != geometry_.voxel_count()) {
        throw InvalidArgument("mask data length does not match dims");
    }
    for (auto& v : data_) {
        v = v != 0 ? 1 : 0;
    }
}

std::size_t Mask3D::count() const {
    return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

void require_same_geometry(const Geometry& a, const Geometry& b, const std::string& what) {
    if (a.dims != b.dims) {
        std::ostringstream os;
        os << what << ": dims differ (" << a.dims[0] << "x" << a.dims[1] << "x" << a.dims[2]
           << " vs " << b.dims[0] << "x" << b.dims[1] << "x" << b.dims[2] << ")";
        throw GeometryMismatch(os.str());
    }
    for (int i = 0; i < 3; ++i) {
        const double tol = 1e-6 * std::max(1.0, std::abs(a.spacing[i]));
        if (std::abs(a.spacing[i] - b.spacing[i]) > tol) {
            throw GeometryMismatch(what + ": spacing differs");
        }
        if (std::abs(a.origin[i] - b.origin[i]) > 1e-4) {
            throw GeometryMismatch(what + ": origin differs");
        }
    }
}

namespace {

// Interpolates at continuous voxel coordinates already known to be inside
// the voxel-centre box.
double trilinear_at(const Volume3D& vol, const Vec3& c) {
    const auto& dims = vol.dims();
    int i0[3];
    double f[3];
    for (int a = 0; a < 3; ++a) {
        if (dims[a] == 1) {
            i0[a] = 0;
            f[a] = 0.0;
            continue;
        }
        int lo = static_cast<int>(std::floor(c[a]));
        lo = std::clamp(lo, 0, dims[a] - 2);
        i0[a] = lo;
        f[a] = c[a] - lo;
    }
    const int i1[3] = {std::min(i0[0] + 1, dims[0] - 1), std::min(i0[1] + 1, dims[1] - 1),
                       std::min(i0[2] + 1, dims[2] - 1)};

    const double c000 = vol.at(i0[0], i0[1], i0[2]);
    const double c100 = vol.at(i1[0], i0[1], i0[2]);
    const double c010 = vol.at(i0[0], i1[1], i0[2]);
    const double c110 = vol.at(i1[0], i1[1], i0[2]);
    const double c001 = vol.at(i0[0], i0[1], i1[2]);
    const double c101 = vol.at(i1[0], i0[1], i1[2]);
    const double c011 = vol.at(i0[0], i1[1], i1[2]);
    const double c111 = vol.at(i1[0], i1[1], i1[2]);

    const double c00 = c000 + (c100 - c000) * f[0];
    const double c10 = c010 + (c110 - c010) * f[0];
    const double c01 = c001 + (c101 - c001) * f[0];
    const double c11 = c011 + (c111 - c011) * f[0];
    const double c0 = c00 + (c10 - c00) * f[1];
    const double c1 = c01 + (c11 - c01) * f[1];
    return c0 + (c1 - c0) * f[2];
}

} // namespace

Sample sample_trilinear(const Volume3D& vol, const WorldPoint& p, double outside_value) {
    if (!vol.geometry().contains_world(p)) {
        return {outside_value, false};
    }
    return {trilinear_at(vol, vol.geometry().world_to_voxel(p)), true};
}

double sample_clamped(const Volume3D& vol, const WorldPoint& p) {
    Vec3 c = vol.geometry().world_to_voxel(p);
    const auto& dims = vol.dims();
    c = {std::clamp(c.x, 0.0, static_cast<double>(dims[0] - 1)),
         std::clamp(c.y, 0.0, static_cast<double>(dims[1] - 1)),
         std::clamp(c.z, 0.0, static_cast<double>(dims[2] - 1))};
    return trilinear_at(vol, c);
}

Axis axis_from_name(const std::string& name) {
    if (name == "axial") return Axis::Axial;
    if (name == "coronal") return Axis::Coronal;
    if (name == "sagittal") return Axis::Sagittal;
    throw InvalidArgument("unknown axis '" + name + "' (expected axial, coronal or sagittal)");
}

std::string axis_name(Axis axis) {
    switch (axis) {
    case Axis::Axial: return "axial";
    case Axis::Coronal: return "coronal";
    case Axis::Sagittal: return "sagittal";
    }
    return "?";
}

std::uint8_t window_level(double value, double center, double width) {
    const double lo = center - width / 2.0;
    const double scaled = (value - lo) / width * 255.0;
    const double rounded = std::floor(scaled + 0.5);
    return static_cast<std::uint8_t>(std::clamp(rounded, 0.0, 255.0));
}

namespace {

struct PlaneLayout {
    int width;
    int height;
    int fixed_axis;
    int col_axis;
    int row_axis;
};

PlaneLayout plane_layout(const std::array<int, 3>& dims, Axis axis) {
    switch (axis) {
    case Axis::Axial: return {dims[0], dims[1], 2, 0, 1};
    case Axis::Coronal: return {dims[0], dims[2], 1, 0, 2};
    case Axis::Sagittal: return {dims[1], dims[2], 0, 1, 2};
    }
    return {0, 0, 0, 0, 0};
}

template <typename Fn>
GrayImage render_plane(const std::array<int, 3>& dims, Axis axis, int index, Fn&& pixel) {
    const PlaneLayout layout = plane_layout(dims, axis);
    if (index < 0 || index >= dims[layout.fixed_axis]) {
        throw InvalidArgument("slice index " + std::to_string(index) + " out of range for " +
                              axis_name(axis) + " axis (extent " +
                              std::to_string(dims[layout.fixed_axis]) + ")");
    }
    GrayImage img;
    img.width = layout.width;
    img.height = layout.height;
    img.pixels.resize(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
    int ijk[3];
    ijk[layout.fixed_axis] = index;
    std::size_t out = 0;
    for (int row = 0; row < layout.height; ++row) {
        ijk[layout.row_axis] = row;
        for (int col = 0; col < layout.width; ++col) {
            ijk[layout.col_axis] = col;
            img.pixels[out++] = pixel(ijk[0], ijk[1], ijk[2]);
        }
    }
    return img;
}

} // namespace

GrayImage extract_slice(const Volume3D& vol, Axis axis, int index, double center, double width) {
    if (!(width > 0.0)) {
        throw InvalidArgument("window width must be positive");
    }
    return render_plane(vol.dims(), axis, index, [&](int i, int j, int k) {
        return window_level(vol.at(i, j, k), center, width);
    });
}

GrayImage extract_mask_slice(const Mask3D& mask, Axis axis, int index) {
    return render_plane(mask.dims(), axis, index, [&](int i, int j, int k) {
        return static_cast<std::uint8_t>(mask.at(i, j, k) ? 1 : 0);
    });
}

namespace {

bool looks_like_rvol(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    char first = 0;
    in.get(first);
    return in && first == '{';
}

RawImage read_any(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw IoError("cannot open '" + path.string() + "': no such file");
    }
    return looks_like_rvol(path) ? detail::read_rvol(path) : detail::read_nifti(path);
}

template <typename T>
T load_le(const std::byte* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}

template <typename Out, typename Fn>
std::vector<Out> decode(const RawImage& raw, Fn&& convert) {
    const std::size_t n = raw.geometry.voxel_count();
    const std::size_t width = detail::scalar_size(raw.type);
    std::vector<Out> out(n);
    const std::byte* p = raw.payload.data();
    for (std::size_t i = 0; i < n; ++i, p += width) {
        double v = 0.0;
        switch (raw.type) {
        case ScalarType::U8: v = static_cast<double>(load_le<std::uint8_t>(p)); break;
        case ScalarType::I16: v = static_cast<double>(load_le<std::int16_t>(p)); break;
        case ScalarType::U16: v = static_cast<double>(load_le<std::uint16_t>(p)); break;
        case ScalarType::F32: v = static_cast<double>(load_le<float>(p)); break;
        }
        out[i] = convert(v);
    }
    return out;
}

void write_any(const std::filesystem::path& path, const Geometry& g, ScalarType type,
               std::span<const std::byte> payload) {
    if (detail::has_nifti_extension(path)) {
        detail::write_nifti(path, g, type, payload);
    } else {
        detail::write_rvol(path, g, type, payload);
    }
}

} // namespace

Volume3D load_volume(const std::filesystem::path& path) {
    const RawImage raw = read_any(path);
    const bool scaled = raw.slope != 0.0 && !(raw.slope == 1.0 && raw.intercept == 0.0);
    std::vector<float> data;
    if (scaled) {
        data = decode<float>(raw, [&](double v) {
            return static_cast<float>(v * raw.slope + raw.intercept);
        });
    } else {
        data = decode<float>(raw, [](double v) { return static_cast<float>(v); });
    }
    for (float v : data) {
        if (!std::isfinite(v)) {
            throw FormatError("'" + path.string() + "' contains a non-finite sample");
        }
    }
    return Volume3D(raw.geometry, std::move(data));
}

Mask3D load_mask(const std::filesystem::path& path) {
    const RawImage raw = read_any(path);
    auto data = decode<std::uint8_t>(raw, [](double v) {
        return static_cast<std::uint8_t>(v != 0.0 ? 1 : 0);
    });
    return Mask3D(raw.geometry, std::move(data));
}

void save_volume(const Volume3D& vol, const std::filesystem::path& path, ScalarType type) {
    const auto values = vol.data();
    const std::size_t width = detail::scalar_size(type);
    std::vector<std::byte> payload(values.size() * width);
    std::byte* p = payload.data();
    for (float v : values) {
        switch (type) {
        case ScalarType::U8: {
            const auto q = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            std::memcpy(p, &q, sizeof q);
            break;
        }
        case ScalarType::I16: {
            const auto q = static_cast<std::int16_t>(std::clamp(std::lround(v), -32768L, 32767L));
            std::memcpy(p, &q, sizeof q);
            break;
        }
        case ScalarType::U16: {
            const auto q = static_cast<std::uint16_t>(std::clamp(std::lround(v), 0L, 65535L));
            std::memcpy(p, &q, sizeof q);
            break;
        }
        case ScalarType::F32: std::memcpy(p, &v, sizeof v); break;
        }
        p += width;
    }
    write_any(path, vol.geometry(), type, payload);
}

void save_mask(const Mask3D& mask, const std::filesystem::path& path) {
    const auto data = mask.data();
    write_any(path, mask.geometry(), ScalarType::U8, std::as_bytes(data));
}

} // namespace spheregc
