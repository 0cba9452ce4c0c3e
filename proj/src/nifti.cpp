// NIfTI-1 (single-file, uncompressed, axis-aligned) and RVOL readers/writers.

#include "spheregc/error.hpp"
#include "spheregc/volume.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>

namespace spheregc::detail {

namespace {

constexpr std::size_t kNiftiHeaderSize = 348;
constexpr std::size_t kNiftiDataOffset = 352;

// Byte offsets of the honoured NIfTI-1 header fields.
constexpr std::size_t kOffSizeofHdr = 0;
constexpr std::size_t kOffDim = 40;
constexpr std::size_t kOffDatatype = 70;
constexpr std::size_t kOffBitpix = 72;
constexpr std::size_t kOffPixdim = 76;
constexpr std::size_t kOffVoxOffset = 108;
constexpr std::size_t kOffSclSlope = 112;
constexpr std::size_t kOffSclInter = 116;
constexpr std::size_t kOffXyztUnits = 123;
constexpr std::size_t kOffQformCode = 252;
constexpr std::size_t kOffSformCode = 254;
constexpr std::size_t kOffQuatern = 256;
constexpr std::size_t kOffQoffset = 268;
constexpr std::size_t kOffSrow = 280;
constexpr std::size_t kOffMagic = 344;

constexpr std::int16_t kDtUint8 = 2;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtFloat32 = 16;
constexpr std::int16_t kDtUint16 = 512;

template <typename T>
T get(const std::array<char, kNiftiHeaderSize>& hdr, std::size_t off) {
    T v;
    std::memcpy(&v, hdr.data() + off, sizeof(T));
    return v;
}

template <typename T>
void put(std::array<char, kNiftiHeaderSize>& hdr, std::size_t off, T v) {
    std::memcpy(hdr.data() + off, &v, sizeof(T));
}

std::int16_t nifti_code(ScalarType t) {
    switch (t) {
    case ScalarType::U8: return kDtUint8;
    case ScalarType::I16: return kDtInt16;
    case ScalarType::U16: return kDtUint16;
    case ScalarType::F32: return kDtFloat32;
    }
    return 0;
}

std::vector<std::byte> read_payload(std::ifstream& in, const std::filesystem::path& path,
                                    std::size_t offset, std::size_t expected) {
    in.seekg(0, std::ios::end);
    const auto file_size = static_cast<std::size_t>(in.tellg());
    if (file_size < offset || file_size - offset < expected) {
        throw FormatError("'" + path.string() + "': payload size mismatch (expected " +
                          std::to_string(expected) + " bytes, found " +
                          std::to_string(file_size > offset ? file_size - offset : 0) + ")");
    }
    std::vector<std::byte> payload(expected);
    in.seekg(static_cast<std::streamoff>(offset));
    in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(expected));
    if (!in) {
        throw IoError("'" + path.string() + "': read failed");
    }
    return payload;
}

void check_dims(const std::array<long long, 3>& dims, const std::filesystem::path& path) {
    for (long long d : dims) {
        if (d <= 0) {
            throw FormatError("'" + path.string() + "': dims must be positive");
        }
        if (d > (1LL << 24)) {
            throw FormatError("'" + path.string() + "': dims too large");
        }
    }
}

} // namespace

std::size_t scalar_size(ScalarType t) {
    switch (t) {
    case ScalarType::U8: return 1;
    case ScalarType::I16:
    case ScalarType::U16: return 2;
    case ScalarType::F32: return 4;
    }
    return 0;
}

bool has_nifti_extension(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    return ext == ".nii";
}

RawImage read_nifti(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    std::array<char, kNiftiHeaderSize> hdr{};
    in.read(hdr.data(), static_cast<std::streamsize>(hdr.size()));
    if (!in) {
        throw FormatError("'" + path.string() + "': file shorter than a NIfTI-1 header");
    }

    const auto sizeof_hdr = get<std::int32_t>(hdr, kOffSizeofHdr);
    if (sizeof_hdr != static_cast<std::int32_t>(kNiftiHeaderSize)) {
        if (sizeof_hdr == 0x5C010000) {
            throw FormatError("'" + path.string() + "': big-endian NIfTI is not supported");
        }
        throw FormatError("'" + path.string() + "': not a NIfTI-1 file (sizeof_hdr)");
    }
    if (std::memcmp(hdr.data() + kOffMagic, "n+1\0", 4) != 0) {
        throw FormatError("'" + path.string() + "': unsupported NIfTI magic (need \"n+1\")");
    }

    const auto ndim = get<std::int16_t>(hdr, kOffDim);
    if (ndim < 1 || ndim > 7) {
        throw FormatError("'" + path.string() + "': invalid dim[0]");
    }
    std::array<long long, 3> dims{1, 1, 1};
    for (int a = 0; a < 3; ++a) {
        if (a < ndim) {
            dims[a] = get<std::int16_t>(hdr, kOffDim + 2 * (a + 1));
        }
    }
    check_dims(dims, path);
    for (int a = 3; a < ndim; ++a) {
        if (get<std::int16_t>(hdr, kOffDim + 2 * (a + 1)) > 1) {
            throw FormatError("'" + path.string() + "': only 3D volumes are supported");
        }
    }

    RawImage raw;
    switch (get<std::int16_t>(hdr, kOffDatatype)) {
    case kDtUint8: raw.type = ScalarType::U8; break;
    case kDtInt16: raw.type = ScalarType::I16; break;
    case kDtUint16: raw.type = ScalarType::U16; break;
    case kDtFloat32: raw.type = ScalarType::F32; break;
    default:
        throw FormatError("'" + path.string() + "': unsupported datatype " +
                          std::to_string(get<std::int16_t>(hdr, kOffDatatype)));
    }

    const auto qform_code = get<std::int16_t>(hdr, kOffQformCode);
    const auto sform_code = get<std::int16_t>(hdr, kOffSformCode);
    const float qfac = get<float>(hdr, kOffPixdim);
    if (qform_code > 0) {
        for (int q = 0; q < 3; ++q) {
            if (get<float>(hdr, kOffQuatern + 4 * q) != 0.0f) {
                throw FormatError("'" + path.string() + "': rotated or sheared qform is not supported");
            }
        }
        if (qfac < 0.0f) {
            throw FormatError("'" + path.string() + "': flipped qform (qfac < 0) is not supported");
        }
    } else if (sform_code > 0) {
        for (int row = 0; row < 3; ++row) {
            for (int col = 0; col < 3; ++col) {
                if (row != col && get<float>(hdr, kOffSrow + 16 * row + 4 * col) != 0.0f) {
                    throw FormatError("'" + path.string() + "': sheared sform is not supported");
                }
            }
        }
    }

    for (int a = 0; a < 3; ++a) {
        raw.geometry.dims[a] = static_cast<int>(dims[a]);
        const double pd = std::abs(get<float>(hdr, kOffPixdim + 4 * (a + 1)));
        raw.geometry.spacing[a] = pd > 0.0 ? pd : 1.0;
        if (qform_code > 0) {
            raw.geometry.origin[a] = get<float>(hdr, kOffQoffset + 4 * a);
        } else if (sform_code > 0) {
            raw.geometry.origin[a] = get<float>(hdr, kOffSrow + 16 * a + 12);
        }
    }

    const float slope = get<float>(hdr, kOffSclSlope);
    const float inter = get<float>(hdr, kOffSclInter);
    if (std::isfinite(slope) && slope != 0.0f) {
        raw.slope = slope;
        raw.intercept = std::isfinite(inter) ? inter : 0.0;
    }

    const float vox_offset = get<float>(hdr, kOffVoxOffset);
    const auto offset = static_cast<std::size_t>(std::max(vox_offset, static_cast<float>(kNiftiHeaderSize)));
    const std::size_t expected = raw.geometry.voxel_count() * scalar_size(raw.type);
    raw.payload = read_payload(in, path, offset, expected);
    return raw;
}

void write_nifti(const std::filesystem::path& path, const Geometry& g, ScalarType type,
                 std::span<const std::byte> payload) {
    std::array<char, kNiftiHeaderSize> hdr{};
    put<std::int32_t>(hdr, kOffSizeofHdr, static_cast<std::int32_t>(kNiftiHeaderSize));
    put<std::int16_t>(hdr, kOffDim, 3);
    for (int a = 0; a < 3; ++a) {
        if (g.dims[a] > 32767) {
            throw InvalidArgument("NIfTI-1 cannot store dims above 32767");
        }
        put<std::int16_t>(hdr, kOffDim + 2 * (a + 1), static_cast<std::int16_t>(g.dims[a]));
    }
    for (int a = 4; a < 8; ++a) {
        put<std::int16_t>(hdr, kOffDim + 2 * a, 1);
    }
    put<std::int16_t>(hdr, kOffDatatype, nifti_code(type));
    put<std::int16_t>(hdr, kOffBitpix, static_cast<std::int16_t>(8 * scalar_size(type)));
    put<float>(hdr, kOffPixdim, 1.0f);
    for (int a = 0; a < 3; ++a) {
        put<float>(hdr, kOffPixdim + 4 * (a + 1), static_cast<float>(g.spacing[a]));
    }
    put<float>(hdr, kOffVoxOffset, static_cast<float>(kNiftiDataOffset));
    put<float>(hdr, kOffSclSlope, 0.0f);
    put<float>(hdr, kOffSclInter, 0.0f);
    hdr[kOffXyztUnits] = 2; // millimetres
    put<std::int16_t>(hdr, kOffQformCode, 1);
    put<std::int16_t>(hdr, kOffSformCode, 0);
    for (int a = 0; a < 3; ++a) {
        put<float>(hdr, kOffQoffset + 4 * a, static_cast<float>(g.origin[a]));
    }
    std::memcpy(hdr.data() + kOffMagic, "n+1\0", 4);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));
    const char extension[4] = {0, 0, 0, 0};
    out.write(extension, 4);
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
    if (!out) {
        throw IoError("write to '" + path.string() + "' failed");
    }
}

RawImage read_rvol(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("'" + path.string() + "': missing RVOL header line");
    }
    const auto header_bytes = line.size() + 1;

    nlohmann::json hdr;
    try {
        hdr = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("'" + path.string() + "': malformed RVOL header: " + e.what());
    }

    RawImage raw;
    try {
        const auto dims = hdr.at("dims").get<std::vector<long long>>();
        const auto spacing = hdr.at("spacing").get<std::vector<double>>();
        const auto origin = hdr.at("origin").get<std::vector<double>>();
        if (dims.size() != 3 || spacing.size() != 3 || origin.size() != 3) {
            throw FormatError("'" + path.string() + "': RVOL dims/spacing/origin need 3 entries");
        }
        check_dims({dims[0], dims[1], dims[2]}, path);
        for (int a = 0; a < 3; ++a) {
            raw.geometry.dims[a] = static_cast<int>(dims[a]);
            raw.geometry.spacing[a] = spacing[a];
            raw.geometry.origin[a] = origin[a];
        }
        raw.type = scalar_type_from_name(hdr.at("dtype").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("'" + path.string() + "': invalid RVOL header: " + e.what());
    }
    try {
        raw.geometry.validate();
    } catch (const InvalidArgument& e) {
        throw FormatError("'" + path.string() + "': " + e.what());
    }

    const std::size_t expected = raw.geometry.voxel_count() * scalar_size(raw.type);
    raw.payload = read_payload(in, path, header_bytes, expected);
    return raw;
}

void write_rvol(const std::filesystem::path& path, const Geometry& g, ScalarType type,
                std::span<const std::byte> payload) {
    nlohmann::ordered_json hdr;
    hdr["dims"] = g.dims;
    hdr["spacing"] = g.spacing;
    hdr["origin"] = g.origin;
    hdr["dtype"] = scalar_type_name(type);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    const std::string line = hdr.dump() + "\n";
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
    if (!out) {
        throw IoError("write to '" + path.string() + "' failed");
    }
}

} // namespace spheregc::detail
