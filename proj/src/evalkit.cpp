#include "spheregc/evalkit.hpp"

#include "spheregc/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace spheregc {

double dice(const Mask3D& a, const Mask3D& r) {
    require_same_geometry(a.geometry(), r.geometry(), "dice");
    const auto da = a.data();
    const auto dr = r.data();
    std::size_t na = 0;
    std::size_t nr = 0;
    std::size_t both = 0;
    for (std::size_t i = 0; i < da.size(); ++i) {
        na += da[i];
        nr += dr[i];
        both += static_cast<std::size_t>(da[i] & dr[i]);
    }
    if (na + nr == 0) {
        throw InvalidArgument("dice is undefined for two empty masks");
    }
    const double voxel = a.geometry().voxel_volume_mm3();
    const double va = static_cast<double>(na) * voxel;
    const double vr = static_cast<double>(nr) * voxel;
    const double vboth = static_cast<double>(both) * voxel;
    return 2.0 * vboth / (va + vr);
}

double mask_volume_cm3(const Mask3D& m) {
    return static_cast<double>(m.count()) * m.geometry().voxel_volume_mm3() / 1000.0;
}

std::uint64_t CounterRng::bits(std::uint64_t counter) const {
    // SplitMix64 finaliser over a seed-dependent counter stream.
    std::uint64_t z = seed_ * 0xD1B54A32D192ED03ULL + counter * 0x9E3779B97F4A7C15ULL + 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double CounterRng::uniform(std::uint64_t counter) const {
    // 53 random bits, offset by half an ulp so 0 is never returned.
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::gaussian(std::uint64_t index) const {
    const double u1 = uniform(2 * index);
    const double u2 = uniform(2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

PhantomShape phantom_shape_from_name(const std::string& name) {
    if (name == "sphere") return PhantomShape::Sphere;
    if (name == "ellipsoid") return PhantomShape::Ellipsoid;
    throw InvalidArgument("unknown phantom shape '" + name + "' (expected sphere or ellipsoid)");
}

WorldPoint grid_center(const Geometry& g) {
    return g.voxel_to_world(Vec3((g.dims[0] - 1) / 2.0, (g.dims[1] - 1) / 2.0, (g.dims[2] - 1) / 2.0));
}

Phantom make_phantom(const PhantomSpec& spec) {
    Geometry g;
    g.dims = spec.dims;
    g.spacing = spec.spacing;
    g.origin = spec.origin;
    g.validate();

    std::array<double, 3> axes = spec.semi_axes_mm;
    if (spec.shape == PhantomShape::Sphere) {
        axes = {axes[0], axes[0], axes[0]};
    }
    for (double a : axes) {
        if (!(a > 0.0) || !std::isfinite(a)) {
            throw InvalidArgument("phantom semi-axes must be positive");
        }
    }
    if (!(spec.noise_sigma >= 0.0)) {
        throw InvalidArgument("noise sigma must be non-negative");
    }

    const WorldPoint center = spec.center.value_or(grid_center(g));
    for (int a = 0; a < 3; ++a) {
        const double lo = g.origin[a];
        const double hi = g.origin[a] + (g.dims[a] - 1) * g.spacing[a];
        if (center[a] - axes[a] < lo || center[a] + axes[a] > hi) {
            throw InvalidArgument("phantom object does not fit inside the grid");
        }
    }

    const CounterRng rng(spec.rng_seed);
    std::vector<float> data(g.voxel_count());
    std::vector<std::uint8_t> truth(g.voxel_count(), 0);
    std::size_t idx = 0;
    for (int k = 0; k < g.dims[2]; ++k) {
        for (int j = 0; j < g.dims[1]; ++j) {
            for (int i = 0; i < g.dims[0]; ++i, ++idx) {
                const Vec3 d = g.voxel_to_world(i, j, k) - center;
                const double q = (d.x / axes[0]) * (d.x / axes[0]) + (d.y / axes[1]) * (d.y / axes[1]) +
                                 (d.z / axes[2]) * (d.z / axes[2]);
                const bool inside = q <= 1.0;
                truth[idx] = inside ? 1 : 0;
                double value = inside ? spec.object_intensity : spec.background_intensity;
                if (spec.noise_sigma > 0.0) {
                    value += spec.noise_sigma * rng.gaussian(idx);
                }
                data[idx] = static_cast<float>(value);
            }
        }
    }
    return {Volume3D(g, std::move(data)), Mask3D(g, std::move(truth)), center};
}

EvalCase evaluate_case(const std::string& id, const Mask3D& automatic, const Mask3D& reference,
                       std::optional<double> manual_time_min) {
    EvalCase c;
    c.id = id;
    c.dsc = dice(automatic, reference);
    c.vol_auto_cm3 = mask_volume_cm3(automatic);
    c.vol_ref_cm3 = mask_volume_cm3(reference);
    c.voxels_auto = automatic.count();
    c.voxels_ref = reference.count();
    c.manual_time_min = manual_time_min;
    return c;
}

MetricSummary summarize_values(const std::vector<double>& values) {
    if (values.empty()) {
        throw InvalidArgument("cannot summarise an empty list");
    }
    MetricSummary s;
    s.min = *std::min_element(values.begin(), values.end());
    s.max = *std::max_element(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    s.mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) {
        ss += (v - s.mean) * (v - s.mean);
    }
    s.stddev = std::sqrt(ss / static_cast<double>(values.size()));
    // Guard against the mean drifting outside [min, max] by rounding.
    s.mean = std::clamp(s.mean, s.min, s.max);
    return s;
}

SummaryReport summarize(const std::vector<EvalCase>& cases) {
    if (cases.empty()) {
        throw InvalidArgument("summarize needs at least one case");
    }
    auto column = [&](auto&& get) {
        std::vector<double> v;
        v.reserve(cases.size());
        for (const EvalCase& c : cases) {
            v.push_back(static_cast<double>(get(c)));
        }
        return summarize_values(v);
    };
    SummaryReport r;
    r.case_count = cases.size();
    r.vol_ref_cm3 = column([](const EvalCase& c) { return c.vol_ref_cm3; });
    r.vol_auto_cm3 = column([](const EvalCase& c) { return c.vol_auto_cm3; });
    r.voxels_ref = column([](const EvalCase& c) { return c.voxels_ref; });
    r.voxels_auto = column([](const EvalCase& c) { return c.voxels_auto; });
    r.dsc_percent = column([](const EvalCase& c) { return 100.0 * c.dsc; });

    std::vector<double> times;
    for (const EvalCase& c : cases) {
        if (c.manual_time_min) {
            times.push_back(*c.manual_time_min);
        }
    }
    if (!times.empty()) {
        r.manual_time_min = summarize_values(times);
    }
    return r;
}

namespace {

std::string fixed(double v, int decimals) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(decimals) << v;
    return os.str();
}

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

} // namespace

std::string render_table(const SummaryReport& report) {
    struct Column {
        std::string group;
        std::string name;
        MetricSummary summary;
        int extreme_decimals; // min / max rows
        int decimals;         // mean and sigma
    };
    std::vector<Column> cols = {
        {"Volume (cm^3)", "manual", report.vol_ref_cm3, 2, 2},
        {"Volume (cm^3)", "algorithm", report.vol_auto_cm3, 2, 2},
        {"Number of voxels", "manual", report.voxels_ref, 0, 1},
        {"Number of voxels", "algorithm", report.voxels_auto, 0, 1},
        {"DSC (%)", "", report.dsc_percent, 2, 2},
    };
    if (report.manual_time_min) {
        cols.push_back({"Manual time (min)", "", *report.manual_time_min, 2, 2});
    }

    const std::vector<std::string> row_names = {"min", "max", "mu +- sigma"};
    std::vector<std::vector<std::string>> cells(row_names.size());
    for (const Column& c : cols) {
        const MetricSummary& s = c.summary;
        cells[0].push_back(fixed(s.min, c.extreme_decimals));
        cells[1].push_back(fixed(s.max, c.extreme_decimals));
        cells[2].push_back(fixed(s.mean, c.decimals) + " +- " + fixed(s.stddev, c.decimals));
    }

    std::vector<std::size_t> width(cols.size());
    for (std::size_t i = 0; i < cols.size(); ++i) {
        width[i] = std::max(cols[i].name.size(), std::size_t{9});
        for (const auto& row : cells) {
            width[i] = std::max(width[i], row[i].size());
        }
    }
    // Let each group heading span its columns.
    for (std::size_t i = 0; i < cols.size();) {
        std::size_t j = i;
        std::size_t span = 0;
        while (j < cols.size() && cols[j].group == cols[i].group) {
            span += width[j] + (j > i ? 2 : 0);
            ++j;
        }
        if (cols[i].group.size() > span) {
            width[j - 1] += cols[i].group.size() - span;
        }
        i = j;
    }

    const std::size_t label_width = 12;
    std::ostringstream os;
    os << "Summary over " << report.case_count << " case" << (report.case_count == 1 ? "" : "s") << "\n";
    os << std::string(label_width, ' ');
    for (std::size_t i = 0; i < cols.size();) {
        std::size_t j = i;
        std::size_t span = 0;
        while (j < cols.size() && cols[j].group == cols[i].group) {
            span += width[j] + 2;
            ++j;
        }
        os << pad(cols[i].group, span);
        i = j;
    }
    os << "\n" << std::string(label_width, ' ');
    for (std::size_t i = 0; i < cols.size(); ++i) {
        os << pad(cols[i].name, width[i] + 2);
    }
    os << "\n";
    for (std::size_t r = 0; r < row_names.size(); ++r) {
        std::string label = row_names[r];
        label.resize(label_width, ' ');
        os << label;
        for (std::size_t i = 0; i < cols.size(); ++i) {
            os << pad(cells[r][i], width[i] + 2);
        }
        os << "\n";
    }
    return os.str();
}

std::string cases_to_json(const std::vector<EvalCase>& cases) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const EvalCase& c : cases) {
        nlohmann::ordered_json j;
        j["id"] = c.id;
        j["dsc"] = c.dsc;
        j["vol_auto_cm3"] = c.vol_auto_cm3;
        j["vol_ref_cm3"] = c.vol_ref_cm3;
        j["voxels_auto"] = c.voxels_auto;
        j["voxels_ref"] = c.voxels_ref;
        if (c.manual_time_min) {
            j["manual_time_min"] = *c.manual_time_min;
        }
        arr.push_back(std::move(j));
    }
    return arr.dump(2);
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open manifest '" + path.string() + "'");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("manifest '" + path.string() + "' is not valid JSON: " + e.what());
    }
    if (!j.is_array()) {
        throw FormatError("manifest '" + path.string() + "' must be a JSON list");
    }
    const auto base = path.parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : base / fp;
    };
    std::vector<ManifestEntry> entries;
    for (const auto& item : j) {
        try {
            ManifestEntry e;
            e.id = item.at("id").get<std::string>();
            e.automatic = resolve(item.at("auto").get<std::string>());
            e.reference = resolve(item.at("ref").get<std::string>());
            if (item.contains("manual_time_min")) {
                e.manual_time_min = item.at("manual_time_min").get<double>();
            }
            entries.push_back(std::move(e));
        } catch (const nlohmann::json::exception& ex) {
            throw FormatError("manifest entry is missing id/auto/ref: " + std::string(ex.what()));
        }
    }
    return entries;
}

} // namespace spheregc
