#include "doctest.h"
#include "support.hpp"

#include "spheregc/error.hpp"
#include "spheregc/evalkit.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <regex>
#include <sstream>

using namespace spheregc;

namespace {

Geometry grid(int nx, int ny, int nz, std::array<double, 3> spacing = {1, 1, 1}) {
    Geometry g;
    g.dims = {nx, ny, nz};
    g.spacing = spacing;
    return g;
}

Mask3D random_mask(std::mt19937& rng, const Geometry& g, double p) {
    Mask3D m(g);
    std::bernoulli_distribution on(p);
    for (std::size_t n = 0; n < g.voxel_count(); ++n) {
        m.set(n, on(rng));
    }
    return m;
}

struct Stats {
    double min, max, mean, sd;
};

// Two-pass population statistics.
Stats reference_stats(const std::vector<double>& v) {
    Stats s{v[0], v[0], 0.0, 0.0};
    for (double x : v) {
        s.min = std::min(s.min, x);
        s.max = std::max(s.max, x);
        s.mean += x;
    }
    s.mean /= static_cast<double>(v.size());
    for (double x : v) {
        s.sd += (x - s.mean) * (x - s.mean);
    }
    s.sd = std::sqrt(s.sd / static_cast<double>(v.size()));
    return s;
}

std::vector<std::string> table_cells(const std::string& line) {
    std::vector<std::string> out;
    const std::regex sep(" {2,}");
    std::sregex_token_iterator it(line.begin(), line.end(), sep, -1), end;
    for (; it != end; ++it) {
        if (!it->str().empty()) {
            out.push_back(it->str());
        }
    }
    return out;
}

} // namespace

TEST_CASE("dice") {
    const Geometry g = grid(4, 4, 4);
    Mask3D a(g), r(g);
    a.set(0, 0, 0);
    a.set(1, 0, 0);
    r.set(0, 0, 0);
    r.set(1, 0, 0);
    r.set(2, 0, 0);
    CHECK(dice(a, r) == 0.8);
    CHECK(dice(r, a) == 0.8);
    CHECK(dice(r, r) == 1.0);
    Mask3D d(g);
    d.set(3, 3, 3);
    CHECK(dice(a, d) == 0.0);
    CHECK_THROWS_AS(dice(Mask3D(g), Mask3D(g)), InvalidArgument);
    CHECK_THROWS_AS(dice(a, Mask3D(grid(4, 4, 5))), GeometryMismatch);
    CHECK_THROWS_AS(dice(a, Mask3D(grid(4, 4, 4, {1, 1, 2}))), GeometryMismatch);

    std::mt19937 rng(50);
    for (int t = 0; t < 50; ++t) {
        const Geometry gg = grid(7, 6, 5, {0.5 + t * 0.01, 1.0, 1.3});
        const Mask3D x = random_mask(rng, gg, 0.3);
        const Mask3D y = random_mask(rng, gg, 0.5);
        const double dxy = dice(x, y);
        CHECK(dxy == dice(y, x));
        CHECK(dxy >= 0.0);
        CHECK(dxy <= 1.0);
        std::size_t both = 0;
        for (std::size_t n = 0; n < gg.voxel_count(); ++n) {
            both += (x.at(n) && y.at(n)) ? 1 : 0;
        }
        CHECK(dxy == doctest::Approx(2.0 * both / static_cast<double>(x.count() + y.count())));
        // Voxel volume cancels.
        Geometry scaled = gg;
        scaled.spacing = {3, 3, 3};
        const Mask3D xs(scaled, std::vector<std::uint8_t>(x.data().begin(), x.data().end()));
        const Mask3D ys(scaled, std::vector<std::uint8_t>(y.data().begin(), y.data().end()));
        CHECK(dice(xs, ys) == doctest::Approx(dxy));
    }
}

TEST_CASE("mask volume") {
    Mask3D m(grid(10, 10, 10));
    CHECK(mask_volume_cm3(m) == 0.0);
    for (std::size_t n = 0; n < 1000; ++n) {
        m.set(n);
    }
    CHECK(mask_volume_cm3(m) == 1.0);
    Mask3D h(grid(2, 2, 2, {2, 2, 2}));
    h.set(0, 0, 0);
    CHECK(mask_volume_cm3(h) == 0.008);
}

TEST_CASE("counter-based generator") {
    const CounterRng a(7), b(7), c(8);
    CHECK(a.bits(123) == b.bits(123));
    CHECK(a.bits(123) != c.bits(123));
    CHECK(a.bits(1) != a.bits(2));
    double sum = 0.0, sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = a.uniform(static_cast<std::uint64_t>(i));
        CHECK(u > 0.0);
        CHECK(u < 1.0);
        const double g = a.gaussian(static_cast<std::uint64_t>(i));
        sum += g;
        sq += g * g;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("phantoms") {
    SUBCASE("noise-free sphere") {
        PhantomSpec spec;
        const Phantom p = make_phantom(spec);
        CHECK(p.center == Vec3(63.5, 63.5, 63.5));
        const auto data = p.volume.data();
        for (std::size_t n = 0; n < data.size(); ++n) {
            CHECK(data[n] == (p.truth.at(n) ? 200.0f : 0.0f));
            if (data[n] != (p.truth.at(n) ? 200.0f : 0.0f)) {
                break;
            }
        }
        const double analytic = 4.0 / 3.0 * std::numbers::pi * 20 * 20 * 20 / 1000.0;
        CHECK(std::abs(mask_volume_cm3(p.truth) - analytic) / analytic < 0.02);
    }
    SUBCASE("truth follows the ellipsoid inequality") {
        PhantomSpec spec;
        spec.shape = PhantomShape::Ellipsoid;
        spec.dims = {64, 60, 50};
        spec.semi_axes_mm = {25, 20, 15};
        spec.spacing = {1.0, 1.0, 1.0};
        spec.center = Vec3(31.2, 29.0, 24.7);
        const Phantom p = make_phantom(spec);
        const Geometry& g = p.truth.geometry();
        std::size_t mismatches = 0;
        for (int k = 0; k < 50; ++k) {
            for (int j = 0; j < 60; ++j) {
                for (int i = 0; i < 64; ++i) {
                    const Vec3 d = g.voxel_to_world(i, j, k) - *spec.center;
                    const bool in = d.x * d.x / 625 + d.y * d.y / 400 + d.z * d.z / 225 <= 1.0;
                    mismatches += in != p.truth.at(i, j, k) ? 1 : 0;
                }
            }
        }
        CHECK(mismatches == 0);
        const double analytic = 4.0 / 3.0 * std::numbers::pi * 25 * 20 * 15 / 1000.0;
        CHECK(std::abs(mask_volume_cm3(p.truth) - analytic) / analytic < 0.02);
    }
    SUBCASE("analytic volumes for r >= 10") {
        for (double r : {10.0, 13.0, 17.5}) {
            PhantomSpec spec;
            spec.dims = {48, 48, 48};
            spec.semi_axes_mm = {r, r, r};
            const Phantom p = make_phantom(spec);
            const double analytic = 4.0 / 3.0 * std::numbers::pi * r * r * r / 1000.0;
            CHECK(std::abs(mask_volume_cm3(p.truth) - analytic) / analytic < 0.02);
        }
    }
    SUBCASE("noise is deterministic under the seed") {
        PhantomSpec spec;
        spec.dims = {32, 32, 32};
        spec.semi_axes_mm = {8, 8, 8};
        spec.noise_sigma = 20;
        spec.rng_seed = 12;
        const Phantom a = make_phantom(spec);
        const Phantom b = make_phantom(spec);
        CHECK(a.volume == b.volume);
        spec.rng_seed = 13;
        CHECK_FALSE(make_phantom(spec).volume == a.volume);
        double sum = 0.0, sq = 0.0;
        std::size_t n = 0;
        const auto data = a.volume.data();
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (!a.truth.at(i)) {
                sum += data[i];
                sq += static_cast<double>(data[i]) * data[i];
                ++n;
            }
        }
        CHECK(std::abs(sum / n) < 1.0);
        CHECK(std::abs(std::sqrt(sq / n) - 20.0) < 0.5);
    }
    SUBCASE("errors") {
        PhantomSpec spec;
        spec.dims = {32, 32, 32};
        spec.semi_axes_mm = {20, 20, 20};
        CHECK_THROWS_AS(make_phantom(spec), InvalidArgument);
        spec.semi_axes_mm = {0, 5, 5};
        CHECK_THROWS_AS(make_phantom(spec), InvalidArgument);
        CHECK_THROWS_AS(phantom_shape_from_name("cube"), InvalidArgument);
    }
}

TEST_CASE("summaries") {
    SUBCASE("single case") {
        Mask3D a(grid(10, 10, 10)), r(grid(10, 10, 10));
        for (std::size_t n = 0; n < 300; ++n) {
            a.set(n);
        }
        for (std::size_t n = 100; n < 500; ++n) {
            r.set(n);
        }
        const EvalCase c = evaluate_case("one", a, r);
        CHECK(c.dsc == doctest::Approx(2.0 * 200 / 700));
        CHECK(c.voxels_auto == 300);
        CHECK(c.voxels_ref == 400);
        const SummaryReport s = summarize({c});
        CHECK(s.case_count == 1);
        CHECK(s.dsc_percent.min == s.dsc_percent.max);
        CHECK(s.dsc_percent.mean == s.dsc_percent.min);
        CHECK(s.dsc_percent.stddev == 0.0);
        CHECK_FALSE(s.manual_time_min.has_value());
    }
    SUBCASE("two DSC values") {
        const MetricSummary m = summarize_values({71.07, 84.67});
        CHECK(m.min == 71.07);
        CHECK(m.max == 84.67);
        CHECK(m.mean == doctest::Approx(77.87));
        CHECK(m.stddev == doctest::Approx(6.8));
    }
    SUBCASE("empty input") {
        CHECK_THROWS_AS(summarize({}), InvalidArgument);
        CHECK_THROWS_AS(summarize_values({}), InvalidArgument);
    }
    SUBCASE("ten cases against recomputation") {
        std::vector<EvalCase> cases;
        const double dsc[] = {0.7107, 0.8467, 0.79, 0.755, 0.81, 0.77, 0.73, 0.8, 0.76, 0.78};
        for (int i = 0; i < 10; ++i) {
            EvalCase c;
            c.id = "case" + std::to_string(i);
            c.dsc = dsc[i];
            c.voxels_ref = 40000 + 1731 * static_cast<std::size_t>(i);
            c.voxels_auto = 41000 + 977 * static_cast<std::size_t>((i * 7) % 10);
            c.vol_ref_cm3 = static_cast<double>(c.voxels_ref) * 0.000125;
            c.vol_auto_cm3 = static_cast<double>(c.voxels_auto) * 0.000125;
            c.manual_time_min = 5.0 + i;
            cases.push_back(c);
        }
        const SummaryReport s = summarize(cases);
        std::vector<double> vd, va, vr, na, nr, mt;
        for (const auto& c : cases) {
            vd.push_back(c.dsc * 100.0);
            va.push_back(c.vol_auto_cm3);
            vr.push_back(c.vol_ref_cm3);
            na.push_back(static_cast<double>(c.voxels_auto));
            nr.push_back(static_cast<double>(c.voxels_ref));
            mt.push_back(*c.manual_time_min);
        }
        auto same = [](const MetricSummary& m, const Stats& r) {
            CHECK(m.min == doctest::Approx(r.min));
            CHECK(m.max == doctest::Approx(r.max));
            CHECK(m.mean == doctest::Approx(r.mean));
            CHECK(m.stddev == doctest::Approx(r.sd));
            CHECK(m.min <= m.mean);
            CHECK(m.mean <= m.max);
        };
        same(s.dsc_percent, reference_stats(vd));
        same(s.vol_auto_cm3, reference_stats(va));
        same(s.vol_ref_cm3, reference_stats(vr));
        same(s.voxels_auto, reference_stats(na));
        same(s.voxels_ref, reference_stats(nr));
        REQUIRE(s.manual_time_min.has_value());
        same(*s.manual_time_min, reference_stats(mt));

        const std::string table = render_table(s);
        std::istringstream in(table);
        std::vector<std::string> lines;
        for (std::string l; std::getline(in, l);) {
            lines.push_back(l);
        }
        REQUIRE(lines.size() == 6);
        CHECK(lines[1].find("Volume (cm^3)") != std::string::npos);
        CHECK(lines[1].find("Number of voxels") != std::string::npos);
        CHECK(lines[1].find("DSC (%)") != std::string::npos);
        CHECK(lines[1].find("Manual time (min)") != std::string::npos);
        const auto mins = table_cells(lines[3]);
        const auto maxs = table_cells(lines[4]);
        const auto means = table_cells(lines[5]);
        REQUIRE(mins.size() == 7);
        REQUIRE(means.size() == 7);
        CHECK(mins[0] == "min");
        CHECK(maxs[0] == "max");
        CHECK(means[0] == "mu +- sigma");
        const std::vector<Stats> ref = {reference_stats(vr), reference_stats(va), reference_stats(nr),
                                        reference_stats(na), reference_stats(vd), reference_stats(mt)};
        for (std::size_t col = 0; col < ref.size(); ++col) {
            CHECK(std::stod(mins[col + 1]) == doctest::Approx(ref[col].min).epsilon(0.005));
            CHECK(std::stod(maxs[col + 1]) == doctest::Approx(ref[col].max).epsilon(0.005));
            const auto pm = means[col + 1].find(" +- ");
            REQUIRE(pm != std::string::npos);
            CHECK(std::stod(means[col + 1].substr(0, pm)) == doctest::Approx(ref[col].mean).epsilon(0.005));
            CHECK(std::stod(means[col + 1].substr(pm + 4)) == doctest::Approx(ref[col].sd).epsilon(0.01));
        }
        CHECK(mins[5] == "71.07");
        CHECK(maxs[5] == "84.67");

        const auto j = nlohmann::json::parse(cases_to_json(cases));
        REQUIRE(j.size() == 10);
        CHECK(j[3]["dsc"].get<double>() == 0.755);
        CHECK(j[3]["id"] == "case3");
    }
}

TEST_CASE("manifest") {
    testing::TempDir dir;
    {
        std::ofstream out(dir / "m.json");
        out << R"([{"id":"a","auto":"x/a.nii","ref":"/abs/r.nii","manual_time_min":4.5},{"id":"b","auto":"b","ref":"c"}])";
    }
    const auto entries = read_manifest(dir / "m.json");
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].automatic == dir.path() / "x/a.nii");
    CHECK(entries[0].reference == std::filesystem::path("/abs/r.nii"));
    CHECK(entries[0].manual_time_min == 4.5);
    CHECK_FALSE(entries[1].manual_time_min.has_value());
    {
        std::ofstream out(dir / "bad.json");
        out << R"([{"id":"a"}])";
    }
    CHECK_THROWS_AS(read_manifest(dir / "bad.json"), FormatError);
    CHECK_THROWS_AS(read_manifest(dir / "none.json"), IoError);
}
