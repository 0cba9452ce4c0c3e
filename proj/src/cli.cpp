#include "spheregc/cli.hpp"

#include "spheregc/error.hpp"
#include "spheregc/evalkit.hpp"
#include "spheregc/maxflow.hpp"
#include "spheregc/segmenter.hpp"
#include "spheregc/service.hpp"
#include "spheregc/spheremesh.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

namespace spheregc {

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_interrupt(int) { g_interrupted = true; }

template <typename T>
std::array<T, 3> parse_triple(const std::string& text, const std::string& flag) {
    std::array<T, 3> out{};
    std::stringstream ss(text);
    std::string part;
    std::size_t n = 0;
    while (std::getline(ss, part, ',')) {
        if (n == 3) {
            throw InvalidArgument(flag + " expects three comma-separated values");
        }
        std::size_t used = 0;
        try {
            if constexpr (std::is_integral_v<T>) {
                out[n] = static_cast<T>(std::stoll(part, &used));
            } else {
                out[n] = static_cast<T>(std::stod(part, &used));
            }
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != part.size()) {
            throw InvalidArgument(flag + ": '" + part + "' is not a number");
        }
        ++n;
    }
    if (n != 3) {
        throw InvalidArgument(flag + " expects three comma-separated values");
    }
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    f << text;
    if (!f) {
        throw IoError("failed writing '" + path.string() + "'");
    }
}

struct SegmentFlags {
    std::string input;
    std::string seed;
    std::string seed_voxel;
    std::string output;
    std::string report;
    SegmentationParams params;
    std::string cost_model = "region";
    std::string oob_policy = "zero-intensity";
};

int cmd_segment(const SegmentFlags& f, std::ostream& out, std::ostream& err) {
    SegmentationParams params = f.params;
    params.cost_model = cost_model_from_name(f.cost_model);
    params.oob_policy = oob_policy_from_name(f.oob_policy);
    params.validate();
    if (f.seed.empty() == f.seed_voxel.empty()) {
        throw InvalidArgument("exactly one of --seed and --seed-voxel is required");
    }
    std::array<double, 3> seed_mm{};
    std::array<long long, 3> seed_ijk{};
    if (!f.seed.empty()) {
        seed_mm = parse_triple<double>(f.seed, "--seed");
    } else {
        seed_ijk = parse_triple<long long>(f.seed_voxel, "--seed-voxel");
    }

    const Volume3D vol = load_volume(f.input);
    WorldPoint seed{seed_mm[0], seed_mm[1], seed_mm[2]};
    if (!f.seed_voxel.empty()) {
        const Geometry& g = vol.geometry();
        for (int a = 0; a < 3; ++a) {
            if (seed_ijk[a] < 0 || seed_ijk[a] >= g.dims[a]) {
                throw SeedOutOfBounds("seed voxel (" + f.seed_voxel + ") lies outside the " +
                                      std::to_string(g.dims[0]) + "x" + std::to_string(g.dims[1]) +
                                      "x" + std::to_string(g.dims[2]) + " grid");
            }
        }
        seed = g.voxel_to_world(static_cast<int>(seed_ijk[0]), static_cast<int>(seed_ijk[1]),
                                static_cast<int>(seed_ijk[2]));
    }

    const SegmentationResult result = segment(vol, seed, params);
    for (const std::string& w : result.warnings) {
        err << "warning: " << w << '\n';
    }
    save_mask(result.mask, f.output);
    if (!f.report.empty()) {
        write_text(f.report, report_json(result) + "\n");
    }
    out << std::fixed << std::setprecision(1);
    out << "mask voxels: " << result.mask.count() << '\n';
    out << std::setprecision(3) << "mask volume: " << mask_volume_cm3(result.mask) << " cm^3\n";
    out << std::setprecision(1) << "total time: " << result.timings.total_ms << " ms\n";
    return kExitOk;
}

struct PhantomFlags {
    std::string shape = "sphere";
    std::string semi_axes = "20,20,20";
    std::string dims = "128,128,128";
    std::string spacing = "1,1,1";
    std::string center;
    double object = 200.0;
    double background = 0.0;
    double noise_sigma = 0.0;
    std::uint64_t rng_seed = 1;
    std::string output;
    std::string truth;
};

int cmd_phantom(const PhantomFlags& f, std::ostream& out) {
    PhantomSpec spec;
    spec.shape = phantom_shape_from_name(f.shape);
    spec.semi_axes_mm = parse_triple<double>(f.semi_axes, "--semi-axes");
    const auto dims = parse_triple<long long>(f.dims, "--dims");
    for (int a = 0; a < 3; ++a) {
        if (dims[a] <= 0 || dims[a] > 4096) {
            throw InvalidArgument("--dims entries must lie in 1..4096");
        }
        spec.dims[a] = static_cast<int>(dims[a]);
    }
    spec.spacing = parse_triple<double>(f.spacing, "--spacing");
    if (!f.center.empty()) {
        const auto c = parse_triple<double>(f.center, "--center");
        spec.center = WorldPoint{c[0], c[1], c[2]};
    }
    spec.object_intensity = f.object;
    spec.background_intensity = f.background;
    spec.noise_sigma = f.noise_sigma;
    spec.rng_seed = f.rng_seed;
    if (spec.shape == PhantomShape::Sphere &&
        !(spec.semi_axes_mm[0] == spec.semi_axes_mm[1] && spec.semi_axes_mm[1] == spec.semi_axes_mm[2])) {
        throw InvalidArgument("a sphere needs three equal semi-axes");
    }

    const Phantom p = make_phantom(spec);
    save_volume(p.volume, f.output);
    if (!f.truth.empty()) {
        save_mask(p.truth, f.truth);
    }
    out << std::fixed << std::setprecision(3) << "center: " << p.center.x << ',' << p.center.y << ','
        << p.center.z << '\n';
    out << "truth voxels: " << p.truth.count() << '\n';
    out << "truth volume: " << mask_volume_cm3(p.truth) << " cm^3\n";
    return kExitOk;
}

struct EvalFlags {
    std::string manifest;
    std::string report;
    std::string json;
};

int cmd_eval(const EvalFlags& f, std::ostream& out, std::ostream& err) {
    const auto entries = read_manifest(f.manifest);
    if (entries.empty()) {
        throw InvalidArgument("manifest lists no cases");
    }
    std::vector<EvalCase> cases;
    bool failed = false;
    for (const ManifestEntry& e : entries) {
        try {
            cases.push_back(evaluate_case(e.id, load_mask(e.automatic), load_mask(e.reference),
                                          e.manual_time_min));
        } catch (const GeometryMismatch& ex) {
            err << "case " << e.id << ": " << ex.what() << '\n';
            failed = true;
        } catch (const InvalidArgument& ex) {
            err << "case " << e.id << ": " << ex.what() << '\n';
            failed = true;
        }
    }
    if (failed) {
        return kExitUsage;
    }
    const SummaryReport summary = summarize(cases);
    const std::string table = render_table(summary);
    if (f.report.empty()) {
        out << table;
    } else {
        write_text(f.report, table);
    }
    if (!f.json.empty()) {
        write_text(f.json, cases_to_json(cases) + "\n");
    }
    return kExitOk;
}

struct ServeFlags {
    std::string input;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string static_dir;
};

int cmd_serve(const ServeFlags& f, std::ostream& out, std::ostream& err) {
    ServerOptions options;
    options.input_path = f.input;
    options.static_dir = f.static_dir;
    SegmentationServer server(load_volume(f.input), options);

    g_interrupted = false;
    auto previous_int = std::signal(SIGINT, on_interrupt);
    auto previous_term = std::signal(SIGTERM, on_interrupt);
    std::atomic<bool> done{false};
    std::thread watcher([&] {
        while (!done) {
            if (g_interrupted) {
                server.stop();
                return;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
        }
    });

    out << "serving " << f.input << " on http://" << f.host << ':' << f.port << std::endl;
    const bool ok = server.listen(f.host, f.port);
    done = true;
    watcher.join();
    std::signal(SIGINT, previous_int);
    std::signal(SIGTERM, previous_term);
    if (!ok && !g_interrupted) {
        err << "error: cannot listen on " << f.host << ':' << f.port << '\n';
        return kExitIo;
    }
    out << "shut down" << std::endl;
    return kExitOk;
}

int cmd_mesh(int level, const std::string& output, std::ostream& out) {
    const IcoMesh mesh = mesh_at_level(level);
    if (output.empty()) {
        out << "level " << level << ": " << mesh.vertex_count() << " vertices, " << mesh.face_count()
            << " faces\n";
        return kExitOk;
    }
    std::ofstream f(output);
    if (!f) {
        throw IoError("cannot open '" + output + "' for writing");
    }
    write_obj(mesh, f);
    return kExitOk;
}

int cmd_maxflow(const std::string& path, bool check, std::ostream& out) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path + "' for reading");
    }
    const FlowNetwork net = read_dimacs(in);
    const CutResult cut = max_flow(net);
    out << std::setprecision(17) << "flow: " << cut.flow_value << '\n';
    if (check) {
        const BruteForceCut brute = brute_force_min_cut(net);
        out << "brute force min cut: " << brute.value << '\n';
        if (brute.value != cut.flow_value) {
            out << "mismatch\n";
            return kExitUsage;
        }
    }
    return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Seeded spherical graph-cut segmentation"};
    app.require_subcommand(1);

    SegmentFlags seg;
    auto* segment_cmd = app.add_subcommand("segment", "Segment a volume from one seed point");
    segment_cmd->add_option("--input", seg.input, "Input volume (.nii or RVOL)")->required();
    auto* seed_opt = segment_cmd->add_option("--seed", seg.seed, "Seed in world mm: X,Y,Z");
    auto* voxel_opt = segment_cmd->add_option("--seed-voxel", seg.seed_voxel, "Seed voxel: I,J,K");
    seed_opt->excludes(voxel_opt);
    segment_cmd->add_option("--output", seg.output, "Output mask path")->required();
    segment_cmd->add_option("--report", seg.report, "JSON report path");
    segment_cmd->add_option("--mesh-level", seg.params.mesh_level, "Icosphere level")->capture_default_str();
    segment_cmd->add_option("--nodes-per-ray", seg.params.nodes_per_ray, "Nodes per ray")->capture_default_str();
    segment_cmd->add_option("--ray-length-mm", seg.params.ray_length_mm, "Ray length in mm")->capture_default_str();
    segment_cmd->add_option("--delta-r", seg.params.delta_r, "Smoothness constraint")->capture_default_str();
    segment_cmd->add_option("--seed-radius-mm", seg.params.seed_stat_radius_mm,
                            "Radius of the seed intensity estimate")
        ->capture_default_str();
    segment_cmd->add_option("--cost-model", seg.cost_model, "region or deviation")->capture_default_str();
    segment_cmd->add_option("--oob-policy", seg.oob_policy, "zero-intensity or clamp-to-edge")->capture_default_str();

    PhantomFlags ph;
    auto* phantom_cmd = app.add_subcommand("phantom", "Write a synthetic phantom and its truth mask");
    phantom_cmd->add_option("--shape", ph.shape, "sphere or ellipsoid")->capture_default_str();
    phantom_cmd->add_option("--semi-axes", ph.semi_axes, "Semi-axes in mm: A,B,C")->capture_default_str();
    phantom_cmd->add_option("--dims", ph.dims, "Grid size: NX,NY,NZ")->capture_default_str();
    phantom_cmd->add_option("--spacing", ph.spacing, "Voxel spacing in mm")->capture_default_str();
    phantom_cmd->add_option("--center", ph.center, "Object centre in mm (default: grid centre)");
    phantom_cmd->add_option("--object", ph.object, "Object intensity")->capture_default_str();
    phantom_cmd->add_option("--background", ph.background, "Background intensity")->capture_default_str();
    phantom_cmd->add_option("--noise-sigma", ph.noise_sigma, "Gaussian noise sigma")->capture_default_str();
    phantom_cmd->add_option("--rng-seed", ph.rng_seed, "Noise seed")->capture_default_str();
    phantom_cmd->add_option("--output", ph.output, "Output volume path")->required();
    phantom_cmd->add_option("--truth", ph.truth, "Output truth mask path");

    EvalFlags ev;
    auto* eval_cmd = app.add_subcommand("eval", "Compare automatic and reference masks");
    eval_cmd->add_option("--manifest", ev.manifest, "JSON list of {id, auto, ref}")->required();
    eval_cmd->add_option("--report", ev.report, "Text table path (default: stdout)");
    eval_cmd->add_option("--json", ev.json, "Per-case JSON path");

    ServeFlags sv;
    auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API for one volume");
    serve_cmd->add_option("--input", sv.input, "Volume to serve")->required();
    serve_cmd->add_option("--host", sv.host, "Bind address")->capture_default_str();
    serve_cmd->add_option("--port", sv.port, "TCP port")->capture_default_str()->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--static", sv.static_dir, "Viewer asset directory");

    int mesh_level = 5;
    std::string mesh_output;
    auto* mesh_cmd = app.add_subcommand("mesh", "Print counts or write the icosphere as OBJ");
    mesh_cmd->add_option("--level", mesh_level, "Icosphere level")->capture_default_str();
    mesh_cmd->add_option("--output", mesh_output, "OBJ path");

    std::string dimacs_path;
    bool dimacs_check = false;
    auto* maxflow_cmd = app.add_subcommand("maxflow", "Solve a DIMACS max-flow problem");
    maxflow_cmd->add_option("--dimacs", dimacs_path, "DIMACS file")->required();
    maxflow_cmd->add_flag("--check", dimacs_check, "Compare with exhaustive min cut (small networks)");

    std::vector<std::string> argv_store;
    argv_store.reserve(args.size() + 1);
    argv_store.push_back("spheregc");
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (std::string& s : argv_store) {
        argv.push_back(s.data());
    }

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (segment_cmd->parsed()) {
            return cmd_segment(seg, out, err);
        }
        if (phantom_cmd->parsed()) {
            return cmd_phantom(ph, out);
        }
        if (eval_cmd->parsed()) {
            return cmd_eval(ev, out, err);
        }
        if (serve_cmd->parsed()) {
            return cmd_serve(sv, out, err);
        }
        if (mesh_cmd->parsed()) {
            return cmd_mesh(mesh_level, mesh_output, out);
        }
        if (maxflow_cmd->parsed()) {
            return cmd_maxflow(dimacs_path, dimacs_check, out);
        }
    } catch (const SeedOutOfBounds& e) {
        err << "error: " << e.what() << '\n';
        return kExitSeedOutside;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const FormatError& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_cli(args, std::cout, std::cerr);
}

} // namespace spheregc
