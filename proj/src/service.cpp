#include "spheregc/service.hpp"

#include "spheregc/error.hpp"
#include "spheregc/evalkit.hpp"

#include "httplib.h"
#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <iostream>

namespace spheregc {

std::vector<std::uint64_t> rle_encode(std::span<const std::uint8_t> mask) {
    std::vector<std::uint64_t> runs;
    std::uint8_t current = 0;
    std::uint64_t length = 0;
    for (std::uint8_t v : mask) {
        const std::uint8_t bit = v ? 1 : 0;
        if (bit != current) {
            runs.push_back(length);
            current = bit;
            length = 0;
        }
        ++length;
    }
    runs.push_back(length);
    return runs;
}

std::vector<std::uint8_t> rle_decode(std::span<const std::uint64_t> runs, std::size_t expected_length) {
    std::vector<std::uint8_t> out;
    out.reserve(expected_length);
    std::uint8_t bit = 0;
    for (std::uint64_t run : runs) {
        if (run > expected_length - out.size()) {
            throw FormatError("run lengths exceed the expected mask size");
        }
        out.insert(out.end(), static_cast<std::size_t>(run), bit);
        bit ^= 1;
    }
    if (out.size() != expected_length) {
        throw FormatError("run lengths sum to " + std::to_string(out.size()) + ", expected " +
                          std::to_string(expected_length));
    }
    return out;
}

JobQueue::JobQueue(std::size_t capacity) : capacity_(capacity), worker_([this] { run(); }) {}

JobQueue::~JobQueue() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    cv_.notify_all();
    worker_.join();
}

bool JobQueue::enqueue(Task task) {
    {
        std::lock_guard lock(mutex_);
        if (stopping_ || pending_.size() >= capacity_) {
            return false;
        }
        pending_.push_back(std::move(task));
    }
    cv_.notify_one();
    return true;
}

std::size_t JobQueue::waiting() const {
    std::lock_guard lock(mutex_);
    return pending_.size();
}

bool JobQueue::busy() const {
    std::lock_guard lock(mutex_);
    return running_;
}

void JobQueue::run() {
    for (;;) {
        Task task;
        {
            std::unique_lock lock(mutex_);
            cv_.wait(lock, [this] { return stopping_ || !pending_.empty(); });
            if (pending_.empty()) {
                return;
            }
            task = std::move(pending_.front());
            pending_.pop_front();
            running_ = true;
        }
        task();
        std::lock_guard lock(mutex_);
        running_ = false;
    }
}

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string error_body(const std::string& message) {
    return ordered_json{{"error", message}}.dump();
}

template <typename T>
T field(const json& body, const char* key, T fallback) {
    const auto it = body.find(key);
    if (it == body.end() || it->is_null()) {
        return fallback;
    }
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw InvalidArgument(std::string("field '") + key + "' has the wrong type");
    }
}

int int_field(const json& body, const char* key, int fallback) {
    const auto it = body.find(key);
    if (it == body.end() || it->is_null()) {
        return fallback;
    }
    if (!it->is_number_integer()) {
        throw InvalidArgument(std::string("field '") + key + "' must be an integer");
    }
    return it->get<int>();
}

} // namespace

std::pair<WorldPoint, SegmentationParams> parse_segment_request(const std::string& body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::parse_error& e) {
        throw InvalidArgument(std::string("request body is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw InvalidArgument("request body must be a JSON object");
    }
    const auto seed_it = j.find("seed_mm");
    if (seed_it == j.end() || !seed_it->is_array() || seed_it->size() != 3) {
        throw InvalidArgument("'seed_mm' must be an array of three numbers");
    }
    WorldPoint seed;
    for (std::size_t a = 0; a < 3; ++a) {
        if (!(*seed_it)[a].is_number()) {
            throw InvalidArgument("'seed_mm' must be an array of three numbers");
        }
    }
    seed = {(*seed_it)[0].get<double>(), (*seed_it)[1].get<double>(), (*seed_it)[2].get<double>()};
    if (!is_finite(seed)) {
        throw InvalidArgument("'seed_mm' must be finite");
    }

    SegmentationParams p;
    p.mesh_level = int_field(j, "mesh_level", p.mesh_level);
    p.nodes_per_ray = int_field(j, "nodes_per_ray", p.nodes_per_ray);
    p.ray_length_mm = field<double>(j, "ray_length_mm", p.ray_length_mm);
    p.delta_r = int_field(j, "delta_r", p.delta_r);
    p.seed_stat_radius_mm = field<double>(j, "seed_stat_radius_mm", p.seed_stat_radius_mm);
    if (j.contains("cost_model")) {
        p.cost_model = cost_model_from_name(field<std::string>(j, "cost_model", ""));
    }
    if (j.contains("oob_policy")) {
        p.oob_policy = oob_policy_from_name(field<std::string>(j, "oob_policy", ""));
    }
    p.validate();
    return {seed, p};
}

SegmentationServer::SegmentationServer(Volume3D volume, ServerOptions options)
    : volume_(std::move(volume)),
      options_(std::move(options)),
      http_(std::make_unique<httplib::Server>()),
      queue_(options_.queue_capacity) {
    install_routes();
}

SegmentationServer::~SegmentationServer() { stop(); }

bool SegmentationServer::listen(const std::string& host, int port) { return http_->listen(host, port); }

int SegmentationServer::bind_to_any_port(const std::string& host) {
    return http_->bind_to_any_port(host);
}

bool SegmentationServer::listen_after_bind() { return http_->listen_after_bind(); }

void SegmentationServer::stop() {
    if (http_) {
        http_->stop();
    }
}

bool SegmentationServer::is_running() const { return http_->is_running(); }

void SegmentationServer::wait_until_ready() const { http_->wait_until_ready(); }

std::pair<int, std::string> SegmentationServer::meta_json() const {
    const Geometry& g = volume_.geometry();
    const auto [lo, hi] = volume_.intensity_range();
    ordered_json j{{"dims", g.dims},
                   {"spacing", g.spacing},
                   {"origin", g.origin},
                   {"intensity_min", lo},
                   {"intensity_max", hi}};
    return {200, j.dump()};
}

std::pair<int, std::string> SegmentationServer::segment_json(const std::string& body) {
    WorldPoint seed;
    SegmentationParams params;
    try {
        std::tie(seed, params) = parse_segment_request(body);
    } catch (const Error& e) {
        return {400, error_body(e.what())};
    }
    try {
        require_seed_inside(volume_, seed);
    } catch (const SeedOutOfBounds& e) {
        return {422, error_body(e.what())};
    }

    auto future = queue_.submit([this, seed, params] { return segment(volume_, seed, params); });
    if (!future) {
        return {429, error_body("segmentation queue is full")};
    }

    JobRecord record;
    record.input_path = options_.input_path;
    record.seed = seed;
    record.params = params;
    record.created_at = utc_timestamp();
    {
        std::lock_guard lock(jobs_mutex_);
        record.job_id = "job-" + std::to_string(next_job_++);
    }

    std::pair<int, std::string> response;
    try {
        const SegmentationResult result = future->get();
        record.report = report_json(result);
        const StageTimings& t = result.timings;
        const std::size_t voxels = result.mask.count();
        ordered_json j;
        j["job_id"] = record.job_id;
        j["status"] = "done";
        j["objective"] = result.objective;
        j["timings_ms"] = {{"mesh", t.mesh_ms},       {"sampling", t.sampling_ms},
                           {"costs", t.costs_ms},     {"graph", t.graph_ms},
                           {"maxflow", t.maxflow_ms}, {"voxelize", t.voxelize_ms},
                           {"total", t.total_ms}};
        j["dims"] = result.mask.dims();
        j["voxel_count"] = voxels;
        j["volume_cm3"] = mask_volume_cm3(result.mask);
        j["mask_rle"] = rle_encode(result.mask.data());
        j["warnings"] = result.warnings;
        response = {200, j.dump()};
    } catch (const std::exception& e) {
        record.status = JobStatus::Failed;
        record.error = e.what();
        response = {500, error_body(e.what())};
    }
    std::lock_guard lock(jobs_mutex_);
    jobs_.push_back(std::move(record));
    return response;
}

std::vector<JobRecord> SegmentationServer::jobs() const {
    std::lock_guard lock(jobs_mutex_);
    return jobs_;
}

void SegmentationServer::install_routes() {
    http_->new_task_queue = [] { return new httplib::ThreadPool(16); };

    if (options_.log_requests) {
        http_->set_logger([](const httplib::Request& req, const httplib::Response& res) {
            std::cerr << req.method << ' ' << req.path << ' ' << res.status << '\n';
        });
    }

    auto send = [](httplib::Response& res, const std::pair<int, std::string>& reply) {
        res.status = reply.first;
        res.set_content(reply.second, "application/json");
    };

    http_->Get("/api/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"status":"ok"})", "application/json");
    });

    http_->Get("/api/meta", [this, send](const httplib::Request&, httplib::Response& res) {
        send(res, meta_json());
    });

    http_->Get(R"(/api/slice/([a-z]+)/(-?\d+))",
               [this, send](const httplib::Request& req, httplib::Response& res) {
                   try {
                       const Axis axis = axis_from_name(req.matches[1]);
                       const int index = std::stoi(req.matches[2]);
                       const auto [lo, hi] = volume_.intensity_range();
                       double center = 0.5 * (static_cast<double>(lo) + hi);
                       double width = std::max(static_cast<double>(hi) - lo, 1.0);
                       if (req.has_param("wc")) {
                           center = std::stod(req.get_param_value("wc"));
                       }
                       if (req.has_param("ww")) {
                           width = std::stod(req.get_param_value("ww"));
                       }
                       const GrayImage img = extract_slice(volume_, axis, index, center, width);
                       res.set_content(encode_png(img), "image/png");
                   } catch (const std::out_of_range&) {
                       send(res, {400, error_body("number out of range")});
                   } catch (const std::invalid_argument&) {
                       send(res, {400, error_body("wc and ww must be numbers")});
                   } catch (const Error& e) {
                       send(res, {400, error_body(e.what())});
                   }
               });

    http_->Post("/api/segment", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, segment_json(req.body));
    });

    http_->Get("/api/jobs", [this, send](const httplib::Request&, httplib::Response& res) {
        ordered_json list = ordered_json::array();
        for (const JobRecord& r : jobs()) {
            ordered_json item{{"job_id", r.job_id},
                              {"input_path", r.input_path},
                              {"seed_mm", r.seed.to_array()},
                              {"status", r.status == JobStatus::Done ? "done" : "failed"},
                              {"created_at", r.created_at}};
            if (r.status == JobStatus::Failed) {
                item["error"] = r.error;
            } else {
                item["report"] = ordered_json::parse(r.report);
            }
            list.push_back(std::move(item));
        }
        send(res, {200, list.dump()});
    });

    if (!options_.static_dir.empty()) {
        if (!http_->set_mount_point("/", options_.static_dir.string())) {
            throw IoError("static directory '" + options_.static_dir.string() + "' does not exist");
        }
    }
}

} // namespace spheregc
