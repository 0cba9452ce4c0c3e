#pragma once

#include "spheregc/graphbuild.hpp"
#include "spheregc/segmenter.hpp"
#include "spheregc/volume.hpp"

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace spheregc {

// Run lengths over the row-major mask, alternating zero-runs and
// one-runs and always starting with a (possibly empty) zero-run.
std::vector<std::uint64_t> rle_encode(std::span<const std::uint8_t> mask);

// Throws FormatError unless the runs add up to `expected_length`.
std::vector<std::uint8_t> rle_decode(std::span<const std::uint64_t> runs, std::size_t expected_length);

// 8-bit grayscale PNG.
std::string encode_png(const GrayImage& image);

// Single-worker FIFO queue for segmentation jobs. At most one job runs at
// a time; up to `capacity` more may wait. submit() returns nullopt when
// the waiting list is full.
class JobQueue {
public:
    using Task = std::function<void()>;

    explicit JobQueue(std::size_t capacity = 4);
    ~JobQueue();
    JobQueue(const JobQueue&) = delete;
    JobQueue& operator=(const JobQueue&) = delete;

    template <typename Fn>
    auto submit(Fn&& fn) -> std::optional<std::future<decltype(fn())>> {
        using R = decltype(fn());
        auto task = std::make_shared<std::packaged_task<R()>>(std::forward<Fn>(fn));
        auto fut = task->get_future();
        if (!enqueue([task] { (*task)(); })) {
            return std::nullopt;
        }
        return fut;
    }

    std::size_t waiting() const;
    bool busy() const;

private:
    bool enqueue(Task task);
    void run();

    const std::size_t capacity_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<Task> pending_;
    bool running_ = false;
    bool stopping_ = false;
    std::thread worker_;
};

enum class JobStatus { Done, Failed };

struct JobRecord {
    std::string job_id;
    std::string input_path;
    WorldPoint seed;
    SegmentationParams params;
    JobStatus status = JobStatus::Done;
    std::string error;
    std::string report; // JSON sidecar when done
    std::string created_at;
};

struct ServerOptions {
    std::string input_path;
    std::filesystem::path static_dir;
    std::size_t queue_capacity = 4;
    bool log_requests = true;
};

// HTTP front end over one loaded volume: /api/health, /api/meta,
// /api/slice/{axis}/{index}, /api/segment, /api/jobs.
class SegmentationServer {
public:
    SegmentationServer(Volume3D volume, ServerOptions options);
    ~SegmentationServer();
    SegmentationServer(const SegmentationServer&) = delete;
    SegmentationServer& operator=(const SegmentationServer&) = delete;

    // Binds and serves until stop(). Returns false when the port cannot be bound.
    bool listen(const std::string& host, int port);
    // Binds to a free port and returns it (or -1); call listen_after_bind() to serve.
    int bind_to_any_port(const std::string& host);
    bool listen_after_bind();
    void stop();
    bool is_running() const;
    void wait_until_ready() const;

    // Request handlers, callable without a socket. Each returns
    // (HTTP status, body).
    std::pair<int, std::string> meta_json() const;
    std::pair<int, std::string> segment_json(const std::string& body);
    std::vector<JobRecord> jobs() const;
    JobQueue& job_queue() { return queue_; }

private:
    void install_routes();

    Volume3D volume_;
    ServerOptions options_;
    std::unique_ptr<httplib::Server> http_;
    JobQueue queue_;
    mutable std::mutex jobs_mutex_;
    std::vector<JobRecord> jobs_;
    std::uint64_t next_job_ = 1;
};

// Parses a POST /api/segment body into seed and parameters. Throws
// InvalidArgument for malformed input.
std::pair<WorldPoint, SegmentationParams> parse_segment_request(const std::string& body);

} // namespace spheregc
