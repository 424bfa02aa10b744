#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "camgrid/core/types.hpp"
#include "camgrid/ingestion/http.hpp"
#include "camgrid/runtime/analyzers.hpp"
#include "camgrid/runtime/codec.hpp"
#include "camgrid/runtime/job.hpp"

namespace camgrid::runtime {

struct RuntimeOptions {
    int max_concurrent_streams = 64;
    std::size_t max_points_per_job = 1'000'000;
    int max_consecutive_failures = 10;
    ingestion::HttpOptions http{};
    std::size_t flush_every = 64;  // points buffered per stream before a store write
};

// Maps a camera id to its retrieval endpoint; nullopt for unknown ids.
using CameraResolver = std::function<std::optional<StreamEndpoint>(const std::string& camera_id)>;

struct SeriesResult {
    std::string camera_id;
    StreamState state = StreamState::pending;
    std::vector<ResultPoint> points;
    SeriesSummary summary;
};

struct JobResults {
    AnalysisJob job;
    std::vector<SeriesResult> series;  // in job camera order
};

nlohmann::json to_json(const JobResults& r);

// Event-driven job engine. Each stream of a job runs ingestion::poll_stream
// on its own thread and feeds decoded rasters to a private analyzer
// instance, so analyzer calls are serial per stream and unordered across
// streams.
//
// A stream fails after max_consecutive_failures decode/analyzer errors or
// fetch errors, or at once when its analyzer throws anything other than
// AnalyzerError. A job finishes if at least one stream finishes and fails
// only if every stream fails.
class Runtime {
public:
    Runtime(CameraResolver resolver, std::shared_ptr<JobStore> store,
            AnalyzerRegistry analyzers = AnalyzerRegistry::with_builtins(),
            DecoderSet decoders = DecoderSet::builtin(), RuntimeOptions options = {});
    ~Runtime();
    Runtime(const Runtime&) = delete;
    Runtime& operator=(const Runtime&) = delete;

    void register_analyzer(const std::string& name, AnalyzerFactory factory);
    [[nodiscard]] std::vector<std::string> analyzer_names() const;

    // Validates, persists as pending and starts the job. Throws
    // Error(validation) for bad requests and unknown cameras/analyzers and
    // Error(capacity) with details.retry_after_s when the stream limit would
    // be exceeded.
    std::string submit(const JobRequest& request);

    // Requests cancellation; a no-op for jobs already in a terminal state.
    // Throws Error(not_found).
    void cancel(const std::string& id);

    // Throws Error(not_found).
    [[nodiscard]] AnalysisJob job(const std::string& id);
    [[nodiscard]] JobResults results(const std::string& id, const PointFilter& filter = {});

    // True once the job is terminal.
    bool wait(const std::string& id, std::chrono::milliseconds timeout);

    [[nodiscard]] int active_streams() const noexcept { return active_streams_.load(); }

    // Cancels every running job and joins all threads. Idempotent.
    void shutdown();

private:
    struct Live;

    void run_job(const std::shared_ptr<Live>& live, std::stop_token stop);
    void run_stream(const std::shared_ptr<Live>& live, std::size_t index, std::stop_token stop);
    void persist(const AnalysisJob& job);
    [[nodiscard]] double retry_hint_s() const;

    CameraResolver resolver_;
    std::shared_ptr<JobStore> store_;
    mutable std::mutex analyzers_mu_;
    AnalyzerRegistry analyzers_;
    DecoderSet decoders_;
    RuntimeOptions options_;

    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::map<std::string, std::shared_ptr<Live>> live_;
    std::atomic<int> active_streams_{0};
    bool shut_down_ = false;
};

}  // namespace camgrid::runtime
