#include "camgrid/runtime/runtime.hpp"

#include <cmath>
#include <random>
#include <set>

#include "camgrid/core/error.hpp"
#include "camgrid/core/hash.hpp"
#include "camgrid/ingestion/poll.hpp"

namespace camgrid::runtime {

namespace {

std::string new_job_id() {
    static std::mutex mu;
    static std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard lock(mu);
    return "job-" + to_hex(rng());
}

}  // namespace

struct Runtime::Live {
    AnalysisJob job;  // guarded by Runtime::mu_
    std::vector<StreamEndpoint> endpoints;
    std::atomic<std::size_t> points_total{0};
    std::atomic<bool> truncated{false};
    bool cancel_requested = false;
    std::jthread runner;
};

nlohmann::json to_json(const JobResults& r) {
    auto series = nlohmann::json::array();
    for (const auto& s : r.series) {
        auto points = nlohmann::json::array();
        for (const auto& p : s.points) {
            points.push_back({{"seq", p.seq}, {"timestamp", format_timestamp(p.timestamp)}, {"value", p.value}});
        }
        series.push_back({{"camera_id", s.camera_id},
                          {"state", to_string(s.state)},
                          {"flagged", s.state == StreamState::failed},
                          {"points", points},
                          {"summary", to_json(s.summary)}});
    }
    return {{"job_id", r.job.id},
            {"state", to_string(r.job.state)},
            {"truncated", r.job.truncated},
            {"series", series}};
}

Runtime::Runtime(CameraResolver resolver, std::shared_ptr<JobStore> store, AnalyzerRegistry analyzers,
                 DecoderSet decoders, RuntimeOptions options)
    : resolver_(std::move(resolver)),
      store_(std::move(store)),
      analyzers_(std::move(analyzers)),
      decoders_(std::move(decoders)),
      options_(std::move(options)) {
    if (!resolver_ || !store_) throw Error(ErrorCode::invalid_argument, "runtime needs a camera resolver and a store");
}

Runtime::~Runtime() { shutdown(); }

void Runtime::register_analyzer(const std::string& name, AnalyzerFactory factory) {
    std::lock_guard lock(analyzers_mu_);
    analyzers_.register_analyzer(name, std::move(factory));
}

std::vector<std::string> Runtime::analyzer_names() const {
    std::lock_guard lock(analyzers_mu_);
    return analyzers_.names();
}

void Runtime::persist(const AnalysisJob& job) {
    store_->save_job(job);
}

double Runtime::retry_hint_s() const {
    // Earliest expected end among running jobs, at least one second.
    double best = 0.0;
    const auto now = now_utc();
    for (const auto& [id, live] : live_) {
        if (live->job.state != JobState::running || !live->job.started_at) continue;
        const double elapsed = static_cast<double>(to_millis(now) - to_millis(*live->job.started_at)) / 1000.0;
        const double left = live->job.request.duration_s - elapsed;
        if (best == 0.0 || left < best) best = left;
    }
    return std::max(1.0, std::ceil(best));
}

std::string Runtime::submit(const JobRequest& request) {
    if (request.camera_ids.empty()) {
        throw Error(ErrorCode::validation, "camera_ids must not be empty", {{"field", "camera_ids"}});
    }
    if (std::set<std::string>(request.camera_ids.begin(), request.camera_ids.end()).size() !=
        request.camera_ids.size()) {
        throw Error(ErrorCode::validation, "camera_ids must be unique", {{"field", "camera_ids"}});
    }
    if (!std::isfinite(request.fps) || request.fps <= 0.0) {
        throw Error(ErrorCode::validation, "fps must be positive", {{"field", "fps"}});
    }
    if (!std::isfinite(request.duration_s) || request.duration_s <= 0.0) {
        throw Error(ErrorCode::validation, "duration must be positive", {{"field", "duration"}});
    }
    {
        std::lock_guard lock(analyzers_mu_);
        (void)analyzers_.create(request.analyzer, request.params);  // validates name and params
    }
    std::vector<StreamEndpoint> endpoints;
    std::vector<std::string> unknown;
    for (const auto& id : request.camera_ids) {
        auto e = resolver_(id);
        if (!e) unknown.push_back(id);
        else endpoints.push_back(std::move(*e));
    }
    if (!unknown.empty()) {
        throw Error(ErrorCode::validation, "unknown camera ids", {{"field", "camera_ids"}, {"unknown", unknown}});
    }

    auto live = std::make_shared<Live>();
    live->endpoints = std::move(endpoints);
    live->job.id = new_job_id();
    live->job.request = request;
    live->job.created_at = now_utc();
    for (const auto& id : request.camera_ids) live->job.streams.push_back({id, StreamState::pending, 0, {}, {}});

    const int n = static_cast<int>(request.camera_ids.size());
    {
        std::lock_guard lock(mu_);
        if (shut_down_) throw Error(ErrorCode::capacity, "runtime is shutting down");
        if (active_streams_.load() + n > options_.max_concurrent_streams) {
            throw Error(ErrorCode::capacity, "too many concurrent streams",
                        {{"active", active_streams_.load()},
                         {"requested", n},
                         {"limit", options_.max_concurrent_streams},
                         {"retry_after_s", retry_hint_s()}});
        }
        active_streams_ += n;
        live_[live->job.id] = live;
    }
    try {
        persist(live->job);
    } catch (...) {
        std::lock_guard lock(mu_);
        live_.erase(live->job.id);
        active_streams_ -= n;
        throw;
    }
    live->runner = std::jthread([this, live](std::stop_token stop) { run_job(live, stop); });
    return live->job.id;
}

void Runtime::run_job(const std::shared_ptr<Live>& live, std::stop_token stop) {
    AnalysisJob snapshot;
    {
        std::lock_guard lock(mu_);
        if (live->cancel_requested || stop.stop_requested()) {
            live->job.state = JobState::cancelled;
            live->job.ended_at = now_utc();
            for (auto& s : live->job.streams) s.state = StreamState::cancelled;
            active_streams_ -= static_cast<int>(live->job.streams.size());
            snapshot = live->job;
        } else {
            live->job.state = JobState::running;
            live->job.started_at = now_utc();
            for (auto& s : live->job.streams) s.state = StreamState::running;
        }
        if (snapshot.id.empty()) snapshot = live->job;
    }
    try {
        persist(snapshot);
    } catch (const Error&) {
    }
    if (snapshot.state == JobState::cancelled) {
        cv_.notify_all();
        return;
    }

    {
        std::vector<std::jthread> streams;
        for (std::size_t i = 0; i < live->endpoints.size(); ++i) {
            streams.emplace_back([this, live, i, stop] { run_stream(live, i, stop); });
        }
    }

    {
        std::lock_guard lock(mu_);
        auto& job = live->job;
        job.truncated = live->truncated.load();
        job.ended_at = now_utc();
        const bool any_finished = std::any_of(job.streams.begin(), job.streams.end(),
                                              [](const StreamStatus& s) { return s.state == StreamState::finished; });
        if (live->cancel_requested) job.state = JobState::cancelled;
        else job.state = any_finished ? JobState::finished : JobState::failed;
        snapshot = job;
    }
    try {
        persist(snapshot);
    } catch (const Error&) {
    }
    cv_.notify_all();
}

void Runtime::run_stream(const std::shared_ptr<Live>& live, std::size_t index, std::stop_token stop) {
    const auto& request = live->job.request;  // immutable after submit
    const auto camera_id = request.camera_ids[index];
    StreamAnalyzer analyzer;
    {
        std::lock_guard lock(analyzers_mu_);
        analyzer = analyzers_.create(request.analyzer, request.params);
    }

    std::vector<ResultPoint> batch;
    std::uint64_t points = 0;
    std::optional<std::string> fatal;
    std::optional<std::string> store_error;
    auto flush = [&] {
        if (batch.empty()) return;
        try {
            store_->append_points(live->job.id, batch);
        } catch (const Error& e) {
            store_error = e.what();
        }
        batch.clear();
    };

    const ingestion::FrameSink sink = [&](Frame&& frame) -> ingestion::SinkResult {
        Raster raster;
        try {
            raster = decoders_.decode(frame);
        } catch (const Error&) {
            return ingestion::SinkResult::failed;  // undecodable frame
        }
        std::optional<nlohmann::json> value;
        try {
            value = analyzer(frame, raster);
        } catch (const AnalyzerError&) {
            return ingestion::SinkResult::failed;
        } catch (const std::exception& e) {
            fatal = e.what();
            return ingestion::SinkResult::stop;
        } catch (...) {
            fatal = "analyzer threw a non-standard exception";
            return ingestion::SinkResult::stop;
        }
        if (value) {
            if (live->points_total.fetch_add(1) < options_.max_points_per_job) {
                batch.push_back({camera_id, frame.seq, frame.captured_at, std::move(*value)});
                ++points;
                if (batch.size() >= options_.flush_every) flush();
            } else {
                live->truncated = true;
            }
        }
        return ingestion::SinkResult::ok;
    };

    ingestion::PollOptions popt;
    popt.fps = request.fps;
    popt.duration_s = request.duration_s;
    popt.camera_id = camera_id;
    popt.http = options_.http;
    popt.max_consecutive_failures = options_.max_consecutive_failures;

    ingestion::AcquisitionSummary summary;
    try {
        summary = ingestion::poll_stream(live->endpoints[index], popt, sink, stop);
    } catch (const std::exception& e) {
        fatal = e.what();
    }
    flush();

    AnalysisJob snapshot;
    {
        std::lock_guard lock(mu_);
        auto& st = live->job.streams[index];
        st.points = points;
        st.acquisition = summary;
        if (fatal) {
            st.state = StreamState::failed;
            st.error = *fatal;
        } else if (summary.aborted) {
            st.state = StreamState::failed;
            st.error = summary.last_error.empty() ? "too many consecutive failures" : summary.last_error;
        } else if (live->cancel_requested) {
            st.state = StreamState::cancelled;
        } else {
            st.state = StreamState::finished;
        }
        if (store_error && !st.error) st.error = "store: " + *store_error;
        live->job.truncated = live->truncated.load();
        --active_streams_;
        snapshot = live->job;
    }
    try {
        persist(snapshot);
    } catch (const Error&) {
    }
}

void Runtime::cancel(const std::string& id) {
    std::shared_ptr<Live> live;
    {
        std::lock_guard lock(mu_);
        const auto it = live_.find(id);
        if (it != live_.end()) {
            live = it->second;
            if (is_terminal(live->job.state)) return;
            live->cancel_requested = true;
        }
    }
    if (live) {
        live->runner.request_stop();
        return;
    }
    if (!store_->load_job(id)) throw Error(ErrorCode::not_found, "unknown job " + id, {{"id", id}});
}

AnalysisJob Runtime::job(const std::string& id) {
    {
        std::lock_guard lock(mu_);
        const auto it = live_.find(id);
        if (it != live_.end()) return it->second->job;
    }
    auto stored = store_->load_job(id);
    if (!stored) throw Error(ErrorCode::not_found, "unknown job " + id, {{"id", id}});
    return *stored;
}

JobResults Runtime::results(const std::string& id, const PointFilter& filter) {
    JobResults r;
    r.job = job(id);
    const auto points = store_->load_points(id, filter);
    for (const auto& s : r.job.streams) {
        if (filter.camera_id && s.camera_id != *filter.camera_id) continue;
        SeriesResult series;
        series.camera_id = s.camera_id;
        series.state = s.state;
        for (const auto& p : points) {
            if (p.camera_id == s.camera_id) series.points.push_back(p);
        }
        series.summary = summarize(series.points);
        r.series.push_back(std::move(series));
    }
    if (filter.camera_id && r.series.empty()) {
        throw Error(ErrorCode::not_found, "camera " + *filter.camera_id + " is not part of job " + id,
                    {{"id", id}, {"camera_id", *filter.camera_id}});
    }
    return r;
}

bool Runtime::wait(const std::string& id, std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    const auto it = live_.find(id);
    if (it == live_.end()) {
        lock.unlock();
        return is_terminal(job(id).state);
    }
    auto live = it->second;
    return cv_.wait_for(lock, timeout, [&] { return is_terminal(live->job.state); });
}

void Runtime::shutdown() {
    std::vector<std::shared_ptr<Live>> all;
    {
        std::lock_guard lock(mu_);
        if (shut_down_) return;
        shut_down_ = true;
        for (auto& [id, live] : live_) {
            if (!is_terminal(live->job.state)) live->cancel_requested = true;
            all.push_back(live);
        }
    }
    for (auto& live : all) live->runner.request_stop();
    for (auto& live : all) {
        if (live->runner.joinable()) live->runner.join();
    }
}

}  // namespace camgrid::runtime
