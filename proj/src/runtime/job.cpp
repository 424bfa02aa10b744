#include "camgrid/runtime/job.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "camgrid/core/error.hpp"
#include "camgrid/core/serialize.hpp"

namespace camgrid::runtime {

namespace {

constexpr const char* kJobStates[] = {"pending", "running", "finished", "failed", "cancelled"};

nlohmann::json to_json_summary(const std::optional<ingestion::AcquisitionSummary>& s) {
    return s ? ingestion::to_json(*s) : nlohmann::json(nullptr);
}

ingestion::AcquisitionSummary acquisition_from_json(const nlohmann::json& j) {
    using namespace json_detail;
    ingestion::AcquisitionSummary s;
    s.frames_delivered = static_cast<std::uint64_t>(get_integer(j, "frames_delivered"));
    s.ticks_expected = static_cast<std::uint64_t>(get_integer(j, "ticks_expected"));
    s.ticks_skipped = static_cast<std::uint64_t>(get_integer(j, "ticks_skipped"));
    s.ticks_failed = static_cast<std::uint64_t>(get_integer(j, "ticks_failed"));
    s.frames_dropped = static_cast<std::uint64_t>(get_integer(j, "frames_dropped"));
    s.errors = static_cast<std::uint64_t>(get_integer(j, "errors"));
    s.elapsed_s = get_number(j, "elapsed_s");
    s.effective_fps = get_number(j, "effective_fps");
    s.aborted = get_bool(j, "aborted");
    s.cancelled = get_bool(j, "cancelled");
    s.last_error = get_string(j, "last_error");
    return s;
}

std::optional<double> numeric(const nlohmann::json& v) {
    if (v.is_number()) return v.get<double>();
    if (v.is_object() && v.contains("value") && v["value"].is_number()) return v["value"].get<double>();
    return std::nullopt;
}

}  // namespace

std::string to_string(JobState s) { return kJobStates[static_cast<int>(s)]; }
std::string to_string(StreamState s) { return kJobStates[static_cast<int>(s)]; }

std::optional<JobState> parse_job_state(std::string_view s) {
    for (int i = 0; i < 5; ++i) {
        if (s == kJobStates[i]) return static_cast<JobState>(i);
    }
    return std::nullopt;
}

std::optional<StreamState> parse_stream_state(std::string_view s) {
    const auto j = parse_job_state(s);
    if (!j) return std::nullopt;
    return static_cast<StreamState>(static_cast<int>(*j));
}

bool is_terminal(JobState s) {
    return s == JobState::finished || s == JobState::failed || s == JobState::cancelled;
}

bool is_valid_transition(JobState from, JobState to) {
    switch (from) {
        case JobState::pending: return to == JobState::running || to == JobState::cancelled;
        case JobState::running: return is_terminal(to);
        default: return false;
    }
}

JobRequest parse_job_request(const nlohmann::json& j) {
    using namespace json_detail;
    if (!j.is_object()) fail("body", "expected a JSON object");
    JobRequest r;
    const auto& ids = member(j, "camera_ids");
    if (!ids.is_array()) fail("camera_ids", "expected a list of strings");
    for (const auto& v : ids) {
        if (!v.is_string()) fail("camera_ids", "expected a list of strings");
        r.camera_ids.push_back(v.get<std::string>());
    }
    r.fps = get_number(j, "fps");
    r.duration_s = get_number(j, "duration");
    r.analyzer = get_string(j, "analyzer");
    if (j.contains("params") && !j["params"].is_null()) {
        if (!j["params"].is_object()) fail("params", "expected an object");
        r.params = j["params"];
    }
    return r;
}

nlohmann::json to_json(const AnalysisJob& job) {
    using json_detail::opt;
    auto streams = nlohmann::json::array();
    for (const auto& s : job.streams) {
        streams.push_back({{"camera_id", s.camera_id},
                           {"state", to_string(s.state)},
                           {"points", s.points},
                           {"error", opt(s.error)},
                           {"acquisition", to_json_summary(s.acquisition)}});
    }
    auto ts = [](const std::optional<Timestamp>& t) {
        return t ? nlohmann::json(format_timestamp(*t)) : nlohmann::json(nullptr);
    };
    return {{"id", job.id},
            {"camera_ids", job.request.camera_ids},
            {"fps", job.request.fps},
            {"duration", job.request.duration_s},
            {"analyzer", job.request.analyzer},
            {"params", job.request.params},
            {"state", to_string(job.state)},
            {"created_at", format_timestamp(job.created_at)},
            {"started_at", ts(job.started_at)},
            {"ended_at", ts(job.ended_at)},
            {"truncated", job.truncated},
            {"streams", streams}};
}

AnalysisJob job_from_json(const nlohmann::json& j) {
    using namespace json_detail;
    AnalysisJob job;
    job.id = get_string(j, "id");
    job.request = parse_job_request(j);
    const auto state = parse_job_state(get_string(j, "state"));
    if (!state) fail("state", "unknown job state");
    job.state = *state;
    job.created_at = get_timestamp(j, "created_at");
    if (!member(j, "started_at").is_null()) job.started_at = get_timestamp(j, "started_at");
    if (!member(j, "ended_at").is_null()) job.ended_at = get_timestamp(j, "ended_at");
    job.truncated = get_bool(j, "truncated");
    for (const auto& s : member(j, "streams")) {
        StreamStatus st;
        st.camera_id = get_string(s, "camera_id");
        const auto ss = parse_stream_state(get_string(s, "state"));
        if (!ss) fail("streams.state", "unknown stream state");
        st.state = *ss;
        st.points = static_cast<std::uint64_t>(get_integer(s, "points"));
        st.error = get_opt_string(s, "error");
        if (!member(s, "acquisition").is_null()) st.acquisition = acquisition_from_json(s["acquisition"]);
        job.streams.push_back(std::move(st));
    }
    return job;
}

nlohmann::json to_json(const ResultPoint& p) {
    return {{"camera_id", p.camera_id}, {"seq", p.seq}, {"timestamp", format_timestamp(p.timestamp)},
            {"value", p.value}};
}

SeriesSummary summarize(const std::vector<ResultPoint>& points) {
    SeriesSummary s;
    s.count = points.size();
    double sum = 0.0;
    std::uint64_t n = 0;
    std::map<std::int64_t, HourBin> bins;
    std::map<std::int64_t, double> bin_sums;
    constexpr std::int64_t kHourMs = 3'600'000;
    for (const auto& p : points) {
        const auto v = numeric(p.value);
        if (!v) continue;
        sum += *v;
        ++n;
        s.max = s.max ? std::max(*s.max, *v) : *v;
        const auto ms = to_millis(p.timestamp);
        const auto hour = (ms >= 0 ? ms / kHourMs : (ms - kHourMs + 1) / kHourMs) * kHourMs;
        auto& bin = bins[hour];
        bin.hour = from_millis(hour);
        bin.max = bin.count == 0 ? *v : std::max(bin.max, *v);
        ++bin.count;
        bin_sums[hour] += *v;
    }
    if (n > 0) s.mean = sum / static_cast<double>(n);
    for (auto& [hour, bin] : bins) {
        bin.mean = bin_sums[hour] / static_cast<double>(bin.count);
        s.hourly.push_back(bin);
    }
    return s;
}

nlohmann::json to_json(const SeriesSummary& s) {
    auto hourly = nlohmann::json::array();
    for (const auto& b : s.hourly) {
        hourly.push_back({{"hour", format_timestamp(b.hour)}, {"count", b.count}, {"mean", b.mean}, {"max", b.max}});
    }
    return {{"count", s.count}, {"mean", json_detail::opt(s.mean)}, {"max", json_detail::opt(s.max)},
            {"hourly", hourly}};
}

void MemoryJobStore::save_job(const AnalysisJob& job) {
    std::lock_guard lock(mu_);
    jobs_[job.id] = job;
}

void MemoryJobStore::append_points(const std::string& job_id, const std::vector<ResultPoint>& points) {
    std::lock_guard lock(mu_);
    auto& v = points_[job_id];
    v.insert(v.end(), points.begin(), points.end());
}

std::optional<AnalysisJob> MemoryJobStore::load_job(const std::string& id) {
    std::lock_guard lock(mu_);
    const auto it = jobs_.find(id);
    if (it == jobs_.end()) return std::nullopt;
    return it->second;
}

std::vector<ResultPoint> MemoryJobStore::load_points(const std::string& job_id, const PointFilter& filter) {
    std::lock_guard lock(mu_);
    std::vector<ResultPoint> out;
    const auto it = points_.find(job_id);
    if (it == points_.end()) return out;
    for (const auto& p : it->second) {
        if (filter.camera_id && p.camera_id != *filter.camera_id) continue;
        if (filter.from && p.timestamp < *filter.from) continue;
        if (filter.to && p.timestamp > *filter.to) continue;
        out.push_back(p);
    }
    std::stable_sort(out.begin(), out.end(), [](const ResultPoint& a, const ResultPoint& b) {
        return std::tie(a.camera_id, a.seq) < std::tie(b.camera_id, b.seq);
    });
    return out;
}

std::vector<std::string> MemoryJobStore::job_ids() {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& [id, _] : jobs_) out.push_back(id);
    return out;
}

}  // namespace camgrid::runtime
