#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "camgrid/core/time.hpp"
#include "camgrid/ingestion/poll.hpp"

namespace camgrid::runtime {

enum class JobState { pending, running, finished, failed, cancelled };
enum class StreamState { pending, running, finished, failed, cancelled };

std::string to_string(JobState s);
std::string to_string(StreamState s);
std::optional<JobState> parse_job_state(std::string_view s);
std::optional<StreamState> parse_stream_state(std::string_view s);

// pending -> running -> {finished, failed, cancelled}; pending may also go
// straight to cancelled.
bool is_valid_transition(JobState from, JobState to);
bool is_terminal(JobState s);

struct JobRequest {
    std::vector<std::string> camera_ids;
    double fps = 1.0;
    double duration_s = 10.0;
    std::string analyzer;
    nlohmann::json params = nlohmann::json::object();
};

// POST /jobs body: {camera_ids, fps, duration, analyzer, params?}.
JobRequest parse_job_request(const nlohmann::json& j);

struct StreamStatus {
    std::string camera_id;
    StreamState state = StreamState::pending;
    std::uint64_t points = 0;
    std::optional<std::string> error;
    std::optional<ingestion::AcquisitionSummary> acquisition;
};

struct AnalysisJob {
    std::string id;
    JobRequest request;
    JobState state = JobState::pending;
    Timestamp created_at{};
    std::optional<Timestamp> started_at;
    std::optional<Timestamp> ended_at;
    bool truncated = false;
    std::vector<StreamStatus> streams;
};

nlohmann::json to_json(const AnalysisJob& job);
AnalysisJob job_from_json(const nlohmann::json& j);

struct ResultPoint {
    std::string camera_id;
    std::uint64_t seq = 0;
    Timestamp timestamp{};
    nlohmann::json value;

    bool operator==(const ResultPoint&) const = default;
};

nlohmann::json to_json(const ResultPoint& p);

struct HourBin {
    Timestamp hour{};
    std::uint64_t count = 0;
    double mean = 0.0;
    double max = 0.0;
};

// Statistics over the numeric point values. `count` counts every point.
struct SeriesSummary {
    std::uint64_t count = 0;
    std::optional<double> mean;
    std::optional<double> max;
    std::vector<HourBin> hourly;
};

SeriesSummary summarize(const std::vector<ResultPoint>& points);
nlohmann::json to_json(const SeriesSummary& s);

struct PointFilter {
    std::optional<std::string> camera_id;
    std::optional<Timestamp> from;  // inclusive
    std::optional<Timestamp> to;    // inclusive
};

// Persistence port for jobs and their result points. Implemented in memory
// here and by the registry's SQLite store.
class JobStore {
public:
    virtual ~JobStore() = default;
    virtual void save_job(const AnalysisJob& job) = 0;
    virtual void append_points(const std::string& job_id, const std::vector<ResultPoint>& points) = 0;
    virtual std::optional<AnalysisJob> load_job(const std::string& id) = 0;
    // Ordered by (camera_id, seq).
    virtual std::vector<ResultPoint> load_points(const std::string& job_id, const PointFilter& filter) = 0;
    virtual std::vector<std::string> job_ids() = 0;
};

class MemoryJobStore final : public JobStore {
public:
    void save_job(const AnalysisJob& job) override;
    void append_points(const std::string& job_id, const std::vector<ResultPoint>& points) override;
    std::optional<AnalysisJob> load_job(const std::string& id) override;
    std::vector<ResultPoint> load_points(const std::string& job_id, const PointFilter& filter) override;
    std::vector<std::string> job_ids() override;

private:
    std::mutex mu_;
    std::map<std::string, AnalysisJob> jobs_;
    std::map<std::string, std::vector<ResultPoint>> points_;
};

}  // namespace camgrid::runtime
