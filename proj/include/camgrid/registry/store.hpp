#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "camgrid/core/types.hpp"
#include "camgrid/discovery/verify.hpp"
#include "camgrid/registry/filter.hpp"
#include "camgrid/runtime/job.hpp"
#include "camgrid/runtime/runtime.hpp"

namespace camgrid::registry {

struct LocatedCamera {
    std::string id;
    GeoPoint point;
};

// SQLite-backed registry. Schema:
//
//   cameras(id TEXT PRIMARY KEY, lat REAL, lon REAL, country TEXT, state TEXT,
//           city TEXT, disposition TEXT, record TEXT)   -- record = canonical JSON
//   INDEX cameras_lat_lon(lat, lon), cameras_country/state/city
//   jobs(id TEXT PRIMARY KEY, created INTEGER, body TEXT)
//   points(job_id, camera_id, seq, ts, value) PRIMARY KEY(job_id, camera_id, seq)
//
// File databases run in WAL mode with synchronous=FULL: writes are
// serialized and durable on return, reads use a pool of read-only
// connections. ":memory:" gives a private in-memory database on a single
// connection.
//
// SQLite failures surface as Error(storage) with details.retriable = true.
class Store final : public runtime::JobStore {
public:
    explicit Store(const std::string& path);
    ~Store() override;
    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    // Insert or replace by id. Throws Error(validation) with
    // details.violations when the record is invalid.
    CameraRecord upsert_camera(const CameraRecord& rec,
                               discovery::Disposition disposition = discovery::Disposition::accepted);
    // One transaction; nothing is written if any record is invalid
    // (details.index names the first bad one).
    void upsert_many(const std::vector<CameraRecord>& recs,
                     discovery::Disposition disposition = discovery::Disposition::accepted);

    [[nodiscard]] std::optional<CameraRecord> get_camera(const std::string& id);
    [[nodiscard]] std::optional<discovery::Disposition> disposition(const std::string& id);
    // Throws Error(not_found).
    void set_disposition(const std::string& id, discovery::Disposition disposition);

    // Ordered by id. Throws Error(validation) for a bad filter.
    [[nodiscard]] CameraPage query_cameras(const CameraFilter& filter);
    [[nodiscard]] std::int64_t count_cameras();
    // Cameras with a point inside the box.
    [[nodiscard]] std::vector<LocatedCamera> located_cameras(const BBox& bbox);

    void save_job(const runtime::AnalysisJob& job) override;
    void append_points(const std::string& job_id, const std::vector<runtime::ResultPoint>& points) override;
    std::optional<runtime::AnalysisJob> load_job(const std::string& id) override;
    std::vector<runtime::ResultPoint> load_points(const std::string& job_id,
                                                  const runtime::PointFilter& filter) override;
    std::vector<std::string> job_ids() override;

    [[nodiscard]] const std::string& path() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Resolves registered camera ids to their endpoints for the runtime.
runtime::CameraResolver camera_resolver(std::shared_ptr<Store> store);

}  // namespace camgrid::registry
