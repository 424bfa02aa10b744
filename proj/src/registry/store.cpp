#include "camgrid/registry/store.hpp"

#include <mutex>
#include <variant>

#include <sqlite3.h>

#include "camgrid/core/error.hpp"
#include "camgrid/core/serialize.hpp"
#include "camgrid/core/validate.hpp"

namespace camgrid::registry {

namespace {

[[noreturn]] void storage_error(sqlite3* db, int rc, const std::string& what) {
    const std::string msg = db ? sqlite3_errmsg(db) : sqlite3_errstr(rc);
    throw Error(ErrorCode::storage, what + ": " + msg, {{"sqlite_code", rc}, {"retriable", true}});
}

void exec(sqlite3* db, const char* sql) {
    char* err = nullptr;
    const int rc = sqlite3_exec(db, sql, nullptr, nullptr, &err);
    if (rc != SQLITE_OK) {
        const std::string msg = err ? err : sqlite3_errstr(rc);
        sqlite3_free(err);
        throw Error(ErrorCode::storage, std::string("sqlite: ") + msg, {{"sqlite_code", rc}, {"retriable", true}});
    }
}

class Stmt {
public:
    Stmt(sqlite3* db, const std::string& sql) : db_(db) {
        const int rc = sqlite3_prepare_v2(db, sql.c_str(), static_cast<int>(sql.size()), &stmt_, nullptr);
        if (rc != SQLITE_OK) storage_error(db, rc, "prepare");
    }
    ~Stmt() { sqlite3_finalize(stmt_); }
    Stmt(const Stmt&) = delete;
    Stmt& operator=(const Stmt&) = delete;

    Stmt& bind(int i, const std::string& v) {
        check(sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT));
        return *this;
    }
    Stmt& bind(int i, const std::optional<std::string>& v) {
        if (v) return bind(i, *v);
        check(sqlite3_bind_null(stmt_, i));
        return *this;
    }
    Stmt& bind(int i, double v) {
        check(sqlite3_bind_double(stmt_, i, v));
        return *this;
    }
    Stmt& bind(int i, std::optional<double> v) {
        if (v) return bind(i, *v);
        check(sqlite3_bind_null(stmt_, i));
        return *this;
    }
    Stmt& bind(int i, std::int64_t v) {
        check(sqlite3_bind_int64(stmt_, i, v));
        return *this;
    }

    // True while rows remain.
    bool step() {
        const int rc = sqlite3_step(stmt_);
        if (rc == SQLITE_ROW) return true;
        if (rc == SQLITE_DONE) return false;
        storage_error(db_, rc, "step");
    }
    void run() {
        while (step()) {
        }
    }
    void reset() {
        sqlite3_reset(stmt_);
        sqlite3_clear_bindings(stmt_);
    }

    [[nodiscard]] std::string text(int col) const {
        const auto* p = sqlite3_column_text(stmt_, col);
        return p ? std::string(reinterpret_cast<const char*>(p), sqlite3_column_bytes(stmt_, col)) : std::string();
    }
    [[nodiscard]] double real(int col) const { return sqlite3_column_double(stmt_, col); }
    [[nodiscard]] std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }
    [[nodiscard]] bool is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }

private:
    void check(int rc) {
        if (rc != SQLITE_OK) storage_error(db_, rc, "bind");
    }
    sqlite3* db_;
    sqlite3_stmt* stmt_ = nullptr;
};

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS cameras(
  id TEXT PRIMARY KEY,
  lat REAL,
  lon REAL,
  country TEXT,
  state TEXT,
  city TEXT,
  disposition TEXT NOT NULL,
  record TEXT NOT NULL);
CREATE INDEX IF NOT EXISTS cameras_lat_lon ON cameras(lat, lon);
CREATE INDEX IF NOT EXISTS cameras_country ON cameras(country);
CREATE INDEX IF NOT EXISTS cameras_state ON cameras(state);
CREATE INDEX IF NOT EXISTS cameras_city ON cameras(city);
CREATE TABLE IF NOT EXISTS jobs(
  id TEXT PRIMARY KEY,
  created INTEGER NOT NULL,
  body TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS points(
  job_id TEXT NOT NULL,
  camera_id TEXT NOT NULL,
  seq INTEGER NOT NULL,
  ts INTEGER NOT NULL,
  value TEXT NOT NULL,
  PRIMARY KEY(job_id, camera_id, seq)) WITHOUT ROWID;
)sql";

constexpr const char* kUpsert = R"sql(
INSERT INTO cameras(id, lat, lon, country, state, city, disposition, record)
VALUES(?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8)
ON CONFLICT(id) DO UPDATE SET lat = excluded.lat, lon = excluded.lon, country = excluded.country,
  state = excluded.state, city = excluded.city, disposition = excluded.disposition, record = excluded.record
)sql";

void check_record(const CameraRecord& rec, std::optional<std::size_t> index) {
    const auto violations = validate_camera_record(rec);
    if (violations.empty()) return;
    nlohmann::json details{{"violations", violations_json(violations)}, {"id", rec.id}};
    if (index) details["index"] = *index;
    throw Error(ErrorCode::validation, "invalid camera record", details);
}

void bind_record(Stmt& s, const CameraRecord& rec, discovery::Disposition d) {
    const auto& p = rec.location.point;
    s.bind(1, rec.id)
        .bind(2, p ? std::optional<double>(p->latitude) : std::nullopt)
        .bind(3, p ? std::optional<double>(p->longitude) : std::nullopt)
        .bind(4, rec.location.country)
        .bind(5, rec.location.state)
        .bind(6, rec.location.city)
        .bind(7, discovery::to_string(d))
        .bind(8, canonical_json(rec));
}

// WHERE clause plus its bound values, in order.
struct Where {
    std::string sql;
    std::vector<std::variant<std::string, double>> args;

    void add(const std::string& clause) { sql += (sql.empty() ? " WHERE " : " AND ") + clause; }
    void bind_to(Stmt& s, int first = 1) const {
        int i = first;
        for (const auto& a : args) {
            if (const auto* str = std::get_if<std::string>(&a)) s.bind(i++, *str);
            else s.bind(i++, std::get<double>(a));
        }
    }
};

void add_bbox(Where& w, const BBox& bbox) {
    std::string lon_clause;
    w.args.emplace_back(bbox.min_lat);
    w.args.emplace_back(bbox.max_lat);
    for (const auto& part : bbox.split()) {
        lon_clause += std::string(lon_clause.empty() ? "" : " OR ") + "lon BETWEEN ? AND ?";
        w.args.emplace_back(part.min_lon);
        w.args.emplace_back(part.max_lon);
    }
    w.add("lat IS NOT NULL AND lat BETWEEN ? AND ? AND (" + lon_clause + ")");
}

}  // namespace

struct Store::Impl {
    std::string path;
    bool memory = false;
    sqlite3* writer = nullptr;
    std::mutex write_mu;
    std::mutex pool_mu;
    std::vector<sqlite3*> readers;

    static sqlite3* open(const std::string& path, bool read_only) {
        sqlite3* db = nullptr;
        const int flags = (read_only ? SQLITE_OPEN_READONLY : SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE) |
                          SQLITE_OPEN_NOMUTEX;
        const int rc = sqlite3_open_v2(path.c_str(), &db, flags, nullptr);
        if (rc != SQLITE_OK) {
            const std::string msg = db ? sqlite3_errmsg(db) : sqlite3_errstr(rc);
            sqlite3_close(db);
            throw Error(ErrorCode::storage, "cannot open database " + path + ": " + msg,
                        {{"path", path}, {"sqlite_code", rc}, {"retriable", true}});
        }
        sqlite3_busy_timeout(db, 5000);
        return db;
    }

    template <typename F>
    auto write(F&& f) {
        std::lock_guard lock(write_mu);
        return f(writer);
    }

    template <typename F>
    auto read(F&& f) {
        if (memory) return write(std::forward<F>(f));
        sqlite3* db = nullptr;
        {
            std::lock_guard lock(pool_mu);
            if (!readers.empty()) {
                db = readers.back();
                readers.pop_back();
            }
        }
        if (!db) db = open(path, true);
        struct Return {
            Impl* self;
            sqlite3* db;
            ~Return() {
                std::lock_guard lock(self->pool_mu);
                self->readers.push_back(db);
            }
        } give_back{this, db};
        return f(db);
    }
};

Store::Store(const std::string& path) : impl_(std::make_unique<Impl>()) {
    impl_->path = path;
    impl_->memory = path == ":memory:" || path.empty();
    impl_->writer = Impl::open(impl_->memory ? ":memory:" : path, false);
    try {
        if (!impl_->memory) {
            exec(impl_->writer, "PRAGMA journal_mode=WAL");
            exec(impl_->writer, "PRAGMA synchronous=FULL");
        }
        exec(impl_->writer, kSchema);
    } catch (...) {
        sqlite3_close(impl_->writer);
        throw;
    }
}

Store::~Store() {
    for (auto* db : impl_->readers) sqlite3_close(db);
    sqlite3_close(impl_->writer);
}

const std::string& Store::path() const noexcept { return impl_->path; }

CameraRecord Store::upsert_camera(const CameraRecord& rec, discovery::Disposition disposition) {
    check_record(rec, std::nullopt);
    impl_->write([&](sqlite3* db) {
        Stmt s(db, kUpsert);
        bind_record(s, rec, disposition);
        s.run();
    });
    return rec;
}

void Store::upsert_many(const std::vector<CameraRecord>& recs, discovery::Disposition disposition) {
    for (std::size_t i = 0; i < recs.size(); ++i) check_record(recs[i], i);
    impl_->write([&](sqlite3* db) {
        exec(db, "BEGIN IMMEDIATE");
        try {
            Stmt s(db, kUpsert);
            for (const auto& rec : recs) {
                bind_record(s, rec, disposition);
                s.run();
                s.reset();
            }
            exec(db, "COMMIT");
        } catch (...) {
            sqlite3_exec(db, "ROLLBACK", nullptr, nullptr, nullptr);
            throw;
        }
    });
}

std::optional<CameraRecord> Store::get_camera(const std::string& id) {
    return impl_->read([&](sqlite3* db) -> std::optional<CameraRecord> {
        Stmt s(db, "SELECT record FROM cameras WHERE id = ?1");
        s.bind(1, id);
        if (!s.step()) return std::nullopt;
        return parse_camera_record(s.text(0));
    });
}

std::optional<discovery::Disposition> Store::disposition(const std::string& id) {
    return impl_->read([&](sqlite3* db) -> std::optional<discovery::Disposition> {
        Stmt s(db, "SELECT disposition FROM cameras WHERE id = ?1");
        s.bind(1, id);
        if (!s.step()) return std::nullopt;
        return discovery::parse_disposition(s.text(0));
    });
}

void Store::set_disposition(const std::string& id, discovery::Disposition disposition) {
    const int changed = impl_->write([&](sqlite3* db) {
        Stmt s(db, "UPDATE cameras SET disposition = ?2 WHERE id = ?1");
        s.bind(1, id).bind(2, discovery::to_string(disposition));
        s.run();
        return sqlite3_changes(db);
    });
    if (changed == 0) throw Error(ErrorCode::not_found, "unknown camera " + id, {{"id", id}});
}

CameraPage Store::query_cameras(const CameraFilter& filter) {
    filter.validate();
    Where w;
    if (filter.bbox) add_bbox(w, *filter.bbox);
    if (filter.country) {
        w.add("country = ?");
        w.args.emplace_back(*filter.country);
    }
    if (filter.state) {
        w.add("state = ?");
        w.args.emplace_back(*filter.state);
    }
    if (filter.city) {
        w.add("city = ?");
        w.args.emplace_back(*filter.city);
    }
    if (filter.disposition) {
        w.add("disposition = ?");
        w.args.emplace_back(discovery::to_string(*filter.disposition));
    }
    return impl_->read([&](sqlite3* db) {
        CameraPage page;
        {
            Stmt s(db, "SELECT COUNT(*) FROM cameras" + w.sql);
            w.bind_to(s);
            s.step();
            page.total = s.integer(0);
        }
        Stmt s(db, "SELECT record FROM cameras" + w.sql + " ORDER BY id LIMIT ? OFFSET ?");
        w.bind_to(s);
        const int n = static_cast<int>(w.args.size());
        s.bind(n + 1, static_cast<std::int64_t>(filter.limit)).bind(n + 2, static_cast<std::int64_t>(filter.offset));
        while (s.step()) page.items.push_back(parse_camera_record(s.text(0)));
        return page;
    });
}

std::int64_t Store::count_cameras() {
    return impl_->read([](sqlite3* db) {
        Stmt s(db, "SELECT COUNT(*) FROM cameras");
        s.step();
        return s.integer(0);
    });
}

std::vector<LocatedCamera> Store::located_cameras(const BBox& bbox) {
    bbox.validate();
    Where w;
    add_bbox(w, bbox);
    return impl_->read([&](sqlite3* db) {
        std::vector<LocatedCamera> out;
        Stmt s(db, "SELECT id, lat, lon FROM cameras" + w.sql);
        w.bind_to(s);
        while (s.step()) out.push_back({s.text(0), {s.real(1), s.real(2)}});
        return out;
    });
}

void Store::save_job(const runtime::AnalysisJob& job) {
    impl_->write([&](sqlite3* db) {
        Stmt s(db,
               "INSERT INTO jobs(id, created, body) VALUES(?1, ?2, ?3) "
               "ON CONFLICT(id) DO UPDATE SET body = excluded.body");
        s.bind(1, job.id).bind(2, static_cast<std::int64_t>(to_millis(job.created_at))).bind(3, runtime::to_json(job).dump());
        s.run();
    });
}

void Store::append_points(const std::string& job_id, const std::vector<runtime::ResultPoint>& points) {
    if (points.empty()) return;
    impl_->write([&](sqlite3* db) {
        exec(db, "BEGIN IMMEDIATE");
        try {
            Stmt s(db, "INSERT OR REPLACE INTO points(job_id, camera_id, seq, ts, value) VALUES(?1, ?2, ?3, ?4, ?5)");
            for (const auto& p : points) {
                s.bind(1, job_id)
                    .bind(2, p.camera_id)
                    .bind(3, static_cast<std::int64_t>(p.seq))
                    .bind(4, static_cast<std::int64_t>(to_millis(p.timestamp)))
                    .bind(5, p.value.dump());
                s.run();
                s.reset();
            }
            exec(db, "COMMIT");
        } catch (...) {
            sqlite3_exec(db, "ROLLBACK", nullptr, nullptr, nullptr);
            throw;
        }
    });
}

std::optional<runtime::AnalysisJob> Store::load_job(const std::string& id) {
    return impl_->read([&](sqlite3* db) -> std::optional<runtime::AnalysisJob> {
        Stmt s(db, "SELECT body FROM jobs WHERE id = ?1");
        s.bind(1, id);
        if (!s.step()) return std::nullopt;
        return runtime::job_from_json(nlohmann::json::parse(s.text(0)));
    });
}

std::vector<runtime::ResultPoint> Store::load_points(const std::string& job_id, const runtime::PointFilter& filter) {
    std::string sql = "SELECT camera_id, seq, ts, value FROM points WHERE job_id = ?1";
    if (filter.camera_id) sql += " AND camera_id = ?2";
    if (filter.from) sql += " AND ts >= ?3";
    if (filter.to) sql += " AND ts <= ?4";
    sql += " ORDER BY camera_id, seq";
    return impl_->read([&](sqlite3* db) {
        Stmt s(db, sql);
        s.bind(1, job_id);
        if (filter.camera_id) s.bind(2, *filter.camera_id);
        if (filter.from) s.bind(3, static_cast<std::int64_t>(to_millis(*filter.from)));
        if (filter.to) s.bind(4, static_cast<std::int64_t>(to_millis(*filter.to)));
        std::vector<runtime::ResultPoint> out;
        while (s.step()) {
            out.push_back({s.text(0), static_cast<std::uint64_t>(s.integer(1)), from_millis(s.integer(2)),
                           nlohmann::json::parse(s.text(3))});
        }
        return out;
    });
}

std::vector<std::string> Store::job_ids() {
    return impl_->read([](sqlite3* db) {
        Stmt s(db, "SELECT id FROM jobs ORDER BY created, id");
        std::vector<std::string> out;
        while (s.step()) out.push_back(s.text(0));
        return out;
    });
}

runtime::CameraResolver camera_resolver(std::shared_ptr<Store> store) {
    return [store = std::move(store)](const std::string& id) -> std::optional<StreamEndpoint> {
        auto rec = store->get_camera(id);
        if (!rec) return std::nullopt;
        return rec->endpoint;
    };
}

}  // namespace camgrid::registry
