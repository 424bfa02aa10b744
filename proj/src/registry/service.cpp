#include "camgrid/registry/service.hpp"

#include <cmath>

#include <httplib.h>

#include "camgrid/core/error.hpp"
#include "camgrid/core/serialize.hpp"
#include "camgrid/registry/cluster.hpp"

namespace camgrid::registry {

namespace {

constexpr const char* kJson = "application/json";

std::string_view content_type_for(FrameFormat f) {
    switch (f) {
        case FrameFormat::jpeg: return "image/jpeg";
        case FrameFormat::png: return "image/png";
        case FrameFormat::pgm: return "image/x-portable-graymap";
        case FrameFormat::unknown: break;
    }
    return "application/octet-stream";
}

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, const Error& e) {
    send_json(res, http_status_for(e.code()),
              {{"code", std::string(to_string(e.code()))},
               {"message", e.what()},
               {"details", e.details().is_null() ? nlohmann::json::object() : e.details()}});
    if (e.code() == ErrorCode::capacity && e.details().contains("retry_after_s")) {
        res.set_header("Retry-After", std::to_string(static_cast<long long>(
                                          std::ceil(e.details()["retry_after_s"].get<double>()))));
    }
}

// Query-string problems are malformed requests (400), not rejected entities.
template <typename F>
auto query_param(F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        throw Error(ErrorCode::invalid_argument, e.what(), e.details());
    }
}

std::optional<std::string> param(const httplib::Request& req, const char* name) {
    if (!req.has_param(name)) return std::nullopt;
    return req.get_param_value(name);
}

int int_param(const httplib::Request& req, const char* name, int fallback) {
    const auto v = param(req, name);
    if (!v) return fallback;
    try {
        std::size_t used = 0;
        const long long n = std::stoll(*v, &used);
        if (used != v->size() || n < INT32_MIN || n > INT32_MAX) throw std::invalid_argument(*v);
        return static_cast<int>(n);
    } catch (const std::logic_error&) {
        throw Error(ErrorCode::invalid_argument, std::string(name) + " must be an integer",
                    {{"field", name}, {"value", *v}});
    }
}

std::optional<discovery::Disposition> disposition_param(const std::optional<std::string>& v, const char* field) {
    if (!v) return std::nullopt;
    auto d = discovery::parse_disposition(*v);
    if (!d) throw Error(ErrorCode::invalid_argument, "unknown disposition " + *v, {{"field", field}, {"value", *v}});
    return d;
}

std::optional<Timestamp> time_param(const httplib::Request& req, const char* name) {
    const auto v = param(req, name);
    if (!v) return std::nullopt;
    auto t = parse_timestamp(*v);
    if (!t) throw Error(ErrorCode::invalid_argument, std::string(name) + " must be a timestamp", {{"field", name}, {"value", *v}});
    return t;
}

nlohmann::json parse_body(const httplib::Request& req) {
    try {
        return nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::parse, std::string("malformed JSON body: ") + e.what(), {{"byte", e.byte}});
    }
}

}  // namespace

int http_status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::parse:
        case ErrorCode::invalid_argument:
        case ErrorCode::config: return 400;
        case ErrorCode::validation: return 422;
        case ErrorCode::not_found: return 404;
        case ErrorCode::upstream:
        case ErrorCode::network:
        case ErrorCode::http_status:
        case ErrorCode::timeout:
        case ErrorCode::too_large:
        case ErrorCode::unknown_format:
        case ErrorCode::stream: return 502;
        case ErrorCode::capacity:
        case ErrorCode::storage: return 503;
        default: return 500;
    }
}

Service::Service(std::shared_ptr<Store> store, std::shared_ptr<runtime::Runtime> runtime,
                 std::shared_ptr<SnapshotCache> snapshots, ServiceOptions options)
    : store_(std::move(store)),
      runtime_(std::move(runtime)),
      snapshots_(std::move(snapshots)),
      options_(std::move(options)),
      server_(std::make_unique<httplib::Server>()) {
    if (!store_ || !runtime_ || !snapshots_) {
        throw Error(ErrorCode::invalid_argument, "service needs a store, a runtime and a snapshot cache");
    }
    install_routes();
}

Service::~Service() { stop(); }

std::string Service::base_url() const { return "http://" + options_.host + ":" + std::to_string(port_); }

void Service::start() {
    const auto threads = static_cast<std::size_t>(std::max(1, options_.threads));
    server_->new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
    server_->set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    if (options_.port == 0) {
        port_ = server_->bind_to_any_port(options_.host);
    } else {
        port_ = server_->bind_to_port(options_.host, options_.port) ? options_.port : -1;
    }
    if (port_ <= 0) {
        throw Error(ErrorCode::config, "cannot listen on " + options_.host + ":" + std::to_string(options_.port),
                    {{"host", options_.host}, {"port", options_.port}});
    }
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

void Service::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

void Service::install_routes() {
    auto& s = *server_;
    s.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    if (options_.access_log) {
        s.set_logger([log = options_.access_log](const httplib::Request& req, const httplib::Response& res) {
            log(req.method + " " + req.path + " " + std::to_string(res.status));
        });
    }
    s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const Error& e) {
            send_error(res, e);
        } catch (const std::exception& e) {
            send_error(res, Error(ErrorCode::internal, e.what()));
        } catch (...) {
            send_error(res, Error(ErrorCode::internal, "unknown failure"));
        }
    });
    s.Options(".*", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, DELETE, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });

    s.Get("/health", [](const httplib::Request&, httplib::Response& res) { send_json(res, 200, {{"status", "ok"}}); });

    s.Get("/cameras", [this](const httplib::Request& req, httplib::Response& res) {
        CameraFilter f;
        query_param([&] {
            if (auto b = param(req, "bbox")) f.bbox = parse_bbox(*b);
            f.country = param(req, "country");
            f.state = param(req, "state");
            f.city = param(req, "city");
            f.disposition = disposition_param(param(req, "disposition"), "disposition");
            f.limit = int_param(req, "limit", kDefaultLimit);
            f.offset = int_param(req, "offset", 0);
            f.validate();
            return 0;
        });
        send_json(res, 200, to_json(store_->query_cameras(f)));
    });

    s.Post("/cameras", [this](const httplib::Request& req, httplib::Response& res) {
        const auto d = query_param([&] { return disposition_param(param(req, "disposition"), "disposition"); });
        const auto body = parse_body(req);
        CameraRecord rec;
        from_json(body, rec);
        const auto stored = store_->upsert_camera(rec, d.value_or(discovery::Disposition::accepted));
        res.set_header("Location", "/cameras/" + stored.id);
        send_json(res, 201, stored);
    });

    s.Get(R"(/cameras/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        auto rec = store_->get_camera(id);
        if (!rec) throw Error(ErrorCode::not_found, "unknown camera " + id, {{"id", id}});
        send_json(res, 200, *rec);
    });

    s.Get(R"(/cameras/([^/]+)/disposition)", [this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        auto d = store_->disposition(id);
        if (!d) throw Error(ErrorCode::not_found, "unknown camera " + id, {{"id", id}});
        send_json(res, 200, {{"id", id}, {"disposition", discovery::to_string(*d)}});
    });

    s.Put(R"(/cameras/([^/]+)/disposition)", [this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        const auto body = parse_body(req);
        const auto text = json_detail::get_string(body, "disposition");
        const auto d = discovery::parse_disposition(text);
        if (!d) throw Error(ErrorCode::validation, "unknown disposition " + text, {{"field", "disposition"}});
        store_->set_disposition(id, *d);
        send_json(res, 200, {{"id", id}, {"disposition", discovery::to_string(*d)}});
    });

    s.Get(R"(/cameras/([^/]+)/snapshot)", [this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        auto rec = store_->get_camera(id);
        if (!rec) throw Error(ErrorCode::not_found, "unknown camera " + id, {{"id", id}});
        const auto frame = snapshots_->get(id, rec->endpoint);
        res.status = 200;
        res.set_header("X-Captured-At", format_timestamp(frame.captured_at));
        res.set_header("Cache-Control", "max-age=" + std::to_string(snapshots_->ttl().count() / 1000));
        res.set_content(reinterpret_cast<const char*>(frame.bytes.data()), frame.bytes.size(),
                        std::string(content_type_for(frame.format)));
    });

    s.Get("/clusters", [this](const httplib::Request& req, httplib::Response& res) {
        BBox bbox;
        int zoom = 0;
        query_param([&] {
            if (auto b = param(req, "bbox")) bbox = parse_bbox(*b);
            zoom = int_param(req, "zoom", 0);
            if (zoom < 0 || zoom > kMaxZoom) {
                throw Error(ErrorCode::invalid_argument, "zoom must be in [0, 20]", {{"field", "zoom"}, {"value", zoom}});
            }
            return 0;
        });
        auto out = nlohmann::json::array();
        for (const auto& c : cluster_markers(store_->located_cameras(bbox), zoom)) out.push_back(to_json(c));
        send_json(res, 200, out);
    });

    s.Get("/analyzers", [this](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"items", runtime_->analyzer_names()}});
    });

    s.Get("/jobs", [this](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"items", store_->job_ids()}});
    });

    s.Post("/jobs", [this](const httplib::Request& req, httplib::Response& res) {
        const auto request = runtime::parse_job_request(parse_body(req));
        const auto id = runtime_->submit(request);
        res.set_header("Location", "/jobs/" + id);
        send_json(res, 201, {{"id", id}});
    });

    s.Get(R"(/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 200, runtime::to_json(runtime_->job(req.matches[1])));
    });

    s.Delete(R"(/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        runtime_->cancel(id);
        send_json(res, 200, runtime::to_json(runtime_->job(id)));
    });

    s.Get(R"(/jobs/([^/]+)/results)", [this](const httplib::Request& req, httplib::Response& res) {
        runtime::PointFilter f;
        query_param([&] {
            f.camera_id = param(req, "camera_id");
            f.from = time_param(req, "from");
            f.to = time_param(req, "to");
            return 0;
        });
        send_json(res, 200, runtime::to_json(runtime_->results(req.matches[1], f)));
    });
}

}  // namespace camgrid::registry
