#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <string>
#include <thread>

#include "camgrid/registry/snapshot_cache.hpp"
#include "camgrid/registry/store.hpp"
#include "camgrid/runtime/runtime.hpp"

namespace httplib {
class Server;
}

namespace camgrid::registry {

struct ServiceOptions {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    int threads = 8;
    // One line per request ("METHOD path status"); empty disables.
    std::function<void(const std::string&)> access_log;
};

// HTTP status for an error code: parse/invalid_argument 400, validation 422,
// not_found 404, upstream-class 502, capacity/storage 503, else 500.
int http_status_for(ErrorCode code);

// REST surface over a registry store, a snapshot cache and a runtime:
//
//   GET    /health
//   GET    /cameras?bbox=&country=&state=&city=&disposition=&limit=&offset=
//   POST   /cameras[?disposition=]
//   GET    /cameras/{id}
//   GET    /cameras/{id}/disposition    PUT with {"disposition": ...}
//   GET    /cameras/{id}/snapshot
//   GET    /clusters?bbox=&zoom=
//   GET    /analyzers
//   GET    /jobs                         POST /jobs
//   GET    /jobs/{id}                    DELETE /jobs/{id}
//   GET    /jobs/{id}/results?camera_id=&from=&to=
//
// Errors are {code, message, details}.
class Service {
public:
    Service(std::shared_ptr<Store> store, std::shared_ptr<runtime::Runtime> runtime,
            std::shared_ptr<SnapshotCache> snapshots, ServiceOptions options = {});
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Binds and serves on a background thread. Throws Error(config) when the
    // address cannot be bound.
    void start();
    // Idempotent.
    void stop();

    [[nodiscard]] int port() const noexcept { return port_; }
    [[nodiscard]] std::string base_url() const;

private:
    void install_routes();

    std::shared_ptr<Store> store_;
    std::shared_ptr<runtime::Runtime> runtime_;
    std::shared_ptr<SnapshotCache> snapshots_;
    ServiceOptions options_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace camgrid::registry
