#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "camgrid/core/types.hpp"
#include "camgrid/testbed/scene.hpp"

namespace httplib {
class Server;
}

namespace camgrid::testbed {

// Paths an emulated brand answers on. signature_paths is what a scanner
// should try, in order; only snapshot_path and stream_path are served.
struct BrandPaths {
    std::string brand;
    std::string snapshot_path;
    std::string stream_path;
    std::vector<std::string> signature_paths;
};

const std::vector<BrandPaths>& brand_catalog();
const BrandPaths& brand_paths(const std::string& brand);

// Signature file contents matching the emulated brands:
// [{brand, paths, expected_content_type_prefixes}, ...]
nlohmann::json brand_signatures_json();

inline constexpr const char* kPgmSnapshotPath = "/testbed/frame.pgm";
inline constexpr const char* kPgmStreamPath = "/testbed/stream.pgm";
inline constexpr const char* kStreamBoundary = "camgridframe";

struct CameraSpec {
    std::string brand = "axis";
    RetrievalMode mode = RetrievalMode::snapshot_poll;
    double fps = 10.0;
    SceneSpec scene{};
    bool serve_jpeg = true;  // on the brand path
    bool serve_pgm = true;   // on the /testbed paths
    int jpeg_quality = 85;
};

struct FarmSpec {
    std::string address_base = "127.0.10.0";  // hosts are base+1, base+2, ...
    int port = 0;                             // 0 picks a free port shared by every host
    std::vector<CameraSpec> cameras;
    int decoys = 0;  // HTML servers answering 200 on every path
    int server_threads = 4;
};

void to_json(nlohmann::json& j, const CameraSpec& s);
void from_json(const nlohmann::json& j, CameraSpec& s);
void to_json(nlohmann::json& j, const FarmSpec& s);
void from_json(const nlohmann::json& j, FarmSpec& s);

struct FarmCamera {
    std::size_t index = 0;
    std::string brand;
    std::string host;
    int port = 0;
    RetrievalMode mode = RetrievalMode::snapshot_poll;
    double fps = 0.0;

    [[nodiscard]] std::string base_url() const;
    // Brand path for the camera's mode, JPEG payloads.
    [[nodiscard]] StreamEndpoint brand_endpoint() const;
    // /testbed path for the camera's mode, PGM payloads carrying "seq N".
    [[nodiscard]] StreamEndpoint pgm_endpoint() const;
};

struct RequestRecord {
    std::chrono::steady_clock::time_point at;
    Timestamp wall;
    std::string host;
    std::string path;
};

struct SentFrame {
    std::uint64_t seq = 0;
    std::uint64_t hash = 0;  // fnv1a64 of the payload
    FrameFormat format = FrameFormat::unknown;
    std::chrono::steady_clock::time_point at;
};

// A running camera farm. Every camera and decoy is its own HTTP server on a
// distinct loopback address. Scene time starts at spawn; the frame on show
// at time t is seq = floor(t * fps). MJPEG parts go out on that same
// absolute schedule.
class Farm {
public:
    explicit Farm(FarmSpec spec);
    ~Farm();
    Farm(const Farm&) = delete;
    Farm& operator=(const Farm&) = delete;

    // Idempotent. After return every listener refuses connections.
    void stop();

    [[nodiscard]] int port() const noexcept { return port_; }
    [[nodiscard]] const FarmSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] const std::vector<FarmCamera>& cameras() const noexcept { return cameras_; }
    [[nodiscard]] const std::vector<std::string>& decoy_hosts() const noexcept { return decoy_hosts_; }

    [[nodiscard]] SceneTruth truth(std::size_t camera, std::uint64_t seq) const;
    [[nodiscard]] const Scene& scene(std::size_t camera) const;
    [[nodiscard]] std::uint64_t current_seq(std::size_t camera) const;

    [[nodiscard]] std::vector<RequestRecord> request_log() const;
    [[nodiscard]] std::size_t count_requests(const std::string& host, const std::string& path) const;
    [[nodiscard]] std::vector<SentFrame> sent_frames(std::size_t camera) const;
    [[nodiscard]] int max_in_flight() const noexcept { return max_in_flight_.load(); }
    [[nodiscard]] int in_flight() const noexcept { return in_flight_.load(); }
    void reset_counters();

    // Endpoint description written by `testbed up`.
    [[nodiscard]] nlohmann::json describe() const;

private:
    struct Encoded {
        std::uint64_t seq = ~0ULL;
        std::shared_ptr<const std::vector<std::uint8_t>> bytes;
    };
    struct CameraState {
        std::unique_ptr<Scene> scene;
        std::mutex mu;
        Encoded jpeg;
        Encoded pgm;
        std::vector<SentFrame> sent;
    };
    struct Listener {
        std::string host;
        std::unique_ptr<httplib::Server> server;
        std::thread thread;
    };

    void start_listeners();
    void install_camera(httplib::Server& server, std::size_t index);
    void install_decoy(httplib::Server& server);
    void install_tracking(httplib::Server& server, const std::string& host);
    std::shared_ptr<const std::vector<std::uint8_t>> payload(std::size_t camera, std::uint64_t seq, bool pgm);
    void record_sent(std::size_t camera, std::uint64_t seq, const std::vector<std::uint8_t>& bytes, bool pgm);
    [[nodiscard]] double elapsed_s() const;
    bool sleep_until(std::chrono::steady_clock::time_point t);

    FarmSpec spec_;
    int port_ = 0;
    std::chrono::steady_clock::time_point epoch_;
    std::vector<FarmCamera> cameras_;
    std::vector<std::string> decoy_hosts_;
    std::vector<std::unique_ptr<CameraState>> states_;
    std::vector<Listener> listeners_;

    mutable std::mutex log_mu_;
    std::vector<RequestRecord> log_;
    std::atomic<int> in_flight_{0};
    std::atomic<int> max_in_flight_{0};

    std::mutex stop_mu_;
    std::condition_variable stop_cv_;
    std::atomic<bool> stopping_{false};
    bool stopped_ = false;
};

}  // namespace camgrid::testbed
