#include "camgrid/testbed/farm.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <cmath>

#include <httplib.h>

#include "camgrid/core/error.hpp"
#include "camgrid/core/hash.hpp"
#include "camgrid/core/serialize.hpp"
#include "camgrid/runtime/codec.hpp"

namespace camgrid::testbed {

namespace {

using SteadyClock = std::chrono::steady_clock;

constexpr const char* kTrackHeader = "X-Farm-Request";
constexpr const char* kDecoyPage =
    "<!DOCTYPE html><html><head><title>Welcome</title></head>"
    "<body><h1>It works!</h1><p>Default web page.</p></body></html>";

std::uint32_t parse_ipv4(const std::string& text) {
    in_addr addr{};
    if (inet_pton(AF_INET, text.c_str(), &addr) != 1) {
        throw Error(ErrorCode::config, "not an IPv4 address: " + text, {{"field", "address_base"}});
    }
    return ntohl(addr.s_addr);
}

std::string format_ipv4(std::uint32_t value) {
    in_addr addr{};
    addr.s_addr = htonl(value);
    char buf[INET_ADDRSTRLEN] = {};
    inet_ntop(AF_INET, &addr, buf, sizeof buf);
    return buf;
}

std::string as_string(const std::vector<std::uint8_t>& bytes) {
    return {reinterpret_cast<const char*>(bytes.data()), bytes.size()};
}

}  // namespace

const std::vector<BrandPaths>& brand_catalog() {
    static const std::vector<BrandPaths> catalog = {
        {"axis", "/axis-cgi/jpg/image.cgi", "/axis-cgi/mjpg/video.cgi",
         {"/axis-cgi/jpg/image.cgi", "/axis-cgi/mjpg/video.cgi", "/jpg/image.jpg", "/mjpg/video.mjpg"}},
        {"foscam", "/snapshot.cgi", "/videostream.cgi",
         {"/snapshot.cgi", "/videostream.cgi", "/tmpfs/auto.jpg", "/video.cgi"}},
        {"mobotix", "/record/current.jpg", "/cgi-bin/faststream.jpg",
         {"/record/current.jpg", "/cgi-bin/faststream.jpg", "/record/snapshot.jpg", "/control/faststream.jpg"}},
        {"panasonic", "/SnapshotJPEG", "/nphMotionJpeg",
         {"/SnapshotJPEG", "/nphMotionJpeg", "/cgi-bin/camera", "/nphMotionJpeg2"}},
    };
    return catalog;
}

const BrandPaths& brand_paths(const std::string& brand) {
    for (const auto& b : brand_catalog()) {
        if (b.brand == brand) return b;
    }
    throw Error(ErrorCode::config, "unknown testbed brand: " + brand, {{"field", "brand"}});
}

nlohmann::json brand_signatures_json() {
    auto out = nlohmann::json::array();
    for (const auto& b : brand_catalog()) {
        out.push_back({{"brand", b.brand},
                       {"paths", b.signature_paths},
                       {"expected_content_type_prefixes", {"image/", "multipart/x-mixed-replace"}}});
    }
    return out;
}

void to_json(nlohmann::json& j, const CameraSpec& s) {
    auto formats = nlohmann::json::array();
    if (s.serve_jpeg) formats.push_back("jpeg");
    if (s.serve_pgm) formats.push_back("pgm");
    j = {{"brand", s.brand},   {"mode", to_string(s.mode)},         {"fps", s.fps},
         {"scene", s.scene},   {"formats", formats},                {"jpeg_quality", s.jpeg_quality}};
}

void from_json(const nlohmann::json& j, CameraSpec& s) {
    using namespace json_detail;
    if (!j.is_object()) fail("cameras[]", "expected an object");
    s = CameraSpec{};
    if (j.contains("brand")) s.brand = get_string(j, "brand");
    (void)brand_paths(s.brand);
    if (j.contains("mode")) {
        const auto m = parse_retrieval_mode(get_string(j, "mode"));
        if (!m) fail("mode", "unknown retrieval mode");
        s.mode = *m;
    }
    if (j.contains("fps")) s.fps = get_number(j, "fps");
    if (!(s.fps > 0.0)) fail("fps", "must be positive");
    if (j.contains("scene")) {
        try {
            s.scene = member(j, "scene").get<SceneSpec>();
        } catch (const nlohmann::json::exception& e) {
            fail("scene", e.what());
        }
    }
    if (j.contains("formats")) {
        const auto& f = member(j, "formats");
        if (!f.is_array()) fail("formats", "expected an array");
        s.serve_jpeg = s.serve_pgm = false;
        for (const auto& v : f) {
            if (v == "jpeg") s.serve_jpeg = true;
            else if (v == "pgm") s.serve_pgm = true;
            else fail("formats", "expected jpeg or pgm");
        }
    }
    if (j.contains("jpeg_quality")) s.jpeg_quality = static_cast<int>(get_integer(j, "jpeg_quality"));
}

void to_json(nlohmann::json& j, const FarmSpec& s) {
    j = {{"address_base", s.address_base}, {"port", s.port}, {"cameras", s.cameras},
         {"decoys", s.decoys},             {"server_threads", s.server_threads}};
}

void from_json(const nlohmann::json& j, FarmSpec& s) {
    using namespace json_detail;
    if (!j.is_object()) fail("farm", "expected an object");
    s = FarmSpec{};
    if (j.contains("address_base")) s.address_base = get_string(j, "address_base");
    if (j.contains("port")) s.port = static_cast<int>(get_integer(j, "port"));
    if (j.contains("decoys")) s.decoys = static_cast<int>(get_integer(j, "decoys"));
    if (j.contains("server_threads")) s.server_threads = static_cast<int>(get_integer(j, "server_threads"));
    if (j.contains("cameras")) {
        const auto& c = member(j, "cameras");
        if (!c.is_array()) fail("cameras", "expected an array");
        for (const auto& v : c) s.cameras.push_back(v.get<CameraSpec>());
    }
}

std::string FarmCamera::base_url() const {
    return "http://" + host + ":" + std::to_string(port);
}

StreamEndpoint FarmCamera::brand_endpoint() const {
    const auto& b = brand_paths(brand);
    StreamEndpoint e;
    e.mode = mode;
    if (mode == RetrievalMode::mjpeg_stream) {
        e.url = base_url() + b.stream_path;
        e.declared_format = MediaFormat::mjpeg;
    } else {
        e.url = base_url() + b.snapshot_path;
        e.declared_format = MediaFormat::jpeg;
    }
    return e;
}

StreamEndpoint FarmCamera::pgm_endpoint() const {
    StreamEndpoint e;
    e.mode = mode;
    if (mode == RetrievalMode::mjpeg_stream) {
        e.url = base_url() + kPgmStreamPath;
        e.declared_format = MediaFormat::mjpeg;
    } else {
        e.url = base_url() + kPgmSnapshotPath;
    }
    return e;
}

Farm::Farm(FarmSpec spec) : spec_(std::move(spec)) {
    if (spec_.decoys < 0) throw Error(ErrorCode::config, "decoys must be non-negative", {{"field", "decoys"}});
    if (spec_.server_threads < 1) spec_.server_threads = 1;
    const auto base = parse_ipv4(spec_.address_base);
    const auto total = spec_.cameras.size() + static_cast<std::size_t>(spec_.decoys);
    if ((base >> 24) != 127 || (base & 0xFFFFFFu) + total >= 0xFFFFFFu) {
        throw Error(ErrorCode::config, "farm addresses must stay inside 127.0.0.0/8",
                    {{"field", "address_base"}, {"hosts", total}});
    }
    std::uint32_t next = base + 1;
    for (std::size_t i = 0; i < spec_.cameras.size(); ++i) {
        const auto& cs = spec_.cameras[i];
        (void)brand_paths(cs.brand);
        if (!(cs.fps > 0.0)) throw Error(ErrorCode::config, "camera fps must be positive", {{"camera", i}});
        auto st = std::make_unique<CameraState>();
        st->scene = std::make_unique<Scene>(cs.scene);
        states_.push_back(std::move(st));
        FarmCamera fc;
        fc.index = i;
        fc.brand = cs.brand;
        fc.host = format_ipv4(next++);
        fc.mode = cs.mode;
        fc.fps = cs.fps;
        cameras_.push_back(fc);
    }
    for (int i = 0; i < spec_.decoys; ++i) decoy_hosts_.push_back(format_ipv4(next++));
    epoch_ = SteadyClock::now();
    start_listeners();
    for (auto& c : cameras_) c.port = port_;
}

Farm::~Farm() { stop(); }

void Farm::start_listeners() {
    const int attempts = spec_.port == 0 ? 8 : 1;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        int port = spec_.port;
        bool ok = true;
        std::vector<Listener> bound;
        auto bind_one = [&](const std::string& host, auto&& install) {
            Listener l;
            l.host = host;
            l.server = std::make_unique<httplib::Server>();
            const auto threads = static_cast<std::size_t>(spec_.server_threads);
            l.server->new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
            l.server->set_keep_alive_max_count(1);
            // httplib defaults to SO_REUSEPORT, which would let two farms share a port.
            l.server->set_socket_options([](socket_t sock) {
                int yes = 1;
                setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
            });
            install_tracking(*l.server, host);
            install(*l.server);
            if (port == 0) {
                port = l.server->bind_to_any_port(host);
                if (port <= 0) return false;
            } else if (!l.server->bind_to_port(host, port)) {
                return false;
            }
            bound.push_back(std::move(l));
            return true;
        };
        for (std::size_t i = 0; ok && i < cameras_.size(); ++i) {
            ok = bind_one(cameras_[i].host, [&](httplib::Server& s) { install_camera(s, i); });
        }
        for (std::size_t i = 0; ok && i < decoy_hosts_.size(); ++i) {
            ok = bind_one(decoy_hosts_[i], [&](httplib::Server& s) { install_decoy(s); });
        }
        if (!ok) continue;
        port_ = port;
        for (auto& l : bound) {
            auto* server = l.server.get();
            l.thread = std::thread([server] { server->listen_after_bind(); });
            server->wait_until_ready();
        }
        listeners_ = std::move(bound);
        return;
    }
    throw Error(ErrorCode::capacity, "could not bind every farm listener",
                {{"port", spec_.port}, {"hosts", cameras_.size() + decoy_hosts_.size()}});
}

void Farm::install_tracking(httplib::Server& server, const std::string& host) {
    server.set_pre_routing_handler([this, host](const httplib::Request& req, httplib::Response& res) {
        const int now = ++in_flight_;
        int prev = max_in_flight_.load();
        while (now > prev && !max_in_flight_.compare_exchange_weak(prev, now)) {
        }
        res.set_header(kTrackHeader, "1");
        {
            std::lock_guard lock(log_mu_);
            log_.push_back({SteadyClock::now(), now_utc(), host, req.path});
        }
        return httplib::Server::HandlerResponse::Unhandled;
    });
    server.set_logger([this](const httplib::Request&, const httplib::Response& res) {
        if (res.has_header(kTrackHeader)) --in_flight_;
    });
}

void Farm::install_camera(httplib::Server& server, std::size_t index) {
    const auto& cs = spec_.cameras[index];
    const auto& paths = brand_paths(cs.brand);
    const bool stream = cs.mode == RetrievalMode::mjpeg_stream;

    auto snapshot = [this, index](bool pgm) {
        return [this, index, pgm](const httplib::Request&, httplib::Response& res) {
            const auto seq = current_seq(index);
            const auto bytes = payload(index, seq, pgm);
            record_sent(index, seq, *bytes, pgm);
            res.set_content(as_string(*bytes), pgm ? "image/x-portable-graymap" : "image/jpeg");
        };
    };

    auto mjpeg = [this, index](bool pgm) {
        return [this, index, pgm](const httplib::Request&, httplib::Response& res) {
            const double fps = spec_.cameras[index].fps;
            const std::string type = pgm ? "image/x-portable-graymap" : "image/jpeg";
            auto next = std::make_shared<std::uint64_t>(current_seq(index) + 1);
            res.set_content_provider(
                std::string("multipart/x-mixed-replace; boundary=") + kStreamBoundary,
                [this, index, pgm, fps, type, next](std::size_t, httplib::DataSink& sink) {
                    auto due = epoch_ + std::chrono::duration_cast<SteadyClock::duration>(
                                            std::chrono::duration<double>(static_cast<double>(*next) / fps));
                    // Fell more than a period behind: resume on the live schedule.
                    if (SteadyClock::now() - due > std::chrono::duration<double>(1.0 / fps)) {
                        *next = current_seq(index) + 1;
                        due = epoch_ + std::chrono::duration_cast<SteadyClock::duration>(
                                           std::chrono::duration<double>(static_cast<double>(*next) / fps));
                    }
                    if (!sleep_until(due)) {
                        sink.done();
                        return true;
                    }
                    const auto seq = (*next)++;
                    const auto bytes = payload(index, seq, pgm);
                    std::string part = "--";
                    part += kStreamBoundary;
                    part += "\r\nContent-Type: " + type + "\r\nContent-Length: " + std::to_string(bytes->size()) +
                            "\r\n\r\n";
                    part += as_string(*bytes);
                    part += "\r\n";
                    if (!sink.write(part.data(), part.size())) return false;
                    record_sent(index, seq, *bytes, pgm);
                    return true;
                });
        };
    };

    if (cs.serve_jpeg) {
        if (stream) server.Get(paths.stream_path, mjpeg(false));
        else server.Get(paths.snapshot_path, snapshot(false));
    }
    if (cs.serve_pgm) {
        if (stream) server.Get(kPgmStreamPath, mjpeg(true));
        else server.Get(kPgmSnapshotPath, snapshot(true));
    }
}

void Farm::install_decoy(httplib::Server& server) {
    server.Get(".*", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(kDecoyPage, "text/html; charset=utf-8");
    });
}

double Farm::elapsed_s() const {
    return std::chrono::duration<double>(SteadyClock::now() - epoch_).count();
}

std::uint64_t Farm::current_seq(std::size_t camera) const {
    return static_cast<std::uint64_t>(std::floor(elapsed_s() * spec_.cameras.at(camera).fps));
}

const Scene& Farm::scene(std::size_t camera) const { return *states_.at(camera)->scene; }

SceneTruth Farm::truth(std::size_t camera, std::uint64_t seq) const { return scene(camera).truth(seq); }

std::shared_ptr<const std::vector<std::uint8_t>> Farm::payload(std::size_t camera, std::uint64_t seq, bool pgm) {
    auto& st = *states_.at(camera);
    const bool still = st.scene->spec().kind == SceneKind::static_image;
    if (still) seq = 0;
    {
        std::lock_guard lock(st.mu);
        const auto& cached = pgm ? st.pgm : st.jpeg;
        if (cached.seq == seq && cached.bytes) return cached.bytes;
    }
    const auto raster = st.scene->render(seq);
    std::shared_ptr<const std::vector<std::uint8_t>> bytes;
    if (pgm) {
        bytes = std::make_shared<const std::vector<std::uint8_t>>(
            runtime::encode_pgm(raster, still ? std::string() : "seq " + std::to_string(seq)));
    } else {
        bytes = std::make_shared<const std::vector<std::uint8_t>>(
            runtime::encode_jpeg(raster, spec_.cameras[camera].jpeg_quality));
    }
    std::lock_guard lock(st.mu);
    auto& slot = pgm ? st.pgm : st.jpeg;
    slot.seq = seq;
    slot.bytes = bytes;
    return bytes;
}

void Farm::record_sent(std::size_t camera, std::uint64_t seq, const std::vector<std::uint8_t>& bytes, bool pgm) {
    SentFrame f{seq, fnv1a64(bytes), pgm ? FrameFormat::pgm : FrameFormat::jpeg, SteadyClock::now()};
    auto& st = *states_.at(camera);
    std::lock_guard lock(st.mu);
    st.sent.push_back(f);
}

bool Farm::sleep_until(SteadyClock::time_point t) {
    std::unique_lock lock(stop_mu_);
    stop_cv_.wait_until(lock, t, [this] { return stopping_.load(); });
    return !stopping_.load();
}

void Farm::stop() {
    {
        std::lock_guard lock(stop_mu_);
        if (stopped_) return;
        stopped_ = true;
        stopping_ = true;
    }
    stop_cv_.notify_all();
    for (auto& l : listeners_) l.server->stop();
    for (auto& l : listeners_) {
        if (l.thread.joinable()) l.thread.join();
    }
}

std::vector<RequestRecord> Farm::request_log() const {
    std::lock_guard lock(log_mu_);
    return log_;
}

std::size_t Farm::count_requests(const std::string& host, const std::string& path) const {
    std::lock_guard lock(log_mu_);
    return static_cast<std::size_t>(std::count_if(
        log_.begin(), log_.end(), [&](const RequestRecord& r) { return r.host == host && r.path == path; }));
}

std::vector<SentFrame> Farm::sent_frames(std::size_t camera) const {
    auto& st = *states_.at(camera);
    std::lock_guard lock(st.mu);
    return st.sent;
}

void Farm::reset_counters() {
    {
        std::lock_guard lock(log_mu_);
        log_.clear();
    }
    max_in_flight_ = in_flight_.load();
}

nlohmann::json Farm::describe() const {
    auto cams = nlohmann::json::array();
    for (const auto& c : cameras_) {
        cams.push_back({{"index", c.index},
                        {"brand", c.brand},
                        {"host", c.host},
                        {"mode", to_string(c.mode)},
                        {"fps", c.fps},
                        {"url", spec_.cameras[c.index].serve_jpeg ? nlohmann::json(c.brand_endpoint().url)
                                                                   : nlohmann::json(nullptr)},
                        {"pgm_url", spec_.cameras[c.index].serve_pgm ? nlohmann::json(c.pgm_endpoint().url)
                                                                      : nlohmann::json(nullptr)},
                        {"scene", spec_.cameras[c.index].scene}});
    }
    return {{"port", port_}, {"cameras", cams}, {"decoys", decoy_hosts_}};
}

}  // namespace camgrid::testbed
