#include <doctest.h>

#include <atomic>
#include <map>
#include <set>
#include <thread>

#include <httplib.h>

#include "camgrid/core/error.hpp"
#include "camgrid/core/hash.hpp"
#include "camgrid/ingestion/format.hpp"
#include "camgrid/ingestion/poll.hpp"
#include "camgrid/ingestion/snapshot.hpp"
#include "camgrid/testbed/farm.hpp"

using namespace camgrid;
using namespace camgrid::ingestion;
using namespace std::chrono_literals;

namespace {

// Small fixture server for cases the farm does not model.
struct Fixture {
    httplib::Server server;
    std::thread thread;
    int port = 0;

    Fixture() = default;
    void start() {
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~Fixture() {
        server.stop();
        if (thread.joinable()) thread.join();
    }
    std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port) + path; }
};

testbed::FarmSpec one_camera(const std::string& base, RetrievalMode mode, double fps) {
    testbed::FarmSpec spec;
    spec.address_base = base;
    testbed::CameraSpec c;
    c.mode = mode;
    c.fps = fps;
    spec.cameras.push_back(c);
    return spec;
}

}  // namespace

TEST_CASE("snapshot fetch from a testbed camera") {
    testbed::Farm farm(one_camera("127.0.30.0", RetrievalMode::snapshot_poll, 10));
    const auto frame = fetch_snapshot_frame(farm.cameras()[0].brand_endpoint());
    CHECK(frame.format == FrameFormat::jpeg);
    REQUIRE(frame.bytes.size() > 3);
    CHECK(frame.bytes[0] == 0xFF);
    CHECK(frame.bytes[1] == 0xD8);
    CHECK(frame.bytes[2] == 0xFF);
    CHECK(frame.width == 160);
    CHECK(frame.height == 120);
    CHECK(frame.captured_at == frame.received_at);

    auto endpoint = farm.cameras()[0].brand_endpoint();
    endpoint.url = farm.cameras()[0].base_url() + "/missing.jpg";
    try {
        (void)fetch_snapshot_frame(endpoint);
        FAIL("expected http_status");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::http_status);
    }
}

TEST_CASE("fetch errors are typed") {
    Fixture fx;
    const std::string big(9u << 20, 'x');
    fx.server.Get("/big", [&](const httplib::Request&, httplib::Response& res) {
        std::string body = "\xFF\xD8\xFF";
        body += big;
        res.set_content(body, "image/jpeg");
    });
    fx.server.Get("/html", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("<html></html>", "text/html");
    });
    fx.server.Get("/slow", [](const httplib::Request&, httplib::Response& res) {
        std::this_thread::sleep_for(1500ms);
        res.set_content("late", "text/plain");
    });
    fx.server.Get(R"(/hop/(\d+))", [&](const httplib::Request& req, httplib::Response& res) {
        const int n = std::stoi(req.matches[1]);
        if (n == 0) {
            res.set_content("\xFF\xD8\xFF\xD9", "image/jpeg");
        } else {
            res.set_redirect("/hop/" + std::to_string(n - 1));
        }
    });
    fx.start();

    auto code_of = [](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::internal;
    };
    StreamEndpoint e;
    e.url = fx.url("/big");
    CHECK(code_of([&] { (void)fetch_snapshot_frame(e); }) == ErrorCode::too_large);
    e.url = fx.url("/html");
    CHECK(code_of([&] { (void)fetch_snapshot_frame(e); }) == ErrorCode::unknown_format);
    HttpOptions quick;
    quick.timeout = 400ms;
    e.url = fx.url("/slow");
    CHECK(code_of([&] { (void)fetch_snapshot_frame(e, quick); }) == ErrorCode::timeout);

    auto ok = http_get(fx.url("/hop/3"));
    CHECK(ok.status == 200);
    CHECK(ok.redirects == 3);
    CHECK(ok.final_url == fx.url("/hop/0"));
    CHECK(code_of([&] { (void)http_get(fx.url("/hop/4")); }) == ErrorCode::network);

    HttpOptions limited;
    limited.read_limit = 64;
    auto head = http_get(fx.url("/big"), limited);
    CHECK(head.truncated);
    CHECK(head.body.size() == 64);

    CHECK(code_of([&] { (void)http_get("https://127.0.0.1/"); }) == ErrorCode::network);
}

TEST_CASE("dead endpoint aborts after the failure threshold") {
    StreamEndpoint e;
    e.url = "http://127.0.0.1:1/snapshot.jpg";
    PollOptions opt;
    opt.fps = 20;
    opt.duration_s = 5;
    std::size_t delivered = 0;
    const auto s = poll_stream(e, opt, [&](Frame&&) {
        ++delivered;
        return SinkResult::ok;
    });
    CHECK(s.aborted);
    CHECK(s.frames_delivered == 0);
    CHECK(s.ticks_failed == 10);
    CHECK(s.frames_delivered + s.ticks_skipped + s.ticks_failed == s.ticks_expected);
    CHECK(delivered == 0);

    e.mode = RetrievalMode::mjpeg_stream;
    opt.fps = 10;
    const auto m = poll_stream(e, opt, [](Frame&&) { return SinkResult::ok; });
    CHECK(m.aborted);
    CHECK(m.frames_delivered == 0);
}

TEST_CASE("snapshot polling accounts for every tick") {
    Fixture fx;
    std::atomic<int> hits{0};
    fx.server.Get("/slow.jpg", [&](const httplib::Request&, httplib::Response& res) {
        if (++hits % 3 == 0) std::this_thread::sleep_for(450ms);
        res.set_content("\xFF\xD8\xFF\xD9", "image/jpeg");
    });
    fx.start();
    StreamEndpoint e;
    e.url = fx.url("/slow.jpg");
    PollOptions opt;
    opt.fps = 5;
    opt.duration_s = 3;
    std::uint64_t last = 0;
    bool first = true, monotone = true;
    const auto s = poll_stream(e, opt, [&](Frame&& f) {
        if (!first && f.seq != last + 1) monotone = false;
        first = false;
        last = f.seq;
        return SinkResult::ok;
    });
    CHECK(monotone);
    CHECK(s.ticks_expected == 15);
    CHECK(s.ticks_skipped > 0);
    CHECK(s.frames_delivered + s.ticks_skipped + s.ticks_failed == s.ticks_expected);
    CHECK_FALSE(s.aborted);
}

TEST_CASE("sink failures and cancellation") {
    testbed::Farm farm(one_camera("127.0.31.0", RetrievalMode::snapshot_poll, 10));
    PollOptions opt;
    opt.fps = 20;
    opt.duration_s = 5;
    opt.max_consecutive_failures = 4;
    const auto failed =
        poll_stream(farm.cameras()[0].pgm_endpoint(), opt, [](Frame&&) { return SinkResult::failed; });
    CHECK(failed.aborted);
    CHECK(failed.ticks_failed == 4);
    CHECK(failed.frames_delivered + failed.ticks_skipped + failed.ticks_failed == failed.ticks_expected);

    std::stop_source src;
    std::jthread canceller([&] {
        std::this_thread::sleep_for(600ms);
        src.request_stop();
    });
    const auto cancelled =
        poll_stream(farm.cameras()[0].pgm_endpoint(), opt, [](Frame&&) { return SinkResult::ok; }, src.get_token());
    CHECK(cancelled.cancelled);
    CHECK(cancelled.frames_delivered > 0);
    CHECK(cancelled.frames_delivered < 100);
    CHECK(cancelled.frames_delivered + cancelled.ticks_skipped + cancelled.ticks_failed == cancelled.ticks_expected);
}

TEST_CASE("mjpeg delivery is rate limited to the requested fps") {
    testbed::Farm farm(one_camera("127.0.32.0", RetrievalMode::mjpeg_stream, 10));
    PollOptions opt;
    opt.fps = 1;
    opt.duration_s = 30;
    std::vector<Frame> frames;
    const auto s = poll_stream(farm.cameras()[0].brand_endpoint(), opt, [&](Frame&& f) {
        frames.push_back(std::move(f));
        return SinkResult::ok;
    });
    CHECK(s.frames_delivered >= 29);
    CHECK(s.frames_delivered <= 31);
    CHECK(s.frames_dropped > 200);
    for (std::size_t i = 0; i < frames.size(); ++i) CHECK(frames[i].seq == i);
    // Every delivered payload is one the camera logged sending.
    std::set<std::uint64_t> sent;
    for (const auto& f : farm.sent_frames(0)) sent.insert(f.hash);
    for (const auto& f : frames) CHECK(sent.count(fnv1a64(f.bytes)) == 1);
}

TEST_CASE("mjpeg at the source rate delivers every frame") {
    testbed::Farm farm(one_camera("127.0.33.0", RetrievalMode::mjpeg_stream, 10));
    PollOptions opt;
    opt.fps = 10;
    opt.duration_s = 60;
    std::vector<std::uint64_t> hashes;
    const auto s = poll_stream(farm.cameras()[0].pgm_endpoint(), opt, [&](Frame&& f) {
        CHECK(f.format == FrameFormat::pgm);
        hashes.push_back(fnv1a64(f.bytes));
        return SinkResult::ok;
    });
    CHECK(static_cast<double>(s.frames_delivered) == doctest::Approx(600).epsilon(0.02));
    CHECK(s.effective_fps == doctest::Approx(10).epsilon(0.02));
    std::map<std::uint64_t, int> sent;
    for (const auto& f : farm.sent_frames(0)) ++sent[f.hash];
    std::set<std::uint64_t> unique(hashes.begin(), hashes.end());
    CHECK(unique.size() == hashes.size());
    for (auto h : hashes) CHECK(sent.count(h) == 1);
}
