#include <doctest.h>

#include <atomic>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "camgrid/core/error.hpp"
#include "camgrid/discovery/cidr.hpp"
#include "camgrid/discovery/probe.hpp"
#include "camgrid/discovery/rate_limiter.hpp"
#include "camgrid/discovery/refresh.hpp"
#include "camgrid/discovery/scan.hpp"
#include "camgrid/discovery/verify.hpp"
#include "camgrid/testbed/farm.hpp"
#include "support/image_oracle.hpp"

using namespace camgrid;
using namespace camgrid::discovery;
using namespace std::chrono_literals;

namespace {

std::vector<BrandSignature> farm_signatures() { return parse_signatures(testbed::brand_signatures_json()); }

struct Fixture {
    httplib::Server server;
    std::thread thread;
    int port = 0;

    void start() {
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~Fixture() {
        server.stop();
        if (thread.joinable()) thread.join();
    }
    std::string address() const { return "127.0.0.1:" + std::to_string(port); }
};

ProbeHit hit_for(const std::string& address, const std::string& path, const std::string& content_type) {
    ProbeHit h;
    h.address = address;
    h.path = path;
    h.brand = "fixture";
    h.status_code = 200;
    h.content_type = content_type;
    return h;
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::internal;
}

}  // namespace

TEST_CASE("signature file parsing") {
    const auto sigs = farm_signatures();
    REQUIRE(sigs.size() == 4);
    CHECK(sigs[0].paths.size() == 4);
    CHECK(content_type_matches(sigs[0], "IMAGE/JPEG"));
    CHECK(content_type_matches(sigs[0], "multipart/x-mixed-replace; boundary=x"));
    CHECK_FALSE(content_type_matches(sigs[0], "text/html"));

    using nlohmann::json;
    CHECK(code_of([] { (void)parse_signatures(json::array()); }) == ErrorCode::config);
    CHECK(code_of([] { (void)parse_signatures(json::parse(R"([{"brand":"a","paths":[],"expected_content_type_prefixes":["image/"]}])")); }) ==
          ErrorCode::config);
    CHECK(code_of([] { (void)parse_signatures(json::parse(R"([{"brand":"a","paths":["x.jpg"],"expected_content_type_prefixes":["image/"]}])")); }) ==
          ErrorCode::config);
    CHECK(code_of([] { (void)parse_signatures(json::parse(R"([{"paths":["/x"],"expected_content_type_prefixes":["image/"]}])")); }) ==
          ErrorCode::config);
    CHECK(code_of([] { (void)load_signatures("/nonexistent/signatures.json"); }) == ErrorCode::config);
    {
        std::ofstream("bad_signatures.json") << "{not json";
    }
    CHECK(code_of([] { (void)load_signatures("bad_signatures.json"); }) == ErrorCode::config);
    // Malformed signatures fail before any request is made.
    CHECK(code_of([] { (void)probe_address("127.0.0.1:1", {}, 100ms); }) == ErrorCode::config);
}

TEST_CASE("cidr ranges") {
    CHECK(parse_cidr("10.1.2.3/30").hosts() == std::vector<std::string>{"10.1.2.1", "10.1.2.2"});
    CHECK(parse_cidr("10.1.2.0/31").hosts() == std::vector<std::string>{"10.1.2.0", "10.1.2.1"});
    CHECK(parse_cidr("10.1.2.7").hosts() == std::vector<std::string>{"10.1.2.7"});
    CHECK(parse_cidr("127.0.40.0/26").host_count() == 62);
    CHECK(parse_cidr("127.0.40.0/26").hosts().size() == 62);
    CHECK(parse_cidr("192.168.1.0/24").is_private());
    CHECK(parse_cidr("172.31.0.0/16").is_private());
    CHECK_FALSE(parse_cidr("172.32.0.0/16").is_private());
    CHECK_FALSE(parse_cidr("10.0.0.0/7").is_private());
    CHECK_FALSE(parse_cidr("8.8.8.0/24").is_private());
    CHECK(parse_cidr("169.254.3.0/24").is_private());
    CHECK(parse_cidr("10.9.9.9/8").to_string() == "10.0.0.0/8");
    CHECK(code_of([] { (void)parse_cidr("10.0.0.0/33"); }) == ErrorCode::validation);
    CHECK(code_of([] { (void)parse_cidr("10.0.0/8"); }) == ErrorCode::validation);
    CHECK(code_of([] { (void)parse_cidr("10.0.0.0/"); }) == ErrorCode::validation);
}

TEST_CASE("rate limiter spaces grants") {
    RateLimiter limiter(20.0);
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::jthread> threads;
    for (int t = 0; t < 3; ++t) {
        threads.emplace_back([&] {
            for (int i = 0; i < 7; ++i) limiter.acquire();
        });
    }
    threads.clear();
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(elapsed >= 20.0 / 20.0 - 0.01);
    CHECK(elapsed < 1.6);
    CHECK(limiter.grants() == 21);
    CHECK(code_of([] { RateLimiter bad(0.0); }) == ErrorCode::validation);
}

TEST_CASE("probe finds the brand path and ignores non-cameras") {
    testbed::FarmSpec spec;
    spec.address_base = "127.0.41.0";
    testbed::CameraSpec cam;
    cam.brand = "mobotix";
    spec.cameras.push_back(cam);
    spec.decoys = 1;
    testbed::Farm farm(spec);
    const auto port = std::to_string(farm.port());
    const auto sigs = farm_signatures();

    const auto hits = probe_address(farm.cameras()[0].host + ":" + port, sigs, 2000ms);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].brand == "mobotix");
    CHECK(hits[0].path == "/record/current.jpg");
    CHECK(hits[0].status_code == 200);
    CHECK(hits[0].content_type == "image/jpeg");
    CHECK(hits[0].first_bytes.size() == kProbePrefixBytes);
    CHECK(hits[0].first_bytes[0] == 0xFF);
    // 4 paths for each of the three other brands, plus the first mobotix path.
    std::size_t requests = 0;
    for (const auto& r : farm.request_log()) requests += r.host == farm.cameras()[0].host;
    CHECK(requests == 13);

    CHECK(probe_address(farm.decoy_hosts()[0] + ":" + port, sigs, 2000ms).empty());
    CHECK(probe_address("127.0.41.200:" + port, sigs, 2000ms).empty());
}

TEST_CASE("probe redirect cap and per-address time bound") {
    Fixture fx;
    fx.server.Get(R"(/hop(\d+)\.jpg)", [](const httplib::Request& req, httplib::Response& res) {
        const int n = std::stoi(req.matches[1]);
        if (n == 0) res.set_content("\xFF\xD8\xFF\xE0", "image/jpeg");
        else res.set_redirect("/hop" + std::to_string(n - 1) + ".jpg");
    });
    fx.server.Get("/slow.jpg", [](const httplib::Request&, httplib::Response& res) {
        std::this_thread::sleep_for(2s);
        res.set_content("\xFF\xD8\xFF\xE0", "image/jpeg");
    });
    fx.start();
    BrandSignature three{"three", {"/hop3.jpg"}, {"image/"}};
    BrandSignature four{"four", {"/hop4.jpg"}, {"image/"}};
    BrandSignature slow{"slow", {"/slow.jpg", "/slow.jpg"}, {"image/"}};
    CHECK(probe_address(fx.address(), {three}, 2000ms).size() == 1);
    CHECK(probe_address(fx.address(), {four}, 2000ms).empty());
    const auto t0 = std::chrono::steady_clock::now();
    CHECK(probe_address(fx.address(), {slow}, 300ms).empty());
    CHECK(std::chrono::steady_clock::now() - t0 <= 2 * 300ms + 150ms);
}

TEST_CASE("verification outcomes") {
    testbed::FarmSpec spec;
    spec.address_base = "127.0.42.0";
    testbed::CameraSpec snap;
    spec.cameras.push_back(snap);
    testbed::CameraSpec stream;
    stream.brand = "foscam";
    stream.mode = RetrievalMode::mjpeg_stream;
    spec.cameras.push_back(stream);
    testbed::Farm farm(spec);
    const auto port = std::to_string(farm.port());
    VerifyOptions opt;
    opt.liveness_delay_s = 0.5;

    const auto& c0 = farm.cameras()[0];
    auto v = verify_candidate(hit_for(c0.host + ":" + port, "/axis-cgi/jpg/image.cgi", "image/jpeg"), opt);
    CHECK(v.is_image);
    CHECK(v.is_live);
    CHECK(v.detected_format == DetectedFormat::jpeg);
    CHECK(v.width == 160);
    CHECK(v.height == 120);
    REQUIRE(v.evidence.size() == 2);
    CHECK(v.evidence[0].payload_hash != v.evidence[1].payload_hash);
    CHECK(disposition_for(v) == Disposition::accepted);

    const auto& c1 = farm.cameras()[1];
    auto m = verify_candidate(
        hit_for(c1.host + ":" + port, "/videostream.cgi", "multipart/x-mixed-replace; boundary=camgridframe"), opt);
    CHECK(m.is_image);
    CHECK(m.is_live);
    CHECK(m.detected_format == DetectedFormat::mjpeg);

    Fixture fx;
    const auto png = test_oracle::png_gray(8, 8);
    std::atomic<int> flaky_calls{0};
    fx.server.Get("/still.png", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content(std::string(png.begin(), png.end()), "image/png");
    });
    fx.server.Get("/index.html", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("<html>hello</html>", "text/html");
    });
    fx.server.Get("/flaky.png", [&](const httplib::Request&, httplib::Response& res) {
        if (flaky_calls++ > 0) {
            res.status = 500;
            return;
        }
        res.set_content(std::string(png.begin(), png.end()), "image/png");
    });
    fx.server.Get("/huge.jpg", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("\xFF\xD8\xFF" + std::string(9u << 20, 'x'), "image/jpeg");
    });
    fx.start();

    auto s = verify_candidate(hit_for(fx.address(), "/still.png", "image/png"), opt);
    CHECK(s.is_image);
    CHECK_FALSE(s.is_live);
    CHECK(s.detected_format == DetectedFormat::png);
    CHECK(s.width == 8);
    CHECK(disposition_for(s) == Disposition::pending_review);
    CHECK(disposition_for(s, true) == Disposition::rejected_static);

    auto h = verify_candidate(hit_for(fx.address(), "/index.html", "image/jpeg"), opt);
    CHECK_FALSE(h.is_image);
    CHECK(h.detected_format == DetectedFormat::none);
    CHECK(h.evidence.size() == 1);
    CHECK(disposition_for(h) == Disposition::rejected_not_image);

    auto f = verify_candidate(hit_for(fx.address(), "/flaky.png", "image/png"), opt);
    CHECK(f.is_image);
    CHECK_FALSE(f.is_live);
    REQUIRE(f.evidence.size() == 2);
    CHECK(f.evidence[1].error.has_value());

    auto big = verify_candidate(hit_for(fx.address(), "/huge.jpg", "image/jpeg"), opt);
    CHECK_FALSE(big.is_image);
    CHECK(disposition_for(big) == Disposition::rejected_not_image);
    REQUIRE(big.evidence[0].error.has_value());
    CHECK(big.evidence[0].error->rfind("too_large", 0) == 0);

    CHECK(code_of([&] {
              VerifyOptions zero;
              zero.liveness_delay_s = 0;
              (void)verify_candidate(hit_for(fx.address(), "/still.png", "image/png"), zero);
          }) == ErrorCode::invalid_argument);
}

TEST_CASE("scan accepts exactly the cameras") {
    testbed::FarmSpec spec;
    spec.address_base = "127.0.43.0";
    for (int i = 0; i < 3; ++i) {
        testbed::CameraSpec c;
        c.brand = testbed::brand_catalog()[static_cast<std::size_t>(i)].brand;
        c.mode = i == 1 ? RetrievalMode::mjpeg_stream : RetrievalMode::snapshot_poll;
        spec.cameras.push_back(c);
    }
    spec.decoys = 2;
    testbed::Farm farm(spec);
    ScanOptions opt;
    opt.port = farm.port();
    opt.rate_limit = 200;
    opt.concurrency_limit = 8;
    opt.liveness_delay_s = 1.0;
    opt.timeout = 2000ms;
    ScanStats stats;
    const auto out = scan_range("127.0.43.0/28", farm_signatures(), opt, &stats);
    CHECK(stats.addresses == 14);
    std::vector<std::string> accepted;
    for (const auto& c : out) {
        if (c.disposition == Disposition::accepted) accepted.push_back(c.hit.address);
    }
    std::vector<std::string> expected;
    for (const auto& c : farm.cameras()) expected.push_back(c.host + ":" + std::to_string(farm.port()));
    CHECK(accepted == expected);
    CHECK(out.size() == 3);
    const auto lines = to_json_lines(out);
    CHECK(std::count(lines.begin(), lines.end(), '\n') == 3);

    CHECK(scan_hosts({}, farm_signatures(), opt).empty());
}

TEST_CASE("scan safety refusals") {
    ScanOptions opt;
    CHECK(code_of([&] { (void)scan_range("10.0.0.0/15", farm_signatures(), opt); }) == ErrorCode::validation);
    CHECK(code_of([&] { (void)scan_range("8.8.8.0/24", farm_signatures(), opt); }) == ErrorCode::validation);
    opt.rate_limit = 0;
    CHECK(code_of([&] { (void)scan_range("10.0.0.0/30", farm_signatures(), opt); }) == ErrorCode::validation);
    opt.rate_limit = 10;
    opt.concurrency_limit = 0;
    CHECK(code_of([&] { (void)scan_range("10.0.0.0/30", farm_signatures(), opt); }) == ErrorCode::validation);
    // The override lifts the refusal; TEST-NET-1 is unroutable, so nothing answers.
    ScanOptions pub;
    pub.allow_public = true;
    pub.timeout = 100ms;
    pub.rate_limit = 1000;
    BrandSignature one{"x", {"/a"}, {"image/"}};
    CHECK(scan_range("192.0.2.1/32", {one}, pub).empty());
}

TEST_CASE("scan respects rate and concurrency limits and is deterministic") {
    testbed::FarmSpec spec;
    spec.address_base = "127.0.44.0";
    for (int i = 0; i < 4; ++i) {
        testbed::CameraSpec c;
        c.brand = i % 2 ? "foscam" : "axis";
        c.scene.kind = testbed::SceneKind::static_image;
        spec.cameras.push_back(c);
    }
    spec.decoys = 10;
    testbed::Farm farm(spec);
    auto sigs = farm_signatures();
    sigs.resize(2);  // axis and foscam, 4 paths each
    ScanOptions opt;
    opt.port = farm.port();
    opt.rate_limit = 10;
    opt.concurrency_limit = 3;
    opt.liveness_delay_s = 0.5;

    const auto first = scan_range("127.0.44.0/28", sigs, opt);
    const auto log = farm.request_log();
    const int max_in_flight = farm.max_in_flight();
    REQUIRE(log.size() > 50);
    const double span = std::chrono::duration<double>(log.back().at - log.front().at).count();
    CHECK(span >= (static_cast<double>(log.size()) - 1.0) / opt.rate_limit * 0.98);
    CHECK((static_cast<double>(log.size()) - 1.0) / span <= opt.rate_limit * 1.1);
    // No 2-second window exceeds the rate by more than 10% (+1 for the burst).
    std::size_t lo = 0;
    for (std::size_t hi = 0; hi < log.size(); ++hi) {
        while (log[hi].at - log[lo].at > 2s) ++lo;
        CHECK(static_cast<double>(hi - lo + 1) <= 2.0 * opt.rate_limit * 1.1 + 1.0);
    }
    CHECK(max_in_flight <= opt.concurrency_limit);
    REQUIRE(first.size() == 4);
    for (const auto& c : first) CHECK(c.disposition == Disposition::pending_review);

    farm.reset_counters();
    const auto second = scan_range("127.0.44.0/28", sigs, opt);
    REQUIRE(second.size() == first.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
        CHECK(first[i].hit == second[i].hit);
        CHECK(first[i].disposition == second[i].disposition);
        CHECK(first[i].verification.evidence[0].payload_hash == second[i].verification.evidence[0].payload_hash);
    }
}

TEST_CASE("refresh rate from simulated sampling") {
    // A source that changes every 900 s, sampled every 300 s.
    double now = 0.0;
    RefreshPorts ports;
    ports.clock = [&] { return now; };
    ports.sleep_for = [&](double s) { now += std::max(0.0, s); };
    ports.fetch = [&](const StreamEndpoint&) {
        const auto epoch = static_cast<int>(std::floor(now / 900.0));
        return std::vector<std::uint8_t>{0xFF, 0xD8, 0xFF, static_cast<std::uint8_t>(epoch)};
    };
    StreamEndpoint e;
    e.url = "http://127.0.0.1/x.jpg";
    auto est = estimate_refresh_rate(e, 13, 300.0, ports);
    REQUIRE(est.fps.has_value());
    CHECK(*est.fps == doctest::Approx(1.0 / 900.0));
    CHECK(est.changes == 4);
    CHECK_FALSE(est.is_static);

    now = 0.0;
    ports.fetch = [](const StreamEndpoint&) { return std::vector<std::uint8_t>{1, 2, 3}; };
    est = estimate_refresh_rate(e, 5, 1.0, ports);
    CHECK(est.is_static);
    CHECK_FALSE(est.fps.has_value());

    // One change over a 4 s span.
    now = 0.0;
    ports.fetch = [&](const StreamEndpoint&) { return std::vector<std::uint8_t>{now < 2.5 ? std::uint8_t(1) : std::uint8_t(2)}; };
    est = estimate_refresh_rate(e, 5, 1.0, ports);
    REQUIRE(est.fps.has_value());
    CHECK(*est.fps == doctest::Approx(0.25));

    now = 0.0;
    int calls = 0;
    ports.fetch = [&](const StreamEndpoint&) -> std::vector<std::uint8_t> {
        if (calls++ == 0) return {1};
        throw Error(ErrorCode::network, "down");
    };
    try {
        (void)estimate_refresh_rate(e, 4, 1.0, ports);
        FAIL("expected estimation error");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::estimation);
        CHECK(err.details()["evidence"].size() == 4);
        CHECK(err.details()["samples"] == 1);
    }
    CHECK(code_of([&] { (void)estimate_refresh_rate(e, 2, 1.0, ports); }) == ErrorCode::invalid_argument);
}

TEST_CASE("refresh rate of live testbed sources") {
    testbed::FarmSpec spec;
    spec.address_base = "127.0.45.0";
    testbed::CameraSpec mj;
    mj.mode = RetrievalMode::mjpeg_stream;
    mj.fps = 10;
    spec.cameras.push_back(mj);
    testbed::CameraSpec still;
    still.scene.kind = testbed::SceneKind::static_image;
    spec.cameras.push_back(still);
    testbed::Farm farm(spec);

    const auto est = estimate_refresh_rate(farm.cameras()[0].brand_endpoint(), 21);
    REQUIRE(est.fps.has_value());
    CHECK(*est.fps == doctest::Approx(10.0).epsilon(0.1));

    const auto st = estimate_refresh_rate(farm.cameras()[1].brand_endpoint(), 3, 0.2);
    CHECK(st.is_static);

    StreamEndpoint dead;
    dead.url = "http://127.0.45.99:" + std::to_string(farm.port()) + "/x";
    dead.mode = RetrievalMode::mjpeg_stream;
    CHECK(code_of([&] { (void)estimate_refresh_rate(dead, 5); }) == ErrorCode::estimation);
}
