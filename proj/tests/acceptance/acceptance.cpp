// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance               run everything
//   acceptance --only NAME   run one criterion
//   acceptance --list        print the criterion names

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "camgrid/core/error.hpp"
#include "camgrid/core/hash.hpp"
#include "camgrid/discovery/scan.hpp"
#include "camgrid/ingestion/multipart.hpp"
#include "camgrid/registry/cluster.hpp"
#include "camgrid/registry/store.hpp"
#include "camgrid/resman/planner.hpp"
#include "camgrid/resman/report.hpp"
#include "camgrid/runtime/analyzers.hpp"
#include "camgrid/runtime/runtime.hpp"
#include "camgrid/testbed/farm.hpp"
#include "camgrid/testbed/scene.hpp"
#include "support/mjpeg_synth.hpp"
#include "support/plan_oracle.hpp"
#include "support/records.hpp"

using namespace camgrid;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 2) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
}

// 20 cameras over the 4 brands plus 20 decoys on a /26; rate limit 50/s.
Outcome discovery_precision_recall() {
    testbed::FarmSpec spec;
    spec.address_base = "127.0.80.0";
    const auto& brands = testbed::brand_catalog();
    for (int i = 0; i < 20; ++i) {
        testbed::CameraSpec c;
        c.brand = brands[static_cast<std::size_t>(i) % brands.size()].brand;
        c.mode = i % 3 == 2 ? RetrievalMode::mjpeg_stream : RetrievalMode::snapshot_poll;
        c.fps = 2;
        c.scene.seed = static_cast<std::uint64_t>(i) + 1;
        spec.cameras.push_back(c);
    }
    spec.decoys = 20;
    spec.server_threads = 2;
    testbed::Farm farm(spec);

    discovery::ScanOptions opt;
    opt.port = farm.port();
    opt.rate_limit = 50;
    discovery::ScanStats stats;
    const auto t0 = Clock::now();
    const auto out = discovery::scan_range("127.0.80.0/26",
                                           discovery::parse_signatures(testbed::brand_signatures_json()), opt, &stats);
    const double elapsed = seconds_since(t0);

    std::set<std::string> cameras, decoys, accepted;
    for (const auto& c : farm.cameras()) cameras.insert(c.host + ":" + std::to_string(farm.port()));
    for (const auto& d : farm.decoy_hosts()) decoys.insert(d + ":" + std::to_string(farm.port()));
    for (const auto& c : out) {
        if (c.disposition == discovery::Disposition::accepted) accepted.insert(c.hit.address);
    }
    std::size_t true_pos = 0, decoy_pos = 0;
    for (const auto& a : accepted) {
        true_pos += cameras.count(a);
        decoy_pos += decoys.count(a);
    }
    const bool ok = accepted == cameras && decoy_pos == 0 && elapsed < 60.0;
    return {ok, "accepted " + std::to_string(true_pos) + "/20 cameras, " + std::to_string(decoy_pos) +
                    "/20 decoys, " + std::to_string(accepted.size()) + " total; " + std::to_string(stats.requests) +
                    " requests over " + std::to_string(stats.addresses) + " addresses in " + fmt(elapsed, 1) +
                    " s (< 60 s)"};
}

Outcome multipart_fragmentation() {
    const auto s = test_synth::make_stream(2024, 200, 4096);
    std::vector<std::uint64_t> expected;
    for (const auto& p : s.payloads) expected.push_back(fnv1a64(p));
    std::mt19937_64 rng(7);
    int mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        // Mix of tiny, medium and large pieces; every 100th trial is one byte at a time.
        const std::size_t max_len = trial % 100 == 0 ? 1 : std::size_t{1} << (1 + trial % 14);
        std::uniform_int_distribution<std::size_t> len(1, max_len);
        auto st = ingestion::make_multipart_state(s.boundary);
        std::vector<std::uint64_t> got;
        for (std::size_t pos = 0; pos < s.bytes.size();) {
            const auto n = std::min(len(rng), s.bytes.size() - pos);
            for (const auto& part : ingestion::feed_multipart(st, std::span(s.bytes).subspan(pos, n))) {
                got.push_back(fnv1a64(part.payload));
            }
            pos += n;
        }
        mismatches += got != expected;
    }
    return {mismatches == 0, std::to_string(1000 - mismatches) + "/1000 chunkings reproduce all 200 payload hashes"};
}

// One testbed stream at 10 fps for `seconds` (600 for the criterion).
Outcome long_run_throughput(double seconds) {
    testbed::FarmSpec spec;
    spec.address_base = "127.0.81.0";
    testbed::CameraSpec cam;
    cam.fps = 10;
    cam.serve_jpeg = false;
    spec.cameras.push_back(cam);
    testbed::Farm farm(spec);
    const auto endpoint = farm.cameras()[0].pgm_endpoint();

    auto store = std::make_shared<runtime::MemoryJobStore>();
    runtime::Runtime rt([&](const std::string& id) -> std::optional<StreamEndpoint> {
        if (id == "long-run") return endpoint;
        return std::nullopt;
    }, store);
    runtime::JobRequest req;
    req.camera_ids = {"long-run"};
    req.fps = 10;
    req.duration_s = seconds;
    req.analyzer = "motion_feature_count";
    const auto t0 = Clock::now();
    const auto id = rt.submit(req);
    rt.wait(id, std::chrono::milliseconds(static_cast<long long>((seconds + 120) * 1000)));
    const double elapsed = seconds_since(t0);
    const auto res = rt.results(id);
    rt.shutdown();

    const double frames_expected = 10 * seconds, points_expected = frames_expected - 1;
    const auto& stream = res.job.streams.at(0);
    const double frames = stream.acquisition ? static_cast<double>(stream.acquisition->frames_delivered) : 0.0;
    const double points = static_cast<double>(res.series.at(0).points.size());
    std::size_t exact = 0;
    for (const auto& p : res.series.at(0).points) exact += p.value == 4;
    const bool ok = res.job.state == runtime::JobState::finished && std::abs(frames - frames_expected) <= 0.02 * frames_expected &&
                    std::abs(points - points_expected) <= 0.02 * points_expected;
    return {ok, fmt(frames, 0) + " frames (target " + fmt(frames_expected, 0) + " +-2%), " + fmt(points, 0) +
                    " motion points (target " + fmt(points_expected, 0) + " +-2%), " + std::to_string(exact) +
                    " equal to the 4 planted blobs; job " + runtime::to_string(res.job.state) + " after " +
                    fmt(elapsed, 1) + " s"};
}

Outcome motion_oracle() {
    std::mt19937 rng(4242);
    int scenes = 0, pairs = 0, agree = 0;
    while (scenes < 100) {
        testbed::SceneSpec spec;
        spec.count = std::uniform_int_distribution<int>(1, 16)(rng);
        spec.size_px = std::uniform_int_distribution<int>(4, 16)(rng);
        spec.width = std::uniform_int_distribution<int>(96, 400)(rng);
        spec.height = std::uniform_int_distribution<int>(72, 300)(rng);
        spec.seed = rng();
        std::unique_ptr<testbed::Scene> scene;
        try {
            scene = std::make_unique<testbed::Scene>(spec);
        } catch (const Error&) {
            continue;  // that many blobs of that size do not fit the frame
        }
        ++scenes;
        const std::uint64_t start = rng() % 1000;
        auto prev = scene->render(start);
        for (std::uint64_t seq = start + 1; seq <= start + 10; ++seq) {
            auto curr = scene->render(seq);
            ++pairs;
            agree += runtime::motion_feature_count(prev, curr) == scene->truth(seq).moving_blobs;
            prev = std::move(curr);
        }
    }
    const double share = static_cast<double>(agree) / pairs;
    return {share >= 0.99, std::to_string(agree) + "/" + std::to_string(pairs) + " frame pairs over " +
                               std::to_string(scenes) + " scenes match the planted count (" + fmt(100 * share) +
                               "%, need >= 99%)"};
}

Outcome clustering_scalability() {
    std::mt19937_64 rng(100'000);
    std::uniform_real_distribution<double> lat(-90.0, 90.0), lon(-180.0, 180.0);
    registry::Store store(":memory:");
    std::vector<CameraRecord> recs;
    recs.reserve(100'000);
    for (std::size_t i = 0; i < 100'000; ++i) {
        CameraRecord r;
        r.endpoint.url = "http://10.2.0.1/c/" + std::to_string(i);
        r.id = camera_id_for(r.endpoint.url, r.endpoint.mode);
        r.location.point = GeoPoint{lat(rng), lon(rng)};
        r.location.provenance = LocationProvenance::owner_provided;
        r.reliability.last_seen = from_millis(1'700'000'000'000);
        recs.push_back(std::move(r));
    }
    store.upsert_many(recs);
    double worst = 0;
    bool conserved = true;
    std::string counts;
    for (int zoom = 0; zoom <= 6; ++zoom) {
        const auto t0 = Clock::now();
        const auto clusters = registry::cluster_markers(store.located_cameras(registry::BBox::world()), zoom);
        worst = std::max(worst, seconds_since(t0));
        std::int64_t total = 0;
        for (const auto& c : clusters) total += c.count;
        conserved = conserved && total == 100'000;
        counts += (zoom ? "," : "") + std::to_string(clusters.size());
    }
    return {conserved && worst < 2.5, "100000 cameras, zoom 0..6: counts conserved " +
                                          std::string(conserved ? "exactly" : "NOT") + ", clusters per zoom " + counts +
                                          ", slowest query+cluster " + fmt(worst, 3) + " s (< 2.5 s)"};
}

Outcome registry_oracle() {
    std::mt19937_64 rng(10'000);
    registry::Store store(":memory:");
    std::vector<CameraRecord> recs;
    for (std::size_t i = 0; i < 10'000; ++i) recs.push_back(test_fixture::random_record(rng, i));
    std::map<std::string, std::string> disposition;
    std::vector<CameraRecord> accepted, pending;
    for (const auto& r : recs) {
        const bool acc = rng() % 4 != 0;
        (acc ? accepted : pending).push_back(r);
        disposition[r.id] = acc ? "accepted" : "pending_review";
    }
    store.upsert_many(accepted, discovery::Disposition::accepted);
    store.upsert_many(pending, discovery::Disposition::pending_review);
    std::sort(recs.begin(), recs.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

    int exact = 0;
    for (int q = 0; q < 200; ++q) {
        const auto f = test_fixture::random_filter(rng);
        std::vector<std::string> expected;
        for (const auto& r : recs) {
            if (test_fixture::oracle_matches(r, disposition[r.id], f)) expected.push_back(r.id);
        }
        const auto page = store.query_cameras(f);
        std::vector<std::string> got;
        for (const auto& r : page.items) got.push_back(r.id);
        const auto lo = std::min<std::size_t>(expected.size(), f.offset);
        const auto hi = std::min<std::size_t>(expected.size(), lo + f.limit);
        exact += page.total == static_cast<std::int64_t>(expected.size()) &&
                 got == std::vector<std::string>(expected.begin() + lo, expected.begin() + hi);
    }
    return {exact == 200, std::to_string(exact) + "/200 filters over 10000 records match the linear scan exactly"};
}

resman::InstanceType itype(std::string name, double cpu, double mem, double cost, std::string region = "r0") {
    return {std::move(name), std::move(region), cpu, mem, 0.0, resman::to_micros(cost)};
}

resman::StreamRequirement sreq(std::string id, double cpu, double mem, double fps = 1, std::string region = "r0") {
    return {std::move(id), cpu, mem, 0.0, fps, std::move(region)};
}

Outcome planner_dominance() {
    std::mt19937_64 rng(500);
    int dominance = 0, valid = 0;
    double ratio_sum = 0;
    int ratio_n = 0;
    for (int i = 0; i < 500; ++i) {
        const auto catalog = test_oracle::random_catalog(rng, 1 + rng() % 4);
        const auto reqs = test_oracle::random_workload(rng, 1 + rng() % 8);
        const double hours = 1 + static_cast<double>(rng() % 24);
        const auto opt = resman::brute_force_plan(reqs, catalog, hours);
        const auto ffd = resman::pack_streams(reqs, catalog, hours);
        const auto naive = resman::naive_plan(reqs, catalog, hours);
        dominance += opt.total_cost_micros <= ffd.total_cost_micros && ffd.total_cost_micros <= naive.total_cost_micros;
        valid += test_oracle::check_plan(opt, reqs, catalog).empty() && test_oracle::check_plan(ffd, reqs, catalog).empty() &&
                 test_oracle::check_plan(naive, reqs, catalog).empty() &&
                 opt.total_cost_micros == static_cast<resman::Micros>(std::llround(
                                              static_cast<long double>(test_oracle::oracle_min_rate(reqs, catalog)) * hours));
        if (opt.total_cost_micros > 0) {
            ratio_sum += static_cast<double>(ffd.total_cost_micros) / static_cast<double>(opt.total_cost_micros);
            ++ratio_n;
        }
    }

    // Consolidation: ten small streams each fit a tenth of one large host.
    std::vector<resman::StreamRequirement> ten;
    for (int i = 0; i < 10; ++i) ten.push_back(sreq("s" + std::to_string(i), 2.0, 200));
    const std::vector<resman::InstanceType> large{itype("large", 100, 100000, 0.5)};
    const auto cons_ffd = resman::pack_streams(ten, large, 1);
    const auto cons_naive = resman::naive_plan(ten, large, 1);
    const auto rows = resman::plan_report({{"naive", cons_naive}, {"ffd", cons_ffd}}, "naive");

    // Location: cameras in eu; eu compute is near and dear, us is far enough
    // to stay above the quality floor and cheaper, ap is too far.
    resman::RttModel model;
    model.set("eu", "eu", 5);
    model.set("us", "eu", 100);
    model.set("ap", "eu", 1000);
    const std::vector<resman::InstanceType> regional{itype("eu.big", 8, 8192, 4.0, "eu"),
                                                     itype("us.big", 8, 8192, 1.5, "us"),
                                                     itype("ap.big", 8, 8192, 0.5, "ap")};
    std::vector<resman::StreamRequirement> eu;
    for (int i = 0; i < 6; ++i) eu.push_back(sreq("c" + std::to_string(i), 0.2, 512, 10, "eu"));
    resman::PlanOptions popt;
    popt.rtt = model;
    const auto joint = resman::pack_streams(eu, regional, 24, popt);
    const auto nearest = resman::nearest_region_plan(eu, regional, 24, model);
    bool floor_ok = joint.unassigned.empty();
    for (const auto& b : joint.bins) {
        for (const auto& id : b.stream_ids) {
            const auto& r = *std::find_if(eu.begin(), eu.end(), [&](const auto& s) { return s.stream_id == id; });
            floor_ok = floor_ok && resman::achieved_fps(r, b.type.region, model) >= 0.9 * r.required_fps;
        }
    }

    const bool ok = dominance == 500 && valid == 500 && cons_ffd.total_cost_micros < cons_naive.total_cost_micros &&
                    joint.total_cost_micros <= nearest.total_cost_micros && floor_ok;
    return {ok, "oracle <= FFD <= naive in " + std::to_string(dominance) + "/500, feasible+exact " +
                    std::to_string(valid) + "/500, mean FFD/oracle " + fmt(ratio_sum / std::max(1, ratio_n), 4) +
                    "; consolidation FFD " + fmt(resman::from_micros(cons_ffd.total_cost_micros), 2) + " < naive " +
                    fmt(resman::from_micros(cons_naive.total_cost_micros), 2) + " (" +
                    fmt(100 * rows[1].reduction.value_or(0), 1) + "% lower); joint " +
                    fmt(resman::from_micros(joint.total_cost_micros), 2) + " <= nearest-region " +
                    fmt(resman::from_micros(nearest.total_cost_micros), 2) + ", quality floor " +
                    (floor_ok ? "held" : "VIOLATED")};
}

Outcome select_instance_type_criterion() {
    std::mt19937_64 rng(1000);
    int match = 0, scale_ok = 0;
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 1000; ++i) {
        const auto catalog = test_oracle::random_catalog(rng, 1 + rng() % 20);
        resman::Resources d{u(rng) * 40, u(rng) * 8000, u(rng) < 0.3 ? u(rng) * 4 : 0.0};
        auto expect = test_oracle::oracle_select(d.cpu, d.memory, d.gpu, catalog);
        while (!expect) {  // redraw until some type can host the demand
            d = {d.cpu / 2, d.memory / 2, d.gpu / 2};
            expect = test_oracle::oracle_select(d.cpu, d.memory, d.gpu, catalog);
        }
        const auto got = resman::select_instance_type(d, catalog).name;
        match += got == *expect;
        bool inv = true;
        for (resman::Micros k : {3, 10, 977}) {
            auto scaled = catalog;
            for (auto& t : scaled) t.cost_micros *= k;
            inv = inv && resman::select_instance_type(d, scaled).name == got;
        }
        scale_ok += inv;
    }
    const std::vector<resman::InstanceType> pair{itype("dear", 8, 4096, 1.40), itype("cheap", 8, 4096, 1.00)};
    const auto pick = resman::select_instance_type(resman::Resources{2, 1024, 0}, pair).name;
    const bool ok = match == 1000 && scale_ok == 1000 && pick == "cheap";
    return {ok, std::to_string(match) + "/1000 catalogs match the exhaustive scan, argmin unchanged under cost scaling in " +
                    std::to_string(scale_ok) + "/1000, 40%-apart pair picks " + pick};
}

Outcome end_to_end(const std::string& script, const std::string& bin) {
    const auto t0 = Clock::now();
    const std::string cmd = script + " " + bin + " 2>&1";
    FILE* p = ::popen(cmd.c_str(), "r");
    if (!p) return {false, "cannot start " + script};
    std::string out, last;
    char buf[1024];
    while (std::fgets(buf, sizeof buf, p)) {
        out += buf;
        std::string line(buf);
        if (!line.empty() && line.back() == '\n') line.pop_back();
        if (!line.empty()) last = line;
    }
    const int status = ::pclose(p);
    const double elapsed = seconds_since(t0);
    const bool ok = WIFEXITED(status) && WEXITSTATUS(status) == 0 && elapsed < 300.0;
    if (!ok) std::cerr << out;
    return {ok, "testbed up -> scan -> serve -> REST job -> results: \"" + last + "\", " + fmt(elapsed, 1) +
                    " s (< 300 s)"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"camgrid acceptance suite"};
    std::string only;
    bool list = false;
    double long_run_seconds = 600;
    std::string e2e_script = CAMGRID_E2E_SCRIPT, camgrid_bin = CAMGRID_BIN;
    app.add_option("--only", only, "Run a single criterion");
    app.add_flag("--list", list, "List criterion names");
    app.add_option("--long-run-seconds", long_run_seconds, "Length of the 10 fps run")->capture_default_str();
    app.add_option("--e2e-script", e2e_script)->capture_default_str();
    app.add_option("--camgrid", camgrid_bin)->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"discovery_precision_recall", discovery_precision_recall},
        {"multipart_fragmentation", multipart_fragmentation},
        {"long_run_throughput", [&] { return long_run_throughput(long_run_seconds); }},
        {"motion_oracle", motion_oracle},
        {"clustering_scalability", clustering_scalability},
        {"registry_oracle", registry_oracle},
        {"planner_dominance", planner_dominance},
        {"select_instance_type", select_instance_type_criterion},
        {"end_to_end", [&] { return end_to_end(e2e_script, camgrid_bin); }},
    };
    if (list) {
        for (const auto& [name, _] : criteria) std::cout << name << "\n";
        return 0;
    }
    bool any = false, all_pass = true;
    for (const auto& [name, fn] : criteria) {
        if (!only.empty() && name != only) continue;
        any = true;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        all_pass = all_pass && o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    }
    if (!any) {
        std::cerr << "no criterion named " << only << "\n";
        return 2;
    }
    return all_pass ? 0 : 1;
}
