#include "camgrid/cli/dispatch.hpp"

#include <signal.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "camgrid/core/serialize.hpp"
#include "camgrid/discovery/cidr.hpp"
#include "camgrid/discovery/scan.hpp"
#include "camgrid/registry/service.hpp"
#include "camgrid/registry/snapshot_cache.hpp"
#include "camgrid/registry/store.hpp"
#include "camgrid/resman/planner.hpp"
#include "camgrid/resman/report.hpp"
#include "camgrid/runtime/runtime.hpp"
#include "camgrid/testbed/farm.hpp"

namespace camgrid::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument:
        case ErrorCode::validation:
        case ErrorCode::config:
        case ErrorCode::parse:
        case ErrorCode::not_found:
            return kExitUsage;
        default:
            return kExitRuntime;
    }
}

CameraRecord record_for(const discovery::DiscoveryCandidate& candidate, Timestamp now) {
    const auto& v = candidate.verification;
    CameraRecord rec;
    rec.endpoint.url = "http://" + candidate.hit.address + candidate.hit.path;
    switch (v.detected_format) {
        case discovery::DetectedFormat::mjpeg:
            rec.endpoint.mode = RetrievalMode::mjpeg_stream;
            rec.endpoint.declared_format = MediaFormat::mjpeg;
            break;
        case discovery::DetectedFormat::png:
            rec.endpoint.declared_format = MediaFormat::png;
            break;
        case discovery::DetectedFormat::jpeg:
            rec.endpoint.declared_format = MediaFormat::jpeg;
            break;
        case discovery::DetectedFormat::none:
            break;
    }
    rec.id = camera_id_for(rec.endpoint.url, rec.endpoint.mode);
    rec.kind = CameraKind::ip_camera;
    rec.location.provenance = LocationProvenance::unknown;
    if (v.width && v.height) {
        rec.quality.width = v.width;
        rec.quality.height = v.height;
    }
    std::size_t ok = 0;
    std::optional<Timestamp> first, last_ok;
    for (const auto& e : v.evidence) {
        if (!first || e.at < *first) first = e.at;
        if (e.payload_hash && !e.error) {
            ++ok;
            if (!last_ok || e.at > *last_ok) last_ok = e.at;
        }
    }
    if (!v.evidence.empty()) rec.reliability.uptime_fraction = static_cast<double>(ok) / v.evidence.size();
    rec.reliability.last_seen = std::min(last_ok.value_or(now), now);
    if (first && last_ok && *last_ok > *first) {
        rec.reliability.observation_window = std::chrono::duration<double>(*last_ok - *first).count();
    }
    if (!candidate.hit.brand.empty()) rec.tags.insert("brand:" + candidate.hit.brand);
    return rec;
}

namespace {

json read_json_file(const std::string& path, const std::string& what) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::invalid_argument, "cannot read " + what + " file " + path, {{"path", path}});
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse, what + " file " + path + " is not JSON: " + e.what(), {{"path", path}});
    }
}

void write_file_atomic(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream o(tmp, std::ios::trunc);
        if (!o) throw Error(ErrorCode::storage, "cannot write " + tmp, {{"path", tmp}});
        o << text;
        if (!o.flush()) throw Error(ErrorCode::storage, "cannot write " + tmp, {{"path", tmp}});
    }
    fs::rename(tmp, path);
}

std::vector<discovery::BrandSignature> signatures_for(const CliConfig& c) {
    if (c.signatures.empty()) return discovery::parse_signatures(testbed::brand_signatures_json());
    return discovery::load_signatures(c.signatures);
}

ingestion::HttpOptions http_for(const CliConfig& c) {
    ingestion::HttpOptions h;
    h.timeout = std::chrono::milliseconds(c.http_timeout_ms);
    return h;
}

// Blocks SIGINT/SIGTERM for the calling thread and every thread it starts
// afterwards, so wait() can collect them synchronously.
class SignalWait {
public:
    SignalWait() {
        sigemptyset(&set_);
        sigaddset(&set_, SIGINT);
        sigaddset(&set_, SIGTERM);
        pthread_sigmask(SIG_BLOCK, &set_, &old_);
    }
    ~SignalWait() {
        // Drop anything that arrived so unblocking does not kill us.
        timespec zero{0, 0};
        while (sigtimedwait(&set_, nullptr, &zero) > 0) {
        }
        pthread_sigmask(SIG_SETMASK, &old_, nullptr);
    }
    SignalWait(const SignalWait&) = delete;
    SignalWait& operator=(const SignalWait&) = delete;

    // Returns the signal, or 0 when `for_s` > 0 elapsed first.
    int wait(double for_s) {
        if (for_s <= 0) {
            int sig = 0;
            sigwait(&set_, &sig);
            return sig;
        }
        const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(for_s);
        for (;;) {
            const auto left = deadline - std::chrono::steady_clock::now();
            if (left <= std::chrono::steady_clock::duration::zero()) return 0;
            const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(left).count();
            timespec ts{static_cast<time_t>(ns / 1'000'000'000), static_cast<long>(ns % 1'000'000'000)};
            const int sig = sigtimedwait(&set_, nullptr, &ts);
            if (sig > 0) return sig;
            if (errno != EINTR) return 0;
        }
    }

private:
    sigset_t set_{};
    sigset_t old_{};
};

struct Context {
    std::ostream& out;
    std::ostream& err;
    ResolvedConfig resolved;
    [[nodiscard]] const CliConfig& cfg() const { return resolved.config; }
};

// ---- scan

struct ScanArgs {
    std::string range;
    std::vector<std::string> hosts;
    int probe_port = 80;
    bool allow_public = false;
    bool reject_static = false;
    bool do_register = false;
};

int run_scan(Context& ctx, const ScanArgs& a) {
    if (a.range.empty() == a.hosts.empty()) {
        throw Error(ErrorCode::invalid_argument, "give exactly one of --range or --hosts");
    }
    const auto& c = ctx.cfg();
    discovery::ScanOptions opts;
    opts.port = a.probe_port;
    opts.concurrency_limit = c.concurrency;
    opts.rate_limit = c.rate_limit;
    opts.timeout = std::chrono::milliseconds(c.http_timeout_ms);
    opts.liveness_delay_s = c.liveness_delay_s;
    opts.allow_public = a.allow_public;
    opts.reject_static = a.reject_static;
    const auto sigs = signatures_for(c);

    discovery::ScanStats stats;
    const auto candidates = a.range.empty() ? discovery::scan_hosts(a.hosts, sigs, opts, &stats)
                                            : discovery::scan_range(a.range, sigs, opts, &stats);

    json registered = json::array();
    if (a.do_register) {
        registry::Store store(c.db);
        const auto now = now_utc();
        for (const auto& cand : candidates) {
            if (!cand.verification.is_image) continue;
            const auto rec = store.upsert_camera(record_for(cand, now), cand.disposition);
            registered.push_back({{"id", rec.id}, {"disposition", discovery::to_string(cand.disposition)}});
        }
    }
    std::size_t accepted = 0;
    for (const auto& cand : candidates) accepted += cand.disposition == discovery::Disposition::accepted;

    json out = {{"candidates", candidates},
                {"accepted", accepted},
                {"stats",
                 {{"addresses", stats.addresses},
                  {"requests", stats.requests},
                  {"hits", stats.hits},
                  {"elapsed_s", stats.elapsed_s}}}};
    if (a.do_register) out["registered"] = registered;
    ctx.out << out.dump(2) << "\n";
    ctx.err << "scan: " << stats.addresses << " addresses, " << stats.hits << " hits, " << accepted
            << " accepted in " << stats.elapsed_s << " s\n";
    return kExitOk;
}

// ---- serve

struct ServeArgs {
    int threads = 8;
    double for_s = 0;
    bool access_log = false;
};

int run_serve(Context& ctx, const ServeArgs& a) {
    const auto& c = ctx.cfg();
    SignalWait signals;
    auto store = std::make_shared<registry::Store>(c.db);
    runtime::RuntimeOptions ropts;
    ropts.max_concurrent_streams = c.max_concurrent_streams;
    ropts.http = http_for(c);
    auto rt = std::make_shared<runtime::Runtime>(registry::camera_resolver(store), store,
                                                 runtime::AnalyzerRegistry::with_builtins(),
                                                 runtime::DecoderSet::builtin(), ropts);
    auto snapshots = std::make_shared<registry::SnapshotCache>(registry::SnapshotCache::live_fetcher(http_for(c)));
    registry::ServiceOptions sopts;
    sopts.host = c.host;
    sopts.port = c.port;
    sopts.threads = a.threads;
    if (a.access_log) {
        auto mu = std::make_shared<std::mutex>();
        sopts.access_log = [mu, &err = ctx.err](const std::string& line) {
            std::lock_guard lock(*mu);
            err << line << "\n" << std::flush;
        };
    }
    registry::Service service(store, rt, snapshots, sopts);
    service.start();
    ctx.out << json{{"listening", service.base_url()}, {"port", service.port()}, {"db", c.db},
                    {"pid", static_cast<long long>(::getpid())}}.dump() << "\n"
            << std::flush;
    ctx.err << "serving " << service.base_url() << " (db " << c.db << ")\n" << std::flush;
    const int sig = signals.wait(a.for_s);
    ctx.err << (sig ? "signal received, stopping\n" : "serve time elapsed, stopping\n");
    service.stop();
    rt->shutdown();
    return kExitOk;
}

// ---- ingest

struct IngestArgs {
    std::vector<std::string> cameras;
    std::vector<std::string> urls;
    std::string mode = "snapshot_poll";
    std::string analyzer = "motion_feature_count";
    double fps = 1.0;
    double duration_s = 10.0;
    std::string params = "{}";
};

int run_ingest(Context& ctx, const IngestArgs& a) {
    const auto& c = ctx.cfg();
    const auto mode = parse_retrieval_mode(a.mode);
    if (!mode) throw Error(ErrorCode::invalid_argument, "unknown mode " + a.mode, {{"mode", a.mode}});
    json params;
    try {
        params = json::parse(a.params);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse, std::string("--params is not JSON: ") + e.what());
    }
    auto store = std::make_shared<registry::Store>(c.db);
    runtime::JobRequest req;
    req.camera_ids = a.cameras;
    for (const auto& url : a.urls) {
        CameraRecord rec;
        rec.endpoint.url = url;
        rec.endpoint.mode = *mode;
        rec.id = camera_id_for(url, *mode);
        rec.location.provenance = LocationProvenance::unknown;
        rec.reliability.last_seen = now_utc();
        if (!store->get_camera(rec.id)) store->upsert_camera(rec);
        req.camera_ids.push_back(rec.id);
    }
    if (req.camera_ids.empty()) throw Error(ErrorCode::invalid_argument, "give at least one --camera or --url");
    req.fps = a.fps;
    req.duration_s = a.duration_s;
    req.analyzer = a.analyzer;
    req.params = params;

    runtime::RuntimeOptions ropts;
    ropts.max_concurrent_streams = c.max_concurrent_streams;
    ropts.http = http_for(c);
    runtime::Runtime rt(registry::camera_resolver(store), store, runtime::AnalyzerRegistry::with_builtins(),
                        runtime::DecoderSet::builtin(), ropts);
    const auto id = rt.submit(req);
    ctx.err << "job " << id << " submitted\n" << std::flush;
    const auto budget = std::chrono::milliseconds(static_cast<long long>((a.duration_s + 60.0) * 1000));
    if (!rt.wait(id, budget)) {
        ctx.err << "job " << id << " overran its duration, cancelling\n";
        rt.cancel(id);
        rt.wait(id, std::chrono::seconds(30));
    }
    const auto results = rt.results(id);
    rt.shutdown();
    ctx.out << to_json(results).dump(2) << "\n";
    ctx.err << "job " << id << " " << runtime::to_string(results.job.state) << "\n";
    return results.job.state == runtime::JobState::finished ? kExitOk : kExitRuntime;
}

// ---- plan

struct PlanArgs {
    std::string workload;
    std::string catalog;
    double duration_h = 1.0;
    std::string rtt;
    std::string planner = "ffd";
    bool compare = false;
    bool oracle = false;
    double quality_floor = 0.9;
};

int run_plan(Context& ctx, const PlanArgs& a) {
    const auto reqs = resman::workload_from_json(read_json_file(a.workload, "workload"));
    const auto catalog = resman::catalog_from_json(read_json_file(a.catalog, "catalog"));
    resman::PlanOptions opts;
    opts.quality_floor = a.quality_floor;
    if (!a.rtt.empty()) opts.rtt = resman::rtt_model_from_json(read_json_file(a.rtt, "rtt"));

    auto make = [&](const std::string& name) -> resman::AllocationPlan {
        if (name == "ffd") return resman::pack_streams(reqs, catalog, a.duration_h, opts);
        if (name == "naive") return resman::naive_plan(reqs, catalog, a.duration_h, opts);
        if (name == "optimal") return resman::brute_force_plan(reqs, catalog, a.duration_h, opts);
        if (name == "nearest") {
            if (!opts.rtt) throw Error(ErrorCode::invalid_argument, "the nearest planner needs --rtt");
            return resman::nearest_region_plan(reqs, catalog, a.duration_h, *opts.rtt);
        }
        throw Error(ErrorCode::invalid_argument, "unknown planner " + name, {{"planner", name}});
    };

    if (!a.compare) {
        ctx.out << to_json(make(a.planner)).dump(2) << "\n";
        return kExitOk;
    }
    std::vector<std::string> names{"naive", "ffd"};
    if (opts.rtt) names.push_back("nearest");
    if (a.oracle) names.push_back("optimal");
    std::vector<std::pair<std::string, resman::AllocationPlan>> plans;
    json plans_json = json::object();
    for (const auto& n : names) {
        plans.emplace_back(n, make(n));
        plans_json[n] = to_json(plans.back().second);
    }
    const auto rows = resman::plan_report(plans, "naive");
    ctx.out << json{{"plans", plans_json}, {"report", resman::to_json(rows)}}.dump(2) << "\n";
    ctx.err << resman::format_report(rows);
    return kExitOk;
}

// ---- testbed

struct TestbedUpArgs {
    std::string spec;
    int cameras = 4;
    int decoys = 0;
    std::string base = "127.0.20.0";
    int farm_port = 0;
    double fps = 2.0;
    std::string modes = "mixed";
    std::string state = "camgrid-testbed.json";
    double for_s = 0;
};

std::string covering_range(const std::string& base, std::size_t hosts) {
    const auto net = discovery::parse_ipv4(base);
    for (int prefix = 30; prefix >= 16; --prefix) {
        const std::uint64_t usable = (std::uint64_t{1} << (32 - prefix)) - 2;
        const std::uint32_t mask = prefix == 0 ? 0 : ~std::uint32_t{0} << (32 - prefix);
        if (usable >= hosts && (net & mask) == net) return discovery::format_ipv4(net) + "/" + std::to_string(prefix);
    }
    return discovery::format_ipv4(net) + "/16";
}

testbed::FarmSpec farm_spec_for(const TestbedUpArgs& a) {
    testbed::FarmSpec spec;
    if (!a.spec.empty()) {
        try {
            spec = read_json_file(a.spec, "farm spec").get<testbed::FarmSpec>();
        } catch (const json::exception& e) {
            throw Error(ErrorCode::parse, "farm spec " + a.spec + ": " + e.what(), {{"path", a.spec}});
        }
        return spec;
    }
    if (a.cameras < 0 || a.decoys < 0) throw Error(ErrorCode::invalid_argument, "counts must be >= 0");
    if (!(a.fps > 0)) throw Error(ErrorCode::invalid_argument, "--fps must be > 0");
    if (a.modes != "mixed" && a.modes != "snapshot" && a.modes != "mjpeg") {
        throw Error(ErrorCode::invalid_argument, "--modes must be mixed, snapshot or mjpeg");
    }
    spec.address_base = a.base;
    spec.port = a.farm_port;
    spec.decoys = a.decoys;
    const auto& brands = testbed::brand_catalog();
    for (int i = 0; i < a.cameras; ++i) {
        testbed::CameraSpec cam;
        cam.brand = brands[i % brands.size()].brand;
        const bool mjpeg = a.modes == "mjpeg" || (a.modes == "mixed" && i % 2 == 1);
        cam.mode = mjpeg ? RetrievalMode::mjpeg_stream : RetrievalMode::snapshot_poll;
        cam.fps = a.fps;
        cam.scene.seed = static_cast<std::uint64_t>(i) + 1;
        spec.cameras.push_back(cam);
    }
    return spec;
}

int run_testbed_up(Context& ctx, const TestbedUpArgs& a) {
    auto spec = farm_spec_for(a);
    SignalWait signals;
    testbed::Farm farm(spec);
    json state = {{"pid", static_cast<long long>(::getpid())},
                  {"range", covering_range(spec.address_base,
                                           farm.cameras().size() + farm.decoy_hosts().size())},
                  {"farm", farm.describe()}};
    write_file_atomic(a.state, state.dump(2) + "\n");
    ctx.out << state.dump() << "\n" << std::flush;
    ctx.err << "testbed up: " << farm.cameras().size() << " cameras, " << farm.decoy_hosts().size()
            << " decoys on port " << farm.port() << " (state " << a.state << ")\n"
            << std::flush;
    signals.wait(a.for_s);
    farm.stop();
    std::error_code ec;
    fs::remove(a.state, ec);
    ctx.err << "testbed stopped\n";
    return kExitOk;
}

int run_testbed_down(Context& ctx, const std::string& state_path, double timeout_s) {
    const auto state = read_json_file(state_path, "testbed state");
    if (!state.contains("pid") || !state["pid"].is_number_integer()) {
        throw Error(ErrorCode::parse, "testbed state has no pid", {{"path", state_path}});
    }
    const auto pid = static_cast<pid_t>(state["pid"].get<long long>());
    if (::kill(pid, SIGTERM) != 0) {
        std::error_code ec;
        fs::remove(state_path, ec);
        ctx.out << json{{"stopped", pid}, {"was_running", false}}.dump() << "\n";
        return kExitOk;
    }
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
    while (fs::exists(state_path) && ::kill(pid, 0) == 0) {
        if (std::chrono::steady_clock::now() > deadline) {
            throw Error(ErrorCode::timeout, "testbed process did not stop", {{"pid", pid}});
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    ctx.out << json{{"stopped", pid}, {"was_running", true}}.dump() << "\n";
    return kExitOk;
}

// Flags that feed the layered config; only the ones actually given count.
struct ConfigFlags {
    std::string config, db, host, signatures;
    int port = 0, http_timeout_ms = 0, concurrency = 0, max_streams = 0;
    double rate_limit = 0, liveness_delay_s = 0;
    std::vector<std::pair<CLI::Option*, std::string>> opts;

    void add(CLI::App& app) {
        opts = {{app.add_option("--config", config, "JSON config file (env CAMGRID_CONFIG)"), "config"},
                {app.add_option("--db", db, "Registry database path (env CAMGRID_DB)"), "db"},
                {app.add_option("--host", host, "Listen address for serve (env CAMGRID_HOST)"), "host"},
                {app.add_option("--port", port, "Listen port for serve, 0 for any (env CAMGRID_PORT)"), "port"},
                {app.add_option("--http-timeout-ms", http_timeout_ms, "HTTP timeout (env CAMGRID_HTTP_TIMEOUT_MS)"),
                 "http_timeout_ms"},
                {app.add_option("--rate-limit", rate_limit, "Scan requests per second (env CAMGRID_RATE_LIMIT)"),
                 "rate_limit"},
                {app.add_option("--concurrency", concurrency, "Scan concurrency cap (env CAMGRID_CONCURRENCY)"),
                 "concurrency"},
                {app.add_option("--liveness-delay", liveness_delay_s,
                                "Seconds between verification fetches (env CAMGRID_LIVENESS_DELAY_S)"),
                 "liveness_delay_s"},
                {app.add_option("--signatures", signatures,
                                "Brand signature file; default is the built-in set (env CAMGRID_SIGNATURES)"),
                 "signatures"},
                {app.add_option("--max-streams", max_streams,
                                "Runtime stream cap (env CAMGRID_MAX_CONCURRENT_STREAMS)"),
                 "max_concurrent_streams"}};
        for (auto& [o, _] : opts) o->group("Config");
    }

    [[nodiscard]] json given() const {
        json j = json::object();
        for (const auto& [o, key] : opts) {
            if (o->count() == 0) continue;
            j[key] = o->results().back();  // text; resolve_config converts
        }
        return j;
    }
};

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env) {
    CLI::App app{"camgrid: network camera discovery, registry, analysis and planning", "camgrid"};
    app.require_subcommand(1);
    ConfigFlags flags;
    flags.add(app);

    ScanArgs scan;
    auto* scan_cmd = app.add_subcommand("scan", "Probe an address range for cameras and verify hits");
    scan_cmd->add_option("--range", scan.range, "CIDR range, e.g. 192.168.1.0/24");
    scan_cmd->add_option("--hosts", scan.hosts, "Explicit host names instead of a range")->delimiter(',');
    scan_cmd->add_option("--probe-port", scan.probe_port, "Port to probe")->capture_default_str();
    scan_cmd->add_flag("--allow-public", scan.allow_public, "Allow ranges outside private address space");
    scan_cmd->add_flag("--reject-static", scan.reject_static, "Reject images that do not change");
    scan_cmd->add_flag("--register", scan.do_register, "Store image candidates in the registry database");

    ServeArgs serve;
    auto* serve_cmd = app.add_subcommand("serve", "Run the registry REST service");
    serve_cmd->add_option("--threads", serve.threads, "HTTP worker threads")->capture_default_str();
    serve_cmd->add_option("--for", serve.for_s, "Stop after this many seconds (0: until SIGINT/SIGTERM)");
    serve_cmd->add_flag("--access-log", serve.access_log, "Log each request to stderr");

    IngestArgs ingest;
    auto* ingest_cmd = app.add_subcommand("ingest", "Run one analysis job and print its results");
    ingest_cmd->add_option("--camera", ingest.cameras, "Registered camera id (repeatable)");
    ingest_cmd->add_option("--url", ingest.urls, "Ad-hoc endpoint URL, registered on the fly (repeatable)");
    ingest_cmd->add_option("--mode", ingest.mode, "Mode for --url: snapshot_poll or mjpeg_stream")
        ->capture_default_str();
    ingest_cmd->add_option("--analyzer", ingest.analyzer, "Analyzer name")->capture_default_str();
    ingest_cmd->add_option("--fps", ingest.fps, "Frames per second")->capture_default_str();
    ingest_cmd->add_option("--duration", ingest.duration_s, "Seconds")->capture_default_str();
    ingest_cmd->add_option("--params", ingest.params, "Analyzer parameters as a JSON object")->capture_default_str();

    PlanArgs plan;
    auto* plan_cmd = app.add_subcommand("plan", "Plan instance allocation for a stream workload");
    plan_cmd->add_option("--workload", plan.workload, "Stream requirements JSON")->required();
    plan_cmd->add_option("--catalog", plan.catalog, "Instance type catalog JSON")->required();
    plan_cmd->add_option("--duration", plan.duration_h, "Hours")->capture_default_str();
    plan_cmd->add_option("--rtt", plan.rtt, "RTT model JSON; enables quality-aware placement");
    plan_cmd->add_option("--planner", plan.planner, "ffd, naive, optimal or nearest")->capture_default_str();
    plan_cmd->add_flag("--compare", plan.compare, "Run every applicable planner and report costs against naive");
    plan_cmd->add_flag("--oracle", plan.oracle, "With --compare, include the exact optimum (small inputs only)");
    plan_cmd->add_option("--quality-floor", plan.quality_floor, "Minimum achieved/required fps ratio")
        ->capture_default_str();

    TestbedUpArgs up;
    std::string down_state = "camgrid-testbed.json";
    double down_timeout = 15;
    auto* testbed_cmd = app.add_subcommand("testbed", "Emulated camera farm");
    testbed_cmd->require_subcommand(1);
    auto* up_cmd = testbed_cmd->add_subcommand("up", "Start a farm and keep it running until signalled");
    up_cmd->add_option("--spec", up.spec, "FarmSpec JSON (overrides the other farm flags)");
    up_cmd->add_option("--cameras", up.cameras, "Number of cameras, brands in rotation")->capture_default_str();
    up_cmd->add_option("--decoys", up.decoys, "Number of non-camera web servers")->capture_default_str();
    up_cmd->add_option("--base", up.base, "Address base; hosts are base+1, base+2, ...")->capture_default_str();
    up_cmd->add_option("--farm-port", up.farm_port, "Port shared by every host (0: any free)")
        ->capture_default_str();
    up_cmd->add_option("--fps", up.fps, "Camera frame rate")->capture_default_str();
    up_cmd->add_option("--modes", up.modes, "mixed, snapshot or mjpeg")->capture_default_str();
    up_cmd->add_option("--state", up.state, "State file written once the farm is listening")->capture_default_str();
    up_cmd->add_option("--for", up.for_s, "Stop after this many seconds (0: until SIGINT/SIGTERM)");
    auto* down_cmd = testbed_cmd->add_subcommand("down", "Stop the farm named by a state file");
    down_cmd->add_option("--state", down_state, "State file from testbed up")->capture_default_str();
    down_cmd->add_option("--timeout", down_timeout, "Seconds to wait for the farm to exit")->capture_default_str();
    auto* sigs_cmd = testbed_cmd->add_subcommand("signatures", "Print the brand signature file for the farm");

    auto* config_cmd = app.add_subcommand("config", "Configuration");
    config_cmd->require_subcommand(1);
    auto* show_cmd = config_cmd->add_subcommand("show", "Print the effective configuration and where each value came from");

    for (auto* sub : {scan_cmd, serve_cmd, ingest_cmd, plan_cmd, testbed_cmd, up_cmd, down_cmd, sigs_cmd, config_cmd,
                      show_cmd}) {
        sub->fallthrough();
    }

    std::vector<const char*> argv{"camgrid"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "camgrid: " << e.what() << "\n\n";
        CLI::App* deepest = &app;
        for (auto* sub = &app; !sub->get_subcommands().empty();) {
            sub = sub->get_subcommands().front();
            deepest = sub;
        }
        err << deepest->help();
        return kExitUsage;
    }

    try {
        Context ctx{out, err, resolve_config(flags.given(), env)};
        if (*scan_cmd) return run_scan(ctx, scan);
        if (*serve_cmd) return run_serve(ctx, serve);
        if (*ingest_cmd) return run_ingest(ctx, ingest);
        if (*plan_cmd) return run_plan(ctx, plan);
        if (*up_cmd) return run_testbed_up(ctx, up);
        if (*down_cmd) return run_testbed_down(ctx, down_state, down_timeout);
        if (*sigs_cmd) {
            out << testbed::brand_signatures_json().dump(2) << "\n";
            return kExitOk;
        }
        if (*show_cmd) {
            out << to_json(ctx.resolved).dump(2) << "\n";
            return kExitOk;
        }
        err << app.help();
        return kExitUsage;
    } catch (const Error& e) {
        err << "camgrid: " << to_string(e.code()) << ": " << e.what() << "\n";
        if (!e.details().empty()) err << "  details: " << e.details().dump() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "camgrid: internal: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace camgrid::cli
