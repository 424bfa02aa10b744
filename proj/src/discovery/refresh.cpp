#include "camgrid/discovery/refresh.hpp"

#include <algorithm>
#include <thread>

#include "camgrid/core/error.hpp"
#include "camgrid/core/hash.hpp"
#include "camgrid/ingestion/multipart.hpp"
#include "camgrid/ingestion/snapshot.hpp"

namespace camgrid::discovery {

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

[[noreturn]] void too_few(const RefreshEstimate& partial) {
    throw Error(ErrorCode::estimation, "fewer than two successful fetches", nlohmann::json(partial));
}

RefreshEstimate estimate_stream(const StreamEndpoint& endpoint, int samples, const ingestion::HttpOptions& http) {
    RefreshEstimate est;
    std::vector<double> arrivals;
    std::optional<ingestion::MultipartParserState> parser;
    std::string error;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        ingestion::http_stream(
            endpoint.url, http,
            [&](const ingestion::StreamHead& head) {
                if (head.status != 200) {
                    error = "upstream answered HTTP " + std::to_string(head.status);
                    return false;
                }
                const auto b = ingestion::boundary_from_content_type(head.content_type);
                if (!b) {
                    error = "stream has no multipart boundary";
                    return false;
                }
                parser = ingestion::make_multipart_state(*b);
                return true;
            },
            [&](std::span<const std::uint8_t> chunk) {
                for (auto& part : ingestion::feed_multipart(*parser, chunk)) {
                    arrivals.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
                    est.evidence.push_back({now_utc(), payload_hash(part.payload), std::nullopt});
                }
                return arrivals.size() < static_cast<std::size_t>(samples);
            });
    } catch (const Error& e) {
        error = e.what();
    }
    if (!error.empty()) est.evidence.push_back({now_utc(), std::nullopt, error});
    est.samples = static_cast<int>(arrivals.size());
    if (arrivals.size() < 2) too_few(est);
    std::vector<double> gaps;
    for (std::size_t i = 1; i < arrivals.size(); ++i) gaps.push_back(arrivals[i] - arrivals[i - 1]);
    est.changes = static_cast<int>(gaps.size());
    const double m = median(gaps);
    if (m > 0.0) est.fps = 1.0 / m;
    return est;
}

}  // namespace

void to_json(nlohmann::json& j, const RefreshEstimate& e) {
    j = {{"static", e.is_static},
         {"fps", e.fps ? nlohmann::json(*e.fps) : nlohmann::json(nullptr)},
         {"samples", e.samples},
         {"changes", e.changes},
         {"evidence", e.evidence}};
}

RefreshPorts live_refresh_ports(const ingestion::HttpOptions& http) {
    RefreshPorts p;
    p.fetch = [http](const StreamEndpoint& e) { return ingestion::fetch_snapshot_frame(e, http).bytes; };
    p.clock = [] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
    };
    p.sleep_for = [](double s) {
        if (s > 0) std::this_thread::sleep_for(std::chrono::duration<double>(s));
    };
    return p;
}

RefreshEstimate estimate_refresh_rate(const StreamEndpoint& endpoint, int samples, double poll_interval_s,
                                      const RefreshPorts& ports) {
    if (samples < 3) throw Error(ErrorCode::invalid_argument, "snapshot sampling needs at least 3 samples");
    if (!(poll_interval_s > 0.0)) throw Error(ErrorCode::invalid_argument, "poll interval must be positive");
    RefreshEstimate est;
    std::vector<std::pair<double, std::string>> seen;  // (time, hash) of successful fetches
    const double start = ports.clock();
    for (int i = 0; i < samples; ++i) {
        if (i > 0) ports.sleep_for(start + i * poll_interval_s - ports.clock());
        const double t = ports.clock();
        FetchEvidence ev;
        ev.at = now_utc();
        try {
            ev.payload_hash = payload_hash(ports.fetch(endpoint));
            seen.emplace_back(t, *ev.payload_hash);
        } catch (const Error& e) {
            ev.error = e.what();
        }
        est.evidence.push_back(std::move(ev));
    }
    est.samples = static_cast<int>(seen.size());
    if (seen.size() < 2) too_few(est);
    std::vector<double> change_times;
    for (std::size_t i = 1; i < seen.size(); ++i) {
        if (seen[i].second != seen[i - 1].second) change_times.push_back(seen[i].first);
    }
    est.changes = static_cast<int>(change_times.size());
    if (change_times.empty()) {
        est.is_static = true;
    } else if (change_times.size() == 1) {
        est.fps = 1.0 / (seen.back().first - seen.front().first);
    } else {
        std::vector<double> gaps;
        for (std::size_t i = 1; i < change_times.size(); ++i) gaps.push_back(change_times[i] - change_times[i - 1]);
        est.fps = 1.0 / median(gaps);
    }
    return est;
}

RefreshEstimate estimate_refresh_rate(const StreamEndpoint& endpoint, int samples, double poll_interval_s,
                                      const ingestion::HttpOptions& http) {
    if (endpoint.mode == RetrievalMode::mjpeg_stream) {
        if (samples < 2) throw Error(ErrorCode::invalid_argument, "stream timing needs at least 2 frames");
        return estimate_stream(endpoint, samples, http);
    }
    return estimate_refresh_rate(endpoint, samples, poll_interval_s, live_refresh_ports(http));
}

}  // namespace camgrid::discovery
