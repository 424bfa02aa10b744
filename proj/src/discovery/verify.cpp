#include "camgrid/discovery/verify.hpp"

#include <thread>

#include "camgrid/core/error.hpp"
#include "camgrid/core/hash.hpp"
#include "camgrid/core/serialize.hpp"
#include "camgrid/ingestion/format.hpp"
#include "camgrid/ingestion/snapshot.hpp"

namespace camgrid::discovery {

namespace {

bool is_multipart(const std::string& content_type) {
    std::string ct;
    for (char c : content_type) ct.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return ct.rfind("multipart/", 0) == 0;
}

// Bytes of one image: the body of a snapshot or the first part of a stream.
std::vector<std::uint8_t> fetch_payload(const ProbeHit& hit, const ingestion::HttpOptions& http) {
    StreamEndpoint e;
    e.url = "http://" + hit.address + hit.path;
    if (is_multipart(hit.content_type)) {
        e.mode = RetrievalMode::mjpeg_stream;
        return ingestion::fetch_stream_frame(e, http).bytes;
    }
    auto r = ingestion::http_get(e.url, http);
    if (r.status != 200) {
        throw Error(ErrorCode::http_status, "upstream answered HTTP " + std::to_string(r.status),
                    {{"status", r.status}});
    }
    return std::move(r.body);
}

}  // namespace

std::string to_string(DetectedFormat f) {
    switch (f) {
        case DetectedFormat::jpeg: return "jpeg";
        case DetectedFormat::png: return "png";
        case DetectedFormat::mjpeg: return "mjpeg";
        case DetectedFormat::none: return "none";
    }
    return "none";
}

std::string to_string(Disposition d) {
    switch (d) {
        case Disposition::accepted: return "accepted";
        case Disposition::rejected_not_image: return "rejected_not_image";
        case Disposition::rejected_static: return "rejected_static";
        case Disposition::pending_review: return "pending_review";
    }
    return "rejected_not_image";
}

std::optional<Disposition> parse_disposition(std::string_view s) {
    for (auto d : {Disposition::accepted, Disposition::rejected_not_image, Disposition::rejected_static,
                   Disposition::pending_review}) {
        if (s == to_string(d)) return d;
    }
    return std::nullopt;
}

void to_json(nlohmann::json& j, const FetchEvidence& e) {
    j = {{"at", format_timestamp(e.at)}, {"payload_hash", json_detail::opt(e.payload_hash)},
         {"error", json_detail::opt(e.error)}};
}

void to_json(nlohmann::json& j, const VerificationResult& v) {
    j = {{"is_image", v.is_image},
         {"detected_format", to_string(v.detected_format)},
         {"is_live", v.is_live},
         {"width", json_detail::opt(v.width)},
         {"height", json_detail::opt(v.height)},
         {"evidence", v.evidence}};
}

void to_json(nlohmann::json& j, const DiscoveryCandidate& c) {
    j = {{"hit", c.hit}, {"verification", c.verification}, {"disposition", to_string(c.disposition)}};
}

PendingVerification begin_verification(const ProbeHit& hit, const ingestion::HttpOptions& http,
                                       RateLimiter* limiter) {
    PendingVerification p;
    p.hit = hit;
    if (limiter) limiter->acquire();
    p.first_at = std::chrono::steady_clock::now();
    FetchEvidence ev;
    ev.at = now_utc();
    try {
        const auto bytes = fetch_payload(hit, http);
        ev.payload_hash = payload_hash(bytes);
        p.first_hash = ev.payload_hash;
        const auto fmt = ingestion::detect_format(bytes);
        if (fmt == FrameFormat::jpeg || fmt == FrameFormat::png) {
            p.result.is_image = true;
            if (is_multipart(hit.content_type)) p.result.detected_format = DetectedFormat::mjpeg;
            else p.result.detected_format = fmt == FrameFormat::jpeg ? DetectedFormat::jpeg : DetectedFormat::png;
            try {
                const auto dims = ingestion::parse_image_dimensions(bytes, fmt);
                p.result.width = dims.width;
                p.result.height = dims.height;
            } catch (const Error&) {
                // dims stay unknown; the magic bytes already settled is_image
            }
        }
    } catch (const Error& e) {
        ev.error = std::string(to_string(e.code())) + ": " + e.what();
    }
    p.result.evidence.push_back(std::move(ev));
    return p;
}

VerificationResult finish_verification(PendingVerification p, double liveness_delay_s,
                                       const ingestion::HttpOptions& http, RateLimiter* limiter) {
    if (!p.result.is_image) return std::move(p.result);
    std::this_thread::sleep_until(p.first_at + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                   std::chrono::duration<double>(liveness_delay_s)));
    if (limiter) limiter->acquire();
    FetchEvidence ev;
    ev.at = now_utc();
    try {
        const auto bytes = fetch_payload(p.hit, http);
        ev.payload_hash = payload_hash(bytes);
        p.result.is_live = ev.payload_hash != p.first_hash;
    } catch (const Error& e) {
        ev.error = std::string(to_string(e.code())) + ": " + e.what();
        p.result.is_live = false;
    }
    p.result.evidence.push_back(std::move(ev));
    return std::move(p.result);
}

VerificationResult verify_candidate(const ProbeHit& hit, const VerifyOptions& options, RateLimiter* limiter) {
    if (!(options.liveness_delay_s > 0.0)) {
        throw Error(ErrorCode::invalid_argument, "liveness delay must be positive");
    }
    return finish_verification(begin_verification(hit, options.http, limiter), options.liveness_delay_s, options.http,
                               limiter);
}

Disposition disposition_for(const VerificationResult& v, bool reject_static) {
    if (!v.is_image) return Disposition::rejected_not_image;
    if (v.is_live) return Disposition::accepted;
    return reject_static ? Disposition::rejected_static : Disposition::pending_review;
}

}  // namespace camgrid::discovery
