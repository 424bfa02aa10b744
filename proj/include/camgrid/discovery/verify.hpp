#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "camgrid/core/time.hpp"
#include "camgrid/discovery/probe.hpp"
#include "camgrid/ingestion/http.hpp"

namespace camgrid::discovery {

enum class DetectedFormat { jpeg, png, mjpeg, none };
enum class Disposition { accepted, rejected_not_image, rejected_static, pending_review };

std::string to_string(DetectedFormat f);
std::string to_string(Disposition d);
std::optional<Disposition> parse_disposition(std::string_view s);

struct FetchEvidence {
    Timestamp at{};
    std::optional<std::string> payload_hash;
    std::optional<std::string> error;
};

struct VerificationResult {
    bool is_image = false;
    DetectedFormat detected_format = DetectedFormat::none;
    bool is_live = false;
    std::optional<int> width;
    std::optional<int> height;
    std::vector<FetchEvidence> evidence;
};

struct DiscoveryCandidate {
    ProbeHit hit;
    VerificationResult verification;
    Disposition disposition = Disposition::rejected_not_image;
};

void to_json(nlohmann::json& j, const FetchEvidence& e);
void to_json(nlohmann::json& j, const VerificationResult& v);
void to_json(nlohmann::json& j, const DiscoveryCandidate& c);

struct VerifyOptions {
    double liveness_delay_s = 5.0;
    ingestion::HttpOptions http{};
};

// The two halves of verify_candidate, exposed so a scan can run every first
// fetch, wait once, and then run every second fetch.
struct PendingVerification {
    ProbeHit hit;
    VerificationResult result;
    std::optional<std::string> first_hash;
    std::chrono::steady_clock::time_point first_at;
};

PendingVerification begin_verification(const ProbeHit& hit, const ingestion::HttpOptions& http,
                                       RateLimiter* limiter = nullptr);
// Sleeps until liveness_delay_s after the first fetch, then fetches again.
// Non-images are returned without a second fetch.
VerificationResult finish_verification(PendingVerification pending, double liveness_delay_s,
                                       const ingestion::HttpOptions& http, RateLimiter* limiter = nullptr);

// Fetches the hit twice, liveness_delay apart. Images are recognised by
// magic bytes; a multipart stream counts as mjpeg when its first part is an
// image. Live means the two payload hashes differ.
VerificationResult verify_candidate(const ProbeHit& hit, const VerifyOptions& options = {},
                                    RateLimiter* limiter = nullptr);

Disposition disposition_for(const VerificationResult& v, bool reject_static = false);

}  // namespace camgrid::discovery
