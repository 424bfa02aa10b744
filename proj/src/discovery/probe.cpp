#include "camgrid/discovery/probe.hpp"

#include "camgrid/core/error.hpp"
#include "camgrid/core/hash.hpp"
#include "camgrid/ingestion/http.hpp"

namespace camgrid::discovery {

void to_json(nlohmann::json& j, const ProbeHit& h) {
    j = {{"address", h.address},           {"path", h.path},
         {"brand", h.brand},               {"status_code", h.status_code},
         {"content_type", h.content_type}, {"first_bytes", base64_encode(h.first_bytes)}};
}

std::vector<ProbeHit> probe_address(const std::string& address, const std::vector<BrandSignature>& signatures,
                                    std::chrono::milliseconds timeout, RateLimiter* limiter) {
    if (timeout.count() <= 0) throw Error(ErrorCode::invalid_argument, "probe timeout must be positive");
    if (signatures.empty()) throw Error(ErrorCode::config, "no brand signatures given", {{"field", "signatures"}});
    ingestion::HttpOptions http;
    http.timeout = timeout;
    http.max_redirects = 3;
    http.read_limit = kProbePrefixBytes;

    std::vector<ProbeHit> hits;
    for (const auto& sig : signatures) {
        for (const auto& path : sig.paths) {
            if (limiter && !limiter->acquire()) return hits;
            ingestion::HttpResponse r;
            try {
                r = ingestion::http_get("http://" + address + path, http);
            } catch (const Error&) {
                continue;
            }
            if (r.status != 200 || !content_type_matches(sig, r.content_type)) continue;
            ProbeHit h;
            h.address = address;
            h.path = path;
            h.brand = sig.brand;
            h.status_code = r.status;
            h.content_type = r.content_type;
            h.first_bytes.assign(r.body.begin(),
                                 r.body.begin() + static_cast<std::ptrdiff_t>(std::min(r.body.size(), kProbePrefixBytes)));
            hits.push_back(std::move(h));
            break;
        }
    }
    return hits;
}

}  // namespace camgrid::discovery
