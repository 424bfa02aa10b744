#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace camgrid::discovery {

struct BrandSignature {
    std::string brand;
    std::vector<std::string> paths;  // tried in order; each starts with '/'
    std::vector<std::string> expected_content_type_prefixes;

    bool operator==(const BrandSignature&) const = default;
};

void to_json(nlohmann::json& j, const BrandSignature& s);

// Throws Error(config) naming the offending entry. Matching of content type
// prefixes is case-insensitive.
std::vector<BrandSignature> parse_signatures(const nlohmann::json& j);
std::vector<BrandSignature> load_signatures(const std::string& path);

[[nodiscard]] bool content_type_matches(const BrandSignature& sig, const std::string& content_type);

}  // namespace camgrid::discovery
