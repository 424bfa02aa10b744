#include "camgrid/discovery/signature.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "camgrid/core/error.hpp"

namespace camgrid::discovery {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

[[noreturn]] void bad(std::size_t index, const std::string& field, const std::string& what) {
    throw Error(ErrorCode::config, "signature " + std::to_string(index) + ": " + field + " " + what,
                {{"index", index}, {"field", field}});
}

std::vector<std::string> string_list(const nlohmann::json& entry, std::size_t index, const char* field) {
    if (!entry.contains(field) || !entry[field].is_array() || entry[field].empty()) {
        bad(index, field, "must be a non-empty list of strings");
    }
    std::vector<std::string> out;
    for (const auto& v : entry[field]) {
        if (!v.is_string() || v.get<std::string>().empty()) bad(index, field, "must be a non-empty list of strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

}  // namespace

void to_json(nlohmann::json& j, const BrandSignature& s) {
    j = {{"brand", s.brand}, {"paths", s.paths}, {"expected_content_type_prefixes", s.expected_content_type_prefixes}};
}

std::vector<BrandSignature> parse_signatures(const nlohmann::json& j) {
    if (!j.is_array() || j.empty()) {
        throw Error(ErrorCode::config, "signature file must be a non-empty JSON list", {{"field", "signatures"}});
    }
    std::vector<BrandSignature> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& e = j[i];
        if (!e.is_object()) bad(i, "entry", "must be an object");
        BrandSignature s;
        if (!e.contains("brand") || !e["brand"].is_string() || e["brand"].get<std::string>().empty()) {
            bad(i, "brand", "must be a non-empty string");
        }
        s.brand = e["brand"].get<std::string>();
        s.paths = string_list(e, i, "paths");
        for (const auto& p : s.paths) {
            if (p.front() != '/') bad(i, "paths", "entries must begin with '/'");
        }
        s.expected_content_type_prefixes = string_list(e, i, "expected_content_type_prefixes");
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<BrandSignature> load_signatures(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::config, "cannot read signature file: " + path, {{"path", path}});
    std::stringstream buf;
    buf << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::config, "signature file is not valid JSON: " + std::string(e.what()),
                    {{"path", path}, {"byte", e.byte}});
    }
    return parse_signatures(j);
}

bool content_type_matches(const BrandSignature& sig, const std::string& content_type) {
    const auto ct = lower(content_type);
    return std::any_of(sig.expected_content_type_prefixes.begin(), sig.expected_content_type_prefixes.end(),
                       [&](const std::string& p) { return ct.rfind(lower(p), 0) == 0; });
}

}  // namespace camgrid::discovery
