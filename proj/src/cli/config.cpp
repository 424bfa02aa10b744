#include "camgrid/cli/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>

#include "camgrid/core/error.hpp"

namespace camgrid::cli {

namespace {

nlohmann::json as_json(const CliConfig& c) {
    return {{"db", c.db},
            {"host", c.host},
            {"port", c.port},
            {"http_timeout_ms", c.http_timeout_ms},
            {"rate_limit", c.rate_limit},
            {"concurrency", c.concurrency},
            {"liveness_delay_s", c.liveness_delay_s},
            {"signatures", c.signatures},
            {"max_concurrent_streams", c.max_concurrent_streams}};
}

[[noreturn]] void bad(const std::string& key, const std::string& origin, const std::string& why) {
    throw Error(ErrorCode::config, "bad value for " + key + " from " + origin + ": " + why,
                {{"key", key}, {"source", origin}});
}

// Values from the environment arrive as text; file and flag values may be
// either.
nlohmann::json coerce(const std::string& key, const nlohmann::json& v, const nlohmann::json& like,
                      const std::string& origin) {
    if (like.is_string()) {
        if (!v.is_string()) bad(key, origin, "expected a string");
        return v;
    }
    if (v.is_number()) {
        if (like.is_number_integer() && !v.is_number_integer()) {
            const double d = v.get<double>();
            if (d != static_cast<double>(static_cast<long long>(d))) bad(key, origin, "expected an integer");
            return static_cast<long long>(d);
        }
        return v;
    }
    if (!v.is_string()) bad(key, origin, "expected a number");
    const auto& s = v.get_ref<const std::string&>();
    try {
        std::size_t used = 0;
        if (like.is_number_integer()) {
            const long long n = std::stoll(s, &used);
            if (used != s.size()) bad(key, origin, "expected an integer");
            return n;
        }
        const double d = std::stod(s, &used);
        if (used != s.size()) bad(key, origin, "expected a number");
        return d;
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        bad(key, origin, "expected a number");
    }
}

void check(const CliConfig& c) {
    if (c.db.empty()) bad("db", "effective config", "must not be empty");
    if (c.host.empty()) bad("host", "effective config", "must not be empty");
    if (c.port < 0 || c.port > 65535) bad("port", "effective config", "must lie in [0, 65535]");
    if (c.http_timeout_ms <= 0) bad("http_timeout_ms", "effective config", "must be > 0");
    if (!(c.rate_limit > 0)) bad("rate_limit", "effective config", "must be > 0");
    if (c.concurrency <= 0) bad("concurrency", "effective config", "must be > 0");
    if (!(c.liveness_delay_s >= 0)) bad("liveness_delay_s", "effective config", "must be >= 0");
    if (c.max_concurrent_streams <= 0) bad("max_concurrent_streams", "effective config", "must be > 0");
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        const auto defaults = as_json(CliConfig{});
        for (const auto& [name, _] : defaults.items()) k.push_back(name);
        return k;
    }();
    return keys;
}

std::string env_name(const std::string& key) {
    std::string out = "CAMGRID_";
    for (char c : key) out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

EnvLookup process_env() {
    return [](const std::string& name) -> std::optional<std::string> {
        if (const char* v = std::getenv(name.c_str())) return std::string(v);
        return std::nullopt;
    };
}

ResolvedConfig resolve_config(const nlohmann::json& flags, const EnvLookup& env) {
    ResolvedConfig out;
    const auto defaults = as_json(CliConfig{});
    nlohmann::json merged = defaults;
    for (const auto& key : config_keys()) out.source[key] = "default";

    std::optional<std::string> file;
    if (flags.contains("config")) {
        file = flags.at("config").get<std::string>();
    } else if (auto e = env("CAMGRID_CONFIG")) {
        file = *e;
    }
    if (file && !file->empty()) {
        std::ifstream in(*file);
        if (!in) throw Error(ErrorCode::config, "cannot read config file " + *file, {{"path", *file}});
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::config, "config file " + *file + " is not JSON: " + e.what(), {{"path", *file}});
        }
        if (!doc.is_object()) throw Error(ErrorCode::config, "config file must hold a JSON object", {{"path", *file}});
        for (const auto& [key, v] : doc.items()) {
            if (!defaults.contains(key)) {
                throw Error(ErrorCode::config, "unknown config key " + key, {{"key", key}, {"path", *file}});
            }
            merged[key] = coerce(key, v, defaults[key], "file");
            out.source[key] = "file";
        }
        out.file = *file;
    }
    for (const auto& key : config_keys()) {
        if (auto v = env(env_name(key))) {
            merged[key] = coerce(key, *v, defaults[key], "env");
            out.source[key] = "env";
        }
    }
    for (const auto& [key, v] : flags.items()) {
        if (key == "config") continue;
        if (!defaults.contains(key)) throw Error(ErrorCode::config, "unknown config key " + key, {{"key", key}});
        merged[key] = coerce(key, v, defaults[key], "flag");
        out.source[key] = "flag";
    }

    auto& c = out.config;
    c.db = merged["db"];
    c.host = merged["host"];
    c.port = merged["port"];
    c.http_timeout_ms = merged["http_timeout_ms"];
    c.rate_limit = merged["rate_limit"];
    c.concurrency = merged["concurrency"];
    c.liveness_delay_s = merged["liveness_delay_s"];
    c.signatures = merged["signatures"];
    c.max_concurrent_streams = merged["max_concurrent_streams"];
    check(c);
    return out;
}

nlohmann::json to_json(const ResolvedConfig& r) {
    return {{"config", as_json(r.config)},
            {"config_file", r.file ? nlohmann::json(*r.file) : nlohmann::json(nullptr)},
            {"source", r.source}};
}

}  // namespace camgrid::cli
