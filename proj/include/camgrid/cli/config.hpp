#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace camgrid::cli {

// Effective settings shared by every subcommand. Layers, lowest first:
// defaults, config file, CAMGRID_* environment, command-line flags.
struct CliConfig {
    std::string db = "camgrid.db";
    std::string host = "127.0.0.1";
    int port = 8080;
    int http_timeout_ms = 4000;
    double rate_limit = 50.0;
    int concurrency = 16;
    double liveness_delay_s = 5.0;
    std::string signatures;  // empty: built-in brand signatures
    int max_concurrent_streams = 64;
};

// Setting name -> environment variable, e.g. "rate_limit" -> CAMGRID_RATE_LIMIT.
std::string env_name(const std::string& key);
const std::vector<std::string>& config_keys();

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

struct ResolvedConfig {
    CliConfig config;
    std::optional<std::string> file;          // config file that was read
    std::map<std::string, std::string> source;  // key -> default|file|env|flag
};

// `flags` holds only the keys given on the command line. The config file is
// taken from the flag "config", then CAMGRID_CONFIG; a missing explicit file
// is Error(config), unknown keys or bad values Error(config) too.
ResolvedConfig resolve_config(const nlohmann::json& flags, const EnvLookup& env);

nlohmann::json to_json(const ResolvedConfig& r);

}  // namespace camgrid::cli
