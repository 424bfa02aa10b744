#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "camgrid/cli/config.hpp"
#include "camgrid/core/error.hpp"
#include "camgrid/core/types.hpp"
#include "camgrid/discovery/verify.hpp"

namespace camgrid::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;    // bad flags, bad input files, validation errors
inline constexpr int kExitRuntime = 2;  // I/O, network, failed jobs

// Exit code for a library error.
int exit_code_for(ErrorCode code);

// Registry record for a verified candidate: id from (url, mode), location
// unknown, quality and reliability from the verification evidence.
CameraRecord record_for(const discovery::DiscoveryCandidate& candidate, Timestamp now = now_utc());

// Runs one command line. Machine output (JSON) goes to `out`, diagnostics
// and usage to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
             const EnvLookup& env = process_env());

}  // namespace camgrid::cli
