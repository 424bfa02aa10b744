#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "camgrid/core/error.hpp"
#include "camgrid/core/types.hpp"
#include "camgrid/runtime/raster.hpp"

namespace camgrid::runtime {

// A per-frame analysis failure the stream can survive (bad dimensions, an
// undecodable frame). It counts toward the consecutive-failure threshold.
// Any other exception thrown by an analyzer fails its stream at once.
class AnalyzerError : public Error {
public:
    explicit AnalyzerError(const std::string& message, nlohmann::json details = nullptr)
        : Error(ErrorCode::validation, message, std::move(details)) {}
};

// Called serially with one stream's frames in seq order. Returns the value of
// the result point for this frame, or nothing (e.g. the first frame of a
// pairwise analyzer).
using StreamAnalyzer = std::function<std::optional<nlohmann::json>(const Frame&, const Raster&)>;

// Builds a fresh per-stream analyzer from job params. Throws
// Error(validation) for params it does not accept.
using AnalyzerFactory = std::function<StreamAnalyzer(const nlohmann::json& params)>;

class AnalyzerRegistry {
public:
    // Registry holding motion_feature_count and before_after_change_ratio.
    static AnalyzerRegistry with_builtins();

    // Throws Error(validation) on a duplicate or empty name.
    void register_analyzer(const std::string& name, AnalyzerFactory factory);
    [[nodiscard]] bool contains(const std::string& name) const;
    [[nodiscard]] std::vector<std::string> names() const;
    [[nodiscard]] StreamAnalyzer create(const std::string& name, const nlohmann::json& params) const;

private:
    std::map<std::string, AnalyzerFactory> factories_;
};

struct MotionParams {
    int threshold = 25;  // 0..255; a pixel moves when |a - b| > threshold
    int min_blob_px = 16;
};

struct ChangeParams {
    int threshold = 25;
};

MotionParams parse_motion_params(const nlohmann::json& params);
ChangeParams parse_change_params(const nlohmann::json& params);

// Components of the thresholded absolute difference, 4-connected, with at
// least min_blob_px pixels. Throws AnalyzerError when shapes differ.
int motion_feature_count(const Raster& prev, const Raster& curr, const MotionParams& params = {});

// Fraction of pixels whose absolute difference exceeds the threshold.
double before_after_change_ratio(const Raster& a, const Raster& b, const ChangeParams& params = {});

}  // namespace camgrid::runtime
