#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "camgrid/runtime/raster.hpp"

namespace camgrid::testbed {

enum class SceneKind { static_image, moving_blobs, region_change };

struct SceneSpec {
    SceneKind kind = SceneKind::moving_blobs;
    int count = 4;          // moving_blobs: number of blobs
    int size_px = 12;       // moving_blobs: blob side length
    double fraction = 0.4;  // region_change: repainted share of rows, from the bottom
    int width = 160;
    int height = 120;
    std::uint64_t seed = 1;
};

struct BlobState {
    int x = 0;
    int y = 0;
    int size = 0;
    std::uint8_t intensity = 0;
};

struct SceneTruth {
    std::uint64_t seq = 0;
    std::vector<BlobState> blobs;
    // Blobs that changed between seq-1 and seq; every planted blob moves or
    // flips intensity on every frame.
    int moving_blobs = 0;
    // Share of pixels differing from frame 0 by more than the background span.
    double changed_fraction = 0.0;
};

nlohmann::json to_json(const SceneTruth& t);
void to_json(nlohmann::json& j, const SceneSpec& s);
void from_json(const nlohmann::json& j, SceneSpec& s);

// Procedural 8-bit scene. Frames are a pure function of (spec, seq).
//
// moving_blobs: one square blob per grid cell on a horizontal gradient
// background (20..60). Blobs never leave their cell margins, so they never
// touch each other or the image border. Each step moves a blob by less than
// its side and swaps its intensity between 140 and 220, so the difference of
// consecutive frames has exactly one connected component per blob.
//
// region_change: even seq is the "before" image, odd seq repaints the bottom
// rows to 200.
class Scene {
public:
    explicit Scene(SceneSpec spec);

    [[nodiscard]] const SceneSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] runtime::Raster render(std::uint64_t seq) const;
    [[nodiscard]] SceneTruth truth(std::uint64_t seq) const;

private:
    [[nodiscard]] std::vector<BlobState> blobs_at(std::uint64_t seq) const;
    [[nodiscard]] int painted_rows() const;

    struct Track {
        int x0, y0;        // top-left of the travel box
        int range_x, range_y;
        int step_x, step_y;
        std::uint64_t phase_x, phase_y;
    };

    SceneSpec spec_;
    std::vector<Track> tracks_;
};

}  // namespace camgrid::testbed
