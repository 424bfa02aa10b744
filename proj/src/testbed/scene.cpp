#include "camgrid/testbed/scene.hpp"

#include <cmath>
#include <random>

#include "camgrid/core/error.hpp"
#include "camgrid/core/serialize.hpp"

namespace camgrid::testbed {

namespace {

constexpr int kMargin = 2;

int triangle(std::uint64_t t, int range) {
    if (range <= 0) return 0;
    const auto period = static_cast<std::uint64_t>(2 * range);
    const auto p = static_cast<int>(t % period);
    return p <= range ? p : 2 * range - p;
}

void paint_background(runtime::Raster& r) {
    const int w = r.width();
    for (int y = 0; y < r.height(); ++y) {
        for (int x = 0; x < w; ++x) {
            r.at(x, y) = static_cast<std::uint8_t>(20 + (w > 1 ? 40 * x / (w - 1) : 0));
        }
    }
}

const char* kind_name(SceneKind k) {
    switch (k) {
        case SceneKind::static_image: return "static";
        case SceneKind::moving_blobs: return "moving_blobs";
        case SceneKind::region_change: return "region_change";
    }
    return "static";
}

}  // namespace

Scene::Scene(SceneSpec spec) : spec_(spec) {
    if (spec_.width < 8 || spec_.height < 8 || spec_.width > 4096 || spec_.height > 4096) {
        throw Error(ErrorCode::validation, "scene dimensions out of range",
                    {{"width", spec_.width}, {"height", spec_.height}});
    }
    if (spec_.kind == SceneKind::region_change && !(spec_.fraction >= 0.0 && spec_.fraction <= 1.0)) {
        throw Error(ErrorCode::validation, "region fraction must lie in [0, 1]", {{"fraction", spec_.fraction}});
    }
    if (spec_.kind != SceneKind::moving_blobs) return;
    if (spec_.count < 0) throw Error(ErrorCode::validation, "blob count must be non-negative");
    if (spec_.size_px < 4) {
        throw Error(ErrorCode::validation, "blob side must be at least 4 px", {{"size_px", spec_.size_px}});
    }
    if (spec_.count == 0) return;
    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(spec_.count))));
    const int rows = (spec_.count + cols - 1) / cols;
    const int cell_w = spec_.width / cols;
    const int cell_h = spec_.height / rows;
    const int range_x = cell_w - spec_.size_px - 2 * kMargin;
    const int range_y = cell_h - spec_.size_px - 2 * kMargin;
    if (range_x < 0 || range_y < 0) {
        throw Error(ErrorCode::validation, "blobs do not fit the scene",
                    {{"count", spec_.count}, {"size_px", spec_.size_px}, {"width", spec_.width},
                     {"height", spec_.height}});
    }
    std::mt19937_64 rng(spec_.seed);
    for (int i = 0; i < spec_.count; ++i) {
        Track t{};
        t.x0 = (i % cols) * cell_w + kMargin;
        t.y0 = (i / cols) * cell_h + kMargin;
        t.range_x = range_x;
        t.range_y = range_y;
        t.step_x = std::max(1, spec_.size_px / 3);
        t.step_y = std::max(1, spec_.size_px / 4);
        t.phase_x = rng() % 4096;
        t.phase_y = rng() % 4096;
        tracks_.push_back(t);
    }
}

std::vector<BlobState> Scene::blobs_at(std::uint64_t seq) const {
    std::vector<BlobState> out;
    out.reserve(tracks_.size());
    for (std::size_t i = 0; i < tracks_.size(); ++i) {
        const auto& t = tracks_[i];
        BlobState b;
        b.x = t.x0 + triangle(t.phase_x + seq * static_cast<std::uint64_t>(t.step_x), t.range_x);
        b.y = t.y0 + triangle(t.phase_y + seq * static_cast<std::uint64_t>(t.step_y), t.range_y);
        b.size = spec_.size_px;
        b.intensity = ((seq + i) % 2 == 0) ? 140 : 220;
        out.push_back(b);
    }
    return out;
}

int Scene::painted_rows() const {
    return static_cast<int>(std::lround(spec_.fraction * spec_.height));
}

runtime::Raster Scene::render(std::uint64_t seq) const {
    runtime::Raster r(spec_.width, spec_.height);
    paint_background(r);
    switch (spec_.kind) {
        case SceneKind::static_image:
            r.fill_rect(spec_.width / 4, spec_.height / 4, spec_.width / 2, spec_.height / 2, 180);
            break;
        case SceneKind::moving_blobs:
            for (const auto& b : blobs_at(seq)) r.fill_rect(b.x, b.y, b.size, b.size, b.intensity);
            break;
        case SceneKind::region_change:
            if (seq % 2 == 1) {
                const int rows = painted_rows();
                r.fill_rect(0, spec_.height - rows, spec_.width, rows, 200);
            }
            break;
    }
    return r;
}

SceneTruth Scene::truth(std::uint64_t seq) const {
    SceneTruth t;
    t.seq = seq;
    if (spec_.kind == SceneKind::moving_blobs) {
        t.blobs = blobs_at(seq);
        t.moving_blobs = seq == 0 ? 0 : static_cast<int>(t.blobs.size());
    } else if (spec_.kind == SceneKind::region_change && seq % 2 == 1) {
        t.changed_fraction = static_cast<double>(painted_rows()) / spec_.height;
    }
    return t;
}

nlohmann::json to_json(const SceneTruth& t) {
    auto blobs = nlohmann::json::array();
    for (const auto& b : t.blobs) {
        blobs.push_back({{"x", b.x}, {"y", b.y}, {"size", b.size}, {"intensity", b.intensity}});
    }
    return {{"seq", t.seq}, {"blobs", blobs}, {"moving_blobs", t.moving_blobs},
            {"changed_fraction", t.changed_fraction}};
}

void to_json(nlohmann::json& j, const SceneSpec& s) {
    j = {{"kind", kind_name(s.kind)}, {"count", s.count},   {"size_px", s.size_px}, {"fraction", s.fraction},
         {"width", s.width},          {"height", s.height}, {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, SceneSpec& s) {
    using namespace json_detail;
    if (!j.is_object()) fail("scene", "expected an object");
    const auto kind = get_string(j, "kind");
    if (kind == "static") s.kind = SceneKind::static_image;
    else if (kind == "moving_blobs") s.kind = SceneKind::moving_blobs;
    else if (kind == "region_change") s.kind = SceneKind::region_change;
    else fail("kind", "unknown scene kind '" + kind + "'");
    // Everything but the kind is optional in spec files.
    if (j.contains("count")) s.count = static_cast<int>(get_integer(j, "count"));
    if (j.contains("size_px")) s.size_px = static_cast<int>(get_integer(j, "size_px"));
    if (j.contains("fraction")) s.fraction = get_number(j, "fraction");
    if (j.contains("width")) s.width = static_cast<int>(get_integer(j, "width"));
    if (j.contains("height")) s.height = static_cast<int>(get_integer(j, "height"));
    if (j.contains("seed")) s.seed = static_cast<std::uint64_t>(get_integer(j, "seed"));
}

}  // namespace camgrid::testbed
