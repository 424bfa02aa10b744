#include "camgrid/runtime/analyzers.hpp"

#include <cstdlib>
#include <numeric>

namespace camgrid::runtime {

namespace {

int int_param(const nlohmann::json& params, const char* name, int fallback, int lo, int hi) {
    if (!params.contains(name)) return fallback;
    const auto& v = params[name];
    if (!v.is_number_integer()) {
        throw Error(ErrorCode::validation, std::string("parameter ") + name + " must be an integer",
                    {{"field", std::string("params.") + name}});
    }
    const auto n = v.get<long long>();
    if (n < lo || n > hi) {
        throw Error(ErrorCode::validation,
                    std::string("parameter ") + name + " out of range [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "]",
                    {{"field", std::string("params.") + name}, {"value", n}});
    }
    return static_cast<int>(n);
}

void require_object(const nlohmann::json& params, std::initializer_list<const char*> known) {
    if (params.is_null()) return;
    if (!params.is_object()) throw Error(ErrorCode::validation, "params must be an object", {{"field", "params"}});
    for (const auto& [key, _] : params.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) {
            throw Error(ErrorCode::validation, "unknown parameter " + key, {{"field", "params." + key}});
        }
    }
}

void require_same_shape(const Raster& a, const Raster& b) {
    if (!a.same_shape(b)) {
        throw AnalyzerError("frame dimensions differ",
                            {{"a", {a.width(), a.height()}}, {"b", {b.width(), b.height()}}});
    }
}

// Union-find over pixel indices.
struct DisjointSets {
    std::vector<int> parent;
    std::vector<int> size;

    explicit DisjointSets(std::size_t n) : parent(n), size(n, 1) { std::iota(parent.begin(), parent.end(), 0); }

    int find(int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }

    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (size[a] < size[b]) std::swap(a, b);
        parent[b] = a;
        size[a] += size[b];
    }
};

}  // namespace

MotionParams parse_motion_params(const nlohmann::json& params) {
    require_object(params, {"threshold", "min_blob_px"});
    MotionParams p;
    if (params.is_null()) return p;
    p.threshold = int_param(params, "threshold", p.threshold, 0, 255);
    p.min_blob_px = int_param(params, "min_blob_px", p.min_blob_px, 1, 1 << 30);
    return p;
}

ChangeParams parse_change_params(const nlohmann::json& params) {
    require_object(params, {"threshold"});
    ChangeParams p;
    if (params.is_null()) return p;
    p.threshold = int_param(params, "threshold", p.threshold, 0, 255);
    return p;
}

int motion_feature_count(const Raster& prev, const Raster& curr, const MotionParams& params) {
    require_same_shape(prev, curr);
    const int w = curr.width();
    const int h = curr.height();
    const auto a = prev.pixels();
    const auto b = curr.pixels();
    std::vector<char> mask(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) mask[i] = std::abs(int(a[i]) - int(b[i])) > params.threshold;

    DisjointSets sets(mask.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int i = y * w + x;
            if (!mask[i]) continue;
            if (x > 0 && mask[i - 1]) sets.unite(i, i - 1);
            if (y > 0 && mask[i - w]) sets.unite(i, i - w);
        }
    }
    int count = 0;
    for (int i = 0; i < w * h; ++i) {
        if (mask[i] && sets.find(i) == i && sets.size[i] >= params.min_blob_px) ++count;
    }
    return count;
}

double before_after_change_ratio(const Raster& a, const Raster& b, const ChangeParams& params) {
    require_same_shape(a, b);
    if (a.empty()) return 0.0;
    std::size_t changed = 0;
    const auto pa = a.pixels();
    const auto pb = b.pixels();
    for (std::size_t i = 0; i < pa.size(); ++i) changed += std::abs(int(pa[i]) - int(pb[i])) > params.threshold;
    return static_cast<double>(changed) / static_cast<double>(pa.size());
}

AnalyzerRegistry AnalyzerRegistry::with_builtins() {
    AnalyzerRegistry r;
    r.register_analyzer("motion_feature_count", [](const nlohmann::json& params) -> StreamAnalyzer {
        const auto p = parse_motion_params(params);
        auto prev = std::make_shared<std::optional<Raster>>();
        return [p, prev](const Frame&, const Raster& curr) -> std::optional<nlohmann::json> {
            if (!*prev) {
                *prev = curr;
                return std::nullopt;
            }
            const Raster before = std::move(**prev);
            *prev = curr;
            return motion_feature_count(before, curr, p);
        };
    });
    r.register_analyzer("before_after_change_ratio", [](const nlohmann::json& params) -> StreamAnalyzer {
        const auto p = parse_change_params(params);
        auto reference = std::make_shared<std::optional<Raster>>();
        return [p, reference](const Frame&, const Raster& curr) -> std::optional<nlohmann::json> {
            if (!*reference) *reference = curr;
            return before_after_change_ratio(**reference, curr, p);
        };
    });
    return r;
}

void AnalyzerRegistry::register_analyzer(const std::string& name, AnalyzerFactory factory) {
    if (name.empty()) throw Error(ErrorCode::validation, "analyzer name must not be empty");
    if (!factory) throw Error(ErrorCode::validation, "analyzer factory must be callable", {{"analyzer", name}});
    if (!factories_.emplace(name, std::move(factory)).second) {
        throw Error(ErrorCode::validation, "analyzer already registered: " + name, {{"analyzer", name}});
    }
}

bool AnalyzerRegistry::contains(const std::string& name) const { return factories_.count(name) > 0; }

std::vector<std::string> AnalyzerRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : factories_) out.push_back(name);
    return out;
}

StreamAnalyzer AnalyzerRegistry::create(const std::string& name, const nlohmann::json& params) const {
    const auto it = factories_.find(name);
    if (it == factories_.end()) {
        throw Error(ErrorCode::validation, "unknown analyzer: " + name, {{"field", "analyzer"}, {"analyzer", name}});
    }
    return it->second(params);
}

}  // namespace camgrid::runtime
