#pragma once

#include <freesense/classifier.hpp>
#include <freesense/csi_model.hpp>
#include <freesense/error.hpp>
#include <freesense/segmentation.hpp>
#include <freesense/synth.hpp>

#include <charconv>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace freesense {

/// Every tunable of the pipeline. Keys are `section.name`; see config_keys().
struct PipelineConfig {
    struct {
        int order = 4;
        double cutoff_hz = 10.0;
        bool zero_phase = false;
        bool steady_init = true;
    } filter;
    struct {
        std::size_t components = 4;
    } pca;
    SegmenterConfig seg;
    std::optional<std::int64_t> match_tol; // defaults to seg.window
    struct {
        std::optional<std::size_t> level; // fixed level; otherwise from target_len
        std::size_t target_len = 128;
    } dwt;
    struct {
        std::size_t k = 3;
    } knn;
    struct {
        std::size_t band = 0;
    } dtw;
    EvalProtocol eval;
    CorpusSpec synth;

    std::int64_t effective_match_tol() const {
        return match_tol ? *match_tol : static_cast<std::int64_t>(seg.window);
    }

    void validate() const {
        if (filter.order < 1 || filter.order > 12) throw DomainError("filter.order must be in [1, 12]");
        if (!(filter.cutoff_hz > 0.0)) throw DomainError("filter.cutoff_hz must be positive");
        if (pca.components == 0) throw DomainError("pca.components must be positive");
        seg.validate();
        if (match_tol && *match_tol < 0) throw DomainError("seg.match_tol must be nonnegative");
        if (dwt.target_len < 4) throw DomainError("dwt.target_len must be >= 4");
        if (dwt.level && *dwt.level > 20) throw DomainError("dwt.level must be <= 20");
        if (knn.k == 0) throw DomainError("knn.k must be positive");
        if (eval.max_subsets == 0) throw DomainError("eval.max_subsets must be positive");
        if (eval.train == 0) throw DomainError("eval.train must be positive");
        if (eval.train_sizes.empty()) throw DomainError("eval.train_sizes must list at least one size");
        for (auto t : eval.train_sizes)
            if (t == 0) throw DomainError("eval.train_sizes entries must be positive");
        synth.validate();
    }
};

namespace config_detail {

template <typename T>
T parse_value(std::string_view key, std::string_view text) {
    text = csv::trim(text);
    if constexpr (std::is_same_v<T, bool>) {
        if (text == "true" || text == "1") return true;
        if (text == "false" || text == "0") return false;
        throw DomainError(std::string(key) + ": expected true/false, got '" + std::string(text) + "'");
    } else {
        T value{};
        const auto* end = text.data() + text.size();
        auto [ptr, ec] = std::from_chars(text.data(), end, value);
        if (ec != std::errc{} || ptr != end || text.empty())
            throw DomainError(std::string(key) + ": cannot parse '" + std::string(text) + "'");
        return value;
    }
}

template <typename T>
std::string show(const T& v) {
    if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
    else if constexpr (std::is_floating_point_v<T>) return csv::format_exact(v);
    else return std::to_string(v);
}

template <typename T>
std::optional<T> parse_optional(std::string_view key, std::string_view text) {
    if (csv::trim(text) == "auto") return std::nullopt;
    return parse_value<T>(key, text);
}

template <typename T>
std::string show_optional(const std::optional<T>& v) { return v ? show(*v) : "auto"; }

inline std::vector<std::size_t> parse_list(std::string_view key, std::string_view text) {
    std::vector<std::size_t> out;
    for (auto field : csv::split(text)) out.push_back(parse_value<std::size_t>(key, field));
    return out;
}

inline std::string show_list(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
}

} // namespace config_detail

struct ConfigKey {
    std::function<void(PipelineConfig&, std::string_view key, std::string_view value)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

/// Registry of recognised keys, in print order.
inline const std::map<std::string, ConfigKey>& config_keys() {
    using namespace config_detail;
#define FREESENSE_KEY(name, field, type)                                                               \
    {name, {[](PipelineConfig& c, std::string_view k, std::string_view v) { c.field = parse_value<type>(k, v); }, \
            [](const PipelineConfig& c) { return show(c.field); }}}
#define FREESENSE_OPT_KEY(name, field, type)                                                              \
    {name, {[](PipelineConfig& c, std::string_view k, std::string_view v) { c.field = parse_optional<type>(k, v); }, \
            [](const PipelineConfig& c) { return show_optional(c.field); }}}
    static const std::map<std::string, ConfigKey> keys{
        FREESENSE_KEY("filter.order", filter.order, int),
        FREESENSE_KEY("filter.cutoff_hz", filter.cutoff_hz, double),
        FREESENSE_KEY("filter.zero_phase", filter.zero_phase, bool),
        FREESENSE_KEY("filter.steady_init", filter.steady_init, bool),
        FREESENSE_KEY("pca.components", pca.components, std::size_t),
        FREESENSE_KEY("seg.window", seg.window, std::size_t),
        FREESENSE_OPT_KEY("seg.t1", seg.t1, double),
        FREESENSE_OPT_KEY("seg.t2", seg.t2, double),
        FREESENSE_KEY("seg.t1_percentile", seg.t1_percentile, double),
        FREESENSE_KEY("seg.t2_percentile", seg.t2_percentile, double),
        FREESENSE_KEY("seg.t1_fraction", seg.t1_fraction, double),
        FREESENSE_KEY("seg.t2_fraction", seg.t2_fraction, double),
        FREESENSE_KEY("seg.timelen1", seg.timelen1, std::size_t),
        FREESENSE_KEY("seg.timelen2", seg.timelen2, std::size_t),
        FREESENSE_OPT_KEY("seg.match_tol", match_tol, std::int64_t),
        FREESENSE_KEY("seg.pool_pairs", seg.pool_pairs, bool),
        FREESENSE_OPT_KEY("dwt.level", dwt.level, std::size_t),
        FREESENSE_KEY("dwt.target_len", dwt.target_len, std::size_t),
        FREESENSE_KEY("knn.k", knn.k, std::size_t),
        FREESENSE_KEY("dtw.band", dtw.band, std::size_t),
        FREESENSE_KEY("eval.seed", eval.seed, std::uint64_t),
        FREESENSE_KEY("eval.max_subsets", eval.max_subsets, std::size_t),
        FREESENSE_KEY("eval.train", eval.train, std::size_t),
        {"eval.train_sizes",
         {[](PipelineConfig& c, std::string_view k, std::string_view v) { c.eval.train_sizes = parse_list(k, v); },
          [](const PipelineConfig& c) { return show_list(c.eval.train_sizes); }}},
        FREESENSE_KEY("synth.seed", synth.seed, std::uint64_t),
        FREESENSE_KEY("synth.subjects", synth.subjects, std::size_t),
        FREESENSE_KEY("synth.samples", synth.samples_per_subject, std::size_t),
        FREESENSE_KEY("synth.separation", synth.separation, double),
        FREESENSE_KEY("synth.noise", synth.noise_sigma, double),
        FREESENSE_KEY("synth.duration", synth.duration_s, double),
        FREESENSE_KEY("synth.disturbance_probability", synth.disturbance_probability, double),
    };
#undef FREESENSE_KEY
#undef FREESENSE_OPT_KEY
    return keys;
}

/// Applies one `key=value` assignment. Unknown keys are rejected.
inline void set_config_value(PipelineConfig& cfg, std::string_view key, std::string_view value) {
    const auto& keys = config_keys();
    const auto it = keys.find(std::string(csv::trim(key)));
    if (it == keys.end()) throw DomainError("unknown config key '" + std::string(key) + "'");
    it->second.set(cfg, it->first, value);
}

inline void apply_assignment(PipelineConfig& cfg, std::string_view line, std::uint64_t lineno = 0) {
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
        throw ParseError("expected key=value, got '" + std::string(line) + "'", lineno);
    set_config_value(cfg, csv::trim(line.substr(0, eq)), csv::trim(line.substr(eq + 1)));
}

/// Reads a flat `key = value` file; blank lines and `#` comments are ignored.
inline void read_config(std::istream& is, PipelineConfig& cfg) {
    std::string line;
    std::uint64_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto view = std::string_view(line);
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = csv::trim(view);
        if (view.empty()) continue;
        try {
            apply_assignment(cfg, view, lineno);
        } catch (const DomainError& e) {
            throw ParseError(e.what(), lineno);
        }
    }
}

inline void write_config(std::ostream& os, const PipelineConfig& cfg) {
    for (const auto& [key, entry] : config_keys()) os << key << " = " << entry.get(cfg) << '\n';
}

inline std::map<std::string, std::string> config_map(const PipelineConfig& cfg) {
    std::map<std::string, std::string> out;
    for (const auto& [key, entry] : config_keys()) out[key] = entry.get(cfg);
    return out;
}

} // namespace freesense
