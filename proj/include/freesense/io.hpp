#pragma once

#include <freesense/classifier.hpp>
#include <freesense/csi_model.hpp>
#include <freesense/error.hpp>
#include <freesense/features.hpp>
#include <freesense/synth.hpp>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace freesense {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Feature files: a long-format CSV
//   sample,subject,pair,component,level,coeff_index,value
// with one row per coefficient, plus a JSON sidecar holding the shared
// parameters and per-sample metadata. A gallery is a feature file whose
// samples are all enrolled.
// ---------------------------------------------------------------------------

struct FeatureLayout {
    std::size_t pairs = 0;
    std::size_t components = 0;
    std::size_t level = 0;

    friend bool operator==(const FeatureLayout&, const FeatureLayout&) = default;
};

struct FeatureRecord {
    SubjectId subject;
    ShapeFeature feature;
    std::optional<Segment> segment; // where in the source trace it came from
    std::string source;             // free-form provenance, e.g. the trace path
};

inline FeatureLayout layout_of(const ShapeFeature& f) { return {f.pairs, f.components, f.level}; }

inline constexpr std::string_view kFeatureHeader = "sample,subject,pair,component,level,coeff_index,value";

inline void write_features(std::ostream& csv_out, std::ostream& json_out, const FeatureLayout& layout,
                           std::span<const FeatureRecord> records) {
    nlohmann::ordered_json meta;
    meta["format"] = "freesense-features";
    meta["version"] = 1;
    meta["pairs"] = layout.pairs;
    meta["components"] = layout.components;
    meta["level"] = layout.level;
    meta["samples"] = nlohmann::ordered_json::array();

    csv_out << kFeatureHeader << '\n';
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (layout_of(r.feature) != layout)
            throw DomainError("feature " + std::to_string(i) + " does not match the file's pairs/components/level");
        nlohmann::ordered_json sample;
        sample["sample"] = i;
        sample["subject"] = r.subject.str();
        sample["original_length"] = r.feature.original_length;
        sample["coefficients"] = r.feature.coeffs.empty() ? 0 : r.feature.coeffs.front().size();
        sample["segment"] = r.segment ? nlohmann::ordered_json::array({r.segment->begin, r.segment->end})
                                      : nlohmann::ordered_json(nullptr);
        sample["source"] = r.source;
        meta["samples"].push_back(std::move(sample));
        for (std::size_t p = 0; p < layout.pairs; ++p)
            for (std::size_t k = 0; k < layout.components; ++k) {
                const auto series = r.feature.series(p, k);
                for (std::size_t c = 0; c < series.size(); ++c)
                    csv_out << i << ',' << r.subject << ',' << p << ',' << k << ',' << layout.level << ',' << c << ','
                            << csv::format_exact(series[c]) << '\n';
            }
    }
    json_out << meta.dump(2) << '\n';
}

namespace detail {

template <typename T>
T json_field(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) throw ParseError(std::string("feature sidecar is missing '") + key + "'", 0);
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("feature sidecar field '") + key + "': " + e.what(), 0);
    }
}

} // namespace detail

inline std::pair<FeatureLayout, std::vector<FeatureRecord>> read_features(std::istream& csv_in, std::istream& json_in) {
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(json_in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("feature sidecar: ") + e.what(), e.byte);
    }
    if (detail::json_field<std::string>(meta, "format") != "freesense-features")
        throw ParseError("feature sidecar has an unexpected format tag", 0);
    if (detail::json_field<int>(meta, "version") != 1) throw ParseError("unsupported feature file version", 0);
    const FeatureLayout layout{detail::json_field<std::size_t>(meta, "pairs"),
                               detail::json_field<std::size_t>(meta, "components"),
                               detail::json_field<std::size_t>(meta, "level")};
    std::vector<FeatureRecord> records;
    const auto samples = detail::json_field<nlohmann::json>(meta, "samples");
    if (!samples.is_array()) throw ParseError("feature sidecar 'samples' must be an array", 0);
    if (!samples.empty() && (layout.pairs == 0 || layout.components == 0))
        throw ParseError("feature sidecar has empty pairs/components", 0);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (detail::json_field<std::size_t>(s, "sample") != i) throw ParseError("feature sidecar samples out of order", 0);
        std::optional<Segment> seg;
        if (s.contains("segment") && !s["segment"].is_null()) {
            const auto v = s["segment"].get<std::vector<std::size_t>>();
            if (v.size() != 2 || v[0] >= v[1]) throw ParseError("feature sidecar has an invalid segment", 0);
            seg = Segment{v[0], v[1]};
        }
        ShapeFeature f{layout.pairs, layout.components, layout.level,
                       detail::json_field<std::size_t>(s, "original_length"),
                       std::vector<std::vector<double>>(layout.pairs * layout.components)};
        try {
            records.push_back({SubjectId(detail::json_field<std::string>(s, "subject")), std::move(f), seg,
                               s.value("source", std::string{})});
        } catch (const DomainError& e) {
            throw ParseError(std::string("feature sidecar: ") + e.what(), 0);
        }
    }

    csv::expect_header(csv_in, kFeatureHeader);
    std::string line;
    std::uint64_t lineno = 1;
    while (std::getline(csv_in, line)) {
        ++lineno;
        if (csv::trim(line).empty()) continue;
        const auto fields = csv::split(line);
        if (fields.size() != 7) throw ParseError("expected 7 fields", lineno);
        const auto sample = csv::parse_number<std::size_t>(fields[0], lineno);
        const auto pair = csv::parse_number<std::size_t>(fields[2], lineno);
        const auto comp = csv::parse_number<std::size_t>(fields[3], lineno);
        const auto level = csv::parse_number<std::size_t>(fields[4], lineno);
        const auto index = csv::parse_number<std::size_t>(fields[5], lineno);
        const auto value = csv::parse_number<double>(fields[6], lineno);
        if (sample >= records.size()) throw ParseError("sample " + std::to_string(sample) + " is not in the sidecar", lineno);
        auto& rec = records[sample];
        if (csv::trim(fields[1]) != rec.subject.str()) throw ParseError("subject disagrees with the sidecar", lineno);
        if (pair >= layout.pairs || comp >= layout.components) throw ParseError("pair/component out of range", lineno);
        if (level != layout.level) throw ParseError("level disagrees with the sidecar", lineno);
        auto& series = rec.feature.coeffs[pair * layout.components + comp];
        if (index != series.size()) throw ParseError("coefficients must appear in order", lineno);
        series.push_back(value);
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& f = records[i].feature;
        const auto expected = dwt_output_length(f.original_length, f.level);
        for (const auto& series : f.coeffs)
            if (series.size() != expected)
                throw ParseError("sample " + std::to_string(i) + " has " + std::to_string(series.size()) +
                                     " coefficients in some series, expected " + std::to_string(expected),
                                 lineno);
    }
    return {layout, std::move(records)};
}

/// `features.csv` pairs with `features.json`.
inline fs::path sidecar_path(const fs::path& csv_path) {
    auto p = csv_path;
    return p.replace_extension(".json");
}

namespace detail {

inline std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DomainError("cannot open '" + path.string() + "' for writing");
    return os;
}

inline std::ifstream open_in(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DomainError("cannot open '" + path.string() + "'");
    return is;
}

} // namespace detail

inline void save_features(const fs::path& csv_path, const FeatureLayout& layout, std::span<const FeatureRecord> records) {
    auto csv_out = detail::open_out(csv_path);
    auto json_out = detail::open_out(sidecar_path(csv_path));
    write_features(csv_out, json_out, layout, records);
}

inline std::pair<FeatureLayout, std::vector<FeatureRecord>> load_features(const fs::path& csv_path) {
    auto csv_in = detail::open_in(csv_path);
    auto json_in = detail::open_in(sidecar_path(csv_path));
    return read_features(csv_in, json_in);
}

inline Gallery make_gallery(std::span<const FeatureRecord> records) {
    Gallery g;
    for (const auto& r : records) g.add(r.subject, r.feature);
    return g;
}

// ---------------------------------------------------------------------------
// Corpus directories. `manifest.json` lists the traces:
//   {"traces": [{"trace": "traces/0000.csit", "labels": "traces/0000.labels.csv",
//                "subject": "S01", "index": 0}, ...]}
// Paths are relative to the directory. Other manifest fields are ignored
// when reading.
// ---------------------------------------------------------------------------

struct CorpusEntry {
    std::string trace;
    std::string labels;
    SubjectId subject;
    std::size_t index = 0;
};

inline nlohmann::ordered_json corpus_entry_json(const CorpusEntry& e) {
    nlohmann::ordered_json j;
    j["trace"] = e.trace;
    j["labels"] = e.labels;
    j["subject"] = e.subject.str();
    j["index"] = e.index;
    return j;
}

inline std::vector<CorpusEntry> read_corpus_manifest(const fs::path& dir) {
    auto is = detail::open_in(dir / "manifest.json");
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("corpus manifest: ") + e.what(), e.byte);
    }
    if (!meta.contains("traces") || !meta["traces"].is_array()) throw ParseError("corpus manifest has no 'traces' array", 0);
    std::vector<CorpusEntry> out;
    for (const auto& t : meta["traces"]) {
        try {
            out.push_back({t.at("trace").get<std::string>(), t.at("labels").get<std::string>(),
                           SubjectId(t.at("subject").get<std::string>()), t.at("index").get<std::size_t>()});
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("corpus manifest entry: ") + e.what(), 0);
        } catch (const DomainError& e) {
            throw ParseError(std::string("corpus manifest entry: ") + e.what(), 0);
        }
    }
    return out;
}

inline CorpusItem load_corpus_item(const fs::path& dir, const CorpusEntry& e) {
    auto trace = load_trace((dir / e.trace).string());
    auto is = detail::open_in(dir / e.labels);
    return {e.subject, e.index, std::move(trace), read_labels(is)};
}

inline nlohmann::ordered_json profile_json(const SubjectProfile& p) {
    nlohmann::ordered_json j;
    j["subject"] = p.subject.str();
    j["duration_mean"] = p.duration_mean;
    j["duration_sigma"] = p.duration_sigma;
    j["rise_fraction"] = p.rise_fraction;
    j["fall_fraction"] = p.fall_fraction;
    j["band_low_hz"] = p.band_low_hz;
    j["band_high_hz"] = p.band_high_hz;
    j["harmonic_ratio"] = p.harmonic_ratio;
    j["dip"] = p.dip;
    j["secondary_ratio"] = p.secondary_ratio;
    j["coupling"] = p.coupling;
    j["coupling2"] = p.coupling2;
    return j;
}

inline nlohmann::ordered_json synth_spec_json(const SynthSpec& s) {
    nlohmann::ordered_json j;
    j["seed"] = s.seed;
    j["duration_s"] = s.duration_s;
    j["sample_rate_hz"] = s.sample_rate_hz;
    j["n_tx"] = s.n_tx;
    j["n_rx"] = s.n_rx;
    j["n_subcarriers"] = s.n_subcarriers;
    j["noise_sigma"] = s.noise_sigma;
    j["baseline"] = s.baseline;
    j["burst_amplitude"] = s.burst_amplitude;
    j["drift_amplitude"] = s.drift_amplitude;
    j["drift_period_s"] = s.drift_period_s;
    auto& sched = j["schedule"] = nlohmann::ordered_json::array();
    for (const auto& c : s.schedule) sched.push_back({{"start_s", c.start_s}, {"subject", c.subject.str()}});
    auto& dist = j["disturbances"] = nlohmann::ordered_json::array();
    for (const auto& d : s.disturbances)
        dist.push_back({{"start_s", d.start_s}, {"duration_s", d.duration_s}, {"amplitude", d.amplitude}});
    return j;
}

} // namespace freesense
