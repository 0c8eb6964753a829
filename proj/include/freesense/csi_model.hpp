#pragma once

#include <freesense/error.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace freesense {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

/// Opaque subject identifier. Never empty.
class SubjectId {
public:
    SubjectId() = delete;
    explicit SubjectId(std::string value) : value_(std::move(value)) {
        if (value_.empty()) throw DomainError("subject id must be nonempty");
        if (value_.find_first_of(",\n\r\"") != std::string::npos)
            throw DomainError("subject id '" + value_ + "' contains a reserved character");
    }

    const std::string& str() const noexcept { return value_; }

    friend auto operator<=>(const SubjectId&, const SubjectId&) = default;
    friend bool operator==(const SubjectId&, const SubjectId&) = default;
    friend std::ostream& operator<<(std::ostream& os, const SubjectId& s) { return os << s.value_; }

private:
    std::string value_;
};

/// Half-open sample interval [begin, end) on a trace's time axis.
struct Segment {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t length() const noexcept { return end - begin; }
    bool valid_for(std::size_t trace_length) const noexcept {
        return begin < end && end <= trace_length;
    }
    friend auto operator<=>(const Segment&, const Segment&) = default;
};

struct SegmentLabel {
    Segment segment;
    SubjectId subject;
    std::string direction; // optional walking-direction tag, may be empty
};

/// Timestamped CSI amplitude stream: frames x (n_tx * n_rx pairs) x subcarriers.
/// Amplitudes are linear magnitudes stored as 32-bit floats, which is also the
/// on-disk precision, so a trace round-trips through the binary format exactly.
class CsiTrace {
public:
    CsiTrace(double sample_rate_hz, std::uint32_t n_tx, std::uint32_t n_rx,
             std::uint32_t n_subcarriers, std::vector<float> amplitudes)
        : sample_rate_hz_(sample_rate_hz), n_tx_(n_tx), n_rx_(n_rx),
          n_subcarriers_(n_subcarriers), data_(std::move(amplitudes)) {
        if (!(sample_rate_hz_ > 0.0) || !std::isfinite(sample_rate_hz_))
            throw DomainError("sample rate must be positive and finite");
        if (n_tx_ == 0 || n_rx_ == 0 || n_subcarriers_ == 0)
            throw DomainError("antenna and subcarrier counts must be positive");
        if (data_.size() % streams() != 0)
            throw DomainError("amplitude buffer is not a whole number of frames");
        for (float v : data_) {
            if (!std::isfinite(v) || v < 0.0f)
                throw DomainError("amplitudes must be finite and nonnegative");
        }
    }

    /// Empty trace (zero frames).
    CsiTrace(double sample_rate_hz, std::uint32_t n_tx, std::uint32_t n_rx,
             std::uint32_t n_subcarriers = 30)
        : CsiTrace(sample_rate_hz, n_tx, n_rx, n_subcarriers, {}) {}

    double sample_rate_hz() const noexcept { return sample_rate_hz_; }
    std::uint32_t n_tx() const noexcept { return n_tx_; }
    std::uint32_t n_rx() const noexcept { return n_rx_; }
    std::uint32_t n_subcarriers() const noexcept { return n_subcarriers_; }
    std::size_t pairs() const noexcept { return std::size_t{n_tx_} * n_rx_; }
    std::size_t streams() const noexcept { return pairs() * n_subcarriers_; }
    std::size_t frames() const noexcept { return data_.size() / streams(); }

    float at(std::size_t frame, std::size_t pair, std::size_t subcarrier) const {
        return data_[(frame * pairs() + pair) * n_subcarriers_ + subcarrier];
    }
    std::span<const float> frame(std::size_t f) const {
        return std::span<const float>(data_).subspan(f * streams(), streams());
    }
    std::span<const float> data() const noexcept { return data_; }

    /// One subcarrier stream of one pair, widened to double.
    std::vector<double> stream(std::size_t pair, std::size_t subcarrier) const {
        std::vector<double> out(frames());
        const std::size_t stride = streams();
        const std::size_t offset = pair * n_subcarriers_ + subcarrier;
        for (std::size_t f = 0; f < out.size(); ++f) out[f] = data_[f * stride + offset];
        return out;
    }

    friend bool operator==(const CsiTrace&, const CsiTrace&) = default;

private:
    double sample_rate_hz_;
    std::uint32_t n_tx_;
    std::uint32_t n_rx_;
    std::uint32_t n_subcarriers_;
    std::vector<float> data_;
};

// ---------------------------------------------------------------------------
// Binary trace format
//
//   "CSIT" | u16 version | f64 fs | u32 n_tx | u32 n_rx | u32 n_sc | u32 n_frames
//   followed by n_frames * n_tx * n_rx * n_sc little-endian f32,
//   frame-major, then pair-major, subcarrier-minor.
// ---------------------------------------------------------------------------

inline constexpr std::array<char, 4> kTraceMagic{'C', 'S', 'I', 'T'};
inline constexpr std::uint16_t kTraceVersion = 1;
inline constexpr std::size_t kTraceHeaderBytes = 4 + 2 + 8 + 4 * 4;

namespace detail {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
    using U = std::conditional_t<sizeof(T) == 2, std::uint16_t,
              std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
    U bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

template <typename T>
T get_le(std::span<const std::uint8_t> in, std::size_t offset) {
    using U = std::conditional_t<sizeof(T) == 2, std::uint16_t,
              std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(U{in[offset + i]} << (8 * i));
    return std::bit_cast<T>(bits);
}

} // namespace detail

inline std::vector<std::uint8_t> encode_trace(const CsiTrace& trace) {
    std::vector<std::uint8_t> out;
    out.reserve(kTraceHeaderBytes + trace.data().size() * 4);
    for (char c : kTraceMagic) out.push_back(static_cast<std::uint8_t>(c));
    detail::put_le<std::uint16_t>(out, kTraceVersion);
    detail::put_le<double>(out, trace.sample_rate_hz());
    detail::put_le<std::uint32_t>(out, trace.n_tx());
    detail::put_le<std::uint32_t>(out, trace.n_rx());
    detail::put_le<std::uint32_t>(out, trace.n_subcarriers());
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(trace.frames()));
    for (float v : trace.data()) detail::put_le<float>(out, v);
    return out;
}

inline CsiTrace decode_trace(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kTraceHeaderBytes)
        throw ParseError("trace header truncated", bytes.size());
    if (!std::equal(kTraceMagic.begin(), kTraceMagic.end(), bytes.begin(),
                    [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; }))
        throw ParseError("bad magic, expected CSIT", 0);
    const auto version = detail::get_le<std::uint16_t>(bytes, 4);
    if (version != kTraceVersion)
        throw ParseError("unsupported trace version " + std::to_string(version), 4);
    const auto fs = detail::get_le<double>(bytes, 6);
    if (!std::isfinite(fs) || !(fs > 0.0)) throw ParseError("sample rate must be positive", 6);
    const auto n_tx = detail::get_le<std::uint32_t>(bytes, 14);
    const auto n_rx = detail::get_le<std::uint32_t>(bytes, 18);
    const auto n_sc = detail::get_le<std::uint32_t>(bytes, 22);
    const auto n_frames = detail::get_le<std::uint32_t>(bytes, 26);
    if (n_tx == 0) throw ParseError("n_tx must be positive", 14);
    if (n_rx == 0) throw ParseError("n_rx must be positive", 18);
    if (n_sc == 0) throw ParseError("n_subcarriers must be positive", 22);

    const std::uint64_t frame_bytes = std::uint64_t{n_tx} * n_rx * n_sc * 4;
    const std::uint64_t body = bytes.size() - kTraceHeaderBytes;
    const std::uint64_t expected = frame_bytes * n_frames;
    if (body < expected) {
        const std::uint64_t whole = body / frame_bytes;
        throw ParseError("body truncated in frame " + std::to_string(whole) + " of " +
                             std::to_string(n_frames),
                         kTraceHeaderBytes + whole * frame_bytes);
    }
    if (body > expected)
        throw ParseError("trailing bytes after declared frames", kTraceHeaderBytes + expected);

    std::vector<float> data(expected / 4);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::size_t off = kTraceHeaderBytes + 4 * i;
        const float v = detail::get_le<float>(bytes, off);
        if (!std::isfinite(v)) throw ParseError("non-finite amplitude", off);
        if (v < 0.0f) throw ParseError("negative amplitude", off);
        data[i] = v;
    }
    return CsiTrace(fs, n_tx, n_rx, n_sc, std::move(data));
}

inline void write_trace(std::ostream& os, const CsiTrace& trace) {
    const auto bytes = encode_trace(trace);
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline CsiTrace read_trace(std::istream& is) {
    std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
    return decode_trace(bytes);
}

inline void save_trace(const std::string& path, const CsiTrace& trace) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_trace(os, trace);
    if (!os) throw std::runtime_error("write failed for " + path);
}

inline CsiTrace load_trace(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_trace(is);
}

// ---------------------------------------------------------------------------
// CSV helpers shared by the text formats
// ---------------------------------------------------------------------------

namespace csv {

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    return s;
}

template <typename T>
T parse_number(std::string_view field, std::uint64_t line) {
    field = trim(field);
    T value{};
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc{} || ptr != end)
        throw ParseError("bad number '" + std::string(field) + "'", line);
    return value;
}

/// Shortest text that reads back to the same double.
inline std::string format_exact(double v) {
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

inline void expect_header(std::istream& is, std::string_view header) {
    std::string line;
    if (!std::getline(is, line) || trim(line) != header)
        throw ParseError("expected header '" + std::string(header) + "'", 1);
}

} // namespace csv

// ---------------------------------------------------------------------------
// CSV trace format: `t,pair,subcarrier,amplitude`, one sample per row,
// t being the frame index. The header fields (fs, antenna counts) are not
// part of the text and must be supplied on read.
// ---------------------------------------------------------------------------

inline void write_trace_csv(std::ostream& os, const CsiTrace& trace) {
    os << "t,pair,subcarrier,amplitude\n";
    for (std::size_t f = 0; f < trace.frames(); ++f)
        for (std::size_t p = 0; p < trace.pairs(); ++p)
            for (std::size_t s = 0; s < trace.n_subcarriers(); ++s)
                os << f << ',' << p << ',' << s << ',' << csv::format_exact(trace.at(f, p, s)) << '\n';
}

inline CsiTrace read_trace_csv(std::istream& is, double sample_rate_hz, std::uint32_t n_tx,
                               std::uint32_t n_rx, std::uint32_t n_subcarriers = 30) {
    csv::expect_header(is, "t,pair,subcarrier,amplitude");
    const std::size_t pairs = std::size_t{n_tx} * n_rx;
    const std::size_t streams = pairs * n_subcarriers;
    std::vector<float> data;
    std::string line;
    std::uint64_t lineno = 1;
    std::size_t expected_index = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (csv::trim(line).empty()) continue;
        const auto fields = csv::split(line);
        if (fields.size() != 4) throw ParseError("expected 4 fields", lineno);
        const auto t = csv::parse_number<std::size_t>(fields[0], lineno);
        const auto p = csv::parse_number<std::size_t>(fields[1], lineno);
        const auto s = csv::parse_number<std::size_t>(fields[2], lineno);
        const auto a = csv::parse_number<float>(fields[3], lineno);
        if (p >= pairs || s >= n_subcarriers) throw ParseError("pair/subcarrier out of range", lineno);
        if ((t * pairs + p) * n_subcarriers + s != expected_index)
            throw ParseError("rows must be ordered by t, pair, subcarrier", lineno);
        if (!std::isfinite(a) || a < 0.0f) throw ParseError("invalid amplitude", lineno);
        data.push_back(a);
        ++expected_index;
    }
    if (data.size() % streams != 0) throw ParseError("incomplete final frame", lineno);
    return CsiTrace(sample_rate_hz, n_tx, n_rx, n_subcarriers, std::move(data));
}

// ---------------------------------------------------------------------------
// Segment and label sidecars
// ---------------------------------------------------------------------------

/// Label sidecar: `j_begin,j_end,subject`, optionally followed by a
/// `direction` column. The column is written only when some label has one.
inline void write_labels(std::ostream& os, std::span<const SegmentLabel> labels) {
    const bool directions = std::ranges::any_of(labels, [](const auto& l) { return !l.direction.empty(); });
    os << (directions ? "j_begin,j_end,subject,direction\n" : "j_begin,j_end,subject\n");
    for (const auto& l : labels) {
        if (l.direction.find_first_of(",\n\r") != std::string::npos)
            throw DomainError("direction tag '" + l.direction + "' contains a separator");
        os << l.segment.begin << ',' << l.segment.end << ',' << l.subject;
        if (directions) os << ',' << l.direction;
        os << '\n';
    }
}

inline std::vector<SegmentLabel> read_labels(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) throw ParseError("expected header 'j_begin,j_end,subject'", 1);
    const auto head = csv::trim(header);
    const bool directions = head == "j_begin,j_end,subject,direction";
    if (!directions && head != "j_begin,j_end,subject")
        throw ParseError("expected header 'j_begin,j_end,subject[,direction]'", 1);
    const std::size_t width = directions ? 4 : 3;
    std::vector<SegmentLabel> out;
    std::string line;
    std::uint64_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (csv::trim(line).empty()) continue;
        const auto fields = csv::split(line);
        if (fields.size() != width) throw ParseError("expected " + std::to_string(width) + " fields", lineno);
        Segment seg{csv::parse_number<std::size_t>(fields[0], lineno),
                    csv::parse_number<std::size_t>(fields[1], lineno)};
        if (seg.begin >= seg.end) throw ParseError("j_begin must be < j_end", lineno);
        try {
            out.push_back({seg, SubjectId(std::string(csv::trim(fields[2]))),
                           directions ? std::string(csv::trim(fields[3])) : std::string{}});
        } catch (const DomainError& e) {
            throw ParseError(e.what(), lineno);
        }
    }
    return out;
}

inline void write_segments(std::ostream& os, std::span<const Segment> segments) {
    os << "j_begin,j_end\n";
    for (const auto& s : segments) os << s.begin << ',' << s.end << '\n';
}

inline std::vector<Segment> read_segments(std::istream& is) {
    csv::expect_header(is, "j_begin,j_end");
    std::vector<Segment> out;
    std::string line;
    std::uint64_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (csv::trim(line).empty()) continue;
        const auto fields = csv::split(line);
        if (fields.size() != 2) throw ParseError("expected 2 fields", lineno);
        Segment seg{csv::parse_number<std::size_t>(fields[0], lineno),
                    csv::parse_number<std::size_t>(fields[1], lineno)};
        if (seg.begin >= seg.end) throw ParseError("j_begin must be < j_end", lineno);
        out.push_back(seg);
    }
    return out;
}

} // namespace freesense
