#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mzlock/dsp.hpp"
#include "mzlock/experiments.hpp"
#include "mzlock/synth.hpp"

namespace mzlock {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shortest round-trippable decimal form of a double.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline constexpr char kBinMagic[4] = {'M', 'Z', 'L', 'K'};
inline constexpr std::uint32_t kBinVersion = 1;

inline std::uint64_t to_le_bits(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    if constexpr (std::endian::native == std::endian::big) {
        std::uint64_t r = 0;
        for (int i = 0; i < 8; ++i) r |= ((bits >> (8 * i)) & 0xffull) << (8 * (7 - i));
        bits = r;
    }
    return bits;
}

inline double from_le_bits(std::uint64_t bits) {
    if constexpr (std::endian::native == std::endian::big) {
        std::uint64_t r = 0;
        for (int i = 0; i < 8; ++i) r |= ((bits >> (8 * i)) & 0xffull) << (8 * (7 - i));
        bits = r;
    }
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

inline double parse_double(const char* s, const char** tail, const std::string& context) {
    char* end = nullptr;
    const double v = std::strtod(s, &end);
    if (end == s) throw IoError("malformed number in " + context);
    if (tail) *tail = end;
    return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// interferogram files
// ---------------------------------------------------------------------------

inline void write_interferogram_csv(const std::string& path, const Interferogram& ifg) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "# sample_rate_hz=" << format_double(ifg.sample_rate_hz) << "\n";
    out << "t_s,ch1,ch2\n";
    for (std::size_t i = 0; i < ifg.ch1.size(); ++i) {
        const double t = static_cast<double>(i) / ifg.sample_rate_hz;
        out << format_double(t) << ',' << format_double(ifg.ch1[i]) << ','
            << format_double(ifg.ch2[i]) << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

inline void write_interferogram_bin(const std::string& path, const Interferogram& ifg) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(detail::kBinMagic, 4);
    const std::uint32_t version = detail::kBinVersion;
    out.write(reinterpret_cast<const char*>(&version), 4);
    const std::uint64_t rate_bits = detail::to_le_bits(ifg.sample_rate_hz);
    out.write(reinterpret_cast<const char*>(&rate_bits), 8);
    for (std::size_t i = 0; i < ifg.ch1.size(); ++i) {
        const std::uint64_t a = detail::to_le_bits(ifg.ch1[i]);
        const std::uint64_t b = detail::to_le_bits(ifg.ch2[i]);
        out.write(reinterpret_cast<const char*>(&a), 8);
        out.write(reinterpret_cast<const char*>(&b), 8);
    }
    if (!out) throw IoError("write failed: " + path);
}

inline Interferogram read_interferogram_csv_stream(std::istream& in, const std::string& path) {
    Interferogram ifg;
    std::string line;
    if (!std::getline(in, line) || line.rfind("# sample_rate_hz=", 0) != 0)
        throw IoError("missing sample_rate_hz header in " + path);
    ifg.sample_rate_hz = detail::parse_double(line.c_str() + 17, nullptr, path);
    if (!std::getline(in, line) || line.rfind("t_s,", 0) != 0)
        throw IoError("missing column header in " + path);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const char* p = line.c_str();
        detail::parse_double(p, &p, path);  // time column is derivable; skip
        if (*p != ',') throw IoError("malformed row in " + path);
        const double c1 = detail::parse_double(p + 1, &p, path);
        if (*p != ',') throw IoError("malformed row in " + path);
        const double c2 = detail::parse_double(p + 1, &p, path);
        ifg.ch1.push_back(c1);
        ifg.ch2.push_back(c2);
    }
    return ifg;
}

inline Interferogram read_interferogram_bin_stream(std::istream& in, const std::string& path) {
    char magic[4];
    std::uint32_t version = 0;
    std::uint64_t rate_bits = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&rate_bits), 8);
    if (!in || std::memcmp(magic, detail::kBinMagic, 4) != 0)
        throw IoError("bad header in " + path);
    if (version != detail::kBinVersion) throw IoError("unsupported version in " + path);
    Interferogram ifg;
    ifg.sample_rate_hz = detail::from_le_bits(rate_bits);
    std::uint64_t pair[2];
    while (in.read(reinterpret_cast<char*>(pair), 16)) {
        ifg.ch1.push_back(detail::from_le_bits(pair[0]));
        ifg.ch2.push_back(detail::from_le_bits(pair[1]));
    }
    if (in.gcount() != 0) throw IoError("truncated record in " + path);
    return ifg;
}

/// Read either format, telling them apart by the leading magic bytes.
inline Interferogram read_interferogram(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    char magic[4] = {};
    in.read(magic, 4);
    if (!in) throw IoError("file too short: " + path);
    in.seekg(0);
    if (std::memcmp(magic, detail::kBinMagic, 4) == 0)
        return read_interferogram_bin_stream(in, path);
    return read_interferogram_csv_stream(in, path);
}

// ---------------------------------------------------------------------------
// tabular results
// ---------------------------------------------------------------------------

inline std::string detection_result_header() {
    return "target_hz,located_hz,signal_power,noise_floor,snr,detected";
}

inline std::string detection_result_row(const DetectionResult& r) {
    std::string row = format_double(r.target_freq_hz);
    row += ',' + format_double(r.located_freq_hz);
    row += ',' + format_double(r.signal_power);
    row += ',' + format_double(r.noise_floor);
    row += ',' + format_double(r.snr);
    row += r.detected ? ",1" : ",0";
    return row;
}

inline void write_sweep_csv(const std::string& path, const SweepResult& result) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "# name=" << result.name << "\n";
    for (const auto& [key, value] : result.metadata) out << "# " << key << "=" << value << "\n";
    for (std::size_t c = 0; c < result.columns.size(); ++c)
        out << (c ? "," : "") << result.columns[c];
    out << "\n";
    for (const auto& row : result.rows) {
        for (std::size_t c = 0; c < row.size(); ++c)
            out << (c ? "," : "") << format_double(row[c]);
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace mzlock
