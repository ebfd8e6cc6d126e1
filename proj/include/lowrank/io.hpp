#pragma once

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lowrank/errors.hpp"
#include "lowrank/experiments.hpp"
#include "lowrank/linalg.hpp"
#include "lowrank/operators.hpp"

namespace lowrank {

/// Shortest decimal form that round-trips a 64-bit float (17 significant digits).
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

/// All emitted files go through a temp-then-rename so readers never observe
/// a partial write.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out.flush()) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string());
}

inline std::string strip_comment(const std::string& line) {
    const auto pos = line.find('#');
    return pos == std::string::npos ? line : line.substr(0, pos);
}

inline bool blank(const std::string& line) {
    return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

inline double parse_double(const std::string& token, long line_no) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0' || errno == ERANGE)
        throw FormatError("malformed number '" + token + "'", line_no);
    return v;
}

inline long long parse_integer(const std::string& token, long line_no) {
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(token.c_str(), &end, 10);
    if (end == token.c_str() || *end != '\0' || errno == ERANGE)
        throw FormatError("malformed integer '" + token + "'", line_no);
    return v;
}

inline std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

} // namespace detail

/// Dense matrix text format: header "n1 n2", then n1 rows of n2 values.
inline void write_matrix(const std::filesystem::path& path, const Matrix& m) {
    if (m.rows() < 1 || m.cols() < 1)
        throw ShapeError("write_matrix: matrix must have positive dimensions");
    std::string out;
    out.reserve(static_cast<std::size_t>(m.size()) * 24 + 32);
    out += std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j > 0) out += " ";
            out += format_double(m(i, j));
        }
        out += "\n";
    }
    detail::write_atomic(path, out);
}

inline Matrix read_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    long line_no = 0;

    auto next_content_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            line = detail::strip_comment(line);
            if (!detail::blank(line)) return true;
        }
        return false;
    };

    if (!next_content_line()) throw FormatError("missing matrix header in " + path.string());
    const auto header = detail::split_ws(line);
    if (header.size() != 2) throw FormatError("matrix header must be 'n1 n2'", line_no);
    const long long rows = detail::parse_integer(header[0], line_no);
    const long long cols = detail::parse_integer(header[1], line_no);
    if (rows < 1 || cols < 1) throw FormatError("matrix dimensions must be positive", line_no);
    if (rows > (1LL << 20) || cols > (1LL << 20) || rows * cols > (1LL << 30))
        throw FormatError("matrix dimensions too large", line_no);

    Matrix m(rows, cols);
    for (long long i = 0; i < rows; ++i) {
        if (!next_content_line())
            throw FormatError("expected " + std::to_string(rows) + " matrix rows, got " +
                              std::to_string(i), line_no);
        const auto tokens = detail::split_ws(line);
        if (static_cast<long long>(tokens.size()) != cols)
            throw FormatError("expected " + std::to_string(cols) + " values in row", line_no);
        for (long long j = 0; j < cols; ++j) {
            const double v = detail::parse_double(tokens[static_cast<std::size_t>(j)], line_no);
            if (!std::isfinite(v)) throw FormatError("non-finite matrix entry", line_no);
            m(i, j) = v;
        }
    }
    if (next_content_line()) throw FormatError("trailing content after matrix body", line_no);
    return m;
}

/// Observation text format: header "n1 n2 m", then m lines "row col value"
/// with zero-based indices. '#' starts a comment.
inline void write_observations(const std::filesystem::path& path, const ObservationSet& obs,
                               const Vector& values) {
    if (values.size() != obs.size())
        throw ShapeError("write_observations: value count does not match index count");
    std::string out;
    out.reserve(static_cast<std::size_t>(obs.size()) * 32 + 32);
    out += std::to_string(obs.rows()) + " " + std::to_string(obs.cols()) + " " +
           std::to_string(obs.size()) + "\n";
    Index k = 0;
    for (const auto& [i, j] : obs.entries()) {
        out += std::to_string(i) + " " + std::to_string(j) + " " + format_double(values(k++)) + "\n";
    }
    detail::write_atomic(path, out);
}

inline std::pair<ObservationSet, Vector> read_observations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    long line_no = 0;

    auto next_content_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            line = detail::strip_comment(line);
            if (!detail::blank(line)) return true;
        }
        return false;
    };

    if (!next_content_line()) throw FormatError("missing observation header in " + path.string());
    const auto header = detail::split_ws(line);
    if (header.size() != 3) throw FormatError("observation header must be 'n1 n2 m'", line_no);
    const long long rows = detail::parse_integer(header[0], line_no);
    const long long cols = detail::parse_integer(header[1], line_no);
    const long long count = detail::parse_integer(header[2], line_no);
    if (rows < 1 || cols < 1) throw FormatError("dimensions must be positive", line_no);
    if (rows > (1LL << 20) || cols > (1LL << 20) || rows * cols > (1LL << 30))
        throw FormatError("dimensions too large", line_no);
    if (count < 1 || count > rows * cols)
        throw FormatError("observation count must lie in [1, n1*n2]", line_no);

    std::vector<std::pair<Index, Index>> entries;
    entries.reserve(static_cast<std::size_t>(count));
    Vector values(count);
    std::vector<char> seen(static_cast<std::size_t>(rows * cols), 0);
    for (long long k = 0; k < count; ++k) {
        if (!next_content_line())
            throw FormatError("expected " + std::to_string(count) + " observations, got " +
                              std::to_string(k), line_no);
        const auto tokens = detail::split_ws(line);
        if (tokens.size() != 3) throw FormatError("expected 'row col value'", line_no);
        const long long i = detail::parse_integer(tokens[0], line_no);
        const long long j = detail::parse_integer(tokens[1], line_no);
        if (i < 0 || i >= rows || j < 0 || j >= cols)
            throw FormatError("index (" + std::to_string(i) + "," + std::to_string(j) +
                              ") out of range", line_no);
        auto& flag = seen[static_cast<std::size_t>(i * cols + j)];
        if (flag) throw FormatError("duplicate index (" + std::to_string(i) + "," +
                                    std::to_string(j) + ")", line_no);
        flag = 1;
        const double v = detail::parse_double(tokens[2], line_no);
        if (!std::isfinite(v)) throw FormatError("non-finite observation value", line_no);
        entries.emplace_back(static_cast<Index>(i), static_cast<Index>(j));
        values(k) = v;
    }
    if (next_content_line()) throw FormatError("trailing content after observations", line_no);
    return {ObservationSet(rows, cols, std::move(entries)), std::move(values)};
}

/// Benchmark CSV. Timing is opt-in because measured durations are the one
/// column that cannot reproduce byte-for-byte across runs; with
/// include_timing = false the column holds 0.
inline std::string benchmark_csv(const std::vector<BenchmarkRecord>& records,
                                 bool include_timing = false) {
    std::string out =
        "n1,n2,rank,sample_fraction,algorithm,trial,iterations,relative_error,"
        "wall_time_ms,converged,seed\n";
    for (const auto& r : records) {
        out += std::to_string(r.spec.rows) + "," + std::to_string(r.spec.cols) + "," +
               std::to_string(r.spec.rank) + "," + format_double(r.spec.resolved_fraction()) + "," +
               algorithm_name(r.algorithm) + "," + std::to_string(r.trial) + "," +
               std::to_string(r.iterations) + "," + format_double(r.relative_error) + "," +
               format_double(include_timing ? r.wall_time_ms : 0.0) + "," +
               (r.converged ? "true" : "false") + "," + std::to_string(r.trial_seed) + "\n";
    }
    return out;
}

inline void write_benchmark_csv(const std::filesystem::path& path,
                                const std::vector<BenchmarkRecord>& records,
                                bool include_timing = false) {
    detail::write_atomic(path, benchmark_csv(records, include_timing));
}

/// Sweep CSV: benchmark rows prefixed with the swept parameter and value.
/// Records must be value-major with `trials` rows per value, as run_sweep
/// returns them.
inline std::string sweep_csv(SweepParameter param, const std::vector<double>& values, int trials,
                             const std::vector<BenchmarkRecord>& records,
                             bool include_timing = false) {
    if (records.size() != values.size() * static_cast<std::size_t>(trials))
        throw ParameterError("sweep_csv: record count does not match values x trials");
    std::string out =
        "param,value,n1,n2,rank,sample_fraction,algorithm,trial,iterations,relative_error,"
        "wall_time_ms,converged,seed\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const double value = values[i / static_cast<std::size_t>(trials)];
        out += std::string(sweep_parameter_name(param)) + "," + format_double(value) + "," +
               std::to_string(r.spec.rows) + "," + std::to_string(r.spec.cols) + "," +
               std::to_string(r.spec.rank) + "," + format_double(r.spec.resolved_fraction()) + "," +
               algorithm_name(r.algorithm) + "," + std::to_string(r.trial) + "," +
               std::to_string(r.iterations) + "," + format_double(r.relative_error) + "," +
               format_double(include_timing ? r.wall_time_ms : 0.0) + "," +
               (r.converged ? "true" : "false") + "," + std::to_string(r.trial_seed) + "\n";
    }
    return out;
}

inline void write_sweep_csv(const std::filesystem::path& path, SweepParameter param,
                            const std::vector<double>& values, int trials,
                            const std::vector<BenchmarkRecord>& records,
                            bool include_timing = false) {
    detail::write_atomic(path, sweep_csv(param, values, trials, records, include_timing));
}

/// Phase CSV: one row per cell with both the requested axis values and the
/// realized (m, rank, d_r) after integer rounding.
inline std::string phase_csv(const PhaseGrid& grid) {
    std::string out =
        "row,col,sampling_requested,freedom_requested,sampling_realized,freedom_realized,"
        "m,rank,degrees_of_freedom,successes,trials,success_rate\n";
    for (std::size_t fi = 0; fi < grid.freedom_axis.size(); ++fi) {
        for (std::size_t si = 0; si < grid.sampling_axis.size(); ++si) {
            const PhaseCell& c = grid.at(fi, si);
            out += std::to_string(fi) + "," + std::to_string(si) + "," +
                   format_double(c.requested_sampling) + "," + format_double(c.requested_freedom) +
                   "," + format_double(c.realized_sampling) + "," +
                   format_double(c.realized_freedom) + "," + std::to_string(c.sample_count) + "," +
                   std::to_string(c.rank) + "," + std::to_string(c.freedom) + "," +
                   std::to_string(c.successes) + "," + std::to_string(c.trials) + "," +
                   format_double(c.success_rate()) + "\n";
        }
    }
    return out;
}

inline void write_phase_csv(const std::filesystem::path& path, const PhaseGrid& grid) {
    detail::write_atomic(path, phase_csv(grid));
}

/// Plain PGM (P2) rendering of the grid: width = sampling cells, height =
/// freedom cells, pixel = round(255 * success probability), so white cells
/// mark certain recovery and black certain failure.
inline std::string phase_pgm(const PhaseGrid& grid) {
    std::string out = "P2\n" + std::to_string(grid.sampling_axis.size()) + " " +
                      std::to_string(grid.freedom_axis.size()) + "\n255\n";
    for (std::size_t fi = 0; fi < grid.freedom_axis.size(); ++fi) {
        for (std::size_t si = 0; si < grid.sampling_axis.size(); ++si) {
            if (si > 0) out += " ";
            out += std::to_string(std::lround(255.0 * grid.at(fi, si).success_rate()));
        }
        out += "\n";
    }
    return out;
}

inline void emit_phase_pgm(const std::filesystem::path& path, const PhaseGrid& grid) {
    detail::write_atomic(path, phase_pgm(grid));
}

} // namespace lowrank
