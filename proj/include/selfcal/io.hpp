#pragma once

// CSV files: correspondences (x1,y1,x2,y2) and sweep result tables.
// Numbers are written in shortest round-trip form, so reading back gives
// the same doubles. Parse errors carry the 1-based line number.

#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "selfcal/core.hpp"
#include "selfcal/metrics.hpp"
#include "selfcal/pose.hpp"
#include "selfcal/sweep.hpp"

namespace selfcal {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline Error parse_error(int line, const std::string& msg) {
  return Error(ErrorCode::kParseError,
               "line " + std::to_string(line) + ": " + msg);
}

inline double parse_double(std::string_view s, int line) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw parse_error(line, "invalid number '" + std::string(s) + "'");
  }
  return v;
}

/// Rows of a comma-separated file with a header line. Blank lines are
/// skipped; quoting is not supported.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> lines;  // source line of each row

  std::optional<size_t> column(std::string_view name) const {
    for (size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  }

  size_t require_column(std::string_view name) const {
    if (auto c = column(name)) return *c;
    throw parse_error(1, "missing column '" + std::string(name) + "'");
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    std::string_view field = line.substr(
        start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) {
      field.remove_prefix(1);
    }
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) {
      field.remove_suffix(1);
    }
    out.emplace_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  int n = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto fields = detail::split_csv_line(line);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw parse_error(n, "expected " + std::to_string(t.header.size()) +
                               " fields, got " +
                               std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.lines.push_back(n);
  }
  if (in.bad()) throw Error(ErrorCode::kIoError, "read failed");
  if (!have_header) throw parse_error(n + 1, "missing header");
  return t;
}

inline std::vector<Correspondence> read_correspondences_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  const std::vector<std::string> expected = {"x1", "y1", "x2", "y2"};
  if (t.header != expected) {
    throw parse_error(1, "expected header x1,y1,x2,y2");
  }
  std::vector<Correspondence> out;
  out.reserve(t.rows.size());
  for (size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    const int line = t.lines[i];
    Correspondence c{Vec2(parse_double(r[0], line), parse_double(r[1], line)),
                     Vec2(parse_double(r[2], line), parse_double(r[3], line))};
    if (!c.x1.allFinite() || !c.x2.allFinite()) {
      throw parse_error(line, "non-finite coordinate");
    }
    out.push_back(c);
  }
  return out;
}

inline void write_correspondences_csv(std::ostream& out,
                                      std::span<const Correspondence> cs) {
  out << "x1,y1,x2,y2\n";
  for (const auto& c : cs) {
    out << format_double(c.x1.x()) << ',' << format_double(c.x1.y()) << ','
        << format_double(c.x2.x()) << ',' << format_double(c.x2.y()) << '\n';
  }
}

inline constexpr std::string_view kSweepCsvHeader =
    "sweep_param,value,trial,estimator,f1_est,f2_est,f1_err,f2_err,"
    "iterations,converged,status";

inline void write_sweep_csv(std::ostream& out,
                            std::span<const SweepRow> rows) {
  out << kSweepCsvHeader << '\n';
  for (const auto& r : rows) {
    out << to_string(r.param) << ',' << format_double(r.value) << ','
        << r.trial << ',' << to_string(r.estimator) << ','
        << format_double(r.f1_est) << ',' << format_double(r.f2_est) << ','
        << format_double(r.f1_err) << ',' << format_double(r.f2_err) << ','
        << r.iterations << ',' << (r.converged ? 1 : 0) << ',' << r.status
        << '\n';
  }
}

namespace detail {

inline int parse_int(std::string_view s, int line) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw parse_error(line, "invalid integer '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace detail

/// Inverse of write_sweep_csv. The degenerate flag is not stored.
inline std::vector<SweepRow> read_sweep_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  if (t.header != detail::split_csv_line(kSweepCsvHeader)) {
    throw parse_error(1, "unexpected header for a sweep table");
  }
  std::vector<SweepRow> out;
  for (size_t i = 0; i < t.rows.size(); ++i) {
    const auto& f = t.rows[i];
    const int line = t.lines[i];
    SweepRow r;
    const auto param = parse_sweep_param(f[0]);
    const auto est = parse_estimator(f[3]);
    if (!param) throw parse_error(line, "unknown sweep parameter '" + f[0] + "'");
    if (!est) throw parse_error(line, "unknown estimator '" + f[3] + "'");
    r.param = *param;
    r.value = parse_double(f[1], line);
    r.trial = detail::parse_int(f[2], line);
    r.estimator = *est;
    r.f1_est = parse_double(f[4], line);
    r.f2_est = parse_double(f[5], line);
    r.f1_err = parse_double(f[6], line);
    r.f2_err = parse_double(f[7], line);
    r.iterations = detail::parse_int(f[8], line);
    r.converged = detail::parse_int(f[9], line) != 0;
    r.status = f[10];
    out.push_back(std::move(r));
  }
  return out;
}

/// Evaluation records from any CSV carrying estimator, f1_err and f2_err
/// columns. Optional columns: p_err, and f1_est/f2_est, whose absence or
/// non-finite value marks a failed estimate.
inline std::vector<EvalRecord> read_eval_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  const size_t ce = t.require_column("estimator");
  const size_t c1 = t.require_column("f1_err");
  const size_t c2 = t.require_column("f2_err");
  const auto cp = t.column("p_err");
  const auto e1 = t.column("f1_est");
  const auto e2 = t.column("f2_est");
  std::vector<EvalRecord> out;
  for (size_t i = 0; i < t.rows.size(); ++i) {
    const auto& f = t.rows[i];
    const int line = t.lines[i];
    EvalRecord r;
    r.estimator = f[ce];
    r.f_err = {parse_double(f[c1], line), parse_double(f[c2], line)};
    if (cp) r.p_err = parse_double(f[*cp], line);
    r.success = std::isfinite(r.f_err[0]) && std::isfinite(r.f_err[1]);
    for (const auto& c : {e1, e2}) {
      if (c) {
        const double v = parse_double(f[*c], line);
        r.success = r.success && std::isfinite(v) && v > 0.0;
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace selfcal
