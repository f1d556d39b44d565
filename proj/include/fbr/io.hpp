#pragma once

// Delimited-text datasets, flat binary draw files and curve tables.
//
// Dataset layout: header row, then one row per subject.
//   outcome, [censor], scalar covariates..., functional columns...
// Functional column headers are their grid values. Doubles are written in
// shortest round-trip form, so write followed by read reproduces the data
// bit for bit.
//
// Draw file layout (little-endian):
//   8 bytes  magic "FBRDRAW1"
//   uint64   chains, draws per chain, dimension
//   double   chain 0 row-major (draws x dim), chain 1, ...

#include <Eigen/Dense>

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "fbr/analysis.hpp"
#include "fbr/design.hpp"
#include "fbr/errors.hpp"

namespace fbr {

inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

namespace detail {

inline std::optional<double> parse_number(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::vector<std::string> split_row(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_no;  ///< 1-based file line of each row
};

inline Table read_table(std::istream& in) {
  Table t;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (blank(line)) continue;
    if (t.header.empty()) {
      t.header = split_row(line);
      continue;
    }
    auto row = split_row(line);
    if (row.size() != t.header.size())
      throw IngestError("line " + std::to_string(n) + ": expected " + std::to_string(t.header.size()) +
                        " fields, found " + std::to_string(row.size()));
    t.rows.push_back(std::move(row));
    t.line_no.push_back(n);
  }
  if (t.rows.empty()) throw IngestError("no data rows");
  return t;
}

inline double cell_value(const Table& t, std::size_t r, std::size_t c) {
  const std::string& s = t.rows[r][c];
  const std::string where = "row " + std::to_string(r + 1) + " (line " + std::to_string(t.line_no[r]) +
                            "), column " + std::to_string(c + 1) + " '" + t.header[c] + "'";
  if (blank(s) || s == "NA" || s == "NaN" || s == "nan") throw IngestError(where + ": missing value");
  const auto v = parse_number(s);
  if (!v || !std::isfinite(*v)) throw IngestError(where + ": not a finite number: '" + s + "'");
  return *v;
}

/// Index of the first functional column; every header from there on must be numeric.
inline std::size_t functional_start(const Table& t, std::size_t first) {
  std::size_t start = t.header.size();
  for (std::size_t c = first; c < t.header.size(); ++c)
    if (parse_number(t.header[c])) {
      start = c;
      break;
    }
  for (std::size_t c = start; c < t.header.size(); ++c)
    if (!parse_number(t.header[c]))
      throw IngestError("column " + std::to_string(c + 1) + " '" + t.header[c] +
                        "' follows functional columns but is not a grid value");
  return start;
}

inline Eigen::VectorXd header_grid(const Table& t, std::size_t start) {
  const auto m = static_cast<Eigen::Index>(t.header.size() - start);
  if (m < 2) throw IngestError("need at least two functional columns");
  Eigen::VectorXd grid(m);
  for (Eigen::Index j = 0; j < m; ++j) grid(j) = *parse_number(t.header[start + static_cast<std::size_t>(j)]);
  for (Eigen::Index j = 1; j < m; ++j)
    if (!(grid(j) > grid(j - 1)))
      throw IngestError("grid is not strictly increasing at column " +
                        std::to_string(start + static_cast<std::size_t>(j) + 1) + " ('" +
                        t.header[start + static_cast<std::size_t>(j)] + "')");
  return grid;
}

inline std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream f(path, mode);
  if (!f) throw IngestError("cannot open '" + path + "' for writing");
  return f;
}

inline std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream f(path, mode);
  if (!f) throw IngestError("cannot open '" + path + "'");
  return f;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scalar-outcome datasets

struct DatasetSchema {
  bool has_censor = false;  ///< second column holds 0 (event) / 1 (censored)
};

inline void write_dataset(std::ostream& out, const FunctionalDataset& d) {
  d.validate();
  const Eigen::Index n = d.size();
  out << "y";
  if (d.censor) out << ",censor";
  for (Eigen::Index p = 0; p < d.z.rows(); ++p)
    out << ',' << (static_cast<std::size_t>(p) < d.covariate_names.size() ? d.covariate_names[static_cast<std::size_t>(p)]
                                                                           : "z" + std::to_string(p + 1));
  for (Eigen::Index j = 0; j < d.grid.size(); ++j) out << ',' << format_double(d.grid(j));
  out << '\n';
  for (Eigen::Index i = 0; i < n; ++i) {
    out << format_double(d.y(i));
    if (d.censor) out << ',' << (*d.censor)(i);
    for (Eigen::Index p = 0; p < d.z.rows(); ++p) out << ',' << format_double(d.z(p, i));
    for (Eigen::Index j = 0; j < d.w.cols(); ++j) out << ',' << format_double(d.w(i, j));
    out << '\n';
  }
}

inline FunctionalDataset read_dataset(std::istream& in, const DatasetSchema& schema) {
  const detail::Table t = detail::read_table(in);
  const std::size_t first = schema.has_censor ? 2 : 1;
  if (t.header.size() <= first) throw IngestError("too few columns");
  if (schema.has_censor && detail::parse_number(t.header[1]))
    throw IngestError("expected a censor column second, found grid value '" + t.header[1] + "'");
  const std::size_t start = detail::functional_start(t, first);
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  const auto p = static_cast<Eigen::Index>(start - first);

  FunctionalDataset d;
  d.grid = detail::header_grid(t, start);
  d.y.resize(n);
  d.z.resize(p, n);
  d.w.resize(n, d.grid.size());
  d.covariate_names.assign(t.header.begin() + static_cast<std::ptrdiff_t>(first),
                           t.header.begin() + static_cast<std::ptrdiff_t>(start));
  if (schema.has_censor) d.censor = Eigen::VectorXi(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    d.y(i) = detail::cell_value(t, r, 0);
    if (schema.has_censor) {
      const double c = detail::cell_value(t, r, 1);
      if (c != 0.0 && c != 1.0)
        throw IngestError("row " + std::to_string(r + 1) + " (line " + std::to_string(t.line_no[r]) +
                          "), column 2 '" + t.header[1] + "': censor must be 0 or 1, found '" + t.rows[r][1] + "'");
      (*d.censor)(i) = static_cast<int>(c);
    }
    for (Eigen::Index k = 0; k < p; ++k) d.z(k, i) = detail::cell_value(t, r, first + static_cast<std::size_t>(k));
    for (Eigen::Index j = 0; j < d.grid.size(); ++j)
      d.w(i, j) = detail::cell_value(t, r, start + static_cast<std::size_t>(j));
  }
  d.validate();
  return d;
}

inline void write_dataset(const std::string& path, const FunctionalDataset& d) {
  auto f = detail::open_out(path);
  write_dataset(f, d);
}

inline FunctionalDataset read_dataset(const std::string& path, const DatasetSchema& schema) {
  auto f = detail::open_in(path);
  return read_dataset(f, schema);
}

// ---------------------------------------------------------------------------
// Functional-response datasets: predictor columns, then response columns.

inline void write_response_dataset(std::ostream& out, const FunctionalResponseDataset& d) {
  if (d.x.rows() != d.y.rows() || d.y.cols() != d.grid.size()) throw ShapeError("inconsistent response dataset");
  for (Eigen::Index p = 0; p < d.x.cols(); ++p)
    out << (p ? "," : "")
        << (static_cast<std::size_t>(p) < d.predictor_names.size() ? d.predictor_names[static_cast<std::size_t>(p)]
                                                                    : "x" + std::to_string(p + 1));
  for (Eigen::Index j = 0; j < d.grid.size(); ++j) out << ',' << format_double(d.grid(j));
  out << '\n';
  for (Eigen::Index i = 0; i < d.y.rows(); ++i) {
    for (Eigen::Index p = 0; p < d.x.cols(); ++p) out << (p ? "," : "") << format_double(d.x(i, p));
    for (Eigen::Index j = 0; j < d.y.cols(); ++j) out << ',' << format_double(d.y(i, j));
    out << '\n';
  }
}

inline FunctionalResponseDataset read_response_dataset(std::istream& in) {
  const detail::Table t = detail::read_table(in);
  const std::size_t start = detail::functional_start(t, 0);
  if (start == 0) throw IngestError("no predictor columns");
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  FunctionalResponseDataset d;
  d.grid = detail::header_grid(t, start);
  d.predictor_names.assign(t.header.begin(), t.header.begin() + static_cast<std::ptrdiff_t>(start));
  d.x.resize(n, static_cast<Eigen::Index>(start));
  d.y.resize(n, d.grid.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    for (std::size_t p = 0; p < start; ++p) d.x(i, static_cast<Eigen::Index>(p)) = detail::cell_value(t, r, p);
    for (Eigen::Index j = 0; j < d.grid.size(); ++j)
      d.y(i, j) = detail::cell_value(t, r, start + static_cast<std::size_t>(j));
  }
  return d;
}

inline void write_response_dataset(const std::string& path, const FunctionalResponseDataset& d) {
  auto f = detail::open_out(path);
  write_response_dataset(f, d);
}

inline FunctionalResponseDataset read_response_dataset(const std::string& path) {
  auto f = detail::open_in(path);
  return read_response_dataset(f);
}

// ---------------------------------------------------------------------------
// Draws

inline constexpr char kDrawMagic[8] = {'F', 'B', 'R', 'D', 'R', 'A', 'W', '1'};

inline void write_draws(const std::string& path, const std::vector<Eigen::MatrixXd>& chains) {
  static_assert(std::endian::native == std::endian::little, "draw files are little-endian");
  auto f = detail::open_out(path, std::ios::binary);
  const std::uint64_t nc = chains.size();
  const std::uint64_t nd = chains.empty() ? 0 : static_cast<std::uint64_t>(chains[0].rows());
  const std::uint64_t dim = chains.empty() ? 0 : static_cast<std::uint64_t>(chains[0].cols());
  f.write(kDrawMagic, 8);
  for (std::uint64_t v : {nc, nd, dim}) f.write(reinterpret_cast<const char*>(&v), sizeof v);
  for (const auto& c : chains) {
    if (static_cast<std::uint64_t>(c.rows()) != nd || static_cast<std::uint64_t>(c.cols()) != dim)
      throw ShapeError("chains differ in shape");
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = c;
    f.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
  }
  if (!f) throw IngestError("failed writing '" + path + "'");
}

inline std::vector<Eigen::MatrixXd> read_draws(const std::string& path) {
  auto f = detail::open_in(path, std::ios::binary);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kDrawMagic, 8) != 0) throw IngestError("'" + path + "' is not a draw file");
  std::uint64_t hdr[3];
  f.read(reinterpret_cast<char*>(hdr), sizeof hdr);
  if (!f) throw IngestError("truncated draw file header");
  std::vector<Eigen::MatrixXd> chains;
  for (std::uint64_t c = 0; c < hdr[0]; ++c) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(
        static_cast<Eigen::Index>(hdr[1]), static_cast<Eigen::Index>(hdr[2]));
    f.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
    if (!f) throw IngestError("truncated draw file body");
    chains.emplace_back(rm);
  }
  return chains;
}

// ---------------------------------------------------------------------------
// Curve tables

/// Columns: t, mean, pw_lo, pw_hi, cma_lo, cma_hi.
inline void write_curve_table(std::ostream& out, const CurveDraws& curves, double alpha) {
  const Band pw = normal_interval(curves, alpha);
  const CmaBand cma = cma_interval(curves, alpha);
  out << "t,mean,pw_lo,pw_hi,cma_lo,cma_hi\n";
  for (Eigen::Index m = 0; m < curves.grid.size(); ++m)
    out << format_double(curves.grid(m)) << ',' << format_double(pw.center(m)) << ',' << format_double(pw.lo(m))
        << ',' << format_double(pw.hi(m)) << ',' << format_double(cma.lo(m)) << ',' << format_double(cma.hi(m))
        << '\n';
}

}  // namespace fbr
