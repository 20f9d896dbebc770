#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cpc/errors.hpp"

namespace cpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Paired observations: row i holds (X_i, Y_i). Immutable after construction.
struct PairedSample {
  MatrixXd x;  // n x d1
  MatrixXd y;  // n x d2

  PairedSample() = default;
  PairedSample(MatrixXd x_rows, MatrixXd y_rows) : x(std::move(x_rows)), y(std::move(y_rows)) {
    require(x.rows() == y.rows(), errc::row_count_mismatch,
            "x has " + std::to_string(x.rows()) + " rows, y has " + std::to_string(y.rows()));
    require(x.rows() >= 4, errc::sample_too_small,
            "paired sample needs at least 4 rows, got " + std::to_string(x.rows()));
    require(x.allFinite() && y.allFinite(), errc::parse_error,
            "non-finite entry in paired sample");
  }

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index d1() const { return x.cols(); }
  Eigen::Index d2() const { return y.cols(); }

  void write_x_row(Eigen::Index i, double* dst) const {
    for (Eigen::Index j = 0; j < x.cols(); ++j) dst[j] = x(i, j);
  }
  void write_y_row(Eigen::Index i, double* dst) const {
    for (Eigen::Index j = 0; j < y.cols(); ++j) dst[j] = y(i, j);
  }
};

// Column-compressed sparse matrix; absent entries are zero. Row indices are
// 0-based internally (the triplet file format is 1-based).
struct SparseColumnMatrix {
  Eigen::Index n_rows = 0;
  Eigen::Index n_cols = 0;
  std::vector<std::vector<std::pair<Eigen::Index, double>>> columns;  // (row, value), rows strictly increasing

  void validate() const {
    require(static_cast<Eigen::Index>(columns.size()) == n_cols, errc::dimension_mismatch,
            "column list size disagrees with n_cols");
    for (Eigen::Index c = 0; c < n_cols; ++c) {
      Eigen::Index prev = -1;
      for (const auto& [r, v] : columns[c]) {
        require(r > prev, errc::duplicate_entry,
                "rows within a column must be strictly increasing (col " + std::to_string(c + 1) + ")");
        require(r >= 0 && r < n_rows, errc::index_out_of_bounds, "row index out of range");
        require(v != 0.0, errc::parse_error, "stored sparse values must be nonzero");
        prev = r;
      }
    }
  }
};

namespace detail {

inline double parse_cell(std::string_view cell, Eigen::Index row, Eigen::Index col) {
  // Trim ASCII whitespace; the dialect has no quoting.
  while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t' || cell.front() == '\r'))
    cell.remove_prefix(1);
  while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r'))
    cell.remove_suffix(1);
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    fail(errc::parse_error, "cell at data row " + std::to_string(row + 1) + ", column " +
                                std::to_string(col + 1) + " is not a finite number");
  }
  return value;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

inline std::string trimmed(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

}  // namespace detail

// Resolves selector names against the header; every name must match exactly
// one column and the two selectors must not intersect.
inline std::vector<Eigen::Index> resolve_columns(const std::vector<std::string>& header,
                                                 const std::vector<std::string>& names) {
  require(!names.empty(), errc::empty_selection, "column selector is empty");
  std::vector<Eigen::Index> idx;
  for (const auto& name : names) {
    auto it = std::find(header.begin(), header.end(), name);
    require(it != header.end(), errc::empty_selection, "no column named '" + name + "'");
    const Eigen::Index col = static_cast<Eigen::Index>(it - header.begin());
    require(std::find(idx.begin(), idx.end(), col) == idx.end(), errc::overlapping_selectors,
            "column '" + name + "' selected twice");
    idx.push_back(col);
  }
  return idx;
}

// CSV dialect: comma separator, first row is the header, '.' decimal point,
// no quoting. Missing or non-finite cells are hard errors.
inline PairedSample load_paired_csv(const std::string& path, const std::vector<std::string>& x_cols,
                                    const std::vector<std::string>& y_cols) {
  std::ifstream in(path);
  require(in.good(), errc::file_not_found, path);

  std::string line;
  require(static_cast<bool>(std::getline(in, line)), errc::parse_error, "missing header row in " + path);
  std::vector<std::string> header;
  for (auto f : detail::split_fields(line)) header.push_back(detail::trimmed(f));

  const auto xi = resolve_columns(header, x_cols);
  const auto yi = resolve_columns(header, y_cols);
  for (auto c : xi)
    require(std::find(yi.begin(), yi.end(), c) == yi.end(), errc::overlapping_selectors,
            "column '" + header[static_cast<std::size_t>(c)] + "' appears in both selectors");

  std::vector<std::vector<double>> rows;
  Eigen::Index row = 0;
  while (std::getline(in, line)) {
    if (line.empty() && in.eof()) break;
    const auto fields = detail::split_fields(line);
    require(fields.size() == header.size(), errc::parse_error,
            "data row " + std::to_string(row + 1) + " has " + std::to_string(fields.size()) +
                " fields, header has " + std::to_string(header.size()));
    std::vector<double> values(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c)
      values[c] = detail::parse_cell(fields[c], row, static_cast<Eigen::Index>(c));
    rows.push_back(std::move(values));
    ++row;
  }

  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  require(n >= 4, errc::sample_too_small, "need at least 4 data rows, got " + std::to_string(n));
  MatrixXd x(n, static_cast<Eigen::Index>(xi.size()));
  MatrixXd y(n, static_cast<Eigen::Index>(yi.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < xi.size(); ++j) x(i, static_cast<Eigen::Index>(j)) = rows[i][xi[j]];
    for (std::size_t j = 0; j < yi.size(); ++j) y(i, static_cast<Eigen::Index>(j)) = rows[i][yi[j]];
  }
  return PairedSample(std::move(x), std::move(y));
}

// Writes with 17 significant digits so a reload is bit-exact.
inline void write_paired_csv(const PairedSample& s, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), errc::file_not_found, "cannot open for writing: " + path);
  for (Eigen::Index j = 0; j < s.d1(); ++j) out << (j ? "," : "") << "x" << (j + 1);
  for (Eigen::Index j = 0; j < s.d2(); ++j) out << ",y" << (j + 1);
  out << "\n";
  char buf[40];
  for (Eigen::Index i = 0; i < s.n(); ++i) {
    for (Eigen::Index j = 0; j < s.d1(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", s.x(i, j));
      out << (j ? "," : "") << buf;
    }
    for (Eigen::Index j = 0; j < s.d2(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", s.y(i, j));
      out << "," << buf;
    }
    out << "\n";
  }
}

namespace detail {

// Coordinate text format: optional %/# comment lines, then "rows cols nnz",
// then nnz lines of "row col value" with 1-based indices.
inline SparseColumnMatrix load_sparse_triplets(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), errc::file_not_found, path);
  std::string line;
  long long nr = -1, nc = -1, nnz = -1;
  long long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trimmed(line);
    if (t.empty() || t[0] == '%' || t[0] == '#') continue;
    if (std::sscanf(t.c_str(), "%lld %lld %lld", &nr, &nc, &nnz) != 3)
      fail(errc::parse_error, path + ":" + std::to_string(line_no) + ": expected 'rows cols nnz'");
    break;
  }
  require(nr >= 1 && nc >= 1 && nnz >= 0, errc::parse_error, path + ": bad dimension header");

  SparseColumnMatrix m;
  m.n_rows = static_cast<Eigen::Index>(nr);
  m.n_cols = static_cast<Eigen::Index>(nc);
  m.columns.assign(static_cast<std::size_t>(nc), {});

  long long seen = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trimmed(line);
    if (t.empty() || t[0] == '%' || t[0] == '#') continue;
    long long r = 0, c = 0;
    double v = 0.0;
    if (std::sscanf(t.c_str(), "%lld %lld %lf", &r, &c, &v) != 3)
      fail(errc::parse_error, path + ":" + std::to_string(line_no) + ": expected 'row col value'");
    require(r >= 1 && r <= nr && c >= 1 && c <= nc, errc::index_out_of_bounds,
            path + ":" + std::to_string(line_no) + ": index (" + std::to_string(r) + "," +
                std::to_string(c) + ") outside declared " + std::to_string(nr) + "x" + std::to_string(nc));
    require(std::isfinite(v), errc::parse_error, path + ":" + std::to_string(line_no) + ": non-finite value");
    if (v != 0.0) m.columns[static_cast<std::size_t>(c - 1)].emplace_back(static_cast<Eigen::Index>(r - 1), v);
    ++seen;
  }
  require(seen == nnz, errc::parse_error,
          path + ": header declares " + std::to_string(nnz) + " entries, found " + std::to_string(seen));
  for (auto& col : m.columns) {
    std::sort(col.begin(), col.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t k = 1; k < col.size(); ++k)
      require(col[k].first != col[k - 1].first, errc::duplicate_entry,
              path + ": duplicate entry at row " + std::to_string(col[k].first + 1));
  }
  m.validate();
  return m;
}

}  // namespace detail

// Sparse-backed view with the same row-access surface as PairedSample.
// Row gathers go through a row-major index built once at load.
class SparsePairedSample {
 public:
  SparsePairedSample(SparseColumnMatrix x, SparseColumnMatrix y)
      : x_(std::move(x)), y_(std::move(y)) {
    require(x_.n_rows == y_.n_rows, errc::row_count_mismatch,
            "x has " + std::to_string(x_.n_rows) + " rows, y has " + std::to_string(y_.n_rows));
    require(x_.n_rows >= 4, errc::sample_too_small, "need at least 4 rows");
    build_row_index(x_, x_rows_);
    build_row_index(y_, y_rows_);
  }

  Eigen::Index n() const { return x_.n_rows; }
  Eigen::Index d1() const { return x_.n_cols; }
  Eigen::Index d2() const { return y_.n_cols; }

  void write_x_row(Eigen::Index i, double* dst) const {
    std::fill(dst, dst + x_.n_cols, 0.0);
    for (const auto& [c, v] : x_rows_[static_cast<std::size_t>(i)]) dst[c] = v;
  }
  void write_y_row(Eigen::Index i, double* dst) const {
    std::fill(dst, dst + y_.n_cols, 0.0);
    for (const auto& [c, v] : y_rows_[static_cast<std::size_t>(i)]) dst[c] = v;
  }

  PairedSample to_dense() const {
    MatrixXd x = MatrixXd::Zero(n(), d1());
    MatrixXd y = MatrixXd::Zero(n(), d2());
    for (Eigen::Index i = 0; i < n(); ++i) {
      for (const auto& [c, v] : x_rows_[static_cast<std::size_t>(i)]) x(i, c) = v;
      for (const auto& [c, v] : y_rows_[static_cast<std::size_t>(i)]) y(i, c) = v;
    }
    return PairedSample(std::move(x), std::move(y));
  }

 private:
  static void build_row_index(const SparseColumnMatrix& m,
                              std::vector<std::vector<std::pair<Eigen::Index, double>>>& rows) {
    rows.assign(static_cast<std::size_t>(m.n_rows), {});
    for (Eigen::Index c = 0; c < m.n_cols; ++c)
      for (const auto& [r, v] : m.columns[static_cast<std::size_t>(c)])
        rows[static_cast<std::size_t>(r)].emplace_back(c, v);
  }

  SparseColumnMatrix x_, y_;
  std::vector<std::vector<std::pair<Eigen::Index, double>>> x_rows_, y_rows_;
};

inline SparsePairedSample load_sparse_market(const std::string& path_x, const std::string& path_y) {
  return SparsePairedSample(detail::load_sparse_triplets(path_x), detail::load_sparse_triplets(path_y));
}

// Per-column means and standard deviations; std 0 marks a constant column.
struct StandardizationStats {
  VectorXd x_mean, x_std, y_mean, y_std;

  nlohmann::json to_json() const {
    auto vec = [](const VectorXd& v) {
      return std::vector<double>(v.data(), v.data() + v.size());
    };
    return {{"x_mean", vec(x_mean)}, {"x_std", vec(x_std)}, {"y_mean", vec(y_mean)}, {"y_std", vec(y_std)}};
  }
};

namespace detail {

inline void standardize_block(MatrixXd& block, VectorXd& mean, VectorXd& stdev) {
  const Eigen::Index n = block.rows();
  mean.resize(block.cols());
  stdev.resize(block.cols());
  for (Eigen::Index j = 0; j < block.cols(); ++j) {
    const double mn = block.col(j).minCoeff();
    const double mx = block.col(j).maxCoeff();
    const double mu = block.col(j).mean();
    mean[j] = mu;
    if (mn == mx) {
      stdev[j] = 0.0;  // constant column: flagged, passed through unchanged
      continue;
    }
    const double ss = (block.col(j).array() - mu).square().sum();
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    stdev[j] = sd;
    block.col(j) = (block.col(j).array() - mu) / sd;
  }
}

}  // namespace detail

// Centers and scales each non-constant column to sample mean 0, sample std 1.
// Constant columns are left untouched and flagged by std = 0 in the stats.
inline std::pair<PairedSample, StandardizationStats> standardize(const PairedSample& s) {
  require(s.n() >= 2, errc::sample_too_small, "standardize needs n >= 2");
  MatrixXd x = s.x, y = s.y;
  StandardizationStats st;
  detail::standardize_block(x, st.x_mean, st.x_std);
  detail::standardize_block(y, st.y_mean, st.y_std);
  return {PairedSample(std::move(x), std::move(y)), std::move(st)};
}

}  // namespace cpc
