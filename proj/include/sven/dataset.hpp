#pragma once

// Training data for the regression y = mu0 + Z mu + e.
//
// Covariates are standardized as X = (Z - 1 zbar^T) D^{-1} with D_jj the
// POPULATION standard deviation of column j (divisor n, not n - 1), so every
// standardized column has X_j^T X_j = n exactly. X itself is never formed;
// kernels consume Z together with zbar and 1/D.

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "sven/error.hpp"

namespace sven {

using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Vector = Eigen::VectorXd;

template <class M>
inline constexpr bool is_sparse_v = std::is_base_of_v<Eigen::SparseMatrixBase<M>, M>;

template <class Storage>
class Dataset {
  static_assert(std::is_same_v<Storage, DenseMatrix> || std::is_same_v<Storage, SparseMatrix>,
                "Dataset storage must be a dense or column-compressed Eigen matrix");

 public:
  using storage_type = Storage;

  /// Takes ownership of raw covariates and response and computes every
  /// precompute the scoring kernels reuse. `names` may be empty, in which case
  /// columns are named by their 1-based position. `column_ids` maps columns to
  /// 0-based positions in an upstream file when columns were filtered.
  Dataset(Storage z, Vector y, std::vector<std::string> names = {},
          std::vector<int> column_ids = {})
      : z_(std::move(z)), y_(std::move(y)), names_(std::move(names)), ids_(std::move(column_ids)) {
    const auto n = z_.rows();
    const auto p = z_.cols();
    if (y_.size() != n)
      throw FormatError("response length " + std::to_string(y_.size()) +
                        " does not match covariate rows " + std::to_string(n));
    if (n < 2) throw FormatError("need at least 2 observations");
    if (p < 1) throw FormatError("need at least 1 covariate column");
    if (!y_.allFinite()) throw FormatError("response contains non-finite values");
    if (names_.empty()) {
      names_.reserve(p);
      for (Eigen::Index j = 0; j < p; ++j) names_.push_back(std::to_string(j + 1));
    }
    if (static_cast<Eigen::Index>(names_.size()) != p)
      throw FormatError("column name count does not match covariate count");
    if (ids_.empty()) {
      ids_.resize(p);
      for (Eigen::Index j = 0; j < p; ++j) ids_[j] = static_cast<int>(j);
    }

    const double nd = static_cast<double>(n);
    y_bar_ = y_.mean();
    y_tilde_ = y_.array() - y_bar_;
    yty_ = y_tilde_.squaredNorm();

    z_bar_.resize(p);
    d_inv_.resize(p);
    zeta_.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) {
      double sum = 0.0;
      double ss = 0.0;
      if constexpr (is_sparse_v<Storage>) {
        Eigen::Index nnz = 0;
        for (typename Storage::InnerIterator it(z_, j); it; ++it, ++nnz) sum += it.value();
        const double mean = sum / nd;
        for (typename Storage::InnerIterator it(z_, j); it; ++it)
          ss += (it.value() - mean) * (it.value() - mean);
        ss += static_cast<double>(n - nnz) * mean * mean;
        z_bar_[j] = mean;
      } else {
        if (!z_.col(j).allFinite()) throw FormatError("column " + names_[j] + " has non-finite values");
        const double mean = z_.col(j).sum() / nd;
        ss = (z_.col(j).array() - mean).square().sum();
        z_bar_[j] = mean;
      }
      const double sd = std::sqrt(ss / nd);
      // Relative test so that constant columns with rounding noise are caught.
      if (!(sd > 1e-12 * std::max(1.0, std::abs(z_bar_[j]))) || !std::isfinite(sd))
        throw DegenerateColumnError(names_[j]);
      d_inv_[j] = 1.0 / sd;
      zeta_[j] = d_inv_[j] * z_.col(j).dot(y_tilde_);
    }
  }

  Eigen::Index n() const noexcept { return z_.rows(); }
  Eigen::Index p() const noexcept { return z_.cols(); }

  const Storage& z() const noexcept { return z_; }
  const Vector& y() const noexcept { return y_; }
  const Vector& z_bar() const noexcept { return z_bar_; }
  const Vector& d_inv() const noexcept { return d_inv_; }
  const Vector& y_tilde() const noexcept { return y_tilde_; }
  double y_bar() const noexcept { return y_bar_; }
  double yty() const noexcept { return yty_; }
  const Vector& zeta() const noexcept { return zeta_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::vector<int>& column_ids() const noexcept { return ids_; }

  /// (Z_j - zbar_j 1) / D_jj.
  Vector standardized_column(Eigen::Index j) const {
    check_index(j);
    Vector x = z_.col(j);
    x.array() -= z_bar_[j];
    x *= d_inv_[j];
    return x;
  }

  /// x_j^T a for the standardized column j.
  double standardized_dot(Eigen::Index j, const Vector& a) const {
    check_index(j);
    return d_inv_[j] * (z_.col(j).dot(a) - z_bar_[j] * a.sum());
  }

  /// Dense n x |cols| block of standardized columns in the given order.
  DenseMatrix standardized_columns(const std::vector<int>& cols) const {
    DenseMatrix x(n(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) x.col(static_cast<Eigen::Index>(c)) = standardized_column(cols[c]);
    return x;
  }

  Eigen::Index nonzeros() const {
    if constexpr (is_sparse_v<Storage>)
      return z_.nonZeros();
    else
      return (z_.array() != 0.0).count();
  }

 private:
  void check_index(Eigen::Index j) const {
    if (j < 0 || j >= p())
      throw std::out_of_range("column index " + std::to_string(j + 1) + " outside 1.." +
                              std::to_string(p()));
  }

  Storage z_;
  Vector y_;
  std::vector<std::string> names_;
  std::vector<int> ids_;
  Vector z_bar_;
  Vector d_inv_;
  Vector y_tilde_;
  double y_bar_ = 0.0;
  double yty_ = 0.0;
  Vector zeta_;
};

using DenseDataset = Dataset<DenseMatrix>;
using SparseDataset = Dataset<SparseMatrix>;

template <class Storage>
Vector standardized_column(const Dataset<Storage>& ds, Eigen::Index j) {
  return ds.standardized_column(j);
}

// ---------------------------------------------------------------------------
// Optional marker filters (off unless requested)
// ---------------------------------------------------------------------------

struct ColumnFilter {
  bool drop_duplicates = false;
  /// Minimum minor-allele frequency for 0/1/2 or 0/1 coded columns; columns
  /// with other codings pass untouched. Zero disables the filter.
  double min_maf = 0.0;
};

namespace detail {

template <class Storage>
std::vector<double> column_values(const Storage& z, Eigen::Index j) {
  Vector c = z.col(j);
  return {c.data(), c.data() + c.size()};
}

template <class Storage>
double minor_allele_frequency(const Storage& z, Eigen::Index j) {
  Vector c = z.col(j);
  double max_code = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const double v = c[i];
    if (v != 0.0 && v != 1.0 && v != 2.0) return 0.5;  // not a genotype column
    max_code = std::max(max_code, v);
  }
  const double ploidy = max_code > 1.0 ? 2.0 : 1.0;
  const double f = c.sum() / (ploidy * static_cast<double>(c.size()));
  return std::min(f, 1.0 - f);
}

}  // namespace detail

/// Returns the 0-based raw column positions that survive the filter. Zero
/// variance columns are dropped too, since a filtered load is an explicit
/// request to clean the marker set.
template <class Storage>
std::vector<int> surviving_columns(const Storage& z, const ColumnFilter& filter) {
  std::vector<int> keep;
  std::map<std::vector<double>, int> seen;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    auto vals = detail::column_values(z, j);
    const auto [mn, mx] = std::minmax_element(vals.begin(), vals.end());
    if (*mn == *mx) continue;
    if (filter.min_maf > 0.0 && detail::minor_allele_frequency(z, j) < filter.min_maf) continue;
    if (filter.drop_duplicates && !seen.emplace(std::move(vals), static_cast<int>(j)).second) continue;
    keep.push_back(static_cast<int>(j));
  }
  return keep;
}

/// Restricts raw covariates to the filtered columns.
template <class Storage>
Storage select_columns(const Storage& z, const std::vector<int>& keep) {
  Storage out;
  if constexpr (is_sparse_v<Storage>) {
    std::vector<Eigen::Triplet<double, int>> trips;
    for (std::size_t c = 0; c < keep.size(); ++c)
      for (typename Storage::InnerIterator it(z, keep[c]); it; ++it)
        trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(c), it.value());
    out.resize(z.rows(), static_cast<Eigen::Index>(keep.size()));
    out.setFromTriplets(trips.begin(), trips.end());
    out.makeCompressed();
  } else {
    out.resize(z.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = z.col(keep[c]);
  }
  return out;
}

/// Builds a dataset from raw columns after the optional marker filters. Each
/// column keeps its original position for reporting.
template <class Storage>
Dataset<Storage> make_filtered_dataset(Storage z, Vector y, std::vector<std::string> names,
                                       const std::optional<ColumnFilter>& filter) {
  if (!filter) return Dataset<Storage>(std::move(z), std::move(y), std::move(names));
  const auto keep = surviving_columns(z, *filter);
  if (keep.empty()) throw FormatError("no columns survive the marker filters");
  std::vector<std::string> kept_names;
  for (int j : keep)
    kept_names.push_back(names.empty() ? std::to_string(j + 1) : names[static_cast<std::size_t>(j)]);
  return Dataset<Storage>(select_columns(z, keep), std::move(y), std::move(kept_names), keep);
}

// ---------------------------------------------------------------------------
// Text input
// ---------------------------------------------------------------------------

/// A numeric table read from delimited text.
struct Table {
  std::vector<std::string> header;  // empty when the file has no header row
  DenseMatrix values;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  if (delim == ' ') {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
      if (i >= line.size()) break;
      const std::size_t start = i;
      while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
      out.push_back(line.substr(start, i - start));
    }
    return out;
  }
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(delim, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline bool is_missing(std::string_view s) {
  s = trim(s);
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" || s == "." || s == "?";
}

inline char detect_delimiter(std::string_view line) {
  if (line.find('\t') != std::string_view::npos) return '\t';
  if (line.find(',') != std::string_view::npos) return ',';
  if (line.find(';') != std::string_view::npos) return ';';
  return ' ';
}

}  // namespace detail

/// Reads a CSV/TSV (delimiter detected from the first line). The first row is
/// a header when any of its fields is non-numeric.
inline Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (detail::trim(line).empty()) continue;
    lines.push_back(std::move(line));
  }
  if (lines.empty()) throw FormatError(path + ": empty file");
  const char delim = detail::detect_delimiter(lines.front());

  Table t;
  std::size_t first = 0;
  {
    auto fields = detail::split(lines.front(), delim);
    bool header = false;
    for (auto f : fields)
      if (!detail::is_missing(f) && !detail::parse_double(f)) header = true;
    if (header) {
      for (auto f : fields) t.header.emplace_back(detail::trim(f));
      first = 1;
    }
  }
  const std::size_t rows = lines.size() - first;
  const std::size_t cols = detail::split(lines[first < lines.size() ? first : 0], delim).size();
  if (!t.header.empty() && t.header.size() != cols && rows > 0)
    throw FormatError(path + ": header has " + std::to_string(t.header.size()) + " fields but row 1 has " +
                      std::to_string(cols));
  t.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    auto fields = detail::split(lines[first + r], delim);
    if (fields.size() != cols)
      throw FormatError(path + ": row " + std::to_string(r + 1) + " has " + std::to_string(fields.size()) +
                        " fields, expected " + std::to_string(cols));
    for (std::size_t c = 0; c < cols; ++c) {
      if (detail::is_missing(fields[c]))
        throw FormatError(path + ": missing value at row " + std::to_string(r + 1) + ", column " +
                          std::to_string(c + 1));
      auto v = detail::parse_double(fields[c]);
      if (!v || !std::isfinite(*v))
        throw FormatError(path + ": cannot parse '" + std::string(fields[c]) + "' at row " +
                          std::to_string(r + 1) + ", column " + std::to_string(c + 1));
      t.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = *v;
    }
  }
  return t;
}

/// Response column: a header name, or a 1-based position.
using ResponseColumn = std::variant<std::string, int>;

/// Parses the CLI form: a name, or an integer (1-based) when no header field
/// carries that name.
inline ResponseColumn parse_response_column(const std::string& s) {
  int idx = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), idx);
  if (ec == std::errc() && ptr == s.data() + s.size()) return idx;
  return s;
}

inline std::size_t resolve_response(const Table& t, const ResponseColumn& response, const std::string& path) {
  const auto cols = static_cast<std::size_t>(t.values.cols());
  if (const auto* name = std::get_if<std::string>(&response)) {
    auto it = std::find(t.header.begin(), t.header.end(), *name);
    if (it == t.header.end()) throw FormatError(path + ": no response column named '" + *name + "'");
    return static_cast<std::size_t>(it - t.header.begin());
  }
  const int idx = std::get<int>(response);
  // A numeric header name takes precedence over the positional meaning.
  auto it = std::find(t.header.begin(), t.header.end(), std::to_string(idx));
  if (it != t.header.end()) return static_cast<std::size_t>(it - t.header.begin());
  if (idx < 1 || static_cast<std::size_t>(idx) > cols)
    throw FormatError(path + ": response index " + std::to_string(idx) + " outside 1.." + std::to_string(cols));
  return static_cast<std::size_t>(idx - 1);
}

/// Dense delimited input; every column other than the response is a covariate.
inline DenseDataset load_dense(const std::string& path, const ResponseColumn& response,
                               const std::optional<ColumnFilter>& filter = std::nullopt) {
  Table t = read_table(path);
  if (t.values.rows() < 2) throw FormatError(path + ": need at least 2 data rows");
  if (t.values.cols() < 2) throw FormatError(path + ": need a response and at least 1 covariate column");
  const std::size_t ry = resolve_response(t, response, path);
  const auto n = t.values.rows();
  const auto p = t.values.cols() - 1;
  DenseMatrix z(n, p);
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(p));
  Eigen::Index out = 0;
  for (Eigen::Index c = 0; c < t.values.cols(); ++c) {
    if (static_cast<std::size_t>(c) == ry) continue;
    z.col(out++) = t.values.col(c);
    names.push_back(t.header.empty() ? std::to_string(c + 1) : t.header[static_cast<std::size_t>(c)]);
  }
  Vector y = t.values.col(static_cast<Eigen::Index>(ry));
  return make_filtered_dataset(std::move(z), std::move(y), std::move(names), filter);
}

/// Triplet text "row col value" (1-based) after a header line "n p nnz".
inline SparseMatrix read_triplets(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      auto s = detail::trim(line);
      if (s.empty() || s.front() == '%' || s.front() == '#') continue;
      return true;
    }
    return false;
  };
  if (!next_line()) throw FormatError(path + ": missing header line 'n p nnz'");
  long long n = 0, p = 0, nnz = 0;
  {
    auto f = detail::split(line, ' ');
    auto a = f.size() == 3 ? detail::parse_double(f[0]) : std::nullopt;
    auto b = f.size() == 3 ? detail::parse_double(f[1]) : std::nullopt;
    auto c = f.size() == 3 ? detail::parse_double(f[2]) : std::nullopt;
    if (!a || !b || !c || *a < 1 || *b < 1 || *c < 0)
      throw FormatError(path + ": line " + std::to_string(lineno) + ": expected header 'n p nnz'");
    n = static_cast<long long>(*a);
    p = static_cast<long long>(*b);
    nnz = static_cast<long long>(*c);
  }
  std::vector<Eigen::Triplet<double, int>> trips;
  trips.reserve(static_cast<std::size_t>(nnz));
  std::set<std::pair<long long, long long>> seen;
  while (next_line()) {
    auto f = detail::split(line, ' ');
    if (f.size() != 3) throw FormatError(path + ": line " + std::to_string(lineno) + ": expected 'row col value'");
    auto r = detail::parse_double(f[0]);
    auto c = detail::parse_double(f[1]);
    auto v = detail::parse_double(f[2]);
    if (!r || !c || !v || !std::isfinite(*v) || *r != std::floor(*r) || *c != std::floor(*c))
      throw FormatError(path + ": line " + std::to_string(lineno) + ": cannot parse entry");
    const auto ri = static_cast<long long>(*r);
    const auto ci = static_cast<long long>(*c);
    if (ri < 1 || ri > n || ci < 1 || ci > p)
      throw FormatError(path + ": line " + std::to_string(lineno) + ": index (" + std::to_string(ri) + "," +
                        std::to_string(ci) + ") outside " + std::to_string(n) + "x" + std::to_string(p));
    if (!seen.emplace(ri, ci).second)
      throw FormatError(path + ": line " + std::to_string(lineno) + ": duplicate entry (" + std::to_string(ri) +
                        "," + std::to_string(ci) + ")");
    trips.emplace_back(static_cast<int>(ri - 1), static_cast<int>(ci - 1), *v);
  }
  if (static_cast<long long>(trips.size()) != nnz)
    throw FormatError(path + ": header declares " + std::to_string(nnz) + " entries, found " +
                      std::to_string(trips.size()));
  SparseMatrix z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  z.setFromTriplets(trips.begin(), trips.end());
  z.makeCompressed();
  return z;
}

inline Vector read_vector(const std::string& path) {
  Table t = read_table(path);
  if (t.values.cols() != 1) throw FormatError(path + ": expected one value per line");
  return t.values.col(0);
}

inline SparseDataset load_sparse(const std::string& path, const std::string& y_path,
                                 const std::optional<ColumnFilter>& filter = std::nullopt) {
  SparseMatrix z = read_triplets(path);
  Vector y = read_vector(y_path);
  if (y.size() != z.rows())
    throw FormatError("dimension mismatch: " + path + " has " + std::to_string(z.rows()) + " rows but " + y_path +
                      " has " + std::to_string(y.size()) + " values");
  return make_filtered_dataset(std::move(z), std::move(y), {}, filter);
}

}  // namespace sven
