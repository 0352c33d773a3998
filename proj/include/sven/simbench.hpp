#pragma once

// Simulation designs with known truth and selection metrics, for replicating
// the high-dimensional benchmarks at desk scale.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sven/dataset.hpp"
#include "sven/error.hpp"
#include "sven/posterior.hpp"
#include "sven/random.hpp"

namespace sven {

enum class DesignKind { iid, compound_symmetry, ar1, factor, group, extreme };

inline DesignKind parse_design_kind(const std::string& s) {
  if (s == "iid" || s == "independent") return DesignKind::iid;
  if (s == "cs" || s == "compound_symmetry") return DesignKind::compound_symmetry;
  if (s == "ar1") return DesignKind::ar1;
  if (s == "factor") return DesignKind::factor;
  if (s == "group") return DesignKind::group;
  if (s == "extreme") return DesignKind::extreme;
  throw PreconditionError("unknown design '" + s + "' (expected iid, cs, ar1, factor, group, extreme)");
}

inline const char* to_string(DesignKind k) {
  switch (k) {
    case DesignKind::iid: return "iid";
    case DesignKind::compound_symmetry: return "cs";
    case DesignKind::ar1: return "ar1";
    case DesignKind::factor: return "factor";
    case DesignKind::group: return "group";
    case DesignKind::extreme: return "extreme";
  }
  return "?";
}

/// Sparse coefficient list, 0-based column -> value.
using SparseBeta = std::vector<std::pair<int, double>>;

inline SparseBeta default_beta(DesignKind kind) {
  switch (kind) {
    case DesignKind::iid: return {{0, 0.5}, {1, 0.75}, {2, 1.0}, {3, 1.25}, {4, 1.5}};
    case DesignKind::compound_symmetry:
    case DesignKind::factor:
    case DesignKind::extreme: return {{0, 5.0}, {1, 5.0}, {2, 5.0}, {3, 5.0}, {4, 5.0}};
    case DesignKind::ar1: return {{0, 3.0}, {3, 1.5}, {6, 2.0}};
    case DesignKind::group: {
      SparseBeta b;
      for (int j = 0; j < 15; ++j) b.emplace_back(j, 3.0);
      return b;
    }
  }
  return {};
}

struct DesignSpec {
  DesignKind kind = DesignKind::iid;
  Eigen::Index n = 400;
  Eigen::Index p = 20000;
  double rho = 0.6;
  int k_factors = 2;
  double r_squared = 0.9;
  std::optional<SparseBeta> beta;  // design default when empty
  std::uint64_t seed = 1;

  SparseBeta coefficients() const { return beta ? *beta : default_beta(kind); }

  void validate() const {
    if (n < 4) throw PreconditionError("design needs n >= 4");
    if (p < 3) throw PreconditionError("design needs p >= 3");
    if (!(rho >= 0.0 && rho < 1.0)) throw PreconditionError("rho must lie in [0, 1)");
    if (k_factors < 1) throw PreconditionError("factor count must be >= 1");
    if (!(r_squared > 0.0 && r_squared < 1.0)) throw PreconditionError("R^2 must lie in (0, 1)");
    if (kind == DesignKind::group && p < 15) throw PreconditionError("group design needs p >= 15");
    if (kind == DesignKind::extreme && p < 6) throw PreconditionError("extreme design needs p >= 6");
    for (auto [j, b] : coefficients())
      if (j < 0 || j >= p) throw PreconditionError("coefficient index " + std::to_string(j + 1) + " exceeds p");
  }
};

struct SimulatedData {
  DenseMatrix z_train;
  DenseMatrix z_test;
  Vector y_train;
  Vector y_test;
  Vector beta_full;
  Model true_support;
  double sigma2 = 0.0;
  DenseMatrix loadings;  // p x K for the factor design, empty otherwise
};

/// Entry (i, j) of the design's population covariance. `loadings` is only
/// consulted for the factor design.
inline double design_covariance(const DesignSpec& spec, const DenseMatrix& loadings, int i, int j) {
  const bool same = i == j;
  switch (spec.kind) {
    case DesignKind::iid: return same ? 1.0 : 0.0;
    case DesignKind::compound_symmetry: return same ? 1.0 : spec.rho;
    case DesignKind::ar1: return std::pow(spec.rho, std::abs(i - j));
    case DesignKind::factor: return loadings.row(i).dot(loadings.row(j)) + (same ? 1.0 : 0.0);
    case DesignKind::group: {
      const int gi = i < 15 ? i / 5 : -1 - i;
      const int gj = j < 15 ? j / 5 : -1 - j;
      if (gi != gj) return 0.0;
      if (i >= 15) return 1.0;
      return same ? 1.01 : 1.0;
    }
    case DesignKind::extreme: {
      if (i < 5 && j < 5) return same ? 1.0 : 0.0;
      if (i >= 5 && j >= 5) return same ? 1.5 : 1.25;
      return 1.0 / (2.0 * std::sqrt(2.0));
    }
  }
  return 0.0;
}

namespace detail {

inline DenseMatrix standard_normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  DenseMatrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = standard_normal(rng);
  return m;
}

inline DenseMatrix draw_design(const DesignSpec& spec, const DenseMatrix& loadings, Rng& rng) {
  const auto n = spec.n;
  const auto p = spec.p;
  switch (spec.kind) {
    case DesignKind::iid: return standard_normal_matrix(n, p, rng);
    case DesignKind::compound_symmetry: {
      // Shared row effect: X = sqrt(1 - rho) E + sqrt(rho) c 1^T.
      DenseMatrix x = standard_normal_matrix(n, p, rng) * std::sqrt(1.0 - spec.rho);
      const Vector common = standard_normal_matrix(n, 1, rng).col(0) * std::sqrt(spec.rho);
      x.colwise() += common;
      return x;
    }
    case DesignKind::ar1: {
      // X_0 auxiliary, X_j = rho X_{j-1} + sqrt(1 - rho^2) z_j.
      DenseMatrix x(n, p);
      Vector prev = standard_normal_matrix(n, 1, rng).col(0);
      const double s = std::sqrt(1.0 - spec.rho * spec.rho);
      for (Eigen::Index j = 0; j < p; ++j) {
        Vector zj = standard_normal_matrix(n, 1, rng).col(0);
        x.col(j) = spec.rho * prev + s * zj;
        prev = x.col(j);
      }
      return x;
    }
    case DesignKind::factor: {
      const DenseMatrix f = standard_normal_matrix(n, loadings.cols(), rng);
      return f * loadings.transpose() + standard_normal_matrix(n, p, rng);
    }
    case DesignKind::group: {
      DenseMatrix x = standard_normal_matrix(n, p, rng);
      for (int g = 0; g < 3; ++g) {
        const Vector latent = standard_normal_matrix(n, 1, rng).col(0);
        for (int m = 0; m < 5; ++m) x.col(5 * g + m) = latent + 0.1 * x.col(5 * g + m);
      }
      return x;
    }
    case DesignKind::extreme: {
      DenseMatrix z = standard_normal_matrix(n, p, rng);
      const DenseMatrix w = standard_normal_matrix(n, 5, rng);
      const Vector wsum = w.rowwise().sum();
      DenseMatrix x(n, p);
      for (Eigen::Index j = 0; j < 5; ++j) x.col(j) = (z.col(j) + w.col(j)) / std::sqrt(2.0);
      for (Eigen::Index j = 5; j < p; ++j) x.col(j) = (z.col(j) + wsum) / 2.0;
      return x;
    }
  }
  throw PreconditionError("unknown design");
}

}  // namespace detail

/// Noise variance giving theoretical R^2: sigma^2 = b^T Sigma b (1 - R^2) / R^2.
inline double noise_variance(const DesignSpec& spec, const DenseMatrix& loadings) {
  const auto beta = spec.coefficients();
  double signal = 0.0;
  for (auto [i, bi] : beta)
    for (auto [j, bj] : beta) signal += bi * bj * design_covariance(spec, loadings, i, j);
  return signal * (1.0 - spec.r_squared) / spec.r_squared;
}

/// Draws training and test sets of n rows each from the design.
inline SimulatedData generate(const DesignSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, {0x5157ULL}));
  SimulatedData d;
  if (spec.kind == DesignKind::factor) d.loadings = detail::standard_normal_matrix(spec.p, spec.k_factors, rng);
  d.beta_full = Vector::Zero(spec.p);
  for (auto [j, b] : spec.coefficients()) d.beta_full[j] = b;
  for (Eigen::Index j = 0; j < spec.p; ++j)
    if (d.beta_full[j] != 0.0) d.true_support.push_back(static_cast<int>(j));
  d.sigma2 = noise_variance(spec, d.loadings);
  const double sd = std::sqrt(d.sigma2);
  auto response = [&](const DenseMatrix& z) {
    Vector y = z * d.beta_full;
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += sd * standard_normal(rng);
    return y;
  };
  d.z_train = detail::draw_design(spec, d.loadings, rng);
  d.y_train = response(d.z_train);
  d.z_test = detail::draw_design(spec, d.loadings, rng);
  d.y_test = response(d.z_test);
  return d;
}

struct SelectionMetrics {
  double mspe = 0.0;
  double mse_beta = 0.0;
  double coverage = 0.0;  // 1 when the true support is contained in the selection
  double model_size = 0.0;
  double fdr = 0.0;
  double fnr = 0.0;
  double jaccard = 0.0;
};

/// A fitted model on the original covariate scale: y ~ intercept + Z coef.
struct OriginalScaleFit {
  Model selected;
  double intercept = 0.0;
  Vector coef;  // full length p
};

/// Ridge estimate of `gamma` back-transformed to the original scale:
/// mu = D^{-1} beta_tilde, mu0 = ybar - zbar^T mu.
template <class Storage>
OriginalScaleFit ridge_fit(const Dataset<Storage>& ds, const Hyperparams& hp, const Model& gamma) {
  OriginalScaleFit f;
  f.selected = gamma;
  f.coef = Vector::Zero(ds.p());
  f.intercept = ds.y_bar();
  if (gamma.empty()) return f;
  const ModelState st = score_model(ds, hp, gamma);
  const Vector b = ridge_coefficients(st);
  for (std::size_t i = 0; i < st.order.size(); ++i) {
    const int j = st.order[i];
    f.coef[j] = ds.d_inv()[j] * b[static_cast<Eigen::Index>(i)];
    f.intercept -= ds.z_bar()[j] * f.coef[j];
  }
  return f;
}

inline SelectionMetrics evaluate(const OriginalScaleFit& fit, const Vector& beta_full, const Model& truth,
                                 const DenseMatrix& z_test, const Vector& y_test) {
  if (fit.coef.size() != beta_full.size() || z_test.cols() != beta_full.size() || z_test.rows() != y_test.size())
    throw PreconditionError("inconsistent dimensions in evaluate");
  SelectionMetrics m;
  const Vector pred = (z_test * fit.coef).array() + fit.intercept;
  m.mspe = (y_test - pred).squaredNorm() / static_cast<double>(y_test.size());
  m.mse_beta = (fit.coef - beta_full).squaredNorm() / static_cast<double>(beta_full.size());

  const std::set<int> sel(fit.selected.begin(), fit.selected.end());
  const std::set<int> tru(truth.begin(), truth.end());
  std::size_t inter = 0;
  for (int j : sel) inter += tru.count(j);
  const std::size_t uni = sel.size() + tru.size() - inter;
  m.coverage = inter == tru.size() ? 1.0 : 0.0;
  m.model_size = static_cast<double>(sel.size());
  m.fdr = static_cast<double>(sel.size() - inter) / static_cast<double>(std::max<std::size_t>(sel.size(), 1));
  m.fnr = tru.empty() ? 0.0 : static_cast<double>(tru.size() - inter) / static_cast<double>(tru.size());
  m.jaccard = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
  return m;
}

struct DefaultHyper {
  Hyperparams primary;
  std::optional<Hyperparams> alternative;  // group design only
};

/// w = sqrt(n) / p and lambda = n / p^2; the group design also offers
/// (lambda, w) = (200, 0.02) for its strongly correlated blocks.
inline DefaultHyper default_hyperparams(Eigen::Index n, Eigen::Index p,
                                        std::optional<DesignKind> kind = std::nullopt) {
  const double nd = static_cast<double>(n);
  const double pd = static_cast<double>(p);
  const double w = std::sqrt(nd) / pd;
  if (!(w < 1.0))
    throw PreconditionError("default w = sqrt(n)/p is not below 1 for n=" + std::to_string(n) + ", p=" +
                            std::to_string(p) + "; set w explicitly");
  DefaultHyper h{Hyperparams(nd / (pd * pd), w), std::nullopt};
  if (kind == DesignKind::group) h.alternative = Hyperparams(200.0, 0.02);
  return h;
}

/// Design spec from "key = value" lines (# comments allowed). Keys: design,
/// n, p, rho, k_factors, r_squared, seed, beta ("1:0.5,2:0.75", 1-based).
inline DesignSpec parse_design_config(std::istream& in, DesignSpec spec = {}) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    auto t = std::string(detail::trim(line));
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw FormatError("config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key(detail::trim(std::string_view(t).substr(0, eq)));
    const std::string val(detail::trim(std::string_view(t).substr(eq + 1)));
    auto num = [&]() {
      auto v = detail::parse_double(val);
      if (!v) throw FormatError("config line " + std::to_string(lineno) + ": '" + val + "' is not a number");
      return *v;
    };
    if (key == "design") spec.kind = parse_design_kind(val);
    else if (key == "n") spec.n = static_cast<Eigen::Index>(num());
    else if (key == "p") spec.p = static_cast<Eigen::Index>(num());
    else if (key == "rho") spec.rho = num();
    else if (key == "k_factors") spec.k_factors = static_cast<int>(num());
    else if (key == "r_squared") spec.r_squared = num();
    else if (key == "seed") spec.seed = static_cast<std::uint64_t>(num());
    else if (key == "beta") {
      SparseBeta b;
      for (auto item : detail::split(val, ',')) {
        const auto colon = item.find(':');
        auto j = colon == std::string_view::npos ? std::nullopt : detail::parse_double(item.substr(0, colon));
        auto v = colon == std::string_view::npos ? std::nullopt : detail::parse_double(item.substr(colon + 1));
        if (!j || !v) throw FormatError("config line " + std::to_string(lineno) + ": beta entries are index:value");
        b.emplace_back(static_cast<int>(*j) - 1, *v);
      }
      spec.beta = b;
    } else
      throw FormatError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  return spec;
}

}  // namespace sven
