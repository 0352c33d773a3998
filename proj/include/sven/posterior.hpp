#pragma once

// Unnormalized log posterior of a model gamma under the spike-and-slab prior
//
//   log f(gamma | y) = |g|/2 log(lambda) - 1/2 log|A_g| - (n-1)/2 log(R_g)
//                      + |g| log(w / (1 - w))
//
// with A_g = X_g^T X_g + lambda I and R_g the ridge residual sum of squares.
// The normalizing constant and the (1 - w)^p factor are dropped everywhere;
// only differences of scores are ever consumed.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "sven/dataset.hpp"
#include "sven/error.hpp"

namespace sven {

/// A model: sorted 0-based column indices.
using Model = std::vector<int>;

inline std::string describe_model(const Model& gamma) {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < gamma.size(); ++i) os << (i ? "," : "") << gamma[i] + 1;
  os << '}';
  return os.str();
}

class Hyperparams {
 public:
  Hyperparams(double lambda, double w) : lambda_(lambda), w_(w) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      throw PreconditionError("lambda must be positive, got " + std::to_string(lambda));
    if (!(w > 0.0 && w < 1.0)) throw PreconditionError("w must lie in (0, 1), got " + std::to_string(w));
    log_odds_ = std::log(w) - std::log1p(-w);
    log_lambda_ = std::log(lambda);
  }

  double lambda() const noexcept { return lambda_; }
  double w() const noexcept { return w_; }
  double log_odds() const noexcept { return log_odds_; }
  double log_lambda() const noexcept { return log_lambda_; }

 private:
  double lambda_;
  double w_;
  double log_odds_;
  double log_lambda_;
};

/// Factorized state of one model. `order` lists the columns in the order the
/// Cholesky factor was built; `gamma` is the same set sorted.
struct ModelState {
  Model gamma;
  std::vector<int> order;
  Eigen::MatrixXd chol;  // upper triangular, U^T U = A_gamma in `order`
  Vector v;              // U^{-T} X^T y_tilde
  double rss = 0.0;
  double log_det = 0.0;  // log det U = 1/2 log |A_gamma|
  double log_post = 0.0;

  std::size_t size() const noexcept { return gamma.size(); }
};

inline double log_post_of(const ModelState& state) { return state.log_post; }

/// Pivots at or below this value are treated as a singular direction.
inline double positive_pivot_tolerance(Eigen::Index n, double lambda) {
  return 1e-10 * (static_cast<double>(n) + lambda);
}

inline double log_posterior_formula(std::size_t size, double log_det, double rss, Eigen::Index n,
                                    const Hyperparams& hp) {
  const double k = static_cast<double>(size);
  return 0.5 * k * hp.log_lambda() - log_det - 0.5 * static_cast<double>(n - 1) * std::log(rss) +
         k * hp.log_odds();
}

namespace detail {

/// In-place upper Cholesky A = U^T U. Returns false on a pivot <= tol.
inline bool cholesky_upper(Eigen::MatrixXd& a, double tol) {
  const auto k = a.rows();
  for (Eigen::Index j = 0; j < k; ++j) {
    double d = a(j, j) - a.col(j).head(j).squaredNorm();
    if (!(d > tol)) return false;
    d = std::sqrt(d);
    a(j, j) = d;
    for (Eigen::Index c = j + 1; c < k; ++c) a(j, c) = (a(j, c) - a.col(j).head(j).dot(a.col(c).head(j))) / d;
  }
  a.template triangularView<Eigen::StrictlyLower>().setZero();
  return true;
}

inline void check_model(const Model& gamma, Eigen::Index n, Eigen::Index p) {
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    if (gamma[i] < 0 || gamma[i] >= p)
      throw PreconditionError("model index " + std::to_string(gamma[i] + 1) + " outside 1.." + std::to_string(p));
    if (i > 0 && gamma[i] <= gamma[i - 1])
      throw PreconditionError("model indices must be strictly increasing: " + describe_model(gamma));
  }
  if (static_cast<Eigen::Index>(gamma.size()) > n - 2)
    throw ModelTooLargeError("model " + describe_model(gamma) + " has more than n - 2 = " + std::to_string(n - 2) +
                             " variables");
}

}  // namespace detail

/// Scores gamma from scratch. Throws NumericalError when A_gamma is
/// numerically singular or the ridge RSS is not positive.
template <class Storage>
ModelState score_model(const Dataset<Storage>& ds, const Hyperparams& hp, const Model& gamma) {
  detail::check_model(gamma, ds.n(), ds.p());
  ModelState s;
  s.gamma = gamma;
  s.order = gamma;
  const auto k = static_cast<Eigen::Index>(gamma.size());
  if (k == 0) {
    s.chol.resize(0, 0);
    s.v.resize(0);
  } else {
    const DenseMatrix x = ds.standardized_columns(gamma);
    Eigen::MatrixXd a = x.transpose() * x;
    a.diagonal().array() += hp.lambda();
    if (!detail::cholesky_upper(a, positive_pivot_tolerance(ds.n(), hp.lambda())))
      throw NumericalError("numerically singular X^T X + lambda I for model " + describe_model(gamma));
    s.chol = std::move(a);
    Vector rhs(k);
    for (Eigen::Index i = 0; i < k; ++i) rhs[i] = ds.zeta()[gamma[static_cast<std::size_t>(i)]];
    s.v = s.chol.transpose().template triangularView<Eigen::Lower>().solve(rhs);
    s.log_det = s.chol.diagonal().array().log().sum();
  }
  s.rss = ds.yty() - s.v.squaredNorm();
  if (!(s.rss > 0.0)) throw NumericalError("non-positive ridge RSS for model " + describe_model(gamma));
  s.log_post = log_posterior_formula(gamma.size(), s.log_det, s.rss, ds.n(), hp);
  return s;
}

/// State of gamma + {j} by a rank-one extension of the factor.
template <class Storage>
ModelState extend_add(const Dataset<Storage>& ds, const Hyperparams& hp, const ModelState& state, int j) {
  if (j < 0 || j >= ds.p())
    throw PreconditionError("column index " + std::to_string(j + 1) + " outside 1.." + std::to_string(ds.p()));
  if (std::binary_search(state.gamma.begin(), state.gamma.end(), j))
    throw PreconditionError("column " + std::to_string(j + 1) + " already in model " + describe_model(state.gamma));
  const auto k = static_cast<Eigen::Index>(state.order.size());
  if (k + 1 > ds.n() - 2)
    throw ModelTooLargeError("extending " + describe_model(state.gamma) + " exceeds n - 2 variables");

  const Vector xj = ds.standardized_column(j);
  Vector b(k);
  for (Eigen::Index i = 0; i < k; ++i) b[i] = ds.standardized_dot(state.order[static_cast<std::size_t>(i)], xj);
  Vector s = state.chol.transpose().template triangularView<Eigen::Lower>().solve(b);
  const double s0sq = static_cast<double>(ds.n()) + hp.lambda() - s.squaredNorm();
  if (!(s0sq > positive_pivot_tolerance(ds.n(), hp.lambda())))
    throw NumericalError("column " + std::to_string(j + 1) + " is nearly collinear with model " +
                         describe_model(state.gamma));
  const double s0 = std::sqrt(s0sq);
  const double u = (ds.zeta()[j] - s.dot(state.v)) / s0;

  ModelState out;
  out.order = state.order;
  out.order.push_back(j);
  out.gamma = state.gamma;
  out.gamma.insert(std::upper_bound(out.gamma.begin(), out.gamma.end(), j), j);
  out.chol = Eigen::MatrixXd::Zero(k + 1, k + 1);
  out.chol.topLeftCorner(k, k) = state.chol;
  out.chol.col(k).head(k) = s;
  out.chol(k, k) = s0;
  out.v.resize(k + 1);
  out.v.head(k) = state.v;
  out.v[k] = u;
  out.rss = state.rss - u * u;
  if (!(out.rss > 0.0)) throw NumericalError("non-positive ridge RSS for model " + describe_model(out.gamma));
  out.log_det = state.log_det + std::log(s0);
  out.log_post = log_posterior_formula(out.gamma.size(), out.log_det, out.rss, ds.n(), hp);
  return out;
}

/// Ridge estimate on the standardized scale, A^{-1} X^T y_tilde, in `order`.
inline Vector ridge_coefficients(const ModelState& state) {
  if (state.order.empty()) return Vector(0);
  return state.chol.template triangularView<Eigen::Upper>().solve(state.v);
}

}  // namespace sven
