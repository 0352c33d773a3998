#pragma once

// Posterior predictive summaries at new covariate rows given on the original
// (unstandardized) scale. The model-averaged moments follow from
//
//   E(y*|y)   = ybar + E[m_g | y]
//   Var(y*|y) = E[R_g/(n-3) (1 + 1/n + q_g) | y] + Var[m_g | y]
//
// with m_g = ztilde^T F D X^T y_tilde, q_g = ztilde^T F ztilde,
// F = D^{-1} A^{-1} D^{-1}, and the expectation taken over the weighted top
// models. The Monte Carlo interval instead draws y* from the weighted mixture
// of per-model posterior predictive laws.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "sven/dataset.hpp"
#include "sven/error.hpp"
#include "sven/posterior.hpp"
#include "sven/random.hpp"
#include "sven/search.hpp"

namespace sven {

/// Standard normal quantile. Acklam's rational approximation (relative error
/// below 1.2e-9) followed by one Halley step against erfc.
inline double normal_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0)) throw PreconditionError("normal quantile needs 0 < p < 1");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double lo = 0.02425;
  double x;
  if (prob < lo) {
    const double q = std::sqrt(-2.0 * std::log(prob));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (prob <= 1.0 - lo) {
    const double q = prob - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-prob));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - prob;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

/// Type-7 sample quantile (linear interpolation between order statistics);
/// `sorted` must be in ascending order.
inline double quantile_type7(const std::vector<double>& sorted, double prob) {
  if (sorted.empty()) throw PreconditionError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace detail {

/// D_g^{-1} (z*_g - zbar_g) in factor order.
template <class Storage>
Vector scaled_offset(const Dataset<Storage>& ds, const ModelState& state, const Vector& z_row) {
  if (z_row.size() != ds.p())
    throw PreconditionError("new covariate row has " + std::to_string(z_row.size()) + " entries, expected " +
                            std::to_string(ds.p()));
  Vector dz(static_cast<Eigen::Index>(state.order.size()));
  for (std::size_t i = 0; i < state.order.size(); ++i) {
    const int j = state.order[i];
    dz[static_cast<Eigen::Index>(i)] = (z_row[j] - ds.z_bar()[j]) * ds.d_inv()[j];
  }
  return dz;
}

}  // namespace detail

/// m_g = ztilde_g^T D_g^{-1} A_g^{-1} X_g^T y_tilde.
template <class Storage>
double model_mean_term(const Dataset<Storage>& ds, const ModelState& state, const Vector& z_row) {
  if (state.order.empty()) return 0.0;
  return detail::scaled_offset(ds, state, z_row).dot(ridge_coefficients(state));
}

/// q_g = ztilde_g^T F_g ztilde_g = |U^{-T} D^{-1} ztilde|^2.
template <class Storage>
double model_quad_term(const Dataset<Storage>& ds, const ModelState& state, const Vector& z_row) {
  if (ds.n() <= 3) throw PreconditionError("predictive variance needs n > 3");
  if (state.order.empty()) return 0.0;
  const Vector dz = detail::scaled_offset(ds, state, z_row);
  return state.chol.transpose().template triangularView<Eigen::Lower>().solve(dz).squaredNorm();
}

struct ModelTerms {
  double mean_term;
  double quad_term;
  double rss;
};

struct PredictiveMoments {
  double mean;
  double variance;
  std::vector<ModelTerms> per_model;
};

struct ZInterval {
  double mean;
  double variance;
  double lo;
  double hi;
};

/// A weighted model with its factorization.
struct WeightedState {
  ModelState state;
  double weight;
};

template <class Storage>
std::vector<WeightedState> factorize(const Dataset<Storage>& ds, const Hyperparams& hp,
                                     const std::vector<WeightedModel>& weighted) {
  std::vector<WeightedState> out;
  out.reserve(weighted.size());
  for (const auto& m : weighted) out.push_back({score_model(ds, hp, m.gamma), m.weight});
  return out;
}

template <class Storage>
PredictiveMoments predictive_moments(const Dataset<Storage>& ds, const std::vector<WeightedState>& models,
                                     const Vector& z_row) {
  if (ds.n() <= 3) throw PreconditionError("predictive variance needs n > 3");
  if (models.empty()) throw PreconditionError("no models to average over");
  const double nd = static_cast<double>(ds.n());
  PredictiveMoments pm{0.0, 0.0, {}};
  double m1 = 0.0, m2 = 0.0, within = 0.0, wsum = 0.0;
  for (const auto& ws : models) {
    const ModelTerms t{model_mean_term(ds, ws.state, z_row), model_quad_term(ds, ws.state, z_row), ws.state.rss};
    pm.per_model.push_back(t);
    m1 += ws.weight * t.mean_term;
    m2 += ws.weight * t.mean_term * t.mean_term;
    within += ws.weight * t.rss / (nd - 3.0) * (1.0 + 1.0 / nd + t.quad_term);
    wsum += ws.weight;
  }
  if (std::abs(wsum - 1.0) > 1e-9) throw PreconditionError("model weights must sum to 1");
  pm.mean = ds.y_bar() + m1;
  pm.variance = within + std::max(0.0, m2 - m1 * m1);
  return pm;
}

/// Normal-approximation interval mean -/+ z_{alpha/2} sd for each row of z_star.
template <class Storage>
std::vector<ZInterval> z_prediction_interval(const Dataset<Storage>& ds, const std::vector<WeightedState>& models,
                                             const DenseMatrix& z_star, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionError("alpha must lie in (0, 1)");
  const double z = normal_quantile(1.0 - alpha / 2.0);
  std::vector<ZInterval> out;
  out.reserve(static_cast<std::size_t>(z_star.rows()));
  for (Eigen::Index r = 0; r < z_star.rows(); ++r) {
    const auto pm = predictive_moments(ds, models, z_star.row(r).transpose());
    const double half = z * std::sqrt(pm.variance);
    out.push_back({pm.mean, pm.variance, pm.mean - half, pm.mean + half});
  }
  return out;
}

struct McInterval {
  double lo;
  double hi;
};

/// One posterior draw of (sigma^2, mu0, mu_g) for model `state`, where mu is on
/// the original covariate scale (in factor order).
struct ParameterDraw {
  double sigma2;
  double mu0;
  Vector mu;
};

template <class Storage>
ParameterDraw draw_parameters(const Dataset<Storage>& ds, const ModelState& state, Rng& rng) {
  const double nd = static_cast<double>(ds.n());
  ParameterDraw d;
  d.sigma2 = inverse_gamma(rng, 0.5 * (nd - 1.0), 0.5 * state.rss);
  const double sd = std::sqrt(d.sigma2);
  const auto k = static_cast<Eigen::Index>(state.order.size());
  Vector e(k);
  for (Eigen::Index i = 0; i < k; ++i) e[i] = sd * standard_normal(rng);
  Vector beta = k ? Vector(state.chol.template triangularView<Eigen::Upper>().solve(state.v + e)) : Vector(0);
  d.mu.resize(k);
  double center = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    const int j = state.order[static_cast<std::size_t>(i)];
    d.mu[i] = ds.d_inv()[j] * beta[i];
    center += ds.z_bar()[j] * d.mu[i];
  }
  d.mu0 = ds.y_bar() - center + std::sqrt(d.sigma2 / nd) * standard_normal(rng);
  return d;
}

/// Steps 1-2 of the sampler: draw n_mc model indices with probability
/// proportional to weight and return each model's multiplicity.
inline std::vector<int> sample_multiplicities(const std::vector<double>& weights, int n_mc, std::uint64_t seed) {
  if (n_mc < 1) throw PreconditionError("n_mc must be >= 1");
  if (weights.empty()) throw PreconditionError("no models to sample from");
  std::vector<double> cum(weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) cum[i] = (total += weights[i]);
  Rng pick(derive_seed(seed, {0xfeedULL}));
  std::vector<int> mult(weights.size(), 0);
  for (int s = 0; s < n_mc; ++s) {
    const double u = uniform01(pick) * total;
    auto idx = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
    ++mult[std::min(idx, weights.size() - 1)];
  }
  return mult;
}

namespace detail {

/// Replicate j of model m uses the substream derive_seed(seed, {m + 1, j}).
template <class Storage>
void draw_model_replicates(const Dataset<Storage>& ds, const ModelState& st, std::size_t m, int count,
                           const DenseMatrix& z_star, std::uint64_t seed, DenseMatrix& samples, Eigen::Index& col) {
  const auto L = z_star.rows();
  DenseMatrix zg(L, static_cast<Eigen::Index>(st.order.size()));
  for (std::size_t i = 0; i < st.order.size(); ++i) zg.col(static_cast<Eigen::Index>(i)) = z_star.col(st.order[i]);
  for (int j = 0; j < count; ++j, ++col) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(m) + 1, static_cast<std::uint64_t>(j)}));
    const ParameterDraw d = draw_parameters(ds, st, rng);
    const double sd = std::sqrt(d.sigma2);
    for (Eigen::Index l = 0; l < L; ++l) {
      const double mean = d.mu0 + (st.order.empty() ? 0.0 : zg.row(l).dot(d.mu));
      const double y = mean + sd * standard_normal(rng);
      if (!std::isfinite(y)) throw NumericalError("non-finite predictive draw");
      samples(l, col) = y;
    }
  }
}

inline void check_columns(const DenseMatrix& z_star, Eigen::Index p) {
  if (z_star.cols() != p)
    throw PreconditionError("new covariates have " + std::to_string(z_star.cols()) + " columns, expected " +
                            std::to_string(p));
}

}  // namespace detail

/// Monte Carlo predictive draws, an L x n_mc matrix. Only the unique sampled
/// models are factorized, once each.
template <class Storage>
DenseMatrix mc_predictive_samples(const Dataset<Storage>& ds, const Hyperparams& hp,
                                  const std::vector<WeightedModel>& weighted, const DenseMatrix& z_star, int n_mc,
                                  std::uint64_t seed) {
  detail::check_columns(z_star, ds.p());
  std::vector<double> w;
  for (const auto& m : weighted) w.push_back(m.weight);
  const auto mult = sample_multiplicities(w, n_mc, seed);
  DenseMatrix samples(z_star.rows(), n_mc);
  Eigen::Index col = 0;
  for (std::size_t m = 0; m < weighted.size(); ++m) {
    if (mult[m] == 0) continue;
    const ModelState st = score_model(ds, hp, weighted[m].gamma);
    detail::draw_model_replicates(ds, st, m, mult[m], z_star, seed, samples, col);
  }
  return samples;
}

/// Same draws from already factorized models.
template <class Storage>
DenseMatrix mc_predictive_samples(const Dataset<Storage>& ds, const std::vector<WeightedState>& models,
                                  const DenseMatrix& z_star, int n_mc, std::uint64_t seed) {
  detail::check_columns(z_star, ds.p());
  std::vector<double> w;
  for (const auto& m : models) w.push_back(m.weight);
  const auto mult = sample_multiplicities(w, n_mc, seed);
  DenseMatrix samples(z_star.rows(), n_mc);
  Eigen::Index col = 0;
  for (std::size_t m = 0; m < models.size(); ++m)
    if (mult[m] > 0) detail::draw_model_replicates(ds, models[m].state, m, mult[m], z_star, seed, samples, col);
  return samples;
}

namespace detail {

inline std::vector<McInterval> row_quantiles(const DenseMatrix& samples, double alpha) {
  std::vector<McInterval> out;
  out.reserve(static_cast<std::size_t>(samples.rows()));
  std::vector<double> row(static_cast<std::size_t>(samples.cols()));
  for (Eigen::Index l = 0; l < samples.rows(); ++l) {
    for (Eigen::Index s = 0; s < samples.cols(); ++s) row[static_cast<std::size_t>(s)] = samples(l, s);
    std::sort(row.begin(), row.end());
    out.push_back({quantile_type7(row, alpha / 2.0), quantile_type7(row, 1.0 - alpha / 2.0)});
  }
  return out;
}

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionError("alpha must lie in (0, 1)");
}

}  // namespace detail

/// Empirical (alpha/2, 1 - alpha/2) type-7 quantiles of the Monte Carlo draws.
template <class Storage>
std::vector<McInterval> mc_predict(const Dataset<Storage>& ds, const Hyperparams& hp,
                                   const std::vector<WeightedModel>& weighted, const DenseMatrix& z_star, int n_mc,
                                   double alpha, std::uint64_t seed) {
  detail::check_alpha(alpha);
  return detail::row_quantiles(mc_predictive_samples(ds, hp, weighted, z_star, n_mc, seed), alpha);
}

template <class Storage>
std::vector<McInterval> mc_predict(const Dataset<Storage>& ds, const std::vector<WeightedState>& models,
                                   const DenseMatrix& z_star, int n_mc, double alpha, std::uint64_t seed) {
  detail::check_alpha(alpha);
  return detail::row_quantiles(mc_predictive_samples(ds, models, z_star, n_mc, seed), alpha);
}

}  // namespace sven
