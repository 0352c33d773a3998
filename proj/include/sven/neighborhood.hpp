#pragma once

// Scores of every model one move away from gamma: single additions,
// single deletions, and swaps (one out, one in).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <thread>
#include <vector>

#include "sven/dataset.hpp"
#include "sven/posterior.hpp"

namespace sven {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct ScanOptions {
  Eigen::Index block = 4096;  // columns of Z per S2 block
  int threads = 1;
  /// Adds are suppressed (all -inf) once the model reaches this size.
  std::size_t max_model_size = 200;
};

namespace detail {

/// Runs fn(b) for b in [0, count). Block boundaries are fixed by the caller,
/// so output never depends on the number of threads.
template <class Fn>
void parallel_blocks(Eigen::Index count, int threads, Fn&& fn) {
  const auto workers = static_cast<Eigen::Index>(std::max(1, threads));
  if (workers == 1 || count < 2) {
    for (Eigen::Index b = 0; b < count; ++b) fn(b);
    return;
  }
  std::vector<std::jthread> pool;
  const auto used = std::min(workers, count);
  pool.reserve(static_cast<std::size_t>(used));
  for (Eigen::Index t = 0; t < used; ++t)
    pool.emplace_back([&, t] {
      for (Eigen::Index b = t; b < count; b += used) fn(b);
    });
}

}  // namespace detail

/// Log scores of gamma + {i} for every column i; -inf where i is in gamma,
/// where the pivot degenerates, or where the ridge RSS is not positive.
template <class Storage>
std::vector<double> scan_adds(const Dataset<Storage>& ds, const Hyperparams& hp, const ModelState& state,
                              const ScanOptions& opts = {}) {
  const auto n = ds.n();
  const auto p = ds.p();
  const auto k = static_cast<Eigen::Index>(state.order.size());
  std::vector<double> out(static_cast<std::size_t>(p), kNegInf);
  if (k + 1 > n - 2 || state.size() >= opts.max_model_size) return out;

  const double n_lambda = static_cast<double>(n) + hp.lambda();
  const double tol = positive_pivot_tolerance(n, hp.lambda());
  const double half_nm1 = 0.5 * static_cast<double>(n - 1);
  const double prior = 0.5 * static_cast<double>(k + 1) * hp.log_lambda() + static_cast<double>(k + 1) * hp.log_odds();
  const auto& zeta = ds.zeta();
  const auto& d_inv = ds.d_inv();

  auto finish = [&](Eigen::Index i, double s3, double s2v) {
    const double s4sq = n_lambda - s3;
    if (!(s4sq > tol)) return;
    const double s4 = std::sqrt(s4sq);
    const double s5 = (zeta[i] - s2v) / s4;
    const double s6 = state.log_det + std::log(s4);
    const double s7 = state.rss - s5 * s5;
    if (!(s7 > 0.0)) return;
    out[static_cast<std::size_t>(i)] = prior - s6 - half_nm1 * std::log(s7);
  };

  if (k == 0) {
    for (Eigen::Index i = 0; i < p; ++i) finish(i, 0.0, 0.0);
  } else {
    // S1 = U^{-T} X_g^T; its rows sum to zero, so Z needs no centering below.
    const DenseMatrix xg = ds.standardized_columns(state.order);
    const DenseMatrix s1 = state.chol.transpose().template triangularView<Eigen::Lower>().solve(xg.transpose());
    const Eigen::Index block = std::max<Eigen::Index>(1, opts.block);
    const Eigen::Index blocks = (p + block - 1) / block;
    detail::parallel_blocks(blocks, opts.threads, [&](Eigen::Index b) {
      const Eigen::Index start = b * block;
      const Eigen::Index len = std::min(block, p - start);
      DenseMatrix s2 = s1 * ds.z().middleCols(start, len);  // k x len, unscaled
      for (Eigen::Index c = 0; c < len; ++c) {
        const double scale = d_inv[start + c];
        const auto col = s2.col(c);
        finish(start + c, scale * scale * col.squaredNorm(), scale * col.dot(state.v));
      }
    });
  }
  for (int g : state.gamma) out[static_cast<std::size_t>(g)] = kNegInf;
  return out;
}

/// Scores of gamma \ {gamma[k]} for each position k, with the rebuilt states.
struct DeleteScan {
  std::vector<double> scores;
  std::vector<std::optional<ModelState>> states;
};

template <class Storage>
DeleteScan scan_deletes(const Dataset<Storage>& ds, const Hyperparams& hp, const ModelState& state) {
  DeleteScan out;
  out.scores.assign(state.size(), kNegInf);
  out.states.resize(state.size());
  for (std::size_t k = 0; k < state.size(); ++k) {
    Model sub = state.gamma;
    sub.erase(sub.begin() + static_cast<std::ptrdiff_t>(k));
    try {
      out.states[k] = score_model(ds, hp, sub);
      out.scores[k] = out.states[k]->log_post;
    } catch (const NumericalError&) {
    }
  }
  return out;
}

/// Row k holds the add scan of the k-th deleted model: entry i scores
/// (gamma \ {gamma[k]}) + {i}. Entry gamma[k] re-adds the deleted column and
/// reproduces the current model.
template <class Storage>
std::vector<std::vector<double>> scan_swaps(const Dataset<Storage>& ds, const Hyperparams& hp,
                                            const std::vector<std::optional<ModelState>>& deleted_states,
                                            const ScanOptions& opts = {}) {
  std::vector<std::vector<double>> rows;
  rows.reserve(deleted_states.size());
  for (const auto& st : deleted_states) {
    if (st)
      rows.push_back(scan_adds(ds, hp, *st, opts));
    else
      rows.emplace_back(static_cast<std::size_t>(ds.p()), kNegInf);
  }
  return rows;
}

struct NeighborScores {
  std::vector<double> add;                // [p]
  std::vector<double> del;                // [|gamma|]
  std::vector<std::vector<double>> swap;  // [|gamma|][p]
  double current = 0.0;
  Model gamma;                                      // the model the scores are relative to
  std::vector<std::optional<ModelState>> deleted;  // rebuilt deletion states
};

template <class Storage>
NeighborScores full_neighborhood(const Dataset<Storage>& ds, const Hyperparams& hp, const ModelState& state,
                                 const ScanOptions& opts = {}) {
  NeighborScores nb;
  nb.gamma = state.gamma;
  nb.current = state.log_post;
  nb.add = scan_adds(ds, hp, state, opts);
  auto dels = scan_deletes(ds, hp, state);
  nb.del = std::move(dels.scores);
  nb.swap = scan_swaps(ds, hp, dels.states, opts);
  nb.deleted = std::move(dels.states);
  return nb;
}

}  // namespace sven
