#pragma once

// Tempered stochastic shotgun search with model-based screening. Each
// temperature runs its own chain from the empty model; every screened
// candidate is recorded in a registry that feeds model averaging.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

#include "sven/dataset.hpp"
#include "sven/error.hpp"
#include "sven/neighborhood.hpp"
#include "sven/posterior.hpp"
#include "sven/random.hpp"

namespace sven {

struct SearchConfig {
  int m = 9;           // number of temperatures
  int n_iter = 200;    // iterations per temperature
  int screen_cap = 20;
  double log_rho = -6.0;
  double log_eps = -16.0;
  std::uint64_t seed = 1;
  /// 0 selects min(n - 2, 200).
  std::size_t max_model_size = 0;
  int threads = 1;
  Eigen::Index block = 4096;

  void validate() const {
    if (m < 1) throw PreconditionError("temperature count m must be >= 1");
    if (n_iter < 1) throw PreconditionError("iterations per temperature must be >= 1");
    if (screen_cap < 1) throw PreconditionError("screening cap must be >= 1");
    if (!(log_rho < 0.0)) throw PreconditionError("log_rho must be negative");
    if (!(log_eps < 0.0)) throw PreconditionError("log_eps must be negative");
    if (threads < 1) throw PreconditionError("threads must be >= 1");
  }

  std::size_t effective_max_size(Eigen::Index n) const {
    const auto hard = static_cast<std::size_t>(std::max<Eigen::Index>(0, n - 2));
    return max_model_size == 0 ? std::min<std::size_t>(hard, 200) : std::min(hard, max_model_size);
  }
};

/// T_1 = 1 < ... < T_m = log p + log log p, equally spaced.
inline std::vector<double> temperature_schedule(Eigen::Index p, int m) {
  if (p < 3) throw PreconditionError("temperature schedule needs p >= 3");
  if (m < 1) throw PreconditionError("temperature count must be >= 1");
  if (m == 1) return {1.0};
  const double lp = std::log(static_cast<double>(p));
  const double top = lp + std::log(lp);
  std::vector<double> t(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) t[static_cast<std::size_t>(i)] = 1.0 + (top - 1.0) * i / (m - 1);
  t.back() = top;
  return t;
}

struct Move {
  enum class Kind { add, del, swap };
  Kind kind = Kind::add;
  int out = -1;  // column removed (del, swap)
  int in = -1;   // column added (add, swap)

  friend bool operator==(const Move&, const Move&) = default;
};

inline const char* to_string(Move::Kind k) {
  switch (k) {
    case Move::Kind::add: return "add";
    case Move::Kind::del: return "delete";
    case Move::Kind::swap: return "swap";
  }
  return "?";
}

inline Model apply_move(const Model& gamma, const Move& mv) {
  Model g = gamma;
  if (mv.out >= 0) g.erase(std::find(g.begin(), g.end(), mv.out));
  if (mv.in >= 0) g.insert(std::upper_bound(g.begin(), g.end(), mv.in), mv.in);
  return g;
}

struct Candidate {
  Move move;
  double log_post;
};

/// Screened set M_k: finite moves with log f > max log f + log_rho, at most
/// `cap` of them, highest first. Ties keep enumeration order (adds by column,
/// then deletions, then swaps), so lower column indices win.
inline std::vector<Candidate> screen(const NeighborScores& nb, int cap, double log_rho) {
  std::vector<Candidate> all;
  for (std::size_t i = 0; i < nb.add.size(); ++i)
    if (std::isfinite(nb.add[i])) all.push_back({{Move::Kind::add, -1, static_cast<int>(i)}, nb.add[i]});
  for (std::size_t k = 0; k < nb.del.size(); ++k)
    if (std::isfinite(nb.del[k])) all.push_back({{Move::Kind::del, nb.gamma[k], -1}, nb.del[k]});
  for (std::size_t k = 0; k < nb.swap.size(); ++k)
    for (std::size_t i = 0; i < nb.swap[k].size(); ++i) {
      // Re-adding the deleted column is the current model, not a neighbor.
      if (static_cast<int>(i) == nb.gamma[k]) continue;
      if (std::isfinite(nb.swap[k][i]))
        all.push_back({{Move::Kind::swap, nb.gamma[k], static_cast<int>(i)}, nb.swap[k][i]});
    }
  if (all.empty()) throw NumericalError("every neighbor of " + describe_model(nb.gamma) + " has score -inf");
  double best = kNegInf;
  for (const auto& c : all) best = std::max(best, c.log_post);
  const double cut = best + log_rho;
  std::erase_if(all, [&](const Candidate& c) { return !(c.log_post > cut); });
  const auto keep = std::min(all.size(), static_cast<std::size_t>(std::max(cap, 1)));
  std::stable_sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) { return a.log_post > b.log_post; });
  all.resize(keep);
  return all;
}

/// Draws an index with probability proportional to exp(log_post / T).
inline std::size_t shotgun_sample_index(const std::vector<Candidate>& screened, double temperature, Rng& rng) {
  if (screened.empty()) throw PreconditionError("cannot sample from an empty screened set");
  double top = kNegInf;
  for (const auto& c : screened) top = std::max(top, c.log_post / temperature);
  std::vector<double> cum(screened.size());
  double total = 0.0;
  for (std::size_t i = 0; i < screened.size(); ++i) {
    total += std::exp(screened[i].log_post / temperature - top);
    cum[i] = total;
  }
  const double u = uniform01(rng) * total;
  const auto it = std::upper_bound(cum.begin(), cum.end(), u);
  return std::min(static_cast<std::size_t>(it - cum.begin()), screened.size() - 1);
}

inline Move shotgun_sample(const std::vector<Candidate>& screened, double temperature, Rng& rng) {
  return screened[shotgun_sample_index(screened, temperature, rng)].move;
}

/// Registry of explored models keyed by their sorted index tuple.
class TopModels {
 public:
  struct Entry {
    double log_post;
    int chain;  // where the model was first seen
    int step;
  };

  /// Keeps the larger score on revisits; -inf and NaN are ignored.
  void offer(const Model& gamma, double log_post, int chain = 0, int step = 0) {
    if (!std::isfinite(log_post)) return;
    auto [it, inserted] = entries_.try_emplace(gamma, Entry{log_post, chain, step});
    if (!inserted) {
      it->second.log_post = std::max(it->second.log_post, log_post);
      if (std::pair(chain, step) < std::pair(it->second.chain, it->second.step)) {
        it->second.chain = chain;
        it->second.step = step;
      }
    }
    if (!best_ || log_post > best_->second || (log_post == best_->second && gamma < best_->first))
      best_ = std::pair(gamma, it->second.log_post);
    else if (best_->first == gamma)
      best_->second = it->second.log_post;
  }

  void merge(const TopModels& other) {
    for (const auto& [g, e] : other.entries_) offer(g, e.log_post, e.chain, e.step);
  }

  bool empty() const noexcept { return entries_.empty(); }
  std::size_t size() const noexcept { return entries_.size(); }
  const std::map<Model, Entry>& entries() const noexcept { return entries_; }
  const Model& best_model() const { return best_.value().first; }
  double best_score() const { return best_.value().second; }

  std::optional<Entry> find(const Model& gamma) const {
    auto it = entries_.find(gamma);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::map<Model, Entry> entries_;
  std::optional<std::pair<Model, double>> best_;
};

struct TraceEntry {
  int chain;
  double temperature;
  int step;  // 1-based iteration within the chain
  Move move;
  std::size_t model_size;
  double log_post;
  double elapsed_ms;  // since the start of the chain; never serialized
};

struct ChainSummary {
  double temperature;
  int steps;                // iterations completed
  bool stopped_early;       // empty neighborhood
  double elapsed_ms;
};

struct SearchResult {
  Model map_model;
  double map_log_post = kNegInf;
  TopModels top_models;
  std::vector<TraceEntry> trace;
  std::vector<ChainSummary> chains;
};

namespace detail {

struct ChainResult {
  TopModels registry;
  std::vector<TraceEntry> trace;
  ChainSummary summary;
};

template <class Storage>
ChainResult run_chain(const Dataset<Storage>& ds, const Hyperparams& hp, const SearchConfig& cfg, int chain,
                      double temperature, const ScanOptions& scan) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto ms_since = [&] { return std::chrono::duration<double, std::milli>(clock::now() - t0).count(); };

  ChainResult res;
  res.summary = {temperature, 0, false, 0.0};
  Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(chain)}));
  ModelState state = score_model(ds, hp, Model{});
  res.registry.offer(state.gamma, state.log_post, chain, 0);

  for (int step = 1; step <= cfg.n_iter; ++step) {
    NeighborScores nb = full_neighborhood(ds, hp, state, scan);
    std::vector<Candidate> screened;
    try {
      screened = screen(nb, cfg.screen_cap, cfg.log_rho);
    } catch (const NumericalError&) {
      res.summary.stopped_early = true;
      break;
    }
    for (const auto& c : screened) res.registry.offer(apply_move(state.gamma, c.move), c.log_post, chain, step);

    const auto pick = screened[shotgun_sample_index(screened, temperature, rng)];
    const Model next = apply_move(state.gamma, pick.move);
    try {
      switch (pick.move.kind) {
        case Move::Kind::add:
          try {
            state = extend_add(ds, hp, state, pick.move.in);
          } catch (const NumericalError&) {
            state = score_model(ds, hp, next);
          }
          break;
        case Move::Kind::del: {
          const auto pos = static_cast<std::size_t>(
              std::find(nb.gamma.begin(), nb.gamma.end(), pick.move.out) - nb.gamma.begin());
          state = nb.deleted[pos] ? std::move(*nb.deleted[pos]) : score_model(ds, hp, next);
          break;
        }
        case Move::Kind::swap:
          state = score_model(ds, hp, next);
          break;
      }
    } catch (const NumericalError&) {
      res.summary.stopped_early = true;
      break;
    }
    res.registry.offer(state.gamma, state.log_post, chain, step);
    res.trace.push_back({chain, temperature, step, pick.move, state.size(), state.log_post, ms_since()});
    res.summary.steps = step;
  }
  res.summary.elapsed_ms = ms_since();
  return res;
}

}  // namespace detail

template <class Storage>
SearchResult run_sven(const Dataset<Storage>& ds, const Hyperparams& hp, const SearchConfig& cfg) {
  cfg.validate();
  const auto temps = temperature_schedule(ds.p(), cfg.m);
  ScanOptions scan;
  scan.block = cfg.block;
  scan.max_model_size = cfg.effective_max_size(ds.n());

  std::vector<detail::ChainResult> chains(temps.size());
  const int workers = std::min<int>(cfg.threads, static_cast<int>(temps.size()));
  if (workers <= 1) {
    scan.threads = cfg.threads;
    for (std::size_t i = 0; i < temps.size(); ++i)
      chains[i] = detail::run_chain(ds, hp, cfg, static_cast<int>(i), temps[i], scan);
  } else {
    // Chains share nothing mutable; each writes only its own slot.
    scan.threads = 1;
    std::vector<std::jthread> pool;
    for (int t = 0; t < workers; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t i = static_cast<std::size_t>(t); i < temps.size(); i += static_cast<std::size_t>(workers))
          chains[i] = detail::run_chain(ds, hp, cfg, static_cast<int>(i), temps[i], scan);
      });
  }

  SearchResult out;
  for (auto& c : chains) {
    out.top_models.merge(c.registry);
    out.trace.insert(out.trace.end(), c.trace.begin(), c.trace.end());
    out.chains.push_back(c.summary);
  }
  out.map_model = out.top_models.best_model();
  out.map_log_post = out.top_models.best_score();
  return out;
}

/// Scores every model with at most `max_size` variables into the registry.
/// Test hook standing in for a search that has explored the whole space.
template <class Storage>
void explore_exhaustively(const Dataset<Storage>& ds, const Hyperparams& hp, TopModels& registry,
                          std::size_t max_size) {
  const auto p = static_cast<int>(ds.p());
  if (p > 24) throw PreconditionError("exhaustive exploration is limited to p <= 24");
  for (std::uint32_t mask = 0; mask < (1u << p); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) > max_size) continue;
    Model g;
    for (int j = 0; j < p; ++j)
      if (mask & (1u << j)) g.push_back(j);
    try {
      registry.offer(g, score_model(ds, hp, g).log_post);
    } catch (const NumericalError&) {
    }
  }
}

struct WeightedModel {
  Model gamma;
  double log_post;
  double weight;
};

/// Models within log_eps of the best, weighted by normalized posterior.
/// Ordered by decreasing score, ties by model key.
inline std::vector<WeightedModel> top_k_weights(const TopModels& registry, double log_eps) {
  if (registry.empty()) throw PreconditionError("no explored models to weight");
  const double best = registry.best_score();
  std::vector<WeightedModel> out;
  for (const auto& [g, e] : registry.entries())
    if (e.log_post - best > log_eps) out.push_back({g, e.log_post, 0.0});
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.log_post > b.log_post; });
  double total = 0.0;
  for (auto& m : out) total += (m.weight = std::exp(m.log_post - best));
  for (auto& m : out) m.weight /= total;
  return out;
}

struct WamResult {
  Vector pi_hat;
  Model wam_model;
};

inline WamResult wam(const std::vector<WeightedModel>& weighted, Eigen::Index p) {
  WamResult r;
  r.pi_hat = Vector::Zero(p);
  for (const auto& m : weighted)
    for (int j : m.gamma) r.pi_hat[j] += m.weight;
  for (Eigen::Index j = 0; j < p; ++j) {
    r.pi_hat[j] = std::clamp(r.pi_hat[j], 0.0, 1.0);
    if (r.pi_hat[j] > 0.5) r.wam_model.push_back(static_cast<int>(j));
  }
  return r;
}

}  // namespace sven
