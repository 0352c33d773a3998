#pragma once

// JSON form of a search result. Column indices are 1-based positions in the
// input file (filtered columns keep their original numbers).

#include "json.hpp"

#include <string>
#include <vector>

#include "sven/dataset.hpp"
#include "sven/posterior.hpp"
#include "sven/search.hpp"
#include "sven/simbench.hpp"

namespace sven {

using json = nlohmann::ordered_json;

template <class Storage>
json model_to_json(const Dataset<Storage>& ds, const Model& gamma) {
  json a = json::array();
  for (int j : gamma) a.push_back(ds.column_ids()[static_cast<std::size_t>(j)] + 1);
  return a;
}

/// Maps reported 1-based column numbers back to dataset columns.
template <class Storage>
Model model_from_json(const Dataset<Storage>& ds, const json& a) {
  Model g;
  const auto& ids = ds.column_ids();
  for (const auto& v : a) {
    const int id = v.get<int>() - 1;
    auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) throw FormatError("fit refers to column " + std::to_string(id + 1) + " absent from the data");
    g.push_back(static_cast<int>(it - ids.begin()));
  }
  std::sort(g.begin(), g.end());
  return g;
}

template <class Storage>
json coefficients_to_json(const Dataset<Storage>& ds, const Hyperparams& hp, const Model& gamma) {
  json out;
  out["model"] = model_to_json(ds, gamma);
  json names = json::array();
  for (int j : gamma) names.push_back(ds.names()[static_cast<std::size_t>(j)]);
  out["names"] = names;
  try {
    json ridge = json::array();
    if (!gamma.empty()) {
      const ModelState st = score_model(ds, hp, gamma);
      const Vector b = ridge_coefficients(st);
      // Factor order equals sorted order for a freshly scored model.
      for (Eigen::Index i = 0; i < b.size(); ++i) ridge.push_back(b[i]);
    }
    const auto fit = ridge_fit(ds, hp, gamma);
    json mu = json::array();
    for (int j : gamma) mu.push_back(fit.coef[j]);
    out["ridge_beta"] = ridge;
    out["intercept"] = fit.intercept;
    out["mu"] = mu;
  } catch (const Error& e) {
    out["error"] = e.what();
  }
  return out;
}

inline json config_to_json(const SearchConfig& cfg, std::size_t max_size) {
  json c;
  c["m"] = cfg.m;
  c["n_iter"] = cfg.n_iter;
  c["screen_cap"] = cfg.screen_cap;
  c["log_rho"] = cfg.log_rho;
  c["log_eps"] = cfg.log_eps;
  c["seed"] = cfg.seed;
  c["max_model_size"] = max_size;
  return c;
}

struct ReportOptions {
  bool include_trace = false;
  double pi_threshold = 1e-6;
};

template <class Storage>
json search_result_to_json(const Dataset<Storage>& ds, const Hyperparams& hp, const SearchConfig& cfg,
                           const SearchResult& res, const ReportOptions& opts = {}) {
  const auto weighted = top_k_weights(res.top_models, cfg.log_eps);
  const auto averaged = wam(weighted, ds.p());

  json j;
  j["n"] = ds.n();
  j["p"] = ds.p();
  j["hyperparams"] = {{"lambda", hp.lambda()}, {"w", hp.w()}};
  j["config"] = config_to_json(cfg, cfg.effective_max_size(ds.n()));
  j["temperatures"] = temperature_schedule(ds.p(), cfg.m);
  j["map_model"] = model_to_json(ds, res.map_model);
  j["map_log_post"] = res.map_log_post;
  j["wam_model"] = model_to_json(ds, averaged.wam_model);
  j["explored_models"] = res.top_models.size();

  json top = json::array();
  for (const auto& m : weighted)
    top.push_back({{"model", model_to_json(ds, m.gamma)}, {"log_post", m.log_post}, {"weight", m.weight}});
  j["top_models"] = top;

  json pi = json::array();
  for (Eigen::Index c = 0; c < ds.p(); ++c)
    if (averaged.pi_hat[c] > opts.pi_threshold)
      pi.push_back({{"index", ds.column_ids()[static_cast<std::size_t>(c)] + 1}, {"pi", averaged.pi_hat[c]}});
  j["pi_hat"] = pi;

  j["coefficients"] = {{"map", coefficients_to_json(ds, hp, res.map_model)},
                       {"wam", coefficients_to_json(ds, hp, averaged.wam_model)}};

  json chains = json::array();
  for (const auto& c : res.chains)
    chains.push_back({{"temperature", c.temperature}, {"steps", c.steps}, {"stopped_early", c.stopped_early}});
  j["chains"] = chains;

  if (opts.include_trace) {
    json tr = json::array();
    for (const auto& t : res.trace) {
      json e;
      e["chain"] = t.chain + 1;
      e["temperature"] = t.temperature;
      e["step"] = t.step;
      e["move"] = to_string(t.move.kind);
      if (t.move.out >= 0) e["out"] = ds.column_ids()[static_cast<std::size_t>(t.move.out)] + 1;
      if (t.move.in >= 0) e["in"] = ds.column_ids()[static_cast<std::size_t>(t.move.in)] + 1;
      e["model_size"] = t.model_size;
      e["log_post"] = t.log_post;
      tr.push_back(std::move(e));
    }
    j["trace"] = tr;
  }
  return j;
}

/// Weighted models stored in a fit document, mapped onto `ds`.
template <class Storage>
std::vector<WeightedModel> weighted_models_from_json(const Dataset<Storage>& ds, const json& fit) {
  std::vector<WeightedModel> out;
  for (const auto& m : fit.at("top_models"))
    out.push_back({model_from_json(ds, m.at("model")), m.at("log_post").get<double>(), m.at("weight").get<double>()});
  if (out.empty()) throw FormatError("fit document has no top models");
  return out;
}

}  // namespace sven
