// sven: command-line front end.
//
//   sven fit      --data train.csv --response y [--seed 1] [--output fit.json]
//   sven predict  --fit fit.json --new new.csv [--method both] [--output pred.csv]
//   sven simulate --design iid --n 200 --p 500 --reps 10 [--output metrics.csv]
//   sven bench    --design ar1 --ladder 100,225,400 --reps 10
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "sven.hpp"
#include "sven/report.hpp"

namespace {

using namespace sven;

constexpr int kRuntimeFailure = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using AnyDataset = std::variant<DenseDataset, SparseDataset>;

int default_threads() {
  if (const char* env = std::getenv("SVEN_THREADS")) {
    try {
      const int t = std::stoi(env);
      if (t >= 1) return t;
    } catch (...) {
    }
  }
  return 1;
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

// ---------------------------------------------------------------------------
// Data loading shared by fit and predict
// ---------------------------------------------------------------------------

struct DataArgs {
  std::string dense;
  std::string sparse;
  std::string y_path;
  std::string response;
  bool drop_duplicates = false;
  double min_maf = 0.0;

  std::optional<ColumnFilter> filter() const {
    if (!drop_duplicates && min_maf <= 0.0) return std::nullopt;
    return ColumnFilter{drop_duplicates, min_maf};
  }

  json to_json() const {
    json j;
    if (!dense.empty()) {
      j["format"] = "dense";
      j["path"] = dense;
      j["response"] = response;
    } else {
      j["format"] = "sparse";
      j["path"] = sparse;
      j["y_path"] = y_path;
    }
    j["drop_duplicates"] = drop_duplicates;
    j["min_maf"] = min_maf;
    return j;
  }

  static DataArgs from_json(const json& j) {
    DataArgs a;
    if (j.at("format") == "dense") {
      a.dense = j.at("path");
      a.response = j.at("response");
    } else {
      a.sparse = j.at("path");
      a.y_path = j.at("y_path");
    }
    a.drop_duplicates = j.value("drop_duplicates", false);
    a.min_maf = j.value("min_maf", 0.0);
    return a;
  }

  AnyDataset load() const {
    if (!dense.empty()) {
      if (response.empty()) throw UsageError("--response is required with --data");
      return load_dense(dense, parse_response_column(response), filter());
    }
    if (sparse.empty() || y_path.empty()) throw UsageError("give --data, or --sparse together with --y");
    return load_sparse(sparse, y_path, filter());
  }

  /// Covariate names of the raw input in file order.
  std::vector<std::string> input_columns() const {
    if (!dense.empty()) {
      Table t = read_table(dense);
      const auto ry = resolve_response(t, parse_response_column(response), dense);
      std::vector<std::string> names;
      for (Eigen::Index c = 0; c < t.values.cols(); ++c)
        if (static_cast<std::size_t>(c) != ry)
          names.push_back(t.header.empty() ? std::to_string(c + 1) : t.header[static_cast<std::size_t>(c)]);
      return names;
    }
    std::vector<std::string> names;
    for (Eigen::Index c = 0; c < read_triplets(sparse).cols(); ++c) names.push_back(std::to_string(c + 1));
    return names;
  }
};

void add_data_options(CLI::App* cmd, DataArgs& a) {
  cmd->add_option("--data", a.dense, "Dense CSV/TSV with a response column");
  cmd->add_option("--response", a.response, "Response column name or 1-based index");
  cmd->add_option("--sparse", a.sparse, "Sparse triplet file ('n p nnz' header, 1-based 'row col value')");
  cmd->add_option("--y", a.y_path, "Response file for --sparse, one value per line");
  cmd->add_flag("--drop-duplicate-columns", a.drop_duplicates, "Drop columns identical to an earlier column");
  cmd->add_option("--min-maf", a.min_maf, "Drop genotype columns with minor-allele frequency below this")
      ->check(CLI::Range(0.0, 0.5));
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitArgs {
  DataArgs data;
  std::optional<double> lambda;
  std::optional<double> w;
  SearchConfig cfg;
  int max_model_size = 0;
  bool trace = false;
  std::string output;
};

template <class Storage>
std::string summarize(const Dataset<Storage>& ds, const json& doc) {
  std::ostringstream os;
  os << "n = " << ds.n() << ", p = " << ds.p() << ", lambda = " << doc["hyperparams"]["lambda"].get<double>()
     << ", w = " << doc["hyperparams"]["w"].get<double>() << "\n";
  os << "explored models: " << doc["explored_models"].get<std::size_t>() << ", retained for averaging: "
     << doc["top_models"].size() << "\n";
  os << "MAP model " << doc["map_model"].dump() << " log posterior " << doc["map_log_post"].get<double>() << "\n";
  os << "WAM model " << doc["wam_model"].dump() << "\n";
  return os.str();
}

int cmd_fit(const FitArgs& a) {
  const AnyDataset any = a.data.load();
  return std::visit(
      [&](const auto& ds) {
        const double nd = static_cast<double>(ds.n()), pd = static_cast<double>(ds.p());
        // The default w only exists when sqrt(n) < p, so it is computed on demand.
        const double w = a.w ? *a.w : default_hyperparams(ds.n(), ds.p()).primary.w();
        const Hyperparams hp(a.lambda.value_or(nd / (pd * pd)), w);
        SearchConfig cfg = a.cfg;
        cfg.max_model_size = static_cast<std::size_t>(a.max_model_size);
        const SearchResult res = run_sven(ds, hp, cfg);
        json doc;
        doc["data"] = a.data.to_json();
        doc["input_columns"] = a.data.input_columns();
        const json body = search_result_to_json(ds, hp, cfg, res, {a.trace});
        for (const auto& [k, v] : body.items()) doc[k] = v;
        write_text(a.output, doc.dump(2) + "\n");
        (a.output.empty() || a.output == "-" ? std::cerr : std::cout) << summarize(ds, doc);
        return 0;
      },
      any);
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

struct PredictArgs {
  std::string fit;
  std::string new_data;
  DataArgs data;  // overrides the training data recorded in the fit
  std::string method = "both";
  double alpha = 0.05;
  int n_mc = 10000;
  std::uint64_t seed = 1;
  std::string output;
};

/// New covariates aligned with the dataset's columns.
template <class Storage>
DenseMatrix align_new_covariates(const Dataset<Storage>& ds, const Table& t,
                                 const std::vector<std::string>& input_columns, const std::string& response,
                                 const std::string& path) {
  std::vector<Eigen::Index> cols;
  if (!t.header.empty()) {
    std::vector<std::string> got;
    for (std::size_t c = 0; c < t.header.size(); ++c)
      if (t.header[c] != response) {
        got.push_back(t.header[c]);
        cols.push_back(static_cast<Eigen::Index>(c));
      }
    if (got != input_columns) {
      std::vector<std::string> missing, extra;
      for (const auto& n : input_columns)
        if (std::find(got.begin(), got.end(), n) == got.end()) missing.push_back(n);
      for (const auto& n : got)
        if (std::find(input_columns.begin(), input_columns.end(), n) == input_columns.end()) extra.push_back(n);
      std::string msg = path + ": columns do not match training covariates";
      auto join = [](const std::vector<std::string>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size() && i < 10; ++i) s += (i ? ", " : "") + v[i];
        if (v.size() > 10) s += ", ...";
        return s;
      };
      if (!missing.empty()) msg += "; missing: " + join(missing);
      if (!extra.empty()) msg += "; unexpected: " + join(extra);
      if (missing.empty() && extra.empty()) msg += "; same names in a different order";
      throw FormatError(msg);
    }
  } else {
    if (t.values.cols() != static_cast<Eigen::Index>(input_columns.size()))
      throw FormatError(path + ": " + std::to_string(t.values.cols()) + " columns but the training data has " +
                        std::to_string(input_columns.size()) + " covariates");
    for (Eigen::Index c = 0; c < t.values.cols(); ++c) cols.push_back(c);
  }
  DenseMatrix z(t.values.rows(), ds.p());
  for (Eigen::Index j = 0; j < ds.p(); ++j) z.col(j) = t.values.col(cols[ds.column_ids()[static_cast<std::size_t>(j)]]);
  return z;
}

int cmd_predict(const PredictArgs& a) {
  if (a.fit.empty() || a.new_data.empty()) throw UsageError("predict needs --fit and --new");
  if (a.method != "zpi" && a.method != "mc" && a.method != "both")
    throw UsageError("--method must be zpi, mc or both");
  std::ifstream in(a.fit);
  if (!in) throw Error("cannot open " + a.fit);
  const json fit = json::parse(in);
  const DataArgs data = (!a.data.dense.empty() || !a.data.sparse.empty()) ? a.data : DataArgs::from_json(fit.at("data"));
  const AnyDataset any = data.load();
  const auto input_columns = fit.contains("input_columns") ? fit["input_columns"].get<std::vector<std::string>>()
                                                            : data.input_columns();
  return std::visit(
      [&](const auto& ds) {
        const Hyperparams hp(fit.at("hyperparams").at("lambda").get<double>(),
                             fit.at("hyperparams").at("w").get<double>());
        const auto weighted = weighted_models_from_json(ds, fit);
        const Table t = read_table(a.new_data);
        const DenseMatrix z_star = align_new_covariates(ds, t, input_columns, data.response, a.new_data);
        const auto states = factorize(ds, hp, weighted);
        const auto zpi = z_prediction_interval(ds, states, z_star, a.alpha);
        std::vector<McInterval> mc;
        if (a.method != "zpi") mc = mc_predict(ds, states, z_star, a.n_mc, a.alpha, a.seed);

        std::ostringstream os;
        os << "row,mean,variance";
        if (a.method != "mc") os << ",zpi_lo,zpi_hi";
        if (a.method != "zpi") os << ",mcpi_lo,mcpi_hi";
        os << "\n";
        for (std::size_t r = 0; r < zpi.size(); ++r) {
          os << r + 1 << ',' << format_double(zpi[r].mean) << ',' << format_double(zpi[r].variance);
          if (a.method != "mc") os << ',' << format_double(zpi[r].lo) << ',' << format_double(zpi[r].hi);
          if (a.method != "zpi") os << ',' << format_double(mc[r].lo) << ',' << format_double(mc[r].hi);
          os << "\n";
        }
        write_text(a.output, os.str());
        return 0;
      },
      any);
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct DesignArgs {
  std::string design_file;
  std::string design = "iid";
  Eigen::Index n = 200;
  Eigen::Index p = 500;
  double rho = 0.6;
  int k_factors = 2;
  double r2 = 0.9;
  std::string beta;
};

void add_design_options(CLI::App* cmd, DesignArgs& d) {
  cmd->add_option("--design-file", d.design_file, "Design spec as key=value lines; flags override it");
  cmd->add_option("--design", d.design, "iid, cs, ar1, factor, group or extreme");
  cmd->add_option("--n", d.n, "Training and test rows")->check(CLI::PositiveNumber);
  cmd->add_option("--p", d.p, "Candidate predictors")->check(CLI::PositiveNumber);
  cmd->add_option("--rho", d.rho, "Correlation for cs and ar1")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--k-factors", d.k_factors, "Factor count")->check(CLI::PositiveNumber);
  cmd->add_option("--r2", d.r2, "Theoretical R^2")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--beta", d.beta, "Coefficients as index:value,... (1-based)");
}

DesignSpec build_design(const CLI::App* cmd, const DesignArgs& d, std::uint64_t seed) {
  DesignSpec spec;
  spec.n = 200;
  spec.p = 500;
  if (!d.design_file.empty()) {
    std::ifstream in(d.design_file);
    if (!in) throw Error("cannot open " + d.design_file);
    spec = parse_design_config(in, spec);
  }
  auto given = [&](const char* name) { return cmd->count(name) > 0 || d.design_file.empty(); };
  if (given("--design")) {
    try {
      spec.kind = parse_design_kind(d.design);
    } catch (const PreconditionError& e) {
      throw UsageError(e.what());
    }
  }
  if (given("--n")) spec.n = d.n;
  if (given("--p")) spec.p = d.p;
  if (given("--rho")) spec.rho = d.rho;
  if (given("--k-factors")) spec.k_factors = d.k_factors;
  if (given("--r2")) spec.r_squared = d.r2;
  if (cmd->count("--beta")) {
    std::istringstream line("beta = " + d.beta);
    spec.beta = parse_design_config(line).beta;
  }
  spec.seed = seed;
  try {
    spec.validate();
  } catch (const PreconditionError& e) {
    throw UsageError(e.what());
  }
  return spec;
}

struct SimulateArgs {
  DesignArgs design;
  int reps = 10;
  std::uint64_t seed = 1;
  int m = 9;
  int n_iter = 200;
  bool alt_hyper = false;
  std::optional<double> lambda;
  std::optional<double> w;
  std::string selector = "map";
  std::string save_data;
  int threads = 1;
  std::string output;
};

void save_replicate(const std::string& dir, int rep, const SimulatedData& d) {
  std::filesystem::create_directories(dir);
  auto dump = [&](const std::string& name, const DenseMatrix& z, const Vector& y) {
    std::ofstream out(std::filesystem::path(dir) / name);
    out << "y";
    for (Eigen::Index j = 0; j < z.cols(); ++j) out << ",x" << j + 1;
    out << "\n";
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      out << format_double(y[i]);
      for (Eigen::Index j = 0; j < z.cols(); ++j) out << ',' << format_double(z(i, j));
      out << "\n";
    }
  };
  dump("train_" + std::to_string(rep) + ".csv", d.z_train, d.y_train);
  dump("test_" + std::to_string(rep) + ".csv", d.z_test, d.y_test);
}

int cmd_simulate(const CLI::App* cmd, const SimulateArgs& a) {
  if (a.selector != "map" && a.selector != "wam") throw UsageError("--selector must be map or wam");
  const DesignSpec base = build_design(cmd, a.design, a.seed);
  if (a.alt_hyper && base.kind != DesignKind::group) throw UsageError("--alt-hyper applies to the group design only");

  std::ostringstream os;
  os << "replicate,mspe,mse_beta,coverage,model_size,fdr,fnr,jaccard\n";
  SelectionMetrics sum;
  for (int r = 0; r < a.reps; ++r) {
    DesignSpec spec = base;
    spec.seed = derive_seed(a.seed, {static_cast<std::uint64_t>(r)});
    const SimulatedData d = generate(spec);
    if (!a.save_data.empty()) save_replicate(a.save_data, r + 1, d);
    const DenseDataset ds(d.z_train, d.y_train);
    const auto defaults = default_hyperparams(ds.n(), ds.p(), spec.kind);
    const Hyperparams& base_hp = a.alt_hyper ? *defaults.alternative : defaults.primary;
    const Hyperparams hp(a.lambda.value_or(base_hp.lambda()), a.w.value_or(base_hp.w()));
    SearchConfig cfg;
    cfg.m = a.m;
    cfg.n_iter = a.n_iter;
    cfg.seed = derive_seed(a.seed, {static_cast<std::uint64_t>(r), 1});
    cfg.threads = a.threads;
    const SearchResult res = run_sven(ds, hp, cfg);
    Model selected = res.map_model;
    if (a.selector == "wam") selected = wam(top_k_weights(res.top_models, cfg.log_eps), ds.p()).wam_model;
    const auto fit = ridge_fit(ds, hp, selected);
    const auto m = evaluate(fit, d.beta_full, d.true_support, d.z_test, d.y_test);
    os << r + 1 << ',' << format_double(m.mspe) << ',' << format_double(m.mse_beta) << ',' << m.coverage << ','
       << m.model_size << ',' << format_double(m.fdr) << ',' << format_double(m.fnr) << ','
       << format_double(m.jaccard) << "\n";
    sum.mspe += m.mspe;
    sum.mse_beta += m.mse_beta;
    sum.coverage += m.coverage;
    sum.model_size += m.model_size;
    sum.fdr += m.fdr;
    sum.fnr += m.fnr;
    sum.jaccard += m.jaccard;
  }
  const double k = std::max(1, a.reps);
  os << "mean," << format_double(sum.mspe / k) << ',' << format_double(sum.mse_beta / k) << ','
     << format_double(sum.coverage / k) << ',' << format_double(sum.model_size / k) << ','
     << format_double(sum.fdr / k) << ',' << format_double(sum.fnr / k) << ',' << format_double(sum.jaccard / k)
     << "\n";
  write_text(a.output, os.str());
  return 0;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchArgs {
  DesignArgs design;
  std::vector<int> ladder{100, 225, 400};
  int reps = 10;
  std::uint64_t seed = 1;
  int m = 3;
  int n_iter = 50;
  int threads = 1;
  std::string output;
};

/// Wall time from the start of the search until the final MAP model was
/// first scored, with chains laid end to end in temperature order.
double time_to_map(const SearchResult& res) {
  const auto first = res.top_models.find(res.map_model);
  if (!first) return 0.0;
  double t = 0.0;
  for (int c = 0; c < first->chain; ++c) t += res.chains[static_cast<std::size_t>(c)].elapsed_ms;
  if (first->step == 0) return t;
  for (const auto& e : res.trace)
    if (e.chain == first->chain && e.step == first->step) return t + e.elapsed_ms;
  return t;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int cmd_bench(const CLI::App* cmd, BenchArgs a) {
  if (!cmd->count("--design")) a.design.design = "ar1";
  std::ostringstream os;
  os << "n,p,median_hit_ms,map_size\n";
  for (int n : a.ladder) {
    if (n < 4) throw UsageError("ladder sizes must be >= 4");
    DesignArgs d = a.design;
    d.n = n;
    d.p = static_cast<Eigen::Index>(std::llround(2.0 * std::pow(static_cast<double>(n), 1.5)));
    std::vector<double> hits, sizes;
    for (int r = 0; r < a.reps; ++r) {
      const DesignSpec spec = build_design(cmd, d, derive_seed(a.seed, {static_cast<std::uint64_t>(n),
                                                                        static_cast<std::uint64_t>(r)}));
      const SimulatedData data = generate(spec);
      const DenseDataset ds(data.z_train, data.y_train);
      const Hyperparams hp = default_hyperparams(ds.n(), ds.p()).primary;
      SearchConfig cfg;
      cfg.m = a.m;
      cfg.n_iter = a.n_iter;
      cfg.seed = spec.seed;
      cfg.threads = a.threads;
      const SearchResult res = run_sven(ds, hp, cfg);
      hits.push_back(time_to_map(res));
      sizes.push_back(static_cast<double>(res.map_model.size()));
    }
    os << n << ',' << d.p << ',' << format_double(median(hits)) << ',' << median(sizes) << "\n";
  }
  write_text(a.output, os.str());
  return 0;
}

// ---------------------------------------------------------------------------
// Config files: "key = value" lines giving defaults for a subcommand's flags.
// Flags on the command line win.
// ---------------------------------------------------------------------------

void add_config_option(CLI::App* cmd) {
  cmd->add_option("--config", "key=value file with defaults for any flag of this command")
      ->check(CLI::ExistingFile);
}

void apply_config(CLI::App* cmd) {
  const auto* cfg = cmd->get_option("--config");
  if (cfg->count() == 0) return;
  const auto path = cfg->as<std::string>();
  CLI::ConfigINI ini;
  for (const auto& item : ini.from_file(path)) {
    if (item.name == "++" || item.name == "--" || !item.parents.empty()) continue;
    std::string key = item.name;
    std::replace(key.begin(), key.end(), '_', '-');
    if (key == "config") throw UsageError(path + ": config files cannot include other config files");
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt == nullptr) throw UsageError(path + ": unknown key '" + item.name + "' for '" + cmd->get_name() + "'");
    if (opt->count() > 0) continue;
    try {
      for (const auto& v : item.inputs) opt->add_result(v);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw UsageError(path + ": " + item.name + ": " + e.what());
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variable selection for high-dimensional linear regression"};
  app.require_subcommand(1);
  const int env_threads = default_threads();

  FitArgs fit;
  fit.cfg.threads = env_threads;
  auto* fit_cmd = app.add_subcommand("fit", "Run the tempered shotgun search and write the fit as JSON");
  add_config_option(fit_cmd);
  add_data_options(fit_cmd, fit.data);
  fit_cmd->add_option("--lambda", fit.lambda, "Slab precision (default n/p^2)")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--w", fit.w, "Prior inclusion probability (default sqrt(n)/p)")
      ->check(CLI::Range(0.0, 1.0) & !CLI::IsMember({"0", "1"}));
  fit_cmd->add_option("--m", fit.cfg.m, "Number of temperatures")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--n-iter", fit.cfg.n_iter, "Iterations per temperature")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--screen-cap", fit.cfg.screen_cap, "Screened models per step")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--log-rho", fit.cfg.log_rho, "Screening log threshold")->check(CLI::Range(-1e300, -1e-300));
  fit_cmd->add_option("--log-eps", fit.cfg.log_eps, "Averaging log tolerance")->check(CLI::Range(-1e300, -1e-300));
  fit_cmd->add_option("--seed", fit.cfg.seed, "Random seed");
  fit_cmd->add_option("--max-model-size", fit.max_model_size, "Model size cap (default min(n-2, 200))")
      ->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--threads", fit.cfg.threads, "Worker threads (env SVEN_THREADS)")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--block", fit.cfg.block, "Columns per scan block")->check(CLI::PositiveNumber);
  fit_cmd->add_flag("--trace", fit.trace, "Include the iteration trace in the JSON");
  fit_cmd->add_option("--output,-o", fit.output, "Output JSON path (default stdout)");

  PredictArgs pred;
  auto* pred_cmd = app.add_subcommand("predict", "Prediction intervals at new covariate rows");
  add_config_option(pred_cmd);
  pred_cmd->add_option("--fit", pred.fit, "JSON written by 'fit'");
  pred_cmd->add_option("--new", pred.new_data, "CSV of new covariate rows, training column order");
  add_data_options(pred_cmd, pred.data);
  pred_cmd->add_option("--method", pred.method, "zpi, mc or both");
  pred_cmd->add_option("--alpha", pred.alpha, "Miscoverage level")->check(CLI::Range(0.0, 1.0));
  pred_cmd->add_option("--n-mc", pred.n_mc, "Monte Carlo draws")->check(CLI::Range(1000, 100000000));
  pred_cmd->add_option("--seed", pred.seed, "Random seed");
  pred_cmd->add_option("--output,-o", pred.output, "Output CSV path (default stdout)");

  SimulateArgs sim;
  sim.threads = env_threads;
  auto* sim_cmd = app.add_subcommand("simulate", "Replicate generate -> fit -> evaluate on a simulation design");
  add_config_option(sim_cmd);
  add_design_options(sim_cmd, sim.design);
  sim_cmd->add_option("--reps", sim.reps, "Replicates")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", sim.seed, "Random seed");
  sim_cmd->add_option("--m", sim.m, "Number of temperatures")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--n-iter", sim.n_iter, "Iterations per temperature")->check(CLI::PositiveNumber);
  sim_cmd->add_flag("--alt-hyper", sim.alt_hyper, "Group design: use lambda=200, w=0.02");
  sim_cmd->add_option("--lambda", sim.lambda, "Override lambda")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--w", sim.w, "Override w")->check(CLI::Range(0.0, 1.0));
  sim_cmd->add_option("--selector", sim.selector, "Model evaluated: map or wam");
  sim_cmd->add_option("--save-data", sim.save_data, "Directory for replicate train/test CSVs");
  sim_cmd->add_option("--threads", sim.threads, "Worker threads (env SVEN_THREADS)")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--output,-o", sim.output, "Output CSV path (default stdout)");

  BenchArgs bench;
  bench.threads = env_threads;
  auto* bench_cmd = app.add_subcommand("bench", "Median time to first reach the MAP model, p = 2 n^1.5");
  add_config_option(bench_cmd);
  add_design_options(bench_cmd, bench.design);
  bench_cmd->add_option("--ladder", bench.ladder, "Values of n")->delimiter(',');
  bench_cmd->add_option("--reps", bench.reps, "Replicates per size")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench.seed, "Random seed");
  bench_cmd->add_option("--m", bench.m, "Number of temperatures")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--n-iter", bench.n_iter, "Iterations per temperature")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--threads", bench.threads, "Worker threads (env SVEN_THREADS)")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--output,-o", bench.output, "Output CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    for (auto* cmd : {fit_cmd, pred_cmd, sim_cmd, bench_cmd})
      if (*cmd) apply_config(cmd);
    if (*fit_cmd) return cmd_fit(fit);
    if (*pred_cmd) return cmd_predict(pred);
    if (*sim_cmd) return cmd_simulate(sim_cmd, sim);
    if (*bench_cmd) return cmd_bench(bench_cmd, bench);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kUsage;
}
