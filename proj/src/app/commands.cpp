#include "rescav/app/commands.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rescav/app/config.hpp"
#include "rescav/data_io.hpp"
#include "rescav/error.hpp"
#include "rescav/estimator.hpp"
#include "rescav/forecasting.hpp"
#include "rescav/likelihood.hpp"
#include "rescav/log.hpp"
#include "rescav/mcmc.hpp"
#include "rescav/mle.hpp"
#include "rescav/parallel.hpp"
#include "rescav/realized_measures.hpp"
#include "rescav/rng.hpp"
#include "rescav/scoring.hpp"
#include "rescav/simulation.hpp"

namespace rescav::app {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------- context

struct Context {
  fs::path out;
  std::size_t threads = 1;
  std::vector<std::string> outputs;
  std::ostream* log = nullptr;

  void write(const std::string& rel, const std::string& text) {
    write_text(out / rel, text);
    outputs.push_back(rel);
  }
  void write_json(const std::string& rel, const ordered_json& j) { write(rel, j.dump(2) + "\n"); }
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

fs::path require_file(const Config& cfg, const std::string& key) {
  const fs::path p = cfg.require_string(key);
  if (!fs::is_regular_file(p)) throw MissingInput("input file not found: " + p.string());
  return p;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double checked_alpha(const Config& cfg) {
  const double a = cfg.get_double("alpha", 0.01);
  if (!(a > 0.0 && a < 0.5)) throw ConfigError("alpha must lie in (0, 0.5)");
  return a;
}

Family config_family(const Config& cfg, const std::string& key = "model") {
  try {
    return parse_family(cfg.get_string(key, "re-es-caviar-exp"));
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

ordered_json params_json(const ParamVector& p) {
  ordered_json j = ordered_json::object();
  for (Param k : active_params(p.family)) j[std::string(param_name(k))] = p[k];
  return j;
}

ParamVector params_from_json(Family family, const nlohmann::json& j) {
  ParamVector p;
  p.family = family;
  for (Param k : active_params(family)) {
    const std::string name(param_name(k));
    if (!j.contains(name) || !j[name].is_number()) throw SchemaError("params file lacks '" + name + "'");
    p[k] = j[name].get<double>();
  }
  return p;
}

// ---------------------------------------------------------------- inputs

MeasureConfig measure_config(const Config& cfg) {
  MeasureConfig m;
  try {
    m.kind = parse_measure_kind(cfg.get_string("measure", "ssrr"));
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  m.freq = static_cast<int>(cfg.get_size("measure.freq", 5));
  m.offset = static_cast<int>(cfg.get_size("measure.offset", 1));
  m.q = static_cast<int>(cfg.get_size("measure.q", 66));
  const std::string scale = cfg.get_string("measure.scale", "volatility");
  if (scale == "volatility") {
    m.scale = OutputScale::volatility;
  } else if (scale == "variance") {
    m.scale = OutputScale::variance;
  } else {
    throw ConfigError("measure.scale must be volatility or variance");
  }
  try {
    m.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return m;
}

bool is_intraday_file(const fs::path& p) {
  std::ifstream in(p);
  std::string header;
  std::getline(in, header);
  return header.find("minute") != std::string::npos;
}

// Daily CSV as is; intraday CSV converted with the configured measure.
std::vector<DailyRecord> load_series(const Config& cfg, const std::string& key = "input") {
  const fs::path p = require_file(cfg, key);
  if (is_intraday_file(p)) {
    const auto days = load_intraday(p);
    return build_measure_series(days, measure_config(cfg));
  }
  return load_daily(p);
}

struct Columns {
  std::vector<double> r;
  std::vector<double> x;
  SeriesView view(Family f) const { return {r, is_realized(f) ? std::span<const double>(x) : std::span<const double>()}; }
};

Columns columns(std::span<const DailyRecord> data) {
  Columns c;
  for (const auto& d : data) {
    c.r.push_back(d.ret);
    c.x.push_back(d.measure);
  }
  return c;
}

MleConfig ml_config(const Config& cfg, std::size_t threads) {
  MleConfig m;
  m.n_candidates = cfg.get_size("ml.candidates", 0);
  m.beta_candidates = cfg.get_size("ml.beta_candidates", 2000);
  m.max_evals = cfg.get_size("ml.max_evals", 20000);
  m.restarts = cfg.get_size("ml.restarts", 2);
  m.threads = threads;
  return m;
}

McmcConfig mcmc_config(const Config& cfg) {
  McmcConfig m;
  m.epoch_length = cfg.get_size("mcmc.epoch_length", m.epoch_length);
  m.discard = cfg.get_size("mcmc.discard", m.discard);
  m.max_epochs = cfg.get_size("mcmc.max_epochs", m.max_epochs);
  m.imh_length = cfg.get_size("mcmc.imh_length", m.imh_length);
  m.sd_change_threshold = cfg.get_double("mcmc.threshold", m.sd_change_threshold);
  m.prefit_candidates = cfg.get_size("mcmc.prefit_candidates", m.prefit_candidates);
  try {
    m.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return m;
}

const std::set<std::string> kMeasureKeys = {"measure", "measure.freq", "measure.offset", "measure.q", "measure.scale"};
const std::set<std::string> kMlKeys = {"ml.candidates", "ml.beta_candidates", "ml.max_evals", "ml.restarts"};
const std::set<std::string> kMcmcKeys = {"mcmc.epoch_length", "mcmc.discard",    "mcmc.max_epochs",
                                         "mcmc.imh_length",   "mcmc.threshold",  "mcmc.prefit_candidates",
                                         "mcmc.chains",       "mcmc.dump_chain"};
const std::set<std::string> kDgpKeys = {"dgp.omega", "dgp.a",    "dgp.b",    "dgp.xi",
                                        "dgp.phi",   "dgp.tau1", "dgp.tau2", "dgp.sigma_u"};

DgpSpec dgp_config(const Config& cfg) {
  DgpSpec d;
  d.omega = cfg.get_double("dgp.omega", d.omega);
  d.a = cfg.get_double("dgp.a", d.a);
  d.b = cfg.get_double("dgp.b", d.b);
  d.xi = cfg.get_double("dgp.xi", d.xi);
  d.phi = cfg.get_double("dgp.phi", d.phi);
  d.tau1 = cfg.get_double("dgp.tau1", d.tau1);
  d.tau2 = cfg.get_double("dgp.tau2", d.tau2);
  d.sigma_u = cfg.get_double("dgp.sigma_u", d.sigma_u);
  d.n = cfg.get_size("n", d.n);
  try {
    d.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return d;
}

std::unique_ptr<Estimator> make_estimator(const Config& cfg, Family family, std::size_t threads,
                                          const std::string& method_key, bool rolling) {
  const std::string method = cfg.get_string(method_key, "ml");
  if (method == "ml") {
    return std::make_unique<MlEstimator>(ml_config(cfg, threads), rolling && cfg.get_bool("warm_start", true),
                                         cfg.get_size("warm_candidates", 500));
  }
  if (method == "mcmc") return std::make_unique<McmcEstimator>(mcmc_config(cfg));
  if (method == "fixed") {
    const fs::path p = require_file(cfg, "params");
    const auto j = nlohmann::json::parse(read_text(p), nullptr, false);
    if (j.is_discarded() || !j.contains("params")) throw SchemaError("params file must be JSON with a 'params' object");
    return std::make_unique<FixedEstimator>(params_from_json(family, j["params"]));
  }
  throw ConfigError("unknown estimation method '" + method + "'");
}

// ---------------------------------------------------------------- commands

void cmd_measures(const Config& cfg, Context& ctx) {
  const fs::path in = require_file(cfg, "input");
  const MeasureConfig m = measure_config(cfg);
  const auto days = load_intraday(in);
  const auto series = build_measure_series(days, m);
  std::ostringstream ss;
  write_daily(ss, series);
  ctx.write("daily.csv", ss.str());
  *ctx.log << "measures: " << series.size() << " daily records (" << to_string(m.kind) << ")\n";
}

ordered_json truth_json(const TruthRecord& t) {
  ordered_json j;
  j["params"] = params_json(t.params);
  j["var_next"] = t.next.var;
  j["es_next"] = t.next.es;
  if (t.gamma_ar) j["gamma_loglik"] = t.gamma_ar->loglik;
  return j;
}

void cmd_simulate(const Config& cfg, Context& ctx) {
  const std::uint64_t seed = cfg.get_u64("seed", 0);
  const std::size_t reps = cfg.get_size("reps", 1);
  const double alpha = checked_alpha(cfg);
  const std::size_t trials = cfg.get_size("gamma_trials", 5000);
  DgpSpec dgp = dgp_config(cfg);
  if (reps == 0) throw ConfigError("reps must be positive");

  std::vector<std::string> daily(reps), truth(reps), paths(reps);
  parallel_for(reps, ctx.threads, [&](std::size_t r) {
    DgpSpec d = dgp;
    d.seed = derive_seed(seed, r);
    const SimulatedSeries sim = simulate_dgp(d);
    std::ostringstream ds;
    write_daily(ds, sim.records());
    daily[r] = ds.str();

    const TruthRecord exp = make_truth(d, sim, alpha, Family::REESCAV_EXP, 0, 0);
    const TruthRecord ar = make_truth(d, sim, alpha, Family::REESCAV_AR, trials, derive_seed(d.seed, 7));
    ordered_json j;
    j["seed"] = d.seed;
    j["alpha"] = alpha;
    j["n"] = d.n;
    j["sqrt_h_next"] = sim.sqrt_h_next;
    j["es_var_ratio"] = gaussian_es_var_ratio(alpha);
    j["families"][to_string(Family::REESCAV_EXP)] = truth_json(exp);
    j["families"][to_string(Family::REESCAV_AR)] = truth_json(ar);
    truth[r] = j.dump(2) + "\n";

    std::ostringstream ps;
    ps << "date,var,es\n";
    for (std::size_t t = 0; t < sim.returns.size(); ++t) {
      ps << sim.dates[t].to_string() << ',' << format_double(exp.var[t]) << ',' << format_double(exp.es[t]) << '\n';
    }
    paths[r] = ps.str();
  });
  for (std::size_t r = 0; r < reps; ++r) {
    std::ostringstream dir;
    dir << "rep_" << std::setw(4) << std::setfill('0') << r;
    ctx.write(dir.str() + "/daily.csv", daily[r]);
    ctx.write(dir.str() + "/truth.json", truth[r]);
    ctx.write(dir.str() + "/truth_paths.csv", paths[r]);
  }
  *ctx.log << "simulate: " << reps << " replication(s) of " << dgp.n << " days\n";
}

void cmd_fit(const Config& cfg, Context& ctx) {
  const Family family = config_family(cfg);
  const ModelSpec spec{family, checked_alpha(cfg)};
  const std::uint64_t seed = cfg.get_u64("seed", 0);
  const auto data = load_series(cfg);
  if (data.size() < 10) throw DataError("fit needs at least 10 daily records");
  const Columns cols = columns(data);
  const SeriesView view = cols.view(family);
  const InitPolicy init = InitPolicy::empirical(view.returns, spec.alpha);
  const std::string method = cfg.get_string("method", "ml");

  ordered_json j;
  j["model"] = to_string(family);
  j["alpha"] = spec.alpha;
  j["method"] = method;
  j["n"] = data.size();
  ParamVector params;
  RiskForecast fc;
  ordered_json diag = ordered_json::object();
  std::vector<std::string> flags;
  if (method == "ml") {
    MleConfig m = ml_config(cfg, ctx.threads);
    m.seed = seed;
    const MleResult r = fit_ml(spec, view, m);
    params = r.params;
    fc = forecast_one(spec, params, view, filter(spec, params, view, init));
    diag["evaluations"] = r.evaluations;
    diag["converged"] = r.converged;
    diag["best_candidate_loglik"] = r.best_candidate_loglik;
    flags = r.flags;
  } else if (method == "mcmc") {
    McmcConfig m = mcmc_config(cfg);
    m.seed = seed;
    const std::size_t chains = cfg.get_size("mcmc.chains", 1);
    const auto layout = BlockLayout::defaults(family);
    std::vector<McmcResult> results;
    if (chains <= 1) {
      results.push_back(run_mcmc(spec, view, layout, m));
    } else {
      results = run_chains(spec, view, layout, m, chains, ctx.threads);
    }
    const McmcResult& r = results.front();
    params = r.posterior_mean;
    fc = r.forecast;
    ordered_json sd = ordered_json::object(), ess = ordered_json::object();
    for (std::size_t c = 0; c < r.chain.dim(); ++c) {
      const std::string name(param_name(r.chain.params[c]));
      sd[name] = r.posterior_sd[c];
      try {
        ess[name] = effective_sample_size(r.chain.retained(c));
      } catch (const Error&) {
        ess[name] = nullptr;
      }
    }
    diag["posterior_sd"] = sd;
    diag["ess"] = ess;
    diag["burnin_epochs"] = r.burnin_epochs;
    diag["sd_criterion_met"] = r.sd_criterion_met;
    diag["retained"] = r.chain.retained_count();
    ordered_json acc = ordered_json::array();
    for (const auto& e : r.chain.epochs) {
      ordered_json row = ordered_json::array();
      for (std::size_t b = 0; b < e.proposed.size(); ++b) {
        row.push_back(static_cast<double>(e.accepted[b]) / static_cast<double>(e.proposed[b]));
      }
      acc.push_back(row);
    }
    diag["acceptance"] = acc;
    if (results.size() > 1) {
      const auto rhat = gelman_rubin(results);
      ordered_json rj = ordered_json::object();
      for (std::size_t c = 0; c < rhat.size(); ++c) rj[std::string(param_name(r.chain.params[c]))] = rhat[c];
      diag["gelman_rubin"] = rj;
    }
    if (!r.sd_criterion_met) flags.emplace_back("mcmc-max-epochs");
    if (cfg.get_bool("mcmc.dump_chain", false)) {
      std::ostringstream cs;
      write_chain_csv(cs, r.chain);
      ctx.write("chain.csv", cs.str());
    }
  } else {
    throw ConfigError("fit method must be ml or mcmc");
  }
  const LogLik ll = composite_loglik(spec, params, view, init);
  j["params"] = params_json(params);
  j["loglik"] = {{"total", ll.total}, {"al_part", ll.al_part}, {"measurement_part", ll.measurement_part}};
  j["forecast"] = {{"date_after", data.back().date.to_string()}, {"var", fc.var}, {"es", fc.es}};
  j["diagnostics"] = diag;
  j["flags"] = flags;
  ctx.write_json("params.json", j);
  *ctx.log << "fit: " << to_string(family) << " " << method << " loglik " << ll.total << "\n";
}

void cmd_forecast(const Config& cfg, Context& ctx) {
  const Family family = config_family(cfg);
  const ModelSpec spec{family, checked_alpha(cfg)};
  const auto data = load_series(cfg);
  const std::string method = cfg.get_string("method", "ml");
  RollingConfig rc;
  rc.window = cfg.get_size("window", 1000);
  rc.stride = cfg.get_size("stride", method == "mcmc" ? 25 : 1);
  rc.seed = cfg.get_u64("seed", 0);
  rc.threads = ctx.threads;
  rc.model_id = cfg.get_string("model_id", "");
  if (data.size() < rc.window + 1) throw DataError("forecast needs at least window + 1 daily records");
  const auto est = make_estimator(cfg, family, 1, "method", true);
  const auto recs = rolling_forecast(spec, data, *est, rc);
  std::ostringstream ss;
  write_forecasts(ss, recs);
  ctx.write("forecasts.csv", ss.str());
  *ctx.log << "forecast: " << recs.size() << " one-step forecasts\n";
}

std::string safe_name(std::string s) {
  for (char& c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '-' || c == '_' || c == '.')) c = '_';
  }
  return s;
}

void cmd_backtest(const Config& cfg, Context& ctx) {
  const auto data = load_daily(require_file(cfg, "input"));
  const auto files = split_list(cfg.require_string("forecasts"));
  BacktestConfig bc;
  bc.vqr_bootstrap = cfg.get_size("vqr.bootstrap", 200);
  bc.seed = cfg.get_u64("seed", 0);
  bc.threads = ctx.threads;
  std::set<std::string> used;
  for (const auto& f : files) {
    if (!fs::is_regular_file(f)) throw MissingInput("forecast file not found: " + f);
  }
  for (std::size_t i = 0; i < files.size(); ++i) {
    const auto recs = load_forecasts(files[i]);
    const AlignedForecasts al = align_forecasts(recs, data);
    if (al.r.empty()) throw DataError("no forecast in " + files[i] + " matches a return date");
    BacktestReport rep = backtest(al.model, al.r, al.var, al.es, al.alpha, bc);
    if (al.skipped > 0) rep.flags.push_back("skipped-records: " + std::to_string(al.skipped));
    std::string name = "report_" + safe_name(al.model);
    if (!used.insert(name).second) name += "_" + std::to_string(i);
    ctx.write(name + ".json", report_to_json(rep));
    *ctx.log << "backtest: " << al.model << " vrate " << rep.vrate << " joint loss " << rep.joint_loss << "\n";
  }
}

McsResult run_mcs(const std::vector<std::string>& models, const std::vector<std::vector<double>>& losses,
                  McsMethod method, const Config& cfg) {
  McsConfig mc;
  mc.method = method;
  mc.level = cfg.get_double("mcs.level", 0.90);
  mc.bootstrap = cfg.get_size("mcs.bootstrap", 1000);
  mc.block_length = cfg.get_size("mcs.block_length", 0);
  mc.seed = cfg.get_u64("seed", 0);
  return model_confidence_set(models, losses, mc);
}

std::vector<McsMethod> mcs_methods(const Config& cfg) {
  const std::string m = cfg.get_string("mcs.method", "both");
  if (m == "R") return {McsMethod::R};
  if (m == "SQ") return {McsMethod::SQ};
  if (m == "both") return {McsMethod::R, McsMethod::SQ};
  throw ConfigError("mcs.method must be R, SQ or both");
}

void cmd_mcs(const Config& cfg, Context& ctx) {
  const auto data = load_daily(require_file(cfg, "input"));
  const auto files = split_list(cfg.require_string("forecasts"));
  if (files.size() < 2) throw ConfigError("mcs needs at least two forecast files");
  for (const auto& f : files) {
    if (!fs::is_regular_file(f)) throw MissingInput("forecast file not found: " + f);
  }
  std::vector<AlignedForecasts> series;
  for (const auto& f : files) series.push_back(align_forecasts(load_forecasts(f), data));
  // Days on which every model has a valid forecast.
  std::map<Date, std::size_t> count;
  for (const auto& s : series) {
    for (const auto& d : s.dates) ++count[d];
  }
  std::set<Date> common;
  for (const auto& [d, c] : count) {
    if (c == series.size()) common.insert(d);
  }
  if (common.size() < 2) throw DataError("forecast files share fewer than two valid dates");
  std::vector<std::string> models;
  std::vector<std::vector<double>> losses;
  for (const auto& s : series) {
    std::vector<double> r, v, e;
    for (std::size_t t = 0; t < s.dates.size(); ++t) {
      if (common.count(s.dates[t]) == 0) continue;
      r.push_back(s.r[t]);
      v.push_back(s.var[t]);
      e.push_back(s.es[t]);
    }
    models.push_back(s.model);
    losses.push_back(al_log_scores(r, v, e, s.alpha));
  }
  for (McsMethod m : mcs_methods(cfg)) {
    const McsResult res = run_mcs(models, losses, m, cfg);
    const std::string tag = m == McsMethod::R ? "R" : "SQ";
    ctx.write("mcs_" + tag + ".json", mcs_to_json(res));
    *ctx.log << "mcs " << tag << ": " << res.survivors.size() << " of " << models.size() << " models survive\n";
  }
}

void study_simulation(const Config& cfg, Context& ctx) {
  StudyConfig sc;
  sc.reps = cfg.get_size("reps", 50);
  sc.family = config_family(cfg);
  sc.alpha = checked_alpha(cfg);
  sc.dgp = dgp_config(cfg);
  sc.gamma_trials = cfg.get_size("gamma_trials", 5000);
  sc.seed = cfg.get_u64("seed", 0);
  sc.threads = ctx.threads;
  if (!is_realized(sc.family)) throw ConfigError("the simulation study uses a realized family");
  const auto est = make_estimator(cfg, sc.family, 1, "estimator", false);
  const StudyResult res = replication_study(sc, *est);

  ordered_json j;
  j["model"] = to_string(sc.family);
  j["estimator"] = cfg.get_string("estimator", "ml");
  j["reps"] = sc.reps;
  j["failures"] = res.failures;
  ordered_json rows = ordered_json::array();
  std::ostringstream csv;
  csv << "name,truth,mean,rmse\n";
  for (const auto& r : res.rows) {
    rows.push_back({{"name", r.name}, {"truth", r.truth}, {"mean", r.mean}, {"rmse", r.rmse}});
    csv << r.name << ',' << format_double(r.truth) << ',' << format_double(r.mean) << ',' << format_double(r.rmse)
        << '\n';
  }
  j["rows"] = rows;
  ctx.write_json("study.json", j);
  ctx.write("study.csv", csv.str());
  *ctx.log << "study: " << sc.reps << " replications, " << res.failures << " failed\n";
}

// Four-model rolling comparison on synthetic markets with volatility regimes.
void study_market(const Config& cfg, Context& ctx) {
  const std::size_t worlds = cfg.get_size("worlds", 20);
  const std::size_t window = cfg.get_size("window", 1000);
  const std::size_t m = cfg.get_size("m", 500);
  const std::size_t stride = cfg.get_size("stride", 25);
  const double alpha = checked_alpha(cfg);
  const std::uint64_t seed = cfg.get_u64("seed", 0);
  if (worlds == 0 || m < 10) throw ConfigError("market study needs worlds >= 1 and m >= 10");
  DgpSpec base = dgp_config(cfg);
  base.n = window + m;
  base.shifts = {{base.n / 3, cfg.get_double("market.omega_high", 0.04)},
                 {2 * base.n / 3, cfg.get_double("market.omega_low", 0.01)}};
  try {
    base.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  const std::vector<Family> families(kAllFamilies.begin(), kAllFamilies.end());

  struct WorldOut {
    std::string daily;
    std::vector<std::string> forecasts;
    std::map<std::string, double> loss;
    std::vector<std::string> survivors;
    std::size_t failed = 0;
  };
  std::vector<WorldOut> out(worlds);
  for (auto& wo : out) wo.forecasts.resize(families.size());
  MleConfig mlc = ml_config(cfg, 1);
  const std::size_t warm = cfg.get_size("warm_candidates", 500);

  parallel_for(worlds * families.size(), ctx.threads, [&](std::size_t job) {
    const std::size_t w = job / families.size();
    const Family fam = families[job % families.size()];
    DgpSpec d = base;
    d.seed = derive_seed(seed, w);
    const auto records = simulate_dgp(d).records();
    MlEstimator est(mlc, true, warm);
    RollingConfig rc;
    rc.window = window;
    rc.stride = stride;
    rc.seed = derive_seed(d.seed, 1 + static_cast<std::uint64_t>(fam));
    const auto recs = rolling_forecast(ModelSpec{fam, alpha}, records, est, rc);
    std::ostringstream fs_;
    write_forecasts(fs_, recs);
    WorldOut& wo = out[w];
    wo.forecasts[job % families.size()] = fs_.str();
    if (job % families.size() == 0) {
      std::ostringstream ds;
      write_daily(ds, records);
      wo.daily = ds.str();
    }
  });

  ordered_json jworlds = ordered_json::array();
  std::size_t wins = 0;
  for (std::size_t w = 0; w < worlds; ++w) {
    WorldOut& wo = out[w];
    std::ostringstream dir;
    dir << "world_" << std::setw(2) << std::setfill('0') << w;
    ctx.write(dir.str() + "/daily.csv", wo.daily);
    std::istringstream din(wo.daily);
    const auto data = parse_daily(din);
    std::vector<AlignedForecasts> al;
    for (std::size_t f = 0; f < families.size(); ++f) {
      ctx.write(dir.str() + "/forecasts_" + to_string(families[f]) + ".csv", wo.forecasts[f]);
      std::istringstream fin(wo.forecasts[f]);
      al.push_back(align_forecasts(parse_forecasts(fin), data));
    }
    std::map<Date, std::size_t> count;
    for (const auto& a : al) {
      for (const auto& d : a.dates) ++count[d];
    }
    std::vector<std::string> models;
    std::vector<std::vector<double>> losses;
    ordered_json jl = ordered_json::object();
    double re = 0.0, es = 0.0;
    for (std::size_t f = 0; f < families.size(); ++f) {
      std::vector<double> r, v, e;
      for (std::size_t t = 0; t < al[f].dates.size(); ++t) {
        if (count[al[f].dates[t]] != families.size()) continue;
        r.push_back(al[f].r[t]);
        v.push_back(al[f].var[t]);
        e.push_back(al[f].es[t]);
      }
      auto l = al_log_scores(r, v, e, alpha);
      double mean = 0.0;
      for (double x : l) mean += x;
      mean /= static_cast<double>(l.size());
      jl[to_string(families[f])] = mean;
      (is_realized(families[f]) ? re : es) += mean / 2.0;
      models.push_back(to_string(families[f]));
      losses.push_back(std::move(l));
    }
    const bool win = re <= es;
    wins += win ? 1 : 0;
    McsConfig mc;
    mc.bootstrap = cfg.get_size("mcs.bootstrap", 200);
    mc.level = cfg.get_double("mcs.level", 0.90);
    mc.seed = derive_seed(seed, 1000 + w);
    const McsResult mcs = model_confidence_set(models, losses, mc);
    ordered_json jw;
    jw["world"] = w;
    jw["seed"] = derive_seed(seed, w);
    jw["days"] = losses.front().size();
    jw["mean_joint_loss"] = jl;
    jw["re_mean"] = re;
    jw["es_mean"] = es;
    jw["re_wins"] = win;
    jw["mcs_r_survivors"] = mcs.survivors;
    jworlds.push_back(jw);
  }
  ordered_json j;
  j["worlds"] = worlds;
  j["window"] = window;
  j["m"] = m;
  j["stride"] = stride;
  j["re_win_fraction"] = static_cast<double>(wins) / static_cast<double>(worlds);
  j["per_world"] = jworlds;
  ctx.write_json("market.json", j);
  *ctx.log << "market study: realized variants win in " << wins << " of " << worlds << " worlds\n";
}

void cmd_study(const Config& cfg, Context& ctx) {
  const std::string kind = cfg.get_string("kind", "simulation");
  if (kind == "simulation") return study_simulation(cfg, ctx);
  if (kind == "market") return study_market(cfg, ctx);
  throw ConfigError("study kind must be simulation or market");
}

// ---------------------------------------------------------------- table

struct OptionDef {
  std::string key;
  std::string help;
};

struct CommandDef {
  std::string name;
  std::string help;
  bool stochastic;
  std::vector<OptionDef> options;
  std::set<std::string> extra_keys;  // advanced settings, listed after the main options
  std::function<void(const Config&, Context&)> run;
};

std::set<std::string> allowed_keys(const CommandDef& c) {
  std::set<std::string> keys = {"out", "seed", "threads"};
  for (const auto& o : c.options) keys.insert(o.key);
  keys.insert(c.extra_keys.begin(), c.extra_keys.end());
  return keys;
}

std::set<std::string> merged(std::initializer_list<std::set<std::string>> sets) {
  std::set<std::string> out;
  for (const auto& s : sets) out.insert(s.begin(), s.end());
  return out;
}

const std::vector<CommandDef>& commands() {
  static const std::vector<CommandDef> defs = {
      {"measures", "Build a daily realized-measure series from intraday prices", false,
       {{"input", "intraday CSV (date,minute,price[,high,low])"},
        {"measure", "rv|rr|scrv|scrr|ssrv|ssrr|absreturn|dailyrange"}},
       kMeasureKeys, cmd_measures},
      {"simulate", "Simulate Realized-GARCH datasets with their true VaR/ES", true,
       {{"reps", "number of replications"}, {"n", "days per replication"}, {"alpha", "tail level"}},
       merged({kDgpKeys, {"gamma_trials"}}), cmd_simulate},
      {"fit", "Estimate one model on a daily (or intraday) series", true,
       {{"input", "daily or intraday CSV"},
        {"model", "es-caviar-ar|es-caviar-exp|re-es-caviar-ar|re-es-caviar-exp"},
        {"alpha", "tail level"},
        {"method", "ml|mcmc"},
        {"measure", "measure used when the input is intraday"}},
       merged({kMeasureKeys, kMlKeys, kMcmcKeys}), cmd_fit},
      {"forecast", "Rolling one-step-ahead VaR/ES forecasts", true,
       {{"input", "daily or intraday CSV"},
        {"model", "model family"},
        {"alpha", "tail level"},
        {"method", "ml|mcmc|fixed"},
        {"window", "estimation window length"},
        {"stride", "re-estimation stride"},
        {"measure", "measure used when the input is intraday"},
        {"params", "params.json for method=fixed"}},
       merged({kMeasureKeys, kMlKeys, kMcmcKeys, {"warm_start", "warm_candidates", "model_id"}}), cmd_forecast},
      {"backtest", "Score forecast files against realized returns", true,
       {{"input", "daily CSV with realized returns"}, {"forecasts", "comma-separated forecast CSVs"}},
       {"vqr.bootstrap"}, cmd_backtest},
      {"mcs", "Model confidence set over forecast files", true,
       {{"input", "daily CSV with realized returns"}, {"forecasts", "comma-separated forecast CSVs"}},
       {"mcs.method", "mcs.level", "mcs.bootstrap", "mcs.block_length"}, cmd_mcs},
      {"study", "Replication study (kind=simulation) or synthetic market comparison (kind=market)", true,
       {{"kind", "simulation|market"},
        {"reps", "replications (simulation)"},
        {"model", "family (simulation)"},
        {"estimator", "ml|mcmc (simulation)"},
        {"alpha", "tail level"},
        {"worlds", "synthetic markets (market)"}},
       merged({kDgpKeys, kMlKeys, kMcmcKeys,
               {"n", "gamma_trials", "window", "m", "stride", "warm_candidates", "market.omega_high",
                "market.omega_low", "mcs.bootstrap", "mcs.level", "params"}}),
       cmd_study},
  };
  return defs;
}

std::string flag_for(const std::string& key) {
  std::string f = key;
  for (char& c : f) {
    if (c == '.' || c == '_') c = '-';
  }
  return "--" + f;
}

const CommandDef& find_command(const std::string& name) {
  for (const auto& c : commands()) {
    if (c.name == name) return c;
  }
  throw UsageError("unknown command '" + name + "'");
}

// Validates, runs and records one command with a fully resolved config.
void execute(const CommandDef& def, Config cfg, std::ostream& log) {
  cfg.check_keys(allowed_keys(def));
  if (def.stochastic && !cfg.has("seed")) throw UsageError(def.name + " is stochastic and requires --seed");
  Context ctx;
  ctx.out = cfg.require_string("out");
  ctx.threads = cfg.get_size("threads", default_threads());
  if (ctx.threads == 0) ctx.threads = 1;
  ctx.log = &log;
  const std::string started = utc_now();
  def.run(cfg, ctx);
  ordered_json man;
  man["command"] = def.name;
  ordered_json c = ordered_json::object();
  for (const auto& [k, v] : cfg.entries()) c[k] = v;
  man["config"] = c;
  if (cfg.has("seed")) {
    man["seed"] = cfg.get_u64("seed", 0);
  } else {
    man["seed"] = nullptr;
  }
  man["version"] = kVersion;
  man["started"] = started;
  man["finished"] = utc_now();
  man["outputs"] = ctx.outputs;
  write_text(ctx.out / "manifest.json", man.dump(2) + "\n");
}

void rerun(const fs::path& manifest, const std::string& out_override, std::ostream& log) {
  if (!fs::is_regular_file(manifest)) throw MissingInput("manifest not found: " + manifest.string());
  const auto j = nlohmann::json::parse(read_text(manifest), nullptr, false);
  if (j.is_discarded() || !j.contains("command") || !j.contains("config") || !j["config"].is_object()) {
    throw SchemaError("manifest must hold 'command' and a 'config' object");
  }
  Config cfg;
  for (const auto& [k, v] : j["config"].items()) {
    if (!v.is_string()) throw SchemaError("manifest config values must be strings");
    cfg.set(k, v.get<std::string>());
  }
  if (!out_override.empty()) cfg.set("out", out_override);
  execute(find_command(j["command"].get<std::string>()), cfg, log);
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e) != nullptr) return 2;
  if (dynamic_cast<const CLI::ParseError*>(&e) != nullptr) return 2;
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return 3;
  if (dynamic_cast<const InvalidArgument*>(&e) != nullptr) return 3;
  if (dynamic_cast<const MissingInput*>(&e) != nullptr) return 4;
  if (dynamic_cast<const ParseError*>(&e) != nullptr) return 5;
  if (dynamic_cast<const SchemaError*>(&e) != nullptr) return 5;
  if (dynamic_cast<const DataError*>(&e) != nullptr) return 5;
  if (dynamic_cast<const DegenerateQuantile*>(&e) != nullptr) return 6;
  if (dynamic_cast<const NumericalError*>(&e) != nullptr) return 6;
  return 1;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Realized-ES-CAViaR VaR/ES estimation, forecasting and backtesting", "rescav"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  struct Parsed {
    std::string config_file;
    std::vector<std::string> sets;
    std::map<std::string, std::string> values;
    std::string out;
    std::string seed;
    std::string threads;
  };
  std::map<std::string, Parsed> parsed;
  std::map<std::string, CLI::App*> subs;
  for (const auto& def : commands()) {
    CLI::App* sub = app.add_subcommand(def.name, def.help);
    Parsed& p = parsed[def.name];
    sub->add_option("--config", p.config_file, "settings file of key = value lines");
    sub->add_option("--set", p.sets, "extra setting key=value (repeatable)");
    sub->add_option("--out", p.out, "output directory");
    sub->add_option("--seed", p.seed, def.stochastic ? "random seed (required)" : "random seed");
    sub->add_option("--threads", p.threads, "worker threads (default: all cores)");
    for (const auto& o : def.options) sub->add_option(flag_for(o.key), p.values[o.key], o.help);
    for (const auto& k : def.extra_keys) {
      if (!p.values.contains(k)) sub->add_option(flag_for(k), p.values[k], "setting " + k);
    }
    subs[def.name] = sub;
  }
  std::string manifest_path, rerun_out;
  CLI::App* rerun_cmd = app.add_subcommand("rerun", "Repeat a run from its manifest.json");
  rerun_cmd->add_option("--manifest", manifest_path, "manifest.json of an earlier run")->required();
  rerun_cmd->add_option("--out", rerun_out, "output directory (default: the recorded one)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::Success&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (rerun_cmd->parsed()) {
      rerun(manifest_path, rerun_out, out);
      return 0;
    }
    for (const auto& def : commands()) {
      CLI::App* sub = subs[def.name];
      if (!sub->parsed()) continue;
      const Parsed& p = parsed[def.name];
      Config cfg = p.config_file.empty() ? Config{} : Config::load(p.config_file);
      for (const auto& s : p.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + s + "'");
        cfg.set(s.substr(0, eq), s.substr(eq + 1));
      }
      for (const auto& o : def.options) {
        if (sub->count(flag_for(o.key)) > 0) cfg.set(o.key, p.values.at(o.key));
      }
      for (const auto& k : def.extra_keys) {
        if (sub->count(flag_for(k)) > 0) cfg.set(k, p.values.at(k));
      }
      if (sub->count("--out") > 0) cfg.set("out", p.out);
      if (sub->count("--seed") > 0) cfg.set("seed", p.seed);
      if (sub->count("--threads") > 0) cfg.set("threads", p.threads);
      if (!cfg.has("out")) throw UsageError(def.name + " requires --out");
      execute(def, cfg, out);
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 1;
}

}  // namespace rescav::app
