// fbr: simulate datasets, fit functional regression models, re-summarize
// saved draws, and rerun simulation cells against published values.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>

#include "fbr/io.hpp"
#include "fbr/models.hpp"
#include "fbr/simlab.hpp"
#include "reference_cells.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace fbr;

namespace {

struct FitOptions {
  std::string model = "sofr-gaussian";
  std::string data;
  std::string out = "fit";
  int k = 10;
  std::string bs = "open";
  int hazard_df = 5;
  double pve = 0.99;
  int max_components = 10;
  double alpha = 0.05;
  bool non_centered = false;
  SamplerConfig sampler;
};

struct SimulateOptions {
  ScenarioConfig cfg;
  std::string model = "sofr-gaussian";
  std::string out = "sim";
  int replicate = 0;
};

struct SummarizeOptions {
  std::string draws_dir;
  std::string out;
  double alpha = 0.05;
};

struct TableOptions {
  ScenarioConfig cfg;
  std::string model = "sofr-gaussian";
  std::string out;
};

SplineKind parse_bs(const std::string& s) {
  if (s == "open") return SplineKind::open_cubic;
  if (s == "cyclic") return SplineKind::cyclic_cubic;
  throw SpecError("--bs must be 'open' or 'cyclic', got '" + s + "'");
}

std::string bs_name(SplineKind k) { return k == SplineKind::open_cubic ? "open" : "cyclic"; }

json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Eigen::VectorXd(m.row(i).transpose())));
  return rows;
}

Eigen::VectorXd vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd matrix_from(const json& j) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), j.empty() ? 0 : static_cast<Eigen::Index>(j[0].size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i) = vector_from(j[static_cast<std::size_t>(i)]).transpose();
  return m;
}

/// JSON number or null for non-finite values.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_json(const fs::path& path, const json& j) {
  auto f = detail::open_out(path.string());
  f << std::setw(2) << j << '\n';
}

json read_json(const fs::path& path) {
  auto f = detail::open_in(path.string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw IngestError("'" + path.string() + "': " + e.what());
  }
}

void write_curves(const fs::path& path, const CurveDraws& c, double alpha) {
  auto f = detail::open_out(path.string());
  write_curve_table(f, c, alpha);
}

// ---------------------------------------------------------------------------
// Everything needed to turn saved draws back into curves and summaries.

struct Fitted {
  ModelKind model = ModelKind::sofr_gaussian;
  SplineSpec spec;
  Eigen::VectorXd grid;
  std::optional<ReparamMap> map;
  std::optional<HazardBasis> hazard;
  std::vector<std::string> covariate_names;  ///< gamma (scalar models) or predictors (FoSR)
  double alpha = 0.05;
  SamplerConfig sampler;
  std::string data_path;
};

json manifest(const Fitted& f, const PosteriorDraws& d) {
  json j;
  j["format"] = "fbr-fit-1";
  j["model"] = to_string(f.model);
  j["data"] = f.data_path;
  j["alpha"] = f.alpha;
  j["draws"] = {{"file", "draws.bin"},
                {"chains", d.num_chains()},
                {"draws_per_chain", d.draws_per_chain()},
                {"dim", d.dim()}};
  json layout = json::array();
  for (const auto& s : d.layout.slices()) layout.push_back({{"name", s.name}, {"offset", s.offset}, {"size", s.size}});
  j["layout"] = layout;
  j["spline"] = {{"bs", bs_name(f.spec.kind)},
                 {"num_basis", f.spec.num_basis},
                 {"lower", f.spec.lower},
                 {"upper", f.spec.upper}};
  j["grid"] = to_json(f.grid);
  j["names"] = f.covariate_names;
  if (f.map) j["reparam"] = {{"U", to_json(f.map->U)}, {"v_diag", to_json(f.map->v_diag)}, {"rank", f.map->rank}};
  if (f.hazard)
    j["hazard"] = {{"df", f.hazard->df},
                   {"degree", f.hazard->degree},
                   {"lower", f.hazard->lower},
                   {"upper", f.hazard->upper},
                   {"knots", f.hazard->knots}};
  j["sampler"] = {{"iter", f.sampler.n_iter},
                  {"warmup", f.sampler.n_warmup},
                  {"chains", f.sampler.n_chains},
                  {"seed", f.sampler.seed},
                  {"target_accept", f.sampler.target_accept}};
  json stats = json::array();
  for (const auto& s : d.stats)
    stats.push_back({{"step_size", s.step_size},
                     {"mean_accept", s.mean_accept},
                     {"divergences", s.divergences},
                     {"leapfrogs", s.leapfrogs}});
  j["chain_stats"] = stats;
  return j;
}

std::pair<Fitted, PosteriorDraws> load_fit(const fs::path& dir) {
  const json j = read_json(dir / "manifest.json");
  try {
    Fitted f;
    f.model = parse_model_kind(j.at("model").get<std::string>());
    f.data_path = j.at("data").get<std::string>();
    f.alpha = j.at("alpha").get<double>();
    const json& sp = j.at("spline");
    f.spec = {parse_bs(sp.at("bs")), sp.at("num_basis").get<int>(), sp.at("lower").get<double>(),
              sp.at("upper").get<double>()};
    f.grid = vector_from(j.at("grid"));
    f.covariate_names = j.at("names").get<std::vector<std::string>>();
    if (j.contains("reparam")) {
      ReparamMap m;
      m.U = matrix_from(j["reparam"].at("U"));
      m.v_diag = vector_from(j["reparam"].at("v_diag"));
      m.rank = j["reparam"].at("rank").get<int>();
      f.map = std::move(m);
    }
    if (j.contains("hazard")) {
      HazardBasis h;
      h.df = j["hazard"].at("df").get<int>();
      h.degree = j["hazard"].at("degree").get<int>();
      h.lower = j["hazard"].at("lower").get<double>();
      h.upper = j["hazard"].at("upper").get<double>();
      h.knots = j["hazard"].at("knots").get<std::vector<double>>();
      f.hazard = std::move(h);
    }
    const json& s = j.at("sampler");
    f.sampler.n_iter = s.at("iter").get<int>();
    f.sampler.n_warmup = s.at("warmup").get<int>();
    f.sampler.n_chains = s.at("chains").get<int>();
    f.sampler.seed = s.at("seed").get<std::uint64_t>();
    f.sampler.target_accept = s.at("target_accept").get<double>();

    PosteriorDraws d;
    for (const auto& sl : j.at("layout")) d.layout.add(sl.at("name").get<std::string>(), sl.at("size").get<Eigen::Index>());
    d.chains = read_draws((dir / j.at("draws").at("file").get<std::string>()).string());
    for (const auto& c : d.chains)
      if (c.cols() != d.dim()) throw ShapeError("draw file dimension does not match the manifest layout");
    for (const auto& cs : j.at("chain_stats")) {
      ChainStats st;
      st.step_size = cs.at("step_size").get<double>();
      st.mean_accept = cs.at("mean_accept").get<double>();
      st.divergences = cs.at("divergences").get<int>();
      st.leapfrogs = cs.at("leapfrogs").get<long long>();
      d.stats.push_back(st);
    }
    compute_diagnostics(d);
    return {std::move(f), std::move(d)};
  } catch (const json::exception& e) {
    throw IngestError("malformed manifest: " + std::string(e.what()));
  }
}

json scalar_json(const ScalarSummary& s) {
  return {{"name", s.name},  {"estimate", s.mean}, {"sd", s.sd},       {"q2.5", s.q025},
          {"q97.5", s.q975}, {"rhat", num(s.rhat)}, {"ess", num(s.ess)}};
}

/// Writes curve tables, the scalar record and the diagnostics record.
void write_summaries(const fs::path& out, const Fitted& f, const PosteriorDraws& d) {
  const SplineSystem system = detail::system_on(f.spec, f.grid);

  if (f.model == ModelKind::fosr) {
    const Eigen::Index p = d.layout["log_sigma_p"].size;
    for (Eigen::Index k = 0; k < p; ++k) {
      const auto uk = static_cast<std::size_t>(k);
      const std::string name = uk < f.covariate_names.size() ? f.covariate_names[uk] : "x" + std::to_string(k + 1);
      write_curves(out / ("beta_" + name + ".csv"), reconstruct_fosr_beta(d, system, k), f.alpha);
    }
  } else {
    write_curves(out / "beta.csv", reconstruct_beta(d, *f.map, system), f.alpha);
  }
  if (f.hazard) {
    const Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(101, f.hazard->lower, f.hazard->upper);
    write_curves(out / "survival.csv", survival_curve(d, *f.hazard, times, 0.0), f.alpha);
  }

  json coefs = json::array();
  if (d.layout.has("eta0"))
    for (const auto& s : summarize_slice(d, "eta0")) coefs.push_back(scalar_json(s));
  if (d.layout.has("gamma")) {
    auto g = summarize_slice(d, "gamma");
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (k < f.covariate_names.size()) g[k].name = f.covariate_names[k];
      coefs.push_back(scalar_json(g[k]));
    }
  }
  json hyper = json::array();
  for (const char* name : {"log_sigma_b", "log_a", "log_sigma_e", "log_lambda", "log_sigma_p"}) {
    if (!d.layout.has(name)) continue;
    for (const auto& s : summarize_slice(d, name)) hyper.push_back(scalar_json(s));
  }
  write_json(out / "scalars.json", {{"model", to_string(f.model)}, {"coefficients", coefs}, {"hyperparameters", hyper}});

  double max_rhat = 0.0, min_ess = std::numeric_limits<double>::infinity();
  json params = json::array();
  for (Eigen::Index k = 0; k < d.dim(); ++k) {
    if (std::isfinite(d.rhat(k))) max_rhat = std::max(max_rhat, d.rhat(k));
    if (std::isfinite(d.ess(k))) min_ess = std::min(min_ess, d.ess(k));
    const Slice& s = d.layout[d.layout.slice_of(k)];
    const std::string label = s.size == 1 ? s.name : s.name + "[" + std::to_string(k - s.offset) + "]";
    params.push_back({{"name", label}, {"rhat", num(d.rhat(k))}, {"ess", num(d.ess(k))}});
  }
  json chains = json::array();
  for (const auto& s : d.stats)
    chains.push_back({{"step_size", s.step_size}, {"mean_accept", s.mean_accept}, {"divergences", s.divergences}});
  write_json(out / "diagnostics.json", {{"max_rhat", num(max_rhat)},
                                        {"min_ess", num(min_ess)},
                                        {"divergences", d.total_divergences()},
                                        {"chains", chains},
                                        {"parameters", params}});
}

// ---------------------------------------------------------------------------

int cmd_simulate(const SimulateOptions& o) {
  ScenarioConfig cfg = o.cfg;
  cfg.model = parse_model_kind(o.model);
  cfg.validate();
  const fs::path out(o.out);
  fs::create_directories(out);
  std::mt19937_64 rng = make_stream(cfg.seed, static_cast<std::uint64_t>(o.replicate));
  Eigen::VectorXd grid, beta;
  if (cfg.model == ModelKind::fosr) {
    const SimulatedResponse sim = gen_fosr(cfg, rng);
    write_response_dataset((out / "data.csv").string(), sim.data);
    grid = sim.data.grid;
    beta = sim.beta;
  } else {
    const SimulatedData sim = is_survival(cfg.model) ? gen_cox(cfg, rng) : gen_sofr(cfg, rng);
    write_dataset((out / "data.csv").string(), sim.data);
    grid = sim.data.grid;
    beta = sim.beta;
  }
  auto f = detail::open_out((out / "truth.csv").string());
  f << "t,beta\n";
  for (Eigen::Index m = 0; m < grid.size(); ++m) f << format_double(grid(m)) << ',' << format_double(beta(m)) << '\n';
  std::cout << json{{"model", to_string(cfg.model)}, {"n", cfg.n}, {"data", (out / "data.csv").string()}}.dump() << '\n';
  return 0;
}

int cmd_fit(const FitOptions& o) {
  if (o.data.empty()) throw SpecError("--data is required");
  Fitted f;
  f.model = parse_model_kind(o.model);
  f.alpha = o.alpha;
  f.sampler = o.sampler;
  f.data_path = o.data;
  if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw SpecError("--alpha must lie in (0, 1)");
  const SplineKind kind = parse_bs(o.bs);
  const fs::path out(o.out);

  PosteriorDraws draws;
  auto run = [&](const auto& prob) { return detail::sample(prob, o.sampler, o.non_centered); };
  if (f.model == ModelKind::fosr) {
    const FunctionalResponseDataset data = read_response_dataset(o.data);
    f.spec = spline_spec_for(data.grid, kind, o.k);
    f.grid = data.grid;
    f.covariate_names = data.predictor_names;
    const auto prob = prepare_fosr(data, f.spec, o.pve, o.max_components);
    draws = run(prob);
  } else {
    const FunctionalDataset data = read_dataset(o.data, {is_survival(f.model)});
    f.spec = spline_spec_for(data.grid, kind, o.k);
    f.grid = data.grid;
    f.covariate_names = data.covariate_names;
    switch (f.model) {
      case ModelKind::sofr_gaussian:
      case ModelKind::sofr_bernoulli: {
        const auto prob = prepare_sofr(
            data, f.spec, f.model == ModelKind::sofr_gaussian ? SofrFamily::gaussian : SofrFamily::bernoulli);
        f.map = prob.map;
        draws = run(prob);
        break;
      }
      case ModelKind::cox: {
        const auto prob = prepare_cox(data, f.spec, o.hazard_df);
        f.map = prob.map;
        f.hazard = prob.hazard;
        draws = run(prob);
        break;
      }
      case ModelKind::joint_cox: {
        const auto prob = prepare_joint(data, f.spec, o.hazard_df, o.pve, o.max_components);
        f.map = prob.map;
        f.hazard = prob.hazard;
        draws = run(prob);
        break;
      }
      case ModelKind::fosr: break;
    }
  }
  if (f.hazard) {
    f.hazard->m_eval.resize(0, 0);
    f.hazard->i_eval.resize(0, 0);
  }

  fs::create_directories(out);
  write_draws((out / "draws.bin").string(), draws.chains);
  write_json(out / "manifest.json", manifest(f, draws));
  write_summaries(out, f, draws);
  if (!draws.warning.empty()) std::cerr << json{{"warning", draws.warning}}.dump() << '\n';
  std::cout << json{{"model", to_string(f.model)}, {"out", out.string()}, {"divergences", draws.total_divergences()}}.dump()
            << '\n';
  return 0;
}

int cmd_summarize(const SummarizeOptions& o) {
  auto [f, d] = load_fit(o.draws_dir);
  if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw SpecError("--alpha must lie in (0, 1)");
  f.alpha = o.alpha;
  const fs::path out = o.out.empty() ? fs::path(o.draws_dir) : fs::path(o.out);
  fs::create_directories(out);
  write_summaries(out, f, d);
  std::cout << json{{"model", to_string(f.model)}, {"out", out.string()}}.dump() << '\n';
  return 0;
}

int cmd_reproduce(const TableOptions& o) {
  ScenarioConfig cfg = o.cfg;
  cfg.model = parse_model_kind(o.model);
  const ScenarioReport rep = run_scenario(cfg);
  if (!rep.error.empty()) throw DegenerateTruthError(rep.error.substr(rep.error.find(": ") + 2));
  const auto ref = find_reference_cell(cfg.model, cfg.n, cfg.tau, cfg.noise_sd);

  auto cell = [](std::optional<double> v) {
    std::ostringstream s;
    if (v) s << std::fixed << std::setprecision(3) << *v;
    else s << "-";
    return s.str();
  };
  std::cout << to_string(cfg.model) << " n=" << cfg.n << " tau=" << cfg.tau;
  if (cfg.model == ModelKind::joint_cox) std::cout << " noise_sd=" << cfg.noise_sd;
  std::cout << " replications=" << cfg.replications << "\n";
  std::cout << std::left << std::setw(14) << "metric" << std::setw(12) << "PUBLISHED" << "OBSERVED\n";
  std::cout << std::setw(14) << "RISE" << std::setw(12) << cell(ref ? std::optional(ref->rise) : std::nullopt)
            << cell(rep.median_rise) << "\n";
  std::cout << std::setw(14) << "coverage" << std::setw(12) << cell(ref ? std::optional(ref->coverage) : std::nullopt)
            << cell(rep.mean_coverage) << "\n";
  std::cout << std::setw(14) << "prediction" << std::setw(12) << cell(ref ? ref->prediction : std::nullopt)
            << cell(rep.median_prediction_error) << "\n";
  if (!ref) std::cout << "(no published cell for this configuration)\n";

  if (!o.out.empty()) {
    json reps = json::array();
    for (const auto& r : rep.replications)
      reps.push_back({{"index", r.index},
                      {"rise", num(r.rise)},
                      {"coverage", num(r.coverage)},
                      {"quantile_coverage", num(r.quantile_coverage)},
                      {"prediction_error", num(r.prediction_error)},
                      {"simultaneous_cover", r.simultaneous_cover},
                      {"divergences", r.divergences},
                      {"max_rhat", num(r.max_rhat)},
                      {"survival_sup_error", num(r.survival_sup_error)}});
    json j{{"model", to_string(cfg.model)},
           {"n", cfg.n},
           {"tau", cfg.tau},
           {"noise_sd", cfg.noise_sd},
           {"replications", cfg.replications},
           {"seed", cfg.seed},
           {"median_rise", num(rep.median_rise)},
           {"mean_coverage", num(rep.mean_coverage)},
           {"mean_quantile_coverage", num(rep.mean_quantile_coverage)},
           {"median_prediction_error", num(rep.median_prediction_error)},
           {"simultaneous_coverage", num(rep.simultaneous_coverage)},
           {"total_divergences", rep.total_divergences},
           {"seconds", rep.seconds},
           {"per_replication", reps}};
    if (ref) j["published"] = {{"rise", ref->rise}, {"coverage", ref->coverage}, {"prediction", num(ref->prediction.value_or(NAN))}};
    write_json(o.out, j);
  }
  return 0;
}

void add_sampler_flags(CLI::App* app, SamplerConfig& s) {
  app->add_option("--iter", s.n_iter, "Total iterations per chain, warmup included")->capture_default_str();
  app->add_option("--warmup", s.n_warmup, "Warmup iterations per chain")->capture_default_str();
  app->add_option("--chains", s.n_chains, "Number of chains")->capture_default_str();
  app->add_option("--seed", s.seed, "Random seed")->capture_default_str();
  app->add_option("--target-accept", s.target_accept, "Step-size adaptation target")->capture_default_str();
  app->add_option("--max-depth", s.max_tree_depth, "Maximum tree depth")->capture_default_str();
}

void add_scenario_flags(CLI::App* app, ScenarioConfig& c, std::string& model) {
  app->add_option("--model", model, "sofr-gaussian | sofr-bernoulli | cox | joint-cox | fosr")->capture_default_str();
  app->add_option("--n", c.n, "Number of subjects")->capture_default_str();
  app->add_option("--tau", c.tau, "Signal strength")->capture_default_str();
  app->add_option("--noise-sd", c.noise_sd, "Measurement noise SD added to W (joint model)")->capture_default_str();
  app->add_option("--hazard", c.baseline_hazard, "Constant baseline hazard")->capture_default_str();
}

void error_record(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian functional regression"};
  app.require_subcommand(1);

  SimulateOptions sim;
  sim.cfg.seed = 1;
  auto* simulate = app.add_subcommand("simulate", "Write a simulated dataset and its true coefficient curve");
  add_scenario_flags(simulate, sim.cfg, sim.model);
  simulate->add_option("--seed", sim.cfg.seed, "Random seed")->capture_default_str();
  simulate->add_option("--replicate", sim.replicate, "Replication stream index")->capture_default_str();
  simulate->add_option("--out", sim.out, "Output directory")->capture_default_str();

  FitOptions fit;
  auto* fitc = app.add_subcommand("fit", "Fit a model and write draws, curve tables and summaries");
  fitc->add_option("--model", fit.model, "sofr-gaussian | sofr-bernoulli | cox | joint-cox | fosr")->capture_default_str();
  fitc->add_option("--data", fit.data, "Dataset file")->required();
  fitc->add_option("--k", fit.k, "Number of spline basis functions (30-40 is usually plenty)")->capture_default_str();
  fitc->add_option("--bs", fit.bs, "open | cyclic")->capture_default_str();
  fitc->add_option("--hazard-df", fit.hazard_df, "Baseline hazard M-spline df (survival models)")->capture_default_str();
  fitc->add_option("--pve", fit.pve, "Proportion of variance explained by the FPCA")->capture_default_str();
  fitc->add_option("--max-components", fit.max_components, "Upper bound on FPCA components")->capture_default_str();
  fitc->add_option("--alpha", fit.alpha, "Interval level is 1 - alpha")->capture_default_str();
  fitc->add_flag("--non-centered", fit.non_centered, "Sample penalized coefficients in non-centred coordinates");
  fitc->add_option("--out", fit.out, "Output directory")->capture_default_str();
  add_sampler_flags(fitc, fit.sampler);

  SummarizeOptions summ;
  auto* summc = app.add_subcommand("summarize", "Recompute curve tables and diagnostics from saved draws");
  summc->add_option("--draws", summ.draws_dir, "Directory written by fit")->required();
  summc->add_option("--alpha", summ.alpha, "Interval level is 1 - alpha")->capture_default_str();
  summc->add_option("--out", summ.out, "Output directory (defaults to the draws directory)");

  TableOptions table;
  table.cfg.replications = 20;
  auto* tablec = app.add_subcommand("reproduce-table", "Run one simulation cell and compare with the published value");
  add_scenario_flags(tablec, table.cfg, table.model);
  tablec->add_option("--replications", table.cfg.replications, "Number of replications")->capture_default_str();
  tablec->add_option("--k", table.cfg.num_basis, "Number of spline basis functions")->capture_default_str();
  tablec->add_option("--hazard-df", table.cfg.hazard_df, "Baseline hazard M-spline df")->capture_default_str();
  tablec->add_option("--pve", table.cfg.pve, "FPCA proportion of variance explained")->capture_default_str();
  tablec->add_option("--threads", table.cfg.threads, "Replication workers (0: all cores)")->capture_default_str();
  tablec->add_flag("--non-centered", table.cfg.non_centered, "Sample in non-centred coordinates");
  tablec->add_option("--out", table.out, "Write the full report as JSON");
  tablec->add_option("--iter", table.cfg.sampler.n_iter, "Total iterations per chain")->capture_default_str();
  tablec->add_option("--warmup", table.cfg.sampler.n_warmup, "Warmup iterations per chain")->capture_default_str();
  tablec->add_option("--chains", table.cfg.sampler.n_chains, "Number of chains")->capture_default_str();
  tablec->add_option("--seed", table.cfg.seed, "Scenario seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    error_record("UsageError", e.what());
    return 2;
  }

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*fitc) return cmd_fit(fit);
    if (*summc) return cmd_summarize(summ);
    if (*tablec) return cmd_reproduce(table);
  } catch (const Error& e) {
    error_record(e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    error_record("InternalError", e.what());
    return 1;
  }
  return 1;
}
