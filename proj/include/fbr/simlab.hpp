#pragma once

// Simulation scenarios: data generators, error metrics and a replication
// driver that fits every simulated dataset with the in-house sampler.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "fbr/analysis.hpp"
#include "fbr/design.hpp"
#include "fbr/errors.hpp"
#include "fbr/models.hpp"
#include "fbr/sampler.hpp"

namespace fbr {

struct ScenarioConfig {
  ModelKind model = ModelKind::sofr_gaussian;
  int n = 500;
  double tau = 5.0;
  double noise_sd = 0.0;  ///< measurement noise added to W (joint model)
  int replications = 50;
  std::uint64_t seed = 1;

  int grid_size = 50;
  int num_basis = 10;
  int hazard_df = 5;
  double pve = 0.99;
  int max_components = 4;
  double baseline_hazard = 1.0;
  double alpha = 0.05;
  int prediction_n = 500;

  // stand-in principal component weights: shape_scale * shape_decay^(j-1)
  double shape_scale = 10.0;
  double shape_decay = 0.5;

  bool non_centered = false;  ///< sample penalized coefficients in non-centred coordinates
  int threads = 0;  ///< replication workers; 0 means hardware concurrency
  SamplerConfig sampler = default_sampler();

  static SamplerConfig default_sampler() {
    SamplerConfig s;
    s.n_iter = 4000;
    s.n_warmup = 1000;
    s.n_chains = 2;
    return s;
  }

  void validate() const {
    if (n <= 0) throw SpecError("n must be positive");
    if (replications < 1) throw SpecError("replications must be at least 1");
    if (grid_size < 2) throw SpecError("grid_size must be at least 2");
    if (!(noise_sd >= 0.0)) throw SpecError("noise_sd must be non-negative");
    if (!(baseline_hazard > 0.0)) throw SpecError("baseline_hazard must be positive");
    if (prediction_n < 1) throw SpecError("prediction_n must be positive");
    sampler.validate();
  }
};

/// beta(t) = (0.084 - (t - 0.5)^2) * tau
inline Eigen::VectorXd true_beta(const Eigen::VectorXd& grid, double tau) {
  return ((0.084 - (grid.array() - 0.5).square()) * tau).matrix();
}

/// t_m = m / M, m = 0..M-1
inline Eigen::VectorXd scenario_grid(int m) {
  return Eigen::VectorXd::LinSpaced(m, 0.0, static_cast<double>(m - 1) / m);
}

/// Four fixed smooth shapes sqrt(2) sin(j pi t), j = 1..4, as rows (4 x M).
inline Eigen::MatrixXd standin_shapes(const Eigen::VectorXd& grid) {
  Eigen::MatrixXd phi(4, grid.size());
  for (int j = 0; j < 4; ++j)
    phi.row(j) = (std::sqrt(2.0) * ((j + 1) * std::numbers::pi * grid.array()).sin()).matrix().transpose();
  return phi;
}

/// RISE = sum w (beta - beta_hat)^2 / sum w beta^2 with trapezoid-style weights.
inline double rise(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_true,
                   const Eigen::VectorXd& grid) {
  if (beta_hat.size() != beta_true.size() || beta_true.size() != grid.size())
    throw ShapeError("rise needs curves on a shared grid");
  const Eigen::VectorXd w = quadrature_weights(grid);
  const double denom = w.dot(beta_true.cwiseAbs2());
  if (!(denom > 0.0)) throw DegenerateTruthError("true coefficient curve is identically zero");
  return w.dot((beta_true - beta_hat).cwiseAbs2()) / denom;
}

// ---------------------------------------------------------------------------
// Generators

/// A generated dataset together with the quantities needed to score a fit.
struct SimulatedData {
  FunctionalDataset data;
  Eigen::MatrixXd w_true;  ///< n x M, before measurement noise
  Eigen::VectorXd eta;     ///< true functional linear predictor
  Eigen::VectorXd beta;    ///< on the grid
  Eigen::VectorXd event_time;   ///< survival scenarios only
  Eigen::VectorXd censor_time;  ///< survival scenarios only
};

struct SimulatedResponse {
  FunctionalResponseDataset data;
  Eigen::VectorXd beta;  ///< coefficient of the scalar predictor
};

namespace detail {

inline Eigen::MatrixXd standin_curves(const ScenarioConfig& cfg, const Eigen::VectorXd& grid, int n,
                                      std::mt19937_64& rng) {
  const Eigen::MatrixXd phi = standin_shapes(grid);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd xi(n, 4);
  for (int j = 0; j < 4; ++j) {
    const double weight = cfg.shape_scale * std::pow(cfg.shape_decay, j);
    for (int i = 0; i < n; ++i) xi(i, j) = weight * nd(rng);
  }
  return xi * phi;
}

inline Eigen::VectorXd functional_predictor(const Eigen::MatrixXd& w, const Eigen::VectorXd& beta) {
  return w * beta / static_cast<double>(beta.size());
}

inline void require_model(const ScenarioConfig& cfg, std::initializer_list<ModelKind> ok, const char* what) {
  for (auto m : ok)
    if (cfg.model == m) return;
  throw SpecError(std::string(what) + " does not generate model " + to_string(cfg.model));
}

}  // namespace detail

inline SimulatedData gen_sofr(const ScenarioConfig& cfg, std::mt19937_64& rng) {
  detail::require_model(cfg, {ModelKind::sofr_gaussian, ModelKind::sofr_bernoulli}, "gen_sofr");
  SimulatedData s;
  const Eigen::VectorXd grid = scenario_grid(cfg.grid_size);
  s.beta = true_beta(grid, cfg.tau);
  s.w_true = detail::standin_curves(cfg, grid, cfg.n, rng);
  s.eta = detail::functional_predictor(s.w_true, s.beta);
  s.data.grid = grid;
  s.data.w = s.w_true;
  s.data.z = Eigen::MatrixXd(0, cfg.n);
  s.data.y.resize(cfg.n);
  if (cfg.model == ModelKind::sofr_gaussian) {
    std::normal_distribution<double> noise(0.0, 1.5);
    for (int i = 0; i < cfg.n; ++i) s.data.y(i) = s.eta(i) + noise(rng);
  } else {
    std::uniform_real_distribution<double> u;
    for (int i = 0; i < cfg.n; ++i) s.data.y(i) = u(rng) < detail::inv_logit(s.eta(i)) ? 1.0 : 0.0;
  }
  return s;
}

/// Constant baseline hazard; censoring times drawn with replacement from the
/// realized event times. Censor flag 0 marks an event, 1 a censored subject.
inline SimulatedData gen_cox(const ScenarioConfig& cfg, std::mt19937_64& rng) {
  detail::require_model(cfg, {ModelKind::cox, ModelKind::joint_cox}, "gen_cox");
  SimulatedData s;
  const Eigen::VectorXd grid = scenario_grid(cfg.grid_size);
  s.beta = true_beta(grid, cfg.tau);
  s.w_true = detail::standin_curves(cfg, grid, cfg.n, rng);
  s.eta = detail::functional_predictor(s.w_true, s.beta);

  std::uniform_real_distribution<double> u;
  Eigen::VectorXd t(cfg.n);
  for (int i = 0; i < cfg.n; ++i) {
    double v = u(rng);
    while (v <= 0.0) v = u(rng);
    t(i) = -std::log(v) / (cfg.baseline_hazard * std::exp(s.eta(i)));
  }
  std::uniform_int_distribution<int> pick(0, cfg.n - 1);
  s.data.y.resize(cfg.n);
  Eigen::VectorXi delta(cfg.n);
  s.censor_time.resize(cfg.n);
  for (int i = 0; i < cfg.n; ++i) {
    const double c = s.censor_time(i) = t(pick(rng));
    delta(i) = c < t(i) ? 1 : 0;
    s.data.y(i) = std::min(t(i), c);
  }
  s.event_time = t;
  s.data.censor = delta;
  s.data.grid = grid;
  s.data.z = Eigen::MatrixXd(0, cfg.n);
  s.data.w = s.w_true;
  if (cfg.model == ModelKind::joint_cox && cfg.noise_sd > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.noise_sd);
    for (Eigen::Index k = 0; k < s.data.w.size(); ++k) s.data.w.data()[k] += noise(rng);
  }
  return s;
}

/// Y_i(t) = X_i beta(t) + W_i(t) + eps_i(t), X ~ N(20, sd 10), eps ~ N(0, sd 5).
/// The design carries an intercept column first.
inline SimulatedResponse gen_fosr(const ScenarioConfig& cfg, std::mt19937_64& rng) {
  detail::require_model(cfg, {ModelKind::fosr}, "gen_fosr");
  SimulatedResponse s;
  const Eigen::VectorXd grid = scenario_grid(cfg.grid_size);
  s.beta = true_beta(grid, cfg.tau);
  std::normal_distribution<double> xd(20.0, 10.0);
  std::normal_distribution<double> noise(0.0, 5.0);
  s.data.x.resize(cfg.n, 2);
  s.data.x.col(0).setOnes();
  for (int i = 0; i < cfg.n; ++i) s.data.x(i, 1) = xd(rng);
  const Eigen::MatrixXd w = detail::standin_curves(cfg, grid, cfg.n, rng);
  s.data.y = s.data.x.col(1) * s.beta.transpose() + w;
  for (Eigen::Index k = 0; k < s.data.y.size(); ++k) s.data.y.data()[k] += noise(rng);
  s.data.grid = grid;
  s.data.predictor_names = {"intercept", "x"};
  return s;
}

// ---------------------------------------------------------------------------
// Replications

struct ReplicationResult {
  int index = 0;
  double rise = std::numeric_limits<double>::quiet_NaN();
  double coverage = std::numeric_limits<double>::quiet_NaN();  ///< fraction of grid, normal flavour
  double quantile_coverage = std::numeric_limits<double>::quiet_NaN();
  double prediction_error = std::numeric_limits<double>::quiet_NaN();
  bool simultaneous_cover = false;  ///< CMA band covers the whole truth
  bool cma_contains_normal = false;  ///< CMA band contains the pointwise normal band everywhere
  int divergences = 0;
  double max_rhat = std::numeric_limits<double>::quiet_NaN();
  int num_components = 0;
  /// Posterior mean survival S(t) at eta = 0 minus exp(-h0 t), sup over t (Cox models).
  double survival_sup_error = std::numeric_limits<double>::quiet_NaN();
};

struct ScenarioReport {
  ScenarioConfig config;
  std::vector<ReplicationResult> replications;
  double median_rise = std::numeric_limits<double>::quiet_NaN();
  double mean_coverage = std::numeric_limits<double>::quiet_NaN();  ///< percent
  double mean_quantile_coverage = std::numeric_limits<double>::quiet_NaN();
  double median_prediction_error = std::numeric_limits<double>::quiet_NaN();
  double simultaneous_coverage = std::numeric_limits<double>::quiet_NaN();
  double max_survival_sup_error = std::numeric_limits<double>::quiet_NaN();
  int total_divergences = 0;
  bool degenerate_truth = false;
  std::string error;
  double seconds = 0.0;
};

namespace detail {

inline double median(std::vector<double> v) {
  std::erase_if(v, [](double x) { return !std::isfinite(x); });
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return quantile_type7(std::move(v), 0.5);
}

inline void score_curve(const CurveDraws& beta, const Eigen::VectorXd& truth, double alpha,
                        ReplicationResult& r) {
  r.rise = rise(beta.mean(), truth, beta.grid);
  const Band pw = normal_interval(beta, alpha);
  const CmaBand cma = cma_interval(beta, alpha);
  r.coverage = pw.coverage(truth);
  r.quantile_coverage = pointwise_interval(beta, alpha).coverage(truth);
  r.simultaneous_cover = cma.covers(truth);
  r.cma_contains_normal = (cma.lo.array() <= pw.lo.array()).all() && (cma.hi.array() >= pw.hi.array()).all();
}

inline void score_sampler(const PosteriorDraws& d, ReplicationResult& r) {
  r.divergences = d.total_divergences();
  r.max_rhat = 0.0;
  for (Eigen::Index k = 0; k < d.rhat.size(); ++k)
    if (std::isfinite(d.rhat(k))) r.max_rhat = std::max(r.max_rhat, d.rhat(k));
}

/// Q x n draws of the functional linear predictor for new curves.
inline Eigen::MatrixXd predictor_draws(const CurveDraws& beta, const Eigen::MatrixXd& w_new) {
  const Eigen::VectorXd lw = quadrature_weights(beta.grid);
  return beta.values * lw.asDiagonal() * w_new.transpose();
}

inline SamplerConfig replication_sampler(const ScenarioConfig& cfg, int r, bool parallel_chains) {
  SamplerConfig s = cfg.sampler;
  s.seed = splitmix64(cfg.seed ^ splitmix64(0x5a3c0000u + static_cast<std::uint64_t>(r)));
  s.parallel_chains = parallel_chains;
  return s;
}

/// Sup over the lower boundary and the observed times.
inline double survival_error(const PosteriorDraws& draws, const HazardBasis& hazard, double h0,
                             const Eigen::VectorXd& observed) {
  Eigen::VectorXd times(observed.size() + 1);
  times << hazard.lower, observed;
  const Eigen::VectorXd s_hat = survival_curve(draws, hazard, times, 0.0).mean();
  return (s_hat.array() - (-h0 * times.array()).exp()).abs().maxCoeff();
}

}  // namespace detail

namespace detail {
template <typename Problem>
PosteriorDraws sample(const Problem& prob, const SamplerConfig& s, bool non_centered) {
  return non_centered ? run_hmc(prob.target(), s) : run_hmc(prob.posterior, s);
}
}  // namespace detail

/// Generate, fit and score replication `r` of a scenario.
inline ReplicationResult run_replication(const ScenarioConfig& cfg, int r, bool parallel_chains = true) {
  ReplicationResult out;
  out.index = r;
  std::mt19937_64 rng = make_stream(cfg.seed, static_cast<std::uint64_t>(r));
  const SamplerConfig scfg = detail::replication_sampler(cfg, r, parallel_chains);
  const SplineSpec spec = spline_spec_for(scenario_grid(cfg.grid_size), SplineKind::open_cubic, cfg.num_basis);
  const double alpha = cfg.alpha;

  switch (cfg.model) {
    case ModelKind::sofr_gaussian:
    case ModelKind::sofr_bernoulli: {
      const bool gaussian = cfg.model == ModelKind::sofr_gaussian;
      const SimulatedData sim = gen_sofr(cfg, rng);
      const auto prob = prepare_sofr(sim.data, spec, gaussian ? SofrFamily::gaussian : SofrFamily::bernoulli);
      const auto draws = detail::sample(prob, scfg, cfg.non_centered);
      const CurveDraws beta = prob.beta(draws);
      detail::score_curve(beta, sim.beta, alpha, out);
      detail::score_sampler(draws, out);

      const Eigen::MatrixXd w_new = detail::standin_curves(cfg, sim.data.grid, cfg.prediction_n, rng);
      const Eigen::VectorXd eta_true = detail::functional_predictor(w_new, sim.beta);
      Eigen::MatrixXd eta = detail::predictor_draws(beta, w_new);
      eta.colwise() += draws.pooled().col(draws.layout["eta0"].offset);
      Eigen::VectorXd pred;
      Eigen::VectorXd truth;
      if (gaussian) {
        pred = eta.colwise().mean().transpose();
        truth = eta_true;
      } else {
        pred = eta.unaryExpr([](double v) { return detail::inv_logit(v); }).colwise().mean().transpose();
        truth = eta_true.unaryExpr([](double v) { return detail::inv_logit(v); });
      }
      out.prediction_error = (pred - truth).squaredNorm() / static_cast<double>(truth.size());
      break;
    }
    case ModelKind::cox:
    case ModelKind::joint_cox: {
      const SimulatedData sim = gen_cox(cfg, rng);
      std::optional<PosteriorDraws> draws;
      CurveDraws beta;
      if (cfg.model == ModelKind::cox) {
        const auto prob = prepare_cox(sim.data, spec, cfg.hazard_df);
        draws = detail::sample(prob, scfg, cfg.non_centered);
        beta = prob.beta(*draws);
        out.survival_sup_error = detail::survival_error(*draws, prob.hazard, cfg.baseline_hazard, sim.data.y);
      } else {
        const auto prob = prepare_joint(sim.data, spec, cfg.hazard_df, cfg.pve, cfg.max_components);
        out.num_components = static_cast<int>(prob.fpca.num_components());
        draws = detail::sample(prob, scfg, cfg.non_centered);
        beta = prob.beta(*draws);
        out.survival_sup_error = detail::survival_error(*draws, prob.hazard, cfg.baseline_hazard, sim.data.y);
      }
      detail::score_curve(beta, sim.beta, alpha, out);
      detail::score_sampler(*draws, out);
      const Eigen::MatrixXd w_new = detail::standin_curves(cfg, sim.data.grid, cfg.prediction_n, rng);
      const Eigen::VectorXd eta_true = detail::functional_predictor(w_new, sim.beta);
      const Eigen::VectorXd pred = detail::predictor_draws(beta, w_new).colwise().mean().transpose();
      out.prediction_error = (pred - eta_true).squaredNorm() / static_cast<double>(eta_true.size());
      break;
    }
    case ModelKind::fosr: {
      const SimulatedResponse sim = gen_fosr(cfg, rng);
      const auto prob = prepare_fosr(sim.data, spec, cfg.pve, cfg.max_components);
      out.num_components = static_cast<int>(prob.fpca.num_components());
      const auto draws = detail::sample(prob, scfg, cfg.non_centered);
      const CurveDraws beta = prob.beta(draws, 1);
      detail::score_curve(beta, sim.beta, alpha, out);
      detail::score_sampler(draws, out);

      std::normal_distribution<double> xd(20.0, 10.0);
      Eigen::VectorXd x_new(cfg.prediction_n);
      for (auto& v : x_new) v = xd(rng);
      const CurveDraws intercept = prob.beta(draws, 0);
      const Eigen::RowVectorXd b0 = intercept.mean().transpose();
      const Eigen::RowVectorXd b1 = beta.mean().transpose();
      const Eigen::MatrixXd err = (x_new * (b1 - sim.beta.transpose())).rowwise() + b0;
      out.prediction_error = err.squaredNorm() / static_cast<double>(err.size());
      break;
    }
  }
  return out;
}

/// Aggregate per-replication results into a report.
inline void aggregate(ScenarioReport& rep) {
  std::vector<double> rises, preds;
  double cov = 0.0, qcov = 0.0, simul = 0.0, sup = 0.0;
  int count = 0;
  bool any_sup = false;
  for (const auto& r : rep.replications) {
    rises.push_back(r.rise);
    preds.push_back(r.prediction_error);
    cov += r.coverage;
    qcov += r.quantile_coverage;
    simul += r.simultaneous_cover ? 1.0 : 0.0;
    rep.total_divergences += r.divergences;
    if (std::isfinite(r.survival_sup_error)) {
      sup = std::max(sup, r.survival_sup_error);
      any_sup = true;
    }
    ++count;
  }
  if (count == 0) return;
  rep.median_rise = detail::median(rises);
  rep.median_prediction_error = detail::median(preds);
  rep.mean_coverage = 100.0 * cov / count;
  rep.mean_quantile_coverage = 100.0 * qcov / count;
  rep.simultaneous_coverage = 100.0 * simul / count;
  if (any_sup) rep.max_survival_sup_error = sup;
}

/// Run every replication of a scenario. Replications run on a pool of
/// worker threads; results are stored by index, so the report does not
/// depend on scheduling.
inline ScenarioReport run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  ScenarioReport rep;
  rep.config = cfg;
  const auto start = std::chrono::steady_clock::now();

  if (cfg.tau == 0.0) {
    rep.degenerate_truth = true;
    rep.error = "DegenerateTruthError: true coefficient curve is identically zero";
    return rep;
  }

  unsigned workers = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : std::thread::hardware_concurrency();
  workers = std::clamp(workers, 1u, static_cast<unsigned>(cfg.replications));
  const bool parallel_chains = workers == 1;

  rep.replications.resize(static_cast<std::size_t>(cfg.replications));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (int r = next++; r < cfg.replications; r = next++) {
      try {
        rep.replications[static_cast<std::size_t>(r)] = run_replication(cfg, r, parallel_chains);
      } catch (const InitError& e) {
        std::lock_guard lock(failure_mutex);
        if (!failure)
          failure = std::make_exception_ptr(InitError("replication " + std::to_string(r) + ": " + e.what()));
        next = cfg.replications;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = cfg.replications;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  aggregate(rep);
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace fbr
