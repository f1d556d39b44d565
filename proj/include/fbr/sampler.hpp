#pragma once

// Multinomial no-U-turn sampler with a diagonal metric, dual-averaging step
// size and windowed variance adaptation, plus rank-normalized split-Rhat and
// bulk ESS.

#include <Eigen/Dense>
#include <boost/math/special_functions/erf.hpp>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstdint>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "fbr/errors.hpp"
#include "fbr/posteriors.hpp"

namespace fbr {

template <typename M>
concept LogDensityModel = requires(const M& m, const Eigen::VectorXd& x, Eigen::VectorXd* g) {
  { m.dim() } -> std::convertible_to<Eigen::Index>;
  { m.log_density(x, g) } -> std::convertible_to<double>;
  { m.layout() } -> std::convertible_to<const ParamLayout&>;
};

struct SamplerConfig {
  int n_iter = 15000;
  int n_warmup = 5000;
  int n_chains = 3;
  std::uint64_t seed = 20240101;
  double target_accept = 0.8;
  int max_tree_depth = 10;
  // warmup windows
  int init_buffer = 75;
  int term_buffer = 200;
  int base_window = 25;
  double init_radius = 2.0;
  int max_init_tries = 100;
  bool parallel_chains = true;

  int num_draws() const { return n_iter - n_warmup; }

  void validate() const {
    if (n_chains < 1) throw SpecError("n_chains must be at least 1");
    if (n_warmup < 0 || n_warmup >= n_iter) throw SpecError("need 0 <= n_warmup < n_iter");
    if (!(target_accept > 0.0 && target_accept < 1.0))
      throw SpecError("target_accept must lie in (0, 1)");
    if (max_tree_depth < 1) throw SpecError("max_tree_depth must be positive");
  }
};

struct ChainStats {
  double step_size = 0.0;
  double mean_accept = 0.0;
  int divergences = 0;
  long long leapfrogs = 0;
  Eigen::VectorXd inv_metric;
};

struct PosteriorDraws {
  ParamLayout layout;
  std::vector<Eigen::MatrixXd> chains;  ///< each draws x dim
  std::vector<ChainStats> stats;
  Eigen::VectorXd rhat;
  Eigen::VectorXd ess;
  bool divergence_warning = false;
  std::string warning;

  Eigen::Index num_chains() const { return static_cast<Eigen::Index>(chains.size()); }
  Eigen::Index draws_per_chain() const { return chains.empty() ? 0 : chains.front().rows(); }
  Eigen::Index dim() const { return layout.total(); }
  int total_divergences() const {
    int d = 0;
    for (const auto& s : stats) d += s.divergences;
    return d;
  }

  /// All chains stacked in chain order, (chains*draws) x dim.
  Eigen::MatrixXd pooled() const {
    Eigen::MatrixXd out(num_chains() * draws_per_chain(), dim());
    for (Eigen::Index c = 0; c < num_chains(); ++c)
      out.middleRows(c * draws_per_chain(), draws_per_chain()) = chains[static_cast<std::size_t>(c)];
    return out;
  }
  /// Pooled draws of one named slice.
  Eigen::MatrixXd slice(const std::string& name) const {
    const Slice& s = layout[name];
    return pooled().middleCols(s.offset, s.size);
  }
};

// ---------------------------------------------------------------------------
// RNG streams

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Independent engine for stream `index` of a seed.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64(detail::splitmix64(detail::splitmix64(seed) ^ detail::splitmix64(index + 1)));
}

// ---------------------------------------------------------------------------
// Adaptation pieces

namespace detail {

class DualAveraging {
 public:
  void set_mu(double mu) { mu_ = mu; }
  void set_target(double delta) { delta_ = delta; }
  void restart() {
    counter_ = 0;
    s_bar_ = 0.0;
    x_bar_ = 0.0;
  }
  void learn(double& epsilon, double accept) {
    ++counter_;
    accept = std::min(1.0, accept);
    const double eta = 1.0 / (counter_ + t0_);
    s_bar_ = (1.0 - eta) * s_bar_ + eta * (delta_ - accept);
    const double x = mu_ - s_bar_ * std::sqrt(counter_) / gamma_;
    const double x_eta = std::pow(counter_, -kappa_);
    x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
    epsilon = std::exp(x);
  }
  double final_step() const { return std::exp(x_bar_); }

 private:
  double counter_ = 0, s_bar_ = 0, x_bar_ = 0, mu_ = 0.5, delta_ = 0.8;
  double gamma_ = 0.05, kappa_ = 0.75, t0_ = 10.0;
};

class WelfordVar {
 public:
  explicit WelfordVar(Eigen::Index n = 0) : m_(Eigen::VectorXd::Zero(n)), s_(Eigen::VectorXd::Zero(n)) {}
  void add(const Eigen::VectorXd& x) {
    ++n_;
    const Eigen::VectorXd delta = x - m_;
    m_ += delta / static_cast<double>(n_);
    s_ += delta.cwiseProduct(x - m_);
  }
  long count() const { return n_; }
  Eigen::VectorXd variance() const { return s_ / static_cast<double>(n_ - 1); }
  void restart() {
    n_ = 0;
    m_.setZero();
    s_.setZero();
  }

 private:
  long n_ = 0;
  Eigen::VectorXd m_, s_;
};

class WindowSchedule {
 public:
  WindowSchedule(int num_warmup, int init_buffer, int term_buffer, int base_window)
      : warmup_(num_warmup), init_(init_buffer), term_(term_buffer), window_(base_window) {
    if (warmup_ < 20) {
      enabled_ = false;
      return;
    }
    if (init_ + window_ + term_ > warmup_) {
      init_ = static_cast<int>(0.15 * warmup_);
      term_ = static_cast<int>(0.1 * warmup_);
      window_ = warmup_ - (init_ + term_);
    }
    next_ = init_ + window_ - 1;
  }
  bool enabled() const { return enabled_; }
  bool in_window() const {
    return enabled_ && counter_ >= init_ && counter_ < warmup_ - term_ && counter_ != warmup_;
  }
  bool at_window_end() const { return enabled_ && counter_ == next_ && counter_ != warmup_; }
  void advance_window() {
    if (next_ == warmup_ - term_ - 1) return;
    window_ *= 2;
    next_ = counter_ + window_;
    if (next_ != warmup_ - term_ - 1 && next_ + 2 * window_ >= warmup_ - term_)
      next_ = warmup_ - term_ - 1;
  }
  void tick() { ++counter_; }

 private:
  int warmup_, init_, term_, window_;
  int counter_ = 0, next_ = 0;
  bool enabled_ = true;
};

inline double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// ---------------------------------------------------------------------------
// One chain

template <LogDensityModel Model>
class NutsChain {
 public:
  struct Point {
    Eigen::VectorXd q, p, g;
    double logp = 0.0;
  };

  NutsChain(const Model& model, const SamplerConfig& cfg, std::mt19937_64 rng)
      : model_(model), cfg_(cfg), rng_(std::move(rng)), dim_(model.dim()) {
    inv_metric_ = Eigen::VectorXd::Ones(dim_);
  }

  Eigen::MatrixXd run(ChainStats& stats) {
    initialize();
    init_stepsize();
    DualAveraging da;
    da.set_target(cfg_.target_accept);
    da.set_mu(std::log(10.0 * epsilon_));
    WindowSchedule windows(cfg_.n_warmup, cfg_.init_buffer, cfg_.term_buffer, cfg_.base_window);
    WelfordVar var(dim_);

    const int draws = cfg_.num_draws();
    Eigen::MatrixXd out(draws, dim_);
    double accept_sum = 0.0;
    for (int it = 0; it < cfg_.n_iter; ++it) {
      const bool warm = it < cfg_.n_warmup;
      const double accept = transition();
      if (warm) {
        da.learn(epsilon_, accept);
        if (windows.enabled()) {
          if (windows.in_window()) var.add(z_.q);
          if (windows.at_window_end()) {
            windows.advance_window();
            const double n = static_cast<double>(var.count());
            inv_metric_ = (n / (n + 5.0)) * var.variance().array() + 1e-3 * (5.0 / (n + 5.0));
            var.restart();
            init_stepsize();
            da.set_mu(std::log(10.0 * epsilon_));
            da.restart();
          }
          windows.tick();
        }
        if (it + 1 == cfg_.n_warmup) epsilon_ = da.final_step();
      } else {
        out.row(it - cfg_.n_warmup) = z_.q.transpose();
        accept_sum += accept;
        if (divergent_) ++stats.divergences;
      }
    }
    stats.step_size = epsilon_;
    stats.mean_accept = draws > 0 ? accept_sum / draws : 0.0;
    stats.leapfrogs = leapfrogs_;
    stats.inv_metric = inv_metric_;
    return out;
  }

 private:
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }

  bool evaluate(Point& z) const {
    try {
      z.logp = model_.log_density(z.q, &z.g);
    } catch (const NumericalError&) {
      z.logp = -std::numeric_limits<double>::infinity();
      return false;
    }
    if (!std::isfinite(z.logp) || !z.g.allFinite()) {
      z.logp = -std::numeric_limits<double>::infinity();
      return false;
    }
    return true;
  }

  void initialize() {
    std::uniform_real_distribution<double> jitter(-cfg_.init_radius, cfg_.init_radius);
    z_.q.resize(dim_);
    z_.p = Eigen::VectorXd::Zero(dim_);
    for (int attempt = 0; attempt < cfg_.max_init_tries; ++attempt) {
      for (Eigen::Index i = 0; i < dim_; ++i) z_.q(i) = jitter(rng_);
      if (evaluate(z_)) return;
    }
    throw InitError("no finite log-density after " + std::to_string(cfg_.max_init_tries) +
                    " jittered initializations");
  }

  void sample_momentum(Point& z) {
    std::normal_distribution<double> normal;
    for (Eigen::Index i = 0; i < dim_; ++i) z.p(i) = normal(rng_) / std::sqrt(inv_metric_(i));
  }

  double hamiltonian(const Point& z) const {
    if (!std::isfinite(z.logp)) return std::numeric_limits<double>::infinity();
    return -z.logp + 0.5 * z.p.cwiseAbs2().dot(inv_metric_);
  }

  void leapfrog(Point& z, double eps) const {
    z.p += 0.5 * eps * z.g;
    z.q += eps * inv_metric_.cwiseProduct(z.p);
    if (evaluate(z)) z.p += 0.5 * eps * z.g;
  }

  void init_stepsize() {
    const Point start = z_;
    sample_momentum(z_);
    double h0 = hamiltonian(z_);
    leapfrog(z_, epsilon_);
    double h = hamiltonian(z_);
    if (std::isnan(h)) h = std::numeric_limits<double>::infinity();
    const double log_target = std::log(0.8);
    const int direction = (h0 - h) > log_target ? 1 : -1;
    for (int guard = 0; guard < 200; ++guard) {
      z_ = start;
      sample_momentum(z_);
      h0 = hamiltonian(z_);
      leapfrog(z_, epsilon_);
      h = hamiltonian(z_);
      if (std::isnan(h)) h = std::numeric_limits<double>::infinity();
      const double delta = h0 - h;
      if (direction == 1 && !(delta > log_target)) break;
      if (direction == -1 && !(delta < log_target)) break;
      epsilon_ = direction == 1 ? 2.0 * epsilon_ : 0.5 * epsilon_;
      if (epsilon_ > 1e7) throw NumericalError("step size diverged during initialization");
      if (epsilon_ == 0.0) throw NumericalError("step size collapsed to zero");
    }
    z_ = start;
  }

  static bool no_u_turn(const Eigen::VectorXd& sharp_minus, const Eigen::VectorXd& sharp_plus,
                        const Eigen::VectorXd& rho) {
    return sharp_plus.dot(rho) > 0.0 && sharp_minus.dot(rho) > 0.0;
  }

  bool build_tree(int depth, Point& z, Point& propose, Eigen::VectorXd& sharp_beg,
                  Eigen::VectorXd& sharp_end, Eigen::VectorXd& rho, Eigen::VectorXd& p_beg,
                  Eigen::VectorXd& p_end, double h0, double sign, double& log_sum_weight,
                  double& sum_metro, int& n_leapfrog) {
    if (depth == 0) {
      leapfrog(z, sign * epsilon_);
      ++n_leapfrog;
      ++leapfrogs_;
      double h = hamiltonian(z);
      if (std::isnan(h)) h = std::numeric_limits<double>::infinity();
      if (h - h0 > 1000.0) divergent_ = true;
      log_sum_weight = log_sum_exp(log_sum_weight, h0 - h);
      sum_metro += h0 - h > 0 ? 1.0 : std::exp(h0 - h);
      propose = z;
      sharp_beg = inv_metric_.cwiseProduct(z.p);
      sharp_end = sharp_beg;
      rho += z.p;
      p_beg = z.p;
      p_end = p_beg;
      return !divergent_;
    }
    const double neg_inf = -std::numeric_limits<double>::infinity();
    double lsw_init = neg_inf;
    Eigen::VectorXd p_init_end(dim_), sharp_init_end(dim_);
    Eigen::VectorXd rho_init = Eigen::VectorXd::Zero(dim_);
    if (!build_tree(depth - 1, z, propose, sharp_beg, sharp_init_end, rho_init, p_beg, p_init_end,
                    h0, sign, lsw_init, sum_metro, n_leapfrog))
      return false;

    Point propose_final = z;
    double lsw_final = neg_inf;
    Eigen::VectorXd p_final_beg(dim_), sharp_final_beg(dim_);
    Eigen::VectorXd rho_final = Eigen::VectorXd::Zero(dim_);
    if (!build_tree(depth - 1, z, propose_final, sharp_final_beg, sharp_end, rho_final,
                    p_final_beg, p_end, h0, sign, lsw_final, sum_metro, n_leapfrog))
      return false;

    const double lsw_subtree = log_sum_exp(lsw_init, lsw_final);
    log_sum_weight = log_sum_exp(log_sum_weight, lsw_subtree);
    if (lsw_final > lsw_subtree || uniform() < std::exp(lsw_final - lsw_subtree))
      propose = std::move(propose_final);

    const Eigen::VectorXd rho_subtree = rho_init + rho_final;
    rho += rho_subtree;
    bool persist = no_u_turn(sharp_beg, sharp_end, rho_subtree);
    persist = persist && no_u_turn(sharp_beg, sharp_final_beg, rho_init + p_final_beg);
    persist = persist && no_u_turn(sharp_init_end, sharp_end, rho_final + p_init_end);
    return persist;
  }

  /// One NUTS transition; returns the acceptance statistic.
  double transition() {
    divergent_ = false;
    sample_momentum(z_);
    Point z_fwd = z_, z_bck = z_, sample = z_, propose = z_;

    Eigen::VectorXd p_fwd_fwd = z_.p, p_fwd_bck = z_.p, p_bck_fwd = z_.p, p_bck_bck = z_.p;
    Eigen::VectorXd s_fwd_fwd = inv_metric_.cwiseProduct(z_.p);
    Eigen::VectorXd s_fwd_bck = s_fwd_fwd, s_bck_fwd = s_fwd_fwd, s_bck_bck = s_fwd_fwd;
    Eigen::VectorXd rho = z_.p;
    const double h0 = hamiltonian(z_);

    double log_sum_weight = 0.0, sum_metro = 0.0;
    int n_leapfrog = 0;
    for (int depth = 0; depth < cfg_.max_tree_depth; ++depth) {
      Eigen::VectorXd rho_fwd = Eigen::VectorXd::Zero(dim_), rho_bck = Eigen::VectorXd::Zero(dim_);
      double lsw_subtree = -std::numeric_limits<double>::infinity();
      bool valid;
      if (uniform() > 0.5) {
        Point z = z_fwd;
        rho_bck = rho;
        p_bck_fwd = p_fwd_bck;
        s_bck_fwd = s_fwd_bck;
        valid = build_tree(depth, z, propose, s_fwd_bck, s_fwd_fwd, rho_fwd, p_fwd_bck, p_fwd_fwd,
                           h0, 1.0, lsw_subtree, sum_metro, n_leapfrog);
        z_fwd = std::move(z);
      } else {
        Point z = z_bck;
        rho_fwd = rho;
        p_fwd_bck = p_bck_fwd;
        s_fwd_bck = s_bck_fwd;
        valid = build_tree(depth, z, propose, s_bck_fwd, s_bck_bck, rho_bck, p_bck_fwd, p_bck_bck,
                           h0, -1.0, lsw_subtree, sum_metro, n_leapfrog);
        z_bck = std::move(z);
      }
      if (!valid) break;

      if (lsw_subtree > log_sum_weight || uniform() < std::exp(lsw_subtree - log_sum_weight))
        sample = propose;
      log_sum_weight = log_sum_exp(log_sum_weight, lsw_subtree);

      rho = rho_bck + rho_fwd;
      bool persist = no_u_turn(s_bck_bck, s_fwd_fwd, rho);
      persist = persist && no_u_turn(s_bck_bck, s_fwd_bck, rho_bck + p_fwd_bck);
      persist = persist && no_u_turn(s_bck_fwd, s_fwd_fwd, rho_fwd + p_bck_fwd);
      if (!persist) break;
    }
    z_ = std::move(sample);
    return n_leapfrog > 0 ? sum_metro / n_leapfrog : 0.0;
  }

  const Model& model_;
  const SamplerConfig& cfg_;
  std::mt19937_64 rng_;
  Eigen::Index dim_;
  Eigen::VectorXd inv_metric_;
  Point z_;
  double epsilon_ = 1.0;
  bool divergent_ = false;
  long long leapfrogs_ = 0;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Diagnostics

namespace detail {

inline double inv_normal_cdf(double p) { return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p); }

/// Biased autocovariance sequence (divided by N) via FFT.
inline Eigen::VectorXd autocovariance(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  std::size_t nfft = 1;
  while (nfft < static_cast<std::size_t>(2 * n)) nfft <<= 1;
  std::vector<double> buf(nfft, 0.0);
  const double mean = x.mean();
  for (Eigen::Index i = 0; i < n; ++i) buf[static_cast<std::size_t>(i)] = x(i) - mean;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq;
  fft.fwd(freq, buf);
  for (auto& f : freq) f = std::norm(f);
  std::vector<std::complex<double>> back;
  fft.inv(back, freq);
  Eigen::VectorXd acov(n);
  for (Eigen::Index t = 0; t < n; ++t) acov(t) = back[static_cast<std::size_t>(t)].real() / static_cast<double>(n);
  return acov;
}

/// Chains as columns of equal length.
inline double basic_rhat(const Eigen::MatrixXd& chains) {
  const auto n = static_cast<double>(chains.rows());
  const Eigen::Index m = chains.cols();
  Eigen::VectorXd means = chains.colwise().mean().transpose();
  Eigen::VectorXd vars(m);
  for (Eigen::Index c = 0; c < m; ++c)
    vars(c) = (chains.col(c).array() - means(c)).square().sum() / (n - 1.0);
  const double w = vars.mean();
  const double b = n * (means.array() - means.mean()).square().sum() / static_cast<double>(m - 1);
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

inline double ess_columns(const Eigen::MatrixXd& chains) {
  const Eigen::Index n = chains.rows();
  const Eigen::Index m = chains.cols();
  const auto nd = static_cast<double>(n);
  std::vector<Eigen::VectorXd> acov;
  Eigen::VectorXd means(m), vars(m);
  for (Eigen::Index c = 0; c < m; ++c) {
    acov.push_back(autocovariance(chains.col(c)));
    means(c) = chains.col(c).mean();
    vars(c) = acov.back()(0) * nd / (nd - 1.0);
  }
  const double mean_var = vars.mean();
  double var_plus = mean_var * (nd - 1.0) / nd;
  if (m > 1) var_plus += (means.array() - means.mean()).square().sum() / static_cast<double>(m - 1);

  auto acov_mean = [&](Eigen::Index t) {
    double s = 0.0;
    for (const auto& a : acov) s += a(t);
    return s / static_cast<double>(m);
  };
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(n);
  double rho_even = 1.0;
  double rho_odd = 1.0 - (mean_var - acov_mean(1)) / var_plus;
  rho(0) = rho_even;
  rho(1) = rho_odd;
  Eigen::Index t = 1;
  while (t < n - 5 && rho_even + rho_odd > 0.0) {
    rho_even = 1.0 - (mean_var - acov_mean(t + 1)) / var_plus;
    rho_odd = 1.0 - (mean_var - acov_mean(t + 2)) / var_plus;
    if (rho_even + rho_odd >= 0.0) {
      rho(t + 1) = rho_even;
      rho(t + 2) = rho_odd;
    }
    t += 2;
  }
  const Eigen::Index max_t = t;
  if (rho_even > 0.0 && max_t + 1 < n) rho(max_t + 1) = rho_even;
  for (Eigen::Index s = 1; s <= max_t - 3; s += 2) {
    if (rho(s + 1) + rho(s + 2) > rho(s - 1) + rho(s)) {
      rho(s + 1) = 0.5 * (rho(s - 1) + rho(s));
      rho(s + 2) = rho(s + 1);
    }
  }
  const double total = nd * static_cast<double>(m);
  double tau = -1.0 + 2.0 * rho.head(std::min(max_t + 1, n)).sum() +
               (max_t + 1 < n ? rho(max_t + 1) : 0.0);
  tau = std::max(tau, 1.0 / std::log10(total));
  return total / tau;
}

/// Split each chain in half (dropping a middle draw when odd); columns out.
inline Eigen::MatrixXd split_chains(const std::vector<Eigen::VectorXd>& chains) {
  const Eigen::Index n = chains.front().size();
  const Eigen::Index half = n / 2;
  Eigen::MatrixXd out(half, 2 * static_cast<Eigen::Index>(chains.size()));
  for (std::size_t c = 0; c < chains.size(); ++c) {
    out.col(2 * static_cast<Eigen::Index>(c)) = chains[c].head(half);
    out.col(2 * static_cast<Eigen::Index>(c) + 1) = chains[c].tail(half);
  }
  return out;
}

/// Normal scores of pooled average ranks.
inline Eigen::MatrixXd rank_normalize(const Eigen::MatrixXd& x) {
  const Eigen::Index total = x.size();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(total));
  std::iota(idx.begin(), idx.end(), 0);
  const double* data = x.data();
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return data[a] < data[b]; });
  Eigen::MatrixXd out(x.rows(), x.cols());
  double* o = out.data();
  std::size_t i = 0;
  const auto s = static_cast<double>(total);
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && data[idx[j + 1]] == data[idx[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    const double z = inv_normal_cdf((rank - 0.375) / (s + 0.25));
    for (std::size_t k = i; k <= j; ++k) o[idx[k]] = z;
    i = j + 1;
  }
  return out;
}

}  // namespace detail

struct ParamDiagnostic {
  double rhat = std::numeric_limits<double>::quiet_NaN();
  double ess = std::numeric_limits<double>::quiet_NaN();
};

/// Rank-normalized split-Rhat (max of bulk and folded) and bulk ESS for one
/// scalar quantity; chains of equal length.
inline ParamDiagnostic diagnose(const std::vector<Eigen::VectorXd>& chains) {
  ParamDiagnostic d;
  if (chains.empty() || chains.front().size() < 4) return d;
  for (const auto& c : chains)
    if (c.size() != chains.front().size()) throw ShapeError("chains differ in length");
  const Eigen::MatrixXd split = detail::split_chains(chains);
  const double lo = split.minCoeff(), hi = split.maxCoeff();
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo == hi) return d;

  const Eigen::MatrixXd z = detail::rank_normalize(split);
  std::vector<double> all(split.data(), split.data() + split.size());
  std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(all.size() / 2), all.end());
  double median = all[all.size() / 2];
  if (all.size() % 2 == 0) {
    const double below = *std::max_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(all.size() / 2));
    median = 0.5 * (median + below);
  }
  const Eigen::MatrixXd folded = (split.array() - median).abs().matrix();
  const double rhat_bulk = detail::basic_rhat(z);
  double rhat_tail = rhat_bulk;
  if (folded.maxCoeff() > folded.minCoeff()) rhat_tail = detail::basic_rhat(detail::rank_normalize(folded));
  d.rhat = std::max(rhat_bulk, rhat_tail);
  d.ess = detail::ess_columns(z);
  return d;
}

inline void compute_diagnostics(PosteriorDraws& draws) {
  const Eigen::Index dim = draws.dim();
  draws.rhat.setConstant(dim, std::numeric_limits<double>::quiet_NaN());
  draws.ess.setConstant(dim, std::numeric_limits<double>::quiet_NaN());
  if (draws.draws_per_chain() < 4) return;
  std::vector<Eigen::VectorXd> cols(draws.chains.size());
  for (Eigen::Index k = 0; k < dim; ++k) {
    for (std::size_t c = 0; c < draws.chains.size(); ++c) cols[c] = draws.chains[c].col(k);
    const ParamDiagnostic d = diagnose(cols);
    draws.rhat(k) = d.rhat;
    draws.ess(k) = d.ess;
  }
}

/// Largest |H - H0| along `steps` leapfrog steps from (q, p) with a
/// diagonal inverse metric.
template <LogDensityModel Model>
double hamiltonian_drift(const Model& model, Eigen::VectorXd q, Eigen::VectorXd p,
                         const Eigen::VectorXd& inv_metric, double eps, int steps) {
  Eigen::VectorXd g;
  double logp = model.log_density(q, &g);
  auto energy = [&] { return -logp + 0.5 * p.cwiseAbs2().dot(inv_metric); };
  const double h0 = energy();
  double worst = 0.0;
  for (int s = 0; s < steps; ++s) {
    p += 0.5 * eps * g;
    q += eps * inv_metric.cwiseProduct(p);
    logp = model.log_density(q, &g);
    p += 0.5 * eps * g;
    worst = std::max(worst, std::abs(energy() - h0));
  }
  return worst;
}

// ---------------------------------------------------------------------------

template <LogDensityModel Model>
PosteriorDraws run_hmc(const Model& model, const SamplerConfig& cfg) {
  cfg.validate();
  const auto chains = static_cast<std::size_t>(cfg.n_chains);
  PosteriorDraws out;
  out.layout = model.layout();
  out.chains.resize(chains);
  out.stats.resize(chains);
  std::vector<std::exception_ptr> errors(chains);

  auto work = [&](std::size_t c) {
    try {
      detail::NutsChain<Model> chain(model, cfg, make_stream(cfg.seed, c));
      out.chains[c] = chain.run(out.stats[c]);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  if (cfg.parallel_chains && chains > 1) {
    std::vector<std::thread> threads;
    for (std::size_t c = 0; c < chains; ++c) threads.emplace_back(work, c);
    for (auto& t : threads) t.join();
  } else {
    for (std::size_t c = 0; c < chains; ++c) work(c);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  // models sampled in auxiliary coordinates report draws in natural ones
  if constexpr (requires(const Eigen::VectorXd& x) { { model.constrain(x) } -> std::convertible_to<Eigen::VectorXd>; }) {
    for (auto& ch : out.chains)
      for (Eigen::Index i = 0; i < ch.rows(); ++i) ch.row(i) = model.constrain(ch.row(i).transpose()).transpose();
  }

  compute_diagnostics(out);
  const double total = static_cast<double>(cfg.num_draws()) * cfg.n_chains;
  if (out.total_divergences() > 0.1 * total) {
    out.divergence_warning = true;
    out.warning = std::to_string(out.total_divergences()) + " of " +
                  std::to_string(static_cast<long long>(total)) +
                  " post-warmup transitions diverged";
  }
  return out;
}

}  // namespace fbr
