#include <gtest/gtest.h>

#include "fbr/sampler.hpp"
#include "support.hpp"

#include <boost/math/distributions/normal.hpp>

using namespace fbr;
using namespace fbr::testing;

namespace {

struct ConjugateMean {
  Eigen::VectorXd y;
  double prior_var = 100.0;
  ParamLayout lay = ParamLayout().add("mu", 1);

  const ParamLayout& layout() const { return lay; }
  Eigen::Index dim() const { return 1; }
  double log_density(const Eigen::VectorXd& th, Eigen::VectorXd* g) const {
    const double mu = th(0);
    const double r = (y.array() - mu).sum();
    if (g) *g = Eigen::VectorXd::Constant(1, r - mu / prior_var);
    return -0.5 * (y.array() - mu).square().sum() - 0.5 * mu * mu / prior_var;
  }
  double post_var() const { return 1.0 / (static_cast<double>(y.size()) + 1.0 / prior_var); }
  double post_mean() const { return post_var() * y.sum(); }
};

struct Gaussian {
  Eigen::MatrixXd precision;
  ParamLayout lay;
  explicit Gaussian(Eigen::MatrixXd cov) : precision(cov.inverse()) { lay.add("x", cov.rows()); }
  const ParamLayout& layout() const { return lay; }
  Eigen::Index dim() const { return precision.rows(); }
  double log_density(const Eigen::VectorXd& x, Eigen::VectorXd* g) const {
    const Eigen::VectorXd px = precision * x;
    if (g) *g = -px;
    return -0.5 * x.dot(px);
  }
};

struct NeverFinite {
  ParamLayout lay = ParamLayout().add("x", 2);
  const ParamLayout& layout() const { return lay; }
  Eigen::Index dim() const { return 2; }
  double log_density(const Eigen::VectorXd&, Eigen::VectorXd* g) const {
    if (g) *g = Eigen::VectorXd::Zero(2);
    return -std::numeric_limits<double>::infinity();
  }
};

// Standard normal on a narrow slab; the sampler keeps stepping off the edge.
struct Slab {
  ParamLayout lay = ParamLayout().add("x", 1);
  const ParamLayout& layout() const { return lay; }
  Eigen::Index dim() const { return 1; }
  double log_density(const Eigen::VectorXd& x, Eigen::VectorXd* g) const {
    if (std::abs(x(0)) > 0.02) throw NumericalError("outside slab");
    if (g) *g = -x * 1e-6;
    return -0.5e-6 * x(0) * x(0);
  }
};

ConjugateMean conjugate() {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> nd(1.3, 1.0);
  ConjugateMean m;
  m.y.resize(20);
  for (int i = 0; i < 20; ++i) m.y(i) = nd(rng);
  return m;
}

SamplerConfig cfg(int iter, int warm, int chains, std::uint64_t seed) {
  SamplerConfig c;
  c.n_iter = iter;
  c.n_warmup = warm;
  c.n_chains = chains;
  c.seed = seed;
  return c;
}

double ks_normal(std::vector<double> x, double sd) {
  std::sort(x.begin(), x.end());
  boost::math::normal_distribution<double> dist(0.0, sd);
  double d = 0.0;
  const auto n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = boost::math::cdf(dist, x[i]);
    d = std::max({d, std::abs(f - i / n), std::abs((i + 1) / n - f)});
  }
  return d;
}

}  // namespace

TEST(Sampler, Deterministic) {
  const auto model = conjugate();
  const auto a = run_hmc(model, cfg(400, 200, 3, 9));
  const auto b = run_hmc(model, cfg(400, 200, 3, 9));
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(a.chains[c], b.chains[c]);
  const auto d = run_hmc(model, cfg(400, 200, 3, 10));
  EXPECT_NE(a.chains[0], d.chains[0]);
}

TEST(Sampler, ConjugatePosterior) {
  const auto model = conjugate();
  const auto out = run_hmc(model, cfg(3000, 1000, 4, 1));
  const Eigen::VectorXd mu = out.pooled().col(0);
  const double mean = mu.mean();
  const double var = (mu.array() - mean).square().sum() / (mu.size() - 1);
  const double ess = out.ess(0);
  EXPECT_LT(std::abs(mean - model.post_mean()), 3 * std::sqrt(model.post_var() / ess));
  EXPECT_LT(std::abs(var - model.post_var()), 3 * model.post_var() * std::sqrt(2.0 / ess));
  EXPECT_LT(out.rhat(0), 1.01);
  double accept = 0.0;
  for (const auto& s : out.stats) accept += s.mean_accept / out.stats.size();
  EXPECT_NEAR(accept, 0.8, 0.1);
  EXPECT_FALSE(out.divergence_warning);
}

TEST(Sampler, StandardNormalMoments) {
  Gaussian model(Eigen::MatrixXd::Identity(10, 10));
  const auto out = run_hmc(model, cfg(3000, 1000, 4, 2));
  const Eigen::MatrixXd x = out.pooled();
  ASSERT_EQ(x.rows(), 8000);
  const Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov = c.transpose() * c / (x.rows() - 1.0);
  EXPECT_LT((cov - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff(), 0.1);
}

TEST(Sampler, CorrelatedMarginalsPassKs) {
  Eigen::Matrix2d cov;
  cov << 1.0, 0.9, 0.9, 1.0;
  Gaussian model(cov);
  const auto out = run_hmc(model, cfg(3000, 1000, 4, 3));
  const Eigen::MatrixXd x = out.pooled();
  const double crit = 1.628 / std::sqrt(static_cast<double>(x.rows()));
  for (int j = 0; j < 2; ++j) {
    const Eigen::VectorXd col = x.col(j);
    EXPECT_LT(ks_normal({col.data(), col.data() + col.size()}, 1.0), crit) << j;
  }
}

TEST(Sampler, EnergyConservedForTinySteps) {
  Eigen::Matrix2d cov;
  cov << 2.0, 0.3, 0.3, 0.5;
  Gaussian model(cov);
  const double drift = hamiltonian_drift(model, Eigen::Vector2d(0.4, -1.1), Eigen::Vector2d(0.7, 0.2),
                                         Eigen::Vector2d(1.0, 1.0), 1e-4, 2000);
  EXPECT_LT(drift, 1e-6);
}

TEST(Sampler, InitFailure) {
  EXPECT_THROW(run_hmc(NeverFinite{}, cfg(50, 20, 1, 1)), InitError);
}

TEST(Sampler, DivergenceWarning) {
  SamplerConfig c = cfg(300, 100, 1, 4);
  c.init_radius = 0.01;
  const auto out = run_hmc(Slab{}, c);
  EXPECT_TRUE(out.divergence_warning);
  EXPECT_FALSE(out.warning.empty());
}

TEST(Sampler, ConfigValidation) {
  EXPECT_THROW(run_hmc(conjugate(), cfg(100, 100, 1, 1)), SpecError);
  EXPECT_THROW(run_hmc(conjugate(), cfg(100, 10, 0, 1)), SpecError);
}

// ---------------------------------------------------------------------------

namespace {
std::vector<Eigen::VectorXd> iid_chains(std::uint64_t seed, int chains, int n) {
  std::mt19937_64 rng(seed);
  std::vector<Eigen::VectorXd> out;
  for (int c = 0; c < chains; ++c) out.push_back(random_vector(rng, n));
  return out;
}
}  // namespace

TEST(Diagnostics, IidChains) {
  const auto chains = iid_chains(5, 4, 2000);
  const auto d = diagnose(chains);
  EXPECT_GE(d.rhat, 0.999);
  EXPECT_LE(d.rhat, 1.01);
  EXPECT_GE(d.ess, 0.8 * 8000);
}

TEST(Diagnostics, ShiftedChain) {
  auto chains = iid_chains(6, 4, 2000);
  chains[2].array() += 10.0;
  EXPECT_GT(diagnose(chains).rhat, 1.5);
}

TEST(Diagnostics, AutocorrelatedChainsHaveLowEss) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  std::vector<Eigen::VectorXd> chains;
  for (int c = 0; c < 4; ++c) {
    Eigen::VectorXd x(2000);
    double v = 0.0;
    for (int i = 0; i < 2000; ++i) x(i) = v = 0.9 * v + std::sqrt(1 - 0.81) * nd(rng);
    chains.push_back(x);
  }
  // AR(1) with phi = 0.9: ESS is about N (1 - phi) / (1 + phi)
  const double ess = diagnose(chains).ess;
  EXPECT_NEAR(ess / 8000.0, 0.1 / 1.9, 0.02);
}

TEST(Diagnostics, ZeroVarianceIsNan) {
  std::vector<Eigen::VectorXd> chains(3, Eigen::VectorXd::Constant(100, 2.0));
  const auto d = diagnose(chains);
  EXPECT_TRUE(std::isnan(d.rhat));
  EXPECT_TRUE(std::isnan(d.ess));
}
