#include <gtest/gtest.h>

#include "fbr/fpca.hpp"
#include "support.hpp"

#include <numbers>

using namespace fbr;
using namespace fbr::testing;

namespace {
Eigen::MatrixXd rank2_signal(std::mt19937_64& rng, int n, int m, double noise) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd w(n, m);
  for (int i = 0; i < n; ++i) {
    const double a = 3.0 * nd(rng), b = 1.5 * nd(rng);
    for (int j = 0; j < m; ++j) {
      const double t = static_cast<double>(j) / m;
      w(i, j) = a * std::sqrt(2.0) * std::sin(std::numbers::pi * t) +
                b * std::sqrt(2.0) * std::sin(2 * std::numbers::pi * t) + noise * nd(rng);
    }
  }
  return w;
}
}  // namespace

TEST(Fpca, RankOneNoiseless) {
  const int m = 40;
  Eigen::VectorXd phi(m);
  for (int j = 0; j < m; ++j) phi(j) = std::cos(2 * std::numbers::pi * j / m) + 0.3;
  Eigen::MatrixXd w(10, m);
  for (int i = 0; i < 10; ++i) w.row(i) = (i % 2 ? 1.0 : -1.0) * phi.transpose();
  const auto fit = fit_fpca(w, 0.99);
  EXPECT_EQ(fit.num_components(), 1);
  EXPECT_GE(fit.pve, 0.999);
  const Eigen::VectorXd unit = phi * std::sqrt(static_cast<double>(m)) / phi.norm();
  const Eigen::VectorXd e = fit.efunctions.row(0).transpose();
  EXPECT_LT(std::min((e - unit).cwiseAbs().maxCoeff(), (e + unit).cwiseAbs().maxCoeff()), 1e-8);
}

TEST(Fpca, MatchesSampleCovarianceOracle) {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd w = random_matrix(rng, 6, 8);
  const auto fit = fit_fpca(w, 1.0);
  Eigen::MatrixXd c = w.rowwise() - w.colwise().mean();
  const Eigen::MatrixXd cov = c.transpose() * c / 5.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  ASSERT_EQ(fit.num_components(), 5);  // n - 1 nonzero eigenvalues
  for (int j = 0; j < 5; ++j) {
    EXPECT_NEAR(fit.evalues(j), es.eigenvalues()(7 - j) / 8.0, 1e-8);
    const Eigen::VectorXd v = es.eigenvectors().col(7 - j) * std::sqrt(8.0);
    const Eigen::VectorXd e = fit.efunctions.row(j).transpose();
    EXPECT_LT(std::min((e - v).cwiseAbs().maxCoeff(), (e + v).cwiseAbs().maxCoeff()), 1e-8);
  }
  EXPECT_LT((fit.reconstruct() - w).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Fpca, OrthonormalAndSigned) {
  std::mt19937_64 rng(2);
  const auto fit = fit_fpca(rank2_signal(rng, 200, 30, 0.5), 0.95);
  const Eigen::MatrixXd gram = fit.efunctions * fit.efunctions.transpose() / 30.0;
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff(), 1e-8);
  for (Eigen::Index j = 0; j < fit.num_components(); ++j) {
    Eigen::Index arg;
    fit.efunctions.row(j).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(fit.efunctions(j, arg), 0.0);
    if (j > 0) {
      EXPECT_GE(fit.evalues(j - 1), fit.evalues(j));
    }
  }
}

TEST(Fpca, NoiseVarianceRecovered) {
  std::mt19937_64 rng(3);
  const double sigma = 0.8;
  const Eigen::MatrixXd w = rank2_signal(rng, 500, 50, sigma);
  const auto fit = fit_fpca(w, 1.0, 2);
  EXPECT_EQ(fit.num_components(), 2);
  EXPECT_NEAR(fit.noise_var, sigma * sigma, 0.2 * sigma * sigma);
}

TEST(Fpca, ReconstructionErrorNonincreasing) {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd w = rank2_signal(rng, 60, 25, 1.0);
  double prev = std::numeric_limits<double>::infinity();
  for (int j = 1; j <= 10; ++j) {
    const auto fit = fit_fpca(w, 1.0, j);
    const double err = (fit.reconstruct() - w).squaredNorm();
    EXPECT_LE(err, prev + 1e-9);
    prev = err;
  }
}

TEST(Fpca, ScoresCentered) {
  std::mt19937_64 rng(5);
  const auto fit = fit_fpca(rank2_signal(rng, 400, 20, 0.3), 0.9);
  for (Eigen::Index j = 0; j < fit.num_components(); ++j) {
    const Eigen::VectorXd s = fit.scores.col(j);
    const double sd = std::sqrt((s.array() - s.mean()).square().sum() / (s.size() - 1));
    EXPECT_LT(std::abs(s.mean()), 3 * sd / std::sqrt(400.0));
  }
}

TEST(Fpca, Errors) {
  EXPECT_THROW(fit_fpca(Eigen::MatrixXd::Ones(5, 4), 0.9), DegenerateDataError);
  EXPECT_THROW(fit_fpca(Eigen::MatrixXd::Ones(1, 4), 0.9), ShapeError);
  EXPECT_THROW(fit_fpca(Eigen::MatrixXd::Random(5, 4), 0.0), SpecError);
  EXPECT_THROW(fit_fpca(Eigen::MatrixXd::Random(5, 4), 1.5), SpecError);
}
