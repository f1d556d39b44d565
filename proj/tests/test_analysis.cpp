#include <gtest/gtest.h>

#include "fbr/analysis.hpp"
#include "support.hpp"

#include <random>

using namespace fbr;
using namespace fbr::testing;

namespace {

CurveDraws one_point(std::vector<double> v) {
  CurveDraws c;
  c.values = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  c.grid = Eigen::VectorXd::Constant(1, 0.5);
  return c;
}

CurveDraws gaussian_curves(std::mt19937_64& rng, int q, int m, double rho) {
  // AR(1)-correlated curves along t, N(0, 1) marginals
  std::normal_distribution<double> nd;
  CurveDraws c{Eigen::MatrixXd(q, m), equal_grid(m)};
  for (int r = 0; r < q; ++r) {
    double v = nd(rng);
    c.values(r, 0) = v;
    for (int j = 1; j < m; ++j) c.values(r, j) = v = rho * v + std::sqrt(1 - rho * rho) * nd(rng);
  }
  return c;
}

SplineSystem small_system(int k = 8) {
  const Eigen::VectorXd g = equal_grid(25);
  return build_spline_system({SplineKind::open_cubic, k, 0.0, 1.0}, std::span<const double>(g.data(), 25));
}

}  // namespace

TEST(Quantile, Type7HandExample) {
  const std::vector<double> v{5, 3, 1, 4, 2};
  EXPECT_NEAR(quantile_type7(v, 0.1), 1.4, 1e-12);
  EXPECT_NEAR(quantile_type7(v, 0.9), 4.6, 1e-12);
  EXPECT_DOUBLE_EQ(quantile_type7(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile_type7(v, 1.0), 5.0);
}

TEST(PointwiseInterval, HandExample) {
  const Band b = pointwise_interval(one_point({1, 2, 3, 4, 5}), 0.2);
  EXPECT_NEAR(b.lo(0), 1.4, 1e-12);
  EXPECT_NEAR(b.hi(0), 4.6, 1e-12);
}

TEST(PointwiseInterval, ConstantDraws) {
  CurveDraws c{Eigen::MatrixXd::Constant(30, 4, 2.5), equal_grid(4)};
  const Band b = pointwise_interval(c, 0.05);
  EXPECT_EQ(b.lo, Eigen::VectorXd::Constant(4, 2.5));
  EXPECT_EQ(b.hi, Eigen::VectorXd::Constant(4, 2.5));
}

TEST(PointwiseInterval, SymmetricDraws) {
  std::mt19937_64 rng(1);
  CurveDraws c = gaussian_curves(rng, 4000, 5, 0.0);
  c.values.array() += 3.0;
  const Band b = pointwise_interval(c, 0.1);
  for (int j = 0; j < 5; ++j) EXPECT_NEAR((b.lo(j) + b.hi(j)) / 2.0, c.mean()(j), 0.08);
}

TEST(Intervals, AlphaValidated) {
  const CurveDraws c = one_point({0, 1, 2});
  for (double a : {0.0, 1.0, -0.1, 1.5, std::nan("")}) {
    EXPECT_THROW(pointwise_interval(c, a), SpecError);
    EXPECT_THROW(normal_interval(c, a), SpecError);
    EXPECT_THROW(cma_interval(c, a), SpecError);
  }
}

TEST(CmaInterval, HandExample) {
  const CmaBand b = cma_interval(one_point({0, 1, 2}), 0.05);
  EXPECT_DOUBLE_EQ(b.threshold, 1.0);
  EXPECT_DOUBLE_EQ(b.lo(0), 0.0);
  EXPECT_DOUBLE_EQ(b.hi(0), 2.0);
}

TEST(CmaInterval, ConstantCurvesAreDegenerate) {
  CurveDraws c{Eigen::MatrixXd::Constant(10, 3, 1.0), equal_grid(3)};
  EXPECT_THROW(cma_interval(c, 0.05), DegenerateDrawsError);
}

TEST(CmaInterval, ConstantPointsExcluded) {
  std::mt19937_64 rng(2);
  CurveDraws c = gaussian_curves(rng, 500, 6, 0.5);
  c.values.col(0).setConstant(4.0);
  const CmaBand b = cma_interval(c, 0.05);
  EXPECT_TRUE(std::isfinite(b.threshold));
  EXPECT_DOUBLE_EQ(b.lo(0), 4.0);
  EXPECT_DOUBLE_EQ(b.hi(0), 4.0);
}

TEST(CmaInterval, ContainsNormalIntervalWhenMGreaterThanOne) {
  std::mt19937_64 rng(3);
  for (double rho : {0.0, 0.5, 0.95, 0.999})
    for (int m : {2, 10, 40}) {
      const CurveDraws c = gaussian_curves(rng, 1000, m, rho);
      const Band pw = normal_interval(c, 0.05);
      const CmaBand cma = cma_interval(c, 0.05);
      EXPECT_GE(cma.threshold, 1.959963984540054) << rho << " " << m;
      for (int j = 0; j < m; ++j) {
        EXPECT_LE(cma.lo(j), pw.lo(j) + 1e-12);
        EXPECT_GE(cma.hi(j), pw.hi(j) - 1e-12);
      }
      EXPECT_GT(cma.width().sum(), pw.width().sum());
    }
}

TEST(CmaInterval, SimultaneousCoverage) {
  std::mt19937_64 rng(4);
  const int reps = 200;
  int covered_zero = 0, covered_fresh = 0;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(50);
  for (int r = 0; r < reps; ++r) {
    const CurveDraws c = gaussian_curves(rng, 4000, 50, 0.9);
    const CmaBand band = cma_interval(c, 0.05);
    if (band.covers(zero)) ++covered_zero;
    // stricter: a fresh curve from the law of the draws
    const CurveDraws fresh = gaussian_curves(rng, 1, 50, 0.9);
    if (band.covers(fresh.values.row(0).transpose())) ++covered_fresh;
  }
  EXPECT_GE(covered_zero, static_cast<int>(0.94 * reps)) << covered_zero;
  EXPECT_GE(covered_fresh, static_cast<int>(0.94 * reps)) << covered_fresh;
}

TEST(NormalInterval, MeanPlusMinusZSd) {
  const Band b = normal_interval(one_point({0, 1, 2}), 0.05);
  EXPECT_NEAR(b.lo(0), 1.0 - 1.959963984540054, 1e-12);
  EXPECT_NEAR(b.hi(0), 1.0 + 1.959963984540054, 1e-12);
}

TEST(ReconstructBeta, ZeroDraws) {
  std::mt19937_64 rng(5);
  const auto sys = small_system();
  const auto map = build_reparam(sys, random_matrix(rng, 8, 40));
  const CurveDraws c = reconstruct_beta(Eigen::MatrixXd::Zero(3, 8), map, sys);
  EXPECT_EQ(c.values, Eigen::MatrixXd::Zero(3, 25));
}

TEST(ReconstructBeta, MatchesDirectExpansionAndIsLinear) {
  std::mt19937_64 rng(6);
  const auto sys = small_system();
  const auto map = build_reparam(sys, random_matrix(rng, 8, 40));
  const Eigen::VectorXd b = random_vector(rng, 8);
  const Eigen::VectorXd bt = map.to_transformed(b);
  const CurveDraws c = reconstruct_beta(Eigen::MatrixXd(bt.transpose()), map, sys);
  Eigen::VectorXd direct(25);
  for (int m = 0; m < 25; ++m) direct(m) = sys.basis_at(sys.grid(m)).dot(b);
  EXPECT_LT((c.values.row(0).transpose() - direct).cwiseAbs().maxCoeff(), 1e-10);

  const Eigen::MatrixXd b1 = random_matrix(rng, 1, 8), b2 = random_matrix(rng, 1, 8);
  const Eigen::MatrixXd sum = b1 + b2;
  const Eigen::MatrixXd lhs = reconstruct_beta(sum, map, sys).values;
  const Eigen::MatrixXd rhs = reconstruct_beta(b1, map, sys).values + reconstruct_beta(b2, map, sys).values;
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ReconstructBeta, FromPosteriorDraws) {
  std::mt19937_64 rng(7);
  const auto sys = small_system();
  const auto map = build_reparam(sys, random_matrix(rng, 8, 40));
  PosteriorDraws d;
  d.layout.add("eta0", 1).add("b_r", map.rank).add("b_f", 8 - map.rank).add("log_sigma_b", 1);
  d.chains = {random_matrix(rng, 4, 10), random_matrix(rng, 4, 10)};
  const CurveDraws c = reconstruct_beta(d, map, sys);
  ASSERT_EQ(c.values.rows(), 8);
  const Eigen::VectorXd bt = d.chains[1].row(2).segment(1, 8).transpose();
  const Eigen::VectorXd direct = sys.eval * map.to_raw(bt);
  EXPECT_LT((c.values.row(6).transpose() - direct).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ReconstructBeta, ShapeMismatch) {
  std::mt19937_64 rng(8);
  const auto sys = small_system(8);
  const auto map = build_reparam(small_system(9), random_matrix(rng, 9, 40));
  EXPECT_THROW(reconstruct_beta(Eigen::MatrixXd::Zero(1, 9), map, sys), ShapeError);
  PosteriorDraws d;
  d.layout.add("b_r", 3).add("b_f", 2);
  d.chains = {Eigen::MatrixXd::Zero(2, 5)};
  const auto map8 = build_reparam(sys, random_matrix(rng, 8, 40));
  EXPECT_THROW(reconstruct_beta(d, map8, sys), ShapeError);
}

TEST(Survival, ClosedFormExponential) {
  // one basis function with I(t) = t, c = (1), eta = 0
  Eigen::MatrixXd c = Eigen::MatrixXd::Ones(1, 1);
  Eigen::VectorXd times(3);
  times << 0.0, 0.5, 1.0;
  const Eigen::MatrixXd i_eval = times;
  const CurveDraws s = survival_from_cumulative(c, Eigen::VectorXd::Zero(1), i_eval, times, 0.0);
  EXPECT_DOUBLE_EQ(s.values(0, 0), 1.0);
  EXPECT_NEAR(s.values(0, 2), 0.3678794, 1e-6);
  EXPECT_NEAR(s.values(0, 1), std::exp(-0.5), 1e-12);
}

TEST(Survival, FromDrawsMonotoneAndOneAtLowerBoundary) {
  std::mt19937_64 rng(9);
  std::vector<double> t(60);
  std::exponential_distribution<double> ex(1.0);
  for (auto& v : t) v = ex(rng);
  const auto [lo, hi] = hazard_boundary(t);
  const HazardBasis hb = build_hazard_basis(t, 5, lo, hi);
  PosteriorDraws d;
  d.layout.add("eta0", 1).add("c_raw", 4);
  d.chains = {random_matrix(rng, 20, 5)};
  const Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(40, lo, hi);
  const CurveDraws s = survival_curve(d, hb, times, 0.3);
  for (int q = 0; q < 20; ++q) {
    EXPECT_NEAR(s.values(q, 0), 1.0, 1e-12);
    for (int j = 1; j < 40; ++j) EXPECT_LE(s.values(q, j), s.values(q, j - 1) + 1e-15);
    EXPECT_GT(s.values(q, 0), s.values(q, 39));
  }
  Eigen::VectorXd outside(1);
  outside << hi + 1.0;
  EXPECT_THROW(survival_curve(d, hb, outside, 0.0), DomainError);
}

TEST(ScalarSummary, MatchesHandValues) {
  Eigen::VectorXd v(5);
  v << 1, 2, 3, 4, 5;
  const auto s = summarize_scalar(v, "gamma");
  EXPECT_DOUBLE_EQ(s.mean, 3.0);
  EXPECT_NEAR(s.sd, std::sqrt(2.5), 1e-12);
  EXPECT_NEAR(s.q025, 1.1, 1e-12);
  EXPECT_NEAR(s.q975, 4.9, 1e-12);
}
