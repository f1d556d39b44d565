#include <gtest/gtest.h>

#include "fbr/basis.hpp"
#include "support.hpp"

#include <functional>
#include <vector>

using namespace fbr;
using fbr::testing::equal_grid;

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// Textbook recursive Cox-de Boor, used as an independent oracle.
double cox_de_boor(const std::vector<double>& t, int i, int p, double x) {
  if (p == 0) {
    const bool last = t[i + 1] == t.back() && x == t.back() && t[i] < t[i + 1];
    return ((t[i] <= x && x < t[i + 1]) || last) ? 1.0 : 0.0;
  }
  double a = 0.0, b = 0.0;
  if (t[i + p] > t[i]) a = (x - t[i]) / (t[i + p] - t[i]) * cox_de_boor(t, i, p - 1, x);
  if (t[i + p + 1] > t[i + 1])
    b = (t[i + p + 1] - x) / (t[i + p + 1] - t[i + 1]) * cox_de_boor(t, i + 1, p - 1, x);
  return a + b;
}

double simpson(const std::function<double(double)>& f, double a, double b, int n = 4000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

SplineSystem make(SplineKind kind, int k, int m = 50) {
  const auto g = to_std(equal_grid(m));
  return build_spline_system({kind, k, 0.0, 1.0}, g);
}

}  // namespace

TEST(Basis, BernsteinCaseAtMidpoint) {
  const auto sys = make(SplineKind::open_cubic, 4, 11);
  const Eigen::RowVectorXd row = sys.basis_at(0.5);
  EXPECT_NEAR(row(0), 0.125, 1e-14);
  EXPECT_NEAR(row(1), 0.375, 1e-14);
  EXPECT_NEAR(row(2), 0.375, 1e-14);
  EXPECT_NEAR(row(3), 0.125, 1e-14);
}

TEST(Basis, MatchesRecursiveOracle) {
  for (int k : {5, 8, 12}) {
    const auto sys = make(SplineKind::open_cubic, k, 37);
    std::vector<double> knots(4, 0.0);
    knots.insert(knots.end(), sys.base_knots.begin() + 1, sys.base_knots.end() - 1);
    knots.insert(knots.end(), 4, 1.0);
    for (double x : {0.0, 0.013, 0.25, 0.5, 0.77, 0.999, 1.0}) {
      const Eigen::RowVectorXd row = sys.basis_at(x);
      for (int j = 0; j < k; ++j) EXPECT_NEAR(row(j), cox_de_boor(knots, j, 3, x), 1e-13) << k << " " << x;
    }
  }
}

TEST(Basis, PartitionOfUnity) {
  for (auto kind : {SplineKind::open_cubic, SplineKind::cyclic_cubic}) {
    for (int k = 4; k <= 15; ++k) {
      const auto sys = make(kind, k);
      for (Eigen::Index m = 0; m < sys.eval.rows(); ++m)
        EXPECT_NEAR(sys.eval.row(m).sum(), 1.0, 1e-12);
      for (double x = 0.0; x <= 1.0; x += 0.0137) EXPECT_NEAR(sys.basis_at(x).sum(), 1.0, 1e-12);
    }
  }
}

TEST(Basis, PenaltyRank) {
  for (int k = 4; k <= 15; ++k) {
    EXPECT_EQ(make(SplineKind::open_cubic, k).rank, k - 2);
    EXPECT_EQ(make(SplineKind::cyclic_cubic, k).rank, k - 1);
  }
}

TEST(Basis, PenaltySymmetricPsd) {
  for (auto kind : {SplineKind::open_cubic, SplineKind::cyclic_cubic}) {
    const auto sys = make(kind, 10);
    EXPECT_LT((sys.penalty - sys.penalty.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sys.penalty);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10 * es.eigenvalues().maxCoeff());
  }
}

TEST(Basis, PenaltyMatchesFineQuadrature) {
  const auto sys = make(SplineKind::open_cubic, 7);
  // second derivatives from finite differences of basis values
  auto d2 = [&](double x, int j) {
    const double h = 1e-4;
    const double a = std::clamp(x, h, 1.0 - h);
    return (sys.basis_at(a + h)(j) - 2 * sys.basis_at(a)(j) + sys.basis_at(a - h)(j)) / (h * h);
  };
  for (int i = 0; i < 7; ++i) {
    for (int j = i; j < 7; ++j) {
      double s = 0.0;
      const int n = 2000;
      for (int q = 0; q < n; ++q) {
        const double x = (q + 0.5) / n;
        s += d2(x, i) * d2(x, j) / n;
      }
      EXPECT_NEAR(sys.penalty(i, j), s, 1e-3 * std::max(1.0, std::abs(s)));
    }
  }
}

TEST(Basis, SecondDerivativeMatchesDifferences) {
  const auto sys = make(SplineKind::cyclic_cubic, 9);
  const double h = 1e-5;
  for (double x : {0.11, 0.4, 0.63, 0.9}) {
    const Eigen::RowVectorXd fd = (sys.basis_at(x + h) - 2 * sys.basis_at(x) + sys.basis_at(x - h)) / (h * h);
    EXPECT_LT((fd - sys.basis_at(x, 2)).cwiseAbs().maxCoeff(), 1e-3);
  }
}

TEST(Basis, AffineAndConstantNullSpaces) {
  const auto dense = to_std(equal_grid(301));
  for (int k = 4; k <= 15; ++k) {
    const auto open = make(SplineKind::open_cubic, k);
    const Eigen::MatrixXd psi = open.basis_matrix(dense);
    Eigen::VectorXd f(psi.rows());
    for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = 2.0 * dense[static_cast<std::size_t>(i)] + 1.0;
    const Eigen::VectorXd b = psi.colPivHouseholderQr().solve(f);
    EXPECT_LT((psi * b - f).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(b.dot(open.penalty * b), 0.0, 1e-10);

    const auto cyc = make(SplineKind::cyclic_cubic, k);
    const Eigen::VectorXd c = Eigen::VectorXd::Constant(k, -3.5);
    EXPECT_NEAR(c.dot(cyc.penalty * c), 0.0, 1e-10);
  }
}

TEST(Basis, CyclicPeriodicMatching) {
  const auto sys = make(SplineKind::cyclic_cubic, 8);
  for (int d = 0; d <= 2; ++d)
    EXPECT_LT((sys.basis_at(0.0, d) - sys.basis_at(1.0, d)).cwiseAbs().maxCoeff(), 1e-9) << d;
}

TEST(Basis, Errors) {
  const auto g = to_std(equal_grid(10));
  EXPECT_THROW(build_spline_system({SplineKind::open_cubic, 3, 0.0, 1.0}, g), SpecError);
  EXPECT_THROW(build_spline_system({SplineKind::cyclic_cubic, 2, 0.0, 1.0}, g), SpecError);
  EXPECT_THROW(build_spline_system({SplineKind::open_cubic, 6, 0.0, 0.5}, g), DomainError);
  std::vector<double> bad = {0.0, 0.5, 0.4, 1.0};
  EXPECT_THROW(build_spline_system({SplineKind::open_cubic, 4, 0.0, 1.0}, bad), DomainError);
  const auto sys = make(SplineKind::open_cubic, 6);
  EXPECT_THROW(sys.basis_at(1.5), DomainError);
}

// ---------------------------------------------------------------------------
// Hazard basis

namespace {
std::vector<double> event_times() {
  std::mt19937_64 rng(7);
  std::exponential_distribution<double> ex(1.0);
  std::vector<double> t(80);
  for (auto& v : t) v = ex(rng);
  return t;
}
}  // namespace

TEST(HazardBasis, MSplinesIntegrateToOne) {
  const auto t = event_times();
  for (int df : {3, 4, 5, 7}) {
    const auto [lo, hi] = hazard_boundary(t);
    const auto hb = build_hazard_basis(t, df, lo, hi);
    for (int l = 0; l < df; ++l) {
      double total = 0.0;
      // integrate piecewise between knots for accuracy
      for (std::size_t s = 0; s + 1 < hb.knots.size(); ++s)
        if (hb.knots[s + 1] > hb.knots[s])
          total += simpson([&](double x) { return hb.m_at(x)(l); }, hb.knots[s], hb.knots[s + 1], 200);
      EXPECT_NEAR(total, 1.0, 1e-6) << df << " " << l;
    }
  }
}

TEST(HazardBasis, ISplineEndpointsAndMonotone) {
  const auto t = event_times();
  const auto [lo, hi] = hazard_boundary(t);
  const auto hb = build_hazard_basis(t, 5, lo, hi);
  for (int l = 0; l < 5; ++l) {
    EXPECT_NEAR(hb.i_at(hi)(l), 1.0, 1e-8);
    EXPECT_NEAR(hb.i_at(lo)(l), 0.0, 1e-12);
  }
  Eigen::RowVectorXd prev = hb.i_at(lo);
  for (int q = 1; q <= 400; ++q) {
    const Eigen::RowVectorXd cur = hb.i_at(lo + (hi - lo) * q / 400.0);
    EXPECT_TRUE((cur.array() >= prev.array() - 1e-14).all());
    EXPECT_TRUE((cur.array() >= 0.0).all() && (cur.array() <= 1.0).all());
    prev = cur;
  }
  EXPECT_TRUE((hb.m_eval.array() >= 0.0).all());
  EXPECT_TRUE((hb.i_eval.array() >= 0.0).all() && (hb.i_eval.array() <= 1.0).all());
}

TEST(HazardBasis, ISplineIsIntegralOfMSpline) {
  const auto t = event_times();
  const auto [lo, hi] = hazard_boundary(t);
  const auto hb = build_hazard_basis(t, 6, lo, hi);
  for (std::size_t i = 0; i < 10; ++i) {
    const double y = t[i];
    for (int l = 0; l < 6; ++l) {
      double integral = 0.0;
      double a = lo;
      for (std::size_t s = 1; s < hb.knots.size() && a < y; ++s) {
        const double b = std::min(hb.knots[s], y);
        if (b > a) integral += simpson([&](double x) { return hb.m_at(x)(l); }, a, b, 200);
        a = std::max(a, b);
      }
      EXPECT_NEAR(hb.i_eval(static_cast<Eigen::Index>(i), l), integral, 1e-6);
    }
  }
}

TEST(HazardBasis, DerivativeOfISplineIsMSpline) {
  const auto t = event_times();
  const auto [lo, hi] = hazard_boundary(t);
  const auto hb = build_hazard_basis(t, 5, lo, hi);
  const double h = 1e-6 * (hi - lo);
  for (int q = 1; q < 40; ++q) {
    const double x = lo + (hi - lo) * (q + 0.37) / 41.0;
    const Eigen::RowVectorXd fd = (hb.i_at(x + h) - hb.i_at(x - h)) / (2 * h);
    const Eigen::RowVectorXd m = hb.m_at(x);
    for (int l = 0; l < 5; ++l)
      if (m(l) > 1e-6) {
        EXPECT_LT(std::abs(fd(l) - m(l)) / m(l), 1e-4);
      }
  }
}

TEST(HazardBasis, Errors) {
  const auto t = event_times();
  EXPECT_THROW(build_hazard_basis(t, 2, -1.0, 100.0), SpecError);
  EXPECT_THROW(build_hazard_basis(t, 5, 0.5, 100.0), DomainError);
  const auto [lo, hi] = hazard_boundary(t);
  const auto hb = build_hazard_basis(t, 5, lo, hi);
  EXPECT_THROW(hb.m_at(hi + 1.0), DomainError);
}

TEST(HazardBasis, BoundaryStaysPositiveForPositiveTimes) {
  const std::vector<double> t{0.01, 0.5, 2.0, 300.0};
  const auto [lo, hi] = hazard_boundary(t);
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(lo, 0.01);
  EXPECT_GT(hi, 300.0);
  const std::vector<double> s{-2.0, 1.0};
  const auto [slo, shi] = hazard_boundary(s);
  EXPECT_NEAR(slo, -2.003, 1e-12);
  EXPECT_NEAR(shi, 1.003, 1e-12);
}
