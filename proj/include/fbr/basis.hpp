#pragma once

// Spline bases used throughout: open and periodic cubic B-splines with the
// exact integrated second-derivative penalty, and the M-/I-spline pair used
// for the baseline hazard of the survival models.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "fbr/errors.hpp"

namespace fbr {

enum class SplineKind { open_cubic, cyclic_cubic };

inline std::string to_string(SplineKind kind) {
  return kind == SplineKind::open_cubic ? "open" : "cyclic";
}

struct SplineSpec {
  SplineKind kind = SplineKind::open_cubic;
  int num_basis = 10;
  double lower = 0.0;
  double upper = 1.0;

  int min_basis() const { return kind == SplineKind::open_cubic ? 4 : 3; }
  /// Rank of the second-derivative penalty: affine functions (open) or
  /// constants (cyclic) are unpenalized.
  int penalty_rank() const {
    return kind == SplineKind::open_cubic ? num_basis - 2 : num_basis - 1;
  }
};

namespace detail {

/// Type-7 quantile of sorted data.
inline double quantile_sorted(std::span<const double> sorted, double p) {
  const auto n = sorted.size();
  if (n == 0) return std::nan("");
  const double h = (static_cast<double>(n) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, n - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double safe_ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

/// Index s of the knot interval [knots[s], knots[s+1]) containing t, with
/// the right end of the last non-degenerate interval treated as closed.
inline std::size_t find_span(const std::vector<double>& knots, double t) {
  auto it = std::upper_bound(knots.begin(), knots.end(), t);
  std::size_t s = static_cast<std::size_t>(std::distance(knots.begin(), it));
  s = s == 0 ? 0 : s - 1;
  while (s > 0 && (s + 1 >= knots.size() || knots[s] == knots[s + 1])) --s;
  return s;
}

/// All B-splines of `degree` on `knots` (size knots.size()-degree-1) at t,
/// differentiated `deriv` times. Plain Cox-de Boor recursion over the full
/// knot vector; basis sizes here are small.
inline Eigen::VectorXd bspline_values(const std::vector<double>& knots, int degree,
                                      double t, int deriv = 0) {
  const auto nk = static_cast<Eigen::Index>(knots.size());
  if (deriv > degree) return Eigen::VectorXd::Zero(nk - degree - 1);
  const int base = degree - deriv;
  const std::size_t span = find_span(knots, t);
  Eigen::VectorXd n = Eigen::VectorXd::Zero(nk - 1);
  n(static_cast<Eigen::Index>(span)) = 1.0;
  for (int q = 1; q <= base; ++q) {
    Eigen::VectorXd next = Eigen::VectorXd::Zero(nk - 1 - q);
    for (Eigen::Index j = 0; j < next.size(); ++j) {
      const double left = safe_ratio(t - knots[j], knots[j + q] - knots[j]);
      const double right =
          safe_ratio(knots[j + q + 1] - t, knots[j + q + 1] - knots[j + 1]);
      next(j) = left * n(j) + right * n(j + 1);
    }
    n = std::move(next);
  }
  for (int q = base + 1; q <= degree; ++q) {
    Eigen::VectorXd next = Eigen::VectorXd::Zero(nk - 1 - q);
    for (Eigen::Index j = 0; j < next.size(); ++j) {
      next(j) = q * (safe_ratio(n(j), knots[j + q] - knots[j]) -
                     safe_ratio(n(j + 1), knots[j + q + 1] - knots[j + 1]));
    }
    n = std::move(next);
  }
  return n;
}

inline std::vector<double> interior_quantile_knots(std::span<const double> points,
                                                   int count) {
  std::vector<double> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int j = 1; j <= count; ++j)
    out.push_back(quantile_sorted(sorted, static_cast<double>(j) / (count + 1)));
  return out;
}

inline constexpr std::array<double, 3> kGaussNodes = {-0.7745966692414834, 0.0,
                                                      0.7745966692414834};
inline constexpr std::array<double, 3> kGaussWeights = {5.0 / 9.0, 8.0 / 9.0,
                                                        5.0 / 9.0};

}  // namespace detail

/// Basis values, penalty, and the knot layout needed to evaluate the basis
/// anywhere in the domain.
class SplineSystem {
 public:
  SplineSpec spec;
  Eigen::VectorXd grid;
  Eigen::MatrixXd eval;     ///< M x K, eval(m, k) = psi_k(t_m)
  Eigen::MatrixXd penalty;  ///< K x K, integral of psi'' psi''^T
  int rank = 0;
  std::vector<double> base_knots;  ///< boundary + interior breakpoints

  int num_basis() const { return spec.num_basis; }

  /// Row vector psi(t) (derivative order `deriv`).
  Eigen::RowVectorXd basis_at(double t, int deriv = 0) const {
    if (!(t >= spec.lower - 1e-12 && t <= spec.upper + 1e-12))
      throw DomainError("evaluation point " + std::to_string(t) + " outside [" +
                        std::to_string(spec.lower) + ", " + std::to_string(spec.upper) +
                        "]");
    t = std::clamp(t, spec.lower, spec.upper);
    const int k = spec.num_basis;
    if (spec.kind == SplineKind::open_cubic)
      return detail::bspline_values(knots_, 3, t, deriv).transpose();
    Eigen::VectorXd ext = detail::bspline_values(knots_, 3, t, deriv);
    Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(k);
    // extended index j corresponds to periodic index (j - 3) mod K
    for (Eigen::Index j = 0; j < ext.size(); ++j)
      out(((j - 3) % k + k) % k) += ext(j);
    return out;
  }

  Eigen::MatrixXd basis_matrix(std::span<const double> points, int deriv = 0) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(points.size()), spec.num_basis);
    for (std::size_t m = 0; m < points.size(); ++m)
      out.row(static_cast<Eigen::Index>(m)) = basis_at(points[m], deriv);
    return out;
  }

  friend SplineSystem build_spline_system(const SplineSpec&, std::span<const double>);

 private:
  std::vector<double> knots_;  ///< full knot vector handed to the recursion
};

inline void validate_spec(const SplineSpec& spec) {
  if (!(spec.lower < spec.upper))
    throw SpecError("spline domain requires lower < upper");
  if (spec.num_basis < spec.min_basis())
    throw SpecError("num_basis " + std::to_string(spec.num_basis) + " below minimum " +
                    std::to_string(spec.min_basis()) + " for " + to_string(spec.kind) +
                    " cubic basis");
}

inline void validate_grid(std::span<const double> grid, double lower, double upper) {
  for (std::size_t m = 0; m < grid.size(); ++m) {
    if (!std::isfinite(grid[m]) || grid[m] < lower || grid[m] > upper)
      throw DomainError("grid point " + std::to_string(m) + " outside domain");
    if (m > 0 && !(grid[m] > grid[m - 1]))
      throw DomainError("grid must be strictly increasing (index " + std::to_string(m) +
                        ")");
  }
}

inline SplineSystem build_spline_system(const SplineSpec& spec,
                                        std::span<const double> grid) {
  validate_spec(spec);
  validate_grid(grid, spec.lower, spec.upper);
  const int k = spec.num_basis;

  SplineSystem sys;
  sys.spec = spec;
  sys.grid = Eigen::Map<const Eigen::VectorXd>(grid.data(),
                                               static_cast<Eigen::Index>(grid.size()));

  const int n_interior = spec.kind == SplineKind::open_cubic ? k - 4 : k - 1;
  std::vector<double> interior = detail::interior_quantile_knots(grid, n_interior);
  sys.base_knots.push_back(spec.lower);
  sys.base_knots.insert(sys.base_knots.end(), interior.begin(), interior.end());
  sys.base_knots.push_back(spec.upper);

  if (spec.kind == SplineKind::open_cubic) {
    sys.knots_.assign(4, spec.lower);
    sys.knots_.insert(sys.knots_.end(), interior.begin(), interior.end());
    sys.knots_.insert(sys.knots_.end(), 4, spec.upper);
  } else {
    const double period = spec.upper - spec.lower;
    for (int i = -3; i <= k + 3; ++i) {
      const int wrap = i >= 0 ? i / k : -((-i + k - 1) / k);
      sys.knots_.push_back(sys.base_knots[static_cast<std::size_t>(i - wrap * k)] +
                           wrap * period);
    }
  }

  sys.eval = sys.basis_matrix(grid);

  sys.penalty = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t s = 0; s + 1 < sys.base_knots.size(); ++s) {
    const double lo = sys.base_knots[s];
    const double hi = sys.base_knots[s + 1];
    if (!(hi > lo)) continue;
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    for (std::size_t g = 0; g < detail::kGaussNodes.size(); ++g) {
      const Eigen::RowVectorXd d2 = sys.basis_at(mid + half * detail::kGaussNodes[g], 2);
      sys.penalty.noalias() += half * detail::kGaussWeights[g] * d2.transpose() * d2;
    }
  }
  sys.penalty = 0.5 * (sys.penalty + sys.penalty.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sys.penalty, Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().maxCoeff();
  sys.rank = static_cast<int>((es.eigenvalues().array() > 1e-10 * lmax).count());
  if (sys.rank != spec.penalty_rank())
    throw NumericalError("penalty rank " + std::to_string(sys.rank) + " differs from " +
                         std::to_string(spec.penalty_rank()) +
                         "; knots are probably degenerate for this grid");
  return sys;
}

// ---------------------------------------------------------------------------
// Hazard basis: M-splines (non-negative, unit integral) and I-splines (their
// running integrals from the lower boundary).

class HazardBasis {
 public:
  int df = 0;
  int degree = 3;
  double lower = 0.0;
  double upper = 1.0;
  std::vector<double> knots;  ///< clamped knot vector of the M-splines
  Eigen::MatrixXd m_eval;     ///< n x L
  Eigen::MatrixXd i_eval;     ///< n x L

  Eigen::RowVectorXd m_at(double t) const {
    check(t);
    Eigen::VectorXd b = detail::bspline_values(knots, degree, t);
    Eigen::RowVectorXd out(df);
    const int order = degree + 1;
    for (int l = 0; l < df; ++l)
      out(l) = detail::safe_ratio(order * b(l), knots[static_cast<std::size_t>(l + order)] -
                                                   knots[static_cast<std::size_t>(l)]);
    return out;
  }

  Eigen::RowVectorXd i_at(double t) const {
    check(t);
    // I_l = sum_{j > l} of order+1 B-splines on the knot vector with one
    // extra boundary knot at each end.
    std::vector<double> wide;
    wide.reserve(knots.size() + 2);
    wide.push_back(lower);
    wide.insert(wide.end(), knots.begin(), knots.end());
    wide.push_back(upper);
    Eigen::VectorXd b = detail::bspline_values(wide, degree + 1, t);
    Eigen::RowVectorXd out(df);
    double tail = 0.0;
    for (int l = df - 1; l >= 0; --l) {
      tail += b(l + 1);
      out(l) = std::min(tail, 1.0);
    }
    return out;
  }

  void check(double t) const {
    if (!(t >= lower && t <= upper))
      throw DomainError("time " + std::to_string(t) + " outside hazard boundary [" +
                        std::to_string(lower) + ", " + std::to_string(upper) + "]");
  }
};

/// Interior knots sit at equally spaced quantiles of `times`. Cubic unless
/// df == 3, which only admits a quadratic basis without interior knots.
inline HazardBasis build_hazard_basis(std::span<const double> times, int df, double lower,
                                      double upper) {
  if (df < 3) throw SpecError("hazard df must be at least 3");
  if (!(lower < upper)) throw SpecError("hazard boundary requires lower < upper");
  for (std::size_t i = 0; i < times.size(); ++i)
    if (!(times[i] > lower && times[i] < upper))
      throw DomainError("time index " + std::to_string(i) + " not strictly inside boundary");

  HazardBasis hb;
  hb.df = df;
  hb.degree = df == 3 ? 2 : 3;
  hb.lower = lower;
  hb.upper = upper;
  const int n_interior = df - hb.degree - 1;
  std::vector<double> interior = detail::interior_quantile_knots(times, n_interior);
  hb.knots.assign(static_cast<std::size_t>(hb.degree + 1), lower);
  hb.knots.insert(hb.knots.end(), interior.begin(), interior.end());
  hb.knots.insert(hb.knots.end(), static_cast<std::size_t>(hb.degree + 1), upper);

  const auto n = static_cast<Eigen::Index>(times.size());
  hb.m_eval.resize(n, df);
  hb.i_eval.resize(n, df);
  for (Eigen::Index i = 0; i < n; ++i) {
    hb.m_eval.row(i) = hb.m_at(times[static_cast<std::size_t>(i)]);
    hb.i_eval.row(i) = hb.i_at(times[static_cast<std::size_t>(i)]);
  }
  return hb;
}

/// Boundary used by the fitting code: slightly outside the observed range.
/// Positive times keep a positive lower bound.
inline std::pair<double, double> hazard_boundary(std::span<const double> times) {
  const auto [lo, hi] = std::minmax_element(times.begin(), times.end());
  const double pad = 1e-3 * std::max(*hi - *lo, 1e-12);
  const double low_pad = *lo > 0.0 ? std::min(pad, 0.5 * *lo) : pad;
  return {*lo - low_pad, *hi + pad};
}

}  // namespace fbr
