#pragma once

#include <Eigen/Dense>
#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fbr/basis.hpp"
#include "fbr/errors.hpp"
#include "fbr/reparam.hpp"
#include "fbr/sampler.hpp"

namespace fbr {

struct CurveDraws {
  Eigen::MatrixXd values;  ///< Q x M
  Eigen::VectorXd grid;    ///< M

  Eigen::Index num_draws() const { return values.rows(); }
  Eigen::VectorXd mean() const { return values.colwise().mean().transpose(); }
};

struct Band {
  Eigen::VectorXd center;
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  Eigen::VectorXd width() const { return hi - lo; }
  /// Fraction of grid points where lo <= truth <= hi.
  double coverage(const Eigen::VectorXd& truth) const {
    if (truth.size() != lo.size()) throw ShapeError("truth length != band length");
    Eigen::Index inside = 0;
    for (Eigen::Index m = 0; m < lo.size(); ++m)
      if (lo(m) <= truth(m) && truth(m) <= hi(m)) ++inside;
    return static_cast<double>(inside) / static_cast<double>(lo.size());
  }
  /// True if lo <= truth <= hi everywhere.
  bool covers(const Eigen::VectorXd& truth) const { return coverage(truth) == 1.0; }
};

struct CmaBand : Band {
  double threshold = 0.0;  ///< empirical (1 - alpha) quantile of the max statistic
};

// ---------------------------------------------------------------------------
// Quantiles

/// Linear interpolation between order statistics (R type 7).
inline double quantile_type7(std::vector<double> v, double p) {
  if (v.empty()) throw ShapeError("quantile of empty sample");
  std::sort(v.begin(), v.end());
  return detail::quantile_sorted(v, p);
}

inline double quantile_type7(const Eigen::VectorXd& v, double p) {
  return quantile_type7(std::vector<double>(v.data(), v.data() + v.size()), p);
}

namespace detail {
inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw SpecError("alpha must lie in (0, 1)");
}
inline void check_curves(const CurveDraws& c) {
  if (c.values.rows() < 1) throw ShapeError("no curve draws");
  if (c.grid.size() != c.values.cols()) throw ShapeError("curve draws and grid disagree");
}
inline Eigen::VectorXd column_sd(const Eigen::MatrixXd& x, const Eigen::VectorXd& mean) {
  const auto q = static_cast<double>(x.rows());
  if (x.rows() < 2) return Eigen::VectorXd::Zero(x.cols());
  return ((x.rowwise() - mean.transpose()).colwise().squaredNorm().transpose() / (q - 1.0)).cwiseSqrt();
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Reconstruction

/// Rows of `b_tilde` are transformed coefficient draws (Q x K).
inline CurveDraws reconstruct_beta(const Eigen::MatrixXd& b_tilde, const ReparamMap& map,
                                   const SplineSystem& system) {
  if (map.size() != system.num_basis()) throw ShapeError("reparam map does not match basis");
  const Eigen::MatrixXd b = untransform_coeffs(map, b_tilde);
  return {b * system.eval.transpose(), system.grid};
}

/// Uses the b_r and b_f slices of the layout, in that order.
inline CurveDraws reconstruct_beta(const PosteriorDraws& draws, const ReparamMap& map,
                                   const SplineSystem& system) {
  const Slice& r = draws.layout["b_r"];
  const Slice& f = draws.layout["b_f"];
  if (r.size + f.size != system.num_basis() || f.offset != r.offset + r.size)
    throw ShapeError("draws do not hold contiguous coefficient slices of width K");
  const Eigen::MatrixXd pooled = draws.pooled();
  return reconstruct_beta(Eigen::MatrixXd(pooled.middleCols(r.offset, r.size + f.size)), map, system);
}

/// Coefficient function of predictor p in a function-on-scalar fit (raw basis).
inline CurveDraws reconstruct_fosr_beta(const PosteriorDraws& draws, const SplineSystem& system,
                                        Eigen::Index predictor) {
  const Slice& s = draws.layout["b"];
  const Eigen::Index k = system.num_basis();
  if (s.size % k != 0 || predictor < 0 || (predictor + 1) * k > s.size)
    throw ShapeError("predictor index outside coefficient slice");
  const Eigen::MatrixXd pooled = draws.pooled();
  return {pooled.middleCols(s.offset + predictor * k, k) * system.eval.transpose(), system.grid};
}

// ---------------------------------------------------------------------------
// Intervals

/// Empirical alpha/2 and 1 - alpha/2 quantiles at every grid point.
inline Band pointwise_interval(const CurveDraws& curves, double alpha) {
  detail::check_alpha(alpha);
  detail::check_curves(curves);
  const Eigen::Index m = curves.values.cols();
  Band band{curves.mean(), Eigen::VectorXd(m), Eigen::VectorXd(m)};
  std::vector<double> col(static_cast<std::size_t>(curves.values.rows()));
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index q = 0; q < curves.values.rows(); ++q) col[static_cast<std::size_t>(q)] = curves.values(q, j);
    std::sort(col.begin(), col.end());
    band.lo(j) = detail::quantile_sorted(col, alpha / 2.0);
    band.hi(j) = detail::quantile_sorted(col, 1.0 - alpha / 2.0);
  }
  return band;
}

/// Posterior mean plus or minus z_{1-alpha/2} posterior sd.
inline Band normal_interval(const CurveDraws& curves, double alpha) {
  detail::check_alpha(alpha);
  detail::check_curves(curves);
  const Eigen::VectorXd mean = curves.mean();
  const Eigen::VectorXd sd = detail::column_sd(curves.values, mean);
  const double z = std::sqrt(2.0) * boost::math::erf_inv(1.0 - alpha);
  return {mean, mean - z * sd, mean + z * sd};
}

/// Simultaneous band from the max statistic d^q = max_t |beta^q - mean| / sd.
inline CmaBand cma_interval(const CurveDraws& curves, double alpha) {
  detail::check_alpha(alpha);
  detail::check_curves(curves);
  const Eigen::VectorXd mean = curves.mean();
  const Eigen::VectorXd sd = detail::column_sd(curves.values, mean);
  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < sd.size(); ++j)
    if (sd(j) >= 1e-12) active.push_back(j);
  if (active.empty()) throw DegenerateDrawsError("all curve draws are constant");

  std::vector<double> dmax(static_cast<std::size_t>(curves.values.rows()), 0.0);
  for (Eigen::Index q = 0; q < curves.values.rows(); ++q)
    for (Eigen::Index j : active)
      dmax[static_cast<std::size_t>(q)] =
          std::max(dmax[static_cast<std::size_t>(q)], std::abs(curves.values(q, j) - mean(j)) / sd(j));
  CmaBand band;
  band.threshold = quantile_type7(std::move(dmax), 1.0 - alpha);
  band.center = mean;
  band.lo = mean - band.threshold * sd;
  band.hi = mean + band.threshold * sd;
  return band;
}

// ---------------------------------------------------------------------------
// Survival

/// S^q(t) = exp(-exp(shift_q + eta) * sum_l c^q_l I_l(t)).
/// `c_draws` is Q x L, `i_eval` is T x L at the requested times.
inline CurveDraws survival_from_cumulative(const Eigen::MatrixXd& c_draws,
                                           const Eigen::VectorXd& shift,
                                           const Eigen::MatrixXd& i_eval,
                                           const Eigen::VectorXd& times, double eta) {
  if (c_draws.cols() != i_eval.cols()) throw ShapeError("hazard coefficient width mismatch");
  if (shift.size() != c_draws.rows()) throw ShapeError("one shift per draw required");
  if (times.size() != i_eval.rows()) throw ShapeError("one time per I-spline row required");
  Eigen::MatrixXd cum = c_draws * i_eval.transpose();  // Q x T
  const Eigen::ArrayXd scale = (shift.array() + eta).exp();
  CurveDraws out{Eigen::MatrixXd((-(cum.array().colwise() * scale)).exp()), times};
  return out;
}

/// Survival curves from a Cox-type fit; the drawn intercept enters the
/// linear predictor, `eta` is the remaining subject-specific part.
inline CurveDraws survival_curve(const PosteriorDraws& draws, const HazardBasis& hazard,
                                 const Eigen::VectorXd& times, double eta) {
  const Slice& cs = draws.layout["c_raw"];
  if (cs.size + 1 != hazard.df) throw ShapeError("simplex slice does not match hazard basis");
  const Eigen::MatrixXd pooled = draws.pooled();
  Eigen::MatrixXd c(pooled.rows(), hazard.df);
  for (Eigen::Index q = 0; q < pooled.rows(); ++q)
    c.row(q) = simplex_transform(pooled.row(q).segment(cs.offset, cs.size).transpose()).c.transpose();
  Eigen::MatrixXd i_eval(times.size(), hazard.df);
  for (Eigen::Index t = 0; t < times.size(); ++t) i_eval.row(t) = hazard.i_at(times(t)).transpose();
  const Eigen::VectorXd shift = pooled.col(draws.layout["eta0"].offset);
  return survival_from_cumulative(c, shift, i_eval, times, eta);
}

// ---------------------------------------------------------------------------
// Scalar summaries

struct ScalarSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
  double rhat = 0.0;
  double ess = 0.0;
};

inline ScalarSummary summarize_scalar(const Eigen::VectorXd& draws, std::string name = {}) {
  if (draws.size() < 1) throw ShapeError("no draws to summarize");
  ScalarSummary s;
  s.name = std::move(name);
  s.mean = draws.mean();
  s.sd = draws.size() > 1
             ? std::sqrt((draws.array() - s.mean).square().sum() / static_cast<double>(draws.size() - 1))
             : 0.0;
  std::vector<double> v(draws.data(), draws.data() + draws.size());
  std::sort(v.begin(), v.end());
  s.q025 = detail::quantile_sorted(v, 0.025);
  s.q975 = detail::quantile_sorted(v, 0.975);
  return s;
}

/// Summaries of every coordinate of a named slice, with diagnostics.
inline std::vector<ScalarSummary> summarize_slice(const PosteriorDraws& draws, const std::string& name) {
  const Slice& s = draws.layout[name];
  const Eigen::MatrixXd pooled = draws.pooled();
  std::vector<ScalarSummary> out;
  for (Eigen::Index k = 0; k < s.size; ++k) {
    auto sum = summarize_scalar(pooled.col(s.offset + k),
                                s.size == 1 ? name : name + "[" + std::to_string(k) + "]");
    if (draws.rhat.size() == draws.dim()) {
      sum.rhat = draws.rhat(s.offset + k);
      sum.ess = draws.ess(s.offset + k);
    }
    out.push_back(std::move(sum));
  }
  return out;
}

}  // namespace fbr
