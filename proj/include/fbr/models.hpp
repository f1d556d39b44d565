#pragma once

// Binding layer: turn a dataset plus basis choices into a ready-to-sample
// posterior, and keep the pieces needed to map draws back to curves.

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>

#include "fbr/analysis.hpp"
#include "fbr/basis.hpp"
#include "fbr/design.hpp"
#include "fbr/errors.hpp"
#include "fbr/fpca.hpp"
#include "fbr/posteriors.hpp"
#include "fbr/reparam.hpp"
#include "fbr/sampler.hpp"

namespace fbr {

enum class ModelKind { sofr_gaussian, sofr_bernoulli, cox, joint_cox, fosr };

inline std::string to_string(ModelKind m) {
  switch (m) {
    case ModelKind::sofr_gaussian: return "sofr-gaussian";
    case ModelKind::sofr_bernoulli: return "sofr-bernoulli";
    case ModelKind::cox: return "cox";
    case ModelKind::joint_cox: return "joint-cox";
    case ModelKind::fosr: return "fosr";
  }
  return "?";
}

inline ModelKind parse_model_kind(const std::string& s) {
  for (auto m : {ModelKind::sofr_gaussian, ModelKind::sofr_bernoulli, ModelKind::cox,
                 ModelKind::joint_cox, ModelKind::fosr})
    if (to_string(m) == s) return m;
  throw SpecError("unknown model '" + s + "'");
}

inline bool is_survival(ModelKind m) { return m == ModelKind::cox || m == ModelKind::joint_cox; }

/// Spline domain covering a data grid: [min(0, t_1), max(1, t_M)].
inline SplineSpec spline_spec_for(const Eigen::VectorXd& grid, SplineKind kind, int num_basis) {
  if (grid.size() < 1) throw ShapeError("empty grid");
  return {kind, num_basis, std::min(0.0, grid(0)), std::max(1.0, grid(grid.size() - 1))};
}

namespace detail {
inline SplineSystem system_on(const SplineSpec& spec, const Eigen::VectorXd& grid) {
  return build_spline_system(spec, std::span<const double>(grid.data(), static_cast<std::size_t>(grid.size())));
}
inline std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}
}  // namespace detail

// ---------------------------------------------------------------------------

struct SofrProblem {
  SplineSystem system;
  ReparamMap map;
  SofrPosterior posterior;

  /// What the sampler runs on: the posterior in non-centred coordinates.
  NonCentered<SofrPosterior> target() const { return {posterior, {{"b_r", "log_sigma_b", {}}}}; }
  CurveDraws beta(const PosteriorDraws& d) const { return reconstruct_beta(d, map, system); }
};

inline SofrProblem prepare_sofr(const FunctionalDataset& data, const SplineSpec& spec,
                                SofrFamily family) {
  data.validate();
  SplineSystem system = detail::system_on(spec, data.grid);
  const Eigen::MatrixXd raw = functional_design(data, system);
  ReparamMap map = build_reparam(system, raw);
  SofrPosterior post(family, data.y, transform_design(map, raw), data.z);
  return {std::move(system), std::move(map), std::move(post)};
}

// ---------------------------------------------------------------------------

namespace detail {
inline SurvivalOutcome survival_outcome(const FunctionalDataset& data, int hazard_df,
                                        HazardBasis& hazard) {
  if (!data.censor) throw SpecError("survival models need a censor column");
  const auto [lo, hi] = hazard_boundary(as_span(data.y));
  hazard = build_hazard_basis(as_span(data.y), hazard_df, lo, hi);
  return {data.y, *data.censor, hazard.m_eval, hazard.i_eval};
}
}  // namespace detail

struct CoxProblem {
  SplineSystem system;
  ReparamMap map;
  HazardBasis hazard;
  CoxPosterior posterior;

  NonCentered<CoxPosterior> target() const { return {posterior, {{"b_r", "log_sigma_b", {}}}}; }
  CurveDraws beta(const PosteriorDraws& d) const { return reconstruct_beta(d, map, system); }
};

inline CoxProblem prepare_cox(const FunctionalDataset& data, const SplineSpec& spec, int hazard_df) {
  data.validate();
  HazardBasis hazard;
  SurvivalOutcome outcome = detail::survival_outcome(data, hazard_df, hazard);
  SplineSystem system = detail::system_on(spec, data.grid);
  const Eigen::MatrixXd raw = functional_design(data, system);
  ReparamMap map = build_reparam(system, raw);
  CoxPosterior post(std::move(outcome), transform_design(map, raw), data.z);
  return {std::move(system), std::move(map), std::move(hazard), std::move(post)};
}

// ---------------------------------------------------------------------------

struct JointProblem {
  SplineSystem system;
  FpcaFit fpca;
  ReparamMap map;
  HazardBasis hazard;
  JointCoxFpcaPosterior posterior;

  NonCentered<JointCoxFpcaPosterior> target() const {
    return {posterior, {{"b_r", "log_sigma_b", {}}, {"xi", "log_lambda", fpca.scores.reshaped()}}};
  }
  CurveDraws beta(const PosteriorDraws& d) const { return reconstruct_beta(d, map, system); }
};

inline JointProblem prepare_joint(const FunctionalDataset& data, const SplineSpec& spec,
                                  int hazard_df, double pve, int max_components) {
  data.validate();
  HazardBasis hazard;
  SurvivalOutcome outcome = detail::survival_outcome(data, hazard_df, hazard);
  SplineSystem system = detail::system_on(spec, data.grid);
  FpcaFit fpca = fit_fpca(data.w, pve, max_components);
  const Eigen::MatrixXd cross_t = fpca_spline_crossproduct(fpca.efunctions, system, data.grid).transpose();
  ReparamMap map = build_reparam(system, cross_t);
  JointFpcaInputs in{fpca.efunctions, data.w.rowwise() - fpca.mean.transpose(), fpca.scores,
                     transform_design(map, cross_t)};
  JointCoxFpcaPosterior post(std::move(outcome), std::move(in), data.z);
  return {std::move(system), std::move(fpca), std::move(map), std::move(hazard), std::move(post)};
}

// ---------------------------------------------------------------------------

struct FosrProblem {
  SplineSystem system;
  FpcaFit fpca;  ///< of the residuals from a pointwise least-squares fit
  FosrPosterior posterior;

  NonCentered<FosrPosterior> target() const { return {posterior, {{"xi", "log_lambda", {}}}}; }
  CurveDraws beta(const PosteriorDraws& d, Eigen::Index predictor) const {
    return reconstruct_fosr_beta(d, system, predictor);
  }
};

inline FosrProblem prepare_fosr(const FunctionalResponseDataset& data, const SplineSpec& spec,
                                double pve, int max_components) {
  if (data.y.rows() != data.x.rows()) throw ShapeError("response and predictor rows differ");
  if (data.y.cols() != data.grid.size()) throw ShapeError("response columns != grid size");
  SplineSystem system = detail::system_on(spec, data.grid);
  const Eigen::MatrixXd coef = data.x.colPivHouseholderQr().solve(data.y);  // P x M
  const Eigen::MatrixXd resid = data.y - data.x * coef;
  FpcaFit fpca = fit_fpca(resid, pve, max_components);
  FosrInputs in{data.y, data.x, system.eval, system.penalty, system.rank, fpca.efunctions};
  FosrPosterior post(std::move(in));
  return {std::move(system), std::move(fpca), std::move(post)};
}

}  // namespace fbr
