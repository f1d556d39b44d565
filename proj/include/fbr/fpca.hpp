#pragma once

// Functional principal components from the raw sample covariance. Eigen-
// functions are unit-norm under <f,g> = (1/M) sum_m f(t_m) g(t_m), so scores
// and eigenvalues carry the scale of the data.

#include <Eigen/Dense>

#include <string>

#include "fbr/errors.hpp"

namespace fbr {

struct FpcaFit {
  Eigen::VectorXd mean;        ///< M
  Eigen::MatrixXd efunctions;  ///< J x M
  Eigen::VectorXd evalues;     ///< J, nonincreasing
  Eigen::MatrixXd scores;      ///< n x J
  double pve = 0.0;
  double noise_var = 0.0;

  Eigen::Index num_components() const { return evalues.size(); }

  /// mean + scores * efunctions
  Eigen::MatrixXd reconstruct() const {
    return (scores * efunctions).rowwise() + mean.transpose();
  }
};

/// `max_components` caps J (0 = no cap); the PVE rule is applied first.
inline FpcaFit fit_fpca(const Eigen::MatrixXd& w, double pve_target, int max_components = 0) {
  const Eigen::Index n = w.rows();
  const Eigen::Index m = w.cols();
  if (n < 2) throw ShapeError("FPCA needs at least two curves");
  if (m < 1) throw ShapeError("FPCA needs at least one grid point");
  if (!(pve_target > 0.0 && pve_target <= 1.0))
    throw SpecError("pve_target must lie in (0, 1]");

  FpcaFit fit;
  fit.mean = w.colwise().mean().transpose();
  const Eigen::MatrixXd centered = w.rowwise() - fit.mean.transpose();
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition failed");
  // Eigen returns ascending order; operator-scale eigenvalues are lambda/M.
  const Eigen::VectorXd all = es.eigenvalues().reverse() / static_cast<double>(m);
  const double top = all(0);
  if (!(top > 0.0) || !std::isfinite(top))
    throw DegenerateDataError("functional data have zero covariance");
  const Eigen::Index positive = (all.array() > 1e-12 * top).count();
  const double total = all.head(positive).sum();

  Eigen::Index j_count = 0;
  double acc = 0.0;
  while (j_count < positive) {
    acc += all(j_count);
    ++j_count;
    if (acc / total >= pve_target - 1e-12) break;
  }
  if (max_components > 0 && j_count > max_components) j_count = max_components;

  fit.evalues = all.head(j_count);
  fit.pve = fit.evalues.sum() / total;
  fit.efunctions.resize(j_count, m);
  const double root_m = std::sqrt(static_cast<double>(m));
  for (Eigen::Index j = 0; j < j_count; ++j) {
    Eigen::VectorXd v = es.eigenvectors().col(m - 1 - j) * root_m;
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    fit.efunctions.row(j) = v.transpose();
  }
  fit.scores = centered * fit.efunctions.transpose() / static_cast<double>(m);
  const Eigen::MatrixXd resid = centered - fit.scores * fit.efunctions;
  fit.noise_var = resid.squaredNorm() / static_cast<double>(n * m);
  return fit;
}

}  // namespace fbr
