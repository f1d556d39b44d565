#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fbr/basis.hpp"
#include "fbr/errors.hpp"

namespace fbr {

/// Scalar-outcome data with one functional covariate observed on a common grid.
/// For time-to-event outcomes `censor` holds delta_i: 0 = observed event,
/// 1 = right-censored.
struct FunctionalDataset {
  Eigen::VectorXd y;                     ///< n outcomes
  std::optional<Eigen::VectorXi> censor; ///< n flags, survival data only
  Eigen::MatrixXd z;                     ///< p x n scalar design
  Eigen::MatrixXd w;                     ///< n x M functional covariate
  Eigen::VectorXd grid;                  ///< M time points
  std::vector<std::string> covariate_names;

  Eigen::Index size() const { return y.size(); }

  void validate() const {
    const auto n = y.size();
    if (w.rows() != n) throw ShapeError("functional covariate rows != number of outcomes");
    if (w.cols() != grid.size()) throw ShapeError("functional covariate columns != grid size");
    if (z.cols() != n && !(z.rows() == 0)) throw ShapeError("scalar design columns != n");
    if (static_cast<Eigen::Index>(covariate_names.size()) != z.rows())
      throw ShapeError("covariate names do not match scalar design rows");
    for (Eigen::Index m = 1; m < grid.size(); ++m)
      if (!(grid(m) > grid(m - 1))) throw DomainError("grid must be strictly increasing");
    if (censor) {
      if (censor->size() != n) throw ShapeError("censor flags != number of outcomes");
      for (Eigen::Index i = 0; i < n; ++i)
        if ((*censor)(i) != 0 && (*censor)(i) != 1)
          throw DomainError("censor flag must be 0 or 1");
    }
  }
};

/// Functional outcome Y_i(t) on a common grid with scalar predictors.
struct FunctionalResponseDataset {
  Eigen::MatrixXd y;  ///< n x M
  Eigen::MatrixXd x;  ///< n x P (first column usually the intercept)
  Eigen::VectorXd grid;
  std::vector<std::string> predictor_names;
};

/// L_m = t_{m+1} - t_m, with the last weight repeating the previous interval.
inline Eigen::VectorXd quadrature_weights(std::span<const double> grid) {
  const auto m = static_cast<Eigen::Index>(grid.size());
  if (m < 2) throw ShapeError("quadrature needs at least two grid points");
  Eigen::VectorXd w(m);
  for (Eigen::Index j = 0; j + 1 < m; ++j) {
    w(j) = grid[static_cast<std::size_t>(j + 1)] - grid[static_cast<std::size_t>(j)];
    if (!(w(j) > 0)) throw DomainError("grid must be strictly increasing");
  }
  w(m - 1) = w(m - 2);
  return w;
}

inline Eigen::VectorXd quadrature_weights(const Eigen::VectorXd& grid) {
  return quadrature_weights(std::span<const double>(grid.data(), static_cast<std::size_t>(grid.size())));
}

namespace detail {
inline void require_same_grid(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || (a - b).cwiseAbs().maxCoeff() > 1e-12)
    throw ShapeError("data grid does not match spline system grid");
}
}  // namespace detail

/// K x n Riemann-sum design, X_ik = sum_m L_m W_i(t_m) psi_k(t_m).
inline Eigen::MatrixXd functional_design(const Eigen::MatrixXd& w, const Eigen::VectorXd& grid,
                                         const SplineSystem& system) {
  if (w.cols() != grid.size()) throw ShapeError("functional covariate columns != grid size");
  detail::require_same_grid(grid, system.grid);
  const Eigen::VectorXd lw = quadrature_weights(grid);
  return system.eval.transpose() * lw.asDiagonal() * w.transpose();
}

inline Eigen::MatrixXd functional_design(const FunctionalDataset& data,
                                         const SplineSystem& system) {
  return functional_design(data.w, data.grid, system);
}

/// J x K matrix of sum_m phi_j(t_m) psi_k(t_m) / M (equal-spacing weights on
/// any grid).
inline Eigen::MatrixXd fpca_spline_crossproduct(const Eigen::MatrixXd& efunctions,
                                                const SplineSystem& system,
                                                const Eigen::VectorXd& grid) {
  if (efunctions.cols() != grid.size())
    throw ShapeError("eigenfunction columns != grid size");
  detail::require_same_grid(grid, system.grid);
  return efunctions * system.eval / static_cast<double>(grid.size());
}

}  // namespace fbr
