#pragma once

// Spectral reparametrization of a rank-deficient quadratic penalty: the
// penalized block becomes an identity, the null block is left unpenalized
// and rescaled by the design column norms.

#include <Eigen/Dense>

#include <algorithm>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "fbr/basis.hpp"
#include "fbr/errors.hpp"

namespace fbr {

struct ReparamMap {
  Eigen::MatrixXd U;       ///< K x K orthogonal, columns sorted by decreasing eigenvalue
  Eigen::VectorXd v_diag;  ///< diagonal of V~^{1/2}
  int rank = 0;

  Eigen::Index size() const { return v_diag.size(); }

  /// b~ = V~^{1/2} U^T b
  Eigen::VectorXd to_transformed(const Eigen::VectorXd& b) const {
    return v_diag.cwiseProduct(U.transpose() * b);
  }
  /// b = U V~^{-1/2} b~
  Eigen::VectorXd to_raw(const Eigen::VectorXd& b_tilde) const {
    return U * b_tilde.cwiseQuotient(v_diag);
  }
  /// K x K matrix U V~^{-1/2}.
  Eigen::MatrixXd coefficient_map() const { return U * v_diag.cwiseInverse().asDiagonal(); }
};

struct TransformedDesign {
  Eigen::MatrixXd penalized;    ///< K0 x n
  Eigen::MatrixXd unpenalized;  ///< (K-K0) x n
};

inline ReparamMap build_reparam(const Eigen::MatrixXd& penalty, int rank,
                                const Eigen::MatrixXd& raw_design) {
  const Eigen::Index k = penalty.rows();
  if (penalty.cols() != k) throw ShapeError("penalty must be square");
  if (raw_design.rows() != k)
    throw ShapeError("design has " + std::to_string(raw_design.rows()) +
                     " rows, penalty has " + std::to_string(k));
  if (rank < 0 || rank > k) throw ShapeError("rank out of range");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(penalty);
  if (es.info() != Eigen::Success) throw NumericalError("penalty eigendecomposition failed");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return es.eigenvalues()(a) > es.eigenvalues()(b);
  });

  ReparamMap map;
  map.rank = rank;
  map.U.resize(k, k);
  Eigen::VectorXd values(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::VectorXd col = es.eigenvectors().col(order[static_cast<std::size_t>(j)]);
    for (Eigen::Index i = 0; i < k; ++i) {
      if (std::abs(col(i)) > 1e-12) {
        if (col(i) < 0) col = -col;
        break;
      }
    }
    map.U.col(j) = col;
    values(j) = es.eigenvalues()(order[static_cast<std::size_t>(j)]);
  }
  const double lmax = values.size() > 0 ? values(0) : 0.0;
  const auto numeric_rank = (values.array() > 1e-10 * lmax).count();
  if (numeric_rank != rank)
    throw NumericalError("penalty has numeric rank " + std::to_string(numeric_rank) +
                         ", expected " + std::to_string(rank));

  map.v_diag = Eigen::VectorXd::Ones(k);
  map.v_diag.head(rank) = values.head(rank).cwiseSqrt();
  if (rank < k) {
    // Null-block scaling from the design: mean squared column norm of the
    // penalized block after scaling sets the unit.
    Eigen::VectorXd col_norm = (raw_design.transpose() * map.U).colwise().squaredNorm();
    col_norm = col_norm.cwiseQuotient(map.v_diag.cwiseAbs2());
    const double av_norm = rank > 0 ? col_norm.head(rank).mean() : 1.0;
    for (Eigen::Index i = rank; i < k; ++i) {
      const double v = std::sqrt(col_norm(i) / av_norm);
      if (!std::isfinite(v) || !(v > 0.0))
        throw NumericalError("null-space column " + std::to_string(i) +
                             " of the design has zero norm");
      map.v_diag(i) = v;
    }
  }
  return map;
}

inline ReparamMap build_reparam(const SplineSystem& system, const Eigen::MatrixXd& raw_design) {
  if (raw_design.rows() != system.num_basis())
    throw ShapeError("design rows do not match basis size");
  return build_reparam(system.penalty, system.rank, raw_design);
}

/// X~ = V~^{-1/2} U^T X split into penalized and unpenalized rows.
inline TransformedDesign transform_design(const ReparamMap& map,
                                          const Eigen::MatrixXd& raw_design) {
  if (raw_design.rows() != map.size())
    throw ShapeError("design has " + std::to_string(raw_design.rows()) +
                     " rows, map expects " + std::to_string(map.size()));
  const Eigen::MatrixXd full =
      map.v_diag.cwiseInverse().asDiagonal() * (map.U.transpose() * raw_design);
  return {full.topRows(map.rank), full.bottomRows(map.size() - map.rank)};
}

/// Rows of `draws` are transformed coefficient vectors b~; returns rows b.
inline Eigen::MatrixXd untransform_coeffs(const ReparamMap& map, const Eigen::MatrixXd& draws) {
  if (draws.cols() != map.size())
    throw ShapeError("draws have " + std::to_string(draws.cols()) + " columns, expected " +
                     std::to_string(map.size()));
  if (draws.rows() == 0) return Eigen::MatrixXd(0, map.size());
  return draws * map.coefficient_map().transpose();
}

}  // namespace fbr
