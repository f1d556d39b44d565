#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>

namespace fbr::testing {

inline Eigen::VectorXd equal_grid(int m, double lo = 0.0, double hi = 1.0) {
  Eigen::VectorXd g(m);
  for (int i = 0; i < m; ++i) g(i) = lo + (hi - lo) * i / (m - 1);
  return g;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c,
                                     double sd = 1.0) {
  std::normal_distribution<double> nd(0.0, sd);
  Eigen::MatrixXd x(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) x(i, j) = nd(rng);
  return x;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n, double sd = 1.0) {
  return random_matrix(rng, n, 1, sd).col(0);
}

/// 5-point central-difference gradient.
inline Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                        const Eigen::VectorXd& x, double h = 1e-4) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double hi = h * std::max(1.0, std::abs(x(i)));
    Eigen::VectorXd a = x;
    auto at = [&](double d) {
      a(i) = x(i) + d;
      return f(a);
    };
    g(i) = (-at(2 * hi) + 8 * at(hi) - 8 * at(-hi) + at(-2 * hi)) / (12 * hi);
  }
  return g;
}

/// Largest componentwise error, relative where the gradient is not tiny.
inline double gradient_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric,
                             double abs_floor = 1e-7) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double diff = std::abs(analytic(i) - numeric(i));
    const double scale = std::max(std::abs(analytic(i)), std::abs(numeric(i)));
    const double err = diff <= abs_floor ? 0.0 : diff / std::max(scale, 1e-300);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace fbr::testing
