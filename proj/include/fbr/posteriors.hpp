#pragma once

// Unnormalized log-posteriors with exact gradients over unconstrained
// parameter vectors. Scales are sampled on the log scale; the inverse-gamma
// priors act on the squared scale, written the same way as the model blocks
// they mirror (density of sigma^2 evaluated at the sampled sigma, plus the
// log-transform Jacobian).

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "fbr/errors.hpp"
#include "fbr/reparam.hpp"

namespace fbr {

// ---------------------------------------------------------------------------
// Layout

struct Slice {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index size = 0;
};

class ParamLayout {
 public:
  ParamLayout& add(std::string name, Eigen::Index size) {
    slices_.push_back({std::move(name), total_, size});
    total_ += size;
    return *this;
  }
  Eigen::Index total() const { return total_; }
  const std::vector<Slice>& slices() const { return slices_; }
  bool has(const std::string& name) const {
    for (const auto& s : slices_)
      if (s.name == name) return true;
    return false;
  }
  const Slice& operator[](const std::string& name) const {
    for (const auto& s : slices_)
      if (s.name == name) return s;
    throw ShapeError("layout has no slice named '" + name + "'");
  }
  /// Name of the slice containing flat index `i`.
  const std::string& slice_of(Eigen::Index i) const {
    for (const auto& s : slices_)
      if (i >= s.offset && i < s.offset + s.size) return s.name;
    throw ShapeError("index outside layout");
  }

 private:
  std::vector<Slice> slices_;
  Eigen::Index total_ = 0;
};

/// Per-term breakdown of a log-density evaluation.
struct DensityTerms {
  double likelihood = 0.0;
  double smoothing_prior = 0.0;  ///< spline coefficient priors
  double variance_priors = 0.0;  ///< inverse-gamma terms
  double simplex_prior = 0.0;    ///< Dirichlet(1,...,1)
  double measurement = 0.0;      ///< functional-observation term (joint model)
  double score_prior = 0.0;      ///< FPCA score prior
  double jacobian = 0.0;

  double total() const {
    return likelihood + smoothing_prior + variance_priors + simplex_prior + measurement +
           score_prior + jacobian;
  }
};

// ---------------------------------------------------------------------------
// Scalar helpers

namespace detail {

inline constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)
inline constexpr double kIgShape = 0.001;
inline constexpr double kIgRate = 0.001;

inline double log1p_exp(double a) {
  return a > 0.0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a));
}
inline double inv_logit(double a) {
  if (a >= 0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

/// log IG(sigma^2; shape, rate) for sigma = exp(s), and its s-derivative.
inline double log_inv_gamma_sq(double s, double& d_s, double shape = kIgShape,
                               double rate = kIgRate) {
  const double inv_var = std::exp(-2.0 * s);
  d_s = -2.0 * (shape + 1.0) + 2.0 * rate * inv_var;
  return shape * std::log(rate) - std::lgamma(shape) - (shape + 1.0) * 2.0 * s -
         rate * inv_var;
}

/// log N(v; 0, exp(s)^2 I) with gradients wrt v (accumulated) and s.
template <typename Vec, typename Grad>
double log_normal_zero(const Vec& v, double s, Grad&& grad_v, double& d_s) {
  const double inv_var = std::exp(-2.0 * s);
  const auto k = static_cast<double>(v.size());
  const double sq = v.squaredNorm();
  grad_v.noalias() -= inv_var * v;
  d_s = -k + sq * inv_var;
  return -k * s - 0.5 * sq * inv_var - 0.5 * k * kLog2Pi;
}

inline void require_finite(const Eigen::VectorXd& theta, const ParamLayout& layout) {
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    if (!std::isfinite(theta(i)))
      throw NumericalError("non-finite parameter in slice '" + layout.slice_of(i) + "'");
}

inline void require_dim(const Eigen::VectorXd& theta, const ParamLayout& layout) {
  if (theta.size() != layout.total())
    throw ShapeError("parameter vector has length " + std::to_string(theta.size()) +
                     ", layout expects " + std::to_string(layout.total()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Simplex (stick-breaking) transform: raw in R^{L-1} -> c on the L-simplex.
// Logit offsets log(L-k-1) put raw = 0 at the uniform simplex point.

struct SimplexResult {
  Eigen::VectorXd c;
  double log_jacobian = 0.0;
};

inline SimplexResult simplex_transform(const Eigen::VectorXd& raw) {
  const Eigen::Index l = raw.size() + 1;
  SimplexResult out;
  out.c.resize(l);
  double stick = 1.0;
  for (Eigen::Index k = 0; k + 1 < l; ++k) {
    const double u = raw(k) - std::log(static_cast<double>(l - k - 1));
    const double z = detail::inv_logit(u);
    out.log_jacobian += std::log(stick) - detail::log1p_exp(-u) - detail::log1p_exp(u);
    out.c(k) = stick * z;
    stick *= detail::inv_logit(-u);
  }
  out.c(l - 1) = stick;
  return out;
}

/// Gradient wrt raw of f(c(raw)) + log_jacobian(raw), given dc = df/dc.
inline Eigen::VectorXd simplex_backprop(const Eigen::VectorXd& raw, const Eigen::VectorXd& dc) {
  const Eigen::Index l = raw.size() + 1;
  Eigen::VectorXd sticks(l), zs(l - 1 > 0 ? l - 1 : 0);
  double stick = 1.0;
  for (Eigen::Index k = 0; k + 1 < l; ++k) {
    const double u = raw(k) - std::log(static_cast<double>(l - k - 1));
    sticks(k) = stick;
    zs(k) = detail::inv_logit(u);
    stick *= detail::inv_logit(-u);
  }
  sticks(l - 1) = stick;
  Eigen::VectorXd grad(l - 1);
  double adj = dc(l - 1);  // adjoint of the stick remaining after step k
  for (Eigen::Index k = l - 2; k >= 0; --k) {
    const double z = zs(k);
    const double s = sticks(k);
    grad(k) = (dc(k) - adj) * s * z * (1.0 - z) + 1.0 - 2.0 * z;
    adj = dc(k) * z + adj * (1.0 - z) + 1.0 / s;
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Shared linear-predictor block: eta = eta0 + Xr^T b_r + Xf^T b_f + Z^T gamma.
// The block is stored as one n x (1 + K0 + Kf + p) matrix whose columns
// line up with the leading slices of the layout.

class LinearPredictor {
 public:
  LinearPredictor() = default;
  LinearPredictor(const TransformedDesign& design, const Eigen::MatrixXd& z) {
    const Eigen::Index n = design.penalized.cols();
    if (design.unpenalized.cols() != n) throw ShapeError("design blocks disagree on n");
    if (z.rows() > 0 && z.cols() != n) throw ShapeError("scalar design has wrong column count");
    k_r_ = design.penalized.rows();
    k_f_ = design.unpenalized.rows();
    p_ = z.rows();
    matrix_.resize(n, 1 + k_r_ + k_f_ + p_);
    matrix_.col(0).setOnes();
    matrix_.middleCols(1, k_r_) = design.penalized.transpose();
    matrix_.middleCols(1 + k_r_, k_f_) = design.unpenalized.transpose();
    if (p_ > 0) matrix_.rightCols(p_) = z.transpose();
  }

  void add_to(ParamLayout& layout) const {
    layout.add("eta0", 1).add("b_r", k_r_).add("b_f", k_f_).add("gamma", p_);
  }
  Eigen::Index width() const { return matrix_.cols(); }
  Eigen::Index rows() const { return matrix_.rows(); }
  Eigen::Index k_r() const { return k_r_; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }

 private:
  Eigen::MatrixXd matrix_;
  Eigen::Index k_r_ = 0, k_f_ = 0, p_ = 0;
};

// ---------------------------------------------------------------------------
// Scalar-on-function regression

enum class SofrFamily { gaussian, bernoulli };

class SofrPosterior {
 public:
  SofrPosterior(SofrFamily family, Eigen::VectorXd y, const TransformedDesign& design,
                const Eigen::MatrixXd& z)
      : family_(family), y_(std::move(y)), lp_(design, z) {
    if (y_.size() != lp_.rows()) throw ShapeError("outcome length != design columns");
    if (family_ == SofrFamily::bernoulli)
      for (Eigen::Index i = 0; i < y_.size(); ++i)
        if (y_(i) != 0.0 && y_(i) != 1.0) throw DomainError("Bernoulli outcome must be 0/1");
    lp_.add_to(layout_);
    layout_.add("log_sigma_b", 1);
    if (family_ == SofrFamily::gaussian) layout_.add("log_a", 1);
  }

  const ParamLayout& layout() const { return layout_; }
  Eigen::Index dim() const { return layout_.total(); }
  SofrFamily family() const { return family_; }

  double log_density(const Eigen::VectorXd& theta, Eigen::VectorXd* grad,
                     DensityTerms* terms = nullptr) const {
    detail::require_dim(theta, layout_);
    detail::require_finite(theta, layout_);
    DensityTerms t;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(theta.size());
    const Eigen::Index w = lp_.width();
    const Eigen::VectorXd eta = lp_.matrix() * theta.head(w);
    Eigen::VectorXd d_eta(eta.size());

    if (family_ == SofrFamily::gaussian) {
      const Eigen::Index ia = layout_["log_a"].offset;
      const double log_a = theta(ia);
      const double inv_var = std::exp(-2.0 * log_a);
      const Eigen::VectorXd r = y_ - eta;
      const auto n = static_cast<double>(y_.size());
      const double sq = r.squaredNorm();
      t.likelihood = -n * log_a - 0.5 * sq * inv_var - 0.5 * n * detail::kLog2Pi;
      d_eta = r * inv_var;
      g(ia) = -n + sq * inv_var + 1.0;
      t.jacobian += log_a;
    } else {
      double ll = 0.0;
      for (Eigen::Index i = 0; i < eta.size(); ++i) {
        ll += y_(i) * eta(i) - detail::log1p_exp(eta(i));
        d_eta(i) = y_(i) - detail::inv_logit(eta(i));
      }
      t.likelihood = ll;
    }
    g.head(w).noalias() = lp_.matrix().transpose() * d_eta;

    const Slice& br = layout_["b_r"];
    const Eigen::Index is = layout_["log_sigma_b"].offset;
    double d_prior = 0.0, d_ig = 0.0;
    t.smoothing_prior = detail::log_normal_zero(theta.segment(br.offset, br.size), theta(is),
                                                g.segment(br.offset, br.size), d_prior);
    t.variance_priors = detail::log_inv_gamma_sq(theta(is), d_ig);
    t.jacobian += theta(is);
    g(is) += d_prior + d_ig + 1.0;

    if (grad) *grad = std::move(g);
    if (terms) *terms = t;
    return t.total();
  }

 private:
  SofrFamily family_;
  Eigen::VectorXd y_;
  LinearPredictor lp_;
  ParamLayout layout_;
};

// ---------------------------------------------------------------------------
// Cox likelihood with M-/I-spline baseline hazard

struct SurvivalOutcome {
  Eigen::VectorXd y;
  Eigen::VectorXi censor;   ///< 0 = event, 1 = censored
  Eigen::MatrixXd m_eval;   ///< n x L
  Eigen::MatrixXd i_eval;   ///< n x L

  void validate(Eigen::Index n) const {
    if (y.size() != n || censor.size() != n || m_eval.rows() != n || i_eval.rows() != n)
      throw ShapeError("survival outcome blocks disagree on n");
    if (m_eval.cols() != i_eval.cols() || m_eval.cols() < 1)
      throw ShapeError("hazard basis width mismatch");
    for (Eigen::Index i = 0; i < n; ++i)
      if (censor(i) != 0 && censor(i) != 1) throw DomainError("censor flag must be 0 or 1");
  }
  Eigen::Index num_hazard() const { return m_eval.cols(); }
};

namespace detail {

/// Cox log-likelihood; accumulates d/d eta and d/dc.
inline double cox_loglik(const SurvivalOutcome& s, const Eigen::VectorXd& eta,
                         const Eigen::VectorXd& c, Eigen::VectorXd& d_eta,
                         Eigen::VectorXd& d_c) {
  const Eigen::VectorXd h0 = s.m_eval * c;
  const Eigen::VectorXd big_h0 = s.i_eval * c;
  d_eta.resize(eta.size());
  d_c = Eigen::VectorXd::Zero(c.size());
  Eigen::VectorXd w_m = Eigen::VectorXd::Zero(eta.size());
  Eigen::VectorXd w_i(eta.size());
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double e = std::exp(eta(i));
    const double cum = big_h0(i) * e;
    if (s.censor(i) == 0) {
      if (!(h0(i) > 0.0))
        throw NumericalError("baseline hazard is not positive at event time index " +
                             std::to_string(i));
      ll += std::log(h0(i)) + eta(i) - cum;
      d_eta(i) = 1.0 - cum;
      w_m(i) = 1.0 / h0(i);
    } else {
      ll -= cum;
      d_eta(i) = -cum;
    }
    w_i(i) = -e;
  }
  d_c.noalias() += s.m_eval.transpose() * w_m;
  d_c.noalias() += s.i_eval.transpose() * w_i;
  return ll;
}

/// Dirichlet(1,...,1) log-density on the L-simplex.
inline double log_dirichlet_flat(Eigen::Index l) { return std::lgamma(static_cast<double>(l)); }

}  // namespace detail

class CoxPosterior {
 public:
  CoxPosterior(SurvivalOutcome outcome, const TransformedDesign& design,
               const Eigen::MatrixXd& z)
      : outcome_(std::move(outcome)), lp_(design, z) {
    outcome_.validate(lp_.rows());
    lp_.add_to(layout_);
    layout_.add("log_sigma_b", 1).add("c_raw", outcome_.num_hazard() - 1);
  }

  const ParamLayout& layout() const { return layout_; }
  Eigen::Index dim() const { return layout_.total(); }
  const SurvivalOutcome& outcome() const { return outcome_; }

  double log_density(const Eigen::VectorXd& theta, Eigen::VectorXd* grad,
                     DensityTerms* terms = nullptr) const {
    detail::require_dim(theta, layout_);
    detail::require_finite(theta, layout_);
    DensityTerms t;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(theta.size());
    const Eigen::Index w = lp_.width();
    const Eigen::VectorXd eta = lp_.matrix() * theta.head(w);

    const Slice& cs = layout_["c_raw"];
    const Eigen::VectorXd raw = theta.segment(cs.offset, cs.size);
    const SimplexResult simplex = simplex_transform(raw);
    Eigen::VectorXd d_eta, d_c;
    t.likelihood = detail::cox_loglik(outcome_, eta, simplex.c, d_eta, d_c);
    g.head(w).noalias() = lp_.matrix().transpose() * d_eta;
    if (cs.size > 0) g.segment(cs.offset, cs.size) = simplex_backprop(raw, d_c);
    t.jacobian += simplex.log_jacobian;
    t.simplex_prior = detail::log_dirichlet_flat(simplex.c.size());

    const Slice& br = layout_["b_r"];
    const Eigen::Index is = layout_["log_sigma_b"].offset;
    double d_prior = 0.0, d_ig = 0.0;
    t.smoothing_prior = detail::log_normal_zero(theta.segment(br.offset, br.size), theta(is),
                                                g.segment(br.offset, br.size), d_prior);
    t.variance_priors = detail::log_inv_gamma_sq(theta(is), d_ig);
    t.jacobian += theta(is);
    g(is) += d_prior + d_ig + 1.0;

    if (grad) *grad = std::move(g);
    if (terms) *terms = t;
    return t.total();
  }

 private:
  SurvivalOutcome outcome_;
  LinearPredictor lp_;
  ParamLayout layout_;
};

// ---------------------------------------------------------------------------
// Joint Cox + FPCA model: the regression acts on latent scores xi that are
// also tied to the observed curves through the measurement term.

struct JointFpcaInputs {
  Eigen::MatrixXd efunctions;  ///< J x M
  Eigen::MatrixXd centered_w;  ///< n x M, observed curves minus FPCA mean
  Eigen::MatrixXd score_hat;   ///< n x J frequentist scores
  /// Transformed cross-product design, rows = penalized then unpenalized
  /// (K x J), i.e. V~^{-1/2} U^T C^T for the J x K cross-product C.
  TransformedDesign crossproduct;
};

class JointCoxFpcaPosterior {
 public:
  JointCoxFpcaPosterior(SurvivalOutcome outcome, JointFpcaInputs fpca, Eigen::MatrixXd z)
      : outcome_(std::move(outcome)), fpca_(std::move(fpca)), z_(std::move(z)) {
    const Eigen::Index n = fpca_.centered_w.rows();
    outcome_.validate(n);
    j_ = fpca_.efunctions.rows();
    m_ = fpca_.efunctions.cols();
    if (fpca_.centered_w.cols() != m_) throw ShapeError("curves and eigenfunctions disagree on M");
    if (fpca_.score_hat.rows() != n || fpca_.score_hat.cols() != j_)
      throw ShapeError("score estimates have wrong shape");
    const auto& xr = fpca_.crossproduct.penalized;
    const auto& xf = fpca_.crossproduct.unpenalized;
    if (xr.cols() != j_ || xf.cols() != j_) throw ShapeError("cross-product must have J columns");
    if (z_.rows() > 0 && z_.cols() != n) throw ShapeError("scalar design has wrong column count");
    k_r_ = xr.rows();
    k_f_ = xf.rows();
    xt_.resize(j_, k_r_ + k_f_);
    xt_.leftCols(k_r_) = xr.transpose();
    xt_.rightCols(k_f_) = xf.transpose();
    layout_.add("eta0", 1).add("b_r", k_r_).add("b_f", k_f_).add("gamma", z_.rows());
    layout_.add("log_sigma_b", 1).add("c_raw", outcome_.num_hazard() - 1);
    layout_.add("xi", n * j_).add("log_lambda", j_).add("log_sigma_e", 1);
  }

  const ParamLayout& layout() const { return layout_; }
  Eigen::Index dim() const { return layout_.total(); }
  Eigen::Index num_components() const { return j_; }

  double log_density(const Eigen::VectorXd& theta, Eigen::VectorXd* grad,
                     DensityTerms* terms = nullptr) const {
    detail::require_dim(theta, layout_);
    detail::require_finite(theta, layout_);
    DensityTerms t;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(theta.size());
    const Eigen::Index n = fpca_.centered_w.rows();
    const auto nd = static_cast<double>(n);

    const Slice& xs = layout_["xi"];
    Eigen::Map<const Eigen::MatrixXd> xi(theta.data() + xs.offset, n, j_);
    Eigen::Map<Eigen::MatrixXd> g_xi(g.data() + xs.offset, n, j_);
    const Eigen::Index ib = layout_["b_r"].offset;
    const Eigen::VectorXd b = theta.segment(ib, k_r_ + k_f_);
    const Eigen::VectorXd v = xt_ * b;  // J

    const Slice& gs = layout_["gamma"];
    Eigen::VectorXd eta = Eigen::VectorXd::Constant(n, theta(0));
    eta.noalias() += xi * v;
    if (gs.size > 0) eta.noalias() += z_.transpose() * theta.segment(gs.offset, gs.size);

    const Slice& cs = layout_["c_raw"];
    const Eigen::VectorXd raw = theta.segment(cs.offset, cs.size);
    const SimplexResult simplex = simplex_transform(raw);
    Eigen::VectorXd d_eta, d_c;
    t.likelihood = detail::cox_loglik(outcome_, eta, simplex.c, d_eta, d_c);
    if (cs.size > 0) g.segment(cs.offset, cs.size) = simplex_backprop(raw, d_c);
    t.jacobian += simplex.log_jacobian;
    t.simplex_prior = detail::log_dirichlet_flat(simplex.c.size());

    g(0) = d_eta.sum();
    const Eigen::VectorXd xi_t_deta = xi.transpose() * d_eta;  // J
    g.segment(ib, k_r_ + k_f_).noalias() = xt_.transpose() * xi_t_deta;
    if (gs.size > 0) g.segment(gs.offset, gs.size).noalias() = z_ * d_eta;
    g_xi.noalias() = d_eta * v.transpose();

    // measurement: -nM log sigma_e - |xi Phi - W|^2 / (2 sigma_e^2)
    const Eigen::Index ie = layout_["log_sigma_e"].offset;
    const double log_se = theta(ie);
    const double inv_var_e = std::exp(-2.0 * log_se);
    const Eigen::MatrixXd resid = xi * fpca_.efunctions - fpca_.centered_w;
    const double sq = resid.squaredNorm();
    const double nm = nd * static_cast<double>(m_);
    t.measurement = -nm * log_se - 0.5 * sq * inv_var_e;
    g_xi.noalias() -= inv_var_e * resid * fpca_.efunctions.transpose();
    double d_ig = 0.0;
    t.variance_priors += detail::log_inv_gamma_sq(log_se, d_ig);
    g(ie) = -nm + sq * inv_var_e + d_ig + 1.0;
    t.jacobian += log_se;

    // scores: xi_ij ~ N(xi_hat_ij, lambda_j^2)
    const Slice& ls = layout_["log_lambda"];
    for (Eigen::Index j = 0; j < j_; ++j) {
      const double log_l = theta(ls.offset + j);
      const double inv_var = std::exp(-2.0 * log_l);
      const Eigen::VectorXd dev = xi.col(j) - fpca_.score_hat.col(j);
      const double dsq = dev.squaredNorm();
      t.score_prior += -nd * log_l - 0.5 * dsq * inv_var;
      g_xi.col(j).noalias() -= inv_var * dev;
      t.variance_priors += detail::log_inv_gamma_sq(log_l, d_ig);
      g(ls.offset + j) = -nd + dsq * inv_var + d_ig + 1.0;
      t.jacobian += log_l;
    }

    const Eigen::Index is = layout_["log_sigma_b"].offset;
    double d_prior = 0.0;
    t.smoothing_prior = detail::log_normal_zero(theta.segment(ib, k_r_), theta(is),
                                                g.segment(ib, k_r_), d_prior);
    t.variance_priors += detail::log_inv_gamma_sq(theta(is), d_ig);
    t.jacobian += theta(is);
    g(is) += d_prior + d_ig + 1.0;

    if (grad) *grad = std::move(g);
    if (terms) *terms = t;
    return t.total();
  }

 private:
  SurvivalOutcome outcome_;
  JointFpcaInputs fpca_;
  Eigen::MatrixXd z_;
  Eigen::MatrixXd xt_;  ///< J x K, [Xr^T | Xf^T]
  Eigen::Index j_ = 0, m_ = 0, k_r_ = 0, k_f_ = 0;
  ParamLayout layout_;
};

// ---------------------------------------------------------------------------
// Function-on-scalar regression with FPCA residual structure

struct FosrInputs {
  Eigen::MatrixXd y;           ///< n x M functional response
  Eigen::MatrixXd x;           ///< n x P scalar predictors
  Eigen::MatrixXd basis;       ///< M x K
  Eigen::MatrixXd penalty;     ///< K x K
  int penalty_rank = 0;
  Eigen::MatrixXd efunctions;  ///< J x M
};

class FosrPosterior {
 public:
  explicit FosrPosterior(FosrInputs in) : in_(std::move(in)) {
    n_ = in_.y.rows();
    m_ = in_.y.cols();
    p_ = in_.x.cols();
    k_ = in_.basis.cols();
    j_ = in_.efunctions.rows();
    if (in_.x.rows() != n_) throw ShapeError("predictor rows != response rows");
    if (in_.basis.rows() != m_) throw ShapeError("spline basis grid does not match response grid");
    if (in_.efunctions.cols() != m_) throw ShapeError("eigenfunction grid does not match response grid");
    if (in_.penalty.rows() != k_ || in_.penalty.cols() != k_) throw ShapeError("penalty shape");
    layout_.add("b", k_ * p_).add("xi", n_ * j_).add("log_lambda", j_);
    layout_.add("log_sigma_e", 1).add("log_sigma_p", p_);
  }

  const ParamLayout& layout() const { return layout_; }
  Eigen::Index dim() const { return layout_.total(); }
  Eigen::Index num_basis() const { return k_; }
  Eigen::Index num_predictors() const { return p_; }

  double log_density(const Eigen::VectorXd& theta, Eigen::VectorXd* grad,
                     DensityTerms* terms = nullptr) const {
    detail::require_dim(theta, layout_);
    detail::require_finite(theta, layout_);
    DensityTerms t;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(theta.size());
    const auto nd = static_cast<double>(n_);
    const double nm = nd * static_cast<double>(m_);

    const Slice& bs = layout_["b"];
    Eigen::Map<const Eigen::MatrixXd> b(theta.data() + bs.offset, k_, p_);  // column p = b_p
    Eigen::Map<Eigen::MatrixXd> g_b(g.data() + bs.offset, k_, p_);
    const Slice& xs = layout_["xi"];
    Eigen::Map<const Eigen::MatrixXd> xi(theta.data() + xs.offset, n_, j_);
    Eigen::Map<Eigen::MatrixXd> g_xi(g.data() + xs.offset, n_, j_);

    const Eigen::MatrixXd coef = in_.x * b.transpose();  // n x K
    Eigen::MatrixXd resid = coef * in_.basis.transpose();
    if (j_ > 0) resid.noalias() += xi * in_.efunctions;
    resid -= in_.y;

    const Eigen::Index ie = layout_["log_sigma_e"].offset;
    const double log_se = theta(ie);
    const double inv_var_e = std::exp(-2.0 * log_se);
    const double sq = resid.squaredNorm();
    t.likelihood = -nm * log_se - 0.5 * sq * inv_var_e - 0.5 * nm * detail::kLog2Pi;
    double d_ig = 0.0;
    t.variance_priors += detail::log_inv_gamma_sq(log_se, d_ig);
    g(ie) = -nm + sq * inv_var_e + d_ig + 1.0;
    t.jacobian += log_se;

    // d/d mu = -resid / sigma_e^2
    const Eigen::MatrixXd d_mu = -inv_var_e * resid;
    g_b.noalias() = in_.basis.transpose() * d_mu.transpose() * in_.x;
    if (j_ > 0) g_xi.noalias() = d_mu * in_.efunctions.transpose();

    const Slice& ps = layout_["log_sigma_p"];
    const auto rank = static_cast<double>(in_.penalty_rank);
    for (Eigen::Index p = 0; p < p_; ++p) {
      const double log_sp = theta(ps.offset + p);
      const double inv_var = std::exp(-2.0 * log_sp);
      const Eigen::VectorXd sb = in_.penalty * b.col(p);
      const double quad = b.col(p).dot(sb);
      t.smoothing_prior += -rank * log_sp - 0.5 * quad * inv_var;
      g_b.col(p).noalias() -= inv_var * sb;
      t.variance_priors += detail::log_inv_gamma_sq(log_sp, d_ig);
      g(ps.offset + p) = -rank + quad * inv_var + d_ig + 1.0;
      t.jacobian += log_sp;
    }

    const Slice& ls = layout_["log_lambda"];
    for (Eigen::Index j = 0; j < j_; ++j) {
      const double log_l = theta(ls.offset + j);
      const double inv_var = std::exp(-2.0 * log_l);
      const double xsq = xi.col(j).squaredNorm();
      t.score_prior += -nd * log_l - 0.5 * xsq * inv_var;
      g_xi.col(j).noalias() -= inv_var * xi.col(j);
      t.variance_priors += detail::log_inv_gamma_sq(log_l, d_ig);
      g(ls.offset + j) = -nd + xsq * inv_var + d_ig + 1.0;
      t.jacobian += log_l;
    }

    if (grad) *grad = std::move(g);
    if (terms) *terms = t;
    return t.total();
  }

 private:
  FosrInputs in_;
  Eigen::Index n_ = 0, m_ = 0, p_ = 0, k_ = 0, j_ = 0;
  ParamLayout layout_;
};

// ---------------------------------------------------------------------------
// Non-centred sampling coordinates

/// Coefficients `coef` with prior N(center, exp(scale)^2) are replaced by
/// z = (coef - center) / exp(scale). A scale slice of size S splits the
/// coefficient slice into S equal consecutive blocks.
struct ScaledBlock {
  std::string coef;
  std::string scale;
  Eigen::VectorXd center;  ///< empty means zero
};

/// Wraps a model so the sampler works in non-centred coordinates; the
/// target is the same distribution pushed through the change of variables.
template <typename Model>
class NonCentered {
 public:
  NonCentered(const Model& model, std::vector<ScaledBlock> blocks) : model_(&model), blocks_(std::move(blocks)) {
    const ParamLayout& lay = model.layout();
    for (auto& b : blocks_) {
      const Slice& c = lay[b.coef];
      const Slice& sc = lay[b.scale];
      if (sc.size < 1 || c.size % sc.size != 0) throw ShapeError("coefficient slice does not split into scale blocks");
      if (b.center.size() == 0) b.center = Eigen::VectorXd::Zero(c.size);
      if (b.center.size() != c.size) throw ShapeError("centre has wrong length");
    }
  }

  const ParamLayout& layout() const { return model_->layout(); }
  Eigen::Index dim() const { return model_->dim(); }

  /// Natural parameters from sampler coordinates.
  Eigen::VectorXd constrain(const Eigen::VectorXd& u) const {
    Eigen::VectorXd theta = u;
    for_each_block([&](Eigen::Index ci, Eigen::Index si, Eigen::Index len, const Eigen::VectorXd& center,
                       Eigen::Index co) {
      theta.segment(ci, len) = center.segment(co, len) + std::exp(u(si)) * u.segment(ci, len);
    });
    return theta;
  }

  /// Sampler coordinates from natural parameters.
  Eigen::VectorXd unconstrain(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd u = theta;
    for_each_block([&](Eigen::Index ci, Eigen::Index si, Eigen::Index len, const Eigen::VectorXd& center,
                       Eigen::Index co) {
      u.segment(ci, len) = (theta.segment(ci, len) - center.segment(co, len)) * std::exp(-theta(si));
    });
    return u;
  }

  double log_density(const Eigen::VectorXd& u, Eigen::VectorXd* grad) const {
    detail::require_dim(u, layout());
    detail::require_finite(u, layout());
    const Eigen::VectorXd theta = constrain(u);
    Eigen::VectorXd g;
    double logp = model_->log_density(theta, grad ? &g : nullptr);
    Eigen::VectorXd gu;
    if (grad) gu = g;
    for_each_block([&](Eigen::Index ci, Eigen::Index si, Eigen::Index len, const Eigen::VectorXd&, Eigen::Index) {
      const double scale = std::exp(u(si));
      logp += static_cast<double>(len) * u(si);
      if (grad) {
        gu.segment(ci, len) = scale * g.segment(ci, len);
        gu(si) += scale * g.segment(ci, len).dot(u.segment(ci, len)) + static_cast<double>(len);
      }
    });
    if (grad) *grad = std::move(gu);
    return logp;
  }

 private:
  template <typename F>
  void for_each_block(F&& f) const {
    const ParamLayout& lay = model_->layout();
    for (const auto& b : blocks_) {
      const Slice& c = lay[b.coef];
      const Slice& sc = lay[b.scale];
      const Eigen::Index len = c.size / sc.size;
      if (len == 0) continue;
      for (Eigen::Index k = 0; k < sc.size; ++k) f(c.offset + k * len, sc.offset + k, len, b.center, k * len);
    }
  }

  const Model* model_;
  std::vector<ScaledBlock> blocks_;
};

}  // namespace fbr
