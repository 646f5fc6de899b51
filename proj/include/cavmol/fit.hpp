#pragma once
// Small nonlinear least-squares wrapper around Eigen's Levenberg-Marquardt
// (MINPACK port) with forward-difference Jacobians.

#include <functional>

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

namespace cavmol {

struct LeastSquaresResult {
  Eigen::VectorXd x;
  double rms = 0.0;
  bool converged = false;
  int evaluations = 0;
};

namespace detail {

struct ResidualFunctor {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> residual;
  int n_inputs;
  int n_values;

  int inputs() const { return n_inputs; }
  int values() const { return n_values; }
  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const {
    residual(x, f);
    return f.allFinite() ? 0 : -1;
  }
};

}  // namespace detail

/// Minimizes sum r_i(x)^2 for m residuals starting at x0.
inline LeastSquaresResult least_squares(
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& residual,
    Eigen::VectorXd x0, int m, double tol = 1e-12, int max_evaluations = 4000) {
  detail::ResidualFunctor f{residual, static_cast<int>(x0.size()), m};
  Eigen::NumericalDiff<detail::ResidualFunctor> nd(f);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<detail::ResidualFunctor>> lm(nd);
  lm.parameters.ftol = tol;
  lm.parameters.xtol = tol;
  lm.parameters.maxfev = max_evaluations;
  const auto status = lm.minimize(x0);
  LeastSquaresResult r;
  r.x = x0;
  r.evaluations = lm.nfev;
  Eigen::VectorXd fv(m);
  residual(x0, fv);
  r.rms = std::sqrt(fv.squaredNorm() / std::max(m, 1));
  using S = Eigen::LevenbergMarquardtSpace::Status;
  r.converged = fv.allFinite() && (status == S::RelativeReductionTooSmall ||
                                   status == S::RelativeErrorTooSmall ||
                                   status == S::RelativeErrorAndReductionTooSmall ||
                                   status == S::CosinusTooSmall || status == S::FtolTooSmall ||
                                   status == S::XtolTooSmall || status == S::GtolTooSmall);
  return r;
}

}  // namespace cavmol
