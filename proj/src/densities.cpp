#include "bnpood/densities.hpp"

#include <cmath>

#include "bnpood/errors.hpp"
#include "bnpood/numerics.hpp"

namespace bnpood {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kLogPi = 1.1447298858494001741;
}  // namespace

namespace {

bool llt_ok(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return llt.info() == Eigen::Success &&
         llt.matrixLLT().diagonal().minCoeff() > 0.0;
}

}  // namespace

CholeskyPd::CholeskyPd(const Eigen::MatrixXd& m, const std::string& name,
                       double jitter_rel) {
  if (m.rows() != m.cols())
    throw NumericalError("cholesky: matrix '" + name + "' is not square");
  llt_.compute(m);
  if (!llt_ok(llt_)) {
    const double jitter = jitter_rel * m.trace() / static_cast<double>(m.rows());
    Eigen::MatrixXd patched = m;
    patched.diagonal().array() += jitter;
    llt_.compute(patched);
    if (!llt_ok(llt_))
      throw NumericalError("matrix '" + name +
                           "' is not positive definite (jitter retry failed)");
  }
  log_det_ = 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

double CholeskyPd::quad_form(const Eigen::VectorXd& u) const {
  return llt_.matrixL().solve(u).squaredNorm();
}

Eigen::MatrixXd CholeskyPd::solve(const Eigen::MatrixXd& rhs) const {
  return llt_.solve(rhs);
}

double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                  const CholeskyPd& cov) {
  const double d = static_cast<double>(x.size());
  return -0.5 * (d * kLog2Pi + cov.log_det() + cov.quad_form(x - mean));
}

double mvt_logpdf(const Eigen::VectorXd& x, double nu,
                  const Eigen::VectorXd& mean, const CholeskyPd& scale) {
  if (!(nu > 0.0)) throw DomainError("mvt_logpdf: dof must be positive");
  const double d = static_cast<double>(x.size());
  const double q = scale.quad_form(x - mean);
  return std::lgamma(0.5 * (nu + d)) - std::lgamma(0.5 * nu) -
         0.5 * d * (std::log(nu) + kLogPi) - 0.5 * scale.log_det() -
         0.5 * (nu + d) * std::log1p(q / nu);
}

double normal_logpdf(double x, double mean, double var) {
  const double r = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + r * r / var);
}

double student_t_logpdf(double x, double nu, double mean, double scale_sq) {
  const double r = x - mean;
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
         0.5 * (std::log(nu) + kLogPi + std::log(scale_sq)) -
         0.5 * (nu + 1.0) * std::log1p(r * r / (nu * scale_sq));
}

double gamma_logpdf(double x, double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape) +
         (shape - 1.0) * std::log(x) - rate * x;
}

}  // namespace bnpood
