#ifndef BNPOOD_DENSITIES_HPP
#define BNPOOD_DENSITIES_HPP

#include <Eigen/Dense>
#include <string>

namespace bnpood {

// Cholesky factor of a symmetric positive definite matrix with the shared
// jitter policy: on failure add 1e-9 * trace/D to the diagonal and retry
// once, then raise NumericalError naming the offending matrix.
class CholeskyPd {
 public:
  CholeskyPd() = default;
  CholeskyPd(const Eigen::MatrixXd& m, const std::string& name,
             double jitter_rel = 1e-9);

  double log_det() const { return log_det_; }
  const Eigen::LLT<Eigen::MatrixXd>& llt() const { return llt_; }

  // Squared Mahalanobis form u^T M^{-1} u.
  double quad_form(const Eigen::VectorXd& u) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_det_ = 0.0;
};

// Multivariate normal log density via a prefactored covariance.
double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                  const CholeskyPd& cov);

// Multivariate Student-t log density with dof nu, location mu and scale
// matrix S (prefactored): the density whose covariance is nu/(nu-2) S.
double mvt_logpdf(const Eigen::VectorXd& x, double nu,
                  const Eigen::VectorXd& mean, const CholeskyPd& scale);

// Univariate densities, log scale.
double normal_logpdf(double x, double mean, double var);
double student_t_logpdf(double x, double nu, double mean, double scale_sq);
double gamma_logpdf(double x, double shape, double rate);

}  // namespace bnpood

#endif
