#include "bnpood/tied.hpp"

#include <string>

#include "bnpood/errors.hpp"

namespace bnpood {

TiedModel::TiedModel(Hyper hyper, const ClassStats& stats)
    : hyper_(std::move(hyper)), counts_(stats.count) {
  const Eigen::Index D = hyper_.mu0.size();
  const int K = stats.num_classes();

  const CholeskyPd sigma0_chol(hyper_.sigma0, "Sigma0");
  const CholeskyPd sigma_chol(hyper_.sigma, "Sigma");
  const Eigen::MatrixXd sigma0_inv =
      sigma0_chol.solve(Eigen::MatrixXd::Identity(D, D));
  const Eigen::MatrixXd sigma_inv =
      sigma_chol.solve(Eigen::MatrixXd::Identity(D, D));
  const Eigen::VectorXd sigma0_inv_mu0 = sigma0_chol.solve(hyper_.mu0);

  post_mean_.resize(K);
  post_cov_.resize(K);
  pred_chol_.resize(K);
  for (int k = 0; k < K; ++k) {
    const double nk = counts_[k];
    const Eigen::MatrixXd prec = sigma0_inv + nk * sigma_inv;
    const CholeskyPd prec_chol(prec, "posterior precision of class " +
                                         std::to_string(k));
    post_cov_[k] = prec_chol.solve(Eigen::MatrixXd::Identity(D, D));
    Eigen::VectorXd rhs = sigma0_inv_mu0;
    if (nk > 0.0) {
      const Eigen::VectorXd xbar = stats.sum.row(k).transpose() / nk;
      rhs += nk * (sigma_chol.solve(xbar));
    }
    post_mean_[k] = prec_chol.solve(rhs);
    pred_chol_[k] = CholeskyPd(post_cov_[k] + hyper_.sigma,
                               "predictive covariance of class " +
                                   std::to_string(k));
  }
  prior_chol_ = CholeskyPd(hyper_.sigma0 + hyper_.sigma, "Sigma0 + Sigma");
}

TiedModel::TiedModel(Hyper hyper, const std::vector<double>& counts,
                     const Eigen::MatrixXd& posterior_means)
    : hyper_(std::move(hyper)), counts_(counts) {
  const Eigen::Index D = hyper_.mu0.size();
  const int K = static_cast<int>(counts_.size());

  const CholeskyPd sigma0_chol(hyper_.sigma0, "Sigma0");
  const CholeskyPd sigma_chol(hyper_.sigma, "Sigma");
  const Eigen::MatrixXd sigma0_inv =
      sigma0_chol.solve(Eigen::MatrixXd::Identity(D, D));
  const Eigen::MatrixXd sigma_inv =
      sigma_chol.solve(Eigen::MatrixXd::Identity(D, D));

  post_mean_.resize(K);
  post_cov_.resize(K);
  pred_chol_.resize(K);
  for (int k = 0; k < K; ++k) {
    const Eigen::MatrixXd prec = sigma0_inv + counts_[k] * sigma_inv;
    const CholeskyPd prec_chol(prec, "posterior precision of class " +
                                         std::to_string(k));
    post_cov_[k] = prec_chol.solve(Eigen::MatrixXd::Identity(D, D));
    post_mean_[k] = posterior_means.row(k).transpose();
    pred_chol_[k] = CholeskyPd(post_cov_[k] + hyper_.sigma,
                               "predictive covariance of class " +
                                   std::to_string(k));
  }
  prior_chol_ = CholeskyPd(hyper_.sigma0 + hyper_.sigma, "Sigma0 + Sigma");
}

double TiedModel::log_posterior_predictive(const Eigen::VectorXd& x,
                                           int k) const {
  return mvn_logpdf(x, post_mean_[k], pred_chol_[k]);
}

double TiedModel::log_prior_predictive(const Eigen::VectorXd& x) const {
  return mvn_logpdf(x, hyper_.mu0, prior_chol_);
}

TiedModel fit_tied(const EmpiricalMoments& moments, const ClassStats& stats) {
  TiedModel::Hyper h;
  h.mu0 = moments.mu0;
  h.sigma0 = moments.sigma0;
  h.sigma = moments.sigma_within;
  return TiedModel(std::move(h), stats);
}

TiedModel fit_tied(const EmbeddingDataset& ds) {
  return fit_tied(compute_empirical_moments(ds), compute_class_stats(ds));
}

}  // namespace bnpood
