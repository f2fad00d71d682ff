#include "bnpood/baselines.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "bnpood/errors.hpp"

namespace bnpood {

MahalanobisModel::MahalanobisModel(const EmpiricalMoments& moments,
                                   bool with_class_covs)
    : mu0_(moments.mu0), class_mean_(moments.class_mean),
      counts_(moments.count),
      sigma0_chol_(moments.sigma0, "Sigma0 (global covariance)"),
      sigma_chol_(moments.sigma_within, "Sigma (within-class covariance)") {
  if (!with_class_covs) return;
  const Eigen::Index D = mu0_.size();
  class_chol_.reserve(moments.class_cov.size());
  for (std::size_t k = 0; k < moments.class_cov.size(); ++k) {
    Eigen::MatrixXd cov = moments.class_cov[k];
    if (moments.count[k] <= static_cast<double>(D)) {
      // Ridge for classes too small to give a full-rank estimate.
      cov.diagonal().array() += 1e-6 * cov.trace() / static_cast<double>(D);
    }
    try {
      class_chol_.emplace_back(cov, "class covariance " + std::to_string(k),
                               1e-6);
    } catch (const NumericalError&) {
      throw NumericalError("independent rmds: covariance of class " +
                           std::to_string(k) + " is singular beyond jitter");
    }
  }
}

MahalanobisModel::MahalanobisModel(const EmbeddingDataset& ds,
                                   bool with_class_covs)
    : MahalanobisModel(compute_empirical_moments(ds), with_class_covs) {}

double MahalanobisModel::mds_score(const Eigen::VectorXd& x) const {
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < class_mean_.rows(); ++k) {
    const double md = sigma_chol_.quad_form(x - class_mean_.row(k).transpose());
    best = std::max(best, -md);
  }
  return best;
}

double MahalanobisModel::rmds_score(const Eigen::VectorXd& x) const {
  const double md0 = sigma0_chol_.quad_form(x - mu0_);
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < class_mean_.rows(); ++k) {
    const double md = sigma_chol_.quad_form(x - class_mean_.row(k).transpose());
    best = std::max(best, md0 - md);
  }
  return best;
}

double MahalanobisModel::independent_rmds_score(const Eigen::VectorXd& x,
                                                bool include_log_dets) const {
  if (class_chol_.empty())
    throw NumericalError("independent rmds: model fit without class covariances");
  const double md0 = sigma0_chol_.quad_form(x - mu0_);
  const double ld0 = sigma0_chol_.log_det();
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < class_chol_.size(); ++k) {
    const Eigen::VectorXd diff =
        x - class_mean_.row(static_cast<Eigen::Index>(k)).transpose();
    const double md = class_chol_[k].quad_form(diff);
    double s = md0 - md;
    if (include_log_dets) s += ld0 - class_chol_[k].log_det();
    best = std::max(best, s);
  }
  return best;
}

int MahalanobisModel::classify(const Eigen::VectorXd& x) const {
  int best = 0;
  double best_md = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < class_mean_.rows(); ++k) {
    const double md = sigma_chol_.quad_form(x - class_mean_.row(k).transpose());
    if (md < best_md) {
      best_md = md;
      best = static_cast<int>(k);
    }
  }
  return best;
}

}  // namespace bnpood
