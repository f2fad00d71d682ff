#ifndef BNPOOD_BASELINES_HPP
#define BNPOOD_BASELINES_HPP

#include <Eigen/Dense>
#include <vector>

#include "bnpood/data.hpp"
#include "bnpood/densities.hpp"

namespace bnpood {

// Mahalanobis-family scores from the sample moments: the shared-covariance
// MDS and RMDS, and the per-class-covariance Independent RMDS.
class MahalanobisModel {
 public:
  // with_class_covs enables independent_rmds_score; per-class covariances
  // get a 1e-6 * trace/D ridge when N_k <= D.
  MahalanobisModel(const EmpiricalMoments& moments, bool with_class_covs);
  explicit MahalanobisModel(const EmbeddingDataset& ds,
                            bool with_class_covs = false);

  int num_classes() const { return static_cast<int>(class_mean_.rows()); }
  const std::vector<double>& class_counts() const { return counts_; }

  // max_k of -MD_k(x) under the shared within-class covariance.
  double mds_score(const Eigen::VectorXd& x) const;
  // max_k of MD_0(x) - MD_k(x).
  double rmds_score(const Eigen::VectorXd& x) const;
  // max_k of 2 log N(x | mu_k, Sigma_k) - 2 log N(x | mu_0, Sigma_0); set
  // include_log_dets=false for the determinant-free variant.
  double independent_rmds_score(const Eigen::VectorXd& x,
                                bool include_log_dets = true) const;

  // argmin_k MD_k(x): the classifier shared by all three scores.
  int classify(const Eigen::VectorXd& x) const;

  const Eigen::VectorXd& mu0() const { return mu0_; }
  const Eigen::MatrixXd& class_means() const { return class_mean_; }

 private:
  Eigen::VectorXd mu0_;
  Eigen::MatrixXd class_mean_;  // K x D
  std::vector<double> counts_;
  CholeskyPd sigma0_chol_;
  CholeskyPd sigma_chol_;
  std::vector<CholeskyPd> class_chol_;  // empty unless with_class_covs
};

}  // namespace bnpood

#endif
