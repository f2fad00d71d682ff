#ifndef BNPOOD_TIED_HPP
#define BNPOOD_TIED_HPP

#include <Eigen/Dense>
#include <vector>

#include "bnpood/data.hpp"
#include "bnpood/densities.hpp"
#include "bnpood/scoring.hpp"

namespace bnpood {

// Gaussian DPMM with a single shared within-class covariance. Hyperparameters
// are the empirical-Bayes plug-ins (mu0hat, Sigma0hat, Sigmahat); per-class
// posteriors follow the conjugate normal update
//   Sigma'_k = (Sigma0^{-1} + N_k Sigma^{-1})^{-1}
//   mu'_k    = Sigma'_k (Sigma0^{-1} mu0 + N_k Sigma^{-1} xbar_k)
// and predictives are Gaussians with covariances Sigma'_k + Sigma and
// Sigma0 + Sigma.
class TiedModel final : public PredictiveModel {
 public:
  struct Hyper {
    Eigen::VectorXd mu0;
    Eigen::MatrixXd sigma0;
    Eigen::MatrixXd sigma;
  };

  TiedModel(Hyper hyper, const ClassStats& stats);
  // Rebuild from serialized form: posterior covariances are recomputed from
  // the counts, means are taken as stored.
  TiedModel(Hyper hyper, const std::vector<double>& counts,
            const Eigen::MatrixXd& posterior_means);

  int num_classes() const override { return static_cast<int>(counts_.size()); }
  const std::vector<double>& class_counts() const override { return counts_; }
  double log_posterior_predictive(const Eigen::VectorXd& x,
                                  int k) const override;
  double log_prior_predictive(const Eigen::VectorXd& x) const override;

  const Hyper& hyper() const { return hyper_; }
  const Eigen::VectorXd& posterior_mean(int k) const { return post_mean_[k]; }
  const Eigen::MatrixXd& posterior_cov(int k) const { return post_cov_[k]; }

 private:
  Hyper hyper_;
  std::vector<double> counts_;
  std::vector<Eigen::VectorXd> post_mean_;
  std::vector<Eigen::MatrixXd> post_cov_;   // Sigma'_k
  std::vector<CholeskyPd> pred_chol_;       // Sigma'_k + Sigma
  CholeskyPd prior_chol_;                   // Sigma0 + Sigma
};

// Empirical-Bayes fit: hyperparameters from the sample moments.
TiedModel fit_tied(const EmbeddingDataset& ds);
TiedModel fit_tied(const EmpiricalMoments& moments, const ClassStats& stats);

}  // namespace bnpood

#endif
