#ifndef BNPOOD_FULL_HPP
#define BNPOOD_FULL_HPP

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "bnpood/data.hpp"
#include "bnpood/densities.hpp"
#include "bnpood/scoring.hpp"

namespace bnpood {

// Hierarchical full-covariance model: per class
//   Sigma_k ~ IW(nu0, (nu0 - D - 1) Sigma0),  mu_k ~ N(mu0, Sigma_k / kappa0)
// with nu0 > D + 1 so E[Sigma_k] = Sigma0.
struct NiwHyper {
  double nu0 = 0.0;
  double kappa0 = 0.0;
  Eigen::VectorXd mu0;
  Eigen::MatrixXd sigma0;
};

struct NiwPosterior {
  std::vector<double> nu;            // nu0 + N_k
  std::vector<double> kappa;         // kappa0 + N_k
  Eigen::MatrixXd mu;                // K x D
  std::vector<Eigen::MatrixXd> psi;  // scale matrices
};

struct NiwExpectedStats {
  std::vector<Eigen::MatrixXd> inv_cov;  // E[Sigma_k^{-1}]
  std::vector<double> log_det;           // E[log |Sigma_k|]
  std::vector<double> mean_quad;         // E[(mu_k-mu0)^T Sigma_k^{-1} (mu_k-mu0)]
};

NiwPosterior niw_posterior_update(const NiwHyper& hyper,
                                  const ClassStats& stats);
NiwExpectedStats niw_expected_stats(const NiwHyper& hyper,
                                    const NiwPosterior& post);

// Marginal likelihood sum_k [log Z(post_k) - log Z(prior)] - (ND/2) log 2pi.
double log_marginal_likelihood_full(const NiwHyper& hyper,
                                    const ClassStats& stats);

struct EmOptions {
  int max_iters = 200;
  double tol = 1e-6;  // relative change of the marginal log likelihood
  std::optional<double> init_nu0;
  std::optional<double> init_kappa0;
};

struct EmTrace {
  std::vector<double> log_marginal;  // value at init, then after each iteration
  bool converged = false;
  int iterations = 0;
};

struct FullFit {
  NiwHyper hyper;
  NiwPosterior posterior;
  EmTrace trace;
};

// Empirical Bayes (mu0 = mu0hat, Sigma0 = Sigmahat within-class) plus EM over
// (nu0, kappa0): closed-form kappa0 and generalized-Newton nu0 M-steps.
FullFit em_fit_full(const ClassStats& stats, const EmpiricalMoments& moments,
                    const EmOptions& opts = {});
FullFit em_fit_full(const EmbeddingDataset& ds, const EmOptions& opts = {});

// Student-t predictives of the fitted model.
class FullModel final : public PredictiveModel {
 public:
  FullModel(NiwHyper hyper, NiwPosterior post, std::vector<double> counts);

  int num_classes() const override { return static_cast<int>(counts_.size()); }
  const std::vector<double>& class_counts() const override { return counts_; }
  double log_posterior_predictive(const Eigen::VectorXd& x,
                                  int k) const override;
  double log_prior_predictive(const Eigen::VectorXd& x) const override;

  const NiwHyper& hyper() const { return hyper_; }
  const NiwPosterior& posterior() const { return post_; }

 private:
  NiwHyper hyper_;
  NiwPosterior post_;
  std::vector<double> counts_;
  std::vector<double> post_dof_;
  std::vector<CholeskyPd> post_scale_;
  double prior_dof_ = 0.0;
  CholeskyPd prior_scale_;
};

}  // namespace bnpood

#endif
