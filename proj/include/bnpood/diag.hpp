#ifndef BNPOOD_DIAG_HPP
#define BNPOOD_DIAG_HPP

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "bnpood/data.hpp"
#include "bnpood/full.hpp"  // EmOptions, EmTrace
#include "bnpood/scoring.hpp"

namespace bnpood {

// Hierarchical diagonal model: independently per dimension d,
//   sigma_{k,d}^2 ~ Inv-Chi^2(nu0_d, sigma0_d^2),
//   mu_{k,d} ~ N(mu0_d, sigma_{k,d}^2 / kappa0_d).
struct NixHyper {
  Eigen::VectorXd nu0;
  Eigen::VectorXd kappa0;
  Eigen::VectorXd mu0;
  Eigen::VectorXd sigma0_sq;
};

struct NixPosterior {
  Eigen::MatrixXd nu;        // K x D
  Eigen::MatrixXd kappa;     // K x D
  Eigen::MatrixXd mu;        // K x D
  Eigen::MatrixXd sigma_sq;  // K x D
};

struct NixExpectedStats {
  Eigen::MatrixXd inv_var;    // E[sigma^{-2}]
  Eigen::MatrixXd log_var;    // E[log sigma^2]
  Eigen::MatrixXd mean_quad;  // E[(mu - mu0)^2 / sigma^2]
};

NixPosterior nix_posterior_update(const NixHyper& hyper,
                                  const ClassStats& stats);
NixExpectedStats nix_expected_stats(const NixHyper& hyper,
                                    const NixPosterior& post);
double log_marginal_likelihood_diag(const NixHyper& hyper,
                                    const ClassStats& stats);

struct DiagFit {
  NixHyper hyper;
  NixPosterior posterior;
  EmTrace trace;
};

// Per-dimension EM: D independent scalar problems sharing one E-step.
DiagFit em_fit_diag(const ClassStats& stats, const EmpiricalMoments& moments,
                    const EmOptions& opts = {});
DiagFit em_fit_diag(const EmbeddingDataset& ds, const EmOptions& opts = {});

// Product-of-Student-t predictives.
class DiagModel final : public PredictiveModel {
 public:
  DiagModel(NixHyper hyper, NixPosterior post, std::vector<double> counts);

  int num_classes() const override { return static_cast<int>(counts_.size()); }
  const std::vector<double>& class_counts() const override { return counts_; }
  double log_posterior_predictive(const Eigen::VectorXd& x,
                                  int k) const override;
  double log_prior_predictive(const Eigen::VectorXd& x) const override;

  const NixHyper& hyper() const { return hyper_; }
  const NixPosterior& posterior() const { return post_; }

 private:
  NixHyper hyper_;
  NixPosterior post_;
  std::vector<double> counts_;
  Eigen::MatrixXd post_scale_sq_;   // ((kappa'+1)/kappa') sigma'^2
  Eigen::VectorXd prior_scale_sq_;  // ((kappa0+1)/kappa0) sigma0^2
};

}  // namespace bnpood

#endif
