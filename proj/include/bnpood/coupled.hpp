#ifndef BNPOOD_COUPLED_HPP
#define BNPOOD_COUPLED_HPP

#include <Eigen/Dense>
#include <vector>

#include "bnpood/data.hpp"
#include "bnpood/diag.hpp"
#include "bnpood/scoring.hpp"

namespace bnpood {

// Coupled diagonal model: a per-class scale gamma_k ~ Ga(alpha0, alpha0)
// (unit mean) multiplies the variance prior of every dimension,
//   sigma_{k,d}^2 ~ Inv-Chi^2(nu0_d, gamma_k sigma0_d^2).
// gamma_k is integrated out on a fixed quadrature grid.
struct CoupledHyper {
  NixHyper nix;
  double alpha0 = 0.0;
};

struct GammaGrid {
  Eigen::VectorXd nodes;       // strictly increasing, P >= 1
  Eigen::VectorXd log_weight;  // normalized prior weights, log scale

  Eigen::Index size() const { return nodes.size(); }
};

struct CoupledPosterior {
  Eigen::MatrixXd nu;     // K x D (gamma-independent)
  Eigen::MatrixXd kappa;  // K x D
  Eigen::MatrixXd mu;     // K x D
  std::vector<Eigen::MatrixXd> sigma_sq;  // K entries of P x D
  Eigen::MatrixXd log_weight;             // K x P, normalized per class
};

struct CoupledExpectedStats {
  Eigen::VectorXd gamma;          // E[gamma_k]
  Eigen::VectorXd log_gamma;      // E[log gamma_k]
  Eigen::MatrixXd gamma_inv_var;  // K x D: E[gamma_k sigma_{k,d}^{-2}]
  Eigen::MatrixXd log_var;        // K x D
  Eigen::MatrixXd mean_quad;      // K x D
};

// Nodes span the [1e-4, 1-1e-4] quantile range of Ga(alpha0, alpha0),
// log-spaced, with trapezoid cell weights renormalized to sum one.
// P = 1 degenerates to a single node at gamma = 1.
GammaGrid build_gamma_grid(double alpha0, int num_points);

CoupledPosterior coupled_e_step(const CoupledHyper& hyper,
                                const GammaGrid& grid,
                                const ClassStats& stats);
CoupledExpectedStats coupled_expected_stats(const CoupledHyper& hyper,
                                            const GammaGrid& grid,
                                            const CoupledPosterior& post);
double log_marginal_likelihood_coupled(const CoupledHyper& hyper,
                                       const GammaGrid& grid,
                                       const ClassStats& stats);

struct CoupledEmOptions {
  int max_iters = 200;
  double tol = 1e-6;
  int grid_size = 100;
  double init_alpha0 = 10.0;
  std::optional<double> init_nu0;
  std::optional<double> init_kappa0;
};

struct CoupledFit {
  CoupledHyper hyper;
  GammaGrid grid;
  CoupledPosterior posterior;
  EmTrace trace;
};

// EM with grid-quadrature E-step; the grid is rebuilt whenever alpha0 moves.
CoupledFit em_fit_coupled(const ClassStats& stats,
                          const EmpiricalMoments& moments,
                          const CoupledEmOptions& opts = {});
CoupledFit em_fit_coupled(const EmbeddingDataset& ds,
                          const CoupledEmOptions& opts = {});

// Mixture-of-Student-t predictives over the grid nodes.
class CoupledModel final : public PredictiveModel {
 public:
  CoupledModel(CoupledHyper hyper, GammaGrid grid, CoupledPosterior post,
               std::vector<double> counts);

  int num_classes() const override { return static_cast<int>(counts_.size()); }
  const std::vector<double>& class_counts() const override { return counts_; }
  double log_posterior_predictive(const Eigen::VectorXd& x,
                                  int k) const override;
  double log_prior_predictive(const Eigen::VectorXd& x) const override;

  const CoupledHyper& hyper() const { return hyper_; }
  const GammaGrid& grid() const { return grid_; }
  const CoupledPosterior& posterior() const { return post_; }

 private:
  CoupledHyper hyper_;
  GammaGrid grid_;
  CoupledPosterior post_;
  std::vector<double> counts_;
  // Cached pieces of the Student-t mixture evaluation.
  Eigen::MatrixXd post_t_const_;                 // K x D, dof-only terms
  std::vector<Eigen::MatrixXd> post_scale_sq_;   // K of P x D
  Eigen::VectorXd prior_t_const_;                // D
  Eigen::MatrixXd prior_scale_sq_;               // P x D
};

}  // namespace bnpood

#endif
