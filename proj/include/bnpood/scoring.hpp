#ifndef BNPOOD_SCORING_HPP
#define BNPOOD_SCORING_HPP

#include <Eigen/Dense>
#include <vector>

namespace bnpood {

// A fitted generative classifier exposing the two predictive log densities
// the DPMM score is built from.
class PredictiveModel {
 public:
  virtual ~PredictiveModel() = default;
  virtual int num_classes() const = 0;
  virtual const std::vector<double>& class_counts() const = 0;
  virtual double log_posterior_predictive(const Eigen::VectorXd& x,
                                          int k) const = 0;
  virtual double log_prior_predictive(const Eigen::VectorXd& x) const = 0;
};

// Log density ratio lambda_k = log p(x | D_k) - log p(x).
double lambda(const PredictiveModel& model, const Eigen::VectorXd& x, int k);

// DPMM score: logsumexp_k [lambda_k + log N_k - log Nbar], Nbar the mean
// class count. Higher means more in-distribution.
double dpmm_score(const PredictiveModel& model, const Eigen::VectorXd& x);

// Inlier probability sigma(score - log(alpha / Nbar)).
double inlier_probability(const PredictiveModel& model,
                          const Eigen::VectorXd& x, double alpha);
double inlier_probability_from_score(double score, double alpha, double nbar);

// argmax_k [log N_k + log p(x | D_k)], ties to the smallest index;
// count_weighted=false drops the log N_k term.
int classify(const PredictiveModel& model, const Eigen::VectorXd& x,
             bool count_weighted = true);

}  // namespace bnpood

#endif
