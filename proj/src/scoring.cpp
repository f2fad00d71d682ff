#include "bnpood/scoring.hpp"

#include <cmath>
#include <limits>

#include "bnpood/errors.hpp"
#include "bnpood/numerics.hpp"

namespace bnpood {

namespace {

double mean_count(const PredictiveModel& model) {
  const auto& counts = model.class_counts();
  double t = 0.0;
  for (double c : counts) t += c;
  return t / static_cast<double>(counts.size());
}

}  // namespace

double lambda(const PredictiveModel& model, const Eigen::VectorXd& x, int k) {
  return model.log_posterior_predictive(x, k) - model.log_prior_predictive(x);
}

double dpmm_score(const PredictiveModel& model, const Eigen::VectorXd& x) {
  const auto& counts = model.class_counts();
  const double log_nbar = std::log(mean_count(model));
  const double log_prior = model.log_prior_predictive(x);
  std::vector<double> terms(counts.size());
  for (int k = 0; k < model.num_classes(); ++k) {
    terms[k] = model.log_posterior_predictive(x, k) - log_prior +
               std::log(counts[k]) - log_nbar;
  }
  return numerics::logsumexp(terms);
}

double inlier_probability_from_score(double score, double alpha, double nbar) {
  if (!(alpha > 0.0)) throw DomainError("inlier_probability: alpha must be positive");
  const double u = score - std::log(alpha / nbar);
  // Logistic, stable on both tails.
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

double inlier_probability(const PredictiveModel& model,
                          const Eigen::VectorXd& x, double alpha) {
  return inlier_probability_from_score(dpmm_score(model, x), alpha,
                                       mean_count(model));
}

int classify(const PredictiveModel& model, const Eigen::VectorXd& x,
             bool count_weighted) {
  const auto& counts = model.class_counts();
  int best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < model.num_classes(); ++k) {
    double v = model.log_posterior_predictive(x, k);
    if (count_weighted) v += std::log(counts[k]);
    if (v > best_val) {
      best_val = v;
      best = k;
    }
  }
  return best;
}

}  // namespace bnpood
