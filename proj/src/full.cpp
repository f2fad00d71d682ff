#include "bnpood/full.hpp"

#include <cmath>
#include <string>

#include "bnpood/errors.hpp"
#include "bnpood/numerics.hpp"

namespace bnpood {

namespace {

constexpr double kLog2 = 0.69314718055994530942;
constexpr double kLog2Pi = 1.8378770664093454836;

// log Z(nu, Sigma, kappa, mu) = -(D/2) log kappa + log Gamma_D(nu/2)
//                               + (nu D/2) log 2 - (nu/2) log|Sigma|
double log_z(double nu, double log_det_sigma, double kappa, int dim) {
  return -0.5 * dim * std::log(kappa) +
         numerics::log_multivariate_gamma(0.5 * nu, dim) +
         0.5 * nu * dim * kLog2 - 0.5 * nu * log_det_sigma;
}

void check_hyper(const NiwHyper& h, Eigen::Index dim) {
  if (!(h.nu0 > dim + 1))
    throw DomainError("full model: nu0 must exceed D+1");
  if (!(h.kappa0 > 0.0))
    throw DomainError("full model: kappa0 must be positive");
}

}  // namespace

NiwPosterior niw_posterior_update(const NiwHyper& hyper,
                                  const ClassStats& stats) {
  const Eigen::Index D = stats.dim();
  const int K = stats.num_classes();
  check_hyper(hyper, D);

  const Eigen::MatrixXd prior_scale =
      (hyper.nu0 - D - 1) * hyper.sigma0 +
      hyper.kappa0 * hyper.mu0 * hyper.mu0.transpose();

  NiwPosterior post;
  post.nu.resize(K);
  post.kappa.resize(K);
  post.mu.resize(K, D);
  post.psi.resize(K);
  for (int k = 0; k < K; ++k) {
    const double nk = stats.count[k];
    post.nu[k] = hyper.nu0 + nk;
    post.kappa[k] = hyper.kappa0 + nk;
    const Eigen::VectorXd mu_k =
        (hyper.kappa0 * hyper.mu0 + stats.sum.row(k).transpose()) /
        post.kappa[k];
    post.mu.row(k) = mu_k.transpose();
    Eigen::MatrixXd psi = prior_scale + stats.outer[k] -
                          post.kappa[k] * mu_k * mu_k.transpose();
    post.psi[k] = 0.5 * (psi + psi.transpose()).eval();
  }
  return post;
}

NiwExpectedStats niw_expected_stats(const NiwHyper& hyper,
                                    const NiwPosterior& post) {
  const int K = static_cast<int>(post.nu.size());
  const Eigen::Index D = post.mu.cols();
  NiwExpectedStats es;
  es.inv_cov.resize(K);
  es.log_det.resize(K);
  es.mean_quad.resize(K);
  for (int k = 0; k < K; ++k) {
    const CholeskyPd psi_chol(post.psi[k],
                              "posterior scale of class " + std::to_string(k));
    es.inv_cov[k] =
        post.nu[k] * psi_chol.solve(Eigen::MatrixXd::Identity(D, D));
    es.log_det[k] = psi_chol.log_det() -
                    numerics::multivariate_digamma(0.5 * post.nu[k],
                                                   static_cast<int>(D)) -
                    D * kLog2;
    const Eigen::VectorXd diff = post.mu.row(k).transpose() - hyper.mu0;
    // Trace identity gives D/kappa' for the mean-displacement expectation.
    es.mean_quad[k] =
        static_cast<double>(D) / post.kappa[k] + diff.dot(es.inv_cov[k] * diff);
  }
  return es;
}

double log_marginal_likelihood_full(const NiwHyper& hyper,
                                    const ClassStats& stats) {
  const Eigen::Index D = stats.dim();
  const int dim = static_cast<int>(D);
  const NiwPosterior post = niw_posterior_update(hyper, stats);
  const Eigen::MatrixXd prior_psi = (hyper.nu0 - D - 1) * hyper.sigma0;
  const double prior_log_det = CholeskyPd(prior_psi, "prior scale").log_det();
  const double log_z_prior =
      log_z(hyper.nu0, prior_log_det, hyper.kappa0, dim);
  double total = 0.0;
  for (int k = 0; k < stats.num_classes(); ++k) {
    const CholeskyPd psi_chol(post.psi[k],
                              "posterior scale of class " + std::to_string(k));
    total +=
        log_z(post.nu[k], psi_chol.log_det(), post.kappa[k], dim) - log_z_prior;
  }
  return total - 0.5 * stats.total_count() * D * kLog2Pi;
}

FullFit em_fit_full(const ClassStats& stats, const EmpiricalMoments& moments,
                    const EmOptions& opts) {
  const Eigen::Index D = stats.dim();
  const int dim = static_cast<int>(D);
  const int K = stats.num_classes();
  const double nbar = stats.mean_count();

  NiwHyper hyper;
  hyper.mu0 = moments.mu0;
  hyper.sigma0 = moments.sigma_within;
  hyper.nu0 = opts.init_nu0.value_or(std::max(nbar, D + 2.5));
  hyper.kappa0 = opts.init_kappa0.value_or(1e-3);
  if (hyper.nu0 <= D + 1) hyper.nu0 = D + 2.5;

  const double log_det_sigma0 =
      CholeskyPd(hyper.sigma0, "Sigma0 (within-class)").log_det();

  FullFit fit;
  fit.trace.log_marginal.push_back(log_marginal_likelihood_full(hyper, stats));

  for (int it = 0; it < opts.max_iters; ++it) {
    // E-step under the current hyperparameters.
    const NiwPosterior post = niw_posterior_update(hyper, stats);
    const NiwExpectedStats es = niw_expected_stats(hyper, post);

    // Closed-form kappa0.
    double quad_sum = 0.0;
    for (double q : es.mean_quad) quad_sum += q;
    hyper.kappa0 = 1.0 / (quad_sum / (K * dim));

    // Generalized Newton for nu0 on the expected complete-data objective.
    double s_logdet = 0.0;
    double s_trace = 0.0;
    for (int k = 0; k < K; ++k) {
      s_logdet += es.log_det[k];
      s_trace += (hyper.sigma0 * es.inv_cov[k]).trace();
    }
    const double kd = static_cast<double>(K);
    numerics::ScalarObjective obj;
    obj.lower_bound = static_cast<double>(dim) + 1.0;
    obj.value = [=](double nu) {
      return 0.5 * nu * dim * kd * std::log(0.5 * (nu - dim - 1)) +
             0.5 * nu * kd * log_det_sigma0 -
             kd * numerics::log_multivariate_gamma(0.5 * nu, dim) -
             0.5 * (nu + dim + 1) * s_logdet - 0.5 * (nu - dim - 1) * s_trace;
    };
    obj.deriv1 = [=](double nu) {
      return kd * 0.5 * dim *
                 (std::log(0.5 * (nu - dim - 1)) + nu / (nu - dim - 1)) +
             0.5 * kd * log_det_sigma0 -
             0.5 * kd * numerics::multivariate_digamma(0.5 * nu, dim, 1) -
             0.5 * s_logdet - 0.5 * s_trace;
    };
    obj.deriv2 = [=](double nu) {
      const double m = nu - dim - 1;
      return kd * 0.5 * dim * (1.0 / m - (dim + 1) / (m * m)) -
             0.25 * kd * numerics::multivariate_digamma(0.5 * nu, dim, 2);
    };
    hyper.nu0 = numerics::generalized_newton_maximize(obj, hyper.nu0).x;

    const double lml = log_marginal_likelihood_full(hyper, stats);
    const double prev = fit.trace.log_marginal.back();
    fit.trace.log_marginal.push_back(lml);
    fit.trace.iterations = it + 1;
    if (std::abs(lml - prev) <= opts.tol * std::max(1.0, std::abs(prev))) {
      fit.trace.converged = true;
      break;
    }
  }

  fit.hyper = hyper;
  fit.posterior = niw_posterior_update(hyper, stats);
  return fit;
}

FullFit em_fit_full(const EmbeddingDataset& ds, const EmOptions& opts) {
  return em_fit_full(compute_class_stats(ds), compute_empirical_moments(ds),
                     opts);
}

FullModel::FullModel(NiwHyper hyper, NiwPosterior post,
                     std::vector<double> counts)
    : hyper_(std::move(hyper)), post_(std::move(post)),
      counts_(std::move(counts)) {
  const Eigen::Index D = hyper_.mu0.size();
  const int K = static_cast<int>(counts_.size());
  post_dof_.resize(K);
  post_scale_.resize(K);
  for (int k = 0; k < K; ++k) {
    post_dof_[k] = post_.nu[k] - D + 1;
    if (!(post_dof_[k] > 0.0))
      throw NumericalError("full model: nonpositive predictive dof for class " +
                           std::to_string(k));
    const double c =
        (post_.kappa[k] + 1.0) / (post_.kappa[k] * post_dof_[k]);
    post_scale_[k] = CholeskyPd(c * post_.psi[k],
                                "predictive scale of class " +
                                    std::to_string(k));
  }
  prior_dof_ = hyper_.nu0 - D + 1;
  if (!(prior_dof_ > 0.0))
    throw NumericalError("full model: nonpositive prior predictive dof");
  const double c0 = (hyper_.kappa0 + 1.0) / (hyper_.kappa0 * prior_dof_);
  prior_scale_ = CholeskyPd(c0 * (hyper_.nu0 - D - 1) * hyper_.sigma0,
                            "prior predictive scale");
}

double FullModel::log_posterior_predictive(const Eigen::VectorXd& x,
                                           int k) const {
  return mvt_logpdf(x, post_dof_[k], post_.mu.row(k).transpose(),
                    post_scale_[k]);
}

double FullModel::log_prior_predictive(const Eigen::VectorXd& x) const {
  return mvt_logpdf(x, prior_dof_, hyper_.mu0, prior_scale_);
}

}  // namespace bnpood
