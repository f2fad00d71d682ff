#include "bnpood/diag.hpp"

#include <cmath>
#include <string>

#include "bnpood/densities.hpp"
#include "bnpood/errors.hpp"
#include "bnpood/numerics.hpp"

namespace bnpood {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kNuFloor = 2.0 + 1e-3;  // keeps the prior mean finite

// log Z(nu, sigma^2, kappa, mu) for the scalar conjugate family.
double log_z(double nu, double sigma_sq, double kappa) {
  return -0.5 * std::log(kappa) + std::lgamma(0.5 * nu) -
         0.5 * nu * std::log(0.5 * nu * sigma_sq);
}

void check_hyper(const NixHyper& h) {
  if ((h.nu0.array() <= 0.0).any() || (h.kappa0.array() <= 0.0).any() ||
      (h.sigma0_sq.array() <= 0.0).any())
    throw DomainError("diag model: nu0, kappa0, sigma0^2 must be positive");
}

}  // namespace

NixPosterior nix_posterior_update(const NixHyper& hyper,
                                  const ClassStats& stats) {
  check_hyper(hyper);
  const int K = stats.num_classes();
  const Eigen::Index D = stats.dim();
  NixPosterior post;
  post.nu.resize(K, D);
  post.kappa.resize(K, D);
  post.mu.resize(K, D);
  post.sigma_sq.resize(K, D);
  for (int k = 0; k < K; ++k) {
    const double nk = stats.count[k];
    post.nu.row(k) = hyper.nu0.transpose().array() + nk;
    post.kappa.row(k) = hyper.kappa0.transpose().array() + nk;
    post.mu.row(k) =
        (hyper.kappa0.cwiseProduct(hyper.mu0).transpose() + stats.sum.row(k))
            .cwiseQuotient(post.kappa.row(k));
    post.sigma_sq.row(k) =
        (hyper.nu0.cwiseProduct(hyper.sigma0_sq).transpose() +
         hyper.kappa0.cwiseProduct(hyper.mu0.cwiseProduct(hyper.mu0))
             .transpose() +
         stats.diag_sq.row(k) -
         post.kappa.row(k).cwiseProduct(
             post.mu.row(k).cwiseProduct(post.mu.row(k))))
            .cwiseQuotient(post.nu.row(k));
    if ((post.sigma_sq.row(k).array() <= 0.0).any())
      throw NumericalError("diag model: nonpositive posterior variance in class " +
                           std::to_string(k));
  }
  return post;
}

NixExpectedStats nix_expected_stats(const NixHyper& hyper,
                                    const NixPosterior& post) {
  const Eigen::Index K = post.nu.rows();
  const Eigen::Index D = post.nu.cols();
  NixExpectedStats es;
  es.inv_var = post.sigma_sq.cwiseInverse();
  es.log_var.resize(K, D);
  es.mean_quad.resize(K, D);
  for (Eigen::Index k = 0; k < K; ++k)
    for (Eigen::Index d = 0; d < D; ++d) {
      const double nu = post.nu(k, d);
      es.log_var(k, d) = std::log(0.5 * nu * post.sigma_sq(k, d)) -
                         numerics::digamma(0.5 * nu);
      const double diff = post.mu(k, d) - hyper.mu0(d);
      es.mean_quad(k, d) =
          1.0 / post.kappa(k, d) + diff * diff / post.sigma_sq(k, d);
    }
  return es;
}

double log_marginal_likelihood_diag(const NixHyper& hyper,
                                    const ClassStats& stats) {
  const NixPosterior post = nix_posterior_update(hyper, stats);
  const Eigen::Index D = stats.dim();
  double total = 0.0;
  for (Eigen::Index d = 0; d < D; ++d) {
    const double lz0 = log_z(hyper.nu0(d), hyper.sigma0_sq(d), hyper.kappa0(d));
    for (int k = 0; k < stats.num_classes(); ++k)
      total += log_z(post.nu(k, d), post.sigma_sq(k, d), post.kappa(k, d)) - lz0;
  }
  return total - 0.5 * stats.total_count() * D * kLog2Pi;
}

DiagFit em_fit_diag(const ClassStats& stats, const EmpiricalMoments& moments,
                    const EmOptions& opts) {
  const Eigen::Index D = stats.dim();
  const int K = stats.num_classes();
  const double nbar = stats.mean_count();

  NixHyper hyper;
  hyper.mu0 = moments.mu0;
  hyper.sigma0_sq = moments.sigma_within.diagonal();
  hyper.nu0 = Eigen::VectorXd::Constant(
      D, std::max(opts.init_nu0.value_or(nbar), kNuFloor));
  hyper.kappa0 = Eigen::VectorXd::Constant(D, opts.init_kappa0.value_or(1e-3));

  DiagFit fit;
  fit.trace.log_marginal.push_back(log_marginal_likelihood_diag(hyper, stats));

  for (int it = 0; it < opts.max_iters; ++it) {
    const NixPosterior post = nix_posterior_update(hyper, stats);
    const NixExpectedStats es = nix_expected_stats(hyper, post);

    for (Eigen::Index d = 0; d < D; ++d) {
      hyper.kappa0(d) = K / es.mean_quad.col(d).sum();

      const double s_logvar = es.log_var.col(d).sum();
      const double s_invvar = es.inv_var.col(d).sum();
      const double s0 = hyper.sigma0_sq(d);
      const double kd = static_cast<double>(K);
      numerics::ScalarObjective obj;
      obj.lower_bound = kNuFloor;
      obj.value = [=](double nu) {
        return 0.5 * nu * kd * std::log(0.5 * nu) +
               0.5 * nu * kd * std::log(s0) - kd * std::lgamma(0.5 * nu) -
               0.5 * (nu + 2.0) * s_logvar - 0.5 * nu * s0 * s_invvar;
      };
      obj.deriv1 = [=](double nu) {
        return 0.5 * kd * (std::log(0.5 * nu) + 1.0) + 0.5 * kd * std::log(s0) -
               0.5 * kd * numerics::digamma(0.5 * nu) - 0.5 * s_logvar -
               0.5 * s0 * s_invvar;
      };
      obj.deriv2 = [=](double nu) {
        return 0.5 * kd / nu - 0.25 * kd * numerics::trigamma(0.5 * nu);
      };
      hyper.nu0(d) = numerics::generalized_newton_maximize(obj, hyper.nu0(d)).x;
    }

    const double lml = log_marginal_likelihood_diag(hyper, stats);
    const double prev = fit.trace.log_marginal.back();
    fit.trace.log_marginal.push_back(lml);
    fit.trace.iterations = it + 1;
    if (std::abs(lml - prev) <= opts.tol * std::max(1.0, std::abs(prev))) {
      fit.trace.converged = true;
      break;
    }
  }

  fit.hyper = hyper;
  fit.posterior = nix_posterior_update(hyper, stats);
  return fit;
}

DiagFit em_fit_diag(const EmbeddingDataset& ds, const EmOptions& opts) {
  return em_fit_diag(compute_class_stats(ds), compute_empirical_moments(ds),
                     opts);
}

DiagModel::DiagModel(NixHyper hyper, NixPosterior post,
                     std::vector<double> counts)
    : hyper_(std::move(hyper)), post_(std::move(post)),
      counts_(std::move(counts)) {
  post_scale_sq_ = post_.sigma_sq.cwiseProduct(
      (post_.kappa.array() + 1.0).matrix().cwiseQuotient(post_.kappa));
  prior_scale_sq_ = hyper_.sigma0_sq.cwiseProduct(
      (hyper_.kappa0.array() + 1.0).matrix().cwiseQuotient(hyper_.kappa0));
}

double DiagModel::log_posterior_predictive(const Eigen::VectorXd& x,
                                           int k) const {
  double lp = 0.0;
  for (Eigen::Index d = 0; d < x.size(); ++d)
    lp += student_t_logpdf(x(d), post_.nu(k, d), post_.mu(k, d),
                           post_scale_sq_(k, d));
  return lp;
}

double DiagModel::log_prior_predictive(const Eigen::VectorXd& x) const {
  double lp = 0.0;
  for (Eigen::Index d = 0; d < x.size(); ++d)
    lp += student_t_logpdf(x(d), hyper_.nu0(d), hyper_.mu0(d),
                           prior_scale_sq_(d));
  return lp;
}

}  // namespace bnpood
