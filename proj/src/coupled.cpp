#include "bnpood/coupled.hpp"

#include <cmath>
#include <string>

#include "bnpood/densities.hpp"
#include "bnpood/errors.hpp"
#include "bnpood/numerics.hpp"

namespace bnpood {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kLogPi = 1.1447298858494001741;
constexpr double kNuFloor = 2.0 + 1e-3;
constexpr double kAlphaFloor = 1e-3;

double log_z(double nu, double sigma_sq, double kappa) {
  return -0.5 * std::log(kappa) + std::lgamma(0.5 * nu) -
         0.5 * nu * std::log(0.5 * nu * sigma_sq);
}

// Location-independent part of the Student-t log density.
double t_const(double nu) {
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
         0.5 * (std::log(nu) + kLogPi);
}

}  // namespace

GammaGrid build_gamma_grid(double alpha0, int num_points) {
  if (!(alpha0 > 0.0))
    throw DomainError("gamma grid: alpha0 must be positive");
  if (num_points < 1)
    throw DomainError("gamma grid: need at least one node");
  GammaGrid grid;
  if (num_points == 1) {
    grid.nodes = Eigen::VectorXd::Constant(1, 1.0);
    grid.log_weight = Eigen::VectorXd::Zero(1);
    return grid;
  }
  const double lo = numerics::gamma_quantile(1e-4, alpha0, alpha0);
  const double hi = numerics::gamma_quantile(1.0 - 1e-4, alpha0, alpha0);
  const int P = num_points;
  grid.nodes.resize(P);
  const double log_lo = std::log(lo);
  const double step = (std::log(hi) - log_lo) / (P - 1);
  for (int p = 0; p < P; ++p) grid.nodes(p) = std::exp(log_lo + p * step);

  grid.log_weight.resize(P);
  for (int p = 0; p < P; ++p) {
    const double left = (p == 0) ? grid.nodes(0) : grid.nodes(p - 1);
    const double right = (p == P - 1) ? grid.nodes(P - 1) : grid.nodes(p + 1);
    const double cell = 0.5 * (right - left);
    grid.log_weight(p) =
        gamma_logpdf(grid.nodes(p), alpha0, alpha0) + std::log(cell);
  }
  const double norm = numerics::logsumexp(
      std::span<const double>(grid.log_weight.data(), P));
  grid.log_weight.array() -= norm;
  return grid;
}

CoupledPosterior coupled_e_step(const CoupledHyper& hyper,
                                const GammaGrid& grid,
                                const ClassStats& stats) {
  const int K = stats.num_classes();
  const Eigen::Index D = stats.dim();
  const Eigen::Index P = grid.size();
  const NixHyper& h = hyper.nix;

  CoupledPosterior post;
  post.nu.resize(K, D);
  post.kappa.resize(K, D);
  post.mu.resize(K, D);
  post.sigma_sq.resize(K);
  post.log_weight.resize(K, P);

  // log Z of the prior per (p, d); the gamma node only scales sigma0^2.
  Eigen::MatrixXd prior_log_z(P, D);
  for (Eigen::Index p = 0; p < P; ++p)
    for (Eigen::Index d = 0; d < D; ++d)
      prior_log_z(p, d) =
          log_z(h.nu0(d), grid.nodes(p) * h.sigma0_sq(d), h.kappa0(d));

  for (int k = 0; k < K; ++k) {
    const double nk = stats.count[k];
    post.nu.row(k) = h.nu0.transpose().array() + nk;
    post.kappa.row(k) = h.kappa0.transpose().array() + nk;
    post.mu.row(k) =
        (h.kappa0.cwiseProduct(h.mu0).transpose() + stats.sum.row(k))
            .cwiseQuotient(post.kappa.row(k));

    // Gamma-independent part of the sigma'^2 numerator.
    const Eigen::RowVectorXd base =
        h.kappa0.cwiseProduct(h.mu0.cwiseProduct(h.mu0)).transpose() +
        stats.diag_sq.row(k) -
        post.kappa.row(k).cwiseProduct(
            post.mu.row(k).cwiseProduct(post.mu.row(k)));

    post.sigma_sq[k].resize(P, D);
    std::vector<double> logw(P);
    for (Eigen::Index p = 0; p < P; ++p) {
      post.sigma_sq[k].row(p) =
          (grid.nodes(p) * h.nu0.cwiseProduct(h.sigma0_sq).transpose() + base)
              .cwiseQuotient(post.nu.row(k));
      if ((post.sigma_sq[k].row(p).array() <= 0.0).any())
        throw NumericalError(
            "coupled model: nonpositive posterior variance in class " +
            std::to_string(k));
      double lw = grid.log_weight(p);
      for (Eigen::Index d = 0; d < D; ++d)
        lw += log_z(post.nu(k, d), post.sigma_sq[k](p, d), post.kappa(k, d)) -
              prior_log_z(p, d);
      logw[p] = lw;
    }
    const double norm = numerics::logsumexp(logw);
    if (!std::isfinite(norm))
      throw NumericalError("coupled model: degenerate gamma weights in class " +
                           std::to_string(k));
    for (Eigen::Index p = 0; p < P; ++p)
      post.log_weight(k, p) = logw[p] - norm;
  }
  return post;
}

CoupledExpectedStats coupled_expected_stats(const CoupledHyper& hyper,
                                            const GammaGrid& grid,
                                            const CoupledPosterior& post) {
  const Eigen::Index K = post.nu.rows();
  const Eigen::Index D = post.nu.cols();
  const Eigen::Index P = grid.size();
  CoupledExpectedStats es;
  es.gamma.setZero(K);
  es.log_gamma.setZero(K);
  es.gamma_inv_var.setZero(K, D);
  es.log_var.setZero(K, D);
  es.mean_quad.setZero(K, D);
  for (Eigen::Index k = 0; k < K; ++k) {
    for (Eigen::Index p = 0; p < P; ++p) {
      const double w = std::exp(post.log_weight(k, p));
      const double g = grid.nodes(p);
      es.gamma(k) += w * g;
      es.log_gamma(k) += w * std::log(g);
      for (Eigen::Index d = 0; d < D; ++d) {
        const double ssq = post.sigma_sq[k](p, d);
        const double diff = post.mu(k, d) - hyper.nix.mu0(d);
        es.gamma_inv_var(k, d) += w * g / ssq;
        es.log_var(k, d) +=
            w * (std::log(0.5 * post.nu(k, d) * ssq) -
                 numerics::digamma(0.5 * post.nu(k, d)));
        es.mean_quad(k, d) += w * (1.0 / post.kappa(k, d) + diff * diff / ssq);
      }
    }
  }
  return es;
}

double log_marginal_likelihood_coupled(const CoupledHyper& hyper,
                                       const GammaGrid& grid,
                                       const ClassStats& stats) {
  const int K = stats.num_classes();
  const Eigen::Index D = stats.dim();
  const Eigen::Index P = grid.size();
  const NixHyper& h = hyper.nix;

  // ell_{k,p} = log w0p + sum_d [log Z(post) - log Z(prior)]; these are the
  // unnormalized E-step weights, so reuse that computation.
  Eigen::MatrixXd prior_log_z(P, D);
  for (Eigen::Index p = 0; p < P; ++p)
    for (Eigen::Index d = 0; d < D; ++d)
      prior_log_z(p, d) =
          log_z(h.nu0(d), grid.nodes(p) * h.sigma0_sq(d), h.kappa0(d));

  const CoupledPosterior post = coupled_e_step(hyper, grid, stats);
  double total = 0.0;
  std::vector<double> ell(P);
  for (int k = 0; k < K; ++k) {
    for (Eigen::Index p = 0; p < P; ++p) {
      double v = grid.log_weight(p);
      for (Eigen::Index d = 0; d < D; ++d)
        v += log_z(post.nu(k, d), post.sigma_sq[k](p, d), post.kappa(k, d)) -
             prior_log_z(p, d);
      ell[p] = v;
    }
    total += numerics::logsumexp(ell);
  }
  return total - 0.5 * stats.total_count() * D * kLog2Pi;
}

CoupledFit em_fit_coupled(const ClassStats& stats,
                          const EmpiricalMoments& moments,
                          const CoupledEmOptions& opts) {
  const Eigen::Index D = stats.dim();
  const int K = stats.num_classes();
  const double nbar = stats.mean_count();

  CoupledHyper hyper;
  hyper.nix.mu0 = moments.mu0;
  hyper.nix.sigma0_sq = moments.sigma_within.diagonal();
  hyper.nix.nu0 = Eigen::VectorXd::Constant(
      D, std::max(opts.init_nu0.value_or(nbar), kNuFloor));
  hyper.nix.kappa0 =
      Eigen::VectorXd::Constant(D, opts.init_kappa0.value_or(1e-3));
  hyper.alpha0 = opts.init_alpha0;

  CoupledFit fit;
  fit.grid = build_gamma_grid(hyper.alpha0, opts.grid_size);
  fit.trace.log_marginal.push_back(
      log_marginal_likelihood_coupled(hyper, fit.grid, stats));

  for (int it = 0; it < opts.max_iters; ++it) {
    const CoupledPosterior post = coupled_e_step(hyper, fit.grid, stats);
    const CoupledExpectedStats es =
        coupled_expected_stats(hyper, fit.grid, post);

    const double kd = static_cast<double>(K);
    const double s_lg = es.log_gamma.sum();
    for (Eigen::Index d = 0; d < D; ++d) {
      hyper.nix.kappa0(d) = kd / es.mean_quad.col(d).sum();

      const double s_lv = es.log_var.col(d).sum();
      const double s_giv = es.gamma_inv_var.col(d).sum();
      const double s0 = hyper.nix.sigma0_sq(d);
      numerics::ScalarObjective obj;
      obj.lower_bound = kNuFloor;
      obj.value = [=](double nu) {
        return 0.5 * nu * kd * std::log(0.5 * nu) +
               0.5 * nu * (s_lg + kd * std::log(s0)) -
               kd * std::lgamma(0.5 * nu) - 0.5 * (nu + 2.0) * s_lv -
               0.5 * nu * s0 * s_giv;
      };
      obj.deriv1 = [=](double nu) {
        return 0.5 * kd * (std::log(0.5 * nu) + 1.0) +
               0.5 * (s_lg + kd * std::log(s0) - s_lv - s0 * s_giv) -
               0.5 * kd * numerics::digamma(0.5 * nu);
      };
      obj.deriv2 = [=](double nu) {
        return 0.5 * kd / nu - 0.25 * kd * numerics::trigamma(0.5 * nu);
      };
      hyper.nix.nu0(d) =
          numerics::generalized_newton_maximize(obj, hyper.nix.nu0(d)).x;
    }

    // alpha0 M-step.
    {
      const double s = es.log_gamma.sum() - es.gamma.sum();
      numerics::ScalarObjective obj;
      obj.lower_bound = kAlphaFloor;
      obj.value = [=](double a) {
        return kd * a * std::log(a) - kd * std::lgamma(a) + a * s;
      };
      obj.deriv1 = [=](double a) {
        return kd * std::log(a) + kd - kd * numerics::digamma(a) + s;
      };
      obj.deriv2 = [=](double a) {
        return kd / a - kd * numerics::trigamma(a);
      };
      const double alpha_new =
          numerics::generalized_newton_maximize(obj, hyper.alpha0).x;
      if (alpha_new != hyper.alpha0) {
        hyper.alpha0 = alpha_new;
        fit.grid = build_gamma_grid(hyper.alpha0, opts.grid_size);
      }
    }

    const double lml = log_marginal_likelihood_coupled(hyper, fit.grid, stats);
    const double prev = fit.trace.log_marginal.back();
    fit.trace.log_marginal.push_back(lml);
    fit.trace.iterations = it + 1;
    if (std::abs(lml - prev) <= opts.tol * std::max(1.0, std::abs(prev))) {
      fit.trace.converged = true;
      break;
    }
  }

  fit.hyper = hyper;
  fit.posterior = coupled_e_step(hyper, fit.grid, stats);
  return fit;
}

CoupledFit em_fit_coupled(const EmbeddingDataset& ds,
                          const CoupledEmOptions& opts) {
  return em_fit_coupled(compute_class_stats(ds),
                        compute_empirical_moments(ds), opts);
}

CoupledModel::CoupledModel(CoupledHyper hyper, GammaGrid grid,
                           CoupledPosterior post, std::vector<double> counts)
    : hyper_(std::move(hyper)), grid_(std::move(grid)), post_(std::move(post)),
      counts_(std::move(counts)) {
  const Eigen::Index K = post_.nu.rows();
  const Eigen::Index D = post_.nu.cols();
  const Eigen::Index P = grid_.size();

  post_t_const_.resize(K, D);
  for (Eigen::Index k = 0; k < K; ++k)
    for (Eigen::Index d = 0; d < D; ++d)
      post_t_const_(k, d) = t_const(post_.nu(k, d));

  // Predictive scale: ((kappa'+1)/kappa') gamma_p sigma'^2_{k,p,d}.
  post_scale_sq_.resize(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    post_scale_sq_[k].resize(P, D);
    for (Eigen::Index p = 0; p < P; ++p)
      post_scale_sq_[k].row(p) =
          grid_.nodes(p) *
          post_.sigma_sq[k].row(p).cwiseProduct(
              (post_.kappa.row(k).array() + 1.0).matrix().cwiseQuotient(
                  post_.kappa.row(k)));
  }

  prior_t_const_.resize(D);
  for (Eigen::Index d = 0; d < D; ++d)
    prior_t_const_(d) = t_const(hyper_.nix.nu0(d));
  prior_scale_sq_.resize(P, D);
  for (Eigen::Index p = 0; p < P; ++p)
    prior_scale_sq_.row(p) =
        grid_.nodes(p) *
        hyper_.nix.sigma0_sq.cwiseProduct(
            (hyper_.nix.kappa0.array() + 1.0).matrix().cwiseQuotient(
                hyper_.nix.kappa0)).transpose();
}

double CoupledModel::log_posterior_predictive(const Eigen::VectorXd& x,
                                              int k) const {
  const Eigen::Index D = post_.nu.cols();
  const Eigen::Index P = grid_.size();
  std::vector<double> terms(P);
  for (Eigen::Index p = 0; p < P; ++p) {
    double lp = post_.log_weight(k, p);
    for (Eigen::Index d = 0; d < D; ++d) {
      const double nu = post_.nu(k, d);
      const double ssq = post_scale_sq_[k](p, d);
      const double r = x(d) - post_.mu(k, d);
      lp += post_t_const_(k, d) - 0.5 * std::log(ssq) -
            0.5 * (nu + 1.0) * std::log1p(r * r / (nu * ssq));
    }
    terms[p] = lp;
  }
  return numerics::logsumexp(terms);
}

double CoupledModel::log_prior_predictive(const Eigen::VectorXd& x) const {
  const Eigen::Index D = post_.nu.cols();
  const Eigen::Index P = grid_.size();
  std::vector<double> terms(P);
  for (Eigen::Index p = 0; p < P; ++p) {
    double lp = grid_.log_weight(p);
    for (Eigen::Index d = 0; d < D; ++d) {
      const double nu = hyper_.nix.nu0(d);
      const double ssq = prior_scale_sq_(p, d);
      const double r = x(d) - hyper_.nix.mu0(d);
      lp += prior_t_const_(d) - 0.5 * std::log(ssq) -
            0.5 * (nu + 1.0) * std::log1p(r * r / (nu * ssq));
    }
    terms[p] = lp;
  }
  return numerics::logsumexp(terms);
}

}  // namespace bnpood
