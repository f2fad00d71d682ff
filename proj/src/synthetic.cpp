#include "bnpood/synthetic.hpp"

#include <cmath>
#include <fstream>

#include "bnpood/baselines.hpp"
#include "bnpood/coupled.hpp"
#include "bnpood/densities.hpp"
#include "bnpood/diag.hpp"
#include "bnpood/errors.hpp"
#include "bnpood/eval.hpp"
#include "bnpood/full.hpp"
#include "bnpood/io.hpp"
#include "bnpood/threading.hpp"
#include "bnpood/tied.hpp"

namespace bnpood::synthetic {

namespace {

// Stream tags keep parallel draws order-independent.
constexpr std::uint64_t kTagParams = 0x01;
constexpr std::uint64_t kTagInlier = 0x02;
constexpr std::uint64_t kTagOutlier = 0x03;

Eigen::VectorXd mvn_draw(Rng& rng, const Eigen::VectorXd& mean,
                         const Eigen::MatrixXd& chol_lower) {
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return mean + chol_lower * z;
}

Eigen::MatrixXd sample_inv_wishart(Rng& rng, double dof,
                                   const Eigen::MatrixXd& psi) {
  const Eigen::Index D = psi.rows();
  const CholeskyPd psi_chol(psi, "inverse Wishart scale");
  const Eigen::MatrixXd psi_inv =
      psi_chol.solve(Eigen::MatrixXd::Identity(D, D));
  const Eigen::MatrixXd w = eval::sample_wishart(rng, dof, psi_inv);
  const CholeskyPd w_chol(w, "Wishart draw");
  Eigen::MatrixXd sigma = w_chol.solve(Eigen::MatrixXd::Identity(D, D));
  return 0.5 * (sigma + sigma.transpose()).eval();
}

}  // namespace

void SynthConfig::fill_defaults() {
  if (mu0.size() == 0) mu0 = Eigen::VectorXd::Zero(dim);
  if (sigma0.size() == 0) sigma0 = Eigen::MatrixXd::Identity(dim, dim);
}

void SynthConfig::validate() const {
  if (dim < 1 || num_classes < 1 || n_per_class < 1 || n_outliers < 0)
    throw DomainError("synth config: counts must be positive");
  if (!(nu0 > dim + 1))
    throw DomainError("synth config: nu0 must exceed D+1");
  if (!(kappa0 > 0.0)) throw DomainError("synth config: kappa0 must be positive");
  if (mu0.size() != dim || sigma0.rows() != dim || sigma0.cols() != dim)
    throw DomainError("synth config: mu0/sigma0 dimension mismatch");
}

ClusterParams sample_cluster_params(const SynthConfig& cfg) {
  SynthConfig c = cfg;
  c.fill_defaults();
  c.validate();
  const Eigen::MatrixXd psi = (c.nu0 - c.dim - 1) * c.sigma0;
  ClusterParams params;
  params.mean.resize(c.num_classes);
  params.cov.resize(c.num_classes);
  for (int k = 0; k < c.num_classes; ++k) {
    Rng rng = Rng::from_stream(c.seed, kTagParams, static_cast<std::uint64_t>(k));
    params.cov[k] = sample_inv_wishart(rng, c.nu0, psi);
    const CholeskyPd cov_chol(params.cov[k] / c.kappa0, "mean covariance");
    params.mean[k] = mvn_draw(rng, c.mu0,
                              Eigen::MatrixXd(cov_chol.llt().matrixL()));
  }
  return params;
}

SynthData generate(const SynthConfig& cfg, const ClusterParams& params,
                   std::uint64_t split_tag) {
  SynthConfig c = cfg;
  c.fill_defaults();
  c.validate();
  const int K = c.num_classes;
  SynthData out;
  out.inliers.X.resize(static_cast<Eigen::Index>(K) * c.n_per_class, c.dim);
  out.inliers.y.resize(static_cast<std::size_t>(K) * c.n_per_class);
  out.inliers.num_classes = K;
  for (int k = 0; k < K; ++k) {
    Rng rng = Rng::from_stream(c.seed, kTagInlier + 16 * split_tag,
                               static_cast<std::uint64_t>(k));
    const CholeskyPd cov_chol(params.cov[k], "cluster covariance");
    const Eigen::MatrixXd l = cov_chol.llt().matrixL();
    for (int i = 0; i < c.n_per_class; ++i) {
      const Eigen::Index row = static_cast<Eigen::Index>(k) * c.n_per_class + i;
      out.inliers.X.row(row) = mvn_draw(rng, params.mean[k], l).transpose();
      out.inliers.y[static_cast<std::size_t>(row)] = k;
    }
  }

  out.outliers.resize(c.n_outliers, c.dim);
  if (c.n_outliers > 0) {
    Rng rng = Rng::from_stream(c.seed, kTagOutlier + 16 * split_tag, 0);
    const Eigen::MatrixXd psi = (c.nu0 - c.dim - 1) * c.sigma0;
    for (int i = 0; i < c.n_outliers; ++i) {
      // Prior predictive: fresh (mu, Sigma), then one observation.
      const Eigen::MatrixXd sigma = sample_inv_wishart(rng, c.nu0, psi);
      const CholeskyPd mean_chol(sigma / c.kappa0, "prior mean covariance");
      const Eigen::VectorXd mu =
          mvn_draw(rng, c.mu0, Eigen::MatrixXd(mean_chol.llt().matrixL()));
      const CholeskyPd obs_chol(sigma, "prior observation covariance");
      out.outliers.row(i) =
          mvn_draw(rng, mu, Eigen::MatrixXd(obs_chol.llt().matrixL()))
              .transpose();
    }
  }
  return out;
}

SynthData generate(const SynthConfig& cfg) {
  return generate(cfg, sample_cluster_params(cfg), 0);
}

Method method_from_string(const std::string& name) {
  if (name == "tied") return Method::Tied;
  if (name == "full") return Method::Full;
  if (name == "diag") return Method::Diag;
  if (name == "coupled") return Method::Coupled;
  if (name == "mds") return Method::Mds;
  if (name == "rmds") return Method::Rmds;
  if (name == "irmds") return Method::Irmds;
  throw DomainError("unknown method '" + name + "'");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::Tied: return "tied";
    case Method::Full: return "full";
    case Method::Diag: return "diag";
    case Method::Coupled: return "coupled";
    case Method::Mds: return "mds";
    case Method::Rmds: return "rmds";
    case Method::Irmds: return "irmds";
  }
  return "?";
}

namespace {

std::vector<double> score_matrix(const PredictiveModel& model,
                                 const Eigen::MatrixXd& X) {
  std::vector<double> s(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    s[static_cast<std::size_t>(i)] = dpmm_score(model, X.row(i).transpose());
  return s;
}

std::vector<double> score_baseline(const MahalanobisModel& model, Method m,
                                   const Eigen::MatrixXd& X) {
  std::vector<double> s(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Eigen::VectorXd x = X.row(i).transpose();
    double v = 0.0;
    if (m == Method::Mds)
      v = model.mds_score(x);
    else if (m == Method::Rmds)
      v = model.rmds_score(x);
    else
      v = model.independent_rmds_score(x);
    s[static_cast<std::size_t>(i)] = v;
  }
  return s;
}

double sweep_cell_auroc(const SynthConfig& cfg, Method method,
                        int coupled_grid_size) {
  const ClusterParams params = sample_cluster_params(cfg);
  SynthConfig train_cfg = cfg;
  train_cfg.n_outliers = 0;
  const SynthData train = generate(train_cfg, params, 0);

  SynthConfig eval_cfg = cfg;
  eval_cfg.n_outliers = cfg.num_classes * cfg.n_per_class;
  const SynthData test = generate(eval_cfg, params, 1);

  std::vector<double> in_scores, out_scores;
  switch (method) {
    case Method::Tied: {
      const TiedModel model = fit_tied(train.inliers);
      in_scores = score_matrix(model, test.inliers.X);
      out_scores = score_matrix(model, test.outliers);
      break;
    }
    case Method::Full: {
      const FullFit fit = em_fit_full(train.inliers);
      const FullModel model(fit.hyper, fit.posterior,
                            compute_class_stats(train.inliers).count);
      in_scores = score_matrix(model, test.inliers.X);
      out_scores = score_matrix(model, test.outliers);
      break;
    }
    case Method::Diag: {
      const DiagFit fit = em_fit_diag(train.inliers);
      const DiagModel model(fit.hyper, fit.posterior,
                            compute_class_stats(train.inliers).count);
      in_scores = score_matrix(model, test.inliers.X);
      out_scores = score_matrix(model, test.outliers);
      break;
    }
    case Method::Coupled: {
      CoupledEmOptions opts;
      opts.grid_size = coupled_grid_size;
      const CoupledFit fit = em_fit_coupled(train.inliers, opts);
      const CoupledModel model(fit.hyper, fit.grid, fit.posterior,
                               compute_class_stats(train.inliers).count);
      in_scores = score_matrix(model, test.inliers.X);
      out_scores = score_matrix(model, test.outliers);
      break;
    }
    default: {
      const MahalanobisModel model(train.inliers, method == Method::Irmds);
      in_scores = score_baseline(model, method, test.inliers.X);
      out_scores = score_baseline(model, method, test.outliers);
      break;
    }
  }
  return eval::auroc(in_scores, out_scores);
}

}  // namespace

std::vector<SweepRow> run_sweep(const SweepSpec& spec, int threads) {
  if (spec.param != "nu0" && spec.param != "nk")
    throw DomainError("sweep: param must be 'nu0' or 'nk'");
  std::vector<SweepRow> rows;
  for (std::size_t vi = 0; vi < spec.values.size(); ++vi)
    for (int seed = 0; seed < spec.n_seeds; ++seed)
      for (Method m : spec.methods) {
        SweepRow row;
        row.param = spec.param;
        row.value = spec.values[vi];
        row.seed = seed;
        row.method = m;
        rows.push_back(row);
      }

  parallel_for(rows.size(), threads, [&](std::size_t i) {
    SweepRow& row = rows[i];
    SynthConfig cfg = spec.base;
    if (spec.param == "nu0")
      cfg.nu0 = row.value;
    else
      cfg.n_per_class = static_cast<int>(row.value);
    // One counter-derived stream per (setting, seed) cell.
    cfg.seed = Rng::from_stream(spec.base.seed,
                                static_cast<std::uint64_t>(
                                    std::llround(row.value * 1024.0)),
                                static_cast<std::uint64_t>(row.seed))
                   .next_u64();
    try {
      row.auroc = sweep_cell_auroc(cfg, row.method, spec.coupled_grid_size);
    } catch (const std::exception&) {
      row.auroc.reset();  // recorded as missing
    }
  });
  return rows;
}

void save_sweep_csv(const std::string& path,
                    const std::vector<SweepRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "param,value,seed,method,auroc\n";
  for (const auto& r : rows) {
    out << r.param << ',' << io::format_double(r.value) << ',' << r.seed << ','
        << method_name(r.method) << ',';
    if (r.auroc) out << io::format_double(*r.auroc);
    out << "\n";
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace bnpood::synthetic
