#ifndef BNPOOD_SYNTHETIC_HPP
#define BNPOOD_SYNTHETIC_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bnpood/data.hpp"
#include "bnpood/rng.hpp"

namespace bnpood::synthetic {

// Generative configuration: K clusters with (mu_k, Sigma_k) drawn from the
// full-covariance prior, inliers from the clusters, outliers from the prior
// predictive.
struct SynthConfig {
  int dim = 2;
  int num_classes = 10;
  int n_per_class = 20;
  double nu0 = 4.0;
  double kappa0 = 0.05;
  Eigen::VectorXd mu0;     // defaults to zero
  Eigen::MatrixXd sigma0;  // defaults to identity
  int n_outliers = 0;
  std::uint64_t seed = 0;

  void fill_defaults();
  void validate() const;
};

struct ClusterParams {
  std::vector<Eigen::VectorXd> mean;
  std::vector<Eigen::MatrixXd> cov;
};

// Sigma_k ~ IW(nu0, (nu0-D-1) Sigma0), mu_k ~ N(mu0, Sigma_k/kappa0).
// One deterministic stream per (seed, class).
ClusterParams sample_cluster_params(const SynthConfig& cfg);

struct SynthData {
  EmbeddingDataset inliers;
  Eigen::MatrixXd outliers;
};

// Train split: n_per_class inliers per class plus n_outliers prior-predictive
// draws. split_tag picks the stream, so an eval split with the same cluster
// parameters is just a different tag.
SynthData generate(const SynthConfig& cfg, const ClusterParams& params,
                   std::uint64_t split_tag);
SynthData generate(const SynthConfig& cfg);  // samples params, tag 0

enum class Method { Tied, Full, Diag, Coupled, Mds, Rmds, Irmds };

Method method_from_string(const std::string& name);
std::string method_name(Method m);

struct SweepSpec {
  std::string param;            // "nu0" or "nk"
  std::vector<double> values;
  std::vector<Method> methods;
  int n_seeds = 20;
  SynthConfig base;             // n_outliers ignored; eval uses K * N_k
  int coupled_grid_size = 100;
};

struct SweepRow {
  std::string param;
  double value = 0.0;
  int seed = 0;
  Method method = Method::Tied;
  std::optional<double> auroc;  // empty when the fit failed
};

// For every (value, seed): generate a train split, fit each method, score a
// fresh eval split (same cluster parameters) against prior-predictive
// outliers, and report AUROC. Cells are independent and deterministic.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, int threads = 1);

void save_sweep_csv(const std::string& path,
                    const std::vector<SweepRow>& rows);

}  // namespace bnpood::synthetic

#endif
