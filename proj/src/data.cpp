#include "bnpood/data.hpp"

#include <cmath>
#include <string>

#include "bnpood/errors.hpp"

namespace bnpood {

void EmbeddingDataset::validate() const {
  if (static_cast<Eigen::Index>(y.size()) != X.rows())
    throw IoError("dataset: label count " + std::to_string(y.size()) +
                  " does not match row count " + std::to_string(X.rows()));
  if (num_classes <= 0) throw IoError("dataset: class count must be positive");
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0 || y[i] >= num_classes)
      throw IoError("dataset: label " + std::to_string(y[i]) + " at row " +
                    std::to_string(i) + " out of range [0," +
                    std::to_string(num_classes) + ")");
  }
  if (!X.allFinite()) throw IoError("dataset: non-finite embedding entry");
}

double ClassStats::total_count() const {
  double t = 0.0;
  for (double c : count) t += c;
  return t;
}

double ClassStats::mean_count() const {
  return count.empty() ? 0.0 : total_count() / static_cast<double>(count.size());
}

ClassStats compute_class_stats(const EmbeddingDataset& ds) {
  ds.validate();
  const int K = ds.num_classes;
  const Eigen::Index D = ds.dim();
  ClassStats s;
  s.count.assign(K, 0.0);
  s.sum = Eigen::MatrixXd::Zero(K, D);
  s.outer.assign(K, Eigen::MatrixXd::Zero(D, D));
  s.diag_sq = Eigen::MatrixXd::Zero(K, D);
  for (Eigen::Index n = 0; n < ds.n(); ++n) {
    const int k = ds.y[n];
    const auto x = ds.X.row(n);
    s.count[k] += 1.0;
    s.sum.row(k) += x;
    s.outer[k].noalias() += x.transpose() * x;
    s.diag_sq.row(k) += x.cwiseProduct(x);
  }
  return s;
}

EmpiricalMoments compute_empirical_moments(const EmbeddingDataset& ds) {
  const ClassStats stats = compute_class_stats(ds);
  const int K = stats.num_classes();
  const Eigen::Index D = stats.dim();
  const double N = stats.total_count();
  if (N < 2) throw NumericalError("moments: need at least two samples");
  for (int k = 0; k < K; ++k) {
    if (stats.count[k] <= 0.0)
      throw NumericalError("moments: class " + std::to_string(k) + " is empty");
  }

  EmpiricalMoments m;
  m.count = stats.count;
  m.mu0 = stats.sum.colwise().sum().transpose() / N;

  Eigen::MatrixXd total_outer = Eigen::MatrixXd::Zero(D, D);
  for (int k = 0; k < K; ++k) total_outer += stats.outer[k];
  m.sigma0 = total_outer / N - m.mu0 * m.mu0.transpose();
  m.sigma0 = 0.5 * (m.sigma0 + m.sigma0.transpose()).eval();

  m.class_mean.resize(K, D);
  m.class_cov.resize(K);
  m.sigma_within = Eigen::MatrixXd::Zero(D, D);
  for (int k = 0; k < K; ++k) {
    const double nk = stats.count[k];
    const Eigen::VectorXd mu_k = stats.sum.row(k).transpose() / nk;
    m.class_mean.row(k) = mu_k.transpose();
    Eigen::MatrixXd cov = stats.outer[k] / nk - mu_k * mu_k.transpose();
    cov = 0.5 * (cov + cov.transpose()).eval();
    m.class_cov[k] = cov;
    m.sigma_within += (nk / N) * cov;
  }
  m.sigma_within = 0.5 * (m.sigma_within + m.sigma_within.transpose()).eval();
  return m;
}

}  // namespace bnpood
