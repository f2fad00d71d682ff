#ifndef BNPOOD_DATA_HPP
#define BNPOOD_DATA_HPP

#include <Eigen/Dense>
#include <vector>

namespace bnpood {

// N x D embedding matrix with dense integer labels in [0, K).
struct EmbeddingDataset {
  Eigen::MatrixXd X;       // rows are samples
  std::vector<int> y;
  int num_classes = 0;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index dim() const { return X.cols(); }

  // Throws IoError on label range violations or non-finite entries.
  void validate() const;
};

// Per-class counts, sums, sums of outer products and per-dimension sums of
// squares. Every model variant is fit from these.
struct ClassStats {
  std::vector<double> count;             // N_k
  Eigen::MatrixXd sum;                   // K x D, row k = sum of x_n
  std::vector<Eigen::MatrixXd> outer;    // K of D x D, sum of x_n x_n^T
  Eigen::MatrixXd diag_sq;               // K x D, sum of x_{n,d}^2

  int num_classes() const { return static_cast<int>(count.size()); }
  Eigen::Index dim() const { return sum.cols(); }
  double total_count() const;
  double mean_count() const;
};

// Sample moments: global mean/covariance, per-class means/covariances and
// the average within-class covariance (population 1/N convention throughout).
struct EmpiricalMoments {
  Eigen::VectorXd mu0;                    // global mean
  Eigen::MatrixXd sigma0;                 // global covariance
  Eigen::MatrixXd sigma_within;           // (1/N) sum (x - mu_{y})(x - mu_{y})^T
  Eigen::MatrixXd class_mean;             // K x D
  std::vector<Eigen::MatrixXd> class_cov; // K of D x D
  std::vector<double> count;

  int num_classes() const { return static_cast<int>(count.size()); }
};

// Deterministic accumulation in ascending sample order; classes may be
// computed in parallel since each owns its slots.
ClassStats compute_class_stats(const EmbeddingDataset& ds);

// Requires every class nonempty and N >= 2.
EmpiricalMoments compute_empirical_moments(const EmbeddingDataset& ds);

}  // namespace bnpood

#endif
