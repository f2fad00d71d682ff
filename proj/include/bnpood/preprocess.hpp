#ifndef BNPOOD_PREPROCESS_HPP
#define BNPOOD_PREPROCESS_HPP

#include <Eigen/Dense>
#include <optional>

#include "bnpood/data.hpp"

namespace bnpood {

// Whitening-and-rotation transform fit on a training set: center, project
// onto the principal axes of the global covariance (dropping eigenvalues
// below threshold), rescale to identity covariance, then rotate into the
// eigenbasis of the average within-class covariance sorted by ascending
// eigenvalue. z = V^T Lambda^{-1/2} U^T (x - mean).
struct Whitener {
  Eigen::VectorXd mean;             // original-space mean, length D
  Eigen::MatrixXd basis;            // U, D x D'
  Eigen::VectorXd lambda_inv_sqrt;  // length D'
  Eigen::MatrixXd rotation;         // V, D' x D'
  Eigen::VectorXd sigma_sq;         // within-class variances, ascending
  Eigen::Index retained = 0;        // D'

  Eigen::Index input_dim() const { return mean.size(); }
};

// eig_threshold is relative to the largest global-covariance eigenvalue.
// keep_dims, when set, keeps only the top keep_dims principal components
// before the second rotation.
Whitener fit_whitener(const EmbeddingDataset& ds, double eig_threshold = 1e-7,
                      std::optional<Eigen::Index> keep_dims = std::nullopt);

Eigen::MatrixXd apply_whitener(const Whitener& w, const Eigen::MatrixXd& X);
Eigen::VectorXd apply_whitener(const Whitener& w, const Eigen::VectorXd& x);

// Inverse map on the retained subspace: recovers centered inputs when
// retained == D.
Eigen::MatrixXd invert_whitener(const Whitener& w, const Eigen::MatrixXd& Z);

}  // namespace bnpood

#endif
