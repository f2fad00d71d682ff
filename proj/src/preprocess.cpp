#include "bnpood/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bnpood/errors.hpp"

namespace bnpood {

namespace {

// Flip eigenvector signs so the largest-magnitude component is positive,
// making decompositions reproducible across runs.
void canonicalize_signs(Eigen::MatrixXd& vecs) {
  for (Eigen::Index j = 0; j < vecs.cols(); ++j) {
    Eigen::Index imax = 0;
    vecs.col(j).cwiseAbs().maxCoeff(&imax);
    if (vecs(imax, j) < 0.0) vecs.col(j) = -vecs.col(j);
  }
}

}  // namespace

Whitener fit_whitener(const EmbeddingDataset& ds, double eig_threshold,
                      std::optional<Eigen::Index> keep_dims) {
  const EmpiricalMoments m = compute_empirical_moments(ds);
  const Eigen::Index D = ds.dim();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig0(m.sigma0);
  if (eig0.info() != Eigen::Success)
    throw NumericalError("whitener: eigendecomposition of global covariance failed");
  // Eigen sorts ascending; order descending for the PCA step.
  Eigen::VectorXd evals = eig0.eigenvalues().reverse();
  Eigen::MatrixXd evecs = eig0.eigenvectors().rowwise().reverse();
  evals = evals.cwiseMax(0.0);

  const double cutoff = eig_threshold * evals(0);
  Eigen::Index keep = 0;
  while (keep < D && evals(keep) > cutoff) ++keep;
  if (keep == 0)
    throw NumericalError("whitener: all eigenvalues below threshold");
  if (keep_dims) keep = std::min(keep, *keep_dims);
  if (ds.n() <= keep)
    throw NumericalError("whitener: need more samples than retained dimensions");

  Whitener w;
  w.mean = m.mu0;
  w.basis = evecs.leftCols(keep);
  canonicalize_signs(w.basis);
  w.lambda_inv_sqrt = evals.head(keep).cwiseSqrt().cwiseInverse();
  w.retained = keep;

  // Whitened within-class covariance, then its eigenbasis sorted ascending.
  const Eigen::MatrixXd half =
      w.lambda_inv_sqrt.asDiagonal() * w.basis.transpose();
  const Eigen::MatrixXd sigma_w = half * m.sigma_within * half.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigw(
      0.5 * (sigma_w + sigma_w.transpose()));
  if (eigw.info() != Eigen::Success)
    throw NumericalError("whitener: eigendecomposition of within-class covariance failed");
  w.rotation = eigw.eigenvectors();
  canonicalize_signs(w.rotation);
  w.sigma_sq = eigw.eigenvalues().cwiseMax(0.0);
  return w;
}

Eigen::MatrixXd apply_whitener(const Whitener& w, const Eigen::MatrixXd& X) {
  if (X.cols() != w.input_dim())
    throw IoError("whitener: expected " + std::to_string(w.input_dim()) +
                  " columns, got " + std::to_string(X.cols()));
  const Eigen::MatrixXd centered = X.rowwise() - w.mean.transpose();
  return centered * w.basis * w.lambda_inv_sqrt.asDiagonal() * w.rotation;
}

Eigen::VectorXd apply_whitener(const Whitener& w, const Eigen::VectorXd& x) {
  Eigen::MatrixXd row = x.transpose();
  return apply_whitener(w, row).row(0).transpose();
}

Eigen::MatrixXd invert_whitener(const Whitener& w, const Eigen::MatrixXd& Z) {
  if (Z.cols() != w.retained)
    throw IoError("whitener: expected " + std::to_string(w.retained) +
                  " whitened columns, got " + std::to_string(Z.cols()));
  return Z * w.rotation.transpose() *
         w.lambda_inv_sqrt.cwiseInverse().asDiagonal() * w.basis.transpose();
}

}  // namespace bnpood
