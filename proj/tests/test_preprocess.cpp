#include <Eigen/Dense>
#include <doctest.h>

#include "bnpood/baselines.hpp"
#include "bnpood/data.hpp"
#include "bnpood/errors.hpp"
#include "bnpood/preprocess.hpp"
#include "bnpood/rng.hpp"

using namespace bnpood;

namespace {

EmbeddingDataset clustered_dataset(Rng& rng, int num_classes, int n_per_class,
                                   int dim, double spread = 4.0,
                                   double within = 1.0) {
  EmbeddingDataset ds;
  ds.num_classes = num_classes;
  ds.X.resize(static_cast<Eigen::Index>(num_classes) * n_per_class, dim);
  std::vector<Eigen::VectorXd> centers;
  for (int k = 0; k < num_classes; ++k) {
    Eigen::VectorXd c(dim);
    for (int d = 0; d < dim; ++d) c(d) = spread * rng.normal();
    centers.push_back(c);
  }
  for (int k = 0; k < num_classes; ++k)
    for (int i = 0; i < n_per_class; ++i) {
      const Eigen::Index row = static_cast<Eigen::Index>(k) * n_per_class + i;
      for (int d = 0; d < dim; ++d)
        ds.X(row, d) = centers[k](d) + within * (d + 1) * rng.normal();
      ds.y.push_back(k);
    }
  return ds;
}

void check_canonical_moments(const EmbeddingDataset& transformed, double tol) {
  const EmpiricalMoments m = compute_empirical_moments(transformed);
  CHECK(m.mu0.cwiseAbs().maxCoeff() < tol);
  const Eigen::Index d = transformed.dim();
  CHECK((m.sigma0 - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() <
        tol);
  Eigen::MatrixXd off = m.sigma_within;
  off.diagonal().setZero();
  CHECK(off.cwiseAbs().maxCoeff() < tol);
  for (Eigen::Index i = 0; i + 1 < d; ++i)
    CHECK(m.sigma_within(i, i) <= m.sigma_within(i + 1, i + 1) + tol);
}

}  // namespace

TEST_CASE("whitener canonicalizes training moments") {
  Rng rng(11);
  EmbeddingDataset ds = clustered_dataset(rng, 2, 120, 2);
  const Whitener w = fit_whitener(ds);
  CHECK(w.retained == 2);
  EmbeddingDataset z;
  z.X = apply_whitener(w, ds.X);
  z.y = ds.y;
  z.num_classes = ds.num_classes;
  check_canonical_moments(z, 1e-6);

  // Orthonormality of both bases and ascending within-class variances.
  CHECK((w.basis.transpose() * w.basis -
         Eigen::MatrixXd::Identity(w.retained, w.retained))
            .cwiseAbs()
            .maxCoeff() < 1e-8);
  CHECK((w.rotation.transpose() * w.rotation -
         Eigen::MatrixXd::Identity(w.retained, w.retained))
            .cwiseAbs()
            .maxCoeff() < 1e-8);
  for (Eigen::Index i = 0; i + 1 < w.sigma_sq.size(); ++i)
    CHECK(w.sigma_sq(i) <= w.sigma_sq(i + 1));
}

TEST_CASE("whitener on already-canonical data is a signed permutation") {
  // Build data whose sample moments are exactly canonical: symmetric points.
  EmbeddingDataset ds;
  ds.X.resize(8, 2);
  const double a = std::sqrt(2.0);
  ds.X << a, 0, -a, 0, 0, a, 0, -a, a, 0, -a, 0, 0, a, 0, -a;
  ds.y = {0, 0, 0, 0, 1, 1, 1, 1};
  ds.num_classes = 2;
  // mu0 = 0, Sigma0 = I, Sigma diagonal by construction.
  const Whitener w = fit_whitener(ds);
  const Eigen::MatrixXd t =
      w.rotation.transpose() * w.lambda_inv_sqrt.asDiagonal() *
      w.basis.transpose();
  // Transform times its transpose is the identity, entries are 0 or +-1.
  CHECK((t * t.transpose() - Eigen::MatrixXd::Identity(2, 2))
            .cwiseAbs()
            .maxCoeff() < 1e-8);
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const double v = std::abs(t(i / 2, i % 2));
    CHECK((v < 1e-8 || std::abs(v - 1.0) < 1e-8));
  }
}

TEST_CASE("whitener drops rank-deficient directions") {
  Rng rng(17);
  EmbeddingDataset ds = clustered_dataset(rng, 2, 60, 2);
  // Duplicate a column: rank 2 data in 3 dimensions.
  EmbeddingDataset dup;
  dup.X.resize(ds.n(), 3);
  dup.X.leftCols(2) = ds.X;
  dup.X.col(2) = ds.X.col(0);
  dup.y = ds.y;
  dup.num_classes = 2;
  const Whitener w = fit_whitener(dup, 1e-7);
  CHECK(w.retained == 2);

  // All-below-threshold input errors out.
  EmbeddingDataset flat;
  flat.X = Eigen::MatrixXd::Constant(4, 2, 3.0);
  flat.y = {0, 0, 1, 1};
  flat.num_classes = 2;
  CHECK_THROWS_AS(fit_whitener(flat), NumericalError);
}

TEST_CASE("keep_dims truncates by leading principal components") {
  Rng rng(19);
  EmbeddingDataset ds = clustered_dataset(rng, 3, 80, 4);
  const Whitener w = fit_whitener(ds, 1e-7, 2);
  CHECK(w.retained == 2);
  CHECK(apply_whitener(w, ds.X).cols() == 2);
}

TEST_CASE("apply maps the mean to zero and preserves Mahalanobis geometry") {
  Rng rng(23);
  EmbeddingDataset ds = clustered_dataset(rng, 2, 150, 3);
  const EmpiricalMoments m = compute_empirical_moments(ds);
  const Whitener w = fit_whitener(ds);
  REQUIRE(w.retained == 3);

  CHECK(apply_whitener(w, Eigen::VectorXd(m.mu0)).norm() < 1e-10);

  // Squared global-covariance Mahalanobis distance becomes Euclidean.
  const Eigen::VectorXd a = ds.X.row(0).transpose();
  const Eigen::VectorXd b = ds.X.row(7).transpose();
  const CholeskyPd sigma0(m.sigma0, "sigma0");
  const double maha = sigma0.quad_form(a - b);
  const double eucl =
      (apply_whitener(w, a) - apply_whitener(w, b)).squaredNorm();
  CHECK(eucl == doctest::Approx(maha).epsilon(1e-8));

  const Eigen::MatrixXd wrong_width = Eigen::MatrixXd::Zero(2, 5);
  CHECK_THROWS_AS(apply_whitener(w, wrong_width), IoError);
}

TEST_CASE("property: fit-then-apply canonicalizes random datasets") {
  Rng rng(29);
  for (int rep = 0; rep < 12; ++rep) {
    const int K = 2 + static_cast<int>(rng.next_u64() % 4);   // 2..5
    const int D = 2 + static_cast<int>(rng.next_u64() % 7);   // 2..8
    EmbeddingDataset ds = clustered_dataset(rng, K, 40 + 10 * D, D);
    const Whitener w = fit_whitener(ds);
    REQUIRE(w.retained == D);
    EmbeddingDataset z;
    z.X = apply_whitener(w, ds.X);
    z.y = ds.y;
    z.num_classes = K;
    check_canonical_moments(z, 1e-6);

    // Invertible on the retained subspace.
    const Eigen::MatrixXd recon = invert_whitener(w, z.X);
    const Eigen::MatrixXd centered =
        ds.X.rowwise() - compute_empirical_moments(ds).mu0.transpose();
    CHECK((recon - centered).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("rmds scores are invariant to the whitening transform") {
  Rng rng(31);
  EmbeddingDataset ds = clustered_dataset(rng, 3, 100, 3);
  const Whitener w = fit_whitener(ds);
  EmbeddingDataset z;
  z.X = apply_whitener(w, ds.X);
  z.y = ds.y;
  z.num_classes = ds.num_classes;

  const MahalanobisModel raw(ds);
  const MahalanobisModel whitened(z);
  for (Eigen::Index i = 0; i < 40; ++i) {
    Eigen::VectorXd probe(3);
    for (int d = 0; d < 3; ++d) probe(d) = 6.0 * rng.normal();
    const double s_raw = raw.rmds_score(probe);
    const double s_whi = whitened.rmds_score(apply_whitener(w, probe));
    CHECK(s_whi == doctest::Approx(s_raw).epsilon(1e-6));
  }
}
