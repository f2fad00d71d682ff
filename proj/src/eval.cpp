#include "bnpood/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bnpood/densities.hpp"
#include "bnpood/errors.hpp"

namespace bnpood::eval {

double auroc(std::span<const double> scores_in,
             std::span<const double> scores_out) {
  if (scores_in.empty() || scores_out.empty())
    throw DomainError("auroc: both score lists must be nonempty");
  // Midranks of the pooled sample; U statistic from the in-group rank sum.
  struct Tagged {
    double score;
    bool is_in;
  };
  std::vector<Tagged> pool;
  pool.reserve(scores_in.size() + scores_out.size());
  for (double s : scores_in) pool.push_back({s, true});
  for (double s : scores_out) pool.push_back({s, false});
  std::sort(pool.begin(), pool.end(),
            [](const Tagged& a, const Tagged& b) { return a.score < b.score; });
  const std::size_t n = pool.size();
  double rank_sum_in = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && pool[j].score == pool[i].score) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t t = i; t < j; ++t)
      if (pool[t].is_in) rank_sum_in += midrank;
    i = j;
  }
  const double n_in = static_cast<double>(scores_in.size());
  const double n_out = static_cast<double>(scores_out.size());
  const double u = rank_sum_in - 0.5 * n_in * (n_in + 1.0);
  return u / (n_in * n_out);
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size())
    throw DomainError("accuracy: length mismatch");
  if (predictions.empty()) throw DomainError("accuracy: empty input");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] == labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

namespace {

struct CenteredMoments {
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
};

CenteredMoments centered(std::span<const double> xs,
                         std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw DomainError("correlation: need two equal-length samples, n >= 2");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  CenteredMoments m;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    m.sxx += dx * dx;
    m.syy += dy * dy;
    m.sxy += dx * dy;
  }
  return m;
}

}  // namespace

double pearson(std::span<const double> xs, std::span<const double> ys) {
  const CenteredMoments m = centered(xs, ys);
  if (m.sxx <= 0.0 || m.syy <= 0.0)
    throw DomainError("pearson: zero variance input");
  return m.sxy / std::sqrt(m.sxx * m.syy);
}

double regression_slope(std::span<const double> xs,
                        std::span<const double> ys) {
  const CenteredMoments m = centered(xs, ys);
  if (m.sxx <= 0.0) throw DomainError("regression: zero variance regressor");
  return m.sxy / m.sxx;
}

double forstner_moonen(const Eigen::MatrixXd& s1, const Eigen::MatrixXd& s2) {
  const CholeskyPd chol1(s1, "FM first argument", 0.0);
  // Whiten: generalized eigenvalues of (S1, S2) are eigenvalues of
  // L^{-1} S2 L^{-T} with S1 = L L^T.
  const Eigen::MatrixXd l_inv_s2 =
      chol1.llt().matrixL().solve(s2);
  const Eigen::MatrixXd b =
      chol1.llt().matrixL().solve(l_inv_s2.transpose()).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      0.5 * (b + b.transpose()));
  if (eig.info() != Eigen::Success)
    throw NumericalError("FM metric: eigendecomposition failed");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    const double lam = eig.eigenvalues()(i);
    if (!(lam > 0.0))
      throw NumericalError("FM metric: nonpositive generalized eigenvalue");
    const double l = std::log(lam);
    sum += l * l;
  }
  return std::sqrt(sum);
}

Eigen::MatrixXd sample_wishart(Rng& rng, double dof,
                               const Eigen::MatrixXd& scale) {
  const Eigen::Index D = scale.rows();
  if (!(dof >= static_cast<double>(D)))
    throw DomainError("wishart: dof must be >= dimension");
  const CholeskyPd scale_chol(scale, "Wishart scale");
  // Bartlett: A lower triangular, A_ii ~ sqrt(chi^2_{dof-i}), A_ij ~ N(0,1).
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(D, D);
  for (Eigen::Index i = 0; i < D; ++i) {
    a(i, i) = std::sqrt(rng.chi_squared(dof - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  const Eigen::MatrixXd la = scale_chol.llt().matrixL() * a;
  return la * la.transpose();
}

FmAnalysis fm_null_analysis(const EmpiricalMoments& moments, int n_pairs,
                            std::uint64_t seed) {
  FmAnalysis out;
  const int K = moments.num_classes();
  for (int k = 0; k < K; ++k)
    for (int j = k + 1; j < K; ++j)
      out.data_distances.push_back(
          forstner_moonen(moments.class_cov[k], moments.class_cov[j]));

  double nbar = 0.0;
  for (double c : moments.count) nbar += c;
  nbar /= static_cast<double>(K);
  const Eigen::Index D = moments.mu0.size();
  // The null W(Nbar, Sigma_hat/Nbar) needs integer dof >= D for Bartlett.
  const double dof = std::max(std::round(nbar), static_cast<double>(D));
  const Eigen::MatrixXd scale = moments.sigma_within / nbar;

  out.null_distances.reserve(static_cast<std::size_t>(n_pairs));
  for (int i = 0; i < n_pairs; ++i) {
    Rng rng = Rng::from_stream(seed, 0x464d /* "FM" */, static_cast<std::uint64_t>(i));
    const Eigen::MatrixXd w1 = sample_wishart(rng, dof, scale);
    const Eigen::MatrixXd w2 = sample_wishart(rng, dof, scale);
    out.null_distances.push_back(forstner_moonen(w1, w2));
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw DomainError("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace bnpood::eval
