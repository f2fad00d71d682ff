#ifndef BNPOOD_EVAL_HPP
#define BNPOOD_EVAL_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "bnpood/data.hpp"
#include "bnpood/rng.hpp"

namespace bnpood::eval {

// Probability a random in-distribution score exceeds a random OOD score,
// ties counted half (Mann-Whitney). Rank-based, O(n log n), exactly equal
// to brute-force pair counting.
double auroc(std::span<const double> scores_in,
             std::span<const double> scores_out);

double accuracy(std::span<const int> predictions, std::span<const int> labels);

// Sample Pearson correlation; throws on degenerate variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

// Least-squares slope of ys on xs.
double regression_slope(std::span<const double> xs, std::span<const double> ys);

// Forstner-Moonen distance: sqrt(sum log^2 lambda_i(S1^{-1} S2)), computed
// through a Cholesky-whitened symmetric eigenproblem.
double forstner_moonen(const Eigen::MatrixXd& s1, const Eigen::MatrixXd& s2);

// Wishart draw W(dof, scale) by Bartlett decomposition; dof >= D.
Eigen::MatrixXd sample_wishart(Rng& rng, double dof,
                               const Eigen::MatrixXd& scale);

struct FmAnalysis {
  std::vector<double> data_distances;  // all pairs of class covariances
  std::vector<double> null_distances;  // random Wishart-null pairs
};

// Data side: all K(K-1)/2 pairs of per-class covariances. Null side:
// n_pairs independent pairs from W(round(Nbar), Sigma_hat/Nbar).
FmAnalysis fm_null_analysis(const EmpiricalMoments& moments, int n_pairs,
                            std::uint64_t seed);

double median(std::vector<double> values);

}  // namespace bnpood::eval

#endif
