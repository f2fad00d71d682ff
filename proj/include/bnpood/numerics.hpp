#ifndef BNPOOD_NUMERICS_HPP
#define BNPOOD_NUMERICS_HPP

#include <functional>
#include <span>

namespace bnpood::numerics {

// Univariate special functions. Series/recurrence implementations good to
// roughly 1e-12 over the positive reals.
double digamma(double x);
double trigamma(double x);

// log Gamma_D(a) = (D(D-1)/4) log pi + sum_j lgamma(a + (1-j)/2), j=1..D.
// Requires a > (D-1)/2.
double log_multivariate_gamma(double a, int dim);

// Multivariate polygamma: sum_j psi^{(order-1)}(a + (1-j)/2) for order 1 or 2.
double multivariate_digamma(double a, int dim, int order = 1);

// Stable log(sum exp(v_i)). Empty input yields -inf.
double logsumexp(std::span<const double> values);

// Regularized lower incomplete gamma P(a, x) and its inverse in x.
double gamma_cdf(double x, double shape, double rate);
double gamma_quantile(double p, double shape, double rate);

// Scalar objective for the generalized Newton maximizer: L, L', L'' on
// the open domain (lower_bound, inf).
struct ScalarObjective {
  std::function<double(double)> value;
  std::function<double(double)> deriv1;
  std::function<double(double)> deriv2;
  double lower_bound = 0.0;
};

struct NewtonResult {
  double x = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Maximizes obj by repeatedly fitting the tangent lower bound
// g(x) = k + a log x + b x at the current iterate and jumping to its
// maximizer -a/b. Iterates are clamped above lower_bound; when the bound
// coefficients come out with the wrong signs (a <= 0 or b >= 0) a bisection
// step on L' is taken instead. Stops when |L'| <= tol or max_iters is hit;
// non-convergence is reported through the flag, not an error.
NewtonResult generalized_newton_maximize(const ScalarObjective& obj, double x0,
                                         int max_iters = 100,
                                         double tol = 1e-8);

}  // namespace bnpood::numerics

#endif
