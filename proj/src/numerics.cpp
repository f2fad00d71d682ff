#include "bnpood/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bnpood/errors.hpp"

namespace bnpood::numerics {

namespace {

constexpr double kLogPi = 1.1447298858494001741;

// Bernoulli-number coefficients B_{2n}/(2n) for the digamma asymptotic tail.
constexpr double kDigammaTail[] = {
    1.0 / 12.0,   -1.0 / 120.0,    1.0 / 252.0,     -1.0 / 240.0,
    1.0 / 132.0,  -691.0 / 32760.0, 1.0 / 12.0,
};

}  // namespace

double digamma(double x) {
  if (!(x > 0.0)) throw DomainError("digamma: x must be positive");
  double result = 0.0;
  // Shift to x >= 10 where the asymptotic series converges fast.
  while (x < 10.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double tail = 0.0;
  double p = inv2;
  for (double c : kDigammaTail) {
    tail += c * p;
    p *= inv2;
  }
  return result + std::log(x) - 0.5 * inv - tail;
}

double trigamma(double x) {
  if (!(x > 0.0)) throw DomainError("trigamma: x must be positive");
  double result = 0.0;
  while (x < 10.0) {
    result += 1.0 / (x * x);
    x += 1.0;
  }
  // psi'(x) ~ 1/x + 1/(2x^2) + sum B_{2n} / x^{2n+1}
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = 1.0 + 0.5 * inv;
  double p = inv2;
  static const double bern[] = {1.0 / 6.0,  -1.0 / 30.0, 1.0 / 42.0,
                                -1.0 / 30.0, 5.0 / 66.0,  -691.0 / 2730.0,
                                7.0 / 6.0};
  for (double c : bern) {
    series += c * p;
    p *= inv2;
  }
  return result + series * inv;
}

double log_multivariate_gamma(double a, int dim) {
  if (dim < 1) throw DomainError("log_multivariate_gamma: dim must be >= 1");
  if (!(a > 0.5 * (dim - 1)))
    throw DomainError("log_multivariate_gamma: need a > (D-1)/2, got a=" +
                      std::to_string(a) + ", D=" + std::to_string(dim));
  double s = 0.25 * dim * (dim - 1) * kLogPi;
  for (int j = 1; j <= dim; ++j) s += std::lgamma(a + 0.5 * (1 - j));
  return s;
}

double multivariate_digamma(double a, int dim, int order) {
  if (dim < 1) throw DomainError("multivariate_digamma: dim must be >= 1");
  if (order != 1 && order != 2)
    throw DomainError("multivariate_digamma: order must be 1 or 2");
  if (!(a > 0.5 * (dim - 1)))
    throw DomainError("multivariate_digamma: need a > (D-1)/2, got a=" +
                      std::to_string(a) + ", D=" + std::to_string(dim));
  double s = 0.0;
  for (int j = 1; j <= dim; ++j) {
    const double arg = a + 0.5 * (1 - j);
    s += (order == 1) ? digamma(arg) : trigamma(arg);
  }
  return s;
}

double logsumexp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values) m = std::max(m, v);
  if (!std::isfinite(m)) return m;  // all -inf (or a stray +inf/nan dominates)
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

// ---------------------------------------------------------------------------
// Regularized incomplete gamma, series and continued-fraction forms.

namespace {

double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_contfrac(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_p(double a, double x) {
  if (x <= 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_contfrac(a, x);
}

}  // namespace

double gamma_cdf(double x, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw DomainError("gamma_cdf: shape and rate must be positive");
  return gamma_p(shape, rate * x);
}

double gamma_quantile(double p, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw DomainError("gamma_quantile: shape and rate must be positive");
  if (!(p > 0.0) || !(p < 1.0))
    throw DomainError("gamma_quantile: p must lie in (0,1)");
  // Bracket the root of CDF(x) - p, then bisect. The mean is shape/rate.
  double lo = 0.0;
  double hi = shape / rate;
  while (gamma_cdf(hi, shape, rate) < p) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) break;
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (gamma_cdf(mid, shape, rate) < p)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-15 * std::max(1.0, hi)) break;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Generalized Newton maximizer.

namespace {

double clamp_above(double x, double lower_bound) {
  const double floor = lower_bound * (1.0 + 1e-6) + 1e-8;
  return std::max(x, floor);
}

// One bisection pass on L' over [lb+eps, 10 x], expanding the right edge if
// L' has not changed sign yet. Falls back to the better endpoint when no
// bracket exists.
double bisect_on_gradient(const ScalarObjective& obj, double x) {
  double lo = clamp_above(obj.lower_bound, obj.lower_bound);
  double hi = std::max(10.0 * x, lo * 2.0 + 1.0);
  double glo = obj.deriv1(lo);
  double ghi = obj.deriv1(hi);
  int expand = 0;
  while (glo * ghi > 0.0 && expand++ < 60) {
    hi *= 4.0;
    ghi = obj.deriv1(hi);
  }
  if (glo * ghi > 0.0)
    return obj.value(lo) > obj.value(hi) ? lo : hi;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double gm = obj.deriv1(mid);
    if (gm == 0.0) return mid;
    if (glo * gm < 0.0) {
      hi = mid;
    } else {
      lo = mid;
      glo = gm;
    }
    if (hi - lo <= 1e-14 * std::max(1.0, std::abs(hi))) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

NewtonResult generalized_newton_maximize(const ScalarObjective& obj, double x0,
                                         int max_iters, double tol) {
  double x = clamp_above(x0, obj.lower_bound);
  NewtonResult res;
  for (int it = 0; it < max_iters; ++it) {
    const double g = obj.deriv1(x);
    if (std::abs(g) <= tol) {
      res.x = x;
      res.converged = true;
      res.iterations = it;
      return res;
    }
    const double h = obj.deriv2(x);
    const double a = -x * x * h;
    const double b = g - a / x;
    double cand;
    if (a > 0.0 && b < 0.0) {
      cand = -a / b;
    } else {
      cand = bisect_on_gradient(obj, x);
    }
    cand = clamp_above(cand, obj.lower_bound);
    // The tangent bound touches L at x, so the jump cannot decrease L when
    // the bound is valid; halve back toward x if numerics say otherwise.
    const double fx = obj.value(x);
    int back = 0;
    while (obj.value(cand) < fx - 1e-12 * std::max(1.0, std::abs(fx)) &&
           back++ < 60) {
      cand = 0.5 * (cand + x);
    }
    if (cand == x) {
      res.x = x;
      res.converged = std::abs(obj.deriv1(x)) <= tol;
      res.iterations = it + 1;
      return res;
    }
    x = cand;
    res.iterations = it + 1;
  }
  res.x = x;
  res.converged = std::abs(obj.deriv1(x)) <= tol;
  return res;
}

}  // namespace bnpood::numerics
