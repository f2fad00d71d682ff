#include <cmath>
#include <doctest.h>
#include <vector>

#include "bnpood/errors.hpp"
#include "bnpood/numerics.hpp"
#include "bnpood/rng.hpp"

using namespace bnpood;
using namespace bnpood::numerics;

namespace {
constexpr double kEulerGamma = 0.57721566490153286061;
constexpr double kPiSq6 = 1.6449340668482264365;

// Bracketing root-finder, the independent oracle for Newton targets.
double bisect_root(const std::function<double(double)>& f, double lo,
                   double hi) {
  double flo = f(lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (flo * fm <= 0.0)
      hi = mid;
    else {
      lo = mid;
      flo = fm;
    }
  }
  return 0.5 * (lo + hi);
}
}  // namespace

TEST_CASE("digamma and trigamma match closed forms") {
  CHECK(digamma(1.0) == doctest::Approx(-kEulerGamma).epsilon(1e-12));
  CHECK(digamma(2.0) == doctest::Approx(1.0 - kEulerGamma).epsilon(1e-12));
  CHECK(digamma(0.5) ==
        doctest::Approx(-kEulerGamma - 2.0 * std::log(2.0)).epsilon(1e-12));
  CHECK(digamma(5.0) ==
        doctest::Approx(25.0 / 12.0 - kEulerGamma).epsilon(1e-12));
  CHECK(trigamma(1.0) == doctest::Approx(kPiSq6).epsilon(1e-12));
  CHECK(trigamma(0.5) == doctest::Approx(3.0 * kPiSq6).epsilon(1e-12));
  CHECK(trigamma(2.0) == doctest::Approx(kPiSq6 - 1.0).epsilon(1e-12));
  CHECK_THROWS_AS(digamma(0.0), DomainError);
  CHECK_THROWS_AS(trigamma(-1.0), DomainError);

  // Recurrence psi(x+1) = psi(x) + 1/x over a range of arguments.
  for (double x : {0.1, 0.7, 1.3, 4.2, 11.8, 37.5}) {
    CHECK(digamma(x + 1.0) ==
          doctest::Approx(digamma(x) + 1.0 / x).epsilon(1e-12));
    CHECK(trigamma(x + 1.0) ==
          doctest::Approx(trigamma(x) - 1.0 / (x * x)).epsilon(1e-12));
  }
}

TEST_CASE("log multivariate gamma") {
  CHECK(log_multivariate_gamma(2.0, 1) == doctest::Approx(0.0).epsilon(1e-12));
  // Product formula at a=1, D=2: pi^{1/2} Gamma(1) Gamma(1/2) = pi.
  CHECK(log_multivariate_gamma(1.0, 2) ==
        doctest::Approx(std::log(M_PI)).epsilon(1e-12));
  // Independent evaluation as a sum of univariate terms.
  const double expect = 0.25 * 3.0 * 2.0 * std::log(M_PI) + std::lgamma(5.0) +
                        std::lgamma(4.5) + std::lgamma(4.0);
  CHECK(log_multivariate_gamma(5.0, 3) == doctest::Approx(expect).epsilon(1e-12));

  // D = 1 equals the scalar reference over a sweep.
  for (double a : {0.3, 1.0, 2.7, 9.9, 123.4})
    CHECK(log_multivariate_gamma(a, 1) ==
          doctest::Approx(std::lgamma(a)).epsilon(1e-12));

  CHECK_THROWS_AS(log_multivariate_gamma(0.5, 2), DomainError);
}

TEST_CASE("multivariate digamma") {
  CHECK(multivariate_digamma(3.0, 1, 1) ==
        doctest::Approx(digamma(3.0)).epsilon(1e-12));
  CHECK(multivariate_digamma(2.0, 2, 1) ==
        doctest::Approx(digamma(2.0) + digamma(1.5)).epsilon(1e-12));
  CHECK(multivariate_digamma(2.0, 2, 2) ==
        doctest::Approx(trigamma(2.0) + trigamma(1.5)).epsilon(1e-12));
  CHECK_THROWS_AS(multivariate_digamma(0.5, 2, 1), DomainError);
  CHECK_THROWS_AS(multivariate_digamma(3.0, 2, 3), DomainError);
}

TEST_CASE("logsumexp") {
  const std::vector<double> two_zeros{0.0, 0.0};
  CHECK(logsumexp(two_zeros) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  const std::vector<double> big{1000.0, 1000.0};
  CHECK(logsumexp(big) ==
        doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-12));
  CHECK(logsumexp({}) == -std::numeric_limits<double>::infinity());

  // Shift invariance: logsumexp(v + c) = logsumexp(v) + c.
  Rng rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> v(1 + rep % 9);
    for (double& x : v) x = 20.0 * (rng.uniform() - 0.5);
    const double c = 100.0 * (rng.uniform() - 0.5);
    std::vector<double> shifted = v;
    for (double& x : shifted) x += c;
    CHECK(logsumexp(shifted) == doctest::Approx(logsumexp(v) + c).epsilon(1e-12));
  }
}

TEST_CASE("gamma cdf and quantile") {
  // Shape 1 is the exponential distribution.
  for (double x : {0.1, 0.5, 1.0, 3.0})
    CHECK(gamma_cdf(x, 1.0, 1.0) ==
          doctest::Approx(1.0 - std::exp(-x)).epsilon(1e-10));
  for (double p : {0.001, 0.2, 0.5, 0.9, 0.999})
    for (double a : {0.5, 2.0, 10.0}) {
      const double q = gamma_quantile(p, a, a);
      CHECK(gamma_cdf(q, a, a) == doctest::Approx(p).epsilon(1e-8));
    }
}

TEST_CASE("generalized newton: exact one-step on a log x + b x") {
  // L(x) = 3 log x - x already has the bounding form; maximizer is 3.
  ScalarObjective obj;
  obj.lower_bound = 0.0;
  obj.value = [](double x) { return 3.0 * std::log(x) - x; };
  obj.deriv1 = [](double x) { return 3.0 / x - 1.0; };
  obj.deriv2 = [](double x) { return -3.0 / (x * x); };
  const auto res = generalized_newton_maximize(obj, 1.0);
  CHECK(res.converged);
  CHECK(res.iterations == 1);
  CHECK(res.x == doctest::Approx(3.0).epsilon(1e-10));

  ScalarObjective obj2;
  obj2.lower_bound = 0.0;
  obj2.value = [](double x) { return std::log(x) - x; };
  obj2.deriv1 = [](double x) { return 1.0 / x - 1.0; };
  obj2.deriv2 = [](double x) { return -1.0 / (x * x); };
  const auto res2 = generalized_newton_maximize(obj2, 7.0);
  CHECK(res2.converged);
  CHECK(res2.x == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("generalized newton: digamma stationarity target") {
  // Concave objective x - lgamma(x) is stationary where psi(x) = 1.
  ScalarObjective obj;
  obj.lower_bound = 0.0;
  obj.value = [](double x) { return x - std::lgamma(x); };
  obj.deriv1 = [](double x) { return 1.0 - digamma(x); };
  obj.deriv2 = [](double x) { return -trigamma(x); };
  const auto res = generalized_newton_maximize(obj, 1.0);
  CHECK(res.converged);
  const double oracle =
      bisect_root([](double x) { return digamma(x) - 1.0; }, 1.0, 10.0);
  CHECK(res.x == doctest::Approx(oracle).epsilon(1e-7));
  CHECK(digamma(res.x) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("generalized newton: monotone improvement from random starts") {
  Rng rng(13);
  for (int rep = 0; rep < 40; ++rep) {
    // Random member of the concave family a log x + b x + c x^2-free terms.
    const double a = 0.5 + 5.0 * rng.uniform();
    const double b = -(0.2 + 2.0 * rng.uniform());
    ScalarObjective obj;
    obj.lower_bound = 0.0;
    obj.value = [=](double x) { return a * std::log(x) + b * x; };
    obj.deriv1 = [=](double x) { return a / x + b; };
    obj.deriv2 = [=](double x) { return -a / (x * x); };
    const double x0 = 0.1 + 20.0 * rng.uniform();
    const auto res = generalized_newton_maximize(obj, x0);
    CHECK(res.x == doctest::Approx(-a / b).epsilon(1e-10));
    CHECK(obj.value(res.x) >= obj.value(x0) - 1e-9);
  }
}

TEST_CASE("generalized newton: clamp keeps iterates above the bound") {
  // Maximizer of the unbounded surrogate sits below the domain bound.
  ScalarObjective obj;
  obj.lower_bound = 5.0;
  obj.value = [](double x) { return 3.0 * std::log(x - 0.0) - x; };
  obj.deriv1 = [](double x) { return 3.0 / x - 1.0; };
  obj.deriv2 = [](double x) { return -3.0 / (x * x); };
  const auto res = generalized_newton_maximize(obj, 8.0);
  CHECK(res.x > 5.0);
}
