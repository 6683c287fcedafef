#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "rearrange/errors.hpp"
#include "rearrange/numerics.hpp"

using namespace rearrange;

TEST_SUITE("numerics") {
  TEST_CASE("normal quantile matches an independent implementation") {
    const boost::math::normal_distribution<double> nd;
    for (double p : {1e-300, 1e-20, 1e-8, 0.001, 0.02425, 0.1, 0.3, 0.5, 0.7, 0.97575, 0.999999}) {
      const double ref = boost::math::quantile(nd, p);
      CHECK(normal_quantile(p) == doctest::Approx(ref).epsilon(1e-13));
    }
    CHECK(normal_quantile(0.5) == 0.0);
    CHECK(std::isinf(normal_quantile(0.0)));
    CHECK(std::isinf(normal_quantile(1.0)));
    CHECK_THROWS_AS(normal_quantile(1.5), ValidationError);
  }

  TEST_CASE("normal cdf and tail") {
    const boost::math::normal_distribution<double> nd;
    for (double x : {-30.0, -5.0, -1.0, 0.0, 0.3, 2.0, 8.0}) {
      CHECK(normal_cdf(x) == doctest::Approx(boost::math::cdf(nd, x)).epsilon(1e-14));
      CHECK(normal_sf(x) == doctest::Approx(boost::math::cdf(complement(nd, x))).epsilon(1e-14));
    }
  }

  TEST_CASE("Gauss-Legendre integrates polynomials of degree 2n-1 exactly") {
    for (int n : {1, 2, 5, 16, 64}) {
      const auto& rule = gauss_legendre_unit(n);
      REQUIRE(rule.nodes.size() == static_cast<std::size_t>(n));
      for (int k = 0; k <= 2 * n - 1; ++k) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += rule.weights[i] * std::pow(rule.nodes[i], k);
        CHECK(s == doctest::Approx(1.0 / (k + 1)).epsilon(1e-13));
      }
    }
  }

  TEST_CASE("tensor quadrature on the unit square") {
    const double v = integrate_unit_cube(
        [](std::span<const double> z) { return std::exp(-z[0] * z[1]); }, 2, 32);
    // series: sum_k (-1)^k / (k! (k+1)^2)
    double ref = 0.0;
    double fact = 1.0;
    for (int k = 0; k < 30; ++k) {
      if (k > 0) fact *= k;
      ref += (k % 2 ? -1.0 : 1.0) / (fact * (k + 1) * (k + 1));
    }
    CHECK(v == doctest::Approx(ref).epsilon(1e-14));
  }

  TEST_CASE("compensated summation recovers lost digits") {
    std::vector<double> v{1.0};
    for (int i = 0; i < 1000; ++i) v.push_back(1e-16);
    v.push_back(-1.0);
    CHECK(compensated_sum(v) == doctest::Approx(1e-13).epsilon(1e-10));
  }

  TEST_CASE("monotone inversion") {
    const double x = invert_monotone([](double t) { return t * t * t; }, 8.0, 0.0, 5.0,
                                     [](double t) { return 3 * t * t; });
    CHECK(x == doctest::Approx(2.0).epsilon(1e-14));
    const double y = invert_monotone([](double t) { return std::tanh(t); }, 0.5, -3.0, 3.0);
    CHECK(y == doctest::Approx(std::atanh(0.5)).epsilon(1e-12));
    CHECK_THROWS(invert_monotone([](double t) { return t; }, 10.0, 0.0, 1.0));
  }
}
