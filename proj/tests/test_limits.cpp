#include <cmath>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "doctest.h"
#include "rearrange/errors.hpp"
#include "rearrange/limits.hpp"
#include "rearrange/rearrange1d.hpp"

using namespace rearrange;

namespace {

const boost::math::normal_distribution<double> kNormal;

double quad(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, 1e-13);
}

// G(a) = int_0^1 Phi(a / sqrt s) ds
double oracle_G(double a) {
  return quad([a](double s) { return s <= 0.0 ? (a > 0 ? 1.0 : a < 0 ? 0.0 : 0.5)
                                               : boost::math::cdf(kNormal, a / std::sqrt(s)); },
              0.0, 1.0);
}

double oracle_G_inverse(double p) {
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve([p](double a) { return oracle_G(a) - p; },
                                                   -12.0, 12.0,
                                                   boost::math::tools::eps_tolerance<double>(50),
                                                   iters);
  return 0.5 * (r.first + r.second);
}

// C_1(x) = int_{-inf}^{q} a dG(a) = -int_0^1 sqrt(s) phi(q / sqrt s) ds, q = G^{-1}(x)
double oracle_C1(double x) {
  const double q = oracle_G_inverse(x);
  return -quad([q](double s) {
    return s <= 0.0 ? 0.0 : std::sqrt(s) * boost::math::pdf(kNormal, q / std::sqrt(s));
  }, 0.0, 1.0);
}

Vec v2(double a, double b) {
  Vec h(2);
  h << a, b;
  return h;
}

}  // namespace

TEST_SUITE("limits") {
  TEST_CASE("levy limit") {
    const auto spec = limit_levy(2);
    const Mat lam = std::get<FixedGaussian>(spec.law).canonical();
    const double c = 1.0 - std::sqrt(2.0) / 2.0;
    CHECK(lam(0, 1) == doctest::Approx(0.2928932188134524));
    CHECK(lam(0, 0) == doctest::Approx(1.0));
    Eigen::SelfAdjointEigenSolver<Mat> es(lam);
    CHECK(es.eigenvalues()[0] == doctest::Approx(1.0 - c));
    CHECK(es.eigenvalues()[1] == doctest::Approx(1.0 + c));
    CHECK(spec.cf(Vec::Zero(2)) == 1.0);

    const Mat l3 = std::get<FixedGaussian>(limit_levy(3).law).canonical();
    Eigen::SelfAdjointEigenSolver<Mat> e3(l3);
    CHECK(e3.eigenvalues()[0] == doctest::Approx(1.0 - c));
    CHECK(e3.eigenvalues()[1] == doctest::Approx(1.0 - c));
    CHECK(e3.eigenvalues()[2] == doctest::Approx(2.0 * c + 1.0));
  }

  TEST_CASE("fixed gaussian specs have quadratic log-cf") {
    for (const auto& name : {"gl1", "gl2", "levy2", "additive-rotated", "additive-rotated-paper"}) {
      const auto spec = limit_by_name(name);
      REQUIRE_FALSE(spec.is_mixture());
      const Mat lam = std::get<FixedGaussian>(spec.law).canonical();
      for (double s : {0.3, 1.0, 1.7}) {
        Vec h = Vec::LinSpaced(spec.dim, s, -0.5 * s);
        const double lc = std::log(spec.cf(h));
        CHECK(std::abs(lc + 0.5 * h.dot(lam * h)) < 1e-12);
        CHECK(spec.cf(h) * spec.cf(-h) == doctest::Approx(spec.cf(h) * spec.cf(h)));
      }
    }
    CHECK(limit_gl(1).cf(Vec::Constant(1, 2.0)) == doctest::Approx(std::exp(-2.0)));
    CHECK(limit_gl(2).potential(v2(0.5, 0.5)) == doctest::Approx(2 * lorenz_gl1(0.5)));
    CHECK_THROWS_AS(limit_by_name("gl7"), CatalogError);
  }

  TEST_CASE("additive rotated limit") {
    const auto spec = limit_additive_rotated();
    const auto& fg = std::get<FixedGaussian>(spec.law);
    CHECK(fg.lambda(0, 1) / std::sqrt(fg.lambda(0, 0) * fg.lambda(1, 1)) == doctest::Approx(0.5));
    CHECK(fg.lambda(0, 0) == doctest::Approx(2.0));
    // h = (1,0) in basis u
    const Vec h = fg.basis * v2(1.0, 0.0);
    CHECK(spec.cf(h) == doctest::Approx(std::exp(-1.0)));
    const auto paper = limit_additive_rotated(true);
    CHECK(std::get<FixedGaussian>(paper.law).lambda(0, 0) == doctest::Approx(1.0));
    CHECK(std::get<FixedGaussian>(paper.law).lambda(0, 1) == doctest::Approx(0.5));
  }

  TEST_CASE("chentsov limit covariance") {
    const Mat e = Mat::Identity(2, 2);
    const Mat lam = chentsov_limit_cov(e, v2(0.3, 0.8));
    CHECK(lam(0, 0) == doctest::Approx(0.8));
    CHECK(lam(1, 1) == doctest::Approx(0.3));
    CHECK(lam(0, 1) == 0.0);
    CHECK((chentsov_limit_cov(-e, v2(0.3, 0.8)) - lam).norm() < 1e-15);
    Mat bad(2, 2);
    bad << 1, 1, 0, 1;
    CHECK_THROWS_AS(chentsov_limit_cov(bad, v2(0.3, 0.8)), ValidationError);
  }

  TEST_CASE("chentsov mixture cf matches the product formula") {
    const auto spec = limit_chentsov_standard();
    REQUIRE(spec.is_mixture());
    const auto& mix = std::get<GaussianMixture>(spec.law);
    CHECK(chentsov_cf_factor(0.0) == 1.0);
    CHECK(chentsov_cf_factor(1.0) * chentsov_cf_factor(1.0) == doctest::Approx(0.6192728).epsilon(1e-6));
    for (const auto& h : {v2(0, 0), v2(1, 1), v2(-2, 0.5), v2(3, -3), v2(0.01, 2)}) {
      const double expect = chentsov_cf_factor(h[0]) * chentsov_cf_factor(h[1]);
      const auto got = mixture_cf(mix, h);
      CHECK(std::abs(got.value - expect) < 1e-8);
      CHECK(got.error < 1e-8);
      CHECK(std::abs(spec.cf(h) - expect) < 1e-8);
    }
    double prev = 1.0;
    for (double t = 0.25; t <= 4.0; t += 0.25) {
      const double v = spec.cf(v2(t, 0.0));
      CHECK(v < prev);
      prev = v;
    }
  }

  TEST_CASE("G against quadrature") {
    for (double a : {-3.0, -1.0, -0.2, 0.0, 0.1, 0.7, 2.0, 5.0}) {
      CHECK(std::abs(chentsov2d_G(a) - oracle_G(a)) < 1e-12);
    }
    CHECK(chentsov2d_G(0.0) == doctest::Approx(0.5));
    CHECK(chentsov2d_G(40.0) == doctest::Approx(1.0));
    CHECK(chentsov2d_G(-40.0) >= 0.0);
    CHECK(chentsov2d_G(-40.0) < 1e-300);
    for (double a : {0.3, 1.5, 25.0}) {
      CHECK(chentsov2d_G(-a) == doctest::Approx(1.0 - chentsov2d_G(a)).epsilon(1e-14));
    }
    // the asymptotic branch joins the direct one
    CHECK(chentsov2d_G(-20.0 + 1e-9) / chentsov2d_G(-20.0 - 1e-9) == doctest::Approx(1.0).epsilon(1e-6));
    for (double a : {-1.0, 0.0, 0.4}) {
      const double eps = 1e-6;
      const double fd = (chentsov2d_G(a + eps) - chentsov2d_G(a - eps)) / (2 * eps);
      CHECK(chentsov2d_G_density(a) == doctest::Approx(fd).epsilon(1e-5));
    }
    for (double p : {1e-9, 0.01, 0.3, 0.5, 0.9}) {
      CHECK(chentsov2d_G(chentsov2d_G_inverse(p)) == doctest::Approx(p).epsilon(1e-10));
    }
  }

  TEST_CASE("C1 against quadrature") {
    for (double x : {0.05, 0.25, 0.5, 0.8, 0.97}) {
      CHECK(std::abs(chentsov2d_C1(x) - oracle_C1(x)) < 1e-8);
    }
    CHECK(chentsov2d_C1(0.0) == 0.0);
    CHECK(std::abs(chentsov2d_C1(1.0)) < 1e-12);
    CHECK(chentsov2d_C1(0.5) == doctest::Approx(-2.0 / 3.0 / std::sqrt(2 * M_PI)));
    const auto spec = limit_chentsov_standard();
    CHECK(spec.potential(v2(0.5, 0.25)) ==
          doctest::Approx(chentsov2d_C1(0.5) + chentsov2d_C1(0.25)));
    CHECK(spec.marginal_cdf(1, 0.3) == doctest::Approx(chentsov2d_G(0.3)));
  }

  TEST_CASE("b_n schedules") {
    CHECK(bn_schedule("fbm", 1.2)(100) == doctest::Approx(6.309573444801933));
    CHECK(bn_schedule("fbm", 1.0)(64) == doctest::Approx(8.0));
    CHECK(bn_schedule("brownian")(64) == doctest::Approx(8.0));
    CHECK(bn_schedule("levy")(48) == doctest::Approx(std::sqrt(48.0)));
    CHECK(bn_schedule("chentsov")(64) == doctest::Approx(8.0));
    CHECK(bn_schedule("additive")(64) == doctest::Approx(std::sqrt(64 / std::sqrt(2.0))));
    CHECK(bn_schedule("additive", 1.0, true)(64) == doctest::Approx(std::sqrt(64 * std::sqrt(2.0))));
    CHECK_THROWS_AS(bn_schedule("nope"), CatalogError);
  }

  TEST_CASE("cellwise chentsov covariance approaches the limit") {
    // Cov of Y_n on a cell, from the covariance function, vs Lambda at the cell centroid.
    const auto model = model_chentsov(2);
    double prev = 1e9;
    for (int n : {16, 32, 64}) {
      const auto cells = enumerate_interior_cells(standard_germ(2), n, Domain(2));
      const double b = bn_schedule("chentsov")(n);
      double worst = 0.0;
      for (const auto& cell : cells.cells) {
        const Mat& v = cell.scaled.vertices();
        Mat cinc(2, 2);
        for (int i = 0; i < 2; ++i) {
          for (int j = 0; j < 2; ++j) {
            const Vec a = v.col(i + 1);
            const Vec c = v.col(j + 1);
            const Vec o = v.col(0);
            cinc(i, j) = model.cov(a, c) - model.cov(a, o) - model.cov(o, c) + model.cov(o, o);
          }
        }
        const Mat& op = cells.gradient_operators[cell.simplex_index];
        const Mat& u = cells.simplex_bases[cell.simplex_index];
        const Mat cov = (n / b) * (n / b) * (u.transpose() * op * cinc * op.transpose() * u);
        const Vec centroid = v.rowwise().mean();
        worst = std::max(worst, (cov - chentsov_limit_cov(u, centroid)).cwiseAbs().maxCoeff());
      }
      CHECK(worst < prev);
      CHECK(worst <= 2.0 / n);
      prev = worst;
    }
  }
}
