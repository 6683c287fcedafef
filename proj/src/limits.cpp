#include "rearrange/limits.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <numbers>

#include "rearrange/errors.hpp"
#include "rearrange/numerics.hpp"
#include "rearrange/rearrange1d.hpp"

namespace rearrange {

namespace {

double tensor_mixture(const GaussianMixture& m, const Mat& hh, int nodes) {
  const int d = static_cast<int>(m.basis.rows());
  const QuadratureRule& rule = gauss_legendre_unit(nodes);
  std::vector<int> idx(d, 0);
  Vec z(d);
  CompensatedSum acc;
  while (true) {
    double w = 1.0;
    for (int i = 0; i < d; ++i) {
      z[i] = rule.nodes[idx[i]];
      w *= rule.weights[idx[i]];
    }
    const Mat lam = m.lambda(z);
    acc += w * std::exp(-0.5 * (hh.cwiseProduct(lam)).sum());
    int i = 0;
    while (i < d && ++idx[i] == nodes) {
      idx[i] = 0;
      ++i;
    }
    if (i == d) break;
  }
  return acc.value();
}

Mat correlated(int d, double off) {
  Mat m = Mat::Constant(d, d, off);
  m.diagonal().setOnes();
  return m;
}

}  // namespace

MixtureCF mixture_cf(const GaussianMixture& mixture, const Vec& h) {
  const auto d = mixture.basis.rows();
  if (h.size() != d) throw ValidationError("mixture_cf: h has the wrong dimension");
  if (h.isZero(0.0)) return {1.0, 0.0};
  // h^T U Lambda U^T h = <(U^T h)(U^T h)^T, Lambda>
  const Vec hu = mixture.basis.transpose() * h;
  const Mat hh = hu * hu.transpose();
  const int nodes = std::max(mixture.nodes, 2);
  MixtureCF out;
  out.value = tensor_mixture(mixture, hh, nodes);
  out.error = std::abs(out.value - tensor_mixture(mixture, hh, std::max(nodes / 2, 1)));
  return out;
}

double LimitMeasureSpec::cf(const Vec& h) const {
  if (h.size() != dim) throw ValidationError("cf: h has the wrong dimension");
  if (const auto* g = std::get_if<FixedGaussian>(&law)) {
    return std::exp(-0.5 * h.dot(g->canonical() * h));
  }
  return mixture_cf(std::get<GaussianMixture>(law), h).value;
}

namespace {

LimitMeasureSpec fixed_spec(std::string name, Mat lambda, Mat basis) {
  LimitMeasureSpec s;
  s.name = std::move(name);
  s.dim = static_cast<int>(lambda.rows());
  FixedGaussian g{std::move(lambda), std::move(basis)};
  const Vec var = g.canonical().diagonal();
  s.marginal_cdf = [var](int k, double t) {
    const double v = var[k];
    if (v <= 0.0) return t >= 0.0 ? 1.0 : 0.0;
    return normal_cdf(t / std::sqrt(v));
  };
  s.law = std::move(g);
  return s;
}

}  // namespace

LimitMeasureSpec limit_gl(int d) {
  if (d < 1) throw ValidationError("limit_gl: dimension must be positive");
  auto s = fixed_spec("gl" + std::to_string(d), Mat::Identity(d, d), Mat::Identity(d, d));
  s.potential = [](const Vec& z) {
    double v = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) v += lorenz_gl1(z[i]);
    return v;
  };
  return s;
}

LimitMeasureSpec limit_levy(int d) {
  if (d < 1) throw ValidationError("limit_levy: dimension must be positive");
  const double c = 1.0 - std::numbers::sqrt2 / 2.0;
  return fixed_spec("levy" + std::to_string(d), correlated(d, c), Mat::Identity(d, d));
}

LimitMeasureSpec limit_additive_rotated(bool paper_scale) {
  Mat lambda(2, 2);
  lambda << 2.0, 1.0, 1.0, 2.0;
  if (paper_scale) lambda *= 0.5;
  const double s = 1.0 / std::numbers::sqrt2;
  Mat u(2, 2);
  u << s, -s, s, s;
  return fixed_spec(paper_scale ? "additive-rotated-paper" : "additive-rotated", lambda, u);
}

LimitMeasureSpec limit_chentsov_standard() {
  LimitMeasureSpec s;
  s.name = "chentsov2-standard";
  s.dim = 2;
  const Mat e = Mat::Identity(2, 2);
  s.law = GaussianMixture{[e](const Vec& z) { return chentsov_limit_cov(e, z); }, e, 64};
  s.marginal_cdf = [](int, double t) { return chentsov2d_G(t); };
  s.potential = [](const Vec& z) { return chentsov2d_C1(z[0]) + chentsov2d_C1(z[1]); };
  return s;
}

std::vector<std::string> limit_catalog() {
  return {"gl1", "gl2", "levy2", "additive-rotated", "additive-rotated-paper",
          "chentsov2-standard"};
}

LimitMeasureSpec limit_by_name(const std::string& name) {
  if (name == "gl1") return limit_gl(1);
  if (name == "gl2") return limit_gl(2);
  if (name == "levy2") return limit_levy(2);
  if (name == "additive-rotated") return limit_additive_rotated(false);
  if (name == "additive-rotated-paper") return limit_additive_rotated(true);
  if (name == "chentsov2-standard") return limit_chentsov_standard();
  std::string msg = "unknown limit spec '" + name + "'; supported specs:";
  for (const auto& n : limit_catalog()) msg += " " + n;
  throw CatalogError(msg);
}

Mat chentsov_limit_cov(const Mat& basis, const Vec& z) {
  const auto d = basis.rows();
  if (basis.cols() != d || z.size() != d) {
    throw ValidationError("chentsov_limit_cov: shape mismatch");
  }
  if ((basis.transpose() * basis - Mat::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-12) {
    throw ValidationError("chentsov_limit_cov: basis is not orthonormal");
  }
  Vec l(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    double p = 1.0;
    for (Eigen::Index m = 0; m < d; ++m) {
      if (m != k) p *= z[m];
    }
    l[k] = p;
  }
  const Vec zero = Vec::Zero(d);
  Mat lam(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const Vec ui = basis.col(i);
      const Vec uj = basis.col(j);
      const Vec uij = ui.cwiseMin(uj) - ui.cwiseMin(zero) - uj.cwiseMin(zero);
      lam(i, j) = lam(j, i) = l.dot(uij);
    }
  }
  if (d > 1 || lam(0, 0) < 0.0) {
    const double tol = 1e-12 * std::max(1.0, lam.cwiseAbs().maxCoeff());
    if (d == 2 && lam(0, 1) == 0.0) {
      if (lam(0, 0) < -tol || lam(1, 1) < -tol) throw ModelError("chentsov_limit_cov: not PSD");
    } else {
      Eigen::SelfAdjointEigenSolver<Mat> es(lam, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -tol) {
        throw ModelError("chentsov_limit_cov: matrix is not PSD for this basis");
      }
    }
  }
  return lam;
}

double chentsov_cf_factor(double t) {
  const double t2 = t * t;
  if (t2 < 1e-6) return 1.0 - t2 / 4.0 + t2 * t2 / 24.0;
  return -2.0 * std::expm1(-0.5 * t2) / t2;
}

namespace {

// Upper tail 1 - G(a) for a >= 0: (1 + a^2) Phibar(a) - a phi(a).
double g_upper_tail(double a) {
  if (a > 20.0) {
    const double r = 1.0 / (a * a);
    const double series = 2.0 - r * (12.0 - r * (90.0 - r * (840.0 - r * 9450.0)));
    return normal_pdf(a) * series * r / a;
  }
  return (1.0 + a * a) * normal_sf(a) - a * normal_pdf(a);
}

}  // namespace

double chentsov2d_G(double a) {
  if (std::isnan(a)) throw ValidationError("chentsov2d_G: NaN argument");
  if (a >= 0.0) return 1.0 - g_upper_tail(a);
  return g_upper_tail(-a);
}

double chentsov2d_G_density(double a) {
  const double b = std::abs(a);
  return 2.0 * (normal_pdf(b) - b * normal_sf(b));
}

double chentsov2d_G_inverse(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("chentsov2d_G_inverse: p outside [0,1]");
  if (p == 0.0) return -std::numeric_limits<double>::infinity();
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  if (p == 0.5) return 0.0;
  if (p > 0.5) return -chentsov2d_G_inverse(1.0 - p);
  // p < 1/2: root is negative
  double lo = -1.0;
  while (chentsov2d_G(lo) > p && lo > -38.0) lo *= 2.0;
  lo = std::max(lo, -38.0);
  if (chentsov2d_G(lo) > p) return lo;
  return invert_monotone(chentsov2d_G, p, lo, 0.0, chentsov2d_G_density);
}

double chentsov2d_C1(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw ValidationError("chentsov2d_C1: x outside [0,1]");
  if (x == 0.0 || x == 1.0) return 0.0;
  // C_1(x) = int_{-inf}^q a G'(a) da with q = G^{-1}(x), q <= 0; symmetric about 1/2.
  const double q = chentsov2d_G_inverse(std::min(x, 1.0 - x));
  if (!std::isfinite(q)) return 0.0;
  return (2.0 / 3.0) * (q * q * q * normal_cdf(q) + (q * q - 1.0) * normal_pdf(q));
}

RenormalizationSchedule bn_schedule(const std::string& model, double alpha, bool paper_scale) {
  if (model == "brownian" || model == "levy" || model == "chentsov") {
    return RenormalizationSchedule::power(1.0, 0.5);
  }
  if (model == "fbm") {
    if (!(alpha > 0.0 && alpha < 2.0)) throw ValidationError("bn_schedule: alpha must lie in (0,2)");
    return RenormalizationSchedule::power(1.0, 1.0 - alpha / 2.0);
  }
  if (model == "additive") {
    return RenormalizationSchedule::power(std::pow(2.0, paper_scale ? 0.25 : -0.25), 0.5);
  }
  if (model == "sawtooth") return RenormalizationSchedule::identity();
  throw CatalogError("bn_schedule: no catalog schedule for model '" + model + "'");
}

}  // namespace rearrange
