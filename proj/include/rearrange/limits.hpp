#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "rearrange/geometry.hpp"
#include "rearrange/gradients.hpp"

namespace rearrange {

/// Centred Gaussian with covariance `lambda` expressed in basis `basis`.
struct FixedGaussian {
  Mat lambda;
  Mat basis;

  Mat canonical() const { return basis * lambda * basis.transpose(); }
};

/// mu = int_K N(0, Lambda(z)) dz with Lambda(z) expressed in basis `basis`.
struct GaussianMixture {
  std::function<Mat(const Vec&)> lambda;
  Mat basis;
  int nodes = 64;  // Gauss-Legendre nodes per axis
};

struct MixtureCF {
  double value = 1.0;
  double error = 0.0;  // |value - value at half the nodes|
};

MixtureCF mixture_cf(const GaussianMixture& mixture, const Vec& h);

struct LimitMeasureSpec {
  std::string name;
  int dim = 1;
  std::variant<FixedGaussian, GaussianMixture> law;
  /// CDF of canonical coordinate k.
  std::function<double(int, double)> marginal_cdf;
  /// Closed-form convex rearrangement C_mu with C_mu(0) = 0; empty if none is known.
  std::function<double(const Vec&)> potential;

  bool is_mixture() const { return std::holds_alternative<GaussianMixture>(law); }
  /// Characteristic function at h in canonical coordinates (real: the laws are symmetric).
  double cf(const Vec& h) const;
};

LimitMeasureSpec limit_gl(int d);
LimitMeasureSpec limit_levy(int d);
/// Correlation 1/2 in basis u. Default scale gives [[2,1],[1,2]]; with
/// `paper_scale` the matrix is [[1,1/2],[1/2,1]].
LimitMeasureSpec limit_additive_rotated(bool paper_scale = false);
LimitMeasureSpec limit_chentsov_standard();

/// Catalog: gl1, gl2, levy2, additive-rotated, additive-rotated-paper, chentsov2-standard.
LimitMeasureSpec limit_by_name(const std::string& name);
std::vector<std::string> limit_catalog();

/// Lambda^(u)(z)_{ij} = <l(z), u_{i,j}>. Throws ModelError if the result is
/// not PSD within 1e-12.
Mat chentsov_limit_cov(const Mat& basis, const Vec& z);

/// Closed-form Chentsov CF factor g(t) = 2 (1 - e^{-t^2/2}) / t^2.
double chentsov_cf_factor(double t);

/// G(a) = int_0^1 Phi(a / sqrt(x)) dx, the CDF of N(0, X) with X ~ U(0,1).
double chentsov2d_G(double a);
double chentsov2d_G_density(double a);
double chentsov2d_G_inverse(double p);
/// C_1(x) = int_0^x G^{-1}(t) dt.
double chentsov2d_C1(double x);

/// Catalog b_n for a field model. For "additive" the scale b_n^2 = n / sqrt 2
/// is used unless `paper_scale`, which gives b_n^2 = sqrt 2 n.
RenormalizationSchedule bn_schedule(const std::string& model, double alpha = 1.0,
                                    bool paper_scale = false);

}  // namespace rearrange
