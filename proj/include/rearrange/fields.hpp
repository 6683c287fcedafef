#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rearrange/geometry.hpp"
#include "rearrange/rng.hpp"

namespace rearrange {

enum class ModelKind { Brownian, FractionalBrownian, Levy, Chentsov, Additive };

/// A centred Gaussian field on [0,1]^d described by its covariance.
struct FieldModel {
  std::string name;
  ModelKind kind = ModelKind::Brownian;
  int dim = 1;
  double alpha = 1.0;  // fBm exponent; 1 for Brownian motion
  std::function<double(const Vec&, const Vec&)> covariance;
  /// sigma^2(t) = E X(t)^2 for 1-D fields with stationary increments; empty otherwise.
  std::function<double(double)> sigma2;
  /// Where the covariance fails to be C^1, e.g. "diagonal".
  std::string theta_descriptor;

  double cov(const Vec& z, const Vec& zeta) const { return covariance(z, zeta); }
};

FieldModel model_brownian();
FieldModel model_fbm(double alpha);
FieldModel model_levy(int d);
FieldModel model_chentsov(int d);
FieldModel model_additive();

/// Catalog lookup by name: brownian, fbm (uses alpha), levy (uses d),
/// chentsov (uses d), additive.
FieldModel model_by_name(const std::string& name, double alpha = 1.0, int d = 2);
std::vector<std::string> model_catalog();

/// One realization of a field on a finite vertex set.
struct FieldSample {
  std::vector<Vec> vertices;
  std::vector<double> values;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
  std::string model;
};

/// A sampler with its factorization done up front; draw as many replicates
/// as needed. Draws are pure functions of (model name, seed, replicate).
class FieldSampler {
 public:
  FieldSample sample(std::uint64_t seed, std::uint64_t replicate = 0) const;

  const std::vector<Vec>& points() const { return points_; }
  const std::string& method() const { return method_; }

  /// Brownian motion or fBm on a sorted 1-D grid in [0,1].
  static FieldSampler path_1d(const FieldModel& model, std::vector<double> grid);
  /// Chentsov field on the (m+1)x(m+1) grid {i/m} x {j/m}, i-major order.
  static FieldSampler chentsov_grid(int m);
  /// W(x) + W(y) with one Brownian path W sampled at all coordinates used.
  static FieldSampler additive(std::vector<Vec> points);
  /// Dense factorization of the Gram matrix (any model, <= 5000 points).
  static FieldSampler generic(const FieldModel& model, std::vector<Vec> points);
  /// Picks the exact fast sampler for the model when one applies.
  static FieldSampler for_model(const FieldModel& model, std::vector<Vec> points);

 private:
  FieldSampler() = default;

  std::string model_name_;
  std::string method_;
  std::vector<Vec> points_;
  // values from a stream of standard normals
  std::function<std::vector<double>(Engine&)> draw_;
};

FieldSample sample_path_1d(const FieldModel& model, const std::vector<double>& grid,
                           std::uint64_t seed);
FieldSample sample_chentsov_2d(int m, std::uint64_t seed);
FieldSample sample_generic(const FieldModel& model, const std::vector<Vec>& points,
                           std::uint64_t seed);

/// Deterministic sawtooth f_n on {k/n}: 0 at even k, 1/n at odd k, so every
/// piece has slope +-1.
FieldSample sawtooth_sample(int n);

/// F with F F^T = A for a symmetric PSD matrix: Cholesky, or Cholesky with
/// diagonal pivoting when A is singular. Throws ModelError when the Schur
/// complement left at the numerical rank exceeds 1e-8 trace(A).
Mat psd_factor(const Mat& a);

/// Largest point set accepted by the dense sampler.
inline constexpr std::size_t kMaxDensePoints = 5000;
/// Largest number of grid increments accepted by the dense fBm sampler.
inline constexpr std::size_t kMaxPathIncrements = 4096;

}  // namespace rearrange
