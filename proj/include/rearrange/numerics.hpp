#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

namespace rearrange {

inline constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343818684759;

/// Standard normal density.
inline double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

/// Standard normal CDF, accurate in both tails.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Upper tail 1 - Phi(x), without cancellation for large x.
inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

/// Inverse of the standard normal CDF on (0,1). Rational approximation
/// (Acklam) polished by one Halley step on erfc; returns +-inf at 0 and 1.
double normal_quantile(double p);

/// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double compensated_sum(std::span<const double> values);

/// Gauss-Legendre rule on [0,1].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule mapped to [0,1]. Rules are cached per n.
const QuadratureRule& gauss_legendre_unit(int n);

/// Tensorized Gauss-Legendre integral of f over [0,1]^dim.
double integrate_unit_cube(const std::function<double(std::span<const double>)>& f, int dim,
                           int nodes_per_axis);

/// Find x in [lo, hi] with f(x) = target for nondecreasing f (bisection
/// safeguarded Newton when a derivative is supplied).
double invert_monotone(const std::function<double(double)>& f, double target, double lo, double hi,
                       const std::function<double(double)>& derivative = {},
                       double xtol = 1e-14);

}  // namespace rearrange
