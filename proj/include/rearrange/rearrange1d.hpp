#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "rearrange/gradients.hpp"

namespace rearrange {

/// Right-continuous nondecreasing step function on (0,1): value atoms[k] on
/// [cum[k-1], cum[k]), with cum[-1] = 0 and cum.back() = 1.
class QuantileFunction {
 public:
  QuantileFunction(std::vector<double> atoms, std::vector<double> cumulative);

  double operator()(double t) const;
  const std::vector<double>& atoms() const { return atoms_; }
  const std::vector<double>& cumulative() const { return cum_; }
  /// Mass of atom k.
  double weight(std::size_t k) const { return k == 0 ? cum_[0] : cum_[k] - cum_[k - 1]; }

 private:
  std::vector<double> atoms_;
  std::vector<double> cum_;
};

/// Piecewise-linear convex function on [0,1] with C(z0) = offset.
class ConvexCurve1D {
 public:
  ConvexCurve1D(std::vector<double> breakpoints, std::vector<double> values,
                std::vector<double> slopes, double z0, double offset);

  double operator()(double x) const;
  /// Right derivative.
  double slope(double x) const;

  const std::vector<double>& breakpoints() const { return x_; }
  const std::vector<double>& values() const { return v_; }
  const std::vector<double>& slopes() const { return s_; }
  double z0() const { return z0_; }
  double offset() const { return offset_; }

 private:
  std::vector<double> x_;
  std::vector<double> v_;
  std::vector<double> s_;
  double z0_;
  double offset_;
};

/// Stable weighted sort; equal atoms merged.
QuantileFunction monotone_rearrange_1d(const GradientAtomCloud& cloud);
QuantileFunction monotone_rearrange_1d(std::span<const double> atoms,
                                       std::span<const double> weights);

/// C with C' = q a.e. and C(z0) = offset.
ConvexCurve1D convex_rearrange_1d(const QuantileFunction& q, double offset, double z0 = 0.0);

/// GL_1(x) = int_0^x Phi^{-1}(t) dt = -phi(Phi^{-1}(x)).
double lorenz_gl1(double x);

struct GiniResult {
  double raw = 0.0;         // sum_k (Cbar(k) - C(k)) >= 0
  double normalized = 0.0;  // 2 raw / (n total), the classical Gini index
  std::vector<double> lorenz;    // C(k), partial sums of sorted incomes
  std::vector<double> equality;  // Cbar(k) = (k/n) total
};

GiniResult gini(std::span<const double> incomes);

/// Rows (x, C(x)) on `points` equally spaced x in [0,1].
void write_curve_csv(std::ostream& os, const ConvexCurve1D& curve, int points);

}  // namespace rearrange
