#include "rearrange/rearrange1d.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "rearrange/errors.hpp"
#include "rearrange/numerics.hpp"

namespace rearrange {

QuantileFunction::QuantileFunction(std::vector<double> atoms, std::vector<double> cumulative)
    : atoms_(std::move(atoms)), cum_(std::move(cumulative)) {
  if (atoms_.empty() || atoms_.size() != cum_.size()) {
    throw ValidationError("QuantileFunction: atoms and cumulative weights must match");
  }
  for (std::size_t k = 1; k < atoms_.size(); ++k) {
    if (!(atoms_[k] > atoms_[k - 1]) || !(cum_[k] > cum_[k - 1])) {
      throw ValidationError("QuantileFunction: atoms and cumulative weights must increase");
    }
  }
}

double QuantileFunction::operator()(double t) const {
  auto it = std::upper_bound(cum_.begin(), cum_.end(), t);
  if (it == cum_.end()) return atoms_.back();
  return atoms_[static_cast<std::size_t>(it - cum_.begin())];
}

ConvexCurve1D::ConvexCurve1D(std::vector<double> breakpoints, std::vector<double> values,
                             std::vector<double> slopes, double z0, double offset)
    : x_(std::move(breakpoints)),
      v_(std::move(values)),
      s_(std::move(slopes)),
      z0_(z0),
      offset_(offset) {
  if (x_.size() < 2 || v_.size() != x_.size() || s_.size() + 1 != x_.size()) {
    throw ValidationError("ConvexCurve1D: inconsistent breakpoint data");
  }
}

double ConvexCurve1D::operator()(double x) const {
  // piece k covers [x_k, x_{k+1}]
  auto it = std::upper_bound(x_.begin() + 1, x_.end() - 1, x);
  const auto k = static_cast<std::size_t>(it - x_.begin()) - 1;
  // Evaluate from the nearer end of the piece.
  if (x - x_[k] <= x_[k + 1] - x) return v_[k] + s_[k] * (x - x_[k]);
  return v_[k + 1] - s_[k] * (x_[k + 1] - x);
}

double ConvexCurve1D::slope(double x) const {
  auto it = std::upper_bound(x_.begin() + 1, x_.end() - 1, x);
  return s_[static_cast<std::size_t>(it - x_.begin()) - 1];
}

QuantileFunction monotone_rearrange_1d(std::span<const double> atoms,
                                       std::span<const double> weights) {
  if (atoms.empty()) throw InputError("monotone_rearrange_1d: empty cloud");
  if (atoms.size() != weights.size()) {
    throw ValidationError("monotone_rearrange_1d: weight count mismatch");
  }
  std::vector<std::size_t> order(atoms.size());
  std::iota(order.begin(), order.end(), 0);
  for (double a : atoms) {
    if (!std::isfinite(a)) throw ValidationError("monotone_rearrange_1d: non-finite atom");
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return atoms[i] < atoms[j]; });

  CompensatedSum total;
  for (double w : weights) total += w;
  const double mass = total.value();
  if (!(mass > 0.0)) throw ValidationError("monotone_rearrange_1d: total weight must be positive");

  std::vector<double> merged;
  std::vector<double> cum;
  CompensatedSum running;
  for (std::size_t idx = 0; idx < order.size(); ++idx) {
    const std::size_t i = order[idx];
    running += weights[i];
    const bool last_of_value = idx + 1 == order.size() || atoms[order[idx + 1]] != atoms[i];
    if (last_of_value) {
      merged.push_back(atoms[i]);
      cum.push_back(running.value() / mass);
    }
  }
  cum.back() = 1.0;
  return QuantileFunction(std::move(merged), std::move(cum));
}

QuantileFunction monotone_rearrange_1d(const GradientAtomCloud& cloud) {
  const auto a = cloud.scalar_atoms();
  return monotone_rearrange_1d(a, cloud.weights);
}

ConvexCurve1D convex_rearrange_1d(const QuantileFunction& q, double offset, double z0) {
  if (z0 < 0.0 || z0 > 1.0) throw ValidationError("convex_rearrange_1d: z0 outside [0,1]");
  const auto& atoms = q.atoms();
  const auto& cum = q.cumulative();
  const std::size_t k = atoms.size();
  std::vector<double> x(k + 1);
  x[0] = 0.0;
  for (std::size_t i = 0; i < k; ++i) x[i + 1] = cum[i];
  x[k] = 1.0;

  // Unpinned values with V(0) = 0, compensated to keep sums of many pieces tight.
  std::vector<double> v(k + 1);
  CompensatedSum acc;
  v[0] = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    acc += atoms[i] * q.weight(i);
    v[i + 1] = acc.value();
  }
  ConvexCurve1D unpinned(x, v, atoms, z0, 0.0);
  const double shift = offset - unpinned(z0);
  for (auto& value : v) value += shift;
  return ConvexCurve1D(std::move(x), std::move(v), atoms, z0, offset);
}

double lorenz_gl1(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw ValidationError("lorenz_gl1: x outside [0,1]");
  if (x == 0.0 || x == 1.0) return 0.0;
  return -normal_pdf(normal_quantile(x));
}

GiniResult gini(std::span<const double> incomes) {
  if (incomes.empty()) throw ValidationError("gini: no incomes");
  std::vector<double> sorted(incomes.begin(), incomes.end());
  bool positive = false;
  for (double v : sorted) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("gini: incomes must be >= 0");
    positive = positive || v > 0.0;
  }
  if (!positive) throw ValidationError("gini: at least one income must be positive");
  std::stable_sort(sorted.begin(), sorted.end());

  GiniResult r;
  const std::size_t n = sorted.size();
  CompensatedSum running;
  for (double v : sorted) {
    running += v;
    r.lorenz.push_back(running.value());
  }
  const double total = r.lorenz.back();
  CompensatedSum raw;
  for (std::size_t k = 1; k <= n; ++k) {
    const double eq = static_cast<double>(k) / static_cast<double>(n) * total;
    r.equality.push_back(eq);
    raw += eq - r.lorenz[k - 1];
  }
  r.raw = std::max(raw.value(), 0.0);
  r.normalized = 2.0 * r.raw / (static_cast<double>(n) * total);
  return r;
}

void write_curve_csv(std::ostream& os, const ConvexCurve1D& curve, int points) {
  if (points < 2) throw ValidationError("write_curve_csv: need at least 2 points");
  const auto old = os.precision(17);
  os << "x,C\n";
  for (int i = 0; i < points; ++i) {
    const double x = static_cast<double>(i) / (points - 1);
    os << x << "," << curve(x) << "\n";
  }
  os.precision(old);
}

}  // namespace rearrange
