#include "rearrange/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "rearrange/errors.hpp"
#include "rearrange/numerics.hpp"

namespace rearrange {

std::string ConvergenceReport::to_json() const {
  nlohmann::ordered_json j;
  j["experiment"] = experiment;
  j["metric"] = metric;
  j["value"] = value;
  j["threshold"] = threshold;
  j["pass"] = pass;
  j["n"] = level;
  j["sample_size"] = sample_size;
  j["seeds"] = seeds;
  j["config_hash"] = config_hash;
  j["seed"] = master_seed;
  return j.dump(2);
}

ConvergenceReport ConvergenceReport::from_json(const std::string& text) {
  ConvergenceReport r;
  try {
    const auto j = nlohmann::json::parse(text);
    r.experiment = j.at("experiment").get<std::string>();
    r.metric = j.at("metric").get<std::string>();
    r.value = j.at("value").get<double>();
    r.threshold = j.at("threshold").get<double>();
    r.pass = j.at("pass").get<bool>();
    r.level = j.value("n", 0);
    r.sample_size = j.value("sample_size", std::size_t{0});
    r.seeds = j.value("seeds", std::vector<std::uint64_t>{});
    r.config_hash = j.value("config_hash", std::string{});
    r.master_seed = j.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad report JSON: ") + e.what());
  }
  return r;
}

std::vector<Vec> default_h_grid(int d) {
  if (d < 1) throw ValidationError("default_h_grid: dimension must be positive");
  std::vector<Vec> grid;
  if (d == 1) {
    for (double h : {-3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0}) grid.push_back(Vec::Constant(1, h));
    return grid;
  }
  if (d == 2) {
    for (double a : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
      for (double b : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
        Vec h(2);
        h << a, b;
        grid.push_back(h);
      }
    }
    return grid;
  }
  grid.push_back(Vec::Zero(d));
  for (int i = 0; i < d; ++i) {
    for (double a : {-2.0, -1.0, 1.0, 2.0}) {
      Vec h = Vec::Zero(d);
      h[i] = a;
      grid.push_back(h);
    }
  }
  return grid;
}

double cf_sup_error(const GradientAtomCloud& cloud, const std::function<double(const Vec&)>& cf,
                    const std::vector<Vec>& h_grid) {
  if (h_grid.empty()) throw ValidationError("cf_sup_error: empty h grid");
  double err = 0.0;
  for (const auto& h : h_grid) {
    if (h.isZero(0.0)) continue;
    err = std::max(err, std::abs(empirical_cf(cloud, h) - std::complex<double>(cf(h), 0.0)));
  }
  return err;
}

double cf_sup_error(const GradientAtomCloud& cloud, const LimitMeasureSpec& spec,
                    const std::vector<Vec>& h_grid) {
  if (spec.dim != cloud.dim) throw ValidationError("cf_sup_error: dimension mismatch");
  return cf_sup_error(cloud, [&spec](const Vec& h) { return spec.cf(h); }, h_grid);
}

double ks_distance(std::span<const double> atoms, std::span<const double> weights,
                   const std::function<double(double)>& cdf) {
  if (atoms.empty() || atoms.size() != weights.size()) {
    throw ValidationError("ks_distance: atoms and weights must be nonempty and match");
  }
  std::vector<std::size_t> order(atoms.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });
  CompensatedSum total;
  for (double w : weights) total += w;
  CompensatedSum cum;
  double below = 0.0;
  double d = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    cum += weights[order[i]];
    const bool last = i + 1 == order.size() || atoms[order[i + 1]] != atoms[order[i]];
    if (!last) continue;
    const double f = cdf(atoms[order[i]]);
    const double above = cum.value() / total.value();
    d = std::max({d, std::abs(f - below), std::abs(above - f)});
    below = above;
  }
  return d;
}

double ks_distance(const GradientAtomCloud& cloud, int coordinate,
                   const std::function<double(double)>& cdf) {
  const auto a = cloud.coordinate(coordinate);
  return ks_distance(a, cloud.weights, cdf);
}

std::vector<Vec> interior_grid(int d, int points, double margin) {
  if (d < 1 || points < 2 || !(margin >= 0.0 && margin < 0.5)) {
    throw ValidationError("interior_grid: bad arguments");
  }
  std::vector<Vec> grid;
  std::vector<int> idx(d, 0);
  Vec z(d);
  while (true) {
    for (int i = 0; i < d; ++i) {
      z[i] = margin + (1.0 - 2.0 * margin) * static_cast<double>(idx[i]) / (points - 1);
    }
    grid.push_back(z);
    int i = 0;
    while (i < d && ++idx[i] == points) {
      idx[i] = 0;
      ++i;
    }
    if (i == d) break;
  }
  return grid;
}

double curve_sup_error(const std::function<double(const Vec&)>& a,
                       const std::function<double(const Vec&)>& b, const std::vector<Vec>& grid) {
  double err = 0.0;
  for (const auto& z : grid) err = std::max(err, std::abs(a(z) - b(z)));
  return err;
}

Mat to_correlation(const Mat& cov) {
  const Vec s = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  Mat c = cov;
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      const double den = s[i] * s[j];
      c(i, j) = den > 0.0 ? cov(i, j) / den : 0.0;
    }
  }
  return c;
}

double correlation_error(const Mat& estimate, const Mat& target) {
  if (estimate.rows() != target.rows() || estimate.cols() != target.cols()) {
    throw ValidationError("correlation_error: shape mismatch");
  }
  return (to_correlation(estimate) - to_correlation(target)).cwiseAbs().maxCoeff();
}

double covariance_error(const GradientAtomCloud& cloud, int simplex, const Mat& basis,
                        const Mat& lambda) {
  return correlation_error(per_simplex_covariance(cloud, simplex, basis), lambda);
}

}  // namespace rearrange
