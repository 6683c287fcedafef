#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rearrange/gradients.hpp"
#include "rearrange/limits.hpp"

namespace rearrange {

struct ConvergenceReport {
  std::string experiment;
  std::string metric;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
  int level = 0;                      // n
  std::size_t sample_size = 0;        // atoms or seeds behind the value
  std::vector<std::uint64_t> seeds;
  std::string config_hash;
  std::uint64_t master_seed = 0;

  std::string to_json() const;
  static ConvergenceReport from_json(const std::string& text);
};

/// {-3,-2,-1,-0.5,0,0.5,1,2,3} for d = 1; {-2,-1,0,1,2}^2 for d = 2; the
/// origin and +-1, +-2 on each axis for d >= 3.
std::vector<Vec> default_h_grid(int d);

/// max_h |phi_n(h) - phi(h)|.
double cf_sup_error(const GradientAtomCloud& cloud, const LimitMeasureSpec& spec,
                    const std::vector<Vec>& h_grid);
double cf_sup_error(const GradientAtomCloud& cloud, const std::function<double(const Vec&)>& cf,
                    const std::vector<Vec>& h_grid);

/// sup_t |F_n(t) - F(t)| for the weighted empirical CDF F_n.
double ks_distance(std::span<const double> atoms, std::span<const double> weights,
                   const std::function<double(double)>& cdf);
double ks_distance(const GradientAtomCloud& cloud, int coordinate,
                   const std::function<double(double)>& cdf);

/// Points of [margin, 1 - margin]^d, `points` per axis.
std::vector<Vec> interior_grid(int d, int points, double margin = 0.05);

/// max over the grid of |a(z) - b(z)|.
double curve_sup_error(const std::function<double(const Vec&)>& a,
                       const std::function<double(const Vec&)>& b, const std::vector<Vec>& grid);

/// Max abs entry difference between correlation-normalized matrices.
double correlation_error(const Mat& estimate, const Mat& target);
/// Correlation matrix of a covariance matrix.
Mat to_correlation(const Mat& cov);

/// covariance_error for one simplex family of the cloud.
double covariance_error(const GradientAtomCloud& cloud, int simplex, const Mat& basis,
                        const Mat& lambda);

}  // namespace rearrange
