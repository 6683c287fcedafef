#pragma once

#include <complex>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "rearrange/fields.hpp"
#include "rearrange/geometry.hpp"

namespace rearrange {

/// The renormalizing sequence b_n.
class RenormalizationSchedule {
 public:
  enum class Rule { Explicit, Power, Sigma };

  /// b_n = c * n^beta.
  static RenormalizationSchedule power(double c, double beta);
  /// b_n = n * sigma(1/n), with sigma(t) = sqrt(sigma2(t)).
  static RenormalizationSchedule sigma(std::function<double(double)> sigma2);
  /// b_n read from a table; levels missing from it are an error.
  static RenormalizationSchedule explicit_values(std::map<int, double> values);
  /// b_n = 1 for every n.
  static RenormalizationSchedule identity() { return power(1.0, 0.0); }

  double operator()(int n) const;
  Rule rule() const { return rule_; }
  std::string describe() const;

 private:
  Rule rule_ = Rule::Power;
  double c_ = 1.0;
  double beta_ = 0.0;
  std::function<double(double)> sigma2_;
  std::map<int, double> table_;
};

/// Weighted atoms of the renormalized gradient Y_n, one per interior cell.
struct GradientAtomCloud {
  int dim = 1;
  Mat atoms;                       // d x N, canonical coordinates
  std::vector<double> weights;     // sum to 1
  std::vector<int> simplex_index;  // germ simplex of each atom
  std::vector<IVec> offsets;       // lattice offset of each atom's cell
  std::vector<Mat> simplex_bases;  // basis u per germ simplex (may be empty)

  std::size_t size() const { return weights.size(); }
  Vec atom(std::size_t j) const { return atoms.col(static_cast<Eigen::Index>(j)); }
  /// Scalar atoms of a 1-D cloud.
  std::vector<double> scalar_atoms() const;
  /// Coordinate `k` of every atom.
  std::vector<double> coordinate(int k) const;
  /// Sub-cloud of one germ simplex, renormalized, atoms expressed in its basis u.
  GradientAtomCloud basis_view(int simplex) const;
};

/// Cloud from explicit atoms; weights default to uniform.
GradientAtomCloud make_cloud(Mat atoms, std::vector<double> weights = {});

/// Y_n = grad X_n / b_n on every interior cell.
GradientAtomCloud build_cloud(const FieldSample& sample, const RefinementCells& cells,
                              const RenormalizationSchedule& schedule);

/// Weighted second moment of the atoms of one simplex family, in basis u.
Mat per_simplex_covariance(const GradientAtomCloud& cloud, int simplex, const Mat& basis);

/// Weighted second moment of all atoms, in canonical coordinates.
Mat second_moment(const GradientAtomCloud& cloud);

/// sum_j w_j exp(i <h, y_j>).
std::complex<double> empirical_cf(const GradientAtomCloud& cloud, const Vec& h);

/// Random subsample of `keep` atoms, one per stratum of a recursive
/// equal-mass split along the coordinates; each kept atom carries its stratum's mass.
GradientAtomCloud stratified_subsample(const GradientAtomCloud& cloud, std::size_t keep,
                                       std::uint64_t seed, std::uint64_t replicate = 0);

/// Concatenate clouds with equal total mass per cloud.
GradientAtomCloud pool_clouds(const std::vector<GradientAtomCloud>& clouds);

/// Columns: y_1..y_d, weight, simplex_index.
void write_cloud_csv(std::ostream& os, const GradientAtomCloud& cloud);
GradientAtomCloud read_cloud_csv(std::istream& is);

}  // namespace rearrange
