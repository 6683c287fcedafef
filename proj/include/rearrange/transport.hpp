#pragma once

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "rearrange/geometry.hpp"
#include "rearrange/gradients.hpp"
#include "rearrange/rearrange1d.hpp"

namespace rearrange {

struct TransportOptions {
  double tol = 1e-10;          // max_j |vol(cell_j) - w_j|
  int max_iterations = 200;    // Newton steps (d <= 2) or ascent steps x 50 (d >= 3)
  std::size_t mc_points = 1000000;  // quasi-uniform sample size for d >= 3
};

/// Dual weights psi of the Laguerre diagram
///   cell_j = { z in K : <z, y_j> - psi_j >= <z, y_k> - psi_k for all k }.
struct SemiDiscretePotential {
  int dim = 1;
  Mat atoms;                        // d x N, distinct
  std::vector<double> weights;      // target masses
  Vec psi;
  std::vector<double> volumes;      // Lebesgue mass of each cell
  double residual = 0.0;            // max_j |volumes_j - weights_j|
  double cost = 0.0;                // sum_j int_{cell_j} |z - y_j|^2 dz
  int iterations = 0;
  std::vector<double> dual_history;  // concave dual objective at accepted iterates
  std::vector<int> merged_index;    // input atom -> merged atom
  std::vector<std::string> notices;

  std::size_t size() const { return weights.size(); }
  /// Index of the cell containing z (ties to the lowest index).
  std::size_t cell_of(const Vec& z) const;
};

SemiDiscretePotential solve_semidiscrete(const GradientAtomCloud& cloud, const Domain& domain,
                                         const TransportOptions& options = {});

/// The Brenier map: y_{j*(z)}.
Vec brenier_map(const SemiDiscretePotential& potential, const Vec& z);

/// sum_j int_{cell_j} |z - y_j|^2 dz.
double transport_cost(const SemiDiscretePotential& potential);

struct MaxAffine {
  Mat atoms;
  Vec psi;
  double shift = 0.0;
};

struct Separable {
  std::vector<ConvexCurve1D> curves;
};

/// A convex function on [0,1]^d: either max_j (<z,y_j> - psi_j) + shift or
/// sum_i C_i(z_i).
class ConvexPotential {
 public:
  explicit ConvexPotential(MaxAffine f) : f_(std::move(f)) {}
  explicit ConvexPotential(Separable f) : f_(std::move(f)) {}

  int dim() const;
  double operator()(const Vec& z) const;
  /// A (sub)gradient at z.
  Vec gradient(const Vec& z) const;

 private:
  std::variant<MaxAffine, Separable> f_;
};

/// phi with phi(z0) = offset.
ConvexPotential convex_potential(const SemiDiscretePotential& potential, const Vec& z0,
                                 double offset);

/// phi(z) = sum_i C_i(z_i).
ConvexPotential oplus_rearrangement(std::vector<ConvexCurve1D> curves);

/// Exact optimal quadratic cost between equal point masses at the columns of
/// `source` (total mass 1) and the cloud. Min-cost flow; desk scale only.
double assignment_oracle(const Mat& source, const GradientAtomCloud& cloud);

/// Columns: y_1..y_d, psi.
void write_potential_csv(std::ostream& os, const SemiDiscretePotential& potential);

/// Rows (z_1..z_d, phi) on a tensor grid of `points` per axis over [0,1]^d.
void write_potential_grid_csv(std::ostream& os, const ConvexPotential& phi, int dim, int points);

}  // namespace rearrange
