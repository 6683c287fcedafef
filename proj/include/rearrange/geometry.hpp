#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

namespace rearrange {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using IVec = Eigen::VectorXi;
using IMat = Eigen::MatrixXi;

/// The unit cube [0,1]^d together with the starting point z0 at which convex
/// rearrangements are pinned.
struct Domain {
  int dim = 1;
  Vec z0;

  explicit Domain(int d);
  Domain(int d, Vec start);

  double volume() const { return 1.0; }
  bool contains(const Vec& z, double tol = 0.0) const;
};

/// A d-simplex stored as a d x (d+1) matrix of vertex columns. Column 0 is the
/// apex. Construction rejects affinely dependent vertices.
class Simplex {
 public:
  explicit Simplex(Mat vertices);

  int dim() const { return static_cast<int>(vertices_.rows()); }
  const Mat& vertices() const { return vertices_; }
  Vec vertex(int i) const { return vertices_.col(i); }
  Vec apex() const { return vertices_.col(0); }

  /// Column i is v_{i+1} - v_0.
  Mat edges() const;
  double volume() const { return volume_; }

  Vec barycentric(const Vec& p) const;
  bool contains(const Vec& p, double tol = 1e-12) const;

 private:
  Mat vertices_;
  double volume_ = 0.0;
};

/// Regular simplex z0 + l * rho_u(Sigma_d): vertices z0, z0 + l u^1, ..., z0 + l u^d.
/// `basis` holds u^1..u^d as columns and must be orthonormal to 1e-12.
Simplex make_regular_simplex(const Vec& z0, const Mat& basis, double side);

/// Gradient of the affine function taking `values[i]` at vertex i.
Vec affine_gradient(const Simplex& simplex, std::span<const double> values);

/// Same, for a raw vertex matrix that may be degenerate (throws SingularError).
Vec affine_gradient(const Mat& vertices, std::span<const double> values);

/// One simplex of a germ, with the orthonormal basis it was built from and its
/// vertices expressed in lattice coordinates.
struct GermSimplex {
  Simplex simplex;
  Mat basis;
  double side = 1.0;
  IMat lattice_vertices;  // d x (d+1)
};

/// A finite set of simplices whose translates by a lattice tile R^d.
class GermOfTriangulation {
 public:
  /// Lattice basis vectors are the columns of `lattice_basis`. Every germ
  /// vertex must be a lattice point; that lets refinement cells share vertices
  /// by integer keys.
  GermOfTriangulation(std::string name, Mat lattice_basis, std::vector<Simplex> simplices,
                      std::vector<Mat> bases, std::vector<double> sides);

  const std::string& name() const { return name_; }
  int dim() const { return static_cast<int>(lattice_basis_.rows()); }
  const Mat& lattice_basis() const { return lattice_basis_; }
  const std::vector<GermSimplex>& simplices() const { return simplices_; }

  /// Number of translates gamma + T (gamma in the lattice, T in the germ) that
  /// contain p. Equals 1 for points off the simplex boundaries.
  int containing_count(const Vec& p, double tol = 0.0) const;

  Vec lattice_to_point(const IVec& k) const { return lattice_basis_ * k.cast<double>(); }

 private:
  std::string name_;
  Mat lattice_basis_;
  Mat lattice_inverse_;
  std::vector<GermSimplex> simplices_;
};

GermOfTriangulation standard_germ(int d);
GermOfTriangulation rotated_germ();

/// Catalog lookup: "standard-1d", "standard-2d", "rotated-2d".
GermOfTriangulation germ_by_name(const std::string& name);
std::vector<std::string> germ_catalog();

/// One level-n translate (1/n)(gamma + T) lying inside the unit cube.
struct Cell {
  IVec offset;                    // gamma in lattice coordinates
  int simplex_index = 0;
  std::vector<int> vertex_ids;    // into RefinementCells::vertices, apex first
  Simplex scaled;
  double volume = 0.0;
};

/// The interior cells of the level-n triangulation induced by a germ.
struct RefinementCells {
  int level = 1;
  int dim = 1;
  std::string germ_name;
  std::vector<Cell> cells;
  std::vector<Vec> vertices;                  // unique cell vertices, sorted by lattice key
  std::vector<std::vector<int>> by_simplex;   // H_n^(T): cell indices per germ simplex
  std::vector<Mat> simplex_bases;             // basis u of each germ simplex
  std::vector<Mat> gradient_operators;        // (E_T^T)^{-1} for the unscaled germ simplex

  double total_volume() const;
};

/// Translates (1/n)(gamma + T) wholly contained in [0,1]^d. Boundary-crossing
/// translates are dropped.
RefinementCells enumerate_interior_cells(const GermOfTriangulation& germ, int n,
                                         const Domain& domain);

}  // namespace rearrange
