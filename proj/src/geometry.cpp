#include "rearrange/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "rearrange/errors.hpp"

namespace rearrange {

namespace {

constexpr double kOrthonormalTol = 1e-12;
constexpr double kContainTol = 1e-12;

double factorial(int d) {
  double f = 1.0;
  for (int i = 2; i <= d; ++i) f *= i;
  return f;
}

Mat edge_matrix(const Mat& vertices) {
  const int d = static_cast<int>(vertices.rows());
  Mat e(d, d);
  for (int i = 0; i < d; ++i) e.col(i) = vertices.col(i + 1) - vertices.col(0);
  return e;
}

// Relative degeneracy test: |det E| against the product of edge lengths.
bool degenerate(const Mat& edges) {
  double scale = 1.0;
  for (int i = 0; i < edges.cols(); ++i) scale *= edges.col(i).norm();
  if (scale == 0.0) return true;
  return std::abs(edges.determinant()) <= 1e-13 * scale;
}

struct LatticeKeyLess {
  bool operator()(const IVec& a, const IVec& b) const {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(),
                                        b.data() + b.size());
  }
};

}  // namespace

Domain::Domain(int d) : dim(d), z0(Vec::Zero(std::max(d, 0))) {
  if (d < 1) throw ValidationError("Domain: dimension must be positive");
}

Domain::Domain(int d, Vec start) : dim(d), z0(std::move(start)) {
  if (d < 1) throw ValidationError("Domain: dimension must be positive");
  if (z0.size() != d) throw ValidationError("Domain: starting point has wrong dimension");
  if (!contains(z0)) throw ValidationError("Domain: starting point outside [0,1]^d");
}

bool Domain::contains(const Vec& z, double tol) const {
  if (z.size() != dim) return false;
  for (int i = 0; i < dim; ++i) {
    if (z[i] < -tol || z[i] > 1.0 + tol) return false;
  }
  return true;
}

Simplex::Simplex(Mat vertices) : vertices_(std::move(vertices)) {
  const auto d = vertices_.rows();
  if (d < 1 || vertices_.cols() != d + 1) {
    throw ValidationError("Simplex: need d+1 vertices in R^d");
  }
  const Mat e = edge_matrix(vertices_);
  if (degenerate(e)) throw ValidationError("Simplex: vertices are affinely dependent");
  volume_ = std::abs(e.determinant()) / factorial(static_cast<int>(d));
}

Mat Simplex::edges() const { return edge_matrix(vertices_); }

Vec Simplex::barycentric(const Vec& p) const {
  const Vec rel = edges().partialPivLu().solve(p - apex());
  Vec lambda(dim() + 1);
  lambda[0] = 1.0 - rel.sum();
  lambda.tail(dim()) = rel;
  return lambda;
}

bool Simplex::contains(const Vec& p, double tol) const {
  return barycentric(p).minCoeff() >= -tol;
}

Simplex make_regular_simplex(const Vec& z0, const Mat& basis, double side) {
  const auto d = z0.size();
  if (basis.rows() != d || basis.cols() != d) {
    throw ValidationError("make_regular_simplex: basis must be d x d");
  }
  if (!(side > 0.0)) throw ValidationError("make_regular_simplex: side length must be positive");
  const Mat gram = basis.transpose() * basis;
  if ((gram - Mat::Identity(d, d)).cwiseAbs().maxCoeff() > kOrthonormalTol) {
    throw ValidationError("make_regular_simplex: basis is not orthonormal");
  }
  Mat v(d, d + 1);
  v.col(0) = z0;
  for (Eigen::Index i = 0; i < d; ++i) v.col(i + 1) = z0 + side * basis.col(i);
  return Simplex(std::move(v));
}

Vec affine_gradient(const Mat& vertices, std::span<const double> values) {
  const auto d = vertices.rows();
  if (vertices.cols() != d + 1) throw ValidationError("affine_gradient: need d+1 vertices");
  if (static_cast<Eigen::Index>(values.size()) != d + 1) {
    throw ValidationError("affine_gradient: need one value per vertex");
  }
  const Mat e = edge_matrix(vertices);
  if (degenerate(e)) throw SingularError("affine_gradient: degenerate simplex");
  Vec rhs(d);
  for (Eigen::Index i = 0; i < d; ++i) rhs[i] = values[i + 1] - values[0];
  return e.transpose().partialPivLu().solve(rhs);
}

Vec affine_gradient(const Simplex& simplex, std::span<const double> values) {
  return affine_gradient(simplex.vertices(), values);
}

GermOfTriangulation::GermOfTriangulation(std::string name, Mat lattice_basis,
                                         std::vector<Simplex> simplices, std::vector<Mat> bases,
                                         std::vector<double> sides)
    : name_(std::move(name)), lattice_basis_(std::move(lattice_basis)) {
  const auto d = lattice_basis_.rows();
  if (lattice_basis_.cols() != d || degenerate(lattice_basis_)) {
    throw ValidationError("germ: lattice basis must be d linearly independent vectors");
  }
  if (simplices.empty() || simplices.size() != bases.size() || simplices.size() != sides.size()) {
    throw ValidationError("germ: need one basis and side per simplex");
  }
  lattice_inverse_ = lattice_basis_.inverse();
  for (std::size_t t = 0; t < simplices.size(); ++t) {
    const Simplex& s = simplices[t];
    if (s.dim() != d) throw ValidationError("germ: simplex dimension mismatch");
    IMat lv(d, d + 1);
    for (Eigen::Index j = 0; j <= d; ++j) {
      const Vec k = lattice_inverse_ * s.vertex(static_cast<int>(j));
      for (Eigen::Index i = 0; i < d; ++i) {
        const double r = std::round(k[i]);
        if (std::abs(r - k[i]) > 1e-9) {
          throw ValidationError("germ: simplex vertices must be lattice points");
        }
        lv(i, j) = static_cast<int>(r);
      }
    }
    simplices_.push_back(GermSimplex{s, bases[t], sides[t], lv});
  }
}

int GermOfTriangulation::containing_count(const Vec& p, double tol) const {
  const auto d = dim();
  const Vec k0 = lattice_inverse_ * p;
  // Germ simplices sit within a few lattice cells of the origin; a window of
  // +-3 around the point's own lattice cell covers every candidate translate.
  constexpr int kWindow = 3;
  IVec lo(d);
  for (Eigen::Index i = 0; i < d; ++i) lo[i] = static_cast<int>(std::floor(k0[i])) - kWindow;
  IVec k = lo;
  int count = 0;
  while (true) {
    const Vec shift = lattice_to_point(k);
    for (const auto& gs : simplices_) {
      if (gs.simplex.contains(p - shift, tol)) ++count;
    }
    Eigen::Index i = 0;
    while (i < d && ++k[i] > lo[i] + 2 * kWindow) {
      k[i] = lo[i];
      ++i;
    }
    if (i == d) break;
  }
  return count;
}

GermOfTriangulation standard_germ(int d) {
  if (d == 1) {
    Mat e = Mat::Identity(1, 1);
    return GermOfTriangulation("standard-1d", e, {make_regular_simplex(Vec::Zero(1), e, 1.0)},
                               {e}, {1.0});
  }
  if (d == 2) {
    const Mat e = Mat::Identity(2, 2);
    const Simplex t0 = make_regular_simplex(Vec::Zero(2), e, 1.0);
    // point reflection of t0 through (1/2, 1/2)
    const Simplex t0r = make_regular_simplex(Vec::Ones(2), -e, 1.0);
    return GermOfTriangulation("standard-2d", e, {t0, t0r}, {e, Mat(-e)}, {1.0, 1.0});
  }
  std::ostringstream os;
  os << "standard_germ: unsupported dimension " << d << "; supported germs:";
  for (const auto& n : germ_catalog()) os << ' ' << n;
  throw CatalogError(os.str());
}

GermOfTriangulation rotated_germ() {
  const double s = 1.0 / std::numbers::sqrt2;
  Mat u(2, 2);
  u << s, -s,
       s, s;
  const Simplex t = make_regular_simplex(Vec::Zero(2), u, 1.0);
  Vec apex(2);
  apex << 0.0, std::numbers::sqrt2;
  const Simplex tr = make_regular_simplex(apex, -u, 1.0);
  return GermOfTriangulation("rotated-2d", u, {t, tr}, {u, Mat(-u)}, {1.0, 1.0});
}

std::vector<std::string> germ_catalog() { return {"standard-1d", "standard-2d", "rotated-2d"}; }

GermOfTriangulation germ_by_name(const std::string& name) {
  if (name == "standard-1d") return standard_germ(1);
  if (name == "standard-2d") return standard_germ(2);
  if (name == "rotated-2d") return rotated_germ();
  std::ostringstream os;
  os << "unknown germ '" << name << "'; supported germs:";
  for (const auto& n : germ_catalog()) os << ' ' << n;
  throw CatalogError(os.str());
}

double RefinementCells::total_volume() const {
  double v = 0.0;
  for (const auto& c : cells) v += c.volume;
  return v;
}

RefinementCells enumerate_interior_cells(const GermOfTriangulation& germ, int n,
                                         const Domain& domain) {
  if (n < 1) throw ValidationError("enumerate_interior_cells: level must be >= 1");
  const int d = germ.dim();
  if (domain.dim != d) throw ValidationError("enumerate_interior_cells: germ/domain dimension mismatch");

  const Mat& L = germ.lattice_basis();
  const Mat Linv = L.inverse();

  // Bounding box of n * L^{-1} [0,1]^d in lattice coordinates.
  IVec lo = IVec::Constant(d, std::numeric_limits<int>::max());
  IVec hi = IVec::Constant(d, std::numeric_limits<int>::min());
  for (int corner = 0; corner < (1 << d); ++corner) {
    Vec c(d);
    for (int i = 0; i < d; ++i) c[i] = (corner >> i) & 1 ? n : 0.0;
    const Vec k = Linv * c;
    for (int i = 0; i < d; ++i) {
      lo[i] = std::min(lo[i], static_cast<int>(std::floor(k[i])));
      hi[i] = std::max(hi[i], static_cast<int>(std::ceil(k[i])));
    }
  }
  int reach = 0;
  for (const auto& gs : germ.simplices()) reach = std::max(reach, gs.lattice_vertices.cwiseAbs().maxCoeff());
  lo.array() -= reach + 1;
  hi.array() += reach + 1;

  RefinementCells out;
  out.level = n;
  out.dim = d;
  out.germ_name = germ.name();
  out.by_simplex.resize(germ.simplices().size());

  std::map<IVec, int, LatticeKeyLess> vertex_ids;
  std::vector<std::vector<IVec>> cell_keys;
  const double inv_n = 1.0 / n;

  for (std::size_t t = 0; t < germ.simplices().size(); ++t) {
    const GermSimplex& gs = germ.simplices()[t];
    out.simplex_bases.push_back(gs.basis);
    out.gradient_operators.push_back(gs.simplex.edges().transpose().inverse());
    IVec k = lo;
    while (true) {
      bool inside = true;
      Mat verts(d, d + 1);
      std::vector<IVec> keys;
      for (int j = 0; j <= d && inside; ++j) {
        IVec key = k + gs.lattice_vertices.col(j);
        Vec p = (L * key.cast<double>()) * inv_n;
        for (int i = 0; i < d; ++i) {
          if (p[i] < -kContainTol || p[i] > 1.0 + kContainTol) {
            inside = false;
            break;
          }
          p[i] = std::clamp(p[i], 0.0, 1.0);
        }
        verts.col(j) = p;
        keys.push_back(std::move(key));
      }
      if (inside) {
        for (const auto& key : keys) vertex_ids.emplace(key, 0);
        Simplex scaled(verts);
        // Same value for every translate of a germ simplex.
        const double vol = gs.simplex.volume() * std::pow(inv_n, d);
        out.by_simplex[t].push_back(static_cast<int>(out.cells.size()));
        out.cells.push_back(Cell{k, static_cast<int>(t), {}, std::move(scaled), vol});
        cell_keys.push_back(std::move(keys));
      }
      int i = 0;
      while (i < d && ++k[i] > hi[i]) {
        k[i] = lo[i];
        ++i;
      }
      if (i == d) break;
    }
  }
  if (out.cells.empty()) {
    throw InputError("enumerate_interior_cells: no cell of level " + std::to_string(n) +
                     " fits inside the unit cube");
  }

  int next = 0;
  for (auto& [key, id] : vertex_ids) {
    id = next++;
    Vec p = (L * key.cast<double>()) * inv_n;
    for (int i = 0; i < d; ++i) p[i] = std::clamp(p[i], 0.0, 1.0);
    out.vertices.push_back(std::move(p));
  }
  for (std::size_t c = 0; c < out.cells.size(); ++c) {
    for (const auto& key : cell_keys[c]) out.cells[c].vertex_ids.push_back(vertex_ids.at(key));
  }
  return out;
}

}  // namespace rearrange
