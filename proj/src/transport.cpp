#include "rearrange/transport.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "rearrange/errors.hpp"
#include "rearrange/numerics.hpp"

namespace rearrange {

namespace {

constexpr double kMergeRadius = 1e-12;
constexpr int kBoundary = -1;

// Per-cell integrals and shared facets of a Laguerre diagram in [0,1]^d.
struct CellGeometry {
  std::vector<double> volume;
  Mat first;                                        // d x N, int_{cell} z
  std::vector<double> second;                       // int_{cell} |z|^2
  std::vector<std::vector<std::pair<int, double>>> facets;  // (k, |facet_jk|)
};

struct Polygon {
  std::vector<std::array<double, 2>> v;
  std::vector<int> label;  // label[i]: edge v[i] -> v[i+1]
};

// Keep { z : a z_0 + b z_1 <= c }; edges created on the line get `id`.
void clip(Polygon& poly, Polygon& scratch, double a, double b, double c, int id) {
  const std::size_t m = poly.v.size();
  bool any_out = false;
  bool any_in = false;
  std::array<double, 16> small{};
  std::vector<double> big;
  double* s = small.data();
  if (m > small.size()) {
    big.resize(m);
    s = big.data();
  }
  for (std::size_t i = 0; i < m; ++i) {
    s[i] = a * poly.v[i][0] + b * poly.v[i][1] - c;
    if (s[i] > 0.0) {
      any_out = true;
    } else {
      any_in = true;
    }
  }
  if (!any_out) return;
  if (!any_in) {
    poly.v.clear();
    poly.label.clear();
    return;
  }
  scratch.v.clear();
  scratch.label.clear();
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = (i + 1) % m;
    const auto& p = poly.v[i];
    const auto& q = poly.v[j];
    const bool p_in = s[i] <= 0.0;
    const bool q_in = s[j] <= 0.0;
    if (p_in) {
      if (q_in) {
        scratch.v.push_back(p);
        scratch.label.push_back(poly.label[i]);
      } else if (s[i] == 0.0) {
        scratch.v.push_back(p);
        scratch.label.push_back(id);
      } else {
        const double t = s[i] / (s[i] - s[j]);
        scratch.v.push_back(p);
        scratch.label.push_back(poly.label[i]);
        scratch.v.push_back({p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])});
        scratch.label.push_back(id);
      }
    } else if (q_in && s[j] < 0.0) {
      const double t = s[i] / (s[i] - s[j]);
      scratch.v.push_back({p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])});
      scratch.label.push_back(poly.label[i]);
    }
  }
  std::swap(poly, scratch);
}

CellGeometry cells_2d(const Mat& y, const Vec& psi) {
  const auto n = static_cast<int>(y.cols());
  CellGeometry g;
  g.volume.assign(n, 0.0);
  g.first = Mat::Zero(2, n);
  g.second.assign(n, 0.0);
  g.facets.resize(n);
  Polygon poly;
  Polygon scratch;
  for (int j = 0; j < n; ++j) {
    poly.v = {{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
    poly.label.assign(4, kBoundary);
    const double yj0 = y(0, j);
    const double yj1 = y(1, j);
    for (int k = 0; k < n && !poly.v.empty(); ++k) {
      if (k == j) continue;
      clip(poly, scratch, y(0, k) - yj0, y(1, k) - yj1, psi[k] - psi[j], k);
    }
    const std::size_t m = poly.v.size();
    if (m < 3) continue;
    // fan triangulation from v[0]
    const auto& o = poly.v[0];
    double area = 0.0;
    double fx = 0.0;
    double fy = 0.0;
    double sq = 0.0;
    for (std::size_t i = 1; i + 1 < m; ++i) {
      const auto& p = poly.v[i];
      const auto& q = poly.v[i + 1];
      const double a = 0.5 * ((p[0] - o[0]) * (q[1] - o[1]) - (q[0] - o[0]) * (p[1] - o[1]));
      area += a;
      fx += a * (o[0] + p[0] + q[0]) / 3.0;
      fy += a * (o[1] + p[1] + q[1]) / 3.0;
      const double xx = o[0] * o[0] + p[0] * p[0] + q[0] * q[0] + o[0] * p[0] + p[0] * q[0] +
                        q[0] * o[0];
      const double yy = o[1] * o[1] + p[1] * p[1] + q[1] * q[1] + o[1] * p[1] + p[1] * q[1] +
                        q[1] * o[1];
      sq += a * (xx + yy) / 6.0;
    }
    g.volume[j] = area;
    g.first(0, j) = fx;
    g.first(1, j) = fy;
    g.second[j] = sq;
    for (std::size_t i = 0; i < m; ++i) {
      if (poly.label[i] < 0) continue;
      const auto& p = poly.v[i];
      const auto& q = poly.v[(i + 1) % m];
      const double len = std::hypot(q[0] - p[0], q[1] - p[1]);
      if (len > 0.0) g.facets[j].emplace_back(poly.label[i], len);
    }
  }
  return g;
}

CellGeometry cells_1d(const Mat& y, const Vec& psi) {
  const auto n = static_cast<int>(y.cols());
  CellGeometry g;
  g.volume.assign(n, 0.0);
  g.first = Mat::Zero(1, n);
  g.second.assign(n, 0.0);
  g.facets.resize(n);
  for (int j = 0; j < n; ++j) {
    double lo = 0.0;
    double hi = 1.0;
    int lo_label = kBoundary;
    int hi_label = kBoundary;
    for (int k = 0; k < n && lo < hi; ++k) {
      if (k == j) continue;
      const double a = y(0, k) - y(0, j);
      const double c = psi[k] - psi[j];
      const double r = c / a;
      if (a > 0.0 && r < hi) {
        hi = r;
        hi_label = k;
      } else if (a < 0.0 && r > lo) {
        lo = r;
        lo_label = k;
      }
    }
    if (!(lo < hi)) continue;
    g.volume[j] = hi - lo;
    g.first(0, j) = 0.5 * (hi - lo) * (hi + lo);
    g.second[j] = (hi - lo) * (hi * hi + hi * lo + lo * lo) / 3.0;
    if (lo_label >= 0) g.facets[j].emplace_back(lo_label, 1.0);
    if (hi_label >= 0) g.facets[j].emplace_back(hi_label, 1.0);
  }
  return g;
}

// Radical-inverse sequence in bases 2, 3, 5, ...
class Halton {
 public:
  explicit Halton(int dim) : dim_(dim) {
    int p = 2;
    while (static_cast<int>(primes_.size()) < dim) {
      bool prime = true;
      for (int q : primes_) prime = prime && p % q != 0;
      if (prime) primes_.push_back(p);
      ++p;
    }
  }
  void point(std::size_t index, Vec& out) const {
    for (int i = 0; i < dim_; ++i) {
      const int b = primes_[i];
      double f = 1.0;
      double r = 0.0;
      std::size_t k = index;
      while (k > 0) {
        f /= b;
        r += f * static_cast<double>(k % b);
        k /= b;
      }
      out[i] = r;
    }
  }

 private:
  int dim_;
  std::vector<int> primes_;
};

std::size_t argmax_cell(const Mat& y, const Vec& psi, const Vec& z) {
  std::size_t best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    const double v = z.dot(y.col(j)) - psi[j];
    if (v > best_val) {
      best_val = v;
      best = static_cast<std::size_t>(j);
    }
  }
  return best;
}

CellGeometry cells_mc(const Mat& y, const Vec& psi, const Mat& sample) {
  const auto n = static_cast<int>(y.cols());
  const auto d = y.rows();
  CellGeometry g;
  g.volume.assign(n, 0.0);
  g.first = Mat::Zero(d, n);
  g.second.assign(n, 0.0);
  g.facets.resize(n);
  const double w = 1.0 / static_cast<double>(sample.cols());
  for (Eigen::Index s = 0; s < sample.cols(); ++s) {
    const Vec z = sample.col(s);
    const std::size_t j = argmax_cell(y, psi, z);
    g.volume[j] += w;
    g.first.col(static_cast<Eigen::Index>(j)) += w * z;
    g.second[j] += w * z.squaredNorm();
  }
  return g;
}

struct Evaluation {
  CellGeometry geom;
  double objective = 0.0;  // convex F(psi); the dual objective is -F
  Vec gradient;            // w - vol
  double residual = 0.0;
  double min_volume = 0.0;
};

class Problem {
 public:
  Problem(Mat atoms, std::vector<double> weights, const TransportOptions& options)
      : y_(std::move(atoms)), w_(std::move(weights)), d_(static_cast<int>(y_.rows())) {
    if (d_ >= 3) {
      const std::size_t m = std::max<std::size_t>(options.mc_points, 1);
      sample_.resize(d_, static_cast<Eigen::Index>(m));
      Halton h(d_);
      Vec p(d_);
      for (std::size_t s = 0; s < m; ++s) {
        h.point(s + 1, p);
        sample_.col(static_cast<Eigen::Index>(s)) = p;
      }
    }
  }

  Evaluation evaluate(const Vec& psi) const {
    Evaluation e;
    if (d_ == 1) {
      e.geom = cells_1d(y_, psi);
    } else if (d_ == 2) {
      e.geom = cells_2d(y_, psi);
    } else {
      e.geom = cells_mc(y_, psi, sample_);
    }
    const auto n = static_cast<Eigen::Index>(w_.size());
    e.gradient.resize(n);
    CompensatedSum f;
    e.min_volume = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      const double vol = e.geom.volume[static_cast<std::size_t>(j)];
      f += y_.col(j).dot(e.geom.first.col(j));
      f += -psi[j] * vol;
      f += w_[static_cast<std::size_t>(j)] * psi[j];
      e.gradient[j] = w_[static_cast<std::size_t>(j)] - vol;
      e.residual = std::max(e.residual, std::abs(e.gradient[j]));
      e.min_volume = std::min(e.min_volume, vol);
    }
    e.objective = f.value();
    return e;
  }

  // Hessian of F, a weighted graph Laplacian, with row/column 0 removed.
  Eigen::SparseMatrix<double> reduced_hessian(const CellGeometry& g) const {
    const auto n = static_cast<int>(w_.size());
    std::vector<Eigen::Triplet<double>> trip;
    for (int j = 0; j < n; ++j) {
      for (const auto& [k, len] : g.facets[static_cast<std::size_t>(j)]) {
        const double c = 0.5 * len / (y_.col(j) - y_.col(k)).norm();
        if (j > 0) trip.emplace_back(j - 1, j - 1, c);
        if (k > 0) trip.emplace_back(k - 1, k - 1, c);
        if (j > 0 && k > 0) {
          trip.emplace_back(j - 1, k - 1, -c);
          trip.emplace_back(k - 1, j - 1, -c);
        }
      }
    }
    Eigen::SparseMatrix<double> h(n - 1, n - 1);
    h.setFromTriplets(trip.begin(), trip.end());
    return h;
  }

  const Mat& atoms() const { return y_; }
  const std::vector<double>& weights() const { return w_; }
  int dim() const { return d_; }

 private:
  Mat y_;
  std::vector<double> w_;
  int d_;
  Mat sample_;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

void newton(const Problem& prob, Vec& psi, Evaluation& cur, SemiDiscretePotential& out,
            const TransportOptions& options) {
  const auto n = static_cast<Eigen::Index>(prob.weights().size());
  const double min_w = *std::min_element(prob.weights().begin(), prob.weights().end());
  const double eps0 = 0.5 * std::min(min_w, cur.min_volume);
  int it = 0;
  while (cur.residual > options.tol) {
    if (it >= options.max_iterations) {
      throw ConvergenceError("solve_semidiscrete: no convergence after " + std::to_string(it) +
                                 " Newton steps (residual " + fmt(cur.residual) + ")",
                             cur.residual, it);
    }
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(prob.reduced_hessian(cur.geom));
    Vec dir = Vec::Zero(n);
    if (solver.info() == Eigen::Success) {
      dir.tail(n - 1) = solver.solve(-cur.gradient.tail(n - 1));
    }
    if (solver.info() != Eigen::Success || !dir.allFinite()) {
      throw ConvergenceError("solve_semidiscrete: singular Hessian", cur.residual, it);
    }
    const double gnorm = cur.gradient.norm();
    const double ftol = 1e-14 * (1.0 + std::abs(cur.objective));
    double t = 1.0;
    while (true) {
      const Vec cand = psi + t * dir;
      Evaluation e = prob.evaluate(cand);
      if (e.min_volume >= eps0 && e.gradient.norm() <= (1.0 - 0.5 * t) * gnorm &&
          e.objective <= cur.objective + ftol) {
        psi = cand;
        cur = std::move(e);
        break;
      }
      t *= 0.5;
      if (t < 1e-12) {
        throw ConvergenceError("solve_semidiscrete: line search failed (residual " +
                                   fmt(cur.residual) + ")",
                               cur.residual, it);
      }
    }
    ++it;
    out.dual_history.push_back(-cur.objective);
  }
  out.iterations = it;
}

void ascent(const Problem& prob, Vec& psi, Evaluation& cur, SemiDiscretePotential& out,
            const TransportOptions& options) {
  const int budget = options.max_iterations * 50;
  double t = 1.0;
  int it = 0;
  while (cur.residual > options.tol) {
    if (it >= budget) {
      throw ConvergenceError("solve_semidiscrete: no convergence after " + std::to_string(it) +
                                 " ascent steps (residual " + fmt(cur.residual) + ")",
                             cur.residual, it);
    }
    const double g2 = cur.gradient.squaredNorm();
    t = std::min(2.0 * t, 1e6);
    while (true) {
      const Vec cand = psi - t * cur.gradient;
      Evaluation e = prob.evaluate(cand);
      if (e.objective <= cur.objective - 1e-4 * t * g2) {
        psi = cand;
        cur = std::move(e);
        break;
      }
      t *= 0.5;
      if (t < 1e-12) {
        throw ConvergenceError("solve_semidiscrete: Armijo search failed (residual " +
                                   fmt(cur.residual) + ")",
                               cur.residual, it);
      }
    }
    ++it;
    out.dual_history.push_back(-cur.objective);
  }
  out.iterations = it;
}

}  // namespace

std::size_t SemiDiscretePotential::cell_of(const Vec& z) const {
  if (z.size() != dim) throw ValidationError("cell_of: point has the wrong dimension");
  return argmax_cell(atoms, psi, z);
}

SemiDiscretePotential solve_semidiscrete(const GradientAtomCloud& cloud, const Domain& domain,
                                         const TransportOptions& options) {
  const int d = cloud.dim;
  if (domain.dim != d) throw ValidationError("solve_semidiscrete: domain dimension mismatch");
  if (cloud.size() == 0) throw InputError("solve_semidiscrete: empty cloud");
  if (!(options.tol > 0.0)) throw ValidationError("solve_semidiscrete: tol must be positive");
  if (d >= 3 && options.tol < 1e-3) {
    throw ValidationError("solve_semidiscrete: Monte Carlo volumes need tol >= 1e-3");
  }

  SemiDiscretePotential out;
  out.dim = d;

  // Merge atoms closer than kMergeRadius (sweep on the first coordinate).
  const std::size_t n_in = cloud.size();
  std::vector<std::size_t> order(n_in);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return cloud.atoms(0, static_cast<Eigen::Index>(a)) <
           cloud.atoms(0, static_cast<Eigen::Index>(b));
  });
  out.merged_index.assign(n_in, -1);
  std::vector<std::size_t> reps;
  std::vector<CompensatedSum> mass;
  for (std::size_t a = 0; a < n_in; ++a) {
    const std::size_t i = order[a];
    if (out.merged_index[i] >= 0) continue;
    const int id = static_cast<int>(reps.size());
    reps.push_back(i);
    mass.emplace_back();
    const auto yi = cloud.atoms.col(static_cast<Eigen::Index>(i));
    for (std::size_t b = a; b < n_in; ++b) {
      const std::size_t k = order[b];
      if (cloud.atoms(0, static_cast<Eigen::Index>(k)) - yi[0] > kMergeRadius) break;
      if (out.merged_index[k] >= 0) continue;
      if ((cloud.atoms.col(static_cast<Eigen::Index>(k)) - yi).norm() <= kMergeRadius) {
        out.merged_index[k] = id;
        mass.back() += cloud.weights[k];
      }
    }
  }
  // Restore input order of representatives for reproducible output.
  std::vector<std::size_t> rank(reps.size());
  std::iota(rank.begin(), rank.end(), 0);
  std::sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) { return reps[a] < reps[b]; });
  std::vector<int> new_id(reps.size());
  for (std::size_t r = 0; r < rank.size(); ++r) new_id[rank[r]] = static_cast<int>(r);
  for (auto& m : out.merged_index) m = new_id[static_cast<std::size_t>(m)];

  const auto n = static_cast<Eigen::Index>(reps.size());
  out.atoms.resize(d, n);
  out.weights.resize(static_cast<std::size_t>(n));
  CompensatedSum total;
  for (const auto& m : mass) total += m.value();
  for (std::size_t r = 0; r < rank.size(); ++r) {
    out.atoms.col(static_cast<Eigen::Index>(r)) =
        cloud.atoms.col(static_cast<Eigen::Index>(reps[rank[r]]));
    out.weights[r] = mass[rank[r]].value() / total.value();
  }
  if (static_cast<std::size_t>(n) < n_in) {
    out.notices.push_back("merged " + std::to_string(n_in - static_cast<std::size_t>(n)) +
                          " duplicate atoms (radius 1e-12)");
  }

  if (n == 1) {
    out.psi = Vec::Zero(1);
    out.volumes = {1.0};
    out.residual = 0.0;
  }

  // Start from the Voronoi diagram of the atoms mapped affinely into the cube.
  const Vec lo = out.atoms.rowwise().minCoeff();
  const Vec hi = out.atoms.rowwise().maxCoeff();
  const double range = (hi - lo).maxCoeff();
  const double kappa = range > 0.0 ? 0.8 / range : 1.0;
  const Vec mid = 0.5 * (lo + hi);
  if (n > 1) {
    out.psi.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const Vec p = Vec::Constant(d, 0.5) + kappa * (out.atoms.col(j) - mid);
      out.psi[j] = p.squaredNorm() / (2.0 * kappa);
    }
    Problem prob(out.atoms, out.weights, options);
    Evaluation cur = prob.evaluate(out.psi);
    out.dual_history.push_back(-cur.objective);
    if (d <= 2) {
      newton(prob, out.psi, cur, out, options);
    } else {
      ascent(prob, out.psi, cur, out, options);
    }
    out.volumes = cur.geom.volume;
    out.residual = cur.residual;
    // Fix the additive constant: psi_0 = 0.
    out.psi.array() -= out.psi[0];
    CompensatedSum cost;
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto y = out.atoms.col(j);
      cost += cur.geom.second[static_cast<std::size_t>(j)];
      cost += -2.0 * y.dot(cur.geom.first.col(j));
      cost += y.squaredNorm() * cur.geom.volume[static_cast<std::size_t>(j)];
    }
    out.cost = cost.value();
  } else {
    // Single atom: the whole cube maps to y.
    Problem prob(out.atoms, out.weights, options);
    const Evaluation e = prob.evaluate(out.psi);
    const auto y = out.atoms.col(0);
    out.cost = e.geom.second[0] - 2.0 * y.dot(e.geom.first.col(0)) + y.squaredNorm() * e.geom.volume[0];
    out.volumes = e.geom.volume;
    out.residual = std::abs(1.0 - out.volumes[0]);
  }
  return out;
}

Vec brenier_map(const SemiDiscretePotential& potential, const Vec& z) {
  return potential.atoms.col(static_cast<Eigen::Index>(potential.cell_of(z)));
}

double transport_cost(const SemiDiscretePotential& potential) { return potential.cost; }

int ConvexPotential::dim() const {
  if (const auto* m = std::get_if<MaxAffine>(&f_)) return static_cast<int>(m->atoms.rows());
  return static_cast<int>(std::get<Separable>(f_).curves.size());
}

double ConvexPotential::operator()(const Vec& z) const {
  if (z.size() != dim()) throw ValidationError("ConvexPotential: point has the wrong dimension");
  if (const auto* m = std::get_if<MaxAffine>(&f_)) {
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < m->atoms.cols(); ++j) {
      best = std::max(best, z.dot(m->atoms.col(j)) - m->psi[j]);
    }
    return best + m->shift;
  }
  const auto& curves = std::get<Separable>(f_).curves;
  double v = 0.0;
  for (std::size_t i = 0; i < curves.size(); ++i) v += curves[i](z[static_cast<Eigen::Index>(i)]);
  return v;
}

Vec ConvexPotential::gradient(const Vec& z) const {
  if (z.size() != dim()) throw ValidationError("ConvexPotential: point has the wrong dimension");
  if (const auto* m = std::get_if<MaxAffine>(&f_)) {
    return m->atoms.col(static_cast<Eigen::Index>(argmax_cell(m->atoms, m->psi, z)));
  }
  const auto& curves = std::get<Separable>(f_).curves;
  Vec g(z.size());
  for (std::size_t i = 0; i < curves.size(); ++i) {
    g[static_cast<Eigen::Index>(i)] = curves[i].slope(z[static_cast<Eigen::Index>(i)]);
  }
  return g;
}

ConvexPotential convex_potential(const SemiDiscretePotential& potential, const Vec& z0,
                                 double offset) {
  if (z0.size() != potential.dim) throw ValidationError("convex_potential: z0 dimension mismatch");
  MaxAffine f{potential.atoms, potential.psi, 0.0};
  const ConvexPotential raw(f);
  f.shift = offset - raw(z0);
  return ConvexPotential(std::move(f));
}

ConvexPotential oplus_rearrangement(std::vector<ConvexCurve1D> curves) {
  if (curves.empty()) throw ValidationError("oplus_rearrangement: no curves");
  return ConvexPotential(Separable{std::move(curves)});
}

void write_potential_csv(std::ostream& os, const SemiDiscretePotential& potential) {
  const auto old = os.precision(17);
  for (int i = 0; i < potential.dim; ++i) os << "y" << (i + 1) << ",";
  os << "psi\n";
  for (Eigen::Index j = 0; j < potential.atoms.cols(); ++j) {
    for (int i = 0; i < potential.dim; ++i) os << potential.atoms(i, j) << ",";
    os << potential.psi[j] << "\n";
  }
  os.precision(old);
}

void write_potential_grid_csv(std::ostream& os, const ConvexPotential& phi, int dim, int points) {
  if (points < 2) throw ValidationError("write_potential_grid_csv: need at least 2 points");
  if (dim != phi.dim()) throw ValidationError("write_potential_grid_csv: dimension mismatch");
  const auto old = os.precision(17);
  for (int i = 0; i < dim; ++i) os << "z" << (i + 1) << ",";
  os << "phi\n";
  std::vector<int> idx(dim, 0);
  Vec z(dim);
  while (true) {
    for (int i = 0; i < dim; ++i) z[i] = static_cast<double>(idx[i]) / (points - 1);
    for (int i = 0; i < dim; ++i) os << z[i] << ",";
    os << phi(z) << "\n";
    int i = dim - 1;
    while (i >= 0 && ++idx[i] == points) {
      idx[i] = 0;
      --i;
    }
    if (i < 0) break;
  }
  os.precision(old);
}

}  // namespace rearrange
