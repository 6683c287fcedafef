#include "rearrange/fields.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "rearrange/errors.hpp"

namespace rearrange {

namespace {

constexpr double kPsdTol = 1e-8;

std::vector<double> standard_normals(Engine& engine, std::size_t n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(n);
  for (auto& v : z) v = normal(engine);
  return z;
}

// Lower-triangular factor F with P^T F F^T P = A. Rows of degenerate
// (zero-variance) points are handled by the caller.
struct LowerFactor {
  Mat lower;
  std::vector<int> row_of;  // output index of factor row i

  Vec apply(const Vec& z) const {
    const Vec y = lower.triangularView<Eigen::Lower>() * z;
    Vec x(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) x[row_of[i]] = y[i];
    return x;
  }
};

LowerFactor factor_psd(const Mat& a) {
  const auto n = a.rows();
  LowerFactor f;
  f.row_of.resize(n);
  Eigen::LLT<Mat> llt(a);
  if (llt.info() == Eigen::Success) {
    f.lower = llt.matrixL();
    for (Eigen::Index i = 0; i < n; ++i) f.row_of[i] = static_cast<int>(i);
    return f;
  }
  // Semidefinite or slightly indefinite: Cholesky with diagonal pivoting,
  // stopped at the numerical rank. The leftover Schur complement must vanish
  // within tolerance, otherwise A has a negative eigenvalue.
  const double tol = kPsdTol * std::max(a.trace(), 1e-300);
  Mat w = a;
  Mat l = Mat::Zero(n, n);
  Vec d = a.diagonal();
  Eigen::VectorXi piv = Eigen::VectorXi::LinSpaced(n, 0, static_cast<int>(n - 1));
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index p = 0;
    const double dmax = d.tail(n - k).maxCoeff(&p);
    p += k;
    if (dmax <= tol) break;
    if (p != k) {
      std::swap(d[k], d[p]);
      std::swap(piv[k], piv[p]);
      w.row(k).swap(w.row(p));
      w.col(k).swap(w.col(p));
      l.row(k).swap(l.row(p));
    }
    const double lkk = std::sqrt(d[k]);
    l(k, k) = lkk;
    const Eigen::Index m = n - k - 1;
    if (m > 0) {
      l.col(k).tail(m) =
          (w.col(k).tail(m) - l.block(k + 1, 0, m, k) * l.row(k).head(k).transpose()) / lkk;
      d.tail(m) -= l.col(k).tail(m).cwiseAbs2();
    }
    rank = k + 1;
  }
  const Eigen::Index rest = n - rank;
  if (rest > 0) {
    const Mat lb = l.bottomLeftCorner(rest, rank);
    const Mat schur = w.bottomRightCorner(rest, rest) - lb * lb.transpose();
    const double worst = schur.cwiseAbs().maxCoeff();
    if (worst > tol) {
      std::ostringstream os;
      os << "covariance is not positive semidefinite (residual " << worst << ", tolerance " << tol
         << ")";
      throw ModelError(os.str());
    }
  }
  f.lower = std::move(l);
  for (Eigen::Index i = 0; i < n; ++i) f.row_of[i] = piv[i];
  return f;
}

}  // namespace

Mat psd_factor(const Mat& a) {
  if (a.rows() != a.cols()) throw ValidationError("psd_factor: matrix must be square");
  const LowerFactor f = factor_psd(a);
  Mat out(a.rows(), a.cols());
  const Mat l = f.lower.triangularView<Eigen::Lower>();
  for (Eigen::Index i = 0; i < a.rows(); ++i) out.row(f.row_of[i]) = l.row(i);
  return out;
}

namespace {

std::string format_param(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

FieldModel model_brownian() {
  FieldModel m;
  m.name = "brownian";
  m.kind = ModelKind::Brownian;
  m.dim = 1;
  m.alpha = 1.0;
  m.covariance = [](const Vec& s, const Vec& t) { return std::min(s[0], t[0]); };
  m.sigma2 = [](double t) { return std::abs(t); };
  m.theta_descriptor = "diagonal s = t";
  return m;
}

FieldModel model_fbm(double alpha) {
  if (!(alpha > 0.0 && alpha < 2.0)) {
    throw ValidationError("model_fbm: alpha must lie in (0, 2)");
  }
  FieldModel m;
  m.name = "fbm(" + format_param(alpha) + ")";
  m.kind = ModelKind::FractionalBrownian;
  m.dim = 1;
  m.alpha = alpha;
  m.covariance = [alpha](const Vec& s, const Vec& t) {
    return 0.5 * (std::pow(std::abs(s[0]), alpha) + std::pow(std::abs(t[0]), alpha) -
                  std::pow(std::abs(s[0] - t[0]), alpha));
  };
  m.sigma2 = [alpha](double t) { return std::pow(std::abs(t), alpha); };
  m.theta_descriptor = "diagonal s = t";
  return m;
}

FieldModel model_levy(int d) {
  if (d < 1) throw ValidationError("model_levy: dimension must be positive");
  FieldModel m;
  m.name = "levy(" + std::to_string(d) + ")";
  m.kind = ModelKind::Levy;
  m.dim = d;
  m.covariance = [](const Vec& z, const Vec& zeta) {
    return 0.5 * (z.norm() + zeta.norm() - (z - zeta).norm());
  };
  if (d == 1) m.sigma2 = [](double t) { return std::abs(t); };
  m.theta_descriptor = "diagonal z = zeta";
  return m;
}

FieldModel model_chentsov(int d) {
  if (d < 1) throw ValidationError("model_chentsov: dimension must be positive");
  FieldModel m;
  m.name = "chentsov(" + std::to_string(d) + ")";
  m.kind = ModelKind::Chentsov;
  m.dim = d;
  m.covariance = [](const Vec& z, const Vec& zeta) {
    double p = 1.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) p *= std::min(z[i], zeta[i]);
    return p;
  };
  if (d == 1) m.sigma2 = [](double t) { return std::abs(t); };
  m.theta_descriptor = "union of coordinate equalities z_i = zeta_i";
  return m;
}

FieldModel model_additive() {
  FieldModel m;
  m.name = "additive";
  m.kind = ModelKind::Additive;
  m.dim = 2;
  m.covariance = [](const Vec& z, const Vec& w) {
    return std::min(z[0], w[0]) + std::min(z[0], w[1]) + std::min(z[1], w[0]) +
           std::min(z[1], w[1]);
  };
  m.theta_descriptor = "union of x = x', x = y', y = x', y = y'";
  return m;
}

std::vector<std::string> model_catalog() {
  return {"brownian", "fbm", "levy", "chentsov", "additive"};
}

FieldModel model_by_name(const std::string& name, double alpha, int d) {
  if (name == "brownian") return model_brownian();
  if (name == "fbm") return model_fbm(alpha);
  if (name == "levy") return model_levy(d);
  if (name == "chentsov") return model_chentsov(d);
  if (name == "additive") return model_additive();
  std::string msg = "unknown field model '" + name + "'; supported models:";
  for (const auto& n : model_catalog()) msg += " " + n;
  throw CatalogError(msg);
}

FieldSample FieldSampler::sample(std::uint64_t seed, std::uint64_t replicate) const {
  Engine engine = make_engine(model_name_, seed, replicate);
  FieldSample s;
  s.vertices = points_;
  s.values = draw_(engine);
  s.seed = seed;
  s.replicate = replicate;
  s.model = model_name_;
  return s;
}

FieldSampler FieldSampler::path_1d(const FieldModel& model, std::vector<double> grid) {
  if (model.dim != 1 || !model.sigma2) {
    throw ValidationError("path_1d: model must be a 1-D field with stationary increments");
  }
  if (grid.empty()) throw ValidationError("path_1d: empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 0.0 || grid[i] > 1.0) throw ValidationError("path_1d: grid outside [0,1]");
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw ValidationError("path_1d: grid must be strictly increasing");
    }
  }
  FieldSampler s;
  s.model_name_ = model.name;
  for (double t : grid) s.points_.push_back(Vec::Constant(1, t));

  // Knots 0 = t_0 < t_1 < ... ; X(0) = 0.
  std::vector<double> knots;
  const bool prepend = grid.front() > 0.0;
  if (prepend) knots.push_back(0.0);
  knots.insert(knots.end(), grid.begin(), grid.end());
  const std::size_t m = knots.size() - 1;  // increments

  if (model.kind == ModelKind::Brownian) {
    s.method_ = "brownian-increments";
    std::vector<double> sd(m);
    for (std::size_t k = 0; k < m; ++k) sd[k] = std::sqrt(knots[k + 1] - knots[k]);
    s.draw_ = [sd, prepend](Engine& engine) {
      const auto z = standard_normals(engine, sd.size());
      std::vector<double> x;
      x.reserve(sd.size() + 1);
      double acc = 0.0;
      if (!prepend) x.push_back(0.0);
      for (std::size_t k = 0; k < sd.size(); ++k) {
        acc += sd[k] * z[k];
        x.push_back(acc);
      }
      return x;
    };
    return s;
  }

  if (m > kMaxPathIncrements) {
    throw ResourceError("path_1d: dense sampler limited to " +
                        std::to_string(kMaxPathIncrements) + " increments");
  }
  s.method_ = "dense-increment-factorization";
  const auto sig = model.sigma2;
  Mat c(m, m);
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t j = 0; j <= k; ++j) {
      const double v = 0.5 * (sig(knots[k + 1] - knots[j]) + sig(knots[k] - knots[j + 1]) -
                              sig(knots[k + 1] - knots[j + 1]) - sig(knots[k] - knots[j]));
      c(k, j) = v;
      c(j, k) = v;
    }
  }
  auto factor = std::make_shared<LowerFactor>(factor_psd(c));
  s.draw_ = [factor, m, prepend](Engine& engine) {
    const auto z = standard_normals(engine, m);
    const Vec inc = factor->apply(Eigen::Map<const Vec>(z.data(), static_cast<Eigen::Index>(m)));
    std::vector<double> x;
    x.reserve(m + 1);
    double acc = 0.0;
    if (!prepend) x.push_back(0.0);
    for (std::size_t k = 0; k < m; ++k) {
      acc += inc[static_cast<Eigen::Index>(k)];
      x.push_back(acc);
    }
    return x;
  };
  return s;
}

FieldSampler FieldSampler::chentsov_grid(int m) {
  if (m < 1) throw ValidationError("chentsov_grid: m must be >= 1");
  FieldSampler s;
  s.model_name_ = model_chentsov(2).name;
  s.method_ = "chentsov-rectangle-sums";
  for (int i = 0; i <= m; ++i) {
    for (int j = 0; j <= m; ++j) {
      Vec p(2);
      p << static_cast<double>(i) / m, static_cast<double>(j) / m;
      s.points_.push_back(std::move(p));
    }
  }
  s.draw_ = [m](Engine& engine) {
    const auto z = standard_normals(engine, static_cast<std::size_t>(m) * m);
    const double sd = 1.0 / m;
    const int w = m + 1;
    std::vector<double> x(static_cast<std::size_t>(w) * w, 0.0);
    // X(i,j) = sum over unit rectangles [a,a+1]x[b,b+1] with a < i, b < j
    for (int i = 1; i <= m; ++i) {
      for (int j = 1; j <= m; ++j) {
        const double xi = sd * z[static_cast<std::size_t>(i - 1) * m + (j - 1)];
        x[i * w + j] = xi + x[(i - 1) * w + j] + x[i * w + (j - 1)] - x[(i - 1) * w + (j - 1)];
      }
    }
    return x;
  };
  return s;
}

FieldSampler FieldSampler::additive(std::vector<Vec> points) {
  std::vector<double> coords{0.0};
  for (const auto& p : points) {
    if (p.size() != 2) throw ValidationError("additive: points must be 2-D");
    for (int i = 0; i < 2; ++i) {
      if (p[i] < 0.0 || p[i] > 1.0) throw ValidationError("additive: point outside [0,1]^2");
      coords.push_back(p[i]);
    }
  }
  std::sort(coords.begin(), coords.end());
  coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
  std::vector<std::array<std::size_t, 2>> index(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    for (int i = 0; i < 2; ++i) {
      index[k][i] = static_cast<std::size_t>(
          std::lower_bound(coords.begin(), coords.end(), points[k][i]) - coords.begin());
    }
  }
  FieldSampler s;
  s.model_name_ = model_additive().name;
  s.method_ = "additive-single-path";
  s.points_ = std::move(points);
  s.draw_ = [coords, index](Engine& engine) {
    const auto z = standard_normals(engine, coords.size() - 1);
    std::vector<double> w(coords.size(), 0.0);
    for (std::size_t k = 1; k < coords.size(); ++k) {
      w[k] = w[k - 1] + std::sqrt(coords[k] - coords[k - 1]) * z[k - 1];
    }
    std::vector<double> x(index.size());
    for (std::size_t k = 0; k < index.size(); ++k) x[k] = w[index[k][0]] + w[index[k][1]];
    return x;
  };
  return s;
}

FieldSampler FieldSampler::generic(const FieldModel& model, std::vector<Vec> points) {
  const std::size_t n = points.size();
  if (n == 0) throw ValidationError("generic: empty point set");
  if (n > kMaxDensePoints) {
    throw ResourceError("generic: dense sampler limited to " + std::to_string(kMaxDensePoints) +
                        " points, got " + std::to_string(n));
  }
  for (const auto& p : points) {
    if (p.size() != model.dim) throw ValidationError("generic: point dimension mismatch");
  }
  Mat gram(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = model.cov(points[i], points[j]);
      gram(i, j) = v;
      gram(j, i) = v;
    }
  }
  const double tol = kPsdTol * std::max(gram.trace(), 1e-300);
  // Zero-variance points (e.g. the origin for Levy and Chentsov fields) are
  // pinned to 0; PSD forces their whole row to vanish.
  std::vector<int> active;
  for (std::size_t i = 0; i < n; ++i) {
    if (gram(i, i) > tol) {
      active.push_back(static_cast<int>(i));
    } else if (gram(i, i) < -tol) {
      throw ModelError("generic: negative variance at a sample point");
    }
  }
  Mat sub(active.size(), active.size());
  for (std::size_t a = 0; a < active.size(); ++a) {
    for (std::size_t b = 0; b < active.size(); ++b) sub(a, b) = gram(active[a], active[b]);
  }
  auto factor = std::make_shared<LowerFactor>(factor_psd(sub));

  FieldSampler s;
  s.model_name_ = model.name;
  s.method_ = "dense-gram-factorization";
  s.points_ = std::move(points);
  s.draw_ = [factor, active, n](Engine& engine) {
    const auto z = standard_normals(engine, active.size());
    const Vec y =
        factor->apply(Eigen::Map<const Vec>(z.data(), static_cast<Eigen::Index>(active.size())));
    std::vector<double> x(n, 0.0);
    for (std::size_t a = 0; a < active.size(); ++a) x[active[a]] = y[static_cast<Eigen::Index>(a)];
    return x;
  };
  return s;
}

FieldSampler FieldSampler::for_model(const FieldModel& model, std::vector<Vec> points) {
  switch (model.kind) {
    case ModelKind::Brownian:
    case ModelKind::FractionalBrownian: {
      std::vector<double> grid;
      for (const auto& p : points) grid.push_back(p[0]);
      if (std::is_sorted(grid.begin(), grid.end()) &&
          std::adjacent_find(grid.begin(), grid.end()) == grid.end()) {
        return path_1d(model, std::move(grid));
      }
      break;
    }
    case ModelKind::Additive:
      return additive(std::move(points));
    case ModelKind::Chentsov: {
      if (model.dim != 2) break;
      const auto side = static_cast<int>(std::llround(std::sqrt(static_cast<double>(points.size()))));
      if (side < 2 || static_cast<std::size_t>(side) * side != points.size()) break;
      FieldSampler grid = chentsov_grid(side - 1);
      bool same = true;
      for (std::size_t k = 0; k < points.size() && same; ++k) {
        same = (grid.points_[k] - points[k]).cwiseAbs().maxCoeff() <= 1e-12;
      }
      if (same) return grid;
      break;
    }
    case ModelKind::Levy:
      break;
  }
  return generic(model, std::move(points));
}

FieldSample sample_path_1d(const FieldModel& model, const std::vector<double>& grid,
                           std::uint64_t seed) {
  return FieldSampler::path_1d(model, grid).sample(seed);
}

FieldSample sample_chentsov_2d(int m, std::uint64_t seed) {
  return FieldSampler::chentsov_grid(m).sample(seed);
}

FieldSample sample_generic(const FieldModel& model, const std::vector<Vec>& points,
                           std::uint64_t seed) {
  return FieldSampler::generic(model, points).sample(seed);
}

FieldSample sawtooth_sample(int n) {
  if (n < 1) throw ValidationError("sawtooth_sample: n must be >= 1");
  FieldSample s;
  s.model = "sawtooth";
  for (int k = 0; k <= n; ++k) {
    s.vertices.push_back(Vec::Constant(1, static_cast<double>(k) / n));
    s.values.push_back(k % 2 == 0 ? 0.0 : 1.0 / n);
  }
  return s;
}

}  // namespace rearrange
