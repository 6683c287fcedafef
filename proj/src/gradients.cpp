#include "rearrange/gradients.hpp"

#include <cmath>
#include <algorithm>
#include <iomanip>
#include <random>
#include <istream>
#include <ostream>
#include <sstream>

#include "rearrange/errors.hpp"
#include "rearrange/numerics.hpp"
#include "rearrange/rng.hpp"

namespace rearrange {

RenormalizationSchedule RenormalizationSchedule::power(double c, double beta) {
  if (!(c > 0.0)) throw ValidationError("power schedule: c must be positive");
  RenormalizationSchedule s;
  s.rule_ = Rule::Power;
  s.c_ = c;
  s.beta_ = beta;
  return s;
}

RenormalizationSchedule RenormalizationSchedule::sigma(std::function<double(double)> sigma2) {
  if (!sigma2) throw ValidationError("sigma schedule: empty sigma function");
  RenormalizationSchedule s;
  s.rule_ = Rule::Sigma;
  s.sigma2_ = std::move(sigma2);
  return s;
}

RenormalizationSchedule RenormalizationSchedule::explicit_values(std::map<int, double> values) {
  for (const auto& [n, b] : values) {
    if (!(b > 0.0)) throw ValidationError("explicit schedule: b_n must be positive");
  }
  RenormalizationSchedule s;
  s.rule_ = Rule::Explicit;
  s.table_ = std::move(values);
  return s;
}

double RenormalizationSchedule::operator()(int n) const {
  if (n < 1) throw ValidationError("schedule: n must be >= 1");
  double b = 0.0;
  switch (rule_) {
    case Rule::Power:
      b = c_ * std::pow(static_cast<double>(n), beta_);
      break;
    case Rule::Sigma:
      b = n * std::sqrt(sigma2_(1.0 / n));
      break;
    case Rule::Explicit: {
      auto it = table_.find(n);
      if (it == table_.end()) {
        throw ValidationError("explicit schedule has no value for n = " + std::to_string(n));
      }
      b = it->second;
      break;
    }
  }
  if (!(b > 0.0) || !std::isfinite(b)) throw ValidationError("schedule produced b_n <= 0");
  return b;
}

std::string RenormalizationSchedule::describe() const {
  std::ostringstream os;
  switch (rule_) {
    case Rule::Power:
      os << "power(c=" << c_ << ",beta=" << beta_ << ")";
      break;
    case Rule::Sigma:
      os << "sigma";
      break;
    case Rule::Explicit:
      os << "explicit(" << table_.size() << " levels)";
      break;
  }
  return os.str();
}

std::vector<double> GradientAtomCloud::scalar_atoms() const {
  if (dim != 1) throw ValidationError("scalar_atoms: cloud is not 1-D");
  return coordinate(0);
}

std::vector<double> GradientAtomCloud::coordinate(int k) const {
  if (k < 0 || k >= dim) throw ValidationError("coordinate: index out of range");
  std::vector<double> out(size());
  for (std::size_t j = 0; j < size(); ++j) out[j] = atoms(k, static_cast<Eigen::Index>(j));
  return out;
}

GradientAtomCloud GradientAtomCloud::basis_view(int simplex) const {
  if (simplex < 0 || static_cast<std::size_t>(simplex) >= simplex_bases.size()) {
    throw ValidationError("basis_view: unknown simplex index");
  }
  const Mat& u = simplex_bases[static_cast<std::size_t>(simplex)];
  std::vector<Eigen::Index> picked;
  CompensatedSum mass;
  for (std::size_t j = 0; j < size(); ++j) {
    if (simplex_index[j] == simplex) {
      picked.push_back(static_cast<Eigen::Index>(j));
      mass += weights[j];
    }
  }
  if (picked.empty()) throw InputError("basis_view: simplex family has no atoms");
  GradientAtomCloud out;
  out.dim = dim;
  out.atoms.resize(dim, static_cast<Eigen::Index>(picked.size()));
  for (std::size_t a = 0; a < picked.size(); ++a) {
    out.atoms.col(static_cast<Eigen::Index>(a)) = u.transpose() * atoms.col(picked[a]);
    out.weights.push_back(weights[static_cast<std::size_t>(picked[a])] / mass.value());
    out.simplex_index.push_back(simplex);
    if (!offsets.empty()) out.offsets.push_back(offsets[static_cast<std::size_t>(picked[a])]);
  }
  out.simplex_bases = {Mat::Identity(dim, dim)};
  for (auto& s : out.simplex_index) s = 0;
  return out;
}

GradientAtomCloud make_cloud(Mat atoms, std::vector<double> weights) {
  const auto n = static_cast<std::size_t>(atoms.cols());
  if (n == 0) throw InputError("make_cloud: no atoms");
  if (weights.empty()) weights.assign(n, 1.0 / static_cast<double>(n));
  if (weights.size() != n) throw ValidationError("make_cloud: weight count mismatch");
  CompensatedSum total;
  for (double w : weights) {
    if (!(w > 0.0)) throw ValidationError("make_cloud: weights must be positive");
    total += w;
  }
  for (auto& w : weights) w /= total.value();
  GradientAtomCloud c;
  c.dim = static_cast<int>(atoms.rows());
  c.atoms = std::move(atoms);
  c.weights = std::move(weights);
  c.simplex_index.assign(n, 0);
  c.simplex_bases = {Mat::Identity(c.dim, c.dim)};
  return c;
}

namespace {

// Map from cell vertex id to sample value index.
std::vector<std::size_t> match_vertices(const FieldSample& sample, const RefinementCells& cells) {
  const std::size_t nv = cells.vertices.size();
  std::vector<std::size_t> index(nv);
  constexpr double kTol = 1e-9;
  if (sample.values.size() != sample.vertices.size()) {
    throw InputError("build_cloud: sample has " + std::to_string(sample.vertices.size()) +
                     " vertices but " + std::to_string(sample.values.size()) + " values");
  }
  bool direct = sample.vertices.size() == nv;
  for (std::size_t i = 0; i < nv && direct; ++i) {
    direct = sample.vertices[i].size() == cells.vertices[i].size() &&
             (sample.vertices[i] - cells.vertices[i]).cwiseAbs().maxCoeff() <= kTol;
    index[i] = i;
  }
  if (direct) return index;

  // Hash on a 1e-7 grid; probe neighbouring buckets so rounding never splits a match.
  const int d = cells.dim;
  constexpr double kScale = 1e7;
  std::map<std::vector<long long>, std::vector<std::size_t>> buckets;
  for (std::size_t s = 0; s < sample.vertices.size(); ++s) {
    if (sample.vertices[s].size() != d) throw InputError("build_cloud: sample dimension mismatch");
    std::vector<long long> key(d);
    for (int i = 0; i < d; ++i) key[i] = std::llround(sample.vertices[s][i] * kScale);
    buckets[key].push_back(s);
  }
  int probes = 1;
  for (int i = 0; i < d; ++i) probes *= 3;
  for (std::size_t v = 0; v < nv; ++v) {
    const Vec& p = cells.vertices[v];
    std::vector<long long> base(d);
    for (int i = 0; i < d; ++i) base[i] = std::llround(p[i] * kScale);
    bool found = false;
    for (int code = 0; code < probes && !found; ++code) {
      std::vector<long long> key = base;
      int c = code;
      for (int i = 0; i < d; ++i) {
        key[i] += c % 3 - 1;
        c /= 3;
      }
      auto it = buckets.find(key);
      if (it == buckets.end()) continue;
      for (std::size_t s : it->second) {
        if ((sample.vertices[s] - p).cwiseAbs().maxCoeff() <= kTol) {
          index[v] = s;
          found = true;
          break;
        }
      }
    }
    if (!found) {
      std::ostringstream os;
      os << "build_cloud: no sample value at cell vertex (" << p.transpose() << ")";
      throw InputError(os.str());
    }
  }
  return index;
}

}  // namespace

GradientAtomCloud build_cloud(const FieldSample& sample, const RefinementCells& cells,
                              const RenormalizationSchedule& schedule) {
  const std::vector<std::size_t> index = match_vertices(sample, cells);
  const int d = cells.dim;
  const double n = cells.level;
  const double b = schedule(cells.level);
  const auto count = static_cast<Eigen::Index>(cells.cells.size());

  GradientAtomCloud cloud;
  cloud.dim = d;
  cloud.atoms.resize(d, count);
  cloud.simplex_bases = cells.simplex_bases;
  const double total = cells.total_volume();
  Vec delta(d);
  for (Eigen::Index c = 0; c < count; ++c) {
    const Cell& cell = cells.cells[static_cast<std::size_t>(c)];
    const double apex = sample.values[index[static_cast<std::size_t>(cell.vertex_ids[0])]];
    for (int i = 0; i < d; ++i) {
      delta[i] = sample.values[index[static_cast<std::size_t>(cell.vertex_ids[i + 1])]] - apex;
    }
    // The level-n cell has edges E/n, so grad = n (E^T)^{-1} delta.
    const Mat& op = cells.gradient_operators[static_cast<std::size_t>(cell.simplex_index)];
    cloud.atoms.col(c) = (op * delta) * (n / b);
    cloud.weights.push_back(cell.volume / total);
    cloud.simplex_index.push_back(cell.simplex_index);
    cloud.offsets.push_back(cell.offset);
  }
  return cloud;
}

Mat per_simplex_covariance(const GradientAtomCloud& cloud, int simplex, const Mat& basis) {
  if (basis.rows() != cloud.dim || basis.cols() != cloud.dim) {
    throw ValidationError("per_simplex_covariance: basis has the wrong shape");
  }
  const int d = cloud.dim;
  Mat m = Mat::Zero(d, d);
  double mass = 0.0;
  for (std::size_t j = 0; j < cloud.size(); ++j) {
    if (cloud.simplex_index[j] != simplex) continue;
    const Vec y = basis.transpose() * cloud.atoms.col(static_cast<Eigen::Index>(j));
    m += cloud.weights[j] * (y * y.transpose());
    mass += cloud.weights[j];
  }
  if (mass <= 0.0) throw InputError("per_simplex_covariance: simplex family has no atoms");
  m /= mass;
  return 0.5 * (m + m.transpose());
}

Mat second_moment(const GradientAtomCloud& cloud) {
  Mat m = Mat::Zero(cloud.dim, cloud.dim);
  for (std::size_t j = 0; j < cloud.size(); ++j) {
    const auto y = cloud.atoms.col(static_cast<Eigen::Index>(j));
    m += cloud.weights[j] * (y * y.transpose());
  }
  return m;
}

std::complex<double> empirical_cf(const GradientAtomCloud& cloud, const Vec& h) {
  if (h.size() != cloud.dim) throw ValidationError("empirical_cf: h has the wrong dimension");
  CompensatedSum re;
  CompensatedSum im;
  for (std::size_t j = 0; j < cloud.size(); ++j) {
    const double t = h.dot(cloud.atoms.col(static_cast<Eigen::Index>(j)));
    re += cloud.weights[j] * std::cos(t);
    im += cloud.weights[j] * std::sin(t);
  }
  return {re.value(), im.value()};
}

namespace {

// Split `idx` into k consecutive groups of about equal mass along coordinate `axis`.
std::vector<std::vector<std::size_t>> equal_mass_split(std::vector<std::size_t> idx,
                                                       const GradientAtomCloud& c, int axis,
                                                       std::size_t k) {
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return c.atoms(axis, static_cast<Eigen::Index>(a)) < c.atoms(axis, static_cast<Eigen::Index>(b));
  });
  double total = 0.0;
  for (std::size_t i : idx) total += c.weights[i];
  std::vector<std::vector<std::size_t>> groups(k);
  double acc = 0.0;
  for (std::size_t i : idx) {
    const double mid = (acc + 0.5 * c.weights[i]) / total;
    const auto g = std::min(k - 1, static_cast<std::size_t>(mid * static_cast<double>(k)));
    groups[g].push_back(i);
    acc += c.weights[i];
  }
  return groups;
}

void stratify(const GradientAtomCloud& c, std::vector<std::size_t> idx, int axis, std::size_t count,
              Engine& engine, std::vector<std::size_t>& picked, std::vector<double>& mass) {
  if (idx.empty() || count == 0) return;
  const int remaining = c.dim - axis;
  if (remaining == 1) {
    for (auto& g : equal_mass_split(std::move(idx), c, axis, count)) {
      if (g.empty()) continue;
      std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
      picked.push_back(g[pick(engine)]);
      double m = 0.0;
      for (std::size_t i : g) m += c.weights[i];
      mass.push_back(m);
    }
    return;
  }
  const auto k = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(count), 1.0 / remaining))));
  auto groups = equal_mass_split(std::move(idx), c, axis, k);
  for (std::size_t g = 0; g < k; ++g) {
    const std::size_t share = count / k + (g < count % k ? 1 : 0);
    stratify(c, std::move(groups[g]), axis + 1, share, engine, picked, mass);
  }
}

}  // namespace

GradientAtomCloud stratified_subsample(const GradientAtomCloud& cloud, std::size_t keep,
                                       std::uint64_t seed, std::uint64_t replicate) {
  if (keep == 0 || keep >= cloud.size()) return cloud;
  Engine engine = make_engine("subsample", seed, replicate);
  std::vector<std::size_t> all(cloud.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::vector<std::size_t> picked;
  std::vector<double> mass;
  stratify(cloud, std::move(all), 0, keep, engine, picked, mass);
  Mat atoms(cloud.dim, static_cast<Eigen::Index>(picked.size()));
  for (std::size_t a = 0; a < picked.size(); ++a) {
    atoms.col(static_cast<Eigen::Index>(a)) = cloud.atoms.col(static_cast<Eigen::Index>(picked[a]));
  }
  GradientAtomCloud out = make_cloud(std::move(atoms), std::move(mass));
  for (std::size_t a = 0; a < picked.size(); ++a) out.simplex_index[a] = cloud.simplex_index[picked[a]];
  out.simplex_bases = cloud.simplex_bases;
  if (out.simplex_bases.empty()) out.simplex_bases = {Mat::Identity(cloud.dim, cloud.dim)};
  int max_index = 0;
  for (int s : out.simplex_index) max_index = std::max(max_index, s);
  while (static_cast<int>(out.simplex_bases.size()) <= max_index) {
    out.simplex_bases.push_back(Mat::Identity(cloud.dim, cloud.dim));
  }
  return out;
}

GradientAtomCloud pool_clouds(const std::vector<GradientAtomCloud>& clouds) {
  if (clouds.empty()) throw InputError("pool_clouds: nothing to pool");
  const int d = clouds.front().dim;
  Eigen::Index total = 0;
  for (const auto& c : clouds) {
    if (c.dim != d) throw ValidationError("pool_clouds: dimension mismatch");
    total += static_cast<Eigen::Index>(c.size());
  }
  GradientAtomCloud out;
  out.dim = d;
  out.atoms.resize(d, total);
  out.simplex_bases = clouds.front().simplex_bases;
  const double share = 1.0 / static_cast<double>(clouds.size());
  Eigen::Index at = 0;
  for (const auto& c : clouds) {
    const auto k = static_cast<Eigen::Index>(c.size());
    out.atoms.middleCols(at, k) = c.atoms;
    at += k;
    for (double w : c.weights) out.weights.push_back(w * share);
    out.simplex_index.insert(out.simplex_index.end(), c.simplex_index.begin(),
                             c.simplex_index.end());
    out.offsets.insert(out.offsets.end(), c.offsets.begin(), c.offsets.end());
  }
  return out;
}

void write_cloud_csv(std::ostream& os, const GradientAtomCloud& cloud) {
  const auto old = os.precision(17);
  for (int i = 0; i < cloud.dim; ++i) os << "y" << (i + 1) << ",";
  os << "weight,simplex_index\n";
  for (std::size_t j = 0; j < cloud.size(); ++j) {
    for (int i = 0; i < cloud.dim; ++i) os << cloud.atoms(i, static_cast<Eigen::Index>(j)) << ",";
    os << cloud.weights[j] << "," << cloud.simplex_index[j] << "\n";
  }
  os.precision(old);
}

GradientAtomCloud read_cloud_csv(std::istream& is) {
  std::string line;
  std::vector<std::vector<double>> rows;
  int dim = -1;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (dim < 0) {
      int commas = 0;
      for (char ch : line) commas += ch == ',';
      dim = commas - 1;
      if (dim < 1) throw InputError("read_cloud_csv: bad header '" + line + "'");
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw InputError("read_cloud_csv: bad number '" + cell + "'");
      }
    }
    if (static_cast<int>(row.size()) != dim + 2) {
      throw InputError("read_cloud_csv: wrong number of columns");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("read_cloud_csv: no atoms");
  GradientAtomCloud c;
  c.dim = dim;
  c.atoms.resize(dim, static_cast<Eigen::Index>(rows.size()));
  int max_simplex = 0;
  for (std::size_t j = 0; j < rows.size(); ++j) {
    for (int i = 0; i < dim; ++i) c.atoms(i, static_cast<Eigen::Index>(j)) = rows[j][i];
    c.weights.push_back(rows[j][dim]);
    c.simplex_index.push_back(static_cast<int>(rows[j][dim + 1]));
    max_simplex = std::max(max_simplex, c.simplex_index.back());
  }
  c.simplex_bases.assign(static_cast<std::size_t>(max_simplex + 1), Mat::Identity(dim, dim));
  return c;
}

}  // namespace rearrange
