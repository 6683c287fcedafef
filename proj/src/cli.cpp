#include "rearrange/cli.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "rearrange/errors.hpp"
#include "rearrange/fields.hpp"
#include "rearrange/geometry.hpp"
#include "rearrange/io.hpp"
#include "rearrange/limits.hpp"
#include "rearrange/rearrange1d.hpp"
#include "rearrange/rng.hpp"
#include "rearrange/transport.hpp"

namespace rearrange {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw InputError("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw InputError("config: '" + key + "' expects an integer, got '" + v + "'");
  }
}

bool one_dimensional(const std::string& model) {
  return model == "brownian" || model == "fbm" || model == "sawtooth";
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool dim_given = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    c.entries[key] = value;
    if (key == "model") {
      c.model = value;
    } else if (key == "builtin") {
      if (value != "sawtooth") throw CatalogError("config: unknown builtin '" + value + "'");
      c.model = "sawtooth";
    } else if (key == "alpha") {
      c.alpha = to_double(key, value);
    } else if (key == "dim") {
      c.dim = static_cast<int>(to_int(key, value));
      dim_given = true;
    } else if (key == "germ") {
      c.germ = value;
    } else if (key == "levels") {
      c.levels.clear();
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) c.levels.push_back(static_cast<int>(to_int(key, trim(item))));
    } else if (key == "schedule") {
      c.schedule = value;
    } else if (key == "seeds") {
      c.seeds = static_cast<int>(to_int(key, value));
    } else if (key == "master_seed") {
      c.master_seed = static_cast<std::uint64_t>(to_int(key, value));
    } else if (key == "spec") {
      c.spec = value;
    } else if (key == "subsample") {
      c.subsample = static_cast<std::size_t>(to_int(key, value));
    } else if (key == "tol") {
      c.tol = to_double(key, value);
    } else if (key.rfind("threshold.", 0) == 0) {
      c.thresholds[key.substr(10)] = to_double(key, value);
    } else {
      throw InputError("config: unknown key '" + key + "'");
    }
  }
  if (one_dimensional(c.model)) {
    c.dim = 1;
  } else if (c.model == "additive") {
    c.dim = 2;
  } else if (!dim_given) {
    c.dim = 2;
  }
  if (c.model != "sawtooth") model_by_name(c.model, c.alpha, c.dim);  // catalog check
  germ_by_name(c.germ_name());
  if (!c.spec_name().empty()) limit_by_name(c.spec_name());
  if (c.levels.empty()) throw InputError("config: no levels");
  for (int n : c.levels) {
    if (n < 2) throw ValidationError("config: every level must be >= 2");
  }
  if (c.seeds < 1) throw ValidationError("config: seeds must be >= 1");
  if (!(c.tol > 0.0)) throw ValidationError("config: tol must be positive");
  c.make_schedule();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path));
}

std::string ExperimentConfig::hash() const {
  auto e = entries;
  e["master_seed"] = std::to_string(master_seed);
  return config_hash(e);
}

std::string ExperimentConfig::germ_name() const {
  if (!germ.empty()) return germ;
  if (dim == 1) return "standard-1d";
  if (model == "additive") return "rotated-2d";
  return "standard-2d";
}

std::string ExperimentConfig::spec_name() const {
  if (!spec.empty()) return spec;
  if (model == "brownian" || model == "fbm") return "gl1";
  if (model == "levy") return "levy" + std::to_string(dim);
  if (model == "chentsov") return "chentsov2-standard";
  if (model == "additive") return schedule == "paper" ? "additive-rotated-paper" : "additive-rotated";
  return "";
}

std::string ExperimentConfig::experiment() const {
  std::ostringstream os;
  os << model;
  if (model == "fbm") os << alpha;
  if (!spec_name().empty()) os << "-vs-" << spec_name();
  return os.str();
}

RenormalizationSchedule ExperimentConfig::make_schedule() const {
  if (schedule == "catalog" || schedule == "paper") {
    return bn_schedule(model, alpha, schedule == "paper");
  }
  if (schedule == "none") return RenormalizationSchedule::identity();
  if (schedule == "sigma") {
    const FieldModel m = model_by_name(model, alpha, dim);
    if (!m.sigma2) throw ValidationError("config: sigma schedule needs a 1-D model");
    return RenormalizationSchedule::sigma(m.sigma2);
  }
  if (schedule.rfind("power:", 0) == 0) {
    const auto rest = schedule.substr(6);
    const auto colon = rest.find(':');
    if (colon == std::string::npos) throw InputError("config: schedule power:<c>:<beta>");
    return RenormalizationSchedule::power(to_double("schedule", rest.substr(0, colon)),
                                          to_double("schedule", rest.substr(colon + 1)));
  }
  throw CatalogError("config: unknown schedule '" + schedule +
                     "'; supported: catalog paper sigma none power:<c>:<beta>");
}

double ExperimentConfig::threshold(const std::string& metric) const {
  if (auto it = thresholds.find(metric); it != thresholds.end()) return it->second;
  if (metric == "cf") return 0.06;
  if (metric == "ks") return 0.05;
  if (metric == "curve") return dim == 1 ? 0.05 : 0.08;
  if (metric == "cov") return 0.05;
  if (metric == "angle") return 5.0;
  if (metric == "cloud") return 1e-14;
  if (metric == "exact") return 1e-14;
  if (metric == "residual") return std::max(tol, 1e-8);
  throw CatalogError("unknown metric '" + metric + "'");
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, count); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

struct Level {
  int n = 0;
  RefinementCells cells;
  std::optional<FieldSampler> sampler;
  double b = 1.0;
};

Level setup_level(const ExperimentConfig& c, int n) {
  Level l;
  l.n = n;
  const GermOfTriangulation germ = germ_by_name(c.germ_name());
  if (germ.dim() != c.dim) throw ValidationError("config: germ dimension does not match the model");
  l.cells = enumerate_interior_cells(germ, n, Domain(c.dim));
  l.b = c.make_schedule()(n);
  if (c.model != "sawtooth") {
    const FieldModel model = model_by_name(c.model, c.alpha, c.dim);
    l.sampler.emplace(FieldSampler::for_model(model, l.cells.vertices));
  }
  return l;
}

FieldSample draw(const ExperimentConfig& c, const Level& l, std::size_t r) {
  if (c.model == "sawtooth") return sawtooth_sample(l.n);
  return l.sampler->sample(c.master_seed, r);
}

// X(z0) / b_n with z0 the origin.
double pinned_offset(const FieldSample& s, double b) {
  for (std::size_t k = 0; k < s.vertices.size(); ++k) {
    if (s.vertices[k].norm() <= 1e-12) return s.values[k] / b;
  }
  throw InputError("sample has no value at the origin");
}

double quantile_90(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto k = static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(v.size()))) - 1;
  return v[std::min(k, v.size() - 1)];
}

std::string stem(const ExperimentConfig& c, int n, std::size_t r) {
  return c.model + "_n" + std::to_string(n) + "_r" + std::to_string(r);
}

}  // namespace

int cmd_simulate(const ExperimentConfig& c, const RunOptions& o) {
  const std::string hash = c.hash();
  for (int n : c.levels) {
    const Level l = setup_level(c, n);
    parallel_for(static_cast<std::size_t>(c.seeds), o.threads, [&](std::size_t r) {
      const FieldSample s = draw(c, l, r);
      std::ostringstream os;
      write_provenance(os, hash, c.master_seed, r);
      write_sample_csv(os, s);
      write_file(o.out / "simulate" / (stem(c, n, r) + ".csv"), os.str());
    });
  }
  return 0;
}

int cmd_rearrange(const ExperimentConfig& c, const RunOptions& o) {
  const std::string hash = c.hash();
  for (int n : c.levels) {
    const Level l = setup_level(c, n);
    parallel_for(static_cast<std::size_t>(c.seeds), o.threads, [&](std::size_t r) {
      const FieldSample s = draw(c, l, r);
      const GradientAtomCloud cloud = build_cloud(s, l.cells, c.make_schedule());
      const double offset = pinned_offset(s, l.b);
      const auto dir = o.out / "rearrange";
      {
        std::ostringstream os;
        write_provenance(os, hash, c.master_seed, r);
        write_cloud_csv(os, cloud);
        write_file(dir / ("cloud_" + stem(c, n, r) + ".csv"), os.str());
      }
      if (c.dim == 1) {
        const ConvexCurve1D curve = convex_rearrange_1d(monotone_rearrange_1d(cloud), offset, 0.0);
        std::ostringstream os;
        write_provenance(os, hash, c.master_seed, r);
        write_curve_csv(os, curve, 1001);
        write_file(dir / ("curve_" + stem(c, n, r) + ".csv"), os.str());
        return;
      }
      TransportOptions topt;
      topt.tol = c.tol;
      const GradientAtomCloud target = stratified_subsample(cloud, c.subsample, c.master_seed, r);
      const SemiDiscretePotential pot = solve_semidiscrete(target, Domain(c.dim), topt);
      const ConvexPotential phi = convex_potential(pot, Vec::Zero(c.dim), offset);
      {
        std::ostringstream os;
        write_provenance(os, hash, c.master_seed, r);
        write_potential_csv(os, pot);
        write_file(dir / ("potential_" + stem(c, n, r) + ".csv"), os.str());
      }
      {
        std::ostringstream os;
        write_provenance(os, hash, c.master_seed, r);
        write_potential_grid_csv(os, phi, c.dim, c.dim == 2 ? 101 : 11);
        write_file(dir / ("grid_" + stem(c, n, r) + ".csv"), os.str());
      }
      ConvergenceReport rep;
      rep.experiment = c.experiment();
      rep.metric = "residual";
      rep.value = pot.residual;
      rep.threshold = c.threshold("residual");
      rep.pass = rep.value <= rep.threshold;
      rep.level = n;
      rep.sample_size = pot.size();
      rep.seeds = {r};
      rep.config_hash = hash;
      rep.master_seed = c.master_seed;
      write_file(dir / ("transport_" + stem(c, n, r) + ".json"), rep.to_json() + "\n");
    });
  }
  return 0;
}

std::vector<ConvergenceReport> verify_reports(const ExperimentConfig& c, int threads) {
  std::optional<LimitMeasureSpec> spec;
  if (!c.spec_name().empty()) spec = limit_by_name(c.spec_name());
  if (spec && spec->dim != c.dim) throw ValidationError("config: spec dimension does not match");
  const std::string hash = c.hash();
  const auto seeds = static_cast<std::size_t>(c.seeds);
  std::vector<std::uint64_t> seed_list;
  for (std::size_t r = 0; r < seeds; ++r) seed_list.push_back(r);

  std::vector<ConvergenceReport> reports;
  for (int n : c.levels) {
    const Level l = setup_level(c, n);
    auto add = [&](const std::string& metric, double value, std::size_t size) {
      ConvergenceReport rep;
      rep.experiment = c.experiment();
      rep.metric = metric;
      rep.value = value;
      rep.threshold = c.threshold(metric);
      rep.pass = value <= rep.threshold;
      rep.level = n;
      rep.sample_size = size;
      rep.seeds = seed_list;
      rep.config_hash = hash;
      rep.master_seed = c.master_seed;
      reports.push_back(std::move(rep));
    };

    std::vector<GradientAtomCloud> clouds(seeds);
    std::vector<double> offsets(seeds);
    parallel_for(seeds, threads, [&](std::size_t r) {
      const FieldSample s = draw(c, l, r);
      clouds[r] = build_cloud(s, l.cells, c.make_schedule());
      offsets[r] = pinned_offset(s, l.b);
    });

    if (c.model == "sawtooth") {
      const auto& cloud = clouds.front();
      double dev = 0.0;
      double minus = 0.0;
      for (std::size_t j = 0; j < cloud.size(); ++j) {
        const double y = cloud.atoms(0, static_cast<Eigen::Index>(j));
        dev = std::max(dev, std::abs(std::abs(y) - 1.0));
        if (y < 0.0) minus += cloud.weights[j];
      }
      add("cloud", std::max(dev, std::abs(minus - 0.5)), cloud.size());
      const ConvexCurve1D curve = convex_rearrange_1d(monotone_rearrange_1d(cloud), offsets[0], 0.0);
      double err = 0.0;
      for (int i = 0; i <= 1000; ++i) {
        const double x = i / 1000.0;
        err = std::max(err, std::abs(curve(x) - (std::abs(x - 0.5) - 0.5)));
      }
      add("exact", err, 1001);
      continue;
    }

    const GradientAtomCloud pooled = pool_clouds(clouds);
    add("cf", cf_sup_error(pooled, *spec, default_h_grid(c.dim)), pooled.size());

    if (c.dim == 1) {
      std::vector<double> ks(seeds);
      std::vector<double> curve(seeds);
      // For fBm the pinned end value X(1)/b_n is of order n^{alpha/2 - 1}, so the
      // curve check is only meaningful at alpha = 1.
      const bool curve_metric = spec->potential && (c.model != "fbm" || c.alpha == 1.0);
      const auto grid = interior_grid(1, 1001);
      parallel_for(seeds, threads, [&](std::size_t r) {
        ks[r] = ks_distance(clouds[r], 0, [&](double t) { return spec->marginal_cdf(0, t); });
        if (curve_metric) {
          const ConvexCurve1D cc =
              convex_rearrange_1d(monotone_rearrange_1d(clouds[r]), offsets[r], 0.0);
          curve[r] = curve_sup_error([&](const Vec& z) { return cc(z[0]); }, spec->potential, grid);
        }
      });
      add("ks", quantile_90(ks), seeds);
      if (curve_metric) add("curve", quantile_90(curve), seeds);
      continue;
    }

    add("ks", ks_distance(pooled, 0, [&](double t) { return spec->marginal_cdf(0, t); }),
        pooled.size());
    if (const auto* g = std::get_if<FixedGaussian>(&spec->law)) {
      const Mat& u = l.cells.simplex_bases.front();
      Mat avg = Mat::Zero(c.dim, c.dim);
      for (const auto& cl : clouds) avg += per_simplex_covariance(cl, 0, u);
      avg /= static_cast<double>(seeds);
      add("cov", correlation_error(avg, g->lambda), seeds);
      if (c.dim == 2) {
        Eigen::SelfAdjointEigenSolver<Mat> ea(avg);
        Eigen::SelfAdjointEigenSolver<Mat> eb(g->lambda);
        const double cosang = std::abs(ea.eigenvectors().col(1).dot(eb.eigenvectors().col(1)));
        add("angle", std::acos(std::min(1.0, cosang)) * 180.0 / std::numbers::pi, seeds);
      }
    }
    if (spec->potential) {
      TransportOptions topt;
      topt.tol = c.tol;
      const GradientAtomCloud target = stratified_subsample(pooled, c.subsample, c.master_seed, 0);
      const SemiDiscretePotential pot = solve_semidiscrete(target, Domain(c.dim), topt);
      add("residual", pot.residual, pot.size());
      const ConvexPotential phi = convex_potential(pot, Vec::Zero(c.dim), 0.0);
      add("curve",
          curve_sup_error([&](const Vec& z) { return phi(z); }, spec->potential,
                          interior_grid(c.dim, c.dim == 2 ? 101 : 11)),
          pot.size());
    }
  }
  return reports;
}

int cmd_verify(const ExperimentConfig& c, const RunOptions& o) {
  const auto reports = verify_reports(c, o.threads);
  int failed = 0;
  for (const auto& rep : reports) {
    failed += rep.pass ? 0 : 1;
    write_file(o.out / "verify" /
                   (rep.experiment + "_n" + std::to_string(rep.level) + "_" + rep.metric + ".json"),
               rep.to_json() + "\n");
  }
  return std::min(failed, 125);
}

int cmd_report(const std::filesystem::path& dir, std::ostream& table) {
  if (!std::filesystem::is_directory(dir)) throw InputError("report: '" + dir.string() + "' is not a directory");
  std::vector<ConvergenceReport> reports;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
    reports.push_back(ConvergenceReport::from_json(read_file(entry.path())));
  }
  std::sort(reports.begin(), reports.end(), [](const auto& a, const auto& b) {
    return std::tie(a.experiment, a.level, a.seeds, a.metric) <
           std::tie(b.experiment, b.level, b.seeds, b.metric);
  });
  int failed = 0;
  const auto old = table.precision(17);
  table << "experiment,n,seeds,metric,value,threshold,pass\n";
  for (const auto& r : reports) {
    std::string seeds;
    for (std::size_t i = 0; i < r.seeds.size(); ++i) seeds += (i ? " " : "") + std::to_string(r.seeds[i]);
    table << csv_field(r.experiment) << "," << r.level << "," << csv_field(seeds) << ","
          << csv_field(r.metric) << "," << r.value << "," << r.threshold << ","
          << (r.pass ? "true" : "false") << "\n";
    failed += r.pass ? 0 : 1;
  }
  table.precision(old);
  return std::min(failed, 125);
}

}  // namespace rearrange
