// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "rearrange/cli.hpp"
#include "rearrange/diagnostics.hpp"
#include "rearrange/fields.hpp"
#include "rearrange/gradients.hpp"
#include "rearrange/limits.hpp"
#include "rearrange/numerics.hpp"
#include "rearrange/rearrange1d.hpp"
#include "rearrange/transport.hpp"

using namespace rearrange;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int id, bool pass, const std::string& detail, double seconds) {
  std::printf("%s criterion %d: %s [%.1f s]\n", pass ? "PASS" : "FAIL", id, detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++failures;
}

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::vector<double> unit_grid(int n) {
  std::vector<double> g;
  for (int k = 0; k <= n; ++k) g.push_back(static_cast<double>(k) / n);
  return g;
}

double phi_cdf(double t) { return normal_cdf(t); }

// Brownian motion: curve error and KS per seed.
void criterion1() {
  const auto t0 = Clock::now();
  const int n = 4096;
  const int seeds = 20;
  const auto cells = enumerate_interior_cells(standard_germ(1), n, Domain(1));
  const auto sampler = FieldSampler::path_1d(model_brownian(), unit_grid(n));
  const auto schedule = bn_schedule("brownian");
  const auto grid = interior_grid(1, 1001);
  int curve_ok = 0;
  double worst_ks = 0.0;
  double worst_curve = 0.0;
  for (int r = 0; r < seeds; ++r) {
    const auto s = sampler.sample(1, static_cast<std::uint64_t>(r));
    const auto cloud = build_cloud(s, cells, schedule);
    const auto c = convex_rearrange_1d(monotone_rearrange_1d(cloud), s.values[0] / schedule(n));
    const double e = curve_sup_error([&](const Vec& z) { return c(z[0]); },
                                     [](const Vec& z) { return lorenz_gl1(z[0]); }, grid);
    curve_ok += e <= 0.05;
    worst_curve = std::max(worst_curve, e);
    worst_ks = std::max(worst_ks, ks_distance(cloud, 0, phi_cdf));
  }
  const double secs = since(t0);
  const bool pass = curve_ok >= 18 && worst_ks <= 0.035 && secs < 10.0;
  report(1, pass,
         "brownian n=4096: curve<=0.05 on " + std::to_string(curve_ok) + "/20 seeds (max " +
             fmt("%.4f", worst_curve) + "), max KS " + fmt("%.4f", worst_ks) + " <= 0.035",
         secs);
}

// fBm: KS per seed for two exponents.
void criterion2() {
  const auto t0 = Clock::now();
  const int n = 2048;
  const auto cells = enumerate_interior_cells(standard_germ(1), n, Domain(1));
  bool pass = true;
  std::string detail = "fbm n=2048:";
  for (double alpha : {0.5, 1.2}) {
    const auto sampler = FieldSampler::path_1d(model_fbm(alpha), unit_grid(n));
    const auto schedule = bn_schedule("fbm", alpha);
    int ok = 0;
    double worst = 0.0;
    for (int r = 0; r < 20; ++r) {
      const auto cloud = build_cloud(sampler.sample(1, static_cast<std::uint64_t>(r)), cells, schedule);
      const double ks = ks_distance(cloud, 0, phi_cdf);
      ok += ks <= 0.05;
      worst = std::max(worst, ks);
    }
    pass = pass && ok >= 18;
    detail += " alpha=" + fmt("%.1f", alpha) + " KS<=0.05 on " + std::to_string(ok) + "/20 (max " +
              fmt("%.4f", worst) + ");";
  }
  const double secs = since(t0);
  report(2, pass && secs < 120.0, detail, secs);
}

struct FamilyStats {
  std::vector<Mat> averaged;  // seed-averaged covariance per germ simplex, in basis u
  GradientAtomCloud pooled;
  std::vector<Mat> bases;
};

FamilyStats gradient_family(const FieldModel& model, const GermOfTriangulation& germ, int n,
                            const RenormalizationSchedule& schedule, int seeds) {
  const auto cells = enumerate_interior_cells(germ, n, Domain(2));
  const auto sampler = FieldSampler::for_model(model, cells.vertices);
  FamilyStats out;
  out.bases = cells.simplex_bases;
  out.averaged.assign(cells.simplex_bases.size(), Mat::Zero(2, 2));
  std::vector<GradientAtomCloud> clouds;
  for (int r = 0; r < seeds; ++r) {
    clouds.push_back(build_cloud(sampler.sample(1, static_cast<std::uint64_t>(r)), cells, schedule));
    for (std::size_t t = 0; t < out.bases.size(); ++t) {
      out.averaged[t] += per_simplex_covariance(clouds.back(), static_cast<int>(t), out.bases[t]) / seeds;
    }
  }
  out.pooled = pool_clouds(clouds);
  return out;
}

// Levy field: correlation per simplex and CF of the pooled cloud.
void criterion3() {
  const auto t0 = Clock::now();
  const auto spec = limit_levy(2);
  const auto stats = gradient_family(model_levy(2), standard_germ(2), 48, bn_schedule("levy"), 50);
  const Mat& target = std::get<FixedGaussian>(spec.law).lambda;
  double cov = 0.0;
  for (const auto& m : stats.averaged) cov = std::max(cov, correlation_error(m, target));
  const double cf = cf_sup_error(stats.pooled, spec, default_h_grid(2));
  const double secs = since(t0);
  report(3, cov <= 0.05 && cf <= 0.06 && secs < 300.0,
         "levy n=48, 50 seeds: correlation error " + fmt("%.4f", cov) + " <= 0.05, CF error " +
             fmt("%.4f", cf) + " <= 0.06",
         secs);
}

// Additive field on the rotated germ: correlation 1/2 and eigenvector (1,1).
void criterion4() {
  const auto t0 = Clock::now();
  const auto stats = gradient_family(model_additive(), rotated_germ(), 64, bn_schedule("additive"), 50);
  double rho_err = 0.0;
  double angle = 0.0;
  Vec diag(2);
  diag << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  for (const auto& m : stats.averaged) {
    rho_err = std::max(rho_err, std::abs(to_correlation(m)(0, 1) - 0.5));
    Eigen::SelfAdjointEigenSolver<Mat> es(m);
    const double c = std::min(1.0, std::abs(es.eigenvectors().col(1).dot(diag)));
    angle = std::max(angle, std::acos(c) * 180.0 / std::numbers::pi);
  }
  const double secs = since(t0);
  report(4, rho_err <= 0.05 && angle <= 5.0 && secs < 60.0,
         "additive rotated n=64, 50 seeds: |rho - 1/2| " + fmt("%.4f", rho_err) +
             " <= 0.05, eigenvector angle " + fmt("%.2f", angle) + " deg <= 5",
         secs);
}

// Chentsov field through the verify pipeline.
void criterion5() {
  const auto t0 = Clock::now();
  const auto c = parse_config("model=chentsov\ndim=2\nlevels=64\nseeds=50\nsubsample=500\n");
  const auto reps = verify_reports(c, 1);
  double cf = 1.0;
  double ks = 1.0;
  double curve = 1.0;
  for (const auto& r : reps) {
    if (r.metric == "cf") cf = r.value;
    if (r.metric == "ks") ks = r.value;
    if (r.metric == "curve") curve = r.value;
  }
  const double secs = since(t0);
  report(5, cf <= 0.05 && ks <= 0.05 && curve <= 0.08 && secs < 600.0,
         "chentsov m=64, 50 seeds: CF error " + fmt("%.4f", cf) + " <= 0.05, KS " + fmt("%.4f", ks) +
             " <= 0.05, 500-atom potential error " + fmt("%.4f", curve) + " <= 0.08",
         secs);
}

GradientAtomCloud random_cloud(int d, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0.5, 1.5);
  Mat atoms(d, k);
  std::vector<double> w(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < d; ++i) atoms(i, j) = z(rng);
    w[static_cast<std::size_t>(j)] = u(rng);
  }
  return make_cloud(atoms, w);
}

// Semi-discrete solver against the discrete assignment oracle.
void criterion6() {
  const auto t0 = Clock::now();
  const int m = 40;
  Mat source(2, m * m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      source(0, i * m + j) = (i + 0.5) / m;
      source(1, i * m + j) = (j + 0.5) / m;
    }
  }
  double worst_rel = 0.0;
  double worst_res = 0.0;
  double worst_mono = 0.0;
  const int sizes[3] = {7, 13, 20};
  for (int inst = 0; inst < 3; ++inst) {
    const auto cloud = random_cloud(2, sizes[inst], 100 + static_cast<std::uint64_t>(inst));
    TransportOptions opt;
    opt.tol = 1e-10;
    const auto pot = solve_semidiscrete(cloud, Domain(2), opt);
    const double lp = assignment_oracle(source, cloud);
    worst_rel = std::max(worst_rel, std::abs(pot.cost - lp) / lp);
    worst_res = std::max(worst_res, pot.residual);
    std::mt19937_64 rng(7 + static_cast<std::uint64_t>(inst));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 10000; ++t) {
      Vec z(2), w(2);
      z << u(rng), u(rng);
      w << u(rng), u(rng);
      worst_mono = std::min(worst_mono, (z - w).dot(brenier_map(pot, z) - brenier_map(pot, w)));
    }
  }
  const double secs = since(t0);
  report(6, worst_rel <= 0.01 && worst_res <= 1e-8 && worst_mono >= -1e-9 && secs < 30.0,
         "3 instances: cost vs assignment " + fmt("%.2e", worst_rel) + " <= 1e-2, residual " +
             fmt("%.1e", worst_res) + " <= 1e-8, monotonicity min " + fmt("%.1e", worst_mono) +
             " >= -1e-9",
         secs);
}

// Product cloud: the 2-D solve equals the sum of 1-D rearrangements.
void criterion7() {
  const auto t0 = Clock::now();
  const auto x = random_cloud(1, 20, 71);
  const auto y = random_cloud(1, 20, 72);
  Mat atoms(2, 400);
  std::vector<double> w;
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) {
      atoms(0, i * 20 + j) = x.atoms(0, i);
      atoms(1, i * 20 + j) = y.atoms(0, j);
      w.push_back(x.weights[static_cast<std::size_t>(i)] * y.weights[static_cast<std::size_t>(j)]);
    }
  }
  const auto pot = solve_semidiscrete(make_cloud(atoms, w), Domain(2));
  const auto phi = convex_potential(pot, Vec::Zero(2), 0.0);
  const auto oplus = oplus_rearrangement({convex_rearrange_1d(monotone_rearrange_1d(x), 0.0),
                                          convex_rearrange_1d(monotone_rearrange_1d(y), 0.0)});
  const double err = curve_sup_error([&](const Vec& z) { return phi(z); },
                                     [&](const Vec& z) { return oplus(z); }, interior_grid(2, 101));
  const double secs = since(t0);
  report(7, err <= 2e-2 && secs < 60.0,
         "20x20 product cloud: sup |solver - oplus| " + fmt("%.2e", err) + " <= 2e-2", secs);
}

// Sawtooth family: exact cloud and exact V curve.
void criterion8() {
  const auto t0 = Clock::now();
  constexpr double kTol = 4 * std::numeric_limits<double>::epsilon();
  double cloud_err = 0.0;
  double curve_err = 0.0;
  for (int n = 2; n <= 64; n += 2) {
    const auto cells = enumerate_interior_cells(standard_germ(1), n, Domain(1));
    const auto s = sawtooth_sample(n);
    const auto cloud = build_cloud(s, cells, RenormalizationSchedule::identity());
    const auto q = monotone_rearrange_1d(cloud);
    if (q.atoms().size() != 2 || q.atoms()[0] != -1.0 || q.atoms()[1] != 1.0) {
      cloud_err = 1.0;
      continue;
    }
    cloud_err = std::max(cloud_err, std::abs(q.weight(0) - 0.5));
    const auto c = convex_rearrange_1d(q, s.values[0]);
    for (int k = 0; k <= 1000; ++k) {
      const double t = k / 1000.0;
      curve_err = std::max(curve_err, std::abs(c(t) - (std::abs(t - 0.5) - 0.5)));
    }
  }
  const double secs = since(t0);
  report(8, cloud_err <= kTol && curve_err <= kTol,
         "sawtooth n=2..64 even: cloud error " + fmt("%.1e", cloud_err) + ", curve error " +
             fmt("%.1e", curve_err) + " (<= 4 ulp)",
         secs);
}

// Gini functional.
void criterion9() {
  const auto t0 = Clock::now();
  const double equal = gini(std::vector<double>(7, 3.0)).normalized;
  const double two = gini(std::vector<double>{0.0, 1.0}).normalized;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  int monotone = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(10);
    for (auto& v : x) v = u(rng);
    std::uniform_int_distribution<int> pick(0, 9);
    int i = pick(rng);
    int j = pick(rng);
    while (j == i || x[static_cast<std::size_t>(j)] == x[static_cast<std::size_t>(i)]) j = pick(rng);
    if (x[static_cast<std::size_t>(i)] > x[static_cast<std::size_t>(j)]) std::swap(i, j);
    // move part of the poorer member's income to the richer one
    const double before = gini(x).normalized;
    const double delta = 0.5 * x[static_cast<std::size_t>(i)];
    x[static_cast<std::size_t>(i)] -= delta;
    x[static_cast<std::size_t>(j)] += delta;
    monotone += gini(x).normalized > before;
  }
  const double secs = since(t0);
  report(9, std::abs(equal) <= 1e-15 && std::abs(two - 0.5) <= 1e-15 && monotone == 100,
         "gini: equal " + fmt("%.1e", equal) + ", (0,1) -> " + fmt("%.3f", two) +
             ", regressive transfers increase it in " + std::to_string(monotone) + "/100",
         secs);
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> all{criterion1, criterion2, criterion3,
                                               criterion4, criterion5, criterion6,
                                               criterion7, criterion8, criterion9};
  for (std::size_t k = 0; k < all.size(); ++k) {
    try {
      all[k]();
    } catch (const std::exception& e) {
      report(static_cast<int>(k + 1), false, std::string("exception: ") + e.what(), 0.0);
    }
  }
  std::printf("%d of %zu criteria failed\n", failures, all.size());
  return failures == 0 ? 0 : 1;
}
