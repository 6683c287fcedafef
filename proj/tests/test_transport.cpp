#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"
#include "rearrange/errors.hpp"
#include "rearrange/transport.hpp"

using namespace rearrange;

namespace {

Vec v2(double a, double b) {
  Vec h(2);
  h << a, b;
  return h;
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

Mat grid_source(int m) {
  Mat s(2, m * m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) s.col(i * m + j) = v2((i + 0.5) / m, (j + 0.5) / m);
  }
  return s;
}

}  // namespace

TEST_SUITE("transport") {
  TEST_CASE("single atom") {
    const auto cloud = make_cloud(v2(0.3, -2.0));
    const auto pot = solve_semidiscrete(cloud, Domain(2));
    CHECK(pot.size() == 1u);
    CHECK(pot.volumes[0] == doctest::Approx(1.0));
    CHECK(brenier_map(pot, v2(0.9, 0.1)) == v2(0.3, -2.0));
    // int |z - y|^2 over the unit square
    const double expect = (1.0 / 3 - 0.3 + 0.09) + (1.0 / 3 + 2.0 + 4.0);
    CHECK(pot.cost == doctest::Approx(expect));
  }

  TEST_CASE("two atoms split the square at z1 = 1/2") {
    Mat atoms(2, 2);
    atoms << -1, 1, 0, 0;
    const auto pot = solve_semidiscrete(make_cloud(atoms), Domain(2));
    CHECK(pot.residual <= 1e-10);
    CHECK(pot.volumes[0] == doctest::Approx(0.5));
    CHECK(pot.cell_of(v2(0.49, 0.9)) == 0u);
    CHECK(pot.cell_of(v2(0.51, 0.1)) == 1u);
    const auto phi = convex_potential(pot, v2(0, 0), 0.0);
    for (double x : {0.0, 0.2, 0.5, 0.7, 1.0}) {
      CHECK(phi(v2(x, 0.3)) == doctest::Approx(std::abs(x - 0.5) - 0.5).epsilon(1e-9));
    }
    CHECK(phi.gradient(v2(0.1, 0.5)) == v2(-1, 0));
  }

  TEST_CASE("random instances: mass, dual ascent, monotonicity") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto cloud = random_cloud(2, 15, seed);
      const auto pot = solve_semidiscrete(cloud, Domain(2));
      CHECK(pot.residual <= 1e-10);
      CHECK(std::accumulate(pot.volumes.begin(), pot.volumes.end(), 0.0) ==
            doctest::Approx(1.0).epsilon(1e-12));
      for (std::size_t j = 0; j < pot.size(); ++j) {
        CHECK(std::abs(pot.volumes[j] - cloud.weights[j]) <= 1e-10);
      }
      for (std::size_t k = 1; k < pot.dual_history.size(); ++k) {
        CHECK(pot.dual_history[k] >= pot.dual_history[k - 1] - 1e-12);
      }
      CHECK(pot.psi[0] == 0.0);
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      double worst = 0.0;
      for (int t = 0; t < 10000; ++t) {
        const Vec z = v2(u(rng), u(rng));
        const Vec w = v2(u(rng), u(rng));
        worst = std::min(worst, (z - w).dot(brenier_map(pot, z) - brenier_map(pot, w)));
      }
      CHECK(worst >= -1e-9);
    }
  }

  TEST_CASE("semi-discrete cost against the assignment oracle") {
    const auto cloud = random_cloud(2, 6, 9);
    const auto pot = solve_semidiscrete(cloud, Domain(2));
    const double lp = assignment_oracle(grid_source(30), cloud);
    CHECK(std::abs(pot.cost - lp) <= 0.02 * lp);
  }

  TEST_CASE("assignment oracle against enumeration") {
    // 4 sources, 2 atoms of mass 1/2: the best split of the sources into pairs
    Mat src(2, 4);
    src << 0.1, 0.9, 0.4, 0.6, 0.2, 0.3, 0.8, 0.7;
    Mat atoms(2, 2);
    atoms << 0.0, 1.0, 1.0, 0.0;
    const auto cloud = make_cloud(atoms);
    double best = 1e300;
    for (int mask = 0; mask < 16; ++mask) {
      if (__builtin_popcount(mask) != 2) continue;
      double c = 0.0;
      for (int i = 0; i < 4; ++i) c += 0.25 * (src.col(i) - atoms.col((mask >> i) & 1)).squaredNorm();
      best = std::min(best, c);
    }
    CHECK(assignment_oracle(src, cloud) == doctest::Approx(best).epsilon(1e-12));
    CHECK_THROWS_AS(assignment_oracle(grid_source(45), cloud), ResourceError);
  }

  TEST_CASE("1-D solve agrees with the sorting rearrangement") {
    const auto cloud = random_cloud(1, 40, 5);
    const auto pot = solve_semidiscrete(cloud, Domain(1));
    const auto phi = convex_potential(pot, Vec::Zero(1), 0.0);
    const auto c = convex_rearrange_1d(monotone_rearrange_1d(cloud), 0.0);
    double worst = 0.0;
    for (int k = 0; k <= 1000; ++k) {
      const double x = k / 1000.0;
      worst = std::max(worst, std::abs(phi(Vec::Constant(1, x)) - c(x)));
    }
    CHECK(worst <= 1e-9);
  }

  TEST_CASE("translating the atoms keeps the cells") {
    auto cloud = random_cloud(2, 10, 21);
    const auto a = solve_semidiscrete(cloud, Domain(2));
    cloud.atoms.colwise() += v2(3.0, -1.0);
    const auto b = solve_semidiscrete(cloud, Domain(2));
    for (std::size_t j = 0; j < a.size(); ++j) {
      CHECK(a.volumes[j] == doctest::Approx(b.volumes[j]).epsilon(1e-9));
    }
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int same = 0;
    for (int t = 0; t < 1000; ++t) {
      const Vec z = v2(u(rng), u(rng));
      same += a.cell_of(z) == b.cell_of(z);
    }
    CHECK(same >= 995);
  }

  TEST_CASE("product cloud factorizes into one-dimensional curves") {
    const auto x = random_cloud(1, 6, 31);
    const auto y = random_cloud(1, 5, 32);
    Mat atoms(2, 30);
    std::vector<double> w;
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 5; ++j) {
        atoms.col(i * 5 + j) = v2(x.atoms(0, i), y.atoms(0, j));
        w.push_back(x.weights[i] * y.weights[j]);
      }
    }
    const auto pot = solve_semidiscrete(make_cloud(atoms, w), Domain(2));
    const auto phi = convex_potential(pot, v2(0, 0), 0.0);
    const auto oplus = oplus_rearrangement(
        {convex_rearrange_1d(monotone_rearrange_1d(x), 0.0),
         convex_rearrange_1d(monotone_rearrange_1d(y), 0.0)});
    CHECK(oplus.dim() == 2);
    double worst = 0.0;
    for (int i = 0; i <= 50; ++i) {
      for (int j = 0; j <= 50; ++j) {
        const Vec z = v2(i / 50.0, j / 50.0);
        worst = std::max(worst, std::abs(phi(z) - oplus(z)));
      }
    }
    CHECK(worst <= 1e-8);
  }

  TEST_CASE("three dimensions use quasi-random volumes") {
    Mat atoms = Mat::Zero(3, 2);
    atoms(0, 0) = -1;
    atoms(0, 1) = 1;
    TransportOptions opt;
    opt.tol = 2e-3;
    opt.mc_points = 200000;
    const auto pot = solve_semidiscrete(make_cloud(atoms), Domain(3), opt);
    CHECK(pot.residual <= 2e-3);
    Vec z(3);
    z << 0.4, 0.5, 0.5;
    CHECK(pot.cell_of(z) == 0u);
    z[0] = 0.6;
    CHECK(pot.cell_of(z) == 1u);
    opt.tol = 1e-6;
    CHECK_THROWS_AS(solve_semidiscrete(make_cloud(atoms), Domain(3), opt), ValidationError);
  }

  TEST_CASE("duplicate atoms are merged") {
    Mat atoms(2, 3);
    atoms << 0.0, 1.0, 0.0, 0.0, 1.0, 0.0;
    const auto pot = solve_semidiscrete(make_cloud(atoms), Domain(2));
    CHECK(pot.size() == 2u);
    CHECK(pot.merged_index == std::vector<int>{0, 1, 0});
    CHECK(pot.weights[0] == doctest::Approx(2.0 / 3));
    CHECK_FALSE(pot.notices.empty());
  }

  TEST_CASE("budget exhaustion and bad options") {
    TransportOptions opt;
    opt.max_iterations = 1;
    opt.tol = 1e-12;
    CHECK_THROWS_AS(solve_semidiscrete(random_cloud(2, 40, 8), Domain(2), opt), ConvergenceError);
    opt.tol = 0.0;
    CHECK_THROWS_AS(solve_semidiscrete(random_cloud(2, 4, 8), Domain(2), opt), ValidationError);
    CHECK_THROWS_AS(solve_semidiscrete(random_cloud(2, 4, 8), Domain(1)), ValidationError);
  }

  TEST_CASE("potential csv") {
    Mat atoms(1, 2);
    atoms << -1, 1;
    const auto pot = solve_semidiscrete(make_cloud(atoms), Domain(1));
    std::ostringstream os;
    write_potential_csv(os, pot);
    CHECK(os.str().rfind("y1,psi\n-1,0\n1,", 0) == 0);
    std::ostringstream grid;
    write_potential_grid_csv(grid, convex_potential(pot, Vec::Zero(1), 0.0), 1, 3);
    std::string line;
    std::istringstream is(grid.str());
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 4);
  }
}
