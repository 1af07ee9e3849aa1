#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ibgeo/maxent_chain.hpp"
#include "ibgeo/rng.hpp"

using namespace ibgeo;

TEST_CASE("within-sample identities hold to machine precision") {
  const auto samples = sample_chain(4, 200, 17);
  REQUIRE(samples.size() == 200);
  for (const auto& s : samples) {
    REQUIRE(s.gauss.size() == 8);
    REQUIRE(s.expo.size() == 4);
    REQUIRE(s.simplex.size() == 4);
    for (int k = 0; k < 4; ++k) {
      const double r2 =
          s.gauss(2 * k) * s.gauss(2 * k) + s.gauss(2 * k + 1) * s.gauss(2 * k + 1);
      CHECK(s.expo(k) == doctest::Approx(r2).epsilon(1e-15));
    }
    CHECK((s.simplex - s.expo / s.expo.sum()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(s.simplex.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.simplex.minCoeff() >= 0.0);
  }
}

TEST_CASE("stage moments match the exact laws at K = 3") {
  const int n = 200000;
  const auto samples = sample_chain(3, n, 5);
  double gm = 0, gv = 0, em = 0, ev = 0;
  Eigen::VectorXd sm = Eigen::VectorXd::Zero(3);
  for (const auto& s : samples) {
    gm += s.gauss.sum();
    gv += s.gauss.squaredNorm();
    em += s.expo.sum();
    ev += s.expo.squaredNorm();
    sm += s.simplex;
  }
  const double n_gauss = 6.0 * n;
  const double n_expo = 3.0 * n;
  // N(0,1): mean 0, variance 1. Exp(rate 1/2): mean 2, second moment 8.
  CHECK(std::abs(gm / n_gauss) < 0.01);
  CHECK(gv / n_gauss == doctest::Approx(1.0).epsilon(0.01));
  CHECK(em / n_expo == doctest::Approx(2.0).epsilon(0.01));
  CHECK(ev / n_expo == doctest::Approx(8.0).epsilon(0.03));
  // Flat Dirichlet: mean 1/K in each coordinate.
  for (int k = 0; k < 3; ++k)
    CHECK(sm(k) / n == doctest::Approx(1.0 / 3.0).epsilon(0.01));
}

TEST_CASE("at K = 2 the first simplex coordinate is uniform on [0,1]") {
  const int n = 100000;
  const auto samples = sample_chain(2, n, 23);
  std::vector<double> u(n);
  for (int i = 0; i < n; ++i) u[i] = samples[i].simplex(0);
  std::sort(u.begin(), u.end());
  // Kolmogorov-Smirnov distance to Uniform(0,1).
  double ks = 0.0;
  for (int i = 0; i < n; ++i) {
    ks = std::max(ks, std::abs(u[i] - (i + 1.0) / n));
    ks = std::max(ks, std::abs(u[i] - static_cast<double>(i) / n));
  }
  CHECK(ks < 0.005);
}

TEST_CASE("simplex map is invariant under per-pair rotations") {
  const CounterRng rng(71);
  std::uint64_t c = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::VectorXd w(6);
    for (int i = 0; i < 6; ++i) w(i) = rng.normal(c++);
    Eigen::VectorXd rotated(6);
    for (int k = 0; k < 3; ++k) {
      const double phi = 2.0 * M_PI * rng.uniform(c++);
      const double cs = std::cos(phi), sn = std::sin(phi);
      rotated(2 * k) = cs * w(2 * k) - sn * w(2 * k + 1);
      rotated(2 * k + 1) = sn * w(2 * k) + cs * w(2 * k + 1);
    }
    const SimplexPoint a = simplex_map(w);
    const SimplexPoint b = simplex_map(rotated);
    CHECK((a.probs() - b.probs()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("overhead report matches the closed forms") {
  const OverheadReport r10 = overhead_report(10);
  CHECK(r10.k == 10);
  CHECK(r10.scale_overhead ==
        doctest::Approx(0.5 * std::log(2.0 * M_PI * M_E * 10.0)).epsilon(1e-12));
  CHECK(r10.scale_overhead == doctest::Approx(2.5702).epsilon(1e-3));
  CHECK(r10.phase_overhead ==
        doctest::Approx(10.0 * std::log(2.0 * M_PI)).epsilon(1e-12));
  CHECK(r10.phase_overhead == doctest::Approx(18.3788).epsilon(1e-4));
}

TEST_CASE("per-coordinate scale overhead shrinks as K grows") {
  double prev = 1e100;
  for (int k : {2, 10, 100, 1000}) {
    const double per_coord = overhead_report(k).scale_overhead / k;
    CHECK(per_coord < prev);
    prev = per_coord;
  }
}

TEST_CASE("chain sampling is deterministic and seed-sensitive") {
  const auto a = sample_chain(5, 32, 42);
  const auto b = sample_chain(5, 32, 42);
  const auto c = sample_chain(5, 32, 43);
  for (int i = 0; i < 32; ++i) {
    CHECK((a[i].gauss - b[i].gauss).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a[i].simplex - b[i].simplex).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK((a[0].gauss - c[0].gauss).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("csv export has one header and one row per sample") {
  const auto samples = sample_chain(2, 7, 9);
  const std::string csv = chain_to_csv(samples);
  std::istringstream in(csv);
  std::string line;
  int rows = 0;
  REQUIRE(std::getline(in, line));
  CHECK(line.find("gauss") != std::string::npos);
  CHECK(line.find("simplex") != std::string::npos);
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 7);
  // Column count: 2K gauss + K expo + K simplex = 8 fields.
  const auto commas = std::count(csv.begin(), csv.end(), ',');
  CHECK(commas % (rows + 1) == 0);
}
