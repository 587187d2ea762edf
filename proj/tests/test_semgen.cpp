#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dagaf/errors.hpp"
#include "dagaf/semgen.hpp"
#include "testutil.hpp"

using namespace dagaf;

TEST_CASE("gaussian noise variance is close to scale squared") {
  Rng rng(1);
  NoiseSpec spec{NoiseSpec::Kind::Gaussian, 1.0};
  Matrix z = sampleNoise(spec, 100000, 1, rng);
  double mean = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) mean += z.data()[i];
  mean /= static_cast<double>(z.size());
  double var = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double c = z.data()[i] - mean;
    var += c * c;
  }
  var /= static_cast<double>(z.size());
  CHECK(var > 0.97);
  CHECK(var < 1.03);
}

TEST_CASE("uniform noise is variance-matched and bounded") {
  Rng rng(2);
  NoiseSpec spec{NoiseSpec::Kind::Uniform, 1.0};
  Matrix z = sampleNoise(spec, 100000, 1, rng);
  const double bound = std::sqrt(3.0);
  double var = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    CHECK(z.data()[i] >= -bound);
    CHECK(z.data()[i] <= bound);
    var += z.data()[i] * z.data()[i];
  }
  var /= static_cast<double>(z.size());
  CHECK(var == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("noise scale must be positive") {
  Rng rng(3);
  CHECK_THROWS_AS(sampleNoise(NoiseSpec{NoiseSpec::Kind::Gaussian, 0.0}, 1, 1, rng), ConfigError);
}

TEST_CASE("no edges gives iid noise columns") {
  Rng rng(4);
  Matrix a(3, 3, 0.0);
  Dataset ds = generate(a, SemFamily::Linear, NoiseSpec{NoiseSpec::Kind::Gaussian, 1.0}, 20000, rng);
  for (std::size_t j = 0; j < 3; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < ds.n(); ++i) mean += ds.values(i, j);
    mean /= static_cast<double>(ds.n());
    CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(ds.n())));
  }
}

TEST_CASE("zero noise on a linear chain collapses to the zero fixed point") {
  Rng rng(5);
  Matrix a(2, 2, 0.0);
  a(1, 0) = 1.5;  // 0 -> 1
  // Zero noise is disallowed by spec; emulate with a tiny scale and check the
  // linear relation x2 = w*x1 + z holds to that scale.
  Dataset ds = generate(a, SemFamily::Linear, NoiseSpec{NoiseSpec::Kind::Gaussian, 1e-12}, 100, rng);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    CHECK(std::abs(ds.values(i, 0)) < 1e-10);
    CHECK(std::abs(ds.values(i, 1) - 1.5 * ds.values(i, 0)) < 1e-10);
  }
}

TEST_CASE("non-linear-1 chain with near-zero noise gives cos(1) downstream") {
  Rng rng(6);
  Matrix a(2, 2, 0.0);
  a(1, 0) = 1.0;
  Dataset ds =
      generate(a, SemFamily::NonLinear1, NoiseSpec{NoiseSpec::Kind::Gaussian, 1e-12}, 50, rng);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    CHECK(ds.values(i, 0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(ds.values(i, 1) == doctest::Approx(std::cos(1.0)).epsilon(1e-9));
  }
}

TEST_CASE("generation respects topological order against a recursive oracle") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    auto [dag, weights] = sampleErDag(5, 2.0, rng);
    Rng gen1(100 + trial);
    Dataset ds = generate(weights, SemFamily::Linear, NoiseSpec{NoiseSpec::Kind::Gaussian, 1.0},
                          20, gen1);
    // Oracle: replay the same noise stream and evaluate recursively per row.
    Rng gen2(100 + trial);
    Matrix z = sampleNoise(NoiseSpec{NoiseSpec::Kind::Gaussian, 1.0}, 20, 5, gen2);
    auto order = topologicalOrder(dag);
    REQUIRE(order.has_value());
    for (std::size_t i = 0; i < 20; ++i) {
      std::vector<double> x(5, 0.0);
      for (int j : *order) {
        double acc = z(i, static_cast<std::size_t>(j));
        for (std::size_t k = 0; k < 5; ++k)
          acc += weights(static_cast<std::size_t>(j), k) * x[k];
        x[static_cast<std::size_t>(j)] = acc;
      }
      for (std::size_t j = 0; j < 5; ++j)
        CHECK(ds.values(i, j) == doctest::Approx(x[j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("same seed reproduces the dataset bit-exactly") {
  Rng g1(9);
  auto [dag, weights] = sampleErDag(6, 2.5, g1);
  Rng a(123), b(123);
  Dataset d1 = generate(weights, SemFamily::NonLinear2, NoiseSpec{NoiseSpec::Kind::Gaussian, 1.0},
                        500, a);
  Dataset d2 = generate(weights, SemFamily::NonLinear2, NoiseSpec{NoiseSpec::Kind::Gaussian, 1.0},
                        500, b);
  CHECK(d1.values == d2.values);
}

TEST_CASE("post-non-linear-1 equals sinh of the pre-activation on a replayed stream") {
  Rng g1(10);
  auto [dag, weights] = sampleErDag(4, 1.5, g1);
  Rng a(55), b(55);
  Dataset pnl = generate(weights, SemFamily::PostNonLinear1,
                         NoiseSpec{NoiseSpec::Kind::Gaussian, 1.0}, 100, a);
  // Instrumented pairing: recompute using the same noise; the pre-activation
  // of each node uses *post* values of parents, so apply asinh column-wise.
  Rng c(55);
  Matrix z = sampleNoise(NoiseSpec{NoiseSpec::Kind::Gaussian, 1.0}, 100, 4, c);
  auto order = topologicalOrder(dag);
  REQUIRE(order.has_value());
  for (std::size_t i = 0; i < 100; ++i) {
    std::vector<double> x(4, 0.0);
    for (int j : *order) {
      double mixed = 0.0;
      for (std::size_t k = 0; k < 4; ++k)
        mixed += weights(static_cast<std::size_t>(j), k) * std::cos(x[k] + 1.0);
      x[static_cast<std::size_t>(j)] = std::sinh(mixed + z(i, static_cast<std::size_t>(j)));
    }
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(pnl.values(i, j) == doctest::Approx(x[j]).epsilon(1e-12));
  }
  (void)b;
}

TEST_CASE("cyclic adjacency is rejected") {
  Rng rng(11);
  Matrix a(2, 2, 0.0);
  a(0, 1) = 1.0;
  a(1, 0) = 1.0;
  CHECK_THROWS_AS(generate(a, SemFamily::Linear, NoiseSpec{}, 10, rng), ConfigError);
}

TEST_CASE("family names round-trip") {
  for (SemFamily f : {SemFamily::Linear, SemFamily::NonLinear1, SemFamily::NonLinear2,
                      SemFamily::PostNonLinear1, SemFamily::PostNonLinear2})
    CHECK(static_cast<int>(semFamilyFromString(toString(f))) == static_cast<int>(f));
  CHECK_THROWS_AS(semFamilyFromString("cubic"), ConfigError);
}
