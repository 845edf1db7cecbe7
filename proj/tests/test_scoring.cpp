#include <doctest.h>

#include <cmath>

#include "qarank/rng.hpp"
#include "qarank/scoring.hpp"

using namespace qarank;

TEST_CASE("cosine basic cases") {
  CHECK(cosine({1.0, 0.0}, {1.0, 0.0}) == doctest::Approx(1.0));
  CHECK(cosine({1.0, 0.0}, {0.0, 1.0}) == doctest::Approx(0.0));
  CHECK(cosine({1.0, 1.0}, {2.0, 2.0}) == doctest::Approx(1.0));
}

TEST_CASE("cosine zero-norm operand errors") {
  CHECK_THROWS_AS(cosine({0.0, 0.0}, {1.0, 0.0}), Error);
  CHECK_THROWS_AS(cosine({1.0, 0.0}, {0.0, 0.0}), Error);
}

TEST_CASE("cosine symmetry, bound and positive-scale invariance") {
  Rng rng(50);
  for (int trial = 0; trial < 50; ++trial) {
    Vector a(4), b(4);
    for (double& v : a) v = rng.uniform(-2.0, 2.0);
    for (double& v : b) v = rng.uniform(-2.0, 2.0);
    a[0] += 0.1;  // avoid the measure-zero all-zero draw
    b[0] += 0.1;
    const double ab = cosine(a, b);
    CHECK(ab == doctest::Approx(cosine(b, a)).epsilon(1e-14));
    CHECK(std::fabs(ab) <= 1.0 + 1e-12);
    Vector scaled = a;
    for (double& v : scaled) v *= 3.5;
    CHECK(cosine(a, scaled) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("cosine_backward matches finite differences") {
  Rng rng(51);
  Vector a = {0.3, -0.8, 0.5};
  Vector b = {-0.2, 0.9, 0.4};
  Vector d_a(3, 0.0), d_b(3, 0.0);
  cosine_backward(a, b, 1.0, d_a, d_b);
  const double eps = 1e-6;
  for (std::size_t i = 0; i < 3; ++i) {
    Vector up = a, down = a;
    up[i] += eps;
    down[i] -= eps;
    const double numeric = (cosine(up, b) - cosine(down, b)) / (2 * eps);
    CHECK(d_a[i] == doctest::Approx(numeric).epsilon(1e-6));
  }
  for (std::size_t i = 0; i < 3; ++i) {
    Vector up = b, down = b;
    up[i] += eps;
    down[i] -= eps;
    const double numeric = (cosine(a, up) - cosine(a, down)) / (2 * eps);
    CHECK(d_b[i] == doctest::Approx(numeric).epsilon(1e-6));
  }
}

TEST_CASE("gesd hand cases") {
  SUBCASE("identical unit vectors with gamma=1, c=1") {
    Vector a = {1.0, 0.0};
    CHECK(gesd(a, a, 1.0, 1.0) == doctest::Approx(0.88080).epsilon(1e-5));
    CHECK(gesd(a, a, 1.0, 1.0) ==
          doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-12));
  }
  SUBCASE("both zero with c=0") {
    Vector z = {0.0, 0.0};
    CHECK(gesd(z, z, 1.0, 0.0) == doctest::Approx(0.5));
  }
  SUBCASE("value shrinks with distance") {
    Vector a = {0.0, 0.0};
    double prev = 1.0;
    for (double d : {1.0, 10.0, 100.0, 1000.0}) {
      const double v = gesd(a, {d, 0.0}, 1.0, 1.0);
      CHECK(v < prev);
      prev = v;
    }
    CHECK(prev < 1e-3);
  }
  SUBCASE("always in (0,1)") {
    Rng rng(52);
    for (int trial = 0; trial < 50; ++trial) {
      Vector a(3), b(3);
      for (double& v : a) v = rng.uniform(-5.0, 5.0);
      for (double& v : b) v = rng.uniform(-5.0, 5.0);
      const double v = gesd(a, b, 1.0, 1.0);
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
  }
}

TEST_CASE("gesd_backward matches finite differences") {
  Vector a = {0.4, -0.3, 0.7};
  Vector b = {-0.1, 0.6, 0.2};
  const double gamma = 1.3, c = 0.5;
  Vector d_a(3, 0.0), d_b(3, 0.0);
  gesd_backward(a, b, gamma, c, 1.0, d_a, d_b);
  const double eps = 1e-6;
  for (std::size_t i = 0; i < 3; ++i) {
    Vector up = a, down = a;
    up[i] += eps;
    down[i] -= eps;
    const double numeric =
        (gesd(up, b, gamma, c) - gesd(down, b, gamma, c)) / (2 * eps);
    CHECK(d_a[i] == doctest::Approx(numeric).epsilon(1e-6));
  }
  for (std::size_t i = 0; i < 3; ++i) {
    Vector up = b, down = b;
    up[i] += eps;
    down[i] -= eps;
    const double numeric =
        (gesd(a, up, gamma, c) - gesd(a, down, gamma, c)) / (2 * eps);
    CHECK(d_b[i] == doctest::Approx(numeric).epsilon(1e-6));
  }
}

TEST_CASE("hinge_loss trivial cases") {
  CHECK(hinge_loss(0.9, 0.1, 0.2) == 0.0);
  CHECK(hinge_loss(0.3, 0.3, 0.2) == doctest::Approx(0.2));
  CHECK(hinge_loss(-0.1, 0.5, 0.2) == doctest::Approx(0.8));
}

TEST_CASE("hinge_loss nonnegative, zero iff margin satisfied") {
  Rng rng(53);
  for (int trial = 0; trial < 200; ++trial) {
    const double sp = rng.uniform(-1.0, 1.0);
    const double sn = rng.uniform(-1.0, 1.0);
    const double m = rng.uniform(0.01, 1.0);
    const double loss = hinge_loss(sp, sn, m);
    CHECK(loss >= 0.0);
    if (sp - sn >= m)
      CHECK(loss == 0.0);
    else
      CHECK(loss > 0.0);
  }
}

TEST_CASE("similarity names round-trip") {
  CHECK(similarity_from_name(similarity_name(Similarity::Cosine)) ==
        Similarity::Cosine);
  CHECK(similarity_from_name(similarity_name(Similarity::Gesd)) ==
        Similarity::Gesd);
  CHECK_THROWS_AS(similarity_from_name("euclid"), Error);
}
