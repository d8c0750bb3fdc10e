#include <doctest.h>

#include "cbartgp/rng.hpp"

using namespace cbartgp;

TEST_SUITE("rng") {

TEST_CASE("sequences are reproducible and substreams are distinct") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng s1 = Rng::substream(42, 1);
  Rng s2 = Rng::substream(42, 2);
  int diff = 0;
  for (int i = 0; i < 16; ++i) diff += s1.next_u64() != s2.next_u64();
  CHECK(diff > 0);
}

TEST_CASE("uniform stays in range and uniform_int is unbiased enough") {
  Rng r(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  int counts[5] = {0};
  for (int i = 0; i < 50000; ++i) counts[r.uniform_int(5)]++;
  for (int k = 0; k < 5; ++k) CHECK(std::abs(counts[k] - 10000) < 500);
}

TEST_CASE("normal moments") {
  Rng r(11);
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    sum += z;
    sum2 += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("chi-squared mean") {
  Rng r(13);
  double sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) sum += r.chi_squared(5);
  CHECK(sum / n == doctest::Approx(5.0).epsilon(0.03));
}

}  // TEST_SUITE
