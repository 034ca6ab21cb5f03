#include <doctest.h>

#include <cmath>

#include "subsamp/rng.hpp"

using namespace subsamp;

TEST_CASE("streams are deterministic and distinct") {
  RngStream a = RngStream::derive(42, 1);
  RngStream b = RngStream::derive(42, 1);
  RngStream c = RngStream::derive(42, 2);
  bool all_equal = true, any_equal_cross = false;
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    const auto vb = b.next_u64();
    const auto vc = c.next_u64();
    all_equal = all_equal && (va == vb);
    any_equal_cross = any_equal_cross || (va == vc);
  }
  CHECK(all_equal);
  CHECK_FALSE(any_equal_cross);
}

TEST_CASE("uniform doubles live in [0,1)") {
  RngStream g(7);
  double mn = 1.0, mx = 0.0, sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = g.next_double();
    mn = std::min(mn, u);
    mx = std::max(mx, u);
    sum += u;
  }
  CHECK(mn >= 0.0);
  CHECK(mx < 1.0);
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("normal moments") {
  RngStream g(99);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = g.next_normal();
    sum += z;
    sum2 += z * z;
  }
  CHECK(sum / n == doctest::Approx(0.0).epsilon(0.02));
  CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("poisson mean and variance") {
  RngStream g(123);
  const double mu = 3.7;
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double k = static_cast<double>(g.next_poisson(mu));
    sum += k;
    sum2 += k * k;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(mean == doctest::Approx(mu).epsilon(0.02));
  CHECK(var == doctest::Approx(mu).epsilon(0.05));
}
