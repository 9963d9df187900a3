#include "doctest.h"
#include "tatg/metric.hpp"
#include "tatg/rational.hpp"

using tatg::Rational;

TEST_CASE("rational arithmetic is exact and reduced") {
  Rational a(1, 2), b(1, 3);
  CHECK(a + b == Rational(5, 6));
  CHECK(a - b == Rational(1, 6));
  CHECK(a * b == Rational(1, 6));
  CHECK(a / b == Rational(3, 2));
  CHECK(Rational(4, 8) == Rational(1, 2));
  CHECK(Rational(3, -6) == Rational(-1, 2));
  CHECK(Rational(7, 3).frac() == Rational(1, 3));
  CHECK(Rational(-7, 3).frac() == Rational(2, 3));
  CHECK(Rational(-7, 3).floor() == -3);
  CHECK_THROWS(Rational(1, 0));
  CHECK_THROWS(a / Rational(0));
}

// Independent oracle for the rational gcd: u divides both inputs exactly and
// no integer multiple k*u with k >= 2 does better, checked by cross
// multiplication on a small search window.
static bool is_common_unit(const Rational& u, const std::vector<Rational>& xs) {
  for (const auto& x : xs) {
    Rational q = x / u;
    if (!q.is_integer()) return false;
  }
  for (int k = 2; k <= 64; ++k) {
    Rational cand = u * Rational(k);
    bool all = true;
    for (const auto& x : xs) {
      if (!(x / cand).is_integer()) {
        all = false;
        break;
      }
    }
    if (all) return false;
  }
  return true;
}

TEST_CASE("common_unit equals the rational gcd") {
  tatg::MetricAssignment m;
  m.length = {Rational(0), Rational(1, 2), Rational(1, 2)};
  CHECK(tatg::common_unit(m, {Rational(1)}) == Rational(1, 2));

  tatg::MetricAssignment m2;
  m2.length = {Rational(0), Rational(1, 12)};
  CHECK(tatg::common_unit(m2, {Rational(1), Rational(1, 6)}) == Rational(1, 12));

  tatg::MetricAssignment m3;
  m3.length = {Rational(0), Rational(3, 8), Rational(1, 4)};
  Rational u = tatg::common_unit(m3);
  CHECK(u == Rational(1, 8));
  CHECK(is_common_unit(u, {Rational(3, 8), Rational(1, 4)}));
}

TEST_CASE("gcd is the largest common unit on random pairs") {
  unsigned long long state = 12345;
  auto rnd = [&](int lo, int hi) {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return lo + static_cast<int>((state >> 33) % static_cast<unsigned>(hi - lo + 1));
  };
  for (int i = 0; i < 200; ++i) {
    Rational a(rnd(1, 30), rnd(1, 12)), b(rnd(1, 30), rnd(1, 12));
    Rational g = Rational::gcd(a, b);
    CHECK(is_common_unit(g, {a, b}));
  }
}
