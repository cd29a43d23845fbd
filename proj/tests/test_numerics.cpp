#include <doctest.h>

#include <cmath>
#include <string>

#include "revgen/errors.hpp"
#include "revgen/numerics.hpp"

using namespace revgen;

namespace {

// Straight transcription of SplitMix64 for cross-checking Rng.
std::uint64_t splitmix(std::uint64_t& s) {
  s += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Vector random_vec(std::size_t n, double scale, Rng& rng) {
  Vector v(n);
  for (double& x : v.values()) x = rng.uniform(-scale, scale);
  return v;
}

}  // namespace

TEST_CASE("matvec worked examples") {
  CHECK(matvec(Matrix::identity(3), Vector{1, 2, 3}) == Vector{1, 2, 3});
  CHECK(matvec(Matrix(2, 3), Vector{4, 5, 6}) == Vector{0, 0});
  CHECK(matvec(Matrix(2, 2, {1, 2, 3, 4}), Vector{1, 1}) == Vector{3, 7});
}

TEST_CASE("matvec shape mismatch names both shapes") {
  try {
    matvec(Matrix(2, 3), Vector{1, 2});
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
    CHECK(msg.find("[2]") != std::string::npos);
  }
}

TEST_CASE("elementwise operations") {
  CHECK(sigmoid(Vector{0}) == Vector{0.5});
  CHECK(revgen::tanh(Vector{0}) == Vector{0});
  CHECK(hadamard(Vector{2, 3}, Vector{4, 5}) == Vector{8, 15});
  CHECK(concat(Vector{1}, Vector{2, 3}) == Vector{1, 2, 3});
  CHECK(add(Vector{1, 2}, Vector{10, 20}) == Vector{11, 22});
  CHECK_THROWS_AS(hadamard(Vector{1}, Vector{1, 2}), DimensionError);
  CHECK_THROWS_AS(add(Vector{1, 2, 3}, Vector{1, 2}), DimensionError);
}

TEST_CASE("softmax examples") {
  CHECK(softmax(Vector{0, 0}) == Vector{0.5, 0.5});
  for (double c : {-7.5, 0.0, 3.0, 900.0}) {
    const Vector s = softmax(Vector{c, c, c});
    for (std::size_t i = 0; i < 3; ++i) CHECK(s[i] == doctest::Approx(1.0 / 3).epsilon(1e-15));
  }
  const Vector big = softmax(Vector{1000, 0});
  CHECK(all_finite(big.values()));
  CHECK(big[0] == doctest::Approx(1.0));
  CHECK(big[1] < 1e-300);
  CHECK_THROWS_AS(softmax(Vector{}), DimensionError);
}

TEST_CASE("softmax sums to one and ignores shifts") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(40);
    const Vector v = random_vec(n, 50.0, rng);
    const Vector s = softmax(v);
    double total = 0.0;
    for (double p : s.values()) {
      CHECK(p > 0.0);
      CHECK(p <= 1.0);
      total += p;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
    const double shift = rng.uniform(-100, 100);
    Vector shifted = v;
    for (double& x : shifted.values()) x += shift;
    const Vector s2 = softmax(shifted);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(s[i] - s2[i]) <= 1e-9);
  }
}

TEST_CASE("matvec distributes over addition") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t r = 1 + rng.below(8), c = 1 + rng.below(8);
    const Matrix m = init_matrix(r, c, 3.0, rng);
    const Vector a = random_vec(c, 10.0, rng), b = random_vec(c, 10.0, rng);
    const Vector lhs = matvec(m, add(a, b));
    const Vector rhs = add(matvec(m, a), matvec(m, b));
    for (std::size_t i = 0; i < r; ++i) CHECK(std::abs(lhs[i] - rhs[i]) <= 1e-9);
  }
}

TEST_CASE("no NaN or Inf for inputs up to 1e3 in magnitude") {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    Vector v = random_vec(16, 1e3, rng);
    v[0] = 1e3;
    v[1] = -1e3;
    CHECK(all_finite(sigmoid(v).values()));
    CHECK(all_finite(revgen::tanh(v).values()));
    CHECK(all_finite(softmax(v).values()));
    CHECK(all_finite(hadamard(v, v).values()));
    CHECK(all_finite(matvec(init_matrix(3, 16, 1.0, rng), v).values()));
  }
  CHECK(sigmoid(-1e3) >= 0.0);
  CHECK(sigmoid(1e3) == 1.0);
}

TEST_CASE("Rng follows SplitMix64") {
  std::uint64_t s = 0;
  Rng rng(0);
  CHECK(rng.next() == 0xE220A8397B1DCDAFULL);  // published first output for seed 0
  splitmix(s);
  for (int i = 0; i < 1000; ++i) CHECK(rng.next() == splitmix(s));

  Rng u(42);
  std::uint64_t t = 42;
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK(x == static_cast<double>(splitmix(t) >> 11) / 9007199254740992.0);
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
}

TEST_CASE("init_matrix determinism and range") {
  Rng a(3), b(3);
  CHECK(init_matrix(5, 7, 0.08, a) == init_matrix(5, 7, 0.08, b));

  Rng r(8);
  const Matrix m = init_matrix(20, 20, 0.1, r);
  for (double x : m.values()) CHECK(std::abs(x) <= 0.1);

  Rng c(1), d(2);
  CHECK_FALSE(init_matrix(2, 2, 0.08, c) == init_matrix(2, 2, 0.08, d));

  Rng e(0);
  CHECK_THROWS_AS(init_matrix(0, 3, 0.1, e), DimensionError);
  CHECK_THROWS_AS(init_matrix(3, 0, 0.1, e), DimensionError);
  CHECK_THROWS(init_matrix(2, 2, 0.0, e));
}

TEST_CASE("add_outer and transposed matvec") {
  Matrix m(2, 3);
  add_outer(m, Vector{1, 2}, Vector{3, 4, 5}, 2.0);
  CHECK(m == Matrix(2, 3, {6, 8, 10, 12, 16, 20}));
  Vector out(3);
  matvec_transposed_acc(Matrix(2, 3, {1, 2, 3, 4, 5, 6}), Vector{1, 1}, out);
  CHECK(out == Vector{5, 7, 9});
}
