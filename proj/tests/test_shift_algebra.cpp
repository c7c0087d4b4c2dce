#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "shiftnmf/shift_algebra.hpp"

using namespace shiftnmf;

namespace {

GenShiftSum gs(std::size_t n, std::vector<ShiftScale> t) { return GenShiftSum(n, std::move(t)); }

GenShiftMatrix gen_grid(std::size_t rows, std::size_t cols, std::size_t n,
                        std::initializer_list<std::initializer_list<GenShiftSum>> entries) {
  GenShiftMatrix g(rows, cols, n);
  std::size_t i = 0;
  for (const auto& row : entries) {
    std::size_t j = 0;
    for (const auto& e : row) g.set(i, j++, e);
    ++i;
  }
  return g;
}

}  // namespace

TEST_SUITE("shift-algebra") {

TEST_CASE("apply_shift examples") {
  const Vector v{1, 2, 3, 4};
  CHECK(apply_shift(v, 0) == Vector{1, 2, 3, 4});
  CHECK(apply_shift(v, 1) == Vector{2, 3, 4, 1});
  CHECK(apply_shift(v, 4) == Vector{1, 2, 3, 4});
  CHECK(apply_shift(v, 3) == Vector{4, 1, 2, 3});
}

TEST_CASE("shift group laws, exhaustive for small n") {
  std::mt19937_64 rng(7);
  for (std::size_t n = 1; n <= 9; ++n) {
    const Vector v = oracle::random_vector(rng, n);
    CHECK(apply_shift(v, 0) == v);
    CHECK(apply_shift(v, n) == v);
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = 0; q < n; ++q) CHECK(apply_shift(apply_shift(v, p), q) == apply_shift(v, (p + q) % n));
  }
}

TEST_CASE("apply_elem examples") {
  CHECK(apply_elem({2, 1}, Vector{1, 0, 0}) == Vector{0, 0, 2});
  CHECK(apply_elem({0, 2}, Vector{3, 1, 4}) == Vector{0, 0, 0});
  CHECK(apply_elem({1, 0}, Vector{3, 1, 4}) == Vector{3, 1, 4});
  CHECK_THROWS_AS(apply_elem({1, 3}, Vector{3, 1, 4}), std::invalid_argument);
  CHECK_THROWS_AS(apply_elem({-1, 0}, Vector{3, 1, 4}), std::invalid_argument);
}

TEST_CASE("apply_gen examples") {
  CHECK(apply_gen(gs(2, {{1, 0}, {1, 1}}), Vector{1, 0}) == Vector{1, 1});
  CHECK(apply_gen(GenShiftSum(3), Vector{5, 6, 7}) == Vector{0, 0, 0});
  CHECK_THROWS_AS(apply_gen(GenShiftSum(3), Vector{1, 2}), std::invalid_argument);
}

TEST_CASE("apply_gen is linear") {
  std::mt19937_64 rng(11);
  const std::size_t n = 13;
  const GenShiftSum alpha = gs(n, {{0.5, 0}, {1.25, 4}, {0.75, 12}});
  const Vector u = oracle::random_vector(rng, n);
  const Vector v = oracle::random_vector(rng, n);
  const double a = 0.3, b = 1.7;
  Vector mix(n);
  for (std::size_t i = 0; i < n; ++i) mix[i] = a * u[i] + b * v[i];
  const Vector lhs = apply_gen(alpha, mix);
  const Vector au = apply_gen(alpha, u), av = apply_gen(alpha, v);
  for (std::size_t i = 0; i < n; ++i) CHECK(lhs[i] == doctest::Approx(a * au[i] + b * av[i]).epsilon(1e-12));
}

TEST_CASE("GenShiftSum canonical form") {
  const GenShiftSum s = gs(5, {{1, 3}, {0, 1}, {2, 0}, {0.5, 3}});
  REQUIRE(s.size() == 2);
  CHECK(s.terms()[0] == ShiftScale{2, 0});
  CHECK(s.terms()[1] == ShiftScale{1.5, 3});
  CHECK(s == gs(5, {{1.5, 3}, {2, 0}}));
  CHECK(GenShiftSum(5, ShiftScale{0, 2}).empty());

  CHECK(GenShiftSum(5, ShiftScale{2, 4}).to_shift_scale() == ShiftScale{2, 4});
  CHECK(GenShiftSum(5).to_shift_scale() == ShiftScale{0, 0});
  CHECK_THROWS_AS(s.to_shift_scale(), std::logic_error);
  CHECK_THROWS_AS(gs(5, {{-1, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(gs(5, {{1, 5}}), std::invalid_argument);
  CHECK_THROWS_AS(GenShiftSum(0), std::invalid_argument);

  GenShiftSum t = gs(5, {{1, 1}});
  t += gs(5, {{2, 1}, {1, 4}});
  CHECK(t == gs(5, {{3, 1}, {1, 4}}));
  CHECK_THROWS_AS(t += GenShiftSum(4), std::invalid_argument);
}

TEST_CASE("elem_mul examples") {
  const std::size_t n = 7;
  CHECK(elem_mul(ShiftScale{2, 1}, ShiftScale{3, 2}, n) == ShiftScale{6, 3});
  CHECK(elem_mul(ShiftScale{2.5, 5}, ShiftScale{1, 0}, n) == ShiftScale{2.5, 5});
  CHECK(elem_mul(ShiftScale{1, 5}, ShiftScale{1, 4}, n) == ShiftScale{1, 2});
  CHECK(elem_mul(gs(n, {{1, 1}, {1, 2}}), gs(n, {{1, n - 1}})) == gs(n, {{1, 0}, {1, 1}}));
  CHECK(elem_mul(gs(n, {{1, 1}, {1, 2}}), gs(n, {{1, 1}, {1, 0}})) == gs(n, {{1, 1}, {2, 2}, {1, 3}}));
  CHECK_THROWS_AS(elem_mul(GenShiftSum(3), GenShiftSum(4)), std::invalid_argument);
}

TEST_CASE("diamond_real with trivial shifts is the matrix product") {
  std::mt19937_64 rng(3);
  const DenseMatrix a = oracle::random_matrix(rng, 6, 4);
  ShiftMatrix nmat(4, 3, 6);
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t i = 0; i < 3; ++i) nmat.set(j, i, {static_cast<double>(j + 2 * i) * 0.25, 0});
  const DenseMatrix out = diamond_real(a, nmat);
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t i = 0; i < 3; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < 4; ++j) s += a(r, j) * nmat(j, i).coeff;
      CHECK(out(r, i) == doctest::Approx(s).epsilon(1e-14));
    }
}

TEST_CASE("diamond_real with the identity grid returns A") {
  std::mt19937_64 rng(4);
  const DenseMatrix a = oracle::random_matrix(rng, 5, 3);
  ShiftMatrix id(3, 3, 5);
  for (std::size_t i = 0; i < 3; ++i) id.set(i, i, {1, 0});
  CHECK(diamond_real(a, id) == a);
}

TEST_CASE("diamond_real matches the defining sum") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const DenseMatrix a = oracle::random_matrix(rng, 6, 3);
    const ShiftMatrix single = oracle::random_shift_matrix(rng, 3, 4, 6);
    const GenShiftMatrix general = oracle::random_gen_matrix(rng, 3, 4, 6);
    CHECK(oracle::max_abs_diff(diamond_real(a, single), oracle::diamond(a, to_gen(single))) <= 1e-14);
    CHECK(oracle::max_abs_diff(diamond_real(a, general), oracle::diamond(a, general)) <= 1e-14);
  }
  CHECK_THROWS_AS(diamond_real(DenseMatrix(6, 2), ShiftMatrix(3, 1, 6)), std::invalid_argument);
  CHECK_THROWS_AS(diamond_real(DenseMatrix(6, 3), ShiftMatrix(3, 1, 5)), std::invalid_argument);
}

TEST_CASE("diamond_alg examples") {
  const std::size_t n = 8;
  CHECK(diamond_alg(gen_grid(1, 1, n, {{gs(n, {{2, 1}})}}), gen_grid(1, 1, n, {{gs(n, {{3, 2}})}})) ==
        gen_grid(1, 1, n, {{gs(n, {{6, 3}})}}));

  std::mt19937_64 rng(6);
  const GenShiftMatrix m = oracle::random_gen_matrix(rng, 3, 4, n);
  GenShiftMatrix id(4, 4, n);
  for (std::size_t i = 0; i < 4; ++i) id.set(i, i, gs(n, {{1, 0}}));
  CHECK(diamond_alg(m, id) == m);

  const GenShiftMatrix nmat = oracle::random_gen_matrix(rng, 4, 2, n);
  const GenShiftMatrix got = diamond_alg(m, nmat);
  const GenShiftMatrix want = oracle::diamond_alg(m, nmat);
  for (std::size_t i = 0; i < got.rows(); ++i)
    for (std::size_t j = 0; j < got.cols(); ++j) {
      REQUIRE(got(i, j).size() == want(i, j).size());
      for (std::size_t t = 0; t < got(i, j).size(); ++t) {
        CHECK(got(i, j).terms()[t].shift == want(i, j).terms()[t].shift);
        CHECK(got(i, j).terms()[t].coeff == doctest::Approx(want(i, j).terms()[t].coeff).epsilon(1e-14));
      }
    }
  CHECK_THROWS_AS(diamond_alg(GenShiftMatrix(2, 3, n), GenShiftMatrix(2, 3, n)), std::invalid_argument);
  CHECK_THROWS_AS(diamond_alg(GenShiftMatrix(2, 3, n), GenShiftMatrix(3, 3, n + 1)), std::invalid_argument);
}

TEST_CASE("diamond associativity (A<>M)<>N = A<>(M<>N)") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_int_distribution<std::size_t> dim(1, 4);
    std::uniform_int_distribution<std::size_t> amb(1, 16);
    const std::size_t n = amb(rng), m = dim(rng), q = dim(rng), k = dim(rng);
    const DenseMatrix a = oracle::random_matrix(rng, n, m);
    const GenShiftMatrix mm = oracle::random_gen_matrix(rng, m, q, n);
    const GenShiftMatrix nn = oracle::random_gen_matrix(rng, q, k, n);
    const DenseMatrix lhs = diamond_real(diamond_real(a, mm), nn);
    const DenseMatrix rhs = diamond_real(a, diamond_alg(mm, nn));
    CHECK(oracle::max_abs_diff(lhs, rhs) <= 1e-10);
  }
}

TEST_CASE("diamond does not commute with ordinary matrix products") {
  // A (B <> M) != (A B) <> M. With A = B = e00 and M shifting column 0 by
  // one: B <> M moves the pixel to row 1, which A then discards.
  DenseMatrix a(2, 2), b(2, 2);
  a(0, 0) = 1;
  a(0, 1) = 0;
  a(1, 0) = 0;
  a(1, 1) = 0;
  b(0, 0) = 1;
  b(1, 0) = 0;
  b(0, 1) = 0;
  b(1, 1) = 0;
  ShiftMatrix m(2, 1, 2);
  m.set(0, 0, {1, 1});
  m.set(1, 0, {0, 0});
  const DenseMatrix bm = diamond_real(b, m);
  DenseMatrix lhs(2, 1), ab(2, 2);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      for (std::size_t t = 0; t < 2; ++t) ab(i, j) += a(i, t) * b(t, j);
    }
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t t = 0; t < 2; ++t) lhs(i, 0) += a(i, t) * bm(t, 0);
  const DenseMatrix rhs = diamond_real(ab, m);
  CHECK(oracle::max_abs_diff(lhs, rhs) > 1e-6);
}

TEST_CASE("adjoint examples and pairing") {
  ShiftMatrix h(1, 3, 5);
  h.set(0, 0, {3, 0});
  h.set(0, 1, {2, 1});
  h.set(0, 2, {1, 4});
  const ShiftMatrix adj = adjoint(h);
  CHECK(adj(0, 0) == ShiftScale{3, 0});
  CHECK(adj(0, 1) == ShiftScale{2, 4});
  CHECK(adj(0, 2) == ShiftScale{1, 1});
  CHECK(adjoint(adj) == h);

  std::mt19937_64 rng(9);
  for (std::size_t n = 1; n <= 12; ++n) {
    const Vector u = oracle::random_vector(rng, n), v = oracle::random_vector(rng, n);
    for (std::size_t t = 0; t < n; ++t) {
      const ShiftScale tau{0.7, t};
      const ShiftScale tau_adj{0.7, (n - t) % n};
      CHECK(dot(apply_elem(tau, u), v) == doctest::Approx(dot(u, apply_elem(tau_adj, v))).epsilon(1e-12));
    }
  }
}

TEST_CASE("transpose and to_gen") {
  std::mt19937_64 rng(10);
  const ShiftMatrix h = oracle::random_shift_matrix(rng, 3, 2, 7);
  const ShiftMatrix t = transpose(h);
  REQUIRE(t.rows() == 2);
  REQUIRE(t.cols() == 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(t(j, i) == h(i, j));
      CHECK(to_gen(h)(i, j).to_shift_scale() == h(i, j));
    }
  CHECK(transpose(t) == h);
}

TEST_CASE("trivial single-pixel solution reconstructs A exactly") {
  // W = e_0 and H_i = sum_j [A_ji, s_j] with s_j the shift bringing pixel 0
  // to pixel j. Under out[i] = v[(i + p) mod n] that is s_j = (n - j) mod n.
  std::mt19937_64 rng(12);
  const std::size_t n = 11, m = 5;
  const DenseMatrix a = oracle::random_matrix(rng, n, m);
  DenseMatrix w(n, 1);
  w(0, 0) = 1.0;
  GenShiftMatrix h(m, 1, n);
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<ShiftScale> terms;
    for (std::size_t j = 0; j < n; ++j) terms.push_back({a(j, i), (n - j) % n});
    h.set(i, 0, GenShiftSum(n, terms));
    CHECK(apply_gen(h(i, 0), w.col(0)) == Vector(a.col(i).begin(), a.col(i).end()));
  }
  CHECK(reconstruct(w, h) == a);
}

TEST_CASE("grid validation") {
  ShiftMatrix h(2, 2, 4);
  CHECK_THROWS_AS(h.set(0, 0, {1, 4}), std::invalid_argument);
  CHECK_THROWS_AS(h.set(2, 0, {1, 0}), std::out_of_range);
  GenShiftMatrix g(1, 1, 4);
  CHECK_THROWS_AS(g.set(0, 0, GenShiftSum(5)), std::invalid_argument);
  CHECK_THROWS_AS(ShiftMatrix(1, 1, 0), std::invalid_argument);
}

}  // TEST_SUITE
