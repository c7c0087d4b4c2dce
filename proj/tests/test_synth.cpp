#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "shiftnmf/synth.hpp"

using namespace shiftnmf;

namespace {

Frame random_frame(std::mt19937_64& rng, std::size_t r, std::size_t s) {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  Frame f(r, s);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < s; ++j) f(i, j) = d(rng);
  return f;
}

std::size_t lit(const Shape& s) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < s.bitmap.rows(); ++i)
    for (std::size_t j = 0; j < s.bitmap.cols(); ++j) c += s.bitmap(i, j) > 0.0;
  return c;
}

}  // namespace

TEST_SUITE("synth-bench") {

TEST_CASE("vectorize is column stacking") {
  Frame f(2, 2);
  f(0, 0) = 1;
  f(0, 1) = 2;
  f(1, 0) = 3;
  f(1, 1) = 4;
  CHECK(vectorize(f) == Vector{1, 3, 2, 4});

  Frame row(1, 4);
  for (std::size_t j = 0; j < 4; ++j) row(0, j) = static_cast<double>(j);
  CHECK(vectorize(row) == Vector{0, 1, 2, 3});

  std::mt19937_64 rng(41);
  for (std::size_t r = 1; r <= 32; r += 3)
    for (std::size_t s = 1; s <= 32; s += 5) {
      const Frame m = random_frame(rng, r, s);
      CHECK(devectorize(vectorize(m), r, s) == m);
    }
  CHECK_THROWS_AS(devectorize(Vector(5), 2, 2), std::invalid_argument);
}

TEST_CASE("shift2d_to_p examples") {
  CHECK(shift2d_to_p(0, 0, 20, 20) == 0);
  CHECK(shift2d_to_p(1, 0, 20, 20) == 20);
  CHECK(shift2d_to_p(1, 1, 3, 3) == 4);
  CHECK(shift2d_to_p(-1, 0, 3, 3) == 6);
  CHECK(shift2d_to_p(3, 0, 3, 3) == 0);
  CHECK(p_to_shift2d(47, 20) == std::pair<std::size_t, std::size_t>{2, 7});
}

TEST_CASE("3x3 single pixel under shift (1,1)") {
  Frame f(3, 3);
  f(1, 1) = 1.0;
  const std::size_t p = shift2d_to_p(1, 1, 3, 3);
  REQUIRE(p == 4);
  // out[i] = v[i + p]: the pixel moves one up and one left.
  const Frame up_left = devectorize(apply_shift(vectorize(f), p), 3, 3);
  CHECK(up_left(0, 0) == 1.0);
  // The inverse shift moves it one down and one right.
  const Frame down_right = devectorize(apply_shift(vectorize(f), 9 - p), 3, 3);
  CHECK(down_right(2, 2) == 1.0);
  CHECK(translate2d(f, 1, 1) == up_left);
}

TEST_CASE("shift2d_to_p consistency with translate2d, exhaustive on 4x5") {
  std::mt19937_64 rng(42);
  const Frame m = random_frame(rng, 4, 5);
  for (long long r1 = -5; r1 <= 5; ++r1)
    for (long long s1 = -4; s1 <= 8; ++s1)
      CHECK(apply_shift(vectorize(m), shift2d_to_p(r1, s1, 4, 5)) == vectorize(translate2d(m, r1, s1)));
}

TEST_CASE("builtin shapes") {
  const auto names = builtin_shape_names();
  for (const char* want : {"square", "cross", "plane", "tank", "ship"})
    CHECK(std::find(names.begin(), names.end(), want) != names.end());
  CHECK(lit(builtin_shape("square")) == 9);
  CHECK(lit(builtin_shape("cross")) == 9);
  CHECK(builtin_shape("square").bitmap.rows() == 3);
  CHECK_THROWS_AS(builtin_shape("teapot"), std::invalid_argument);
}

TEST_CASE("parse_shape") {
  const Shape s = parse_shape("l", "  10\n\n  11 \n");
  CHECK(s.bitmap.rows() == 2);
  CHECK(s.bitmap.cols() == 2);
  CHECK(s.bitmap(1, 1) == 1.0);
  CHECK(s.bitmap(0, 1) == 0.0);
  CHECK_THROWS_AS(parse_shape("x", "10\n1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_shape("x", "12\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_shape("x", "00\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_shape("x", ""), std::invalid_argument);
  CHECK_THROWS_AS(embed(builtin_shape("ship"), 4, 4), std::invalid_argument);
}

TEST_CASE("experiment specs") {
  const DatasetSpec one = experiment_spec(1, 0);
  CHECK(one.images == 10);
  CHECK(one.rows == 20);
  CHECK(one.cols == 20);
  CHECK(one.shapes.size() == 2);
  CHECK(one.noise_mean == 0.15);
  const DatasetSpec two = experiment_spec(2, 0);
  CHECK(two.images == 20);
  CHECK(two.rows == 30);
  CHECK(two.shapes.size() == 3);
  CHECK(two.max_copies == 2);
  CHECK_THROWS_AS(experiment_spec(3, 0), std::invalid_argument);

  const Dataset ds = make_dataset(two);
  CHECK(ds.A.rows() == 900);
  CHECK(ds.A.cols() == 20);
  for (const auto& per_image : ds.placements) {
    std::vector<int> count(3, 0);
    for (const auto& pl : per_image) ++count[pl.component];
    for (int c : count) CHECK(c <= 2);
  }
}

TEST_CASE("zero-noise single shape image is the shifted shape") {
  DatasetSpec spec;
  spec.rows = spec.cols = 12;
  spec.images = 1;
  spec.shapes = {builtin_shape("tank")};
  spec.seed = 3;
  const Dataset ds = gen_dataset(spec);
  REQUIRE(ds.placements[0].size() == 1);
  const Vector want = apply_shift(embed(spec.shapes[0], 12, 12), ds.placements[0][0].shift);
  CHECK(Vector(ds.A.col(0).begin(), ds.A.col(0).end()) == want);
}

TEST_CASE("ground truth reconstructs noise-free images") {
  for (PlacementMode mode : {PlacementMode::restricted, PlacementMode::toroidal}) {
    DatasetSpec spec = experiment_spec(2, 9);
    spec.noise_mean = 0.0;
    spec.placement = mode;
    spec.avoid_overlap = false;
    const Dataset ds = make_dataset(spec);
    const auto truth = ds.truth_vectors();
    for (std::size_t i = 0; i < ds.A.cols(); ++i) {
      Vector sum(ds.A.rows(), 0.0);
      for (const auto& pl : ds.placements[i]) add_shifted(sum, truth[pl.component], pl.coeff, pl.shift);
      for (double& x : sum) x = std::clamp(x, 0.0, 1.0);
      CHECK(Vector(ds.A.col(i).begin(), ds.A.col(i).end()) == sum);
      for (const auto& pl : ds.placements[i]) CHECK(pl.shift < ds.A.rows());
    }
  }
}

TEST_CASE("restricted placement keeps shapes inside the frame") {
  DatasetSpec spec = experiment_spec(2, 5);
  spec.noise_mean = 0.0;
  const Dataset ds = make_dataset(spec);
  for (std::size_t i = 0; i < ds.A.cols(); ++i)
    for (const auto& pl : ds.placements[i]) {
      const Frame& bm = ds.components[pl.component].bitmap;
      const Frame moved = devectorize(apply_shift(embed(ds.components[pl.component], 30, 30), pl.shift), 30, 30);
      double total = 0.0;
      for (std::size_t r = 0; r < 30; ++r)
        for (std::size_t c = 0; c < 30; ++c) total += moved(r, c);
      // Bounding box of the placed copy: no wrap means it is no larger than the bitmap.
      std::size_t r0 = 30, c0 = 30, r1 = 0, c1 = 0;
      for (std::size_t r = 0; r < 30; ++r)
        for (std::size_t c = 0; c < 30; ++c)
          if (moved(r, c) > 0) {
            r0 = std::min(r0, r);
            c0 = std::min(c0, c);
            r1 = std::max(r1, r);
            c1 = std::max(c1, c);
          }
      CHECK(r1 - r0 < bm.rows());
      CHECK(c1 - c0 < bm.cols());
      CHECK(total == doctest::Approx(static_cast<double>(lit(ds.components[pl.component]))));
    }
}

TEST_CASE("datasets are deterministic per seed") {
  CHECK(make_dataset(experiment_spec(1, 4)).A == make_dataset(experiment_spec(1, 4)).A);
  CHECK(make_dataset(experiment_spec(1, 4)).A != make_dataset(experiment_spec(1, 5)).A);
}

TEST_CASE("gen_dataset validation") {
  DatasetSpec spec = experiment_spec(1, 0);
  spec.images = 0;
  CHECK_THROWS_AS(gen_dataset(spec), std::invalid_argument);
  spec = experiment_spec(1, 0);
  spec.rows = 2;
  CHECK_THROWS_AS(gen_dataset(spec), std::invalid_argument);
  spec = experiment_spec(1, 0);
  spec.shapes.clear();
  CHECK_THROWS_AS(gen_dataset(spec), std::invalid_argument);
}

TEST_CASE("add_noise") {
  DenseMatrix a(40, 100, 0.0);
  CHECK(add_noise(a, 0.0, 1) == a);

  const DenseMatrix noisy = add_noise(a, 0.15, 1);
  double mean = 0.0;
  for (double x : noisy.values()) mean += x;
  mean /= static_cast<double>(noisy.size());
  CHECK(mean == doctest::Approx(0.15).epsilon(0.01 / 0.15));
  for (double x : noisy.values()) CHECK((x >= 0.0 && x <= 0.3));

  const DenseMatrix ones(10, 10, 1.0);
  const DenseMatrix clipped = add_noise(ones, 0.5, 2);
  for (double x : clipped.values()) CHECK(x <= 1.0);
  CHECK_THROWS_AS(add_noise(a, 0.6, 1), std::invalid_argument);
  CHECK_THROWS_AS(add_noise(a, -0.1, 1), std::invalid_argument);
}

TEST_CASE("match_score") {
  std::mt19937_64 rng(43);
  const Vector w = oracle::random_vector(rng, 50);
  for (std::size_t q : {0, 3, 49}) {
    CHECK(match_score(w, apply_shift(w, q)) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(match_score(apply_shift(w, q), w) == doctest::Approx(1.0).epsilon(1e-10));
  }
  const Vector g = oracle::random_vector(rng, 50);
  CHECK(match_score(w, g) == doctest::Approx(match_score(g, w)).epsilon(1e-12));
  CHECK(match_score(apply_shift(w, 7), apply_shift(g, 11)) == doctest::Approx(match_score(w, g)).epsilon(1e-12));

  // Centred, these are period-2 and period-4 square waves: orthogonal at
  // every shift.
  const Vector a{1, 0, 1, 0, 1, 0, 1, 0};
  const Vector b{1, 1, 0, 0, 1, 1, 0, 0};
  CHECK(std::abs(match_score(a, b)) <= 1e-10);

  CHECK_THROWS_AS(match_score(Vector(4, 2.0), Vector{1, 0, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(match_score(Vector{1, 2}, Vector{1, 2, 3}), std::invalid_argument);
}

TEST_CASE("square and cross are separated by the score") {
  const auto sq = embed(builtin_shape("square"), 20, 20);
  const auto cr = embed(builtin_shape("cross"), 20, 20);
  CHECK(match_score(sq, cr) < 0.8);
}

TEST_CASE("assign_components") {
  std::mt19937_64 rng(44);
  const std::vector<Vector> truth{oracle::random_vector(rng, 30), oracle::random_vector(rng, 30)};
  DenseMatrix same(30, 2), swapped(30, 2);
  for (std::size_t i = 0; i < 30; ++i) {
    same(i, 0) = truth[0][i];
    same(i, 1) = truth[1][i];
    swapped(i, 0) = truth[1][(i + 4) % 30];
    swapped(i, 1) = truth[0][i];
  }
  const auto id = assign_components(same, truth);
  REQUIRE(id.size() == 2);
  CHECK(id[0].found == 0);
  CHECK(id[1].found == 1);
  CHECK(id[0].score == doctest::Approx(1.0));
  CHECK(id[1].score == doctest::Approx(1.0));

  const auto sw = assign_components(swapped, truth);
  CHECK(sw[0].truth == 0);
  CHECK(sw[0].found == 1);
  CHECK(sw[1].found == 0);

  DenseMatrix dead(30, 2);
  for (std::size_t i = 0; i < 30; ++i) dead(i, 0) = truth[0][i];
  const auto d = assign_components(dead, truth);
  CHECK(d[0].score == doctest::Approx(1.0));
  CHECK(d[1].score == -1.0);
}

}  // TEST_SUITE
