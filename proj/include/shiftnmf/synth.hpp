#pragma once

// Synthetic image stacks for translation-invariant decomposition: base shapes
// placed at random offsets inside a frame, plus noise, with exact ground
// truth. Also the column-major image <-> vector mapping and the shift
// invariant scores used to compare recovered components with the truth.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "shiftnmf/dense_matrix.hpp"

namespace shiftnmf {

// r x s grey-level image, pixels addressed (row, col), stored column-major.
class Frame {
 public:
  Frame() = default;
  Frame(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), px_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return px_[j * rows_ + i]; }
  double operator()(std::size_t i, std::size_t j) const { return px_[j * rows_ + i]; }

  bool operator==(const Frame&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> px_;
};

// v[i + j r] = M(i, j).
Vector vectorize(const Frame& m);
Frame devectorize(std::span<const double> v, std::size_t rows, std::size_t cols);

// p = (r1 r + s1) mod (r s): r1 whole columns plus s1 rows.
std::size_t shift2d_to_p(long long r1, long long s1, std::size_t rows, std::size_t cols);

// Inverse decoding with 0 <= s1 < r: {r1, s1} = {p / r, p % r}.
std::pair<std::size_t, std::size_t> p_to_shift2d(std::size_t p, std::size_t rows);

// 2-D counterpart of a 1-D cyclic shift by shift2d_to_p(r1, s1): pixel
// (i, j) takes the value at row i + s1 and column j + r1, where running off
// the bottom of a column carries into the next column (the column-edge
// mixing of the 1-D shift). Content therefore moves up and left.
Frame translate2d(const Frame& m, long long r1, long long s1);

struct Shape {
  std::string name;
  Frame bitmap;
};

// Rows of '0'/'1' characters; blank lines and surrounding whitespace ignored.
Shape parse_shape(std::string_view name, std::string_view text);
Shape load_shape_file(const std::filesystem::path& path);
Shape builtin_shape(std::string_view name);
std::vector<std::string> builtin_shape_names();

// Shape bitmap pasted at the frame's top-left corner, vectorized.
Vector embed(const Shape& shape, std::size_t rows, std::size_t cols);

enum class PlacementMode {
  restricted,  // shapes stay fully inside the frame
  toroidal     // any cyclic shift, shapes may wrap
};

struct DatasetSpec {
  std::size_t rows = 20;
  std::size_t cols = 20;
  std::size_t images = 10;
  std::vector<Shape> shapes;
  std::size_t min_copies = 1;  // per shape per image
  std::size_t max_copies = 1;
  double noise_mean = 0.0;
  std::uint64_t seed = 0;
  PlacementMode placement = PlacementMode::restricted;
  bool avoid_overlap = true;  // keep copies at least one pixel apart when possible
};

struct Placement {
  std::size_t component = 0;
  double coeff = 1.0;
  std::size_t shift = 0;

  bool operator==(const Placement&) const = default;
};

struct Dataset {
  DenseMatrix A;  // n x m, one vectorized image per column
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Shape> components;
  std::vector<std::vector<Placement>> placements;  // per image
  double noise_mean = 0.0;
  std::uint64_t seed = 0;

  std::vector<Vector> truth_vectors() const;
};

// Experiments 1 (square + cross, 10 images of 20x20, one copy each) and
// 2 (plane, tank, ship, 20 images of 30x30, 0-2 copies each), noise mean 0.15.
DatasetSpec experiment_spec(int id, std::uint64_t seed);

// Noise-free images: clip(sum of placed shapes, 0, 1), with exact placements.
Dataset gen_dataset(const DatasetSpec& spec);

// gen_dataset followed by add_noise with spec.noise_mean.
Dataset make_dataset(const DatasetSpec& spec);

// Adds i.i.d. U[0, 2 mean] noise, then clips to [0, 1].
DenseMatrix add_noise(const DenseMatrix& a, double mean, std::uint64_t seed);

// max_p <w^, shift(g^, p)> with w^, g^ mean-centred and unit l2 norm.
double match_score(std::span<const double> w, std::span<const double> g);

struct ComponentMatch {
  std::size_t found = 0;
  std::size_t truth = 0;
  double score = 0.0;
};

// Greedy best-score assignment without replacement, highest scores first.
std::vector<ComponentMatch> assign_components(const DenseMatrix& found, const std::vector<Vector>& truth);

}  // namespace shiftnmf
