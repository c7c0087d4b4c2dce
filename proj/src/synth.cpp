#include "shiftnmf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "shiftnmf/correlation.hpp"
#include "shiftnmf/shift_algebra.hpp"

namespace shiftnmf {

namespace detail {
const std::vector<std::pair<std::string_view, std::string_view>>& builtin_shape_texts();
}

namespace {

constexpr std::size_t kPlacementAttempts = 2000;

long long floor_mod(long long a, long long n) {
  const long long r = a % n;
  return r < 0 ? r + n : r;
}

Vector centred_unit(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("match_score: empty vector");
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  Vector out(v.size());
  double norm2 = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = v[i] - mean;
    norm2 += out[i] * out[i];
  }
  if (!(norm2 > 0.0)) throw std::invalid_argument("match_score: vector is zero after mean-centring");
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : out) x *= inv;
  return out;
}

// Occupancy of already placed copies, grown by one pixel in every direction
// so that accepted copies never touch.
class Occupancy {
 public:
  Occupancy(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), taken_(rows * cols, false) {}

  bool fits(const std::vector<std::size_t>& pixels) const {
    return std::ranges::none_of(pixels, [&](std::size_t p) { return taken_[p]; });
  }

  void claim(const std::vector<std::size_t>& pixels) {
    for (std::size_t p : pixels) {
      const long long i = static_cast<long long>(p % rows_);
      const long long j = static_cast<long long>(p / rows_);
      for (long long di = -1; di <= 1; ++di) {
        for (long long dj = -1; dj <= 1; ++dj) {
          const auto ii = static_cast<std::size_t>(floor_mod(i + di, static_cast<long long>(rows_)));
          const auto jj = static_cast<std::size_t>(floor_mod(j + dj, static_cast<long long>(cols_)));
          taken_[jj * rows_ + ii] = true;
        }
      }
    }
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<bool> taken_;
};

std::vector<std::size_t> support(std::span<const double> v) {
  std::vector<std::size_t> s;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) s.push_back(i);
  return s;
}

}  // namespace

Vector vectorize(const Frame& m) {
  Vector v(m.rows() * m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j)
    for (std::size_t i = 0; i < m.rows(); ++i) v[i + j * m.rows()] = m(i, j);
  return v;
}

Frame devectorize(std::span<const double> v, std::size_t rows, std::size_t cols) {
  if (v.size() != rows * cols) throw std::invalid_argument("devectorize: length does not match frame shape");
  Frame m(rows, cols);
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) m(i, j) = v[i + j * rows];
  return m;
}

std::size_t shift2d_to_p(long long r1, long long s1, std::size_t rows, std::size_t cols) {
  const auto n = static_cast<long long>(rows * cols);
  if (n == 0) throw std::invalid_argument("shift2d_to_p: empty frame");
  return static_cast<std::size_t>(floor_mod(floor_mod(r1, n) * static_cast<long long>(rows) + floor_mod(s1, n), n));
}

std::pair<std::size_t, std::size_t> p_to_shift2d(std::size_t p, std::size_t rows) {
  if (rows == 0) throw std::invalid_argument("p_to_shift2d: empty frame");
  return {p / rows, p % rows};
}

Frame translate2d(const Frame& m, long long r1, long long s1) {
  const std::size_t p = shift2d_to_p(r1, s1, m.rows(), m.cols());
  const auto [cols_moved, rows_moved] = p_to_shift2d(p, m.rows());
  Frame out(m.rows(), m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const std::size_t row = i + rows_moved;
      const std::size_t carry = row / m.rows();
      out(i, j) = m(row % m.rows(), (j + cols_moved + carry) % m.cols());
    }
  }
  return out;
}

Shape parse_shape(std::string_view name, std::string_view text) {
  std::vector<std::string> lines;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    lines.push_back(line.substr(b, e - b + 1));
  }
  if (lines.empty()) throw std::invalid_argument("shape '" + std::string(name) + "' is empty");
  const std::size_t width = lines.front().size();
  Shape shape{std::string(name), Frame(lines.size(), width)};
  bool any = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].size() != width) throw std::invalid_argument("shape '" + std::string(name) + "' has ragged rows");
    for (std::size_t j = 0; j < width; ++j) {
      const char c = lines[i][j];
      if (c != '0' && c != '1') {
        throw std::invalid_argument("shape '" + std::string(name) + "' contains characters other than 0/1");
      }
      shape.bitmap(i, j) = c == '1' ? 1.0 : 0.0;
      any = any || c == '1';
    }
  }
  if (!any) throw std::invalid_argument("shape '" + std::string(name) + "' has no lit pixel");
  return shape;
}

Shape load_shape_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open shape file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_shape(path.stem().string(), buf.str());
}

Shape builtin_shape(std::string_view name) {
  for (const auto& [shape_name, text] : detail::builtin_shape_texts())
    if (shape_name == name) return parse_shape(shape_name, text);
  throw std::invalid_argument("unknown shape '" + std::string(name) + "'");
}

std::vector<std::string> builtin_shape_names() {
  std::vector<std::string> names;
  for (const auto& entry : detail::builtin_shape_texts()) names.emplace_back(entry.first);
  return names;
}

Vector embed(const Shape& shape, std::size_t rows, std::size_t cols) {
  if (shape.bitmap.rows() > rows || shape.bitmap.cols() > cols) {
    throw std::invalid_argument("shape '" + shape.name + "' is larger than the frame");
  }
  Frame f(rows, cols);
  for (std::size_t i = 0; i < shape.bitmap.rows(); ++i)
    for (std::size_t j = 0; j < shape.bitmap.cols(); ++j) f(i, j) = shape.bitmap(i, j);
  return vectorize(f);
}

std::vector<Vector> Dataset::truth_vectors() const {
  std::vector<Vector> out;
  for (const auto& s : components) out.push_back(embed(s, rows, cols));
  return out;
}

DatasetSpec experiment_spec(int id, std::uint64_t seed) {
  DatasetSpec spec;
  spec.seed = seed;
  spec.noise_mean = 0.15;
  if (id == 1) {
    spec.rows = spec.cols = 20;
    spec.images = 10;
    spec.shapes = {builtin_shape("square"), builtin_shape("cross")};
    spec.min_copies = spec.max_copies = 1;
  } else if (id == 2) {
    spec.rows = spec.cols = 30;
    spec.images = 20;
    spec.shapes = {builtin_shape("plane"), builtin_shape("tank"), builtin_shape("ship")};
    spec.min_copies = 0;
    spec.max_copies = 2;
  } else {
    throw std::invalid_argument("unknown experiment id " + std::to_string(id) + " (expected 1 or 2)");
  }
  return spec;
}

Dataset gen_dataset(const DatasetSpec& spec) {
  if (spec.rows == 0 || spec.cols == 0) throw std::invalid_argument("gen_dataset: frame must be non-empty");
  if (spec.images == 0) throw std::invalid_argument("gen_dataset: at least one image is required");
  if (spec.shapes.empty()) throw std::invalid_argument("gen_dataset: at least one shape is required");
  if (spec.min_copies > spec.max_copies) throw std::invalid_argument("gen_dataset: min_copies > max_copies");

  const std::size_t n = spec.rows * spec.cols;
  std::vector<Vector> base;
  for (const auto& s : spec.shapes) base.push_back(embed(s, spec.rows, spec.cols));

  Dataset ds;
  ds.A = DenseMatrix(n, spec.images);
  ds.rows = spec.rows;
  ds.cols = spec.cols;
  ds.components = spec.shapes;
  ds.placements.resize(spec.images);
  ds.noise_mean = 0.0;
  ds.seed = spec.seed;

  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::size_t> copies(spec.min_copies, spec.max_copies);
  std::uniform_int_distribution<std::size_t> any_shift(0, n - 1);

  for (std::size_t img = 0; img < spec.images; ++img) {
    Occupancy occupied(spec.rows, spec.cols);
    auto col = ds.A.col(img);
    for (std::size_t c = 0; c < spec.shapes.size(); ++c) {
      const Frame& bm = spec.shapes[c].bitmap;
      const std::size_t count = copies(rng);
      for (std::size_t copy = 0; copy < count; ++copy) {
        std::size_t p = 0;
        Vector placed;
        for (std::size_t attempt = 0; attempt < kPlacementAttempts; ++attempt) {
          if (spec.placement == PlacementMode::restricted) {
            std::uniform_int_distribution<std::size_t> row0(0, spec.rows - bm.rows());
            std::uniform_int_distribution<std::size_t> col0(0, spec.cols - bm.cols());
            const std::size_t down = row0(rng);
            const std::size_t right = col0(rng);
            // Moving content down/right is the inverse of the up/left shift.
            p = (n - (right * spec.rows + down) % n) % n;
          } else {
            p = any_shift(rng);
          }
          placed = apply_shift(base[c], p);
          if (!spec.avoid_overlap || occupied.fits(support(placed))) break;
        }
        occupied.claim(support(placed));
        for (std::size_t i = 0; i < n; ++i) col[i] += placed[i];
        ds.placements[img].push_back({c, 1.0, p});
      }
    }
    for (double& x : col) x = std::clamp(x, 0.0, 1.0);
  }
  return ds;
}

Dataset make_dataset(const DatasetSpec& spec) {
  Dataset ds = gen_dataset(spec);
  if (spec.noise_mean > 0.0) {
    ds.A = add_noise(ds.A, spec.noise_mean, spec.seed ^ 0x5bd1e995ULL);
    ds.noise_mean = spec.noise_mean;
  }
  return ds;
}

DenseMatrix add_noise(const DenseMatrix& a, double mean, std::uint64_t seed) {
  if (!(mean >= 0.0 && mean <= 0.5)) throw std::invalid_argument("add_noise: mean must lie in [0, 0.5]");
  DenseMatrix out = a;
  if (mean == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(0.0, 2.0 * mean);
  for (double& x : out.values()) x = std::clamp(x + noise(rng), 0.0, 1.0);
  return out;
}

double match_score(std::span<const double> w, std::span<const double> g) {
  if (w.size() != g.size()) throw std::invalid_argument("match_score: length mismatch");
  const Vector wh = centred_unit(w);
  const Vector gh = centred_unit(g);
  const CorrProfile profile = circ_xcorr(wh, gh);
  return *std::ranges::max_element(profile.values);
}

std::vector<ComponentMatch> assign_components(const DenseMatrix& found, const std::vector<Vector>& truth) {
  std::vector<ComponentMatch> table;
  for (std::size_t f = 0; f < found.cols(); ++f)
    for (std::size_t t = 0; t < truth.size(); ++t) {
      // A dead (constant) component matches nothing.
      double score = -1.0;
      try {
        score = match_score(found.col(f), truth[t]);
      } catch (const std::invalid_argument&) {
      }
      table.push_back({f, t, score});
    }
  // Stable so equal scores resolve to the lowest (found, truth) pair.
  std::ranges::stable_sort(table, [](const auto& a, const auto& b) { return a.score > b.score; });

  std::vector<bool> used_found(found.cols(), false);
  std::vector<bool> used_truth(truth.size(), false);
  std::vector<ComponentMatch> out;
  for (const auto& m : table) {
    if (used_found[m.found] || used_truth[m.truth]) continue;
    used_found[m.found] = used_truth[m.truth] = true;
    out.push_back(m);
  }
  std::ranges::sort(out, {}, &ComponentMatch::truth);
  return out;
}

}  // namespace shiftnmf
