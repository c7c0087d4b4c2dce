#pragma once

// Cyclic shifts of R^n and the two algebras built on them:
//   ShiftScale    an element [r, p] of R+ x T_n (scaled cyclic shift)
//   GenShiftSum   an element of R+T_n (nonnegative sum of scaled shifts)
// plus grids of either, and the diamond products that apply a grid to the
// columns of a real matrix or compose two grids.
//
// Convention (0-based): shifting v by p gives out[i] = v[(i + p) mod n].
// Shifts are kept as residues; no circulant matrix is ever formed.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "shiftnmf/dense_matrix.hpp"
#include "shiftnmf/exec.hpp"

namespace shiftnmf {

struct ShiftScale {
  double coeff = 0.0;
  std::size_t shift = 0;

  bool operator==(const ShiftScale&) const = default;
};

// Throws std::invalid_argument unless coeff >= 0 and shift < n.
void validate(const ShiftScale& e, std::size_t n);

// Nonnegative combination of distinct shifts, kept canonical: terms sorted by
// shift, duplicates merged, zero coefficients dropped. Equality is structural.
class GenShiftSum {
 public:
  explicit GenShiftSum(std::size_t ambient = 1) : ambient_(ambient) {
    if (ambient == 0) throw std::invalid_argument("GenShiftSum: ambient dimension must be positive");
  }
  GenShiftSum(std::size_t ambient, std::vector<ShiftScale> terms);
  GenShiftSum(std::size_t ambient, const ShiftScale& single);

  std::size_t ambient() const { return ambient_; }
  const std::vector<ShiftScale>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  // Defined for sums with at most one term; the empty sum maps to [0, 0].
  ShiftScale to_shift_scale() const;

  GenShiftSum& operator+=(const GenShiftSum& other);
  friend GenShiftSum operator+(GenShiftSum a, const GenShiftSum& b) { return a += b; }

  bool operator==(const GenShiftSum&) const = default;

 private:
  std::size_t ambient_;
  std::vector<ShiftScale> terms_;
};

// Row-major m x k grid of algebra elements sharing one ambient length n.
template <class Entry>
class AlgebraGrid {
 public:
  AlgebraGrid() = default;
  AlgebraGrid(std::size_t rows, std::size_t cols, std::size_t ambient);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t ambient() const { return ambient_; }

  const Entry& operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }
  void set(std::size_t i, std::size_t j, Entry e);

  std::span<const Entry> row(std::size_t i) const { return {entries_.data() + i * cols_, cols_}; }

  bool operator==(const AlgebraGrid&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t ambient_ = 1;
  std::vector<Entry> entries_;
};

using ShiftMatrix = AlgebraGrid<ShiftScale>;
using GenShiftMatrix = AlgebraGrid<GenShiftSum>;

extern template class AlgebraGrid<ShiftScale>;
extern template class AlgebraGrid<GenShiftSum>;

// --- action on vectors ------------------------------------------------------

Vector apply_shift(std::span<const double> v, std::size_t p);

// out += coeff * shift(v, p). The workhorse behind every reconstruction.
void add_shifted(std::span<double> out, std::span<const double> v, double coeff, std::size_t p);

Vector apply_elem(const ShiftScale& tau, std::span<const double> v);
Vector apply_gen(const GenShiftSum& alpha, std::span<const double> v);

// --- algebra products -------------------------------------------------------

// [r1, p1] * [r2, p2] = [r1 r2, p1 + p2 mod n].
ShiftScale elem_mul(const ShiftScale& a, const ShiftScale& b, std::size_t n);
GenShiftSum elem_mul(const GenShiftSum& a, const GenShiftSum& b);

// (A <> N)_{:,i} = sum_j N_{ji}(A_{:,j}); A is n x m, N is m x k.
DenseMatrix diamond_real(const DenseMatrix& a, const ShiftMatrix& grid, Exec exec = Exec::parallel);
DenseMatrix diamond_real(const DenseMatrix& a, const GenShiftMatrix& grid, Exec exec = Exec::parallel);

// (M <> N)_{ij} = sum_s N_{sj} * M_{is}.
GenShiftMatrix diamond_alg(const GenShiftMatrix& m, const GenShiftMatrix& n);

// W <> H^T without forming the transpose: column i is sum_j H_{ij}(W_{:,j}).
DenseMatrix reconstruct(const DenseMatrix& w, const ShiftMatrix& h, Exec exec = Exec::parallel);
DenseMatrix reconstruct(const DenseMatrix& w, const GenShiftMatrix& h, Exec exec = Exec::parallel);

// Entrywise [r, t] -> [r, (n - t) mod n]; the shift action's transpose.
ShiftMatrix adjoint(const ShiftMatrix& h);

ShiftMatrix transpose(const ShiftMatrix& h);
GenShiftMatrix transpose(const GenShiftMatrix& h);
GenShiftMatrix to_gen(const ShiftMatrix& h);

}  // namespace shiftnmf
