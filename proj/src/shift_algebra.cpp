#include "shiftnmf/shift_algebra.hpp"

#include <algorithm>
#include <string>
#include <type_traits>

namespace shiftnmf {

namespace {

void require_length(std::span<const double> v, std::size_t n, const char* what) {
  if (v.size() != n) {
    throw std::invalid_argument(std::string(what) + ": vector length " + std::to_string(v.size()) +
                                " does not match ambient " + std::to_string(n));
  }
}

// Calls f(coeff, shift) for each term of an entry, so ShiftMatrix and
// GenShiftMatrix share the diamond kernels.
template <class F>
void for_each_term(const ShiftScale& e, F&& f) {
  if (e.coeff != 0.0) f(e.coeff, e.shift);
}

template <class F>
void for_each_term(const GenShiftSum& e, F&& f) {
  for (const auto& t : e.terms()) f(t.coeff, t.shift);
}

template <class Grid>
DenseMatrix diamond_real_impl(const DenseMatrix& a, const Grid& grid, Exec exec) {
  if (a.cols() != grid.rows()) throw std::invalid_argument("diamond_real: A.cols must equal N.rows");
  if (a.rows() != grid.ambient()) throw std::invalid_argument("diamond_real: ambient of N must equal A.rows");
  DenseMatrix out(a.rows(), grid.cols());
  const auto k = static_cast<std::ptrdiff_t>(grid.cols());
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (std::ptrdiff_t i = 0; i < k; ++i) {
    auto dst = out.col(static_cast<std::size_t>(i));
    for (std::size_t j = 0; j < grid.rows(); ++j) {
      for_each_term(grid(j, static_cast<std::size_t>(i)),
                    [&](double c, std::size_t p) { add_shifted(dst, a.col(j), c, p); });
    }
  }
  return out;
}

template <class Grid>
DenseMatrix reconstruct_impl(const DenseMatrix& w, const Grid& h, Exec exec) {
  if (w.cols() != h.cols()) throw std::invalid_argument("reconstruct: W.cols must equal H.cols");
  if (w.rows() != h.ambient()) throw std::invalid_argument("reconstruct: ambient of H must equal W.rows");
  DenseMatrix out(w.rows(), h.rows());
  const auto m = static_cast<std::ptrdiff_t>(h.rows());
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    auto dst = out.col(static_cast<std::size_t>(i));
    for (std::size_t j = 0; j < h.cols(); ++j) {
      for_each_term(h(static_cast<std::size_t>(i), j),
                    [&](double c, std::size_t p) { add_shifted(dst, w.col(j), c, p); });
    }
  }
  return out;
}

template <class Entry>
AlgebraGrid<Entry> transpose_impl(const AlgebraGrid<Entry>& h) {
  AlgebraGrid<Entry> t(h.cols(), h.rows(), h.ambient());
  for (std::size_t i = 0; i < h.rows(); ++i)
    for (std::size_t j = 0; j < h.cols(); ++j) t.set(j, i, h(i, j));
  return t;
}

}  // namespace

void validate(const ShiftScale& e, std::size_t n) {
  if (!(e.coeff >= 0.0)) throw std::invalid_argument("ShiftScale: coefficient must be nonnegative");
  if (e.shift >= n) throw std::invalid_argument("ShiftScale: shift must lie in [0, n)");
}

GenShiftSum::GenShiftSum(std::size_t ambient, std::vector<ShiftScale> terms) : GenShiftSum(ambient) {
  for (const auto& t : terms) validate(t, ambient_);
  std::ranges::sort(terms, {}, &ShiftScale::shift);
  for (const auto& t : terms) {
    if (!terms_.empty() && terms_.back().shift == t.shift) {
      terms_.back().coeff += t.coeff;
    } else {
      terms_.push_back(t);
    }
  }
  std::erase_if(terms_, [](const ShiftScale& t) { return t.coeff == 0.0; });
}

GenShiftSum::GenShiftSum(std::size_t ambient, const ShiftScale& single)
    : GenShiftSum(ambient, std::vector<ShiftScale>{single}) {}

ShiftScale GenShiftSum::to_shift_scale() const {
  if (terms_.size() > 1) throw std::logic_error("GenShiftSum: more than one term, not an element of R+ x T_n");
  return terms_.empty() ? ShiftScale{} : terms_.front();
}

GenShiftSum& GenShiftSum::operator+=(const GenShiftSum& other) {
  if (other.ambient_ != ambient_) throw std::invalid_argument("GenShiftSum: ambient mismatch");
  std::vector<ShiftScale> merged = terms_;
  merged.insert(merged.end(), other.terms_.begin(), other.terms_.end());
  *this = GenShiftSum(ambient_, std::move(merged));
  return *this;
}

template <class Entry>
AlgebraGrid<Entry>::AlgebraGrid(std::size_t rows, std::size_t cols, std::size_t ambient)
    : rows_(rows), cols_(cols), ambient_(ambient) {
  if (ambient == 0) throw std::invalid_argument("AlgebraGrid: ambient dimension must be positive");
  if constexpr (std::is_same_v<Entry, GenShiftSum>) {
    entries_.assign(rows * cols, GenShiftSum(ambient));
  } else {
    entries_.assign(rows * cols, Entry{});
  }
}

template <class Entry>
void AlgebraGrid<Entry>::set(std::size_t i, std::size_t j, Entry e) {
  if (i >= rows_ || j >= cols_) throw std::out_of_range("AlgebraGrid::set: index out of range");
  if constexpr (std::is_same_v<Entry, GenShiftSum>) {
    if (e.ambient() != ambient_) throw std::invalid_argument("AlgebraGrid::set: ambient mismatch");
  } else {
    validate(e, ambient_);
  }
  entries_[i * cols_ + j] = std::move(e);
}

template class AlgebraGrid<ShiftScale>;
template class AlgebraGrid<GenShiftSum>;

Vector apply_shift(std::span<const double> v, std::size_t p) {
  Vector out(v.size(), 0.0);
  if (!v.empty()) add_shifted(out, v, 1.0, p);
  return out;
}

void add_shifted(std::span<double> out, std::span<const double> v, double coeff, std::size_t p) {
  const std::size_t n = v.size();
  if (out.size() != n) throw std::invalid_argument("add_shifted: length mismatch");
  if (n == 0) return;
  p %= n;
  // out[i] += c * v[i + p] for i < n - p, then the wrapped tail.
  const std::size_t head = n - p;
  for (std::size_t i = 0; i < head; ++i) out[i] += coeff * v[i + p];
  for (std::size_t i = head; i < n; ++i) out[i] += coeff * v[i - head];
}

Vector apply_elem(const ShiftScale& tau, std::span<const double> v) {
  validate(tau, v.size());
  Vector out(v.size(), 0.0);
  add_shifted(out, v, tau.coeff, tau.shift);
  return out;
}

Vector apply_gen(const GenShiftSum& alpha, std::span<const double> v) {
  require_length(v, alpha.ambient(), "apply_gen");
  Vector out(v.size(), 0.0);
  for (const auto& t : alpha.terms()) add_shifted(out, v, t.coeff, t.shift);
  return out;
}

ShiftScale elem_mul(const ShiftScale& a, const ShiftScale& b, std::size_t n) {
  validate(a, n);
  validate(b, n);
  return {a.coeff * b.coeff, (a.shift + b.shift) % n};
}

GenShiftSum elem_mul(const GenShiftSum& a, const GenShiftSum& b) {
  if (a.ambient() != b.ambient()) throw std::invalid_argument("elem_mul: ambient mismatch");
  const std::size_t n = a.ambient();
  std::vector<ShiftScale> terms;
  terms.reserve(a.size() * b.size());
  for (const auto& x : a.terms())
    for (const auto& y : b.terms()) terms.push_back({x.coeff * y.coeff, (x.shift + y.shift) % n});
  return GenShiftSum(n, std::move(terms));
}

DenseMatrix diamond_real(const DenseMatrix& a, const ShiftMatrix& grid, Exec exec) {
  return diamond_real_impl(a, grid, exec);
}

DenseMatrix diamond_real(const DenseMatrix& a, const GenShiftMatrix& grid, Exec exec) {
  return diamond_real_impl(a, grid, exec);
}

GenShiftMatrix diamond_alg(const GenShiftMatrix& m, const GenShiftMatrix& n) {
  if (m.cols() != n.rows()) throw std::invalid_argument("diamond_alg: M.cols must equal N.rows");
  if (m.ambient() != n.ambient()) throw std::invalid_argument("diamond_alg: ambient mismatch");
  GenShiftMatrix out(m.rows(), n.cols(), m.ambient());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < n.cols(); ++j) {
      GenShiftSum acc(m.ambient());
      for (std::size_t s = 0; s < m.cols(); ++s) acc += elem_mul(n(s, j), m(i, s));
      out.set(i, j, std::move(acc));
    }
  }
  return out;
}

DenseMatrix reconstruct(const DenseMatrix& w, const ShiftMatrix& h, Exec exec) {
  return reconstruct_impl(w, h, exec);
}

DenseMatrix reconstruct(const DenseMatrix& w, const GenShiftMatrix& h, Exec exec) {
  return reconstruct_impl(w, h, exec);
}

ShiftMatrix adjoint(const ShiftMatrix& h) {
  const std::size_t n = h.ambient();
  ShiftMatrix out(h.rows(), h.cols(), n);
  for (std::size_t i = 0; i < h.rows(); ++i) {
    for (std::size_t j = 0; j < h.cols(); ++j) {
      const auto& e = h(i, j);
      out.set(i, j, {e.coeff, (n - e.shift) % n});
    }
  }
  return out;
}

ShiftMatrix transpose(const ShiftMatrix& h) { return transpose_impl(h); }
GenShiftMatrix transpose(const GenShiftMatrix& h) { return transpose_impl(h); }

GenShiftMatrix to_gen(const ShiftMatrix& h) {
  GenShiftMatrix out(h.rows(), h.cols(), h.ambient());
  for (std::size_t i = 0; i < h.rows(); ++i)
    for (std::size_t j = 0; j < h.cols(); ++j) out.set(i, j, GenShiftSum(h.ambient(), h(i, j)));
  return out;
}

}  // namespace shiftnmf
