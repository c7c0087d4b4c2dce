#include "shiftnmf/dense_matrix.hpp"

#include <algorithm>

namespace shiftnmf {

double frobenius_norm_squared(const DenseMatrix& m) { return squared_norm(m.values()); }

DenseMatrix select_columns(const DenseMatrix& m, std::span<const std::size_t> cols) {
  DenseMatrix out(m.rows(), cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (cols[c] >= m.cols()) throw std::out_of_range("select_columns: column index out of range");
    std::ranges::copy(m.col(cols[c]), out.col(c).begin());
  }
  return out;
}

bool is_nonnegative(const DenseMatrix& m) {
  return std::ranges::all_of(m.values(), [](double x) { return x >= 0.0; });
}

}  // namespace shiftnmf
