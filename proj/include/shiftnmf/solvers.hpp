#pragma once

// Translation-invariant NMF: find W (n x k, nonnegative) and H (m x k grid of
// scaled cyclic shifts) minimizing F(W, H) = ||A - W <> H^T||_F^2.
//
// H is updated exactly, one component at a time, through circular
// cross-correlation (single_perm_nnls / mult_perm_nnls); W by a projected
// gradient method using the adjoint of H.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "shiftnmf/dense_matrix.hpp"
#include "shiftnmf/exec.hpp"
#include "shiftnmf/shift_algebra.hpp"

namespace shiftnmf {

struct SolveOptions {
  std::size_t k = 1;
  std::size_t inner_iter = 10;  // sweeps in mult_perm_nnls and steps in pg_update_W
  std::size_t outer_max = 100;
  double tol_err = 1e-3;
  double tol_grad = 1e-3;
  double rel_improve_tol = 1e-4;
  std::uint64_t seed = 0;
  bool randomize_order = false;
  // Test hook: pins every shift to 0, which turns the solver into plain
  // ALS-NMF with the same schedule.
  bool freeze_shifts = false;
  Exec exec = Exec::parallel;

  void validate() const;
};

enum class StopReason { converged, max_iters, cycle_detected };

std::string_view to_string(StopReason r);

struct SolveReport {
  std::vector<double> objective_history;  // F after each outer iteration
  std::size_t iterations_used = 0;
  StopReason stop_reason = StopReason::max_iters;

  double final_objective() const { return objective_history.back(); }
};

struct Factorization {
  DenseMatrix W;
  ShiftMatrix H;
  SolveReport report;
};

// Called after every outer iteration with the current factors.
using IterationObserver =
    std::function<void(std::size_t iteration, const DenseMatrix& W, const ShiftMatrix& H, double objective)>;

double objective(const DenseMatrix& a, const DenseMatrix& w, const ShiftMatrix& h, Exec exec = Exec::parallel);
double objective(const DenseMatrix& a, const DenseMatrix& w, const GenShiftMatrix& h, Exec exec = Exec::parallel);

// Best [r, p] minimizing ||v - r shift(w, p)||^2 over r >= 0 and all p.
// Ties on the correlation maximum go to the smallest p. Throws if w == 0.
ShiftScale single_perm_nnls(std::span<const double> v, std::span<const double> w);

struct MultPermOptions {
  std::size_t iter = 10;
  bool randomize_order = false;
  bool freeze_shifts = false;
  std::uint64_t seed = 0;  // only used when randomize_order is set
};

// Block coordinate descent over the k scaled shifts x for one data column v.
// If `trace` is given, ||v - W <> x||^2 is appended after every single
// component update.
std::vector<ShiftScale> mult_perm_nnls(std::span<const double> v, const DenseMatrix& w, std::vector<ShiftScale> x,
                                       const MultPermOptions& opts = {}, std::vector<double>* trace = nullptr);

// -2 (A - W <> H^T) <> H', with H' the entrywise adjoint of H.
DenseMatrix grad_W(const DenseMatrix& a, const DenseMatrix& w, const ShiftMatrix& h, Exec exec = Exec::parallel);

// Upper bound on the Lipschitz constant of grad_W with respect to W:
// 2 * max_s sum_t G_st, where G_st = sum_j coeff(H_js) coeff(H_jt).
double grad_lipschitz_bound(const ShiftMatrix& h);

// Projected gradient on W with step 1/(L i), i = 1..inner_iter. `trace`
// receives F after every step.
DenseMatrix pg_update_W(const DenseMatrix& a, DenseMatrix w, const ShiftMatrix& h, const SolveOptions& opts,
                        std::vector<double>* trace = nullptr);

// Seeded random start: W ~ U[0,1], coefficients ~ U[0,1], shifts ~ U{0..n-1}.
std::pair<DenseMatrix, ShiftMatrix> random_factors(std::size_t n, std::size_t m, const SolveOptions& opts);

Factorization als_solve(const DenseMatrix& a, const SolveOptions& opts, const IterationObserver& observer = {});
Factorization als_solve(const DenseMatrix& a, DenseMatrix w, ShiftMatrix h, const SolveOptions& opts,
                        const IterationObserver& observer = {});

// Divides every nonzero column of W by its l1 norm and scales the matching
// column of H's coefficients by the same factor. F is unchanged.
std::pair<DenseMatrix, ShiftMatrix> normalize_columns(DenseMatrix w, ShiftMatrix h);
std::pair<DenseMatrix, GenShiftMatrix> normalize_columns(DenseMatrix w, GenShiftMatrix h);

struct TwoStageResult {
  DenseMatrix W;                   // n x k final components, l1-normalized
  GenShiftMatrix H;                // m x k, entries may hold several shifts
  DenseMatrix stage1_W;            // kept stage-1 components, unit peak
  ShiftMatrix stage1_H;            // m x K' matching stage1_W
  ShiftMatrix stage2_H;            // K' x k, pairs with W
  std::vector<std::size_t> kept;   // stage-1 column indices that survived
  SolveReport stage1;
  SolveReport stage2;
};

inline constexpr double kDefaultDiscardThreshold = 0.1;

// Factor with K components, drop those whose largest coefficient is below
// discard_thresh times the global largest, refactor the survivors with k
// components and compose the two shift grids.
TwoStageResult two_stage(const DenseMatrix& a, std::size_t big_k, std::size_t k, double discard_thresh,
                         const SolveOptions& opts);

}  // namespace shiftnmf
