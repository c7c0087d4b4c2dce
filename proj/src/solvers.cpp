#include "shiftnmf/solvers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "shiftnmf/correlation.hpp"

namespace shiftnmf {

namespace {

constexpr double kCycleTolerance = 1e-12;
constexpr std::size_t kCycleWindow = 5;
constexpr double kReseedScale = 0.01;

void check_factor_shapes(const DenseMatrix& a, const DenseMatrix& w, std::size_t h_rows, std::size_t h_cols,
                         std::size_t ambient) {
  if (w.rows() != a.rows()) throw std::invalid_argument("W must have as many rows as A");
  if (h_rows != a.cols()) throw std::invalid_argument("H must have one row per column of A");
  if (h_cols != w.cols()) throw std::invalid_argument("H must have one column per column of W");
  if (ambient != a.rows()) throw std::invalid_argument("ambient length of H must equal A.rows");
}

template <class Grid>
double objective_impl(const DenseMatrix& a, const DenseMatrix& w, const Grid& h, Exec exec) {
  check_factor_shapes(a, w, h.rows(), h.cols(), h.ambient());
  const DenseMatrix rec = reconstruct(w, h, exec);
  double s = 0.0;
  const auto av = a.values();
  const auto rv = rec.values();
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - rv[i];
    s += d * d;
  }
  return s;
}

ShiftScale best_from_profile(std::span<const double> profile, double w_norm2) {
  std::size_t best = 0;
  for (std::size_t p = 1; p < profile.size(); ++p)
    if (profile[p] > profile[best]) best = p;
  const double c = profile[best];
  return {c > 0.0 ? c / w_norm2 : 0.0, best};
}

// Per-W quantities shared by every row update in one ALS step.
struct ComponentBank {
  const CorrelationPlan* plan = nullptr;
  std::vector<Spectrum> spectra;
  std::vector<double> norm2;
};

ComponentBank make_bank(const DenseMatrix& w, bool freeze_shifts) {
  ComponentBank bank;
  bank.norm2.resize(w.cols());
  for (std::size_t j = 0; j < w.cols(); ++j) bank.norm2[j] = squared_norm(w.col(j));
  if (!freeze_shifts) {
    bank.plan = &plan_for(w.rows());
    for (std::size_t j = 0; j < w.cols(); ++j) bank.spectra.push_back(bank.plan->forward(w.col(j)));
  }
  return bank;
}

struct RowScratch {
  Vector recon;
  Vector resid;
  Vector profile;
  CorrelationPlan::Workspace ws;
  std::vector<std::size_t> order;

  RowScratch(std::size_t n, std::size_t k, const ComponentBank& bank)
      : recon(n), resid(n), profile(n), order(k) {
    if (bank.plan) ws = bank.plan->make_workspace();
  }
};

double residual_norm2(std::span<const double> v, std::span<const double> recon) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double d = v[i] - recon[i];
    s += d * d;
  }
  return s;
}

void mult_perm_core(std::span<const double> v, const DenseMatrix& w, const ComponentBank& bank,
                    std::span<ShiftScale> x, const MultPermOptions& opts, RowScratch& s,
                    std::vector<double>* trace) {
  const std::size_t k = w.cols();
  std::iota(s.order.begin(), s.order.end(), std::size_t{0});
  std::mt19937_64 rng(opts.seed);

  for (std::size_t sweep = 0; sweep < opts.iter; ++sweep) {
    // Rebuilt every sweep so rounding from the incremental updates below
    // cannot accumulate.
    std::ranges::fill(s.recon, 0.0);
    for (std::size_t i = 0; i < k; ++i) add_shifted(s.recon, w.col(i), x[i].coeff, x[i].shift);
    if (opts.randomize_order) std::ranges::shuffle(s.order, rng);

    for (const std::size_t i : s.order) {
      add_shifted(s.recon, w.col(i), -x[i].coeff, x[i].shift);
      if (bank.norm2[i] == 0.0) {
        x[i].coeff = 0.0;
      } else {
        for (std::size_t t = 0; t < v.size(); ++t) s.resid[t] = v[t] - s.recon[t];
        if (opts.freeze_shifts) {
          const double c = dot(s.resid, w.col(i));
          x[i] = {c > 0.0 ? c / bank.norm2[i] : 0.0, 0};
        } else {
          bank.plan->correlate(std::span<const double>(s.resid), bank.spectra[i], s.profile, s.ws);
          x[i] = best_from_profile(s.profile, bank.norm2[i]);
        }
        add_shifted(s.recon, w.col(i), x[i].coeff, x[i].shift);
      }
      if (trace) trace->push_back(residual_norm2(v, s.recon));
    }
  }
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void reseed_dead_columns(DenseMatrix& w, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(0.0, kReseedScale);
  for (std::size_t j = 0; j < w.cols(); ++j) {
    auto c = w.col(j);
    if (std::ranges::all_of(c, [](double x) { return x == 0.0; })) {
      for (double& x : c) x = dist(rng);
    }
  }
}

// Independent shuffle stream per (solve, outer step, row), so the row loop
// can run in any order or thread assignment.
std::uint64_t row_seed(std::uint64_t seed, std::size_t outer, std::size_t row) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(outer), static_cast<std::uint32_t>(row)};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

bool detect_cycle(const std::vector<double>& history) {
  const std::size_t n = history.size();
  if (n < 2) return false;
  const double current = history.back();
  const std::size_t first = n - 1 > kCycleWindow ? n - 1 - kCycleWindow : 0;
  for (std::size_t i = first; i + 1 < n; ++i)
    if (std::abs(history[i] - current) <= kCycleTolerance) return true;
  return false;
}

}  // namespace

void SolveOptions::validate() const {
  if (k < 1) throw std::invalid_argument("SolveOptions: k must be at least 1");
  if (inner_iter < 1) throw std::invalid_argument("SolveOptions: inner_iter must be at least 1");
  if (outer_max < 1) throw std::invalid_argument("SolveOptions: outer_max must be at least 1");
  if (!(tol_err > 0.0) || !(tol_grad > 0.0) || !(rel_improve_tol > 0.0)) {
    throw std::invalid_argument("SolveOptions: tolerances must be positive");
  }
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::converged: return "converged";
    case StopReason::max_iters: return "max_iters";
    case StopReason::cycle_detected: return "cycle_detected";
  }
  return "unknown";
}

double objective(const DenseMatrix& a, const DenseMatrix& w, const ShiftMatrix& h, Exec exec) {
  return objective_impl(a, w, h, exec);
}

double objective(const DenseMatrix& a, const DenseMatrix& w, const GenShiftMatrix& h, Exec exec) {
  return objective_impl(a, w, h, exec);
}

ShiftScale single_perm_nnls(std::span<const double> v, std::span<const double> w) {
  if (v.size() != w.size()) throw std::invalid_argument("single_perm_nnls: length mismatch");
  const double w_norm2 = squared_norm(w);
  if (w_norm2 == 0.0) throw std::invalid_argument("single_perm_nnls: w must be nonzero");
  const CorrProfile profile = circ_xcorr(v, w);
  return best_from_profile(profile.values, w_norm2);
}

std::vector<ShiftScale> mult_perm_nnls(std::span<const double> v, const DenseMatrix& w, std::vector<ShiftScale> x,
                                       const MultPermOptions& opts, std::vector<double>* trace) {
  if (v.size() != w.rows()) throw std::invalid_argument("mult_perm_nnls: v length must equal W.rows");
  if (x.size() != w.cols()) throw std::invalid_argument("mult_perm_nnls: x must have one entry per column of W");
  for (const auto& e : x) validate(e, w.rows());
  const ComponentBank bank = make_bank(w, opts.freeze_shifts);
  RowScratch scratch(w.rows(), w.cols(), bank);
  mult_perm_core(v, w, bank, x, opts, scratch, trace);
  return x;
}

DenseMatrix grad_W(const DenseMatrix& a, const DenseMatrix& w, const ShiftMatrix& h, Exec exec) {
  check_factor_shapes(a, w, h.rows(), h.cols(), h.ambient());
  DenseMatrix resid = reconstruct(w, h, exec);
  auto rv = resid.values();
  const auto av = a.values();
  for (std::size_t i = 0; i < rv.size(); ++i) rv[i] = av[i] - rv[i];
  DenseMatrix g = diamond_real(resid, adjoint(h), exec);
  for (double& x : g.values()) x *= -2.0;
  return g;
}

double grad_lipschitz_bound(const ShiftMatrix& h) {
  const std::size_t k = h.cols();
  std::vector<double> gram(k * k, 0.0);
  for (std::size_t j = 0; j < h.rows(); ++j)
    for (std::size_t s = 0; s < k; ++s)
      for (std::size_t t = 0; t < k; ++t) gram[s * k + t] += h(j, s).coeff * h(j, t).coeff;
  double worst = 0.0;
  for (std::size_t s = 0; s < k; ++s) {
    double row = 0.0;
    for (std::size_t t = 0; t < k; ++t) row += gram[s * k + t];
    worst = std::max(worst, row);
  }
  return 2.0 * worst;
}

DenseMatrix pg_update_W(const DenseMatrix& a, DenseMatrix w, const ShiftMatrix& h, const SolveOptions& opts,
                        std::vector<double>* trace) {
  check_factor_shapes(a, w, h.rows(), h.cols(), h.ambient());
  const double lipschitz = grad_lipschitz_bound(h);
  if (lipschitz == 0.0) return w;  // all coefficients zero: F does not depend on W

  for (std::size_t i = 1; i <= opts.inner_iter; ++i) {
    const DenseMatrix g = grad_W(a, w, h, opts.exec);
    const double g_norm = std::sqrt(frobenius_norm_squared(g));
    const double step = 1.0 / (lipschitz * static_cast<double>(i));
    auto wv = w.values();
    const auto gv = g.values();
    for (std::size_t t = 0; t < wv.size(); ++t) wv[t] = std::max(0.0, wv[t] - step * gv[t]);

    const double f = objective(a, w, h, opts.exec);
    if (trace) trace->push_back(f);
    if (std::sqrt(f) < opts.tol_err || g_norm < opts.tol_grad) break;
  }
  return w;
}

std::pair<DenseMatrix, ShiftMatrix> random_factors(std::size_t n, std::size_t m, const SolveOptions& opts) {
  opts.validate();
  if (n == 0 || m == 0) throw std::invalid_argument("random_factors: empty data");
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> shift(0, n - 1);

  DenseMatrix w(n, opts.k);
  for (double& x : w.values()) x = unit(rng);
  ShiftMatrix h(m, opts.k, n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < opts.k; ++j) {
      const double c = unit(rng);
      const std::size_t p = shift(rng);
      h.set(i, j, {c, opts.freeze_shifts ? 0 : p});
    }
  }
  return {std::move(w), std::move(h)};
}

Factorization als_solve(const DenseMatrix& a, const SolveOptions& opts, const IterationObserver& observer) {
  opts.validate();
  auto [w, h] = random_factors(a.rows(), a.cols(), opts);
  return als_solve(a, std::move(w), std::move(h), opts, observer);
}

Factorization als_solve(const DenseMatrix& a, DenseMatrix w, ShiftMatrix h, const SolveOptions& opts,
                        const IterationObserver& observer) {
  opts.validate();
  if (a.empty()) throw std::invalid_argument("als_solve: empty data matrix");
  if (!is_nonnegative(a)) throw std::invalid_argument("als_solve: A must be entrywise nonnegative");
  check_factor_shapes(a, w, h.rows(), h.cols(), h.ambient());
  if (w.cols() != opts.k) throw std::invalid_argument("als_solve: W must have k columns");

  const std::size_t n = a.rows();
  const std::size_t m = a.cols();
  const std::size_t k = opts.k;
  std::mt19937_64 reseed_rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);

  SolveReport report;
  for (std::size_t outer = 1; outer <= opts.outer_max; ++outer) {
    reseed_dead_columns(w, reseed_rng);

    // H update: rows are independent subproblems.
    const ComponentBank bank = make_bank(w, opts.freeze_shifts);
    std::vector<ShiftScale> rows(m * k);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < k; ++j) rows[i * k + j] = h(i, j);

#pragma omp parallel if (opts.exec == Exec::parallel)
    {
      RowScratch scratch(n, k, bank);
#pragma omp for schedule(dynamic)
      for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
        MultPermOptions mp{opts.inner_iter, opts.randomize_order, opts.freeze_shifts, 0};
        if (opts.randomize_order) mp.seed = row_seed(opts.seed, outer, static_cast<std::size_t>(i));
        const auto idx = static_cast<std::size_t>(i);
        mult_perm_core(a.col(idx), w, bank, std::span<ShiftScale>(rows.data() + idx * k, k), mp, scratch,
                       nullptr);
      }
    }
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < k; ++j) h.set(i, j, rows[i * k + j]);

    // W update, then the explicit nonnegativity clamp of the outer method.
    w = pg_update_W(a, std::move(w), h, opts);
    for (double& x : w.values()) x = std::max(0.0, x);

    const double f = objective(a, w, h, opts.exec);
    report.objective_history.push_back(f);
    report.iterations_used = outer;
    if (observer) observer(outer, w, h, f);

    const auto& hist = report.objective_history;
    if (f == 0.0) {
      report.stop_reason = StopReason::converged;
      break;
    }
    if (hist.size() >= 2) {
      const double prev = hist[hist.size() - 2];
      if (std::abs(prev - f) <= opts.rel_improve_tol * prev) {
        report.stop_reason = StopReason::converged;
        break;
      }
      if (detect_cycle(hist)) {
        report.stop_reason = StopReason::cycle_detected;
        break;
      }
    }
    report.stop_reason = StopReason::max_iters;
  }
  return {std::move(w), std::move(h), std::move(report)};
}

std::pair<DenseMatrix, ShiftMatrix> normalize_columns(DenseMatrix w, ShiftMatrix h) {
  if (h.cols() != w.cols()) throw std::invalid_argument("normalize_columns: W and H disagree on k");
  for (std::size_t j = 0; j < w.cols(); ++j) {
    auto c = w.col(j);
    double l1 = 0.0;
    for (double x : c) l1 += std::abs(x);
    if (l1 == 0.0) continue;
    for (double& x : c) x /= l1;
    for (std::size_t i = 0; i < h.rows(); ++i) h.set(i, j, {h(i, j).coeff * l1, h(i, j).shift});
  }
  return {std::move(w), std::move(h)};
}

std::pair<DenseMatrix, GenShiftMatrix> normalize_columns(DenseMatrix w, GenShiftMatrix h) {
  if (h.cols() != w.cols()) throw std::invalid_argument("normalize_columns: W and H disagree on k");
  for (std::size_t j = 0; j < w.cols(); ++j) {
    auto c = w.col(j);
    double l1 = 0.0;
    for (double x : c) l1 += std::abs(x);
    if (l1 == 0.0) continue;
    for (double& x : c) x /= l1;
    for (std::size_t i = 0; i < h.rows(); ++i) {
      std::vector<ShiftScale> terms = h(i, j).terms();
      for (auto& t : terms) t.coeff *= l1;
      h.set(i, j, GenShiftSum(h.ambient(), std::move(terms)));
    }
  }
  return {std::move(w), std::move(h)};
}

TwoStageResult two_stage(const DenseMatrix& a, std::size_t big_k, std::size_t k, double discard_thresh,
                         const SolveOptions& opts) {
  if (k < 1 || big_k < k) throw std::invalid_argument("two_stage: requires K >= k >= 1");
  if (!(discard_thresh >= 0.0)) throw std::invalid_argument("two_stage: discard threshold must be nonnegative");

  SolveOptions first = opts;
  first.k = big_k;
  Factorization stage1 = als_solve(a, first);

  // Unit-peak components so coefficients read as image intensities.
  DenseMatrix& w1 = stage1.W;
  ShiftMatrix& h1 = stage1.H;
  for (std::size_t j = 0; j < w1.cols(); ++j) {
    auto c = w1.col(j);
    const double peak = max_abs(c);
    if (peak == 0.0) {
      for (std::size_t i = 0; i < h1.rows(); ++i) h1.set(i, j, {0.0, h1(i, j).shift});
      continue;
    }
    for (double& x : c) x /= peak;
    for (std::size_t i = 0; i < h1.rows(); ++i) h1.set(i, j, {h1(i, j).coeff * peak, h1(i, j).shift});
  }

  std::vector<double> col_max(big_k, 0.0);
  for (std::size_t i = 0; i < h1.rows(); ++i)
    for (std::size_t j = 0; j < big_k; ++j) col_max[j] = std::max(col_max[j], h1(i, j).coeff);
  const double global_max = *std::ranges::max_element(col_max);

  TwoStageResult out;
  for (std::size_t j = 0; j < big_k; ++j)
    if (global_max > 0.0 && col_max[j] >= discard_thresh * global_max) out.kept.push_back(j);
  if (out.kept.empty()) {
    throw std::runtime_error("two_stage: every stage-1 component was discarded; lower the discard threshold");
  }

  out.stage1_W = select_columns(w1, out.kept);
  out.stage1_H = ShiftMatrix(h1.rows(), out.kept.size(), h1.ambient());
  for (std::size_t i = 0; i < h1.rows(); ++i)
    for (std::size_t c = 0; c < out.kept.size(); ++c) out.stage1_H.set(i, c, h1(i, out.kept[c]));
  out.stage1 = std::move(stage1.report);

  SolveOptions second = opts;
  second.k = k;
  second.seed = opts.seed + 1;
  Factorization stage2 = als_solve(out.stage1_W, second);
  out.stage2 = std::move(stage2.report);
  auto [w, h2] = normalize_columns(std::move(stage2.W), std::move(stage2.H));
  out.W = std::move(w);
  out.stage2_H = std::move(h2);

  // A ~ W~ <> H1^T ~ (W <> H2^T) <> H1^T = W <> (H2^T <> H1^T)
  const GenShiftMatrix combined = diamond_alg(to_gen(transpose(out.stage2_H)), to_gen(transpose(out.stage1_H)));
  out.H = transpose(combined);
  return out;
}

}  // namespace shiftnmf
