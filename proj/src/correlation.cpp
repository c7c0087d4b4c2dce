#include "shiftnmf/correlation.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <string>

namespace shiftnmf {

namespace {

// FFTW's planner is not reentrant; execution of an existing plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                                std::to_string(b) + ")");
  }
  if (a == 0) throw std::invalid_argument(std::string(what) + ": zero-length input");
}

fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

struct CorrelationPlan::Impl {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;

  ~Impl() {
    std::lock_guard lock(planner_mutex());
    if (r2c) fftw_destroy_plan(r2c);
    if (c2r) fftw_destroy_plan(c2r);
  }
};

CorrelationPlan::CorrelationPlan(std::size_t n) : n_(n), impl_(std::make_unique<Impl>()) {
  if (n == 0) throw std::invalid_argument("CorrelationPlan: length must be positive");
  // ESTIMATE keeps plan selection deterministic; UNALIGNED lets any caller
  // buffer be used with the new-array execute functions.
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  const int len = static_cast<int>(n);
  double* real = fftw_alloc_real(n);
  fftw_complex* freq = fftw_alloc_complex(spectrum_size());
  {
    std::lock_guard lock(planner_mutex());
    impl_->r2c = fftw_plan_dft_r2c_1d(len, real, freq, flags);
    impl_->c2r = fftw_plan_dft_c2r_1d(len, freq, real, flags);
  }
  fftw_free(real);
  fftw_free(freq);
  if (!impl_->r2c || !impl_->c2r) throw std::runtime_error("CorrelationPlan: FFTW planning failed");
}

CorrelationPlan::~CorrelationPlan() = default;

CorrelationPlan::Workspace CorrelationPlan::make_workspace() const {
  return {Spectrum(spectrum_size()), Spectrum(spectrum_size())};
}

Spectrum CorrelationPlan::forward(std::span<const double> x) const {
  Spectrum out(spectrum_size());
  forward(x, out);
  return out;
}

void CorrelationPlan::forward(std::span<const double> x, std::span<std::complex<double>> out) const {
  check_lengths(x.size(), n_, "CorrelationPlan::forward");
  if (out.size() != spectrum_size()) throw std::invalid_argument("CorrelationPlan::forward: bad output size");
  // Out-of-place r2c leaves its input untouched.
  fftw_execute_dft_r2c(impl_->r2c, const_cast<double*>(x.data()), as_fftw(out.data()));
}

void CorrelationPlan::correlate(std::span<const std::complex<double>> v_hat,
                                std::span<const std::complex<double>> w_hat, std::span<double> out,
                                Workspace& ws) const {
  const std::size_t h = spectrum_size();
  if (v_hat.size() != h || w_hat.size() != h || out.size() != n_) {
    throw std::invalid_argument("CorrelationPlan::correlate: size mismatch");
  }
  // values[p] = sum_i v_i w_{i+p}  <=>  DFT(values) = conj(V) .* W
  const double scale = 1.0 / static_cast<double>(n_);
  for (std::size_t f = 0; f < h; ++f) ws.freq[f] = std::conj(v_hat[f]) * w_hat[f] * scale;
  // c2r destroys its input, which is why the product lives in the workspace.
  fftw_execute_dft_c2r(impl_->c2r, as_fftw(ws.freq.data()), out.data());
}

void CorrelationPlan::correlate(std::span<const double> v, std::span<const std::complex<double>> w_hat,
                                std::span<double> out, Workspace& ws) const {
  check_lengths(v.size(), n_, "CorrelationPlan::correlate");
  forward(v, ws.input);
  correlate(ws.input, w_hat, out, ws);
}

CorrProfile CorrelationPlan::correlate(std::span<const double> v, std::span<const double> w) const {
  check_lengths(v.size(), w.size(), "circ_xcorr");
  check_lengths(v.size(), n_, "circ_xcorr");
  auto ws = make_workspace();
  const Spectrum v_hat = forward(v);
  const Spectrum w_hat = forward(w);
  CorrProfile profile{Vector(n_)};
  correlate(v_hat, w_hat, profile.values, ws);
  return profile;
}

const CorrelationPlan& plan_for(std::size_t n) {
  // Plans in the cache lock the planner mutex on destruction, so it has to
  // be constructed first and therefore outlive the cache.
  static std::mutex& planner = planner_mutex();
  (void)planner;
  static std::mutex cache_mutex;
  static std::map<std::size_t, std::unique_ptr<CorrelationPlan>> cache;
  std::lock_guard lock(cache_mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<CorrelationPlan>(n);
  return *slot;
}

CorrProfile circ_xcorr(std::span<const double> v, std::span<const double> w) {
  check_lengths(v.size(), w.size(), "circ_xcorr");
  return plan_for(v.size()).correlate(v, w);
}

CorrProfile circ_xcorr_naive(std::span<const double> v, std::span<const double> w) {
  check_lengths(v.size(), w.size(), "circ_xcorr_naive");
  const std::size_t n = v.size();
  CorrProfile profile{Vector(n, 0.0)};
  for (std::size_t p = 0; p < n; ++p) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i] * w[(i + p) % n];
    profile.values[p] = s;
  }
  return profile;
}

}  // namespace shiftnmf
