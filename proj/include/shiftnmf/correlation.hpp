#pragma once

// Circular cross-correlation profiles
//
//   values[p] = sum_i v[i] * w[(i + p) mod n] = <v, shift(w, p)>
//
// for all p at once. The FFT route costs O(n log n) for any n (no padding,
// which would break circularity); the naive route is the O(n^2) definition
// and serves as the test oracle.

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "shiftnmf/dense_matrix.hpp"

namespace shiftnmf {

struct CorrProfile {
  Vector values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t p) const { return values[p]; }
};

using Spectrum = std::vector<std::complex<double>>;

// Forward/inverse real transforms of one fixed length. Immutable once built,
// so a single plan is shared by all threads of a solve; each thread brings
// its own Workspace.
class CorrelationPlan {
 public:
  explicit CorrelationPlan(std::size_t n);
  ~CorrelationPlan();
  CorrelationPlan(const CorrelationPlan&) = delete;
  CorrelationPlan& operator=(const CorrelationPlan&) = delete;

  std::size_t size() const { return n_; }
  std::size_t spectrum_size() const { return n_ / 2 + 1; }

  struct Workspace {
    Spectrum freq;
    Spectrum input;
  };
  Workspace make_workspace() const;

  Spectrum forward(std::span<const double> x) const;
  void forward(std::span<const double> x, std::span<std::complex<double>> out) const;

  // Profile from precomputed spectra of v and w.
  void correlate(std::span<const std::complex<double>> v_hat, std::span<const std::complex<double>> w_hat,
                 std::span<double> out, Workspace& ws) const;

  // Profile of raw v against a precomputed spectrum of w.
  void correlate(std::span<const double> v, std::span<const std::complex<double>> w_hat,
                 std::span<double> out, Workspace& ws) const;

  CorrProfile correlate(std::span<const double> v, std::span<const double> w) const;

 private:
  struct Impl;
  std::size_t n_;
  std::unique_ptr<Impl> impl_;
};

// Process-wide cache keyed by length; safe to call concurrently.
const CorrelationPlan& plan_for(std::size_t n);

CorrProfile circ_xcorr(std::span<const double> v, std::span<const double> w);
CorrProfile circ_xcorr_naive(std::span<const double> v, std::span<const double> w);

}  // namespace shiftnmf
