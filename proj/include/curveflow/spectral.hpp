#pragma once

// Uniform periodic grids on the m-fold circle, Fourier transforms and the
// derivative/quadrature operators built on them.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "curveflow/errors.hpp"

namespace curveflow {

using Complex = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Uniform nodes theta_j = 2*pi*m*j/n, j = 0..n-1, on [0, 2*pi*m).
class TangentAngleGrid {
public:
  TangentAngleGrid(int m, int n) : m_(m), n_(n) {
    if (m < 1) {
      throw ValidationError("grid: winding number m must be >= 1, got " + std::to_string(m));
    }
    if (n < 16 || n % 2 != 0) {
      throw ValidationError("grid: sample count n must be even and >= 16, got " +
                            std::to_string(n));
    }
  }

  int m() const noexcept { return m_; }
  int n() const noexcept { return n_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(n_); }
  double total_angle() const noexcept { return kTwoPi * m_; }
  double spacing() const noexcept { return total_angle() / n_; }
  double node(std::size_t j) const noexcept { return total_angle() * static_cast<double>(j) / n_; }

  std::vector<double> nodes() const {
    std::vector<double> out(size());
    for (std::size_t j = 0; j < size(); ++j) out[j] = node(j);
    return out;
  }

  /// Angular frequency (in theta) of DFT index q: q/m.
  double frequency(int q) const noexcept { return static_cast<double>(q) / m_; }

  bool operator==(const TangentAngleGrid&) const = default;

private:
  int m_;
  int n_;
};

inline void require_same_grid(const TangentAngleGrid& a, const TangentAngleGrid& b,
                              const char* where) {
  if (a != b) {
    throw GridMismatchError(std::string(where) + ": grid mismatch (m=" + std::to_string(a.m()) +
                            ", n=" + std::to_string(a.n()) + " vs m=" + std::to_string(b.m()) +
                            ", n=" + std::to_string(b.n()) + ")");
  }
}

namespace detail {

// FFTW plans are created once per size and shared. Planning is not thread
// safe, so creation is serialized; execution through the new-array interface is.
class FftPlans {
public:
  static FftPlans& instance() {
    static FftPlans plans;
    return plans;
  }

  fftw_plan r2c(int n) { return get(n, Kind::r2c); }
  fftw_plan c2r(int n) { return get(n, Kind::c2r); }
  fftw_plan c2c_forward(int n) { return get(n, Kind::c2c_forward); }
  fftw_plan c2c_backward(int n) { return get(n, Kind::c2c_backward); }

  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;

  ~FftPlans() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

private:
  enum class Kind { r2c, c2r, c2c_forward, c2c_backward };

  FftPlans() = default;

  fftw_plan get(int n, Kind kind) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(n, kind);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    std::vector<double> real(static_cast<std::size_t>(n));
    std::vector<Complex> cplx(static_cast<std::size_t>(n));
    auto* creal = reinterpret_cast<fftw_complex*>(cplx.data());
    fftw_plan plan = nullptr;
    switch (kind) {
      case Kind::r2c: plan = fftw_plan_dft_r2c_1d(n, real.data(), creal, flags); break;
      case Kind::c2r: plan = fftw_plan_dft_c2r_1d(n, creal, real.data(), flags); break;
      case Kind::c2c_forward:
      case Kind::c2c_backward: {
        std::vector<Complex> out(static_cast<std::size_t>(n));
        plan = fftw_plan_dft_1d(n, creal, reinterpret_cast<fftw_complex*>(out.data()),
                                kind == Kind::c2c_forward ? FFTW_FORWARD : FFTW_BACKWARD, flags);
        break;
      }
    }
    plans_.emplace(key, plan);
    return plan;
  }

  std::mutex mutex_;
  std::map<std::pair<int, Kind>, fftw_plan> plans_;
};

}  // namespace detail

/// Unnormalized forward real DFT; returns the n/2+1 nonnegative-index coefficients.
inline std::vector<Complex> rfft(std::span<const double> values) {
  const int n = static_cast<int>(values.size());
  std::vector<double> in(values.begin(), values.end());
  std::vector<Complex> out(values.size() / 2 + 1);
  fftw_execute_dft_r2c(detail::FftPlans::instance().r2c(n), in.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

/// Inverse of rfft, including the 1/n normalization.
inline std::vector<double> irfft(std::span<const Complex> coeffs, std::size_t n) {
  std::vector<Complex> in(coeffs.begin(), coeffs.end());
  std::vector<double> out(n);
  fftw_execute_dft_c2r(detail::FftPlans::instance().c2r(static_cast<int>(n)),
                       reinterpret_cast<fftw_complex*>(in.data()), out.data());
  const double scale = 1.0 / static_cast<double>(n);
  for (double& v : out) v *= scale;
  return out;
}

inline std::vector<Complex> fft(std::span<const Complex> values) {
  std::vector<Complex> in(values.begin(), values.end());
  std::vector<Complex> out(values.size());
  fftw_execute_dft(detail::FftPlans::instance().c2c_forward(static_cast<int>(values.size())),
                   reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

inline std::vector<Complex> ifft(std::span<const Complex> coeffs) {
  std::vector<Complex> in(coeffs.begin(), coeffs.end());
  std::vector<Complex> out(coeffs.size());
  fftw_execute_dft(detail::FftPlans::instance().c2c_backward(static_cast<int>(coeffs.size())),
                   reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  const double scale = 1.0 / static_cast<double>(coeffs.size());
  for (Complex& v : out) v *= scale;
  return out;
}

/// Signed DFT index of position q in a length-n complex spectrum.
inline int signed_index(std::size_t q, std::size_t n) noexcept {
  return q <= n / 2 ? static_cast<int>(q) : static_cast<int>(q) - static_cast<int>(n);
}

enum class DerivativeMethod {
  spectral,        ///< Fourier collocation (default)
  central_fourth,  ///< 4th-order central differences, for noisy sampled data
};

/// d^order/dtheta^order of periodic samples on `grid`.
inline std::vector<double> derivative(const TangentAngleGrid& grid, std::span<const double> values,
                                      int order,
                                      DerivativeMethod method = DerivativeMethod::spectral) {
  const std::size_t n = values.size();
  if (n != grid.size()) throw GridMismatchError("derivative: sample count does not match grid");
  if (order < 0) throw ValidationError("derivative: negative order");
  if (order == 0) return {values.begin(), values.end()};

  if (method == DerivativeMethod::central_fourth) {
    if (order != 1 && order != 2) {
      throw ValidationError("derivative: finite differences support orders 1 and 2 only");
    }
    const double h = grid.spacing();
    std::vector<double> out(n);
    auto at = [&](std::ptrdiff_t j) {
      const auto nn = static_cast<std::ptrdiff_t>(n);
      return values[static_cast<std::size_t>(((j % nn) + nn) % nn)];
    };
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = static_cast<std::ptrdiff_t>(i);
      if (order == 1) {
        out[i] = (-at(j + 2) + 8.0 * at(j + 1) - 8.0 * at(j - 1) + at(j - 2)) / (12.0 * h);
      } else {
        out[i] = (-at(j + 2) + 16.0 * at(j + 1) - 30.0 * at(j) + 16.0 * at(j - 1) - at(j - 2)) /
                 (12.0 * h * h);
      }
    }
    return out;
  }

  auto coeffs = rfft(values);
  const std::size_t nyquist = n / 2;
  for (std::size_t q = 0; q < coeffs.size(); ++q) {
    const double w = grid.frequency(static_cast<int>(q));
    static constexpr Complex kUnitPowers[4] = {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}};
    Complex factor = kUnitPowers[order % 4] * std::pow(w, order);
    // The Nyquist mode has no well-defined odd derivative.
    if (q == nyquist && order % 2 != 0) factor = 0.0;
    coeffs[q] *= factor;
  }
  return irfft(coeffs, n);
}

/// Periodic rectangle rule: h * sum(values). Spectrally accurate for smooth data.
inline double integrate(const TangentAngleGrid& grid, std::span<const double> values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return grid.spacing() * sum;
}

inline double max_abs(std::span<const double> values) {
  double out = 0.0;
  for (double v : values) out = std::max(out, std::abs(v));
  return out;
}

inline double max_abs_difference(std::span<const double> a, std::span<const double> b) {
  double out = 0.0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) out = std::max(out, std::abs(a[i] - b[i]));
  return out;
}

}  // namespace curveflow
