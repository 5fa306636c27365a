#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <new>
#include <span>
#include <type_traits>
#include <vector>

namespace tweezer::fft {

namespace detail {

// FFTW's planner is not reentrant; execution of a finished plan is.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwBuffer<T> allocate(std::size_t n) {
  void* p = fftw_malloc(sizeof(T) * (n == 0 ? 1 : n));
  if (p == nullptr) throw std::bad_alloc();
  return FftwBuffer<T>(static_cast<T*>(p));
}

struct PlanDestroy {
  void operator()(fftw_plan p) const noexcept {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};

using Plan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanDestroy>;

}  // namespace detail

/// Real-to-complex forward transform of fixed length n, reusable across
/// inputs. Output holds bins 0..n/2 of the unnormalized DFT.
class RealForward {
 public:
  explicit RealForward(std::size_t n)
      : n_(n), in_(detail::allocate<double>(n)), out_(detail::allocate<fftw_complex>(n / 2 + 1)) {
    std::lock_guard lock(detail::planner_mutex());
    plan_.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n), in_.get(), out_.get(), FFTW_ESTIMATE));
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t bins() const noexcept { return n_ / 2 + 1; }

  /// Writable input buffer of length size().
  std::span<double> input() noexcept { return {in_.get(), n_}; }

  void execute() { fftw_execute(plan_.get()); }

  double norm2(std::size_t k) const noexcept {
    const auto& c = out_[k];
    return c[0] * c[0] + c[1] * c[1];
  }

  std::complex<double> coefficient(std::size_t k) const noexcept { return {out_[k][0], out_[k][1]}; }

 private:
  std::size_t n_;
  detail::FftwBuffer<double> in_;
  detail::FftwBuffer<fftw_complex> out_;
  detail::Plan plan_;
};

/// Complex half-spectrum (bins 0..n/2) to real series of length n,
/// unnormalized: x_j = sum_k X_k exp(+2 pi i jk/n) over the full Hermitian
/// spectrum.
inline std::vector<double> inverse_real(std::span<const std::complex<double>> half, std::size_t n) {
  auto in = detail::allocate<fftw_complex>(n / 2 + 1);
  auto out = detail::allocate<double>(n);
  for (std::size_t k = 0; k < n / 2 + 1; ++k) {
    in[k][0] = half[k].real();
    in[k][1] = half[k].imag();
  }
  detail::Plan plan;
  {
    std::lock_guard lock(detail::planner_mutex());
    plan.reset(fftw_plan_dft_c2r_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));
  }
  fftw_execute(plan.get());
  return std::vector<double>(out.get(), out.get() + n);
}

}  // namespace tweezer::fft
