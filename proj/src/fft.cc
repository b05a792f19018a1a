#include "aenr/fft.h"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace aenr {

namespace {

// FFTW's planner is not thread-safe.
std::mutex& PlannerMutex() {
  static std::mutex mu;
  return mu;
}

}  // namespace

FftTransform::FftTransform(std::size_t size) : size_(size) {
  if (size < 2) throw std::invalid_argument("FFT size must be >= 2");
  const int n = static_cast<int>(size);
  std::lock_guard<std::mutex> lock(PlannerMutex());
  real_buf_ = fftw_alloc_real(size);
  auto* cbuf = fftw_alloc_complex(num_bins());
  complex_buf_ = cbuf;
  forward_plan_ = fftw_plan_dft_r2c_1d(n, real_buf_, cbuf, FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_c2r_1d(n, cbuf, real_buf_, FFTW_ESTIMATE);
  if (!forward_plan_ || !inverse_plan_) {
    Release();
    throw std::runtime_error("FFTW plan creation failed");
  }
}

FftTransform::~FftTransform() { Release(); }

FftTransform::FftTransform(FftTransform&& other) noexcept { *this = std::move(other); }

FftTransform& FftTransform::operator=(FftTransform&& other) noexcept {
  if (this != &other) {
    Release();
    size_ = std::exchange(other.size_, 0);
    real_buf_ = std::exchange(other.real_buf_, nullptr);
    complex_buf_ = std::exchange(other.complex_buf_, nullptr);
    forward_plan_ = std::exchange(other.forward_plan_, nullptr);
    inverse_plan_ = std::exchange(other.inverse_plan_, nullptr);
  }
  return *this;
}

void FftTransform::Release() {
  std::lock_guard<std::mutex> lock(PlannerMutex());
  if (forward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  if (inverse_plan_) fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
  if (real_buf_) fftw_free(real_buf_);
  if (complex_buf_) fftw_free(complex_buf_);
  forward_plan_ = inverse_plan_ = nullptr;
  real_buf_ = nullptr;
  complex_buf_ = nullptr;
}

void FftTransform::Forward(std::span<const double> in, std::span<Complex> out) {
  if (in.size() != size_ || out.size() != num_bins())
    throw std::invalid_argument("FftTransform::Forward: size mismatch");
  std::copy(in.begin(), in.end(), real_buf_);
  fftw_execute(static_cast<fftw_plan>(forward_plan_));
  auto* c = static_cast<fftw_complex*>(complex_buf_);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = Complex(c[k][0], c[k][1]);
  out.front().imag(0.0);
  if (size_ % 2 == 0) out.back().imag(0.0);
}

void FftTransform::Inverse(std::span<const Complex> in, std::span<double> out) {
  if (in.size() != num_bins() || out.size() != size_)
    throw std::invalid_argument("FftTransform::Inverse: size mismatch");
  auto* c = static_cast<fftw_complex*>(complex_buf_);
  for (std::size_t k = 0; k < in.size(); ++k) {
    c[k][0] = in[k].real();
    c[k][1] = in[k].imag();
  }
  c[0][1] = 0.0;
  if (size_ % 2 == 0) c[in.size() - 1][1] = 0.0;
  fftw_execute(static_cast<fftw_plan>(inverse_plan_));
  const double scale = 1.0 / static_cast<double>(size_);
  for (std::size_t n = 0; n < size_; ++n) out[n] = real_buf_[n] * scale;
}

std::vector<double> LinearConvolve(std::span<const double> a,
                                   std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t out_len = a.size() + b.size() - 1;
  std::size_t n = 1;
  while (n < out_len) n <<= 1;
  n = std::max<std::size_t>(n, 2);
  FftTransform fft(n);
  std::vector<double> pa(n, 0.0), pb(n, 0.0);
  std::copy(a.begin(), a.end(), pa.begin());
  std::copy(b.begin(), b.end(), pb.begin());
  std::vector<Complex> fa(fft.num_bins()), fb(fft.num_bins());
  fft.Forward(pa, fa);
  fft.Forward(pb, fb);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
  fft.Inverse(fa, pa);
  pa.resize(out_len);
  return pa;
}

}  // namespace aenr
