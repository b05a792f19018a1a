#ifndef AENR_FFT_H_
#define AENR_FFT_H_

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace aenr {

using Complex = std::complex<double>;

// Real-to-complex FFT of a fixed length, backed by FFTW. Owns its plans and
// aligned work buffers, so repeated calls on the same object are bit-exact.
// Not copyable; one instance per stream.
class FftTransform {
 public:
  explicit FftTransform(std::size_t size);
  ~FftTransform();
  FftTransform(const FftTransform&) = delete;
  FftTransform& operator=(const FftTransform&) = delete;
  FftTransform(FftTransform&& other) noexcept;
  FftTransform& operator=(FftTransform&& other) noexcept;

  std::size_t size() const { return size_; }
  std::size_t num_bins() const { return size_ / 2 + 1; }

  // in.size() == size(), out.size() == num_bins(). DC and Nyquist bins have
  // exactly zero imaginary part.
  void Forward(std::span<const double> in, std::span<Complex> out);

  // Unnormalized FFTW inverse divided by size(), i.e. the exact inverse of
  // Forward(). Imaginary parts of DC/Nyquist are ignored.
  void Inverse(std::span<const Complex> in, std::span<double> out);

 private:
  void Release();

  std::size_t size_ = 0;
  double* real_buf_ = nullptr;
  void* complex_buf_ = nullptr;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

// Full linear convolution of a and b (length a.size() + b.size() - 1).
std::vector<double> LinearConvolve(std::span<const double> a,
                                   std::span<const double> b);

}  // namespace aenr

#endif  // AENR_FFT_H_
