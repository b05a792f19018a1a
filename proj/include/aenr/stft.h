#ifndef AENR_STFT_H_
#define AENR_STFT_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "aenr/fft.h"

namespace aenr {

// Framing shared by every stage. Frame t covers samples
// [t * hop, t * hop + window_len); there is no centre padding.
struct StftConfig {
  int fft_size = 512;
  int window_len = 512;
  int hop = 256;
  int sample_rate = 16000;

  int num_bins() const { return fft_size / 2 + 1; }
  double frame_rate() const { return static_cast<double>(sample_rate) / hop; }
  // Throws ConfigError naming the offending field.
  void Validate() const;
};

struct ComplexSpectrumFrame {
  std::vector<Complex> bins;
  std::int64_t frame_index = 0;
};

// Periodic Hann.
std::vector<double> AnalysisWindow(const StftConfig& cfg);
// Hann divided by the hop-periodic sum of squared analysis windows, so that
// analysis followed by overlap-add synthesis is the identity on samples
// covered by window_len / hop frames.
std::vector<double> SynthesisWindow(const StftConfig& cfg);

// floor((len - window_len) / hop) + 1, or 0 when len < window_len.
std::size_t NumFrames(std::size_t num_samples, const StftConfig& cfg);

std::vector<ComplexSpectrumFrame> Analyze(std::span<const double> signal,
                                          const StftConfig& cfg);

// Overlap-add. Output length is (T - 1) * hop + window_len.
std::vector<double> Synthesize(std::span<const ComplexSpectrumFrame> frames,
                               const StftConfig& cfg);

// Frame-by-frame analyzer. Push() takes exactly hop samples and returns a frame
// once a full window has been seen. Produces the same frames as Analyze().
class StreamingAnalyzer {
 public:
  explicit StreamingAnalyzer(const StftConfig& cfg);
  std::optional<ComplexSpectrumFrame> Push(std::span<const double> hop_samples);

 private:
  StftConfig cfg_;
  std::vector<double> window_;
  std::vector<double> buffer_;
  std::vector<double> frame_;
  std::size_t filled_ = 0;
  std::int64_t next_index_ = 0;
  FftTransform fft_;
};

// Frame-by-frame overlap-add. Each Push() returns the hop samples that no
// later frame can touch; Flush() returns the remaining window_len - hop.
class StreamingSynthesizer {
 public:
  explicit StreamingSynthesizer(const StftConfig& cfg);
  std::vector<double> Push(const ComplexSpectrumFrame& frame);
  std::vector<double> Flush();

 private:
  StftConfig cfg_;
  std::vector<double> window_;
  std::vector<double> accum_;
  std::vector<double> frame_;
  FftTransform fft_;
};

}  // namespace aenr

#endif  // AENR_STFT_H_
