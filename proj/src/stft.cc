#include "aenr/stft.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "aenr/errors.h"

namespace aenr {

namespace {

void WindowedSpectrum(std::span<const double> samples,
                      std::span<const double> window,
                      std::vector<double>& scratch, FftTransform& fft,
                      std::vector<Complex>& bins) {
  const std::size_t n = window.size();
  std::fill(scratch.begin(), scratch.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) scratch[i] = window[i] * samples[i];
  bins.resize(fft.num_bins());
  fft.Forward(scratch, bins);
}

}  // namespace

void StftConfig::Validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("stft." + field + ": " + why);
  };
  if (fft_size < 4 || (fft_size & (fft_size - 1)) != 0)
    fail("fft_size", "must be a power of two >= 4");
  if (window_len != fft_size) fail("window_len", "must equal fft_size");
  if (hop <= 0 || window_len % hop != 0)
    fail("hop", "must be positive and divide window_len");
  if (sample_rate != 16000) fail("sample_rate", "only 16000 Hz is supported");
}

std::vector<double> AnalysisWindow(const StftConfig& cfg) {
  std::vector<double> w(cfg.window_len);
  for (int n = 0; n < cfg.window_len; ++n) {
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / cfg.window_len);
  }
  return w;
}

std::vector<double> SynthesisWindow(const StftConfig& cfg) {
  const auto w = AnalysisWindow(cfg);
  std::vector<double> denom(cfg.hop, 0.0);
  for (int n = 0; n < cfg.window_len; ++n) denom[n % cfg.hop] += w[n] * w[n];
  std::vector<double> g(cfg.window_len);
  for (int n = 0; n < cfg.window_len; ++n) g[n] = w[n] / denom[n % cfg.hop];
  return g;
}

std::size_t NumFrames(std::size_t num_samples, const StftConfig& cfg) {
  const auto win = static_cast<std::size_t>(cfg.window_len);
  if (num_samples < win) return 0;
  return (num_samples - win) / cfg.hop + 1;
}

std::vector<ComplexSpectrumFrame> Analyze(std::span<const double> signal,
                                          const StftConfig& cfg) {
  cfg.Validate();
  const std::size_t num_frames = NumFrames(signal.size(), cfg);
  std::vector<ComplexSpectrumFrame> frames(num_frames);
  if (num_frames == 0) return frames;
  const auto window = AnalysisWindow(cfg);
  FftTransform fft(cfg.fft_size);
  std::vector<double> scratch(cfg.fft_size);
  for (std::size_t t = 0; t < num_frames; ++t) {
    WindowedSpectrum(signal.subspan(t * cfg.hop, cfg.window_len), window,
                     scratch, fft, frames[t].bins);
    frames[t].frame_index = static_cast<std::int64_t>(t);
  }
  return frames;
}

std::vector<double> Synthesize(std::span<const ComplexSpectrumFrame> frames,
                               const StftConfig& cfg) {
  cfg.Validate();
  if (frames.empty()) return {};
  const auto window = SynthesisWindow(cfg);
  FftTransform fft(cfg.fft_size);
  std::vector<double> out((frames.size() - 1) * cfg.hop + cfg.window_len, 0.0);
  std::vector<double> time(cfg.fft_size);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (frames[t].bins.size() != static_cast<std::size_t>(cfg.num_bins()))
      throw ConfigError("Synthesize: frame has wrong number of bins");
    fft.Inverse(frames[t].bins, time);
    double* dst = out.data() + t * cfg.hop;
    for (int n = 0; n < cfg.window_len; ++n) dst[n] += window[n] * time[n];
  }
  return out;
}

StreamingAnalyzer::StreamingAnalyzer(const StftConfig& cfg)
    : cfg_(cfg),
      window_(AnalysisWindow(cfg)),
      buffer_(cfg.window_len, 0.0),
      frame_(cfg.fft_size, 0.0),
      fft_(cfg.fft_size) {
  cfg_.Validate();
}

std::optional<ComplexSpectrumFrame> StreamingAnalyzer::Push(
    std::span<const double> hop_samples) {
  if (hop_samples.size() != static_cast<std::size_t>(cfg_.hop))
    throw ConfigError("StreamingAnalyzer::Push: expected hop samples");
  std::shift_left(buffer_.begin(), buffer_.end(), cfg_.hop);
  std::copy(hop_samples.begin(), hop_samples.end(),
            buffer_.end() - cfg_.hop);
  filled_ = std::min(filled_ + cfg_.hop, buffer_.size());
  if (filled_ < buffer_.size()) return std::nullopt;
  ComplexSpectrumFrame frame;
  WindowedSpectrum(buffer_, window_, frame_, fft_, frame.bins);
  frame.frame_index = next_index_++;
  return frame;
}

StreamingSynthesizer::StreamingSynthesizer(const StftConfig& cfg)
    : cfg_(cfg),
      window_(SynthesisWindow(cfg)),
      accum_(cfg.window_len, 0.0),
      frame_(cfg.fft_size, 0.0),
      fft_(cfg.fft_size) {
  cfg_.Validate();
}

std::vector<double> StreamingSynthesizer::Push(
    const ComplexSpectrumFrame& frame) {
  if (frame.bins.size() != static_cast<std::size_t>(cfg_.num_bins()))
    throw ConfigError("StreamingSynthesizer::Push: wrong number of bins");
  fft_.Inverse(frame.bins, frame_);
  for (int n = 0; n < cfg_.window_len; ++n) accum_[n] += window_[n] * frame_[n];
  std::vector<double> ready(accum_.begin(), accum_.begin() + cfg_.hop);
  std::shift_left(accum_.begin(), accum_.end(), cfg_.hop);
  std::fill(accum_.end() - cfg_.hop, accum_.end(), 0.0);
  return ready;
}

std::vector<double> StreamingSynthesizer::Flush() {
  std::vector<double> rest(accum_.begin(), accum_.end() - cfg_.hop);
  std::fill(accum_.begin(), accum_.end(), 0.0);
  return rest;
}

}  // namespace aenr
