#include "aenr/stft.h"

#include <cmath>
#include <numbers>
#include <random>

#include "aenr/errors.h"
#include "gtest/gtest.h"

namespace aenr {
namespace {

std::vector<double> WhiteNoise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(n);
  for (double& v : x) v = u(rng);
  return x;
}

TEST(Stft, ZeroSignalGivesZeroFrames) {
  StftConfig cfg;
  const std::vector<double> x(16000, 0.0);
  const auto frames = Analyze(x, cfg);
  ASSERT_EQ(frames.size(), NumFrames(x.size(), cfg));
  for (const auto& f : frames)
    for (const auto& b : f.bins) EXPECT_EQ(std::abs(b), 0.0);
}

TEST(Stft, FrameCounts) {
  StftConfig cfg;
  EXPECT_EQ(Analyze(std::vector<double>(512, 0.1), cfg).size(), 1u);
  EXPECT_TRUE(Analyze(std::vector<double>(511, 0.1), cfg).empty());
  EXPECT_EQ(NumFrames(767, cfg), 1u);
  EXPECT_EQ(NumFrames(768, cfg), 2u);
  EXPECT_EQ(NumFrames(16000, cfg), (16000u - 512u) / 256u + 1u);
}

TEST(Stft, CosinePeaksAtBinEightAndMatchesDirectDft) {
  StftConfig cfg;
  std::vector<double> x(4096);
  for (std::size_t n = 0; n < x.size(); ++n)
    x[n] = std::cos(2.0 * std::numbers::pi * 250.0 * n / 16000.0);
  const auto frames = Analyze(x, cfg);
  const auto window = AnalysisWindow(cfg);
  for (const auto& f : frames) {
    std::size_t peak = 0;
    for (std::size_t k = 1; k < f.bins.size(); ++k)
      if (std::abs(f.bins[k]) > std::abs(f.bins[peak])) peak = k;
    EXPECT_EQ(peak, 8u);
  }
  // Direct DFT of frame 3.
  const std::size_t start = 3 * cfg.hop;
  for (int k : {0, 7, 8, 9, 100, 256}) {
    Complex acc(0.0, 0.0);
    for (int n = 0; n < cfg.fft_size; ++n)
      acc += window[n] * x[start + n] *
             std::polar(1.0, -2.0 * std::numbers::pi * k * n / cfg.fft_size);
    EXPECT_NEAR(frames[3].bins[k].real(), acc.real(), 1e-9);
    EXPECT_NEAR(frames[3].bins[k].imag(), acc.imag(), 1e-9);
  }
}

TEST(Stft, DcAndNyquistAreReal) {
  StftConfig cfg;
  const auto frames = Analyze(WhiteNoise(4000, 3), cfg);
  for (const auto& f : frames) {
    EXPECT_EQ(f.bins.front().imag(), 0.0);
    EXPECT_EQ(f.bins.back().imag(), 0.0);
    EXPECT_EQ(f.bins.size(), 257u);
  }
}

TEST(Stft, WindowsSatisfyOverlapAdd) {
  StftConfig cfg;
  const auto wa = AnalysisWindow(cfg);
  const auto ws = SynthesisWindow(cfg);
  for (int n = 0; n < cfg.hop; ++n) {
    double sum = 0.0;
    for (int m = n; m < cfg.window_len; m += cfg.hop) sum += wa[m] * ws[m];
    EXPECT_NEAR(sum, 1.0, 1e-10);
  }
}

TEST(Stft, RoundTripInterior) {
  StftConfig cfg;
  const auto x = WhiteNoise(3 * 16000, 11);
  const auto frames = Analyze(x, cfg);
  const auto y = Synthesize(frames, cfg);
  ASSERT_EQ(y.size(), (frames.size() - 1) * cfg.hop + cfg.window_len);
  double err = 0.0;
  for (std::size_t n = cfg.hop; n < frames.size() * cfg.hop; ++n)
    err = std::max(err, std::abs(y[n] - x[n]));
  EXPECT_LT(err, 1e-6);
}

TEST(Stft, SynthesizeEdgeCases) {
  StftConfig cfg;
  EXPECT_TRUE(Synthesize(std::vector<ComplexSpectrumFrame>{}, cfg).empty());
  ComplexSpectrumFrame zero;
  zero.bins.assign(257, Complex(0.0, 0.0));
  const auto one = Synthesize(std::vector<ComplexSpectrumFrame>{zero}, cfg);
  ASSERT_EQ(one.size(), 512u);
  for (double v : one) EXPECT_EQ(v, 0.0);
}

TEST(Stft, Linearity) {
  StftConfig cfg;
  const auto x = WhiteNoise(3000, 1), y = WhiteNoise(3000, 2);
  std::vector<double> mix(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) mix[i] = 0.7 * x[i] - 1.3 * y[i];
  const auto fx = Analyze(x, cfg), fy = Analyze(y, cfg), fm = Analyze(mix, cfg);
  for (std::size_t t = 0; t < fm.size(); ++t)
    for (std::size_t k = 0; k < fm[t].bins.size(); ++k)
      EXPECT_LT(std::abs(fm[t].bins[k] - (0.7 * fx[t].bins[k] - 1.3 * fy[t].bins[k])), 1e-9);
}

TEST(Stft, Parseval) {
  StftConfig cfg;
  const auto x = WhiteNoise(2048, 5);
  const auto w = AnalysisWindow(cfg);
  const auto frames = Analyze(x, cfg);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    double time_energy = 0.0;
    for (int n = 0; n < cfg.window_len; ++n) {
      const double v = w[n] * x[t * cfg.hop + n];
      time_energy += v * v;
    }
    double spec_energy = 0.0;
    for (std::size_t k = 0; k < frames[t].bins.size(); ++k) {
      const double p = std::norm(frames[t].bins[k]);
      spec_energy += (k == 0 || k == frames[t].bins.size() - 1) ? p : 2.0 * p;
    }
    spec_energy /= cfg.fft_size;
    EXPECT_NEAR(spec_energy / time_energy, 1.0, 1e-6);
  }
}

TEST(Stft, StreamingAnalyzerMatchesBatch) {
  StftConfig cfg;
  const auto x = WhiteNoise(256 * 20, 9);
  const auto batch = Analyze(x, cfg);
  StreamingAnalyzer analyzer(cfg);
  std::vector<ComplexSpectrumFrame> streamed;
  for (std::size_t off = 0; off < x.size(); off += cfg.hop) {
    auto f = analyzer.Push(std::span(x).subspan(off, cfg.hop));
    if (f) streamed.push_back(*f);
  }
  ASSERT_EQ(streamed.size(), batch.size());
  for (std::size_t t = 0; t < batch.size(); ++t) {
    EXPECT_EQ(streamed[t].frame_index, batch[t].frame_index);
    EXPECT_EQ(streamed[t].bins, batch[t].bins);
  }
}

TEST(Stft, StreamingSynthesizerMatchesBatch) {
  StftConfig cfg;
  const auto frames = Analyze(WhiteNoise(256 * 12, 4), cfg);
  const auto batch = Synthesize(frames, cfg);
  StreamingSynthesizer synth(cfg);
  std::vector<double> out;
  for (const auto& f : frames) {
    const auto chunk = synth.Push(f);
    EXPECT_EQ(chunk.size(), static_cast<std::size_t>(cfg.hop));
    out.insert(out.end(), chunk.begin(), chunk.end());
  }
  const auto tail = synth.Flush();
  out.insert(out.end(), tail.begin(), tail.end());
  EXPECT_EQ(out, batch);
}

TEST(Stft, RejectsUnsupportedConfig) {
  StftConfig cfg;
  cfg.sample_rate = 44100;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = StftConfig{};
  cfg.fft_size = 500;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = StftConfig{};
  cfg.hop = 200;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  EXPECT_NO_THROW(StftConfig{}.Validate());
  EXPECT_EQ(StftConfig{}.num_bins(), 257);
}

}  // namespace
}  // namespace aenr
