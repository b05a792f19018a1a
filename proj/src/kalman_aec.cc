#include "aenr/kalman_aec.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "aenr/errors.h"

namespace aenr {

namespace {

constexpr double kDenominatorFloor = 1e-12;

double Power(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return x.empty() ? 0.0 : acc / static_cast<double>(x.size());
}

}  // namespace

void KalmanConfig::Validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("kalman." + field + ": " + why);
  };
  if (num_partitions < 1) fail("num_partitions", "must be >= 1");
  if (!(transition_factor > 0.0 && transition_factor <= 1.0))
    fail("transition_factor", "must be in (0, 1]");
  if (!(noise_smoothing > 0.0 && noise_smoothing < 1.0))
    fail("noise_smoothing", "must be in (0, 1)");
  if (!(initial_covariance > 0.0)) fail("initial_covariance", "must be > 0");
  if (block_size < 2) fail("block_size", "must be >= 2");
}

KalmanState KfInit(const KalmanConfig& cfg) {
  cfg.Validate();
  KalmanState s;
  s.config = cfg;
  s.num_partitions = cfg.num_partitions;
  s.num_bins = cfg.num_bins();
  const std::size_t cells = static_cast<std::size_t>(s.num_partitions) * s.num_bins;
  s.weights.assign(cells, Complex(0.0, 0.0));
  s.state_covariance.assign(cells, cfg.initial_covariance);
  s.far_end_history.assign(cells, Complex(0.0, 0.0));
  s.noise_psd.assign(s.num_bins, 0.0);
  s.previous_far_block.assign(cfg.block_size, 0.0);
  return s;
}

KalmanBlockOutput KfProcessBlock(KalmanState& state,
                                 std::span<const double> mic_block,
                                 std::span<const double> far_block,
                                 FftTransform& fft) {
  const KalmanConfig& cfg = state.config;
  const std::size_t block = cfg.block_size;
  const std::size_t bins = state.num_bins;
  const std::size_t parts = state.num_partitions;
  if (mic_block.size() != block || far_block.size() != block)
    throw ConfigError("KfProcessBlock: block length mismatch");
  if (fft.size() != 2 * block || state.weights.size() != parts * bins)
    throw ConfigError("KfProcessBlock: state dimensions do not match config");

  std::vector<double> time(2 * block);
  std::vector<Complex> spec(bins);

  // Far-end spectrum of [previous block, current block].
  std::copy(state.previous_far_block.begin(), state.previous_far_block.end(),
            time.begin());
  std::copy(far_block.begin(), far_block.end(), time.begin() + block);
  std::copy(far_block.begin(), far_block.end(), state.previous_far_block.begin());
  std::shift_right(state.far_end_history.begin(), state.far_end_history.end(),
                   static_cast<std::ptrdiff_t>(bins));
  fft.Forward(time, std::span<Complex>(state.far_end_history.data(), bins));

  // Echo estimate: last block of the circular convolution.
  std::fill(spec.begin(), spec.end(), Complex(0.0, 0.0));
  for (std::size_t p = 0; p < parts; ++p) {
    const Complex* w = &state.weights[p * bins];
    const Complex* y = &state.far_end_history[p * bins];
    for (std::size_t k = 0; k < bins; ++k) spec[k] += w[k] * y[k];
  }
  fft.Inverse(spec, time);

  KalmanBlockOutput out;
  out.echo_estimate.assign(time.begin() + block, time.end());
  out.error.resize(block);
  for (std::size_t n = 0; n < block; ++n)
    out.error[n] = mic_block[n] - out.echo_estimate[n];

  // Error spectrum of [0, z].
  std::fill(time.begin(), time.begin() + block, 0.0);
  std::copy(out.error.begin(), out.error.end(), time.begin() + block);
  std::vector<Complex> err_spec(bins);
  fft.Forward(time, err_spec);

  const double lambda = cfg.noise_smoothing;
  // Overlap-save ratio M/R of transform length to block length.
  const double ratio = static_cast<double>(2 * block) / block;
  std::vector<double> denom(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    state.noise_psd[k] =
        lambda * state.noise_psd[k] + (1.0 - lambda) * std::norm(err_spec[k]);
    denom[k] = ratio * state.noise_psd[k] + kDenominatorFloor;
  }
  for (std::size_t p = 0; p < parts; ++p) {
    const double* cov = &state.state_covariance[p * bins];
    const Complex* y = &state.far_end_history[p * bins];
    for (std::size_t k = 0; k < bins; ++k) denom[k] += cov[k] * std::norm(y[k]);
  }

  const double a = cfg.transition_factor;
  for (std::size_t p = 0; p < parts; ++p) {
    Complex* w = &state.weights[p * bins];
    double* cov = &state.state_covariance[p * bins];
    const Complex* y = &state.far_end_history[p * bins];
    std::vector<double> gain(bins);
    for (std::size_t k = 0; k < bins; ++k) {
      gain[k] = cov[k] / denom[k];
      spec[k] = gain[k] * std::conj(y[k]) * err_spec[k];
    }
    // Constrain the update to a causal block-length impulse response.
    fft.Inverse(spec, time);
    std::fill(time.begin() + block, time.end(), 0.0);
    fft.Forward(time, spec);
    for (std::size_t k = 0; k < bins; ++k) {
      const Complex posterior = w[k] + spec[k];
      const double cov_post = (1.0 - gain[k] * std::norm(y[k]) / ratio) * cov[k];
      w[k] = a * posterior;
      cov[k] = a * a * cov_post + (1.0 - a * a) * std::norm(posterior);
    }
  }
  return out;
}

KalmanBlockOutput CancelEcho(std::span<const double> mic,
                             std::span<const double> far_end,
                             const KalmanConfig& cfg) {
  if (mic.size() != far_end.size())
    throw ConfigError("CancelEcho: mic and far-end lengths differ");
  KalmanState state = KfInit(cfg);
  FftTransform fft(cfg.fft_size());
  const std::size_t block = cfg.block_size;
  const std::size_t num_blocks = (mic.size() + block - 1) / block;
  KalmanBlockOutput out;
  out.echo_estimate.reserve(num_blocks * block);
  out.error.reserve(num_blocks * block);
  std::vector<double> xb(block), yb(block);
  for (std::size_t b = 0; b < num_blocks; ++b) {
    const std::size_t start = b * block;
    const std::size_t n = std::min(block, mic.size() - start);
    std::fill(xb.begin(), xb.end(), 0.0);
    std::fill(yb.begin(), yb.end(), 0.0);
    std::copy_n(mic.begin() + start, n, xb.begin());
    std::copy_n(far_end.begin() + start, n, yb.begin());
    auto res = KfProcessBlock(state, xb, yb, fft);
    out.echo_estimate.insert(out.echo_estimate.end(), res.echo_estimate.begin(),
                             res.echo_estimate.end());
    out.error.insert(out.error.end(), res.error.begin(), res.error.end());
  }
  out.echo_estimate.resize(mic.size());
  out.error.resize(mic.size());
  return out;
}

std::vector<double> ErleTrace(std::span<const double> mic_echo,
                              std::span<const double> residual, double window_s,
                              int sample_rate) {
  if (mic_echo.empty()) throw ConfigError("ErleTrace: zero-length input");
  if (mic_echo.size() != residual.size())
    throw ConfigError("ErleTrace: input lengths differ");
  if (!(window_s > 0.0)) throw ConfigError("ErleTrace: window must be > 0");
  auto win = static_cast<std::size_t>(std::llround(window_s * sample_rate));
  win = std::clamp<std::size_t>(win, 1, mic_echo.size());
  std::vector<double> trace;
  for (std::size_t start = 0; start + win <= mic_echo.size(); start += win) {
    const double p_mic = Power(mic_echo.subspan(start, win));
    if (p_mic == 0.0) {
      trace.push_back(0.0);
      continue;
    }
    const double p_res =
        std::max(Power(residual.subspan(start, win)), 1e-12 * p_mic);
    trace.push_back(10.0 * std::log10(p_mic / p_res));
  }
  return trace;
}

}  // namespace aenr
