#ifndef AENR_KALMAN_AEC_H_
#define AENR_KALMAN_AEC_H_

#include <span>
#include <vector>

#include "aenr/fft.h"

namespace aenr {

// Partitioned-block frequency-domain Kalman filter (overlap-save). One update
// per block of `block_size` samples with an FFT of 2 * block_size, so the
// filter runs on the same clock as the STFT hop.
struct KalmanConfig {
  int num_partitions = 10;
  // State transition factor A of the echo-path random walk W <- A * W.
  double transition_factor = 0.9995;
  // Recursive smoothing of the observation-noise PSD estimate.
  double noise_smoothing = 0.8;
  double initial_covariance = 1.0;
  int block_size = 256;

  int fft_size() const { return 2 * block_size; }
  int num_bins() const { return block_size + 1; }
  void Validate() const;
};

struct KalmanState {
  int num_partitions = 0;
  int num_bins = 0;
  // Row p holds partition p (p = 0 is the most recent far-end block).
  std::vector<Complex> weights;
  std::vector<double> state_covariance;
  std::vector<Complex> far_end_history;
  std::vector<double> noise_psd;
  std::vector<double> previous_far_block;
  KalmanConfig config;
};

struct KalmanBlockOutput {
  std::vector<double> echo_estimate;
  std::vector<double> error;
};

KalmanState KfInit(const KalmanConfig& cfg);

// Consumes one block of microphone and far-end samples. Returns the linear
// echo estimate for that block (computed with the predicted state) and the
// error signal z = x - e_hat, then updates `state`.
KalmanBlockOutput KfProcessBlock(KalmanState& state,
                                 std::span<const double> mic_block,
                                 std::span<const double> far_block,
                                 FftTransform& fft);

// Whole-signal convenience wrapper. Inputs must have equal length; a partial
// trailing block is zero-padded and the outputs are trimmed back.
KalmanBlockOutput CancelEcho(std::span<const double> mic,
                             std::span<const double> far_end,
                             const KalmanConfig& cfg);

// 10 * log10(P(mic_echo) / P(residual)) per window of `window_s` seconds.
// Residual power is floored at 1e-12 times the echo power. A trailing partial
// window is dropped unless it is the only one.
std::vector<double> ErleTrace(std::span<const double> mic_echo,
                              std::span<const double> residual,
                              double window_s, int sample_rate = 16000);

}  // namespace aenr

#endif  // AENR_KALMAN_AEC_H_
