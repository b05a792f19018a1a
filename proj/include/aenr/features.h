#ifndef AENR_FEATURES_H_
#define AENR_FEATURES_H_

#include <span>
#include <string>
#include <vector>

#include "aenr/stft.h"

namespace aenr {

struct CompressedFeatures {
  std::vector<double> magnitude;  // |X|^alpha
  std::vector<double> phase;      // arg X
};

// Power-law compression of one frame. alpha must be in (0, 1].
CompressedFeatures Compress(const ComplexSpectrumFrame& frame, double alpha);

enum class ReorientMode {
  kSampling,  // C-SamFR: subband b -> channel b mod gamma
  kSubband,   // C-SubFR: contiguous groups of B / gamma subbands per channel
};

std::string ToString(ReorientMode mode);
ReorientMode ParseReorientMode(const std::string& name);

// Describes how K frequency bins are split into subbands and laid out as
// gamma channels. Subbands start every round(K_B * (1 - beta)) bins; the
// input is zero-padded at the top of the spectrum to padded_len.
struct ReorientLayout {
  int num_bins = 257;
  int subband_bins = 2;       // K_B
  double overlap = 0.0;       // beta
  int sampling_factor = 5;    // gamma
  ReorientMode mode = ReorientMode::kSampling;

  // Derived by Make().
  int step = 2;
  int num_subbands = 130;     // B
  int padded_len = 260;
  // source_index[c * features_per_channel() + f] = input bin feeding that slot.
  std::vector<int> source_index;

  static ReorientLayout Make(int num_bins, int subband_bins, double overlap,
                             int sampling_factor, ReorientMode mode);
  static ReorientLayout Default(ReorientMode mode = ReorientMode::kSampling) {
    return Make(257, 2, 0.0, 5, mode);
  }

  int channels() const { return sampling_factor; }
  int subbands_per_channel() const { return num_subbands / sampling_factor; }
  int features_per_channel() const { return subbands_per_channel() * subband_bins; }
  int output_len() const { return channels() * features_per_channel(); }
  // Channel and within-channel position of subband b.
  int ChannelOf(int subband) const;
  int PositionOf(int subband) const;
  // True when every padded bin appears exactly once (overlap == 0).
  bool IsBijection() const;
};

// channels x frames x features, row-major in that order.
struct ReorientedFeatures {
  int channels = 0;
  int frames = 0;
  int features = 0;
  std::vector<double> data;
  ReorientLayout layout;

  double& at(int c, int t, int f) {
    return data[(static_cast<std::size_t>(c) * frames + t) * features + f];
  }
  double at(int c, int t, int f) const {
    return data[(static_cast<std::size_t>(c) * frames + t) * features + f];
  }
};

// Zero-pads `magnitude` (length <= padded_len) and writes the reoriented
// frame into `out` (length output_len(), channel-major).
void ReorientInto(std::span<const double> magnitude,
                  const ReorientLayout& layout, std::span<double> out);

// Single frame.
ReorientedFeatures ReorientForward(std::span<const double> magnitude,
                                   const ReorientLayout& layout);
// Multi-frame; every row of `magnitudes` is one frame.
ReorientedFeatures ReorientFrames(const std::vector<std::vector<double>>& magnitudes,
                                  const ReorientLayout& layout);

// Padded-length vector(s) back from reoriented features, frame-major. With
// overlap each bin is taken from its first occurrence.
std::vector<double> ReorientInverse(const ReorientedFeatures& features);

// Adjoint of the forward gather (scatter-add), frame-major padded vectors.
std::vector<double> ReorientBackward(const ReorientedFeatures& grad_out);

// Flag c is true iff channel c is zero in every frame.
std::vector<bool> ZeroChannelReport(const ReorientedFeatures& features);

}  // namespace aenr

#endif  // AENR_FEATURES_H_
