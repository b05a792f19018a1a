#include "aenr/features.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aenr/errors.h"

namespace aenr {

namespace {

void CheckShape(const ReorientedFeatures& f) {
  const auto& l = f.layout;
  if (f.channels != l.channels() || f.features != l.features_per_channel() ||
      f.data.size() != static_cast<std::size_t>(f.channels) * f.frames * f.features)
    throw ConfigError("reoriented features do not match their layout");
}

}  // namespace

CompressedFeatures Compress(const ComplexSpectrumFrame& frame, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw ConfigError("compression factor must be in (0, 1]");
  CompressedFeatures out;
  out.magnitude.resize(frame.bins.size());
  out.phase.resize(frame.bins.size());
  for (std::size_t k = 0; k < frame.bins.size(); ++k) {
    out.magnitude[k] = std::pow(std::abs(frame.bins[k]), alpha);
    out.phase[k] = std::arg(frame.bins[k]);
  }
  return out;
}

std::string ToString(ReorientMode mode) {
  return mode == ReorientMode::kSampling ? "csamfr" : "csubfr";
}

ReorientMode ParseReorientMode(const std::string& name) {
  if (name == "csamfr" || name == "C-SamFR") return ReorientMode::kSampling;
  if (name == "csubfr" || name == "C-SubFR") return ReorientMode::kSubband;
  throw ConfigError("unknown reorientation mode '" + name + "'");
}

ReorientLayout ReorientLayout::Make(int num_bins, int subband_bins,
                                    double overlap, int sampling_factor,
                                    ReorientMode mode) {
  if (num_bins < 1) throw ConfigError("layout.num_bins: must be >= 1");
  if (subband_bins < 1) throw ConfigError("layout.subband_bins: must be >= 1");
  if (!(overlap >= 0.0 && overlap < 1.0))
    throw ConfigError("layout.overlap: must be in [0, 1)");
  if (sampling_factor < 1) throw ConfigError("layout.sampling_factor: must be >= 1");

  ReorientLayout l;
  l.num_bins = num_bins;
  l.subband_bins = subband_bins;
  l.overlap = overlap;
  l.sampling_factor = sampling_factor;
  l.mode = mode;
  l.step = std::max(1, static_cast<int>(std::lround(subband_bins * (1.0 - overlap))));
  // Fewest subbands covering num_bins, rounded up to a multiple of gamma.
  int b = 1;
  if (num_bins > subband_bins) b = (num_bins - subband_bins + l.step - 1) / l.step + 1;
  b = (b + sampling_factor - 1) / sampling_factor * sampling_factor;
  l.num_subbands = b;
  l.padded_len = (b - 1) * l.step + subband_bins;

  const int per_channel = l.features_per_channel();
  l.source_index.assign(l.output_len(), 0);
  for (int sb = 0; sb < b; ++sb) {
    const int base = l.ChannelOf(sb) * per_channel + l.PositionOf(sb) * subband_bins;
    for (int j = 0; j < subband_bins; ++j) l.source_index[base + j] = sb * l.step + j;
  }
  return l;
}

int ReorientLayout::ChannelOf(int subband) const {
  return mode == ReorientMode::kSampling ? subband % sampling_factor
                                         : subband / subbands_per_channel();
}

int ReorientLayout::PositionOf(int subband) const {
  return mode == ReorientMode::kSampling ? subband / sampling_factor
                                         : subband % subbands_per_channel();
}

bool ReorientLayout::IsBijection() const {
  return step == subband_bins && output_len() == padded_len;
}

void ReorientInto(std::span<const double> magnitude,
                  const ReorientLayout& layout, std::span<double> out) {
  if (magnitude.size() > static_cast<std::size_t>(layout.padded_len))
    throw ConfigError("input has more bins than the layout's padded length");
  if (out.size() != layout.source_index.size())
    throw ConfigError("ReorientInto: output size mismatch");
  const std::size_t n = magnitude.size();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto src = static_cast<std::size_t>(layout.source_index[i]);
    out[i] = src < n ? magnitude[src] : 0.0;
  }
}

ReorientedFeatures ReorientForward(std::span<const double> magnitude,
                                   const ReorientLayout& layout) {
  ReorientedFeatures f;
  f.channels = layout.channels();
  f.frames = 1;
  f.features = layout.features_per_channel();
  f.data.resize(layout.output_len());
  f.layout = layout;
  ReorientInto(magnitude, layout, f.data);
  return f;
}

ReorientedFeatures ReorientFrames(const std::vector<std::vector<double>>& magnitudes,
                                  const ReorientLayout& layout) {
  ReorientedFeatures f;
  f.channels = layout.channels();
  f.frames = static_cast<int>(magnitudes.size());
  f.features = layout.features_per_channel();
  f.data.resize(static_cast<std::size_t>(layout.output_len()) * f.frames);
  f.layout = layout;
  std::vector<double> frame(layout.output_len());
  for (int t = 0; t < f.frames; ++t) {
    ReorientInto(magnitudes[t], layout, frame);
    for (int c = 0; c < f.channels; ++c)
      for (int k = 0; k < f.features; ++k)
        f.at(c, t, k) = frame[static_cast<std::size_t>(c) * f.features + k];
  }
  return f;
}

std::vector<double> ReorientInverse(const ReorientedFeatures& features) {
  CheckShape(features);
  const auto& l = features.layout;
  std::vector<double> out(static_cast<std::size_t>(l.padded_len) * features.frames, 0.0);
  std::vector<bool> seen(l.padded_len);
  for (int t = 0; t < features.frames; ++t) {
    std::fill(seen.begin(), seen.end(), false);
    double* dst = out.data() + static_cast<std::size_t>(t) * l.padded_len;
    for (int c = 0; c < features.channels; ++c) {
      for (int k = 0; k < features.features; ++k) {
        const int src = l.source_index[c * features.features + k];
        if (seen[src]) continue;
        seen[src] = true;
        dst[src] = features.at(c, t, k);
      }
    }
  }
  return out;
}

std::vector<double> ReorientBackward(const ReorientedFeatures& grad_out) {
  CheckShape(grad_out);
  const auto& l = grad_out.layout;
  std::vector<double> out(static_cast<std::size_t>(l.padded_len) * grad_out.frames, 0.0);
  for (int t = 0; t < grad_out.frames; ++t) {
    double* dst = out.data() + static_cast<std::size_t>(t) * l.padded_len;
    for (int c = 0; c < grad_out.channels; ++c)
      for (int k = 0; k < grad_out.features; ++k)
        dst[l.source_index[c * grad_out.features + k]] += grad_out.at(c, t, k);
  }
  return out;
}

std::vector<bool> ZeroChannelReport(const ReorientedFeatures& features) {
  CheckShape(features);
  std::vector<bool> flags(features.channels, true);
  for (int c = 0; c < features.channels; ++c)
    for (int t = 0; t < features.frames && flags[c]; ++t)
      for (int k = 0; k < features.features; ++k)
        if (features.at(c, t, k) != 0.0) {
          flags[c] = false;
          break;
        }
  return flags;
}

}  // namespace aenr
