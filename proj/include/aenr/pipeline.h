#ifndef AENR_PIPELINE_H_
#define AENR_PIPELINE_H_

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "aenr/features.h"
#include "aenr/fft.h"
#include "aenr/model.h"
#include "aenr/pipeline_config.h"
#include "aenr/stft.h"
#include "aenr/time_align.h"

namespace aenr {

enum class Stage { kFull, kKfOnly };
Stage ParseStage(const std::string& name);  // "full", "kf-only"

struct PipelineResult {
  std::vector<double> output;
  std::vector<double> error;          // z
  std::vector<double> echo_estimate;  // e_hat
  std::vector<ComplexMask> masks;     // empty for kKfOnly
};

// Reoriented, compressed model input for one STFT frame.
FrameInput MakeFrameInput(const ComplexSpectrumFrame& error,
                          const ComplexSpectrumFrame& echo,
                          const ComplexSpectrumFrame& far_end,
                          const ModelConfig& cfg, double alpha);

// Loads the configured weights file, or seeded random weights.
Model BuildModel(const PipelineConfig& cfg);

// Signals are processed with one hop of leading zeros ahead of the STFT so
// every output sample lies under two frames; batch and streaming both
// compensate it, so output[i] lines up with mic[i].
class Pipeline {
 public:
  Pipeline(PipelineConfig cfg, Model model);

  const PipelineConfig& config() const { return cfg_; }
  const Model& model() const { return model_; }

  // Throws ConfigError on empty or unequal-length inputs.
  PipelineResult ProcessBatch(std::span<const double> mic, std::span<const double> far_end,
                              Stage stage = Stage::kFull) const;
  // Hop-by-hop through the streaming classes; identical output to batch.
  PipelineResult ProcessStreaming(std::span<const double> mic, std::span<const double> far_end,
                                  Stage stage = Stage::kFull) const;

 private:
  PipelineConfig cfg_;
  Model model_;
};

// Real-time processor. Push() takes one hop of mic and far-end samples and
// returns one hop of output delayed by Latency() samples.
class StreamingPipeline {
 public:
  StreamingPipeline(const Pipeline& pipeline, Stage stage);

  std::vector<double> Push(std::span<const double> mic_block, std::span<const double> far_block);
  // Drains the remaining samples after the last block.
  std::vector<double> Finish();
  int Latency() const;
  const std::vector<ComplexMask>& masks() const { return masks_; }
  const std::vector<double>& error() const { return error_; }
  const std::vector<double>& echo_estimate() const { return echo_; }

 private:
  std::vector<double> SynthesizeFrame(const ComplexSpectrumFrame& z,
                                      const ComplexSpectrumFrame& e,
                                      const ComplexSpectrumFrame& y);

  const Pipeline& pipeline_;
  Stage stage_;
  KalmanState kf_;
  FftTransform kf_fft_;
  StreamingAnalyzer z_analyzer_, e_analyzer_, y_analyzer_;
  StreamingSynthesizer synthesizer_;
  Model::StreamState model_state_;
  std::vector<ComplexMask> masks_;
  std::vector<double> error_, echo_;
  bool finished_ = false;
};

struct DelayProbe {
  DelayDistribution dist;
  std::vector<double> mean;   // time-averaged distribution
  int peak_index = 0;         // 0-based, lag in frames
  double peak_lag_ms = 0.0;
  // Peak over the largest value more than kPeakGuardFrames away.
  double prominence = 0.0;
  bool out_of_span = false;
};

inline constexpr int kPeakGuardFrames = 2;
inline constexpr double kMinPeakProminence = 1.035;

// Encoder streams plus time alignment over the microphone (near-end stream)
// and far-end signals, without echo cancellation. The model routing must be
// z-y. Out of span when the mean distribution has no prominent peak, as when
// the true delay exceeds max_delay frames.
DelayProbe ProbeDelay(std::span<const double> mic, std::span<const double> far_end,
                      const Model& model, const StftConfig& stft, double alpha);
// Comment line, header "frame,d1..dD", one row per frame.
std::string DelayProbeCsv(const DelayProbe& probe, const StftConfig& stft);

// Compressed, reoriented magnitudes of a whole signal (with the pipeline's
// leading hop of zeros).
ReorientedFeatures SignalFeatures(std::span<const double> signal, const StftConfig& stft,
                                  const ReorientLayout& layout, double alpha);

}  // namespace aenr

#endif  // AENR_PIPELINE_H_
