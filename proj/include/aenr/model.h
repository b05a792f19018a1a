#ifndef AENR_MODEL_H_
#define AENR_MODEL_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aenr/features.h"
#include "aenr/stft.h"
#include "aenr/time_align.h"
#include "aenr/weight_store.h"

namespace aenr {

// Which signals feed the near-end and far-end encoder streams.
enum class InputRouting {
  kErrorFarEnd,          // NE: Z,        FE: Y
  kErrorAndEchoFarEnd,   // NE: Z and E,  FE: Y
  kErrorFarEndAndEcho,   // NE: Z,        FE: Y and E
};

std::string ToString(InputRouting routing);
InputRouting ParseInputRouting(const std::string& name);

struct ModelConfig {
  ReorientLayout layout = ReorientLayout::Default();
  InputRouting routing = InputRouting::kErrorFarEnd;
  int num_bins = 257;

  // NE/FE encoder streams: two separable convs, each followed by max-pool.
  int stream_filters = 32;                 // L
  std::array<int, 2> stream_kernels = {5, 3};
  int pool_factor = 2;

  bool time_alignment = true;
  int sim_channels = 32;                   // H
  int max_delay = 64;                      // D_max

  std::array<int, 2> joint_filters = {64, 96};
  int joint_kernel = 3;
  int joint_stride = 2;

  int fgru_hidden = 64;
  int subband_groups = 2;
  int subband_hidden = 128;

  int head_filters = 16;
  int head_kernel = 3;

  int ne_input_channels() const;
  int fe_input_channels() const;
  // Throws ConfigError naming the first inconsistent field or layer.
  void Validate() const;
};

struct ParamSpec {
  std::string name;  // full path
  std::vector<int> shape;
};

// Static description of one graph layer. Activations are channels x width.
struct LayerSpec {
  std::string path;
  std::string kind;
  int in_channels = 0;
  int in_width = 0;
  int out_channels = 0;
  int out_width = 0;
  std::vector<ParamSpec> params;
  std::int64_t macs_per_frame = 0;
};

// Builds the layer list and checks that every layer's declared input shape
// matches its producer.
std::vector<LayerSpec> DescribeModel(const ModelConfig& cfg);
// A standalone 1-D convolution (weight out x in x kernel, bias out).
LayerSpec DescribeConv(const std::string& path, int in_channels, int width,
                       int out_channels, int kernel, int stride);
std::int64_t ParamCount(const LayerSpec& layer);

std::int64_t ParamCount(const ModelConfig& cfg);
std::int64_t MacsPerFrame(const ModelConfig& cfg);
// MacsPerFrame * frame_rate (62.5 frames/s at a 16 ms hop).
double MacsPerSecond(const ModelConfig& cfg, double frame_rate);

// Per-bin magnitude in [0, 1] and phase in (-pi, pi].
struct ComplexMask {
  std::vector<double> magnitude;
  std::vector<double> phase;
};

// Compressed magnitude times mask, phase rotated, then decompressed with
// exponent 1 / alpha so the result is ready for synthesis.
ComplexSpectrumFrame ApplyMask(const ComplexSpectrumFrame& error_frame,
                               const ComplexMask& mask, double alpha);

// One frame of model input. ne / fe are reoriented compressed magnitudes,
// channel-major (channels x features_per_channel); error_magnitude is the
// compressed |Z| in natural bin order.
struct FrameInput {
  std::vector<double> ne;
  std::vector<double> fe;
  std::vector<double> error_magnitude;
};

// Depthwise centre taps and point-wise identities in both encoder streams,
// identity time alignment, every other tensor zero.
WeightStore IdentityFrontEndWeights(const ModelConfig& cfg);

class Model {
 public:
  // Throws ConfigError naming the missing or mis-shaped tensor path.
  static Model Build(const ModelConfig& cfg, WeightStore weights);
  // Deterministic Glorot-uniform weights (rounded to binary32) from a 64-bit
  // seed; biases zero.
  static Model BuildRandom(const ModelConfig& cfg, std::uint64_t seed);
  static WeightStore RandomWeights(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  const WeightStore& weights() const { return weights_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }

  // Per-stream recurrent state: subband GRU hiddens and the time-alignment
  // buffers. Copyable, so a snapshot can be replayed.
  class StreamState {
   public:
    std::int64_t frames_processed() const { return frames_; }

   private:
    friend class Model;
    std::uint64_t model_id_ = 0;
    std::int64_t frames_ = 0;
    std::optional<StreamingTimeAlignment> ta_;
    std::vector<std::vector<double>> subband_hidden_;
  };

  StreamState NewStream() const;
  ComplexMask ForwardFrame(StreamState& state, const FrameInput& in) const;
  // Layer-by-layer over the whole utterance. Same result as feeding
  // ForwardFrame frame by frame from a fresh stream.
  std::vector<ComplexMask> ForwardBatch(std::span<const FrameInput> frames) const;
  // Encoder streams and time alignment only.
  DelayDistribution ProbeDelays(std::span<const FrameInput> frames) const;

 private:
  Model() = default;
  std::span<const double> W(const std::string& path) const;
  void CheckInput(const FrameInput& in) const;
  std::vector<double> EncodeStream(const std::string& prefix,
                                   std::span<const double> input,
                                   int in_channels) const;
  std::vector<double> JointAndFrequencyGru(std::span<const double> near,
                                           std::span<const double> aligned) const;
  void SubbandStep(int group, std::span<const double> fgru_out,
                   std::vector<double>& hidden) const;
  ComplexMask Head(const std::vector<std::vector<double>>& subband_hidden,
                   std::span<const double> error_magnitude) const;
  TaWeights TimeAlignWeights() const;
  void CheckShape(const LayerSpec& spec, std::size_t size) const;
  const LayerSpec& Layer(const std::string& path) const;

  ModelConfig cfg_;
  WeightStore weights_;
  std::vector<LayerSpec> layers_;
  TaWeights ta_weights_;
  std::uint64_t id_ = 0;
};

}  // namespace aenr

#endif  // AENR_MODEL_H_
