#include "aenr/pipeline.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "aenr/errors.h"
#include "aenr/weight_store.h"

namespace aenr {

namespace {

void CheckInputs(std::span<const double> mic, std::span<const double> far_end) {
  if (mic.empty()) throw ConfigError("microphone signal is empty");
  if (mic.size() != far_end.size())
    throw ConfigError("microphone and far-end signals differ in length (" +
                      std::to_string(mic.size()) + " vs " + std::to_string(far_end.size()) + ")");
}

std::size_t NumBlocks(std::size_t n, int hop) { return (n + hop - 1) / hop; }

std::vector<double> PadBlocks(std::span<const double> x, std::size_t blocks, int hop) {
  std::vector<double> out(blocks * hop, 0.0);
  std::copy(x.begin(), x.end(), out.begin());
  return out;
}

// One hop of zeros in front and behind.
std::vector<double> WithLead(std::span<const double> x, int hop) {
  std::vector<double> out(x.size() + 2 * static_cast<std::size_t>(hop), 0.0);
  std::copy(x.begin(), x.end(), out.begin() + hop);
  return out;
}

std::vector<double> Reoriented(const std::vector<double>& magnitude, const ReorientLayout& layout) {
  std::vector<double> out(layout.output_len());
  ReorientInto(magnitude, layout, out);
  return out;
}

void Append(std::vector<double>& dst, const std::vector<double>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

}  // namespace

Stage ParseStage(const std::string& name) {
  if (name == "full") return Stage::kFull;
  if (name == "kf-only") return Stage::kKfOnly;
  throw ConfigError("stage must be 'full' or 'kf-only' (got '" + name + "')");
}

FrameInput MakeFrameInput(const ComplexSpectrumFrame& error, const ComplexSpectrumFrame& echo,
                          const ComplexSpectrumFrame& far_end, const ModelConfig& cfg,
                          double alpha) {
  const auto z = Compress(error, alpha);
  const auto y = Compress(far_end, alpha);
  FrameInput in;
  in.ne = Reoriented(z.magnitude, cfg.layout);
  in.fe = Reoriented(y.magnitude, cfg.layout);
  if (cfg.routing != InputRouting::kErrorFarEnd) {
    const auto e = Reoriented(Compress(echo, alpha).magnitude, cfg.layout);
    Append(cfg.routing == InputRouting::kErrorAndEchoFarEnd ? in.ne : in.fe, e);
  }
  in.error_magnitude = z.magnitude;
  return in;
}

Model BuildModel(const PipelineConfig& cfg) {
  cfg.Validate();
  if (cfg.weights_path) return Model::Build(cfg.model, WeightStore::Load(*cfg.weights_path));
  return Model::BuildRandom(cfg.model, cfg.seed);
}

Pipeline::Pipeline(PipelineConfig cfg, Model model) : cfg_(std::move(cfg)), model_(std::move(model)) {
  cfg_.Validate();
  if (model_.config().num_bins != cfg_.model.num_bins ||
      model_.config().layout.output_len() != cfg_.model.layout.output_len() ||
      model_.config().routing != cfg_.model.routing)
    throw ConfigError("model does not match pipeline config (model.* fields)");
}

PipelineResult Pipeline::ProcessBatch(std::span<const double> mic, std::span<const double> far_end,
                                      Stage stage) const {
  CheckInputs(mic, far_end);
  const int hop = cfg_.stft.hop;
  const std::size_t n = mic.size();
  const std::size_t blocks = NumBlocks(n, hop);
  const auto x = PadBlocks(mic, blocks, hop);
  const auto y = PadBlocks(far_end, blocks, hop);

  PipelineResult res;
  res.error.resize(blocks * hop);
  res.echo_estimate.resize(blocks * hop);
  KalmanState kf = KfInit(cfg_.kalman);
  FftTransform fft(cfg_.kalman.fft_size());
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t off = b * hop;
    const auto out = KfProcessBlock(kf, std::span(x).subspan(off, hop),
                                    std::span(y).subspan(off, hop), fft);
    std::copy(out.error.begin(), out.error.end(), res.error.begin() + off);
    std::copy(out.echo_estimate.begin(), out.echo_estimate.end(), res.echo_estimate.begin() + off);
  }

  if (stage == Stage::kKfOnly) {
    res.output.assign(res.error.begin(), res.error.begin() + n);
  } else {
    const auto z_frames = Analyze(WithLead(res.error, hop), cfg_.stft);
    const auto e_frames = Analyze(WithLead(res.echo_estimate, hop), cfg_.stft);
    const auto y_frames = Analyze(WithLead(y, hop), cfg_.stft);
    std::vector<FrameInput> inputs;
    inputs.reserve(z_frames.size());
    for (std::size_t t = 0; t < z_frames.size(); ++t)
      inputs.push_back(MakeFrameInput(z_frames[t], e_frames[t], y_frames[t], cfg_.model,
                                      cfg_.compression_alpha));
    res.masks = model_.ForwardBatch(inputs);
    std::vector<ComplexSpectrumFrame> enhanced;
    enhanced.reserve(z_frames.size());
    for (std::size_t t = 0; t < z_frames.size(); ++t)
      enhanced.push_back(ApplyMask(z_frames[t], res.masks[t], cfg_.compression_alpha));
    const auto s = Synthesize(enhanced, cfg_.stft);
    res.output.assign(s.begin() + hop, s.begin() + hop + n);
  }
  res.error.resize(n);
  res.echo_estimate.resize(n);
  return res;
}

PipelineResult Pipeline::ProcessStreaming(std::span<const double> mic,
                                          std::span<const double> far_end, Stage stage) const {
  CheckInputs(mic, far_end);
  const int hop = cfg_.stft.hop;
  const std::size_t n = mic.size();
  const std::size_t blocks = NumBlocks(n, hop);
  const auto x = PadBlocks(mic, blocks, hop);
  const auto y = PadBlocks(far_end, blocks, hop);

  StreamingPipeline stream(*this, stage);
  std::vector<double> out;
  out.reserve((blocks + 2) * hop);
  for (std::size_t b = 0; b < blocks; ++b)
    Append(out, stream.Push(std::span(x).subspan(b * hop, hop), std::span(y).subspan(b * hop, hop)));
  Append(out, stream.Finish());

  PipelineResult res;
  const std::size_t lat = stream.Latency();
  res.output.assign(out.begin() + lat, out.begin() + lat + n);
  res.error.assign(stream.error().begin(), stream.error().begin() + n);
  res.echo_estimate.assign(stream.echo_estimate().begin(), stream.echo_estimate().begin() + n);
  res.masks = stream.masks();
  return res;
}

StreamingPipeline::StreamingPipeline(const Pipeline& pipeline, Stage stage)
    : pipeline_(pipeline),
      stage_(stage),
      kf_(KfInit(pipeline.config().kalman)),
      kf_fft_(pipeline.config().kalman.fft_size()),
      z_analyzer_(pipeline.config().stft),
      e_analyzer_(pipeline.config().stft),
      y_analyzer_(pipeline.config().stft),
      synthesizer_(pipeline.config().stft),
      model_state_(pipeline.model().NewStream()) {
  const std::vector<double> zeros(pipeline.config().stft.hop, 0.0);
  z_analyzer_.Push(zeros);
  e_analyzer_.Push(zeros);
  y_analyzer_.Push(zeros);
}

int StreamingPipeline::Latency() const {
  return stage_ == Stage::kKfOnly ? 0 : pipeline_.config().stft.hop;
}

std::vector<double> StreamingPipeline::SynthesizeFrame(const ComplexSpectrumFrame& z,
                                                       const ComplexSpectrumFrame& e,
                                                       const ComplexSpectrumFrame& y) {
  const auto& cfg = pipeline_.config();
  const auto in = MakeFrameInput(z, e, y, cfg.model, cfg.compression_alpha);
  masks_.push_back(pipeline_.model().ForwardFrame(model_state_, in));
  return synthesizer_.Push(ApplyMask(z, masks_.back(), cfg.compression_alpha));
}

std::vector<double> StreamingPipeline::Push(std::span<const double> mic_block,
                                            std::span<const double> far_block) {
  const std::size_t hop = pipeline_.config().stft.hop;
  if (finished_) throw std::logic_error("StreamingPipeline::Push after Finish");
  if (mic_block.size() != hop || far_block.size() != hop)
    throw ConfigError("streaming blocks must be exactly one hop (" + std::to_string(hop) + " samples)");
  const auto kf = KfProcessBlock(kf_, mic_block, far_block, kf_fft_);
  Append(error_, kf.error);
  Append(echo_, kf.echo_estimate);
  if (stage_ == Stage::kKfOnly) return kf.error;
  const auto z = z_analyzer_.Push(kf.error);
  const auto e = e_analyzer_.Push(kf.echo_estimate);
  const auto y = y_analyzer_.Push(far_block);
  return SynthesizeFrame(*z, *e, *y);
}

std::vector<double> StreamingPipeline::Finish() {
  if (finished_) return {};
  finished_ = true;
  if (stage_ == Stage::kKfOnly) return {};
  const std::vector<double> zeros(pipeline_.config().stft.hop, 0.0);
  const auto z = z_analyzer_.Push(zeros);
  const auto e = e_analyzer_.Push(zeros);
  const auto y = y_analyzer_.Push(zeros);
  auto out = SynthesizeFrame(*z, *e, *y);
  Append(out, synthesizer_.Flush());
  return out;
}

DelayProbe ProbeDelay(std::span<const double> mic, std::span<const double> far_end,
                      const Model& model, const StftConfig& stft, double alpha) {
  CheckInputs(mic, far_end);
  if (mic.size() < static_cast<std::size_t>(stft.window_len))
    throw ConfigError("delay probe needs at least one frame (" + std::to_string(stft.window_len) +
                      " samples)");
  const auto& cfg = model.config();
  if (cfg.routing != InputRouting::kErrorFarEnd)
    throw ConfigError("delay probe needs model.routing = z-y");
  const auto x_frames = Analyze(WithLead(mic, stft.hop), stft);
  const auto y_frames = Analyze(WithLead(far_end, stft.hop), stft);
  std::vector<FrameInput> inputs;
  for (std::size_t t = 0; t < x_frames.size(); ++t)
    inputs.push_back(MakeFrameInput(x_frames[t], x_frames[t], y_frames[t], cfg, alpha));

  DelayProbe probe;
  probe.dist = model.ProbeDelays(inputs);
  probe.mean = probe.dist.TimeAverage();
  const auto peak = std::max_element(probe.mean.begin(), probe.mean.end());
  probe.peak_index = static_cast<int>(peak - probe.mean.begin());
  probe.peak_lag_ms = 1000.0 * probe.peak_index * stft.hop / stft.sample_rate;
  double rival = 0.0;
  for (int d = 0; d < probe.dist.max_delay; ++d)
    if (std::abs(d - probe.peak_index) > kPeakGuardFrames) rival = std::max(rival, probe.mean[d]);
  probe.prominence = rival > 0.0 ? *peak / rival : std::numeric_limits<double>::infinity();
  probe.out_of_span = probe.prominence < kMinPeakProminence;
  return probe;
}

std::string DelayProbeCsv(const DelayProbe& probe, const StftConfig& stft) {
  std::ostringstream os;
  os.precision(9);
  const double hop_ms = 1000.0 * stft.hop / stft.sample_rate;
  os << "# lag_of_d1=0 hop_ms=" << hop_ms << " peak_d=" << probe.peak_index + 1
     << " peak_lag_ms=" << probe.peak_lag_ms << " prominence=" << probe.prominence
     << " status=" << (probe.out_of_span ? "out_of_span" : "ok") << "\n";
  os << "frame";
  for (int d = 0; d < probe.dist.max_delay; ++d) os << ",d" << d + 1;
  os << "\n";
  for (int t = 0; t < probe.dist.frames; ++t) {
    os << t;
    for (int d = 0; d < probe.dist.max_delay; ++d) os << "," << probe.dist.at(t, d);
    os << "\n";
  }
  return os.str();
}

ReorientedFeatures SignalFeatures(std::span<const double> signal, const StftConfig& stft,
                                  const ReorientLayout& layout, double alpha) {
  const auto frames = Analyze(WithLead(signal, stft.hop), stft);
  std::vector<std::vector<double>> mags;
  mags.reserve(frames.size());
  for (const auto& f : frames) mags.push_back(Compress(f, alpha).magnitude);
  return ReorientFrames(mags, layout);
}

}  // namespace aenr
