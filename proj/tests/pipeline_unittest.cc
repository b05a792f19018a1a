#include "aenr/pipeline.h"

#include <algorithm>
#include <cmath>

#include "aenr/errors.h"
#include "aenr/scene_sim.h"
#include "gtest/gtest.h"

namespace aenr {
namespace {

struct Scene {
  SceneOutput out;
  Scene() {
    SceneSpec spec;
    spec.ser_db = 0.0;
    spec.snr_db = 20.0;
    spec.delay_ms = 30.0;
    out = GenerateScene(spec, SyntheticSpeech(11, 3.0), SyntheticSpeech(12, 3.0));
  }
};

const SceneOutput& DtScene() {
  static const Scene s;
  return s.out;
}

Pipeline MakePipeline(InputRouting routing = InputRouting::kErrorFarEnd, std::uint64_t seed = 1) {
  PipelineConfig cfg;
  cfg.model.routing = routing;
  cfg.seed = seed;
  return Pipeline(cfg, BuildModel(cfg));
}

TEST(PipelineConfig, ParsesKeysAndComments) {
  const auto cfg = ParsePipelineConfig(
      "# comment\n"
      "kalman.noise_smoothing = 0.95\n"
      "layout.mode = csubfr   # trailing\n"
      "model.routing = ze-y\n"
      "compression_alpha = 0.5\n"
      "seed = 42\n");
  EXPECT_EQ(cfg.kalman.noise_smoothing, 0.95);
  EXPECT_EQ(cfg.model.layout.mode, ReorientMode::kSubband);
  EXPECT_EQ(cfg.model.routing, InputRouting::kErrorAndEchoFarEnd);
  EXPECT_EQ(cfg.compression_alpha, 0.5);
  EXPECT_EQ(cfg.seed, 42u);
  const auto again = ParsePipelineConfig(cfg.ToText());
  EXPECT_EQ(again.ToText(), cfg.ToText());
}

void ExpectConfigError(const std::string& text, const std::string& fragment) {
  try {
    ParsePipelineConfig(text);
    FAIL() << "accepted: " << text;
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

TEST(PipelineConfig, ErrorsNameTheField) {
  ExpectConfigError("bogus.key = 1\n", "bogus.key");
  ExpectConfigError("\n\nkalman.num_partitions = ten\n", "line 3");
  ExpectConfigError("kalman.block_size = 128\n", "block_size");
  ExpectConfigError("compression_alpha = 1.5\n", "compression_alpha");
  ExpectConfigError("model.num_bins = 200\n", "num_bins");
  ExpectConfigError("layout.overlap = 1.0\n", "overlap");
  ExpectConfigError("stft.hop = 300\n", "hop");
}

TEST(Pipeline, BatchEqualsStreamingForEveryRouting) {
  const auto& s = DtScene();
  for (auto routing : {InputRouting::kErrorFarEnd, InputRouting::kErrorAndEchoFarEnd,
                       InputRouting::kErrorFarEndAndEcho}) {
    const auto p = MakePipeline(routing);
    const auto batch = p.ProcessBatch(s.mic, s.far_end);
    const auto stream = p.ProcessStreaming(s.mic, s.far_end);
    ASSERT_EQ(batch.output.size(), s.mic.size());
    EXPECT_EQ(batch.output, stream.output);
    EXPECT_EQ(batch.error, stream.error);
    ASSERT_EQ(batch.masks.size(), stream.masks.size());
    for (std::size_t t = 0; t < batch.masks.size(); ++t)
      ASSERT_EQ(batch.masks[t].magnitude, stream.masks[t].magnitude);
    for (double v : batch.output) ASSERT_TRUE(std::isfinite(v));
  }
}

TEST(Pipeline, KfOnlyReturnsTheErrorSignal) {
  const auto& s = DtScene();
  const auto p = MakePipeline();
  const auto r = p.ProcessBatch(s.mic, s.far_end, Stage::kKfOnly);
  EXPECT_TRUE(r.masks.empty());
  EXPECT_EQ(r.output, r.error);
  for (std::size_t i = 0; i < s.mic.size(); ++i)
    ASSERT_EQ(r.error[i], s.mic[i] - r.echo_estimate[i]);
  EXPECT_EQ(p.ProcessStreaming(s.mic, s.far_end, Stage::kKfOnly).output, r.output);
}

TEST(Pipeline, OddLengthInput) {
  const auto& s = DtScene();
  const std::vector<double> mic(s.mic.begin(), s.mic.begin() + 12345);
  const std::vector<double> far(s.far_end.begin(), s.far_end.begin() + 12345);
  const auto p = MakePipeline();
  const auto r = p.ProcessBatch(mic, far);
  EXPECT_EQ(r.output.size(), 12345u);
  EXPECT_EQ(p.ProcessStreaming(mic, far).output, r.output);
}

TEST(Pipeline, RejectsBadInput) {
  const auto p = MakePipeline();
  const std::vector<double> empty, a(1000, 0.0), b(999, 0.0);
  EXPECT_THROW(p.ProcessBatch(empty, empty), ConfigError);
  EXPECT_THROW(p.ProcessBatch(a, b), ConfigError);
  EXPECT_THROW(p.ProcessStreaming(a, b), ConfigError);
}

TEST(StreamingPipeline, LatencyIsOneHop) {
  const auto p = MakePipeline();
  StreamingPipeline full(p, Stage::kFull), kf(p, Stage::kKfOnly);
  EXPECT_EQ(full.Latency(), 256);
  EXPECT_EQ(kf.Latency(), 0);
  const std::vector<double> block(256, 0.0), short_block(100, 0.0);
  EXPECT_EQ(full.Push(block, block).size(), 256u);
  EXPECT_THROW(full.Push(short_block, short_block), ConfigError);
}

TEST(Pipeline, IdentityMaskPassesTheErrorThrough) {
  // Zero weights give a 0.5 mask, which scales by 0.5^(1/alpha).
  PipelineConfig cfg;
  WeightStore zeros = Model::RandomWeights(cfg.model, 0);
  for (const auto& [name, t] : zeros.tensors())
    std::fill(zeros.GetMutable(name).values.begin(), zeros.GetMutable(name).values.end(), 0.0);
  const Pipeline p(cfg, Model::Build(cfg.model, zeros));
  const auto& s = DtScene();
  const auto r = p.ProcessBatch(s.mic, s.far_end);
  const double g = std::pow(0.5, 1.0 / cfg.compression_alpha);
  for (std::size_t i = 256; i + 256 < s.mic.size(); ++i)
    ASSERT_NEAR(r.output[i], g * r.error[i], 1e-9);
}

TEST(ProbeDelay, FindsPureDelay) {
  PipelineConfig cfg;
  const auto model = Model::Build(cfg.model, IdentityFrontEndWeights(cfg.model));
  const auto far = SyntheticSpeech(21, 4.0);
  for (int lag_frames : {0, 10, 40}) {
    std::vector<double> mic(far.size(), 0.0);
    for (std::size_t i = lag_frames * 256; i < far.size(); ++i) mic[i] = far[i - lag_frames * 256];
    const auto probe = ProbeDelay(mic, far, model, cfg.stft, cfg.compression_alpha);
    EXPECT_NEAR(probe.peak_index, lag_frames, 1) << lag_frames;
    EXPECT_FALSE(probe.out_of_span);
    for (int t = 0; t < probe.dist.frames; ++t) {
      double sum = 0.0;
      for (int d = 0; d < probe.dist.max_delay; ++d) sum += probe.dist.at(t, d);
      ASSERT_NEAR(sum, 1.0, 1e-6);
    }
  }
  std::vector<double> mic(far.size(), 0.0);
  for (std::size_t i = 90 * 256; i < far.size(); ++i) mic[i] = far[i - 90 * 256];
  EXPECT_TRUE(ProbeDelay(mic, far, model, cfg.stft, cfg.compression_alpha).out_of_span);
}

TEST(ProbeDelay, CsvAndErrors) {
  PipelineConfig cfg;
  const auto model = Model::Build(cfg.model, IdentityFrontEndWeights(cfg.model));
  const auto far = SyntheticSpeech(22, 2.0);
  const auto probe = ProbeDelay(far, far, model, cfg.stft, cfg.compression_alpha);
  const auto csv = DelayProbeCsv(probe, cfg.stft);
  EXPECT_EQ(csv.rfind("# lag_of_d1=0", 0), 0u);
  EXPECT_NE(csv.find("\nframe,d1,d2,"), std::string::npos);
  EXPECT_NE(csv.find(",d64\n"), std::string::npos);
  const std::vector<double> tiny(100, 0.1);
  EXPECT_THROW(ProbeDelay(tiny, tiny, model, cfg.stft, cfg.compression_alpha), ConfigError);
  PipelineConfig ze = cfg;
  ze.model.routing = InputRouting::kErrorAndEchoFarEnd;
  EXPECT_THROW(ProbeDelay(far, far, BuildModel(ze), cfg.stft, cfg.compression_alpha), ConfigError);
}

TEST(SignalFeatures, ShapeMatchesLayout) {
  const auto x = SyntheticSpeech(23, 1.0);
  const StftConfig stft;
  const auto f = SignalFeatures(x, stft, ReorientLayout::Default(), 0.3);
  EXPECT_EQ(f.channels, 5);
  EXPECT_EQ(f.features, 52);
  EXPECT_EQ(f.frames, NumFrames(x.size() + 2 * stft.hop, stft));
}

}  // namespace
}  // namespace aenr
