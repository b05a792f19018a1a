#include "aenr/model.h"

#include <cmath>
#include <numbers>
#include <random>

#include "aenr/errors.h"
#include "gtest/gtest.h"

namespace aenr {
namespace {

std::vector<FrameInput> RandomInputs(const ModelConfig& cfg, int frames, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.5);
  const auto w = static_cast<std::size_t>(cfg.layout.features_per_channel());
  std::vector<FrameInput> out(frames);
  for (auto& f : out) {
    f.ne.resize(w * cfg.ne_input_channels());
    f.fe.resize(w * cfg.fe_input_channels());
    f.error_magnitude.resize(cfg.num_bins);
    for (auto* v : {&f.ne, &f.fe, &f.error_magnitude})
      for (double& x : *v) x = u(rng);
  }
  return out;
}

WeightStore ZeroWeights(const ModelConfig& cfg) {
  WeightStore store;
  for (const auto& layer : DescribeModel(cfg))
    for (const auto& p : layer.params)
      store.Set(p.name, Tensor{p.shape, std::vector<double>(Tensor::NumElements(p.shape), 0.0)});
  return store;
}

// Closed-form counts for the default graph, written out per block.
struct Counts {
  std::int64_t params = 0, macs = 0;
};

Counts HandDerived() {
  const std::int64_t C = 5, W0 = 52, L = 32, W1 = 26, P = 13, H = 32, D = 64;
  Counts n;
  // NE and FE streams: depthwise (no bias) + pointwise (with bias), twice.
  const std::int64_t stream_params = (C * 5 + L * C + L) + (L * 3 + L * L + L);
  const std::int64_t stream_macs = (C * 5 * W0 + C * L * W0) + (L * 3 * W1 + L * L * W1);
  n.params += 2 * stream_params;
  n.macs += 2 * stream_macs;
  // Time alignment: two projections, score kernel 5x3 over H channels.
  n.params += 2 * (H * L + H) + H * 15 + 1;
  n.macs += 2 * H * L * P + H * D * P + H * 15 * D + H * D * P;
  // Joint convs, kernel 3 stride 2: 13 -> 7 -> 4.
  n.params += (64 * 64 * 3 + 64) + (96 * 64 * 3 + 96);
  n.macs += 64 * 64 * 3 * 7 + 96 * 64 * 3 * 4;
  // FGRU over 4 positions, 96 -> 64.
  n.params += 3 * 64 * (96 + 64) + 6 * 64;
  n.macs += 4 * 3 * 64 * (96 + 64);
  // Two subband GRUs, 2 positions x 64 -> 128.
  n.params += 2 * (3 * 128 * (128 + 128) + 6 * 128);
  n.macs += 2 * 3 * 128 * (128 + 128);
  // FC 256 -> 257.
  n.params += 256 * 257 + 257;
  n.macs += 256 * 257;
  // Head convs over 257 bins: 2 -> 16 -> 16 (k3), 16 -> 3 (k1).
  n.params += (2 * 16 * 3 + 16) + (16 * 16 * 3 + 16) + (16 * 3 + 3);
  n.macs += (2 * 16 * 3 + 16 * 16 * 3 + 16 * 3) * 257;
  return n;
}

TEST(ModelComplexity, DefaultMatchesHandDerivedCounts) {
  const ModelConfig cfg;
  const auto hand = HandDerived();
  EXPECT_EQ(hand.params, 332455);
  EXPECT_EQ(hand.macs, 967480);
  EXPECT_EQ(ParamCount(cfg), hand.params);
  EXPECT_EQ(MacsPerFrame(cfg), hand.macs);
  EXPECT_DOUBLE_EQ(MacsPerSecond(cfg, 62.5), 60467500.0);
}

TEST(ModelComplexity, SingleConvExample) {
  const auto l = DescribeConv("c", 4, 10, 8, 3, 1);
  EXPECT_EQ(l.out_width, 10);
  ASSERT_EQ(l.params.size(), 2u);
  EXPECT_EQ(Tensor::NumElements(l.params[0].shape), 96u);
  EXPECT_EQ(Tensor::NumElements(l.params[1].shape), 8u);
  EXPECT_EQ(ParamCount(l), 104);
  EXPECT_EQ(l.macs_per_frame, 960);
}

TEST(ModelComplexity, LayerChainIsConsistent) {
  const auto layers = DescribeModel(ModelConfig{});
  std::int64_t total = 0;
  for (const auto& l : layers) total += ParamCount(l);
  EXPECT_EQ(total, ParamCount(ModelConfig{}));
  EXPECT_EQ(layers.front().path, "ne/conv1");
  EXPECT_EQ(layers.back().path, "head/conv3");
}

TEST(ModelConfig, ValidationNamesTheField) {
  ModelConfig cfg;
  cfg.joint_kernel = 4;
  try {
    cfg.Validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("joint_kernel"), std::string::npos);
  }
  cfg = ModelConfig{};
  cfg.subband_groups = 3;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = ModelConfig{};
  cfg.num_bins = 256;
  EXPECT_THROW(cfg.Validate(), ConfigError);
}

TEST(ModelBuild, SeededRandomIsDeterministic) {
  const ModelConfig cfg;
  const auto a = Model::BuildRandom(cfg, 42), b = Model::BuildRandom(cfg, 42);
  EXPECT_EQ(a.weights().Checksum(), b.weights().Checksum());
  EXPECT_NE(a.weights().Checksum(), Model::BuildRandom(cfg, 43).weights().Checksum());
  EXPECT_EQ(static_cast<std::int64_t>(a.weights().TotalParameters()), ParamCount(cfg));
  for (const auto& [name, t] : a.weights().tensors())
    for (double v : t.values) ASSERT_EQ(v, static_cast<double>(static_cast<float>(v))) << name;
}

TEST(ModelBuild, MissingOrMisshapedTensorNamesPath) {
  const ModelConfig cfg;
  auto store = Model::RandomWeights(cfg, 1);
  WeightStore missing;
  for (const auto& [name, t] : store.tensors())
    if (name != "fgru/w_hh") missing.Set(name, t);
  try {
    Model::Build(cfg, missing);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("fgru/w_hh"), std::string::npos);
  }
  store.GetMutable("fc/bias").shape = {256};
  store.GetMutable("fc/bias").values.resize(256);
  try {
    Model::Build(cfg, store);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("fc/bias"), std::string::npos);
  }
  auto extra = Model::RandomWeights(cfg, 1);
  extra.Set("unused/weight", Tensor{{1}, {0.0}});
  EXPECT_THROW(Model::Build(cfg, extra), ConfigError);
}

TEST(ModelForward, ZeroInputsAndWeightsGiveHalfMask) {
  const ModelConfig cfg;
  const auto model = Model::Build(cfg, ZeroWeights(cfg));
  auto in = RandomInputs(cfg, 1, 0)[0];
  for (auto* v : {&in.ne, &in.fe, &in.error_magnitude}) std::fill(v->begin(), v->end(), 0.0);
  auto state = model.NewStream();
  const auto mask = model.ForwardFrame(state, in);
  ASSERT_EQ(mask.magnitude.size(), 257u);
  for (double m : mask.magnitude) EXPECT_EQ(m, 0.5);
  for (double p : mask.phase) EXPECT_EQ(p, 0.0);
}

TEST(ModelForward, SnapshotReplayIsDeterministic) {
  const ModelConfig cfg;
  const auto model = Model::BuildRandom(cfg, 3);
  const auto inputs = RandomInputs(cfg, 5, 4);
  auto state = model.NewStream();
  for (int t = 0; t < 3; ++t) model.ForwardFrame(state, inputs[t]);
  auto snapshot = state;
  const auto a = model.ForwardFrame(state, inputs[3]);
  const auto b = model.ForwardFrame(snapshot, inputs[3]);
  EXPECT_EQ(a.magnitude, b.magnitude);
  EXPECT_EQ(a.phase, b.phase);
  EXPECT_EQ(state.frames_processed(), 4);
}

TEST(ModelForward, StreamingMatchesBatchAndIsCausal) {
  const ModelConfig cfg;
  const auto model = Model::BuildRandom(cfg, 5);
  auto inputs = RandomInputs(cfg, 188, 6);  // 3 s at 62.5 frames/s
  const auto batch = model.ForwardBatch(inputs);
  auto state = model.NewStream();
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const auto m = model.ForwardFrame(state, inputs[t]);
    ASSERT_EQ(m.magnitude, batch[t].magnitude) << t;
    ASSERT_EQ(m.phase, batch[t].phase) << t;
  }
  const std::size_t cut = 100;
  for (std::size_t t = cut + 1; t < inputs.size(); ++t)
    for (double& v : inputs[t].fe) v *= 3.0;
  const auto mutated = model.ForwardBatch(inputs);
  for (std::size_t t = 0; t <= cut; ++t) EXPECT_EQ(mutated[t].magnitude, batch[t].magnitude);
  EXPECT_NE(mutated.back().magnitude, batch.back().magnitude);
}

TEST(ModelForward, MaskBounds) {
  for (auto routing : {InputRouting::kErrorFarEnd, InputRouting::kErrorAndEchoFarEnd,
                       InputRouting::kErrorFarEndAndEcho}) {
    ModelConfig cfg;
    cfg.routing = routing;
    const auto model = Model::BuildRandom(cfg, 7);
    for (const auto& m : model.ForwardBatch(RandomInputs(cfg, 20, 8))) {
      for (double v : m.magnitude) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
      for (double p : m.phase) {
        EXPECT_GT(p, -std::numbers::pi);
        EXPECT_LE(p, std::numbers::pi);
      }
    }
  }
}

TEST(ModelForward, RejectsForeignStateAndBadInput) {
  const ModelConfig cfg;
  const auto a = Model::BuildRandom(cfg, 1), b = Model::BuildRandom(cfg, 1);
  auto state = a.NewStream();
  const auto in = RandomInputs(cfg, 1, 2)[0];
  EXPECT_THROW(b.ForwardFrame(state, in), ConfigError);
  auto bad = in;
  bad.ne.pop_back();
  EXPECT_THROW(a.ForwardFrame(state, bad), ConfigError);
}

TEST(ModelForward, RoutingChangesStreamInputWidth) {
  ModelConfig cfg;
  cfg.routing = InputRouting::kErrorAndEchoFarEnd;
  EXPECT_EQ(cfg.ne_input_channels(), 10);
  EXPECT_EQ(cfg.fe_input_channels(), 5);
  cfg.routing = InputRouting::kErrorFarEndAndEcho;
  EXPECT_EQ(cfg.ne_input_channels(), 5);
  EXPECT_EQ(cfg.fe_input_channels(), 10);
  EXPECT_EQ(ParseInputRouting("ze-y"), InputRouting::kErrorAndEchoFarEnd);
  EXPECT_THROW(ParseInputRouting("x"), ConfigError);
}

TEST(ModelProbe, DelayDistributionRowsSumToOne) {
  const ModelConfig cfg;
  const auto model = Model::Build(cfg, IdentityFrontEndWeights(cfg));
  const auto dist = model.ProbeDelays(RandomInputs(cfg, 30, 9));
  ASSERT_EQ(dist.frames, 30);
  ASSERT_EQ(dist.max_delay, 64);
  for (int t = 0; t < 30; ++t) {
    double s = 0.0;
    for (int d = 0; d < 64; ++d) s += dist.at(t, d);
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

ComplexSpectrumFrame UnitFrame(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  ComplexSpectrumFrame f;
  for (int k = 0; k < 257; ++k) f.bins.push_back(std::polar(1.0, u(rng)));
  return f;
}

TEST(ApplyMask, IdentityZeroAndRotation) {
  const auto z = UnitFrame(1);
  ComplexMask m{std::vector<double>(257, 1.0), std::vector<double>(257, 0.0)};
  const auto same = ApplyMask(z, m, 0.3);
  for (int k = 0; k < 257; ++k) EXPECT_LT(std::abs(same.bins[k] - z.bins[k]), 1e-12);

  m.magnitude.assign(257, 0.0);
  for (const auto& b : ApplyMask(z, m, 0.3).bins) EXPECT_EQ(std::abs(b), 0.0);

  m.magnitude.assign(257, 0.5);
  m.phase.assign(257, std::numbers::pi / 2);
  const auto rotated = ApplyMask(z, m, 0.3);
  // 0.5^(1/0.3) = 2^(-10/3) = 0.099212565748012...
  for (int k = 0; k < 257; ++k) {
    EXPECT_NEAR(std::abs(rotated.bins[k]), 0.09921256574801247, 1e-14);
    EXPECT_LT(std::abs(rotated.bins[k] / std::abs(rotated.bins[k]) -
                       z.bins[k] * Complex(0.0, 1.0)),
              1e-12);
  }
  m.phase.pop_back();
  EXPECT_THROW(ApplyMask(z, m, 0.3), ConfigError);
}

}  // namespace
}  // namespace aenr
