#include "aenr/model.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <random>

#include "aenr/errors.h"
#include "aenr/layers.h"

namespace aenr {

namespace {

std::atomic<std::uint64_t> g_next_model_id{1};

LayerSpec SeparableSpec(const std::string& path, int in_ch, int width, int out_ch,
                        int kernel) {
  LayerSpec s{path, "separable_conv", in_ch, width, out_ch, width, {}, 0};
  s.params = {{path + "/depthwise", {in_ch, kernel}},
              {path + "/pointwise/weight", {out_ch, in_ch}},
              {path + "/pointwise/bias", {out_ch}}};
  s.macs_per_frame = static_cast<std::int64_t>(in_ch) * kernel * width +
                     static_cast<std::int64_t>(in_ch) * out_ch * width;
  return s;
}

LayerSpec PoolSpec(const std::string& path, int ch, int width, int factor) {
  return {path, "max_pool", ch, width, ch, layers::PoolOutputWidth(width, factor), {}, 0};
}

LayerSpec ConvSpec(const std::string& path, int in_ch, int width, int out_ch,
                   int kernel, int stride) {
  const int out_w = layers::ConvOutputWidth(width, kernel, stride);
  LayerSpec s{path, "conv", in_ch, width, out_ch, out_w, {}, 0};
  s.params = {{path + "/weight", {out_ch, in_ch, kernel}}, {path + "/bias", {out_ch}}};
  s.macs_per_frame = static_cast<std::int64_t>(in_ch) * out_ch * kernel * out_w;
  return s;
}

LayerSpec GruSpec(const std::string& path, int input, int hidden, int steps,
                  int in_ch, int in_w, int out_ch, int out_w) {
  LayerSpec s{path, "gru", in_ch, in_w, out_ch, out_w, {}, 0};
  s.params = {{path + "/w_ih", {3 * hidden, input}},
              {path + "/w_hh", {3 * hidden, hidden}},
              {path + "/b_ih", {3 * hidden}},
              {path + "/b_hh", {3 * hidden}}};
  s.macs_per_frame = static_cast<std::int64_t>(steps) * 3 * hidden * (input + hidden);
  return s;
}

void RequireChain(const LayerSpec& producer, const LayerSpec& consumer) {
  if (producer.out_channels != consumer.in_channels ||
      producer.out_width != consumer.in_width)
    throw ConfigError("layer '" + consumer.path + "': input shape " +
                      std::to_string(consumer.in_channels) + "x" +
                      std::to_string(consumer.in_width) + " does not match '" +
                      producer.path + "' output " +
                      std::to_string(producer.out_channels) + "x" +
                      std::to_string(producer.out_width));
}

bool IsBias(const std::string& name) {
  return name.ends_with("bias") || name.ends_with("b_ih") || name.ends_with("b_hh");
}

}  // namespace

std::string ToString(InputRouting routing) {
  switch (routing) {
    case InputRouting::kErrorFarEnd: return "z-y";
    case InputRouting::kErrorAndEchoFarEnd: return "ze-y";
    case InputRouting::kErrorFarEndAndEcho: return "z-ye";
  }
  return "z-y";
}

InputRouting ParseInputRouting(const std::string& name) {
  if (name == "z-y") return InputRouting::kErrorFarEnd;
  if (name == "ze-y") return InputRouting::kErrorAndEchoFarEnd;
  if (name == "z-ye") return InputRouting::kErrorFarEndAndEcho;
  throw ConfigError("model.routing: unknown routing '" + name + "' (z-y, ze-y, z-ye)");
}

int ModelConfig::ne_input_channels() const {
  const int c = layout.channels();
  return routing == InputRouting::kErrorAndEchoFarEnd ? 2 * c : c;
}

int ModelConfig::fe_input_channels() const {
  const int c = layout.channels();
  return routing == InputRouting::kErrorFarEndAndEcho ? 2 * c : c;
}

void ModelConfig::Validate() const {
  DescribeModel(*this);
}

std::vector<LayerSpec> DescribeModel(const ModelConfig& cfg) {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("model." + field + ": " + why);
  };
  if (cfg.num_bins != cfg.layout.num_bins)
    fail("num_bins", "does not match layout.num_bins");
  if (cfg.layout.padded_len < cfg.num_bins) fail("layout", "padded length below num_bins");
  if (cfg.stream_filters < 1) fail("stream_filters", "must be >= 1");
  for (int k : cfg.stream_kernels)
    if (k < 1 || k % 2 == 0) fail("stream_kernels", "must be odd and >= 1");
  if (cfg.pool_factor < 1) fail("pool_factor", "must be >= 1");
  if (cfg.sim_channels < 1) fail("sim_channels", "must be >= 1");
  if (cfg.max_delay < 1) fail("max_delay", "must be >= 1");
  if (cfg.joint_kernel < 1 || cfg.joint_kernel % 2 == 0) fail("joint_kernel", "must be odd");
  if (cfg.joint_stride < 1) fail("joint_stride", "must be >= 1");
  if (cfg.fgru_hidden < 1 || cfg.subband_hidden < 1 || cfg.subband_groups < 1)
    fail("gru", "sizes must be >= 1");
  if (cfg.head_filters < 1 || cfg.head_kernel < 1 || cfg.head_kernel % 2 == 0)
    fail("head", "filters >= 1 and odd kernel required");

  std::vector<LayerSpec> specs;
  const int width0 = cfg.layout.features_per_channel();
  const int L = cfg.stream_filters;
  std::array<LayerSpec, 2> stream_out;
  for (int s = 0; s < 2; ++s) {
    const std::string prefix = s == 0 ? "ne" : "fe";
    const int in_ch = s == 0 ? cfg.ne_input_channels() : cfg.fe_input_channels();
    auto c1 = SeparableSpec(prefix + "/conv1", in_ch, width0, L, cfg.stream_kernels[0]);
    auto p1 = PoolSpec(prefix + "/pool1", L, c1.out_width, cfg.pool_factor);
    auto c2 = SeparableSpec(prefix + "/conv2", L, p1.out_width, L, cfg.stream_kernels[1]);
    auto p2 = PoolSpec(prefix + "/pool2", L, c2.out_width, cfg.pool_factor);
    RequireChain(c1, p1);
    RequireChain(p1, c2);
    RequireChain(c2, p2);
    stream_out[s] = p2;
    for (auto* l : {&c1, &p1, &c2, &p2}) specs.push_back(*l);
  }
  const int P = stream_out[0].out_width;
  if (stream_out[1].out_width != P) fail("streams", "NE and FE widths differ");

  int aligned_ch = L;
  if (cfg.time_alignment) {
    const int H = cfg.sim_channels, D = cfg.max_delay;
    LayerSpec ta{"ta", "time_alignment", L, P, H, P, {}, 0};
    ta.params = {{"ta/ne_proj/weight", {H, L}}, {"ta/ne_proj/bias", {H}},
                 {"ta/fe_proj/weight", {H, L}}, {"ta/fe_proj/bias", {H}},
                 {"ta/score/weight", {H, kScoreTimeTaps, kScoreDelayTaps}},
                 {"ta/score/bias", {1}}};
    ta.macs_per_frame = 2LL * H * L * P + static_cast<std::int64_t>(H) * D * P +
                        static_cast<std::int64_t>(H) * kScoreTimeTaps * kScoreDelayTaps * D +
                        static_cast<std::int64_t>(H) * D * P;
    RequireChain(stream_out[1], ta);
    aligned_ch = H;
    specs.push_back(ta);
  }
  LayerSpec concat{"joint/concat", "concat", L + aligned_ch, P, L + aligned_ch, P, {}, 0};
  specs.push_back(concat);

  auto j1 = ConvSpec("joint/conv1", L + aligned_ch, P, cfg.joint_filters[0],
                     cfg.joint_kernel, cfg.joint_stride);
  auto j2 = ConvSpec("joint/conv2", j1.out_channels, j1.out_width, cfg.joint_filters[1],
                     cfg.joint_kernel, cfg.joint_stride);
  RequireChain(concat, j1);
  RequireChain(j1, j2);
  specs.push_back(j1);
  specs.push_back(j2);

  const int steps = j2.out_width;
  auto fgru = GruSpec("fgru", j2.out_channels, cfg.fgru_hidden, steps, j2.out_channels,
                      steps, cfg.fgru_hidden, steps);
  RequireChain(j2, fgru);
  specs.push_back(fgru);

  if (steps % cfg.subband_groups != 0)
    throw ConfigError("layer 'sgru0': " + std::to_string(cfg.subband_groups) +
                      " groups do not divide FGRU width " + std::to_string(steps));
  const int group_w = steps / cfg.subband_groups;
  for (int g = 0; g < cfg.subband_groups; ++g) {
    const std::string path = "sgru" + std::to_string(g);
    specs.push_back(GruSpec(path, cfg.fgru_hidden * group_w, cfg.subband_hidden, 1,
                            cfg.fgru_hidden, group_w, cfg.subband_hidden, 1));
  }

  const int fc_in = cfg.subband_groups * cfg.subband_hidden;
  LayerSpec fc{"fc", "linear", fc_in, 1, cfg.num_bins, 1, {}, 0};
  fc.params = {{"fc/weight", {cfg.num_bins, fc_in}}, {"fc/bias", {cfg.num_bins}}};
  fc.macs_per_frame = static_cast<std::int64_t>(fc_in) * cfg.num_bins;
  specs.push_back(fc);

  // Head input: FC output and the raw-order compressed error magnitude.
  auto h1 = ConvSpec("head/conv1", 2, cfg.num_bins, cfg.head_filters, cfg.head_kernel, 1);
  auto h2 = ConvSpec("head/conv2", cfg.head_filters, h1.out_width, cfg.head_filters,
                     cfg.head_kernel, 1);
  auto h3 = ConvSpec("head/conv3", cfg.head_filters, h2.out_width, 3, 1, 1);
  RequireChain(h1, h2);
  RequireChain(h2, h3);
  if (h3.out_width != cfg.num_bins) fail("head", "output width differs from num_bins");
  specs.push_back(h1);
  specs.push_back(h2);
  specs.push_back(h3);
  return specs;
}

LayerSpec DescribeConv(const std::string& path, int in_channels, int width,
                       int out_channels, int kernel, int stride) {
  return ConvSpec(path, in_channels, width, out_channels, kernel, stride);
}

std::int64_t ParamCount(const LayerSpec& layer) {
  std::int64_t n = 0;
  for (const auto& p : layer.params) n += static_cast<std::int64_t>(Tensor::NumElements(p.shape));
  return n;
}

std::int64_t ParamCount(const ModelConfig& cfg) {
  std::int64_t n = 0;
  for (const auto& l : DescribeModel(cfg)) n += ParamCount(l);
  return n;
}

std::int64_t MacsPerFrame(const ModelConfig& cfg) {
  std::int64_t n = 0;
  for (const auto& l : DescribeModel(cfg)) n += l.macs_per_frame;
  return n;
}

double MacsPerSecond(const ModelConfig& cfg, double frame_rate) {
  return static_cast<double>(MacsPerFrame(cfg)) * frame_rate;
}

ComplexSpectrumFrame ApplyMask(const ComplexSpectrumFrame& error_frame,
                               const ComplexMask& mask, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in (0, 1]");
  const std::size_t k_bins = error_frame.bins.size();
  if (mask.magnitude.size() != k_bins || mask.phase.size() != k_bins)
    throw ConfigError("mask size does not match frame");
  ComplexSpectrumFrame out;
  out.frame_index = error_frame.frame_index;
  out.bins.resize(k_bins);
  for (std::size_t k = 0; k < k_bins; ++k) {
    const double compressed = std::pow(std::abs(error_frame.bins[k]), alpha);
    const double enhanced = compressed * mask.magnitude[k];
    const double magnitude = std::pow(enhanced, 1.0 / alpha);
    out.bins[k] = std::polar(magnitude, std::arg(error_frame.bins[k]) + mask.phase[k]);
  }
  return out;
}

WeightStore IdentityFrontEndWeights(const ModelConfig& cfg) {
  WeightStore store;
  for (const auto& layer : DescribeModel(cfg))
    for (const auto& p : layer.params)
      store.Set(p.name, Tensor{p.shape, std::vector<double>(Tensor::NumElements(p.shape), 0.0)});
  for (const std::string prefix : {"ne", "fe"}) {
    for (const std::string conv : {"conv1", "conv2"}) {
      auto& dw = store.GetMutable(prefix + "/" + conv + "/depthwise");
      const int ch = dw.shape[0], k = dw.shape[1];
      for (int c = 0; c < ch; ++c) dw.values[static_cast<std::size_t>(c) * k + (k - 1) / 2] = 1.0;
      auto& pw = store.GetMutable(prefix + "/" + conv + "/pointwise/weight");
      const int out = pw.shape[0], in = pw.shape[1];
      for (int i = 0; i < std::min(out, in); ++i) pw.values[static_cast<std::size_t>(i) * in + i] = 1.0;
    }
  }
  if (cfg.time_alignment) {
    const auto ta = TaWeights::Identity(cfg.stream_filters, cfg.sim_channels);
    store.GetMutable("ta/ne_proj/weight").values = ta.ne_weight;
    store.GetMutable("ta/fe_proj/weight").values = ta.fe_weight;
    store.GetMutable("ta/score/weight").values = ta.score_kernel;
  }
  return store;
}

Model Model::Build(const ModelConfig& cfg, WeightStore weights) {
  Model m;
  m.cfg_ = cfg;
  m.layers_ = DescribeModel(cfg);
  for (const auto& layer : m.layers_) {
    for (const auto& p : layer.params) {
      const Tensor& t = weights.Get(p.name);
      if (t.shape != p.shape)
        throw ConfigError("weight tensor '" + p.name + "' has the wrong shape");
    }
  }
  std::size_t expected = 0;
  for (const auto& layer : m.layers_) expected += layer.params.size();
  if (weights.size() != expected)
    throw ConfigError("weight store has " + std::to_string(weights.size()) +
                      " tensors, graph expects " + std::to_string(expected));
  m.weights_ = std::move(weights);
  if (cfg.time_alignment) m.ta_weights_ = m.TimeAlignWeights();
  m.id_ = g_next_model_id.fetch_add(1);
  return m;
}

WeightStore Model::RandomWeights(const ModelConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  WeightStore store;
  for (const auto& layer : DescribeModel(cfg)) {
    for (const auto& p : layer.params) {
      Tensor t{p.shape, std::vector<double>(Tensor::NumElements(p.shape), 0.0)};
      if (!IsBias(p.name)) {
        std::size_t fan_in = 1, fan_out = static_cast<std::size_t>(p.shape[0]);
        for (std::size_t i = 1; i < p.shape.size(); ++i) fan_in *= p.shape[i];
        for (std::size_t i = 2; i < p.shape.size(); ++i) fan_out *= p.shape[i];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (double& v : t.values) {
          // Portable uniform in [0, 1): top 53 bits of the generator.
          const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
          v = static_cast<float>((2.0 * u - 1.0) * limit);
        }
      }
      store.Set(p.name, std::move(t));
    }
  }
  return store;
}

Model Model::BuildRandom(const ModelConfig& cfg, std::uint64_t seed) {
  return Build(cfg, RandomWeights(cfg, seed));
}

std::span<const double> Model::W(const std::string& path) const {
  return weights_.Get(path).values;
}

const LayerSpec& Model::Layer(const std::string& path) const {
  for (const auto& l : layers_)
    if (l.path == path) return l;
  throw ConfigError("unknown layer '" + path + "'");
}

void Model::CheckShape(const LayerSpec& spec, std::size_t size) const {
  if (size != static_cast<std::size_t>(spec.out_channels) * spec.out_width)
    throw std::logic_error("layer '" + spec.path + "' produced an unexpected shape");
}

TaWeights Model::TimeAlignWeights() const {
  TaWeights w;
  w.in_channels = cfg_.stream_filters;
  w.sim_channels = cfg_.sim_channels;
  auto vec = [&](const std::string& p) {
    auto s = W(p);
    return std::vector<double>(s.begin(), s.end());
  };
  w.ne_weight = vec("ta/ne_proj/weight");
  w.ne_bias = vec("ta/ne_proj/bias");
  w.fe_weight = vec("ta/fe_proj/weight");
  w.fe_bias = vec("ta/fe_proj/bias");
  w.score_kernel = vec("ta/score/weight");
  w.score_bias = W("ta/score/bias")[0];
  w.CheckShapes();
  return w;
}

void Model::CheckInput(const FrameInput& in) const {
  const auto width = static_cast<std::size_t>(cfg_.layout.features_per_channel());
  if (in.ne.size() != width * cfg_.ne_input_channels() ||
      in.fe.size() != width * cfg_.fe_input_channels() ||
      in.error_magnitude.size() != static_cast<std::size_t>(cfg_.num_bins))
    throw ConfigError("frame input does not match the model configuration");
}

std::vector<double> Model::EncodeStream(const std::string& prefix,
                                        std::span<const double> input,
                                        int in_channels) const {
  const auto& c1 = Layer(prefix + "/conv1");
  const auto& p1 = Layer(prefix + "/pool1");
  const auto& c2 = Layer(prefix + "/conv2");
  const auto& p2 = Layer(prefix + "/pool2");
  std::vector<double> a(static_cast<std::size_t>(c1.out_channels) * c1.out_width);
  layers::SeparableConv(input, in_channels, c1.in_width, W(c1.path + "/depthwise"),
                        cfg_.stream_kernels[0], W(c1.path + "/pointwise/weight"),
                        W(c1.path + "/pointwise/bias"), c1.out_channels, a);
  layers::Relu(a);
  std::vector<double> b(static_cast<std::size_t>(p1.out_channels) * p1.out_width);
  layers::MaxPool(a, p1.in_channels, p1.in_width, cfg_.pool_factor, b);
  CheckShape(p1, b.size());
  std::vector<double> c(static_cast<std::size_t>(c2.out_channels) * c2.out_width);
  layers::SeparableConv(b, c2.in_channels, c2.in_width, W(c2.path + "/depthwise"),
                        cfg_.stream_kernels[1], W(c2.path + "/pointwise/weight"),
                        W(c2.path + "/pointwise/bias"), c2.out_channels, c);
  layers::Relu(c);
  std::vector<double> d(static_cast<std::size_t>(p2.out_channels) * p2.out_width);
  layers::MaxPool(c, p2.in_channels, p2.in_width, cfg_.pool_factor, d);
  CheckShape(p2, d.size());
  return d;
}

std::vector<double> Model::JointAndFrequencyGru(std::span<const double> near,
                                                std::span<const double> aligned) const {
  const auto& concat = Layer("joint/concat");
  std::vector<double> x(near.begin(), near.end());
  x.insert(x.end(), aligned.begin(), aligned.end());
  CheckShape(concat, x.size());

  const auto& j1 = Layer("joint/conv1");
  std::vector<double> a(static_cast<std::size_t>(j1.out_channels) * j1.out_width);
  layers::Conv(x, j1.in_channels, j1.in_width, W("joint/conv1/weight"), W("joint/conv1/bias"),
               j1.out_channels, cfg_.joint_kernel, cfg_.joint_stride, a);
  layers::Relu(a);
  const auto& j2 = Layer("joint/conv2");
  std::vector<double> b(static_cast<std::size_t>(j2.out_channels) * j2.out_width);
  layers::Conv(a, j2.in_channels, j2.in_width, W("joint/conv2/weight"), W("joint/conv2/bias"),
               j2.out_channels, cfg_.joint_kernel, cfg_.joint_stride, b);
  layers::Relu(b);

  // Frequency GRU: one step per frequency position, fresh state each frame.
  const auto& fg = Layer("fgru");
  const int steps = fg.in_width;
  std::vector<double> hidden(cfg_.fgru_hidden, 0.0);
  std::vector<double> step_in(fg.in_channels);
  std::vector<double> out(static_cast<std::size_t>(fg.out_channels) * steps);
  for (int w = 0; w < steps; ++w) {
    for (int c = 0; c < fg.in_channels; ++c) step_in[c] = b[static_cast<std::size_t>(c) * steps + w];
    layers::GruStep(step_in, W("fgru/w_ih"), W("fgru/w_hh"), W("fgru/b_ih"), W("fgru/b_hh"),
                    hidden);
    for (int h = 0; h < fg.out_channels; ++h) out[static_cast<std::size_t>(h) * steps + w] = hidden[h];
  }
  CheckShape(fg, out.size());
  return out;
}

void Model::SubbandStep(int group, std::span<const double> fgru_out,
                        std::vector<double>& hidden) const {
  const std::string path = "sgru" + std::to_string(group);
  const auto& spec = Layer(path);
  const int steps = Layer("fgru").out_width;
  const int group_w = spec.in_width;
  // Concatenate the hidden vectors of this group's frequency positions.
  std::vector<double> x;
  x.reserve(static_cast<std::size_t>(spec.in_channels) * group_w);
  for (int w = group * group_w; w < (group + 1) * group_w; ++w)
    for (int h = 0; h < spec.in_channels; ++h) x.push_back(fgru_out[static_cast<std::size_t>(h) * steps + w]);
  layers::GruStep(x, W(path + "/w_ih"), W(path + "/w_hh"), W(path + "/b_ih"),
                  W(path + "/b_hh"), hidden);
  CheckShape(spec, hidden.size());
}

ComplexMask Model::Head(const std::vector<std::vector<double>>& subband_hidden,
                        std::span<const double> error_magnitude) const {
  std::vector<double> fc_in;
  for (const auto& h : subband_hidden) fc_in.insert(fc_in.end(), h.begin(), h.end());
  const auto& fc = Layer("fc");
  std::vector<double> fc_out(fc.out_channels);
  layers::Linear(fc_in, W("fc/weight"), W("fc/bias"), fc_out);
  layers::Relu(fc_out);
  CheckShape(fc, fc_out.size());

  const int nb = cfg_.num_bins;
  std::vector<double> x(fc_out);
  x.insert(x.end(), error_magnitude.begin(), error_magnitude.end());
  const auto& h1 = Layer("head/conv1");
  const auto& h2 = Layer("head/conv2");
  const auto& h3 = Layer("head/conv3");
  std::vector<double> a(static_cast<std::size_t>(h1.out_channels) * nb);
  layers::Conv(x, 2, nb, W("head/conv1/weight"), W("head/conv1/bias"), h1.out_channels,
               cfg_.head_kernel, 1, a);
  layers::Relu(a);
  std::vector<double> b(static_cast<std::size_t>(h2.out_channels) * nb);
  layers::Conv(a, h2.in_channels, nb, W("head/conv2/weight"), W("head/conv2/bias"),
               h2.out_channels, cfg_.head_kernel, 1, b);
  layers::Relu(b);
  std::vector<double> c(static_cast<std::size_t>(3) * nb);
  layers::Conv(b, h3.in_channels, nb, W("head/conv3/weight"), W("head/conv3/bias"), 3, 1, 1, c);
  CheckShape(h3, c.size());

  ComplexMask mask;
  mask.magnitude.resize(nb);
  mask.phase.resize(nb);
  for (int k = 0; k < nb; ++k) {
    mask.magnitude[k] = layers::Sigmoid(c[k]);
    double phase = std::atan2(c[2 * static_cast<std::size_t>(nb) + k], c[static_cast<std::size_t>(nb) + k]);
    if (phase <= -std::numbers::pi) phase = std::numbers::pi;
    mask.phase[k] = phase;
  }
  return mask;
}

Model::StreamState Model::NewStream() const {
  StreamState s;
  s.model_id_ = id_;
  if (cfg_.time_alignment)
    s.ta_.emplace(ta_weights_, cfg_.max_delay, Layer("ne/pool2").out_width);
  s.subband_hidden_.assign(cfg_.subband_groups, std::vector<double>(cfg_.subband_hidden, 0.0));
  return s;
}

ComplexMask Model::ForwardFrame(StreamState& state, const FrameInput& in) const {
  if (state.model_id_ != id_) throw ConfigError("stream state belongs to a different model");
  CheckInput(in);
  const auto near = EncodeStream("ne", in.ne, cfg_.ne_input_channels());
  const auto far = EncodeStream("fe", in.fe, cfg_.fe_input_channels());
  std::vector<double> aligned = far;
  if (cfg_.time_alignment) {
    const auto& ta = Layer("ta");
    aligned.assign(static_cast<std::size_t>(ta.out_channels) * ta.out_width, 0.0);
    std::vector<double> dist(cfg_.max_delay);
    state.ta_->Process(near.data(), far.data(), aligned.data(), dist.data());
  }
  const auto fgru = JointAndFrequencyGru(near, aligned);
  for (int g = 0; g < cfg_.subband_groups; ++g) SubbandStep(g, fgru, state.subband_hidden_[g]);
  ++state.frames_;
  return Head(state.subband_hidden_, in.error_magnitude);
}

namespace {

LatentTensor StackFrames(const std::vector<std::vector<double>>& frames, int channels,
                         int features) {
  LatentTensor t(channels, static_cast<int>(frames.size()), features);
  for (int f = 0; f < t.frames; ++f)
    for (int c = 0; c < channels; ++c)
      for (int p = 0; p < features; ++p)
        t.at(c, f, p) = frames[f][static_cast<std::size_t>(c) * features + p];
  return t;
}

}  // namespace

std::vector<ComplexMask> Model::ForwardBatch(std::span<const FrameInput> frames) const {
  const std::size_t T = frames.size();
  for (const auto& f : frames) CheckInput(f);
  std::vector<std::vector<double>> near(T), far(T), aligned(T);
  for (std::size_t t = 0; t < T; ++t) {
    near[t] = EncodeStream("ne", frames[t].ne, cfg_.ne_input_channels());
    far[t] = EncodeStream("fe", frames[t].fe, cfg_.fe_input_channels());
  }
  if (cfg_.time_alignment && T > 0) {
    const int P = Layer("ne/pool2").out_width;
    const auto res = TaForward(StackFrames(near, cfg_.stream_filters, P),
                               StackFrames(far, cfg_.stream_filters, P), ta_weights_,
                               cfg_.max_delay);
    for (std::size_t t = 0; t < T; ++t) {
      aligned[t].resize(static_cast<std::size_t>(cfg_.sim_channels) * P);
      for (int h = 0; h < cfg_.sim_channels; ++h)
        for (int p = 0; p < P; ++p)
          aligned[t][static_cast<std::size_t>(h) * P + p] = res.aligned.at(h, static_cast<int>(t), p);
    }
  } else {
    aligned = far;
  }
  std::vector<std::vector<double>> fgru(T);
  for (std::size_t t = 0; t < T; ++t) fgru[t] = JointAndFrequencyGru(near[t], aligned[t]);

  std::vector<std::vector<std::vector<double>>> hidden_seq(
      T, std::vector<std::vector<double>>(cfg_.subband_groups));
  for (int g = 0; g < cfg_.subband_groups; ++g) {
    std::vector<double> h(cfg_.subband_hidden, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      SubbandStep(g, fgru[t], h);
      hidden_seq[t][g] = h;
    }
  }
  std::vector<ComplexMask> masks(T);
  for (std::size_t t = 0; t < T; ++t) masks[t] = Head(hidden_seq[t], frames[t].error_magnitude);
  return masks;
}

DelayDistribution Model::ProbeDelays(std::span<const FrameInput> frames) const {
  if (!cfg_.time_alignment) throw ConfigError("model has no time-alignment block");
  std::vector<std::vector<double>> near(frames.size()), far(frames.size());
  for (std::size_t t = 0; t < frames.size(); ++t) {
    CheckInput(frames[t]);
    near[t] = EncodeStream("ne", frames[t].ne, cfg_.ne_input_channels());
    far[t] = EncodeStream("fe", frames[t].fe, cfg_.fe_input_channels());
  }
  const int P = Layer("ne/pool2").out_width;
  return TaForward(StackFrames(near, cfg_.stream_filters, P),
                   StackFrames(far, cfg_.stream_filters, P), ta_weights_, cfg_.max_delay)
      .dist;
}

}  // namespace aenr
