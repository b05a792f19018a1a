#include "aenr/pipeline_config.h"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "aenr/errors.h"

namespace aenr {

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int ToInt(const std::string& v) {
  std::size_t used = 0;
  const long long x = std::stoll(v, &used);
  if (used != v.size() || x < INT32_MIN || x > INT32_MAX) throw std::invalid_argument(v);
  return static_cast<int>(x);
}

double ToDouble(const std::string& v) {
  std::size_t used = 0;
  const double x = std::stod(v, &used);
  if (used != v.size()) throw std::invalid_argument(v);
  return x;
}

bool ToBool(const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw std::invalid_argument(v);
}

struct LayoutFields {
  ReorientMode mode = ReorientMode::kSampling;
  int subband_bins = 2;
  double overlap = 0.0;
  int sampling_factor = 5;
};

using Setter = std::function<void(PipelineConfig&, LayoutFields&, const std::string&)>;

const std::map<std::string, Setter>& Setters() {
  static const std::map<std::string, Setter> setters = {
      {"stft.fft_size", [](auto& c, auto&, const auto& v) { c.stft.fft_size = ToInt(v); }},
      {"stft.window_len", [](auto& c, auto&, const auto& v) { c.stft.window_len = ToInt(v); }},
      {"stft.hop", [](auto& c, auto&, const auto& v) { c.stft.hop = ToInt(v); }},
      {"stft.sample_rate", [](auto& c, auto&, const auto& v) { c.stft.sample_rate = ToInt(v); }},
      {"kalman.num_partitions", [](auto& c, auto&, const auto& v) { c.kalman.num_partitions = ToInt(v); }},
      {"kalman.transition_factor", [](auto& c, auto&, const auto& v) { c.kalman.transition_factor = ToDouble(v); }},
      {"kalman.noise_smoothing", [](auto& c, auto&, const auto& v) { c.kalman.noise_smoothing = ToDouble(v); }},
      {"kalman.initial_covariance", [](auto& c, auto&, const auto& v) { c.kalman.initial_covariance = ToDouble(v); }},
      {"kalman.block_size", [](auto& c, auto&, const auto& v) { c.kalman.block_size = ToInt(v); }},
      {"layout.mode", [](auto&, auto& l, const auto& v) { l.mode = ParseReorientMode(v); }},
      {"layout.subband_bins", [](auto&, auto& l, const auto& v) { l.subband_bins = ToInt(v); }},
      {"layout.overlap", [](auto&, auto& l, const auto& v) { l.overlap = ToDouble(v); }},
      {"layout.sampling_factor", [](auto&, auto& l, const auto& v) { l.sampling_factor = ToInt(v); }},
      {"model.routing", [](auto& c, auto&, const auto& v) { c.model.routing = ParseInputRouting(v); }},
      {"model.num_bins", [](auto& c, auto&, const auto& v) { c.model.num_bins = ToInt(v); }},
      {"model.stream_filters", [](auto& c, auto&, const auto& v) { c.model.stream_filters = ToInt(v); }},
      {"model.stream_kernel1", [](auto& c, auto&, const auto& v) { c.model.stream_kernels[0] = ToInt(v); }},
      {"model.stream_kernel2", [](auto& c, auto&, const auto& v) { c.model.stream_kernels[1] = ToInt(v); }},
      {"model.pool_factor", [](auto& c, auto&, const auto& v) { c.model.pool_factor = ToInt(v); }},
      {"model.time_alignment", [](auto& c, auto&, const auto& v) { c.model.time_alignment = ToBool(v); }},
      {"model.sim_channels", [](auto& c, auto&, const auto& v) { c.model.sim_channels = ToInt(v); }},
      {"model.max_delay", [](auto& c, auto&, const auto& v) { c.model.max_delay = ToInt(v); }},
      {"model.joint_filters1", [](auto& c, auto&, const auto& v) { c.model.joint_filters[0] = ToInt(v); }},
      {"model.joint_filters2", [](auto& c, auto&, const auto& v) { c.model.joint_filters[1] = ToInt(v); }},
      {"model.joint_kernel", [](auto& c, auto&, const auto& v) { c.model.joint_kernel = ToInt(v); }},
      {"model.joint_stride", [](auto& c, auto&, const auto& v) { c.model.joint_stride = ToInt(v); }},
      {"model.fgru_hidden", [](auto& c, auto&, const auto& v) { c.model.fgru_hidden = ToInt(v); }},
      {"model.subband_groups", [](auto& c, auto&, const auto& v) { c.model.subband_groups = ToInt(v); }},
      {"model.subband_hidden", [](auto& c, auto&, const auto& v) { c.model.subband_hidden = ToInt(v); }},
      {"model.head_filters", [](auto& c, auto&, const auto& v) { c.model.head_filters = ToInt(v); }},
      {"model.head_kernel", [](auto& c, auto&, const auto& v) { c.model.head_kernel = ToInt(v); }},
      {"compression_alpha", [](auto& c, auto&, const auto& v) { c.compression_alpha = ToDouble(v); }},
      {"weights_path", [](auto& c, auto&, const auto& v) {
         c.weights_path = v.empty() ? std::nullopt : std::optional<std::string>(v);
       }},
      {"seed", [](auto& c, auto&, const auto& v) {
         std::size_t used = 0;
         c.seed = std::stoull(v, &used);
         if (used != v.size()) throw std::invalid_argument(v);
       }},
  };
  return setters;
}

}  // namespace

void PipelineConfig::Validate() const {
  stft.Validate();
  kalman.Validate();
  if (kalman.block_size != stft.hop)
    throw ConfigError("kalman.block_size (" + std::to_string(kalman.block_size) +
                      ") must equal stft.hop (" + std::to_string(stft.hop) + ")");
  if (kalman.fft_size() != stft.fft_size)
    throw ConfigError("kalman.block_size: FFT size 2*block_size must equal stft.fft_size");
  if (model.num_bins != stft.num_bins())
    throw ConfigError("model.num_bins (" + std::to_string(model.num_bins) +
                      ") must equal stft K (" + std::to_string(stft.num_bins()) + ")");
  if (model.layout.num_bins != stft.num_bins())
    throw ConfigError("layout.num_bins must equal stft K (" + std::to_string(stft.num_bins()) + ")");
  if (model.layout.padded_len < stft.num_bins())
    throw ConfigError("layout.padded_len (" + std::to_string(model.layout.padded_len) +
                      ") is shorter than K (" + std::to_string(stft.num_bins()) + ")");
  if (!(compression_alpha > 0.0 && compression_alpha <= 1.0))
    throw ConfigError("compression_alpha must be in (0, 1]");
  model.Validate();
}

std::string PipelineConfig::ToText() const {
  std::ostringstream os;
  os.precision(17);
  const auto& l = model.layout;
  os << "stft.fft_size = " << stft.fft_size << "\n"
     << "stft.window_len = " << stft.window_len << "\n"
     << "stft.hop = " << stft.hop << "\n"
     << "stft.sample_rate = " << stft.sample_rate << "\n"
     << "kalman.num_partitions = " << kalman.num_partitions << "\n"
     << "kalman.transition_factor = " << kalman.transition_factor << "\n"
     << "kalman.noise_smoothing = " << kalman.noise_smoothing << "\n"
     << "kalman.initial_covariance = " << kalman.initial_covariance << "\n"
     << "kalman.block_size = " << kalman.block_size << "\n"
     << "layout.mode = " << ToString(l.mode) << "\n"
     << "layout.subband_bins = " << l.subband_bins << "\n"
     << "layout.overlap = " << l.overlap << "\n"
     << "layout.sampling_factor = " << l.sampling_factor << "\n"
     << "model.routing = " << ToString(model.routing) << "\n"
     << "model.num_bins = " << model.num_bins << "\n"
     << "model.stream_filters = " << model.stream_filters << "\n"
     << "model.stream_kernel1 = " << model.stream_kernels[0] << "\n"
     << "model.stream_kernel2 = " << model.stream_kernels[1] << "\n"
     << "model.pool_factor = " << model.pool_factor << "\n"
     << "model.time_alignment = " << (model.time_alignment ? "true" : "false") << "\n"
     << "model.sim_channels = " << model.sim_channels << "\n"
     << "model.max_delay = " << model.max_delay << "\n"
     << "model.joint_filters1 = " << model.joint_filters[0] << "\n"
     << "model.joint_filters2 = " << model.joint_filters[1] << "\n"
     << "model.joint_kernel = " << model.joint_kernel << "\n"
     << "model.joint_stride = " << model.joint_stride << "\n"
     << "model.fgru_hidden = " << model.fgru_hidden << "\n"
     << "model.subband_groups = " << model.subband_groups << "\n"
     << "model.subband_hidden = " << model.subband_hidden << "\n"
     << "model.head_filters = " << model.head_filters << "\n"
     << "model.head_kernel = " << model.head_kernel << "\n"
     << "compression_alpha = " << compression_alpha << "\n"
     << "weights_path = " << weights_path.value_or("") << "\n"
     << "seed = " << seed << "\n";
  return os.str();
}

PipelineConfig ParsePipelineConfig(const std::string& text) {
  PipelineConfig cfg;
  LayoutFields layout;
  layout.mode = cfg.model.layout.mode;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(line_no);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    const auto it = Setters().find(key);
    if (it == Setters().end()) throw ConfigError(where + ": unknown key '" + key + "'");
    try {
      it->second(cfg, layout, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + key + ": " + e.what());
    } catch (const std::exception&) {
      throw ConfigError(where + ": " + key + ": invalid value '" + value + "'");
    }
  }
  try {
    cfg.model.layout = ReorientLayout::Make(cfg.stft.num_bins(), layout.subband_bins,
                                            layout.overlap, layout.sampling_factor, layout.mode);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("layout: ") + e.what());
  }
  cfg.Validate();
  return cfg;
}

PipelineConfig LoadPipelineConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParsePipelineConfig(ss.str());
}

}  // namespace aenr
