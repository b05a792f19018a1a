#include "aenr/scene_sim.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "aenr/errors.h"
#include "aenr/fft.h"
#include "aenr/stft.h"

namespace aenr {

namespace {

// Portable draws from mt19937_64 (std distributions differ across libraries).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double Uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  double Normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = Uniform();
    while (u1 <= 0.0) u1 = Uniform();
    const double u2 = Uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t Mix(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double Db(double ratio) { return 10.0 * std::log10(ratio); }

}  // namespace

std::string ToString(Scenario s) {
  switch (s) {
    case Scenario::kNearEndSingleTalk: return "nst";
    case Scenario::kFarEndSingleTalk: return "fst";
    case Scenario::kDoubleTalk: return "dt";
  }
  return "dt";
}

Scenario ParseScenario(const std::string& name) {
  if (name == "nst" || name == "NST") return Scenario::kNearEndSingleTalk;
  if (name == "fst" || name == "FST") return Scenario::kFarEndSingleTalk;
  if (name == "dt" || name == "DT") return Scenario::kDoubleTalk;
  throw ConfigError("scenario must be one of nst, fst, dt (got '" + name + "')");
}

double Nonlinearity::Apply(double x) const {
  switch (kind) {
    case Kind::kNone: return x;
    case Kind::kHardClip: return std::clamp(x, -param, param);
    // Odd sigmoid 2 / (1 + exp(-g x)) - 1, unit slope scaled by g / 2.
    case Kind::kSigmoid: return 2.0 / (1.0 + std::exp(-param * x)) - 1.0;
  }
  return x;
}

std::string Nonlinearity::ToString() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::kNone: return "none";
    case Kind::kHardClip: os << "clip:" << param; break;
    case Kind::kSigmoid: os << "sigmoid:" << param; break;
  }
  return os.str();
}

Nonlinearity Nonlinearity::Parse(const std::string& text) {
  if (text == "none") return {};
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  Nonlinearity nl;
  if (kind == "clip") {
    nl.kind = Kind::kHardClip;
  } else if (kind == "sigmoid") {
    nl.kind = Kind::kSigmoid;
  } else {
    throw ConfigError("nonlinearity must be none, clip:<t> or sigmoid:<g>");
  }
  if (colon == std::string::npos) throw ConfigError("nonlinearity needs a parameter");
  try {
    nl.param = std::stod(text.substr(colon + 1));
  } catch (const std::exception&) {
    throw ConfigError("nonlinearity parameter is not a number");
  }
  if (!(nl.param > 0.0)) throw ConfigError("nonlinearity parameter must be > 0");
  return nl;
}

void SceneSpec::Validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("scene." + field + ": " + why);
  };
  if (!(ser_db >= -20.0 && ser_db <= 20.0)) fail("ser_db", "must be in [-20, 20] dB");
  if (!(snr_db >= -5.0 && snr_db <= 30.0)) fail("snr_db", "must be in [-5, 30] dB");
  if (!(delay_ms >= 0.0 && delay_ms <= 1500.0)) fail("delay_ms", "must be in [0, 1500] ms");
  if (rir.empty()) {
    if (!(rir_t60_ms >= 50.0 && rir_t60_ms <= 300.0)) fail("rir_t60_ms", "must be in [50, 300] ms");
    if (rir_length < 1 || rir_length > 4096) fail("rir_length", "must be in [1, 4096]");
  } else if (rir.size() > 4096) {
    fail("rir", "at most 4096 taps");
  }
  if (bandlimit_hz && !(*bandlimit_hz > 0.0 && *bandlimit_hz < kSceneSampleRate / 2.0))
    fail("bandlimit_hz", "must be in (0, 8000) Hz");
}

std::string SceneSpec::Describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "scenario = " << ToString(scenario) << "\n"
     << "ser_db = " << ser_db << "\n"
     << "snr_db = " << snr_db << "\n"
     << "delay_ms = " << delay_ms << "\n"
     << "rir = " << (rir.empty() ? "synthetic" : "custom") << "\n"
     << "rir_t60_ms = " << rir_t60_ms << "\n"
     << "rir_length = " << (rir.empty() ? rir_length : static_cast<int>(rir.size())) << "\n"
     << "nonlinearity = " << nonlinearity.ToString() << "\n"
     << "bandlimit_hz = " << (bandlimit_hz ? std::to_string(*bandlimit_hz) : "none") << "\n"
     << "seed = " << seed << "\n"
     << "sample_rate = " << kSceneSampleRate << "\n";
  return os.str();
}

std::vector<double> SyntheticRir(double t60_ms, int length, std::uint64_t seed) {
  if (length < 1) throw ConfigError("rir length must be >= 1");
  if (!(t60_ms > 0.0)) throw ConfigError("rir t60 must be > 0");
  Rng rng(Mix(seed, 11));
  std::vector<double> h(length, 0.0);
  h[0] = 1.0;
  const double decay = 3.0 * std::log(10.0) / (t60_ms * 1e-3 * kSceneSampleRate);
  for (int n = 1; n < length; ++n) h[n] = 0.1 * rng.Normal() * std::exp(-decay * n);
  return h;
}

std::vector<double> SyntheticSpeech(std::uint64_t seed, double duration_s) {
  if (!(duration_s >= 1.0)) throw ConfigError("synthetic speech needs duration >= 1 s");
  const auto fs = static_cast<double>(kSceneSampleRate);
  const auto n = static_cast<std::size_t>(std::llround(duration_s * fs));
  Rng rng(Mix(seed, 1));
  std::vector<double> out(n, 0.0);

  std::size_t pos = static_cast<std::size_t>(rng.Uniform(0.05, 0.2) * fs);
  while (pos < n) {
    const std::size_t spurt_end =
        std::min(n, pos + static_cast<std::size_t>(rng.Uniform(0.4, 1.5) * fs));
    while (pos < spurt_end) {
      const auto len = std::min(spurt_end - pos,
                                static_cast<std::size_t>(rng.Uniform(0.12, 0.25) * fs));
      const double formants[3] = {rng.Uniform(300, 900), rng.Uniform(900, 2500),
                                  rng.Uniform(2500, 4000)};
      double gains[3];
      for (double& g : gains) g = rng.Uniform(0.3, 1.0);
      const double level = rng.Uniform(0.5, 1.0);
      double state[3][2] = {};
      constexpr double r = 0.97;
      for (std::size_t i = 0; i < len; ++i) {
        const double x = rng.Normal();
        double y = 0.0;
        for (int f = 0; f < 3; ++f) {
          const double c = 2.0 * r * std::cos(2.0 * std::numbers::pi * formants[f] / fs);
          const double v = (1.0 - r) * x + c * state[f][0] - r * r * state[f][1];
          state[f][1] = state[f][0];
          state[f][0] = v;
          y += gains[f] * v;
        }
        const double env = std::sin(std::numbers::pi * static_cast<double>(i) / len);
        out[pos + i] = level * env * y;
      }
      pos += len;
    }
    pos += static_cast<std::size_t>(rng.Uniform(0.25, 0.6) * fs);
  }
  double energy = 0.0;
  for (double v : out) energy += v * v;
  const double rms = std::sqrt(energy / static_cast<double>(n));
  const double target = rng.Uniform(0.05, 0.12);
  const double scale = rms > 0.0 ? target / rms : 0.0;
  for (double& v : out) v = v * scale + 1e-5 * rng.Normal();
  return out;
}

std::vector<bool> ActivityMask(std::span<const double> signal) {
  const double threshold = std::pow(10.0, kActivityThresholdDbfs / 20.0);
  std::vector<bool> mask(signal.size(), false);
  for (std::size_t start = 0; start < signal.size(); start += kActivityFrame) {
    const std::size_t end = std::min(signal.size(), start + kActivityFrame);
    double acc = 0.0;
    for (std::size_t i = start; i < end; ++i) acc += signal[i] * signal[i];
    const double rms = std::sqrt(acc / static_cast<double>(end - start));
    if (rms > threshold) std::fill(mask.begin() + start, mask.begin() + end, true);
  }
  return mask;
}

double MaskedPower(std::span<const double> signal, const std::vector<bool>& mask) {
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < signal.size(); ++i) {
    if (!mask[i]) continue;
    acc += signal[i] * signal[i];
    ++count;
  }
  return count ? acc / static_cast<double>(count) : 0.0;
}

std::vector<double> Bandlimit(std::span<const double> signal, double cutoff_hz) {
  StftConfig cfg;
  const std::size_t lead = cfg.window_len - cfg.hop;
  std::vector<double> padded(lead + signal.size() + cfg.window_len, 0.0);
  std::copy(signal.begin(), signal.end(), padded.begin() + lead);
  auto frames = Analyze(padded, cfg);
  const double bin_hz = static_cast<double>(cfg.sample_rate) / cfg.fft_size;
  for (auto& f : frames)
    for (std::size_t k = 0; k < f.bins.size(); ++k)
      if (static_cast<double>(k) * bin_hz > cutoff_hz) f.bins[k] = Complex(0.0, 0.0);
  const auto out = Synthesize(frames, cfg);
  std::vector<double> result(signal.size(), 0.0);
  for (std::size_t i = 0; i < signal.size() && lead + i < out.size(); ++i)
    result[i] = out[lead + i];
  return result;
}

SceneOutput GenerateScene(const SceneSpec& spec, std::span<const double> near_source,
                          std::span<const double> far_source) {
  spec.Validate();
  const std::size_t min_len = 3 * kSceneSampleRate;
  if (near_source.size() < min_len || far_source.size() < min_len)
    throw ConfigError("scene sources must be at least 3 s at 16 kHz");
  const std::size_t n = std::min(near_source.size(), far_source.size());
  const bool has_near = spec.scenario != Scenario::kFarEndSingleTalk;
  const bool has_echo = spec.scenario != Scenario::kNearEndSingleTalk;

  SceneOutput out;
  out.far_end.assign(far_source.begin(), far_source.begin() + n);
  out.near.assign(n, 0.0);
  if (has_near) std::copy_n(near_source.begin(), n, out.near.begin());

  out.echo.assign(n, 0.0);
  if (has_echo) {
    const auto delay = static_cast<std::size_t>(std::llround(spec.delay_ms * kSceneSampleRate / 1000.0));
    std::vector<double> driven(n, 0.0);
    for (std::size_t i = delay; i < n; ++i) driven[i] = spec.nonlinearity.Apply(out.far_end[i - delay]);
    const auto rir = spec.rir.empty() ? SyntheticRir(spec.rir_t60_ms, spec.rir_length, spec.seed)
                                      : spec.rir;
    auto conv = LinearConvolve(driven, rir);
    std::copy_n(conv.begin(), n, out.echo.begin());
  }

  Rng rng(Mix(spec.seed, 2));
  out.noise.resize(n);
  for (double& v : out.noise) v = rng.Normal();

  if (spec.bandlimit_hz) {
    out.near = Bandlimit(out.near, *spec.bandlimit_hz);
    out.echo = Bandlimit(out.echo, *spec.bandlimit_hz);
    out.noise = Bandlimit(out.noise, *spec.bandlimit_hz);
  }

  const auto& reference = has_near ? out.near : out.echo;
  const auto active = ActivityMask(reference);
  const double p_ref = MaskedPower(reference, active);
  if (p_ref == 0.0) throw ConfigError("scene reference signal has no active frames");

  if (has_near && has_echo) {
    const double p_echo = MaskedPower(out.echo, active);
    if (p_echo == 0.0) throw ConfigError("echo is silent during near-end activity");
    const double gain = std::sqrt(p_ref / (p_echo * std::pow(10.0, spec.ser_db / 10.0)));
    for (double& v : out.echo) v *= gain;
  }
  const double p_noise = MaskedPower(out.noise, active);
  const double noise_gain = std::sqrt(p_ref / (p_noise * std::pow(10.0, spec.snr_db / 10.0)));
  for (double& v : out.noise) v *= noise_gain;

  // On a 2^-40 grid, sums and differences of three components below 2^11 in
  // magnitude are exact, so mic - near - echo - noise is exactly zero.
  for (auto* part : {&out.near, &out.echo, &out.noise})
    for (double& v : *part) v = std::ldexp(std::nearbyint(std::ldexp(v, 40)), -40);
  out.mic.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.mic[i] = out.near[i] + out.echo[i] + out.noise[i];
  return out;
}

double MeasuredSerDb(const SceneOutput& scene) {
  const auto active = ActivityMask(scene.near);
  return Db(MaskedPower(scene.near, active) / MaskedPower(scene.echo, active));
}

double MeasuredSnrDb(const SceneOutput& scene, Scenario scenario) {
  const auto& reference = scenario == Scenario::kFarEndSingleTalk ? scene.echo : scene.near;
  const auto active = ActivityMask(reference);
  return Db(MaskedPower(reference, active) / MaskedPower(scene.noise, active));
}

}  // namespace aenr
