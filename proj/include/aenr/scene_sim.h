#ifndef AENR_SCENE_SIM_H_
#define AENR_SCENE_SIM_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace aenr {

enum class Scenario { kNearEndSingleTalk, kFarEndSingleTalk, kDoubleTalk };

std::string ToString(Scenario s);
Scenario ParseScenario(const std::string& name);  // "nst", "fst", "dt"

struct Nonlinearity {
  enum class Kind { kNone, kHardClip, kSigmoid };
  Kind kind = Kind::kNone;
  // Clip threshold, or sigmoid gain.
  double param = 1.0;

  double Apply(double x) const;
  std::string ToString() const;
  // "none", "clip:<threshold>", "sigmoid:<gain>"
  static Nonlinearity Parse(const std::string& text);
};

struct SceneSpec {
  Scenario scenario = Scenario::kDoubleTalk;
  double ser_db = 0.0;
  double snr_db = 20.0;
  double delay_ms = 0.0;
  // Used when `rir` is empty: synthetic exponential-decay response.
  double rir_t60_ms = 100.0;
  int rir_length = 2048;
  std::vector<double> rir;
  Nonlinearity nonlinearity;
  std::optional<double> bandlimit_hz;
  std::uint64_t seed = 0;

  // Throws ConfigError naming the out-of-range field.
  void Validate() const;
  // "key = value" lines describing every field.
  std::string Describe() const;
};

// x = s + e + v, all of equal length.
struct SceneOutput {
  std::vector<double> mic;
  std::vector<double> far_end;
  std::vector<double> near;
  std::vector<double> echo;
  std::vector<double> noise;
};

inline constexpr int kSceneSampleRate = 16000;
inline constexpr double kActivityThresholdDbfs = -40.0;
inline constexpr int kActivityFrame = 320;  // 20 ms

// Echo path: e = bandlimit(rir * nonlinearity(delay(y))), scaled to ser_db
// against s over frames where s is active (DT). Noise is scaled to snr_db
// against s (NST, DT) or against e (FST). NST has e = 0 and FST has s = 0.
SceneOutput GenerateScene(const SceneSpec& spec, std::span<const double> near_source,
                          std::span<const double> far_source);

// Unit direct path at tap 0 followed by an exponentially decaying Gaussian
// tail reaching -60 dB after t60_ms.
std::vector<double> SyntheticRir(double t60_ms, int length, std::uint64_t seed);

// Speech-like stand-in: bursts of formant-filtered noise syllables separated
// by pauses, deterministic per seed. duration_s >= 1.
std::vector<double> SyntheticSpeech(std::uint64_t seed, double duration_s);

// Per-sample flag: sample lies in a 20 ms frame whose RMS exceeds -40 dBFS.
std::vector<bool> ActivityMask(std::span<const double> signal);
// Mean square over flagged samples (0 if none).
double MaskedPower(std::span<const double> signal, const std::vector<bool>& mask);

// Zeroes STFT bins above cutoff_hz and resynthesizes (same length).
std::vector<double> Bandlimit(std::span<const double> signal, double cutoff_hz);

// Realized 10*log10(P_s / P_e) and SNR using the same measurement windows
// as GenerateScene.
double MeasuredSerDb(const SceneOutput& scene);
double MeasuredSnrDb(const SceneOutput& scene, Scenario scenario);

}  // namespace aenr

#endif  // AENR_SCENE_SIM_H_
