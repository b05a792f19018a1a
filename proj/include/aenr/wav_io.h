#ifndef AENR_WAV_IO_H_
#define AENR_WAV_IO_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace aenr {

enum class WavFormat { kPcm16, kFloat32 };

struct WavData {
  int sample_rate = 16000;
  WavFormat format = WavFormat::kFloat32;
  std::vector<double> samples;
};

// Mono 16 kHz only. PCM16 is scaled by 1/32768 into [-1, 1). Throws
// FormatError on malformed files and ConfigError on unsupported rate,
// channel count or sample format.
WavData ReadWav(const std::string& path);
WavData ParseWav(std::span<const std::uint8_t> bytes);

// PCM16 output is rounded and saturated. Float32 output round-trips values
// read from a float32 file exactly.
std::vector<std::uint8_t> EncodeWav(std::span<const double> samples, WavFormat format,
                                    int sample_rate = 16000);
void WriteWav(const std::string& path, std::span<const double> samples,
              WavFormat format = WavFormat::kFloat32, int sample_rate = 16000);

}  // namespace aenr

#endif  // AENR_WAV_IO_H_
