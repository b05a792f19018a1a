#include "aenr/wav_io.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "aenr/errors.h"

namespace aenr {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t U16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
std::uint32_t U32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void Put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(v & 0xFF);
  out.push_back(v >> 8);
}
void Put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xFF);
}
void PutTag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

}  // namespace

WavData ParseWav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw FormatError("not a RIFF/WAVE file");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = U32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) throw FormatError("truncated WAV chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw FormatError("WAV fmt chunk too short");
      const std::uint8_t* f = bytes.data() + body;
      format = U16(f);
      channels = U16(f + 2);
      rate = U32(f + 4);
      bits = U16(f + 14);
      if (format == kFormatExtensible) {
        if (size < 26) throw FormatError("WAV extensible fmt chunk too short");
        format = U16(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw FormatError("WAV data chunk precedes fmt chunk");
      if (channels != 1) throw ConfigError("only mono WAV is supported (got " + std::to_string(channels) + " channels)");
      if (rate != 16000) throw ConfigError("unsupported sample rate " + std::to_string(rate) + " Hz (need 16000)");
      WavData out;
      out.sample_rate = static_cast<int>(rate);
      const std::uint8_t* d = bytes.data() + body;
      if (format == kFormatPcm && bits == 16) {
        out.format = WavFormat::kPcm16;
        out.samples.resize(size / 2);
        for (std::size_t i = 0; i < out.samples.size(); ++i)
          out.samples[i] = static_cast<std::int16_t>(U16(d + 2 * i)) / 32768.0;
      } else if (format == kFormatFloat && bits == 32) {
        out.format = WavFormat::kFloat32;
        out.samples.resize(size / 4);
        for (std::size_t i = 0; i < out.samples.size(); ++i)
          out.samples[i] = std::bit_cast<float>(U32(d + 4 * i));
      } else {
        throw ConfigError("unsupported WAV sample format (need 16-bit PCM or 32-bit float)");
      }
      return out;
    }
    pos = body + size + (size & 1);
  }
  throw FormatError("WAV file has no data chunk");
}

WavData ReadWav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return ParseWav(bytes);
}

std::vector<std::uint8_t> EncodeWav(std::span<const double> samples, WavFormat format,
                                    int sample_rate) {
  const std::uint16_t bits = format == WavFormat::kPcm16 ? 16 : 32;
  const std::uint32_t data_size = static_cast<std::uint32_t>(samples.size() * (bits / 8));
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  PutTag(out, "RIFF");
  Put32(out, 36 + data_size);
  PutTag(out, "WAVE");
  PutTag(out, "fmt ");
  Put32(out, 16);
  Put16(out, format == WavFormat::kPcm16 ? kFormatPcm : kFormatFloat);
  Put16(out, 1);
  Put32(out, static_cast<std::uint32_t>(sample_rate));
  Put32(out, static_cast<std::uint32_t>(sample_rate) * (bits / 8));
  Put16(out, bits / 8);
  Put16(out, bits);
  PutTag(out, "data");
  Put32(out, data_size);
  for (double v : samples) {
    if (format == WavFormat::kPcm16) {
      const double scaled = std::nearbyint(std::clamp(v, -1.0, 1.0) * 32768.0);
      const auto q = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
      Put16(out, static_cast<std::uint16_t>(q));
    } else {
      Put32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  return out;
}

void WriteWav(const std::string& path, std::span<const double> samples, WavFormat format,
              int sample_rate) {
  const auto bytes = EncodeWav(samples, format, sample_rate);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing '" + path + "'");
}

}  // namespace aenr
