#include "aenr/wav_io.h"

#include <cstdio>
#include <filesystem>
#include <random>

#include "aenr/errors.h"
#include "gtest/gtest.h"

namespace aenr {
namespace {

std::string TempPath(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<double> FloatValues(std::size_t n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(n);
  for (double& v : x) v = static_cast<float>(u(rng));
  return x;
}

TEST(WavIo, FloatRoundTripIsBitExact) {
  const auto x = FloatValues(1000);
  const auto path = TempPath("aenr_float.wav");
  WriteWav(path, x, WavFormat::kFloat32);
  const auto back = ReadWav(path);
  EXPECT_EQ(back.format, WavFormat::kFloat32);
  EXPECT_EQ(back.sample_rate, 16000);
  EXPECT_EQ(back.samples, x);
  EXPECT_EQ(EncodeWav(back.samples, WavFormat::kFloat32), EncodeWav(x, WavFormat::kFloat32));
  std::remove(path.c_str());
}

TEST(WavIo, Pcm16ScalingConvention) {
  const std::vector<double> x = {0.0, 0.5, -0.5, 1.0, -1.0, 2.0, 1.0 / 32768};
  const auto data = ParseWav(EncodeWav(x, WavFormat::kPcm16));
  EXPECT_EQ(data.format, WavFormat::kPcm16);
  const std::vector<double> expected = {0.0, 0.5, -0.5, 32767.0 / 32768, -1.0, 32767.0 / 32768,
                                        1.0 / 32768};
  EXPECT_EQ(data.samples, expected);
  for (double v : data.samples) {
    EXPECT_GE(v, -1.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(WavIo, HeaderLayout) {
  const auto bytes = EncodeWav(std::vector<double>(10, 0.0), WavFormat::kPcm16);
  ASSERT_EQ(bytes.size(), 44u + 20u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "RIFF");
  EXPECT_EQ(std::string(bytes.begin() + 8, bytes.begin() + 16), "WAVEfmt ");
  EXPECT_EQ(bytes[24] | (bytes[25] << 8), 16000);
}

TEST(WavIo, RejectsUnsupportedRate) {
  const auto bytes = EncodeWav(std::vector<double>(10, 0.0), WavFormat::kPcm16, 44100);
  try {
    ParseWav(bytes);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("44100"), std::string::npos);
  }
}

TEST(WavIo, RejectsStereoAndGarbage) {
  auto bytes = EncodeWav(std::vector<double>(10, 0.0), WavFormat::kPcm16);
  bytes[22] = 2;
  EXPECT_THROW(ParseWav(bytes), ConfigError);
  const std::vector<std::uint8_t> junk = {'n', 'o', 'p', 'e'};
  EXPECT_THROW(ParseWav(junk), FormatError);
  auto truncated = EncodeWav(std::vector<double>(10, 0.0), WavFormat::kPcm16);
  truncated.resize(50);
  EXPECT_THROW(ParseWav(truncated), FormatError);
  EXPECT_THROW(ReadWav("/nonexistent/file.wav"), FormatError);
}

TEST(WavIo, SkipsUnknownChunks) {
  auto bytes = EncodeWav(std::vector<double>{0.25, -0.25}, WavFormat::kFloat32);
  // Insert a LIST chunk with an odd size (padded) between fmt and data.
  const std::vector<std::uint8_t> list = {'L', 'I', 'S', 'T', 3, 0, 0, 0, 'a', 'b', 'c', 0};
  bytes.insert(bytes.begin() + 36, list.begin(), list.end());
  EXPECT_EQ(ParseWav(bytes).samples, (std::vector<double>{0.25, -0.25}));
}

TEST(WavIo, EmptyDataChunk) {
  EXPECT_TRUE(ParseWav(EncodeWav(std::vector<double>{}, WavFormat::kFloat32)).samples.empty());
}

}  // namespace
}  // namespace aenr
