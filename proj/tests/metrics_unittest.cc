#include "aenr/metrics.h"

#include <cmath>
#include <random>

#include "aenr/errors.h"
#include "gtest/gtest.h"

namespace aenr {
namespace {

std::vector<double> Noise(std::size_t n, std::uint64_t seed, double scale = 0.1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> x(n);
  for (double& v : x) v = g(rng);
  return x;
}

TEST(SiSdr, CappedForExactAndScaledEstimates) {
  const auto s = Noise(8000, 1);
  EXPECT_EQ(SiSdr(s, s), 100.0);
  std::vector<double> twice(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) twice[i] = 2.0 * s[i];
  EXPECT_EQ(SiSdr(s, twice), 100.0);
  EXPECT_TRUE(SiSdrIsCapped(SiSdr(s, twice)));
}

TEST(SiSdr, OrthogonalNoiseAtMinusTwentyDb) {
  // s and n orthogonal by construction: alternating-sign pair patterns.
  const std::size_t n = 8000;
  std::vector<double> s(n), e(n);
  double ps = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = (i / 2) % 2 ? 1.0 : -1.0;
    ps += s[i] * s[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double noise = (i % 2 ? 1.0 : -1.0) * ((i / 2) % 2 ? 1.0 : -1.0) * 0.1;
    e[i] = s[i] + noise;
  }
  EXPECT_NEAR(SiSdr(s, e), 20.0, 1e-9);
}

TEST(SiSdr, ScaleInvarianceAndMonotonicity) {
  const auto s = Noise(8000, 2), n = Noise(8000, 3);
  std::vector<double> est(s.size()), scaled(s.size());
  double prev = 1e9;
  for (double g : {0.01, 0.03, 0.1, 0.3, 1.0}) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      est[i] = s[i] + g * n[i];
      scaled[i] = 3.7 * est[i];
    }
    const double v = SiSdr(s, est);
    EXPECT_NEAR(SiSdr(s, scaled), v, 1e-9);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(SiSdr, Errors) {
  const std::vector<double> zero(100, 0.0);
  EXPECT_THROW(SiSdr(zero, Noise(100, 4)), ConfigError);
  EXPECT_THROW(SiSdr(Noise(100, 4), Noise(99, 4)), ConfigError);
}

TEST(Erle, Examples) {
  const auto mic = Noise(16000, 5);
  const std::vector<SegmentLabel> fst(mic.size(), SegmentLabel::kFarEndOnly);
  EXPECT_NEAR(Erle(mic, mic, fst), 0.0, 1e-12);
  std::vector<double> out(mic.size());
  for (std::size_t i = 0; i < mic.size(); ++i) out[i] = 0.01 * mic[i];
  EXPECT_NEAR(Erle(mic, out, fst), 40.0, 1e-9);
  // Uniform gain g shifts ERLE by -20 log10 g.
  for (std::size_t i = 0; i < mic.size(); ++i) out[i] = 0.05 * mic[i];
  const double base = Erle(mic, out, fst);
  for (std::size_t i = 0; i < mic.size(); ++i) out[i] *= 2.0;
  EXPECT_NEAR(Erle(mic, out, fst), base - 20 * std::log10(2.0), 1e-9);
  const std::vector<SegmentLabel> none(mic.size(), SegmentLabel::kNearEndOnly);
  EXPECT_THROW(Erle(mic, mic, none), ConfigError);
}

TEST(LabelSegments, FromActivity) {
  std::vector<double> near(6400, 0.0), echo(6400, 0.0);
  for (std::size_t i = 0; i < 3200; ++i) near[i] = 0.1;     // frames 0-9
  for (std::size_t i = 1600; i < 4800; ++i) echo[i] = 0.1;  // frames 5-14
  const auto labels = LabelSegments(near, echo);
  EXPECT_EQ(labels[0], SegmentLabel::kNearEndOnly);
  EXPECT_EQ(labels[2000], SegmentLabel::kDoubleTalk);
  EXPECT_EQ(labels[4000], SegmentLabel::kFarEndOnly);
  EXPECT_EQ(labels[6000], SegmentLabel::kSilence);
}

TEST(Evaluate, ReportHasSegments) {
  std::vector<double> near(32000, 0.0), echo(32000, 0.0);
  const auto a = Noise(16000, 6), b = Noise(24000, 7);
  std::copy(a.begin(), a.end(), near.begin());
  std::copy(b.begin(), b.end(), echo.begin() + 8000);
  std::vector<double> mic(32000), processed(32000);
  for (std::size_t i = 0; i < mic.size(); ++i) {
    mic[i] = near[i] + echo[i];
    processed[i] = near[i] + 0.1 * echo[i];
  }
  const auto r = Evaluate(near, echo, mic, processed);
  ASSERT_TRUE(r.si_sdr_db && r.erle_db);
  EXPECT_NEAR(*r.erle_db, 20.0, 1e-9);
  EXPECT_FALSE(r.si_sdr_capped);
  EXPECT_EQ(r.segments.size(), 3u);
  EXPECT_NE(r.ToText().find("erle_db"), std::string::npos);
  EXPECT_EQ(r.ToCsv().rfind("metric,value\n", 0), 0u);
  const std::vector<double> silent(32000, 0.0);
  const auto only_echo = Evaluate(silent, echo, echo, processed);
  EXPECT_FALSE(only_echo.si_sdr_db);
}

}  // namespace
}  // namespace aenr
