#ifndef AENR_METRICS_H_
#define AENR_METRICS_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace aenr {

inline constexpr double kSiSdrCapDb = 100.0;

// Scale-invariant SDR in dB, capped at +100. Throws ConfigError on length
// mismatch or an all-zero reference.
double SiSdr(std::span<const double> reference, std::span<const double> estimate);
bool SiSdrIsCapped(double value);

enum class SegmentLabel { kSilence, kNearEndOnly, kFarEndOnly, kDoubleTalk };
std::string ToString(SegmentLabel label);

// Per-sample labels from the activity of the near-end speech and the echo
// (20 ms frames above -40 dBFS).
std::vector<SegmentLabel> LabelSegments(std::span<const double> near,
                                        std::span<const double> echo);

// 10 log10(P_mic / P_processed) over samples labeled far-end only. Throws
// ConfigError when there is no such sample.
double Erle(std::span<const double> mic, std::span<const double> processed,
            const std::vector<SegmentLabel>& labels);

struct MetricReport {
  std::optional<double> si_sdr_db;
  bool si_sdr_capped = false;
  std::optional<double> erle_db;
  std::vector<std::pair<std::string, double>> segments;

  std::string ToText() const;
  std::string ToCsv() const;
};

// processed is assumed sample-aligned with mic (the pipeline adds no lookahead
// and trims its framing delay). Any of near/echo may be all-zero.
MetricReport Evaluate(std::span<const double> near, std::span<const double> echo,
                      std::span<const double> mic, std::span<const double> processed);

}  // namespace aenr

#endif  // AENR_METRICS_H_
