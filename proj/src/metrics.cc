#include "aenr/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "aenr/errors.h"
#include "aenr/scene_sim.h"

namespace aenr {

namespace {

void CheckLengths(std::size_t a, std::size_t b) {
  if (a != b) throw ConfigError("signals differ in length");
  if (a == 0) throw ConfigError("signals are empty");
}

std::vector<double> Gather(std::span<const double> x, const std::vector<SegmentLabel>& labels,
                           SegmentLabel which) {
  std::vector<double> out;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (labels[i] == which) out.push_back(x[i]);
  return out;
}

bool AllZero(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; });
}

}  // namespace

double SiSdr(std::span<const double> reference, std::span<const double> estimate) {
  CheckLengths(reference.size(), estimate.size());
  double ref_energy = 0.0, dot = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    ref_energy += reference[i] * reference[i];
    dot += reference[i] * estimate[i];
  }
  if (ref_energy == 0.0) throw ConfigError("SI-SDR is undefined for an all-zero reference");
  const double alpha = dot / ref_energy;
  double target = 0.0, residual = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double t = alpha * reference[i];
    const double r = estimate[i] - t;
    target += t * t;
    residual += r * r;
  }
  if (residual <= target * 1e-10) return kSiSdrCapDb;
  return std::min(kSiSdrCapDb, 10.0 * std::log10(target / residual));
}

bool SiSdrIsCapped(double value) { return value >= kSiSdrCapDb; }

std::string ToString(SegmentLabel label) {
  switch (label) {
    case SegmentLabel::kSilence: return "silence";
    case SegmentLabel::kNearEndOnly: return "nst";
    case SegmentLabel::kFarEndOnly: return "fst";
    case SegmentLabel::kDoubleTalk: return "dt";
  }
  return "silence";
}

std::vector<SegmentLabel> LabelSegments(std::span<const double> near,
                                        std::span<const double> echo) {
  CheckLengths(near.size(), echo.size());
  const auto s = ActivityMask(near);
  const auto e = ActivityMask(echo);
  std::vector<SegmentLabel> labels(near.size());
  for (std::size_t i = 0; i < near.size(); ++i) {
    if (s[i] && e[i]) labels[i] = SegmentLabel::kDoubleTalk;
    else if (s[i]) labels[i] = SegmentLabel::kNearEndOnly;
    else if (e[i]) labels[i] = SegmentLabel::kFarEndOnly;
    else labels[i] = SegmentLabel::kSilence;
  }
  return labels;
}

double Erle(std::span<const double> mic, std::span<const double> processed,
            const std::vector<SegmentLabel>& labels) {
  CheckLengths(mic.size(), processed.size());
  if (labels.size() != mic.size()) throw ConfigError("segment labels differ in length");
  double p_mic = 0.0, p_out = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < mic.size(); ++i) {
    if (labels[i] != SegmentLabel::kFarEndOnly) continue;
    p_mic += mic[i] * mic[i];
    p_out += processed[i] * processed[i];
    ++count;
  }
  if (count == 0) throw ConfigError("ERLE needs at least one far-end-only segment");
  if (p_out == 0.0) return kSiSdrCapDb;
  if (p_mic == 0.0) return -kSiSdrCapDb;
  return 10.0 * std::log10(p_mic / p_out);
}

MetricReport Evaluate(std::span<const double> near, std::span<const double> echo,
                      std::span<const double> mic, std::span<const double> processed) {
  CheckLengths(near.size(), echo.size());
  CheckLengths(mic.size(), processed.size());
  CheckLengths(near.size(), mic.size());
  MetricReport report;
  if (!AllZero(near)) {
    report.si_sdr_db = SiSdr(near, processed);
    report.si_sdr_capped = SiSdrIsCapped(*report.si_sdr_db);
  }
  const auto labels = LabelSegments(near, echo);
  const bool has_fst = std::find(labels.begin(), labels.end(), SegmentLabel::kFarEndOnly) != labels.end();
  if (has_fst) {
    report.erle_db = Erle(mic, processed, labels);
    report.segments.emplace_back("fst erle_db", *report.erle_db);
  }
  for (auto label : {SegmentLabel::kNearEndOnly, SegmentLabel::kDoubleTalk}) {
    const auto ref = Gather(near, labels, label);
    if (ref.empty() || AllZero(ref)) continue;
    const auto est = Gather(processed, labels, label);
    report.segments.emplace_back(ToString(label) + " si_sdr_db", SiSdr(ref, est));
  }
  return report;
}

std::string MetricReport::ToText() const {
  std::ostringstream os;
  char buf[96];
  auto line = [&](const std::string& name, const std::string& value) {
    std::snprintf(buf, sizeof(buf), "%-18s %s\n", name.c_str(), value.c_str());
    os << buf;
  };
  auto num = [](double v) {
    char b[32];
    std::snprintf(b, sizeof(b), "%.3f", v);
    return std::string(b);
  };
  line("si_sdr_db", si_sdr_db ? num(*si_sdr_db) + (si_sdr_capped ? " (capped)" : "") : "n/a");
  line("erle_db", erle_db ? num(*erle_db) : "n/a");
  for (const auto& [name, value] : segments) line(name, num(value));
  return os.str();
}

std::string MetricReport::ToCsv() const {
  std::ostringstream os;
  os.precision(10);
  os << "metric,value\n";
  if (si_sdr_db) os << "si_sdr_db," << *si_sdr_db << "\n";
  if (erle_db) os << "erle_db," << *erle_db << "\n";
  for (const auto& [name, value] : segments) os << name << "," << value << "\n";
  return os.str();
}

}  // namespace aenr
