// aenr: simulate scenes, run the echo/noise reduction pipeline, probe delays,
// dump features, score outputs and benchmark.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "aenr/errors.h"
#include "aenr/metrics.h"
#include "aenr/model.h"
#include "aenr/pipeline.h"
#include "aenr/pipeline_config.h"
#include "aenr/scene_sim.h"
#include "aenr/wav_io.h"
#include "aenr/weight_store.h"

namespace fs = std::filesystem;
using namespace aenr;

namespace {

constexpr double kPaperParamsM = 0.69;
constexpr double kPaperGmacs = 0.10;

WavFormat ParseFormat(const std::string& s) {
  if (s == "pcm16") return WavFormat::kPcm16;
  if (s == "float32") return WavFormat::kFloat32;
  throw ConfigError("format must be pcm16 or float32");
}

PipelineConfig LoadConfig(const std::string& path) {
  return path.empty() ? PipelineConfig{} : LoadPipelineConfig(path);
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out << text;
}

std::string CpuName() {
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) return line.substr(line.find_first_not_of(' ', colon + 1));
    }
  }
  return "unknown";
}

// ---- simulate

struct SimulateArgs {
  std::string scenario = "dt";
  double ser = 0.0, snr = 20.0, delay_ms = 0.0, t60_ms = 100.0, duration = 10.0;
  int rir_length = 2048;
  std::string rir_path, near_path, far_path, nonlinearity = "none", out_dir = ".", format = "float32";
  double bandlimit_hz = 0.0;
  std::uint64_t seed = 0;
};

int RunSimulate(const SimulateArgs& a) {
  SceneSpec spec;
  spec.scenario = ParseScenario(a.scenario);
  spec.ser_db = a.ser;
  spec.snr_db = a.snr;
  spec.delay_ms = a.delay_ms;
  spec.rir_t60_ms = a.t60_ms;
  spec.rir_length = a.rir_length;
  spec.nonlinearity = Nonlinearity::Parse(a.nonlinearity);
  if (a.bandlimit_hz > 0.0) spec.bandlimit_hz = a.bandlimit_hz;
  spec.seed = a.seed;
  if (!a.rir_path.empty()) spec.rir = ReadWav(a.rir_path).samples;
  spec.Validate();
  const auto format = ParseFormat(a.format);

  const auto near = a.near_path.empty() ? SyntheticSpeech(2 * a.seed + 1, a.duration)
                                        : ReadWav(a.near_path).samples;
  const auto far = a.far_path.empty() ? SyntheticSpeech(2 * a.seed + 2, a.duration)
                                      : ReadWav(a.far_path).samples;
  const auto scene = GenerateScene(spec, near, far);

  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  WriteWav((dir / "x.wav").string(), scene.mic, format);
  WriteWav((dir / "y.wav").string(), scene.far_end, format);
  WriteWav((dir / "s.wav").string(), scene.near, format);
  WriteWav((dir / "e.wav").string(), scene.echo, format);
  WriteWav((dir / "v.wav").string(), scene.noise, format);

  std::ostringstream meta;
  meta << spec.Describe();
  meta << "samples = " << scene.mic.size() << "\n";
  meta << "near_source = " << (a.near_path.empty() ? "synthetic" : a.near_path) << "\n";
  meta << "far_source = " << (a.far_path.empty() ? "synthetic" : a.far_path) << "\n";
  if (spec.scenario == Scenario::kDoubleTalk) meta << "realized_ser_db = " << MeasuredSerDb(scene) << "\n";
  meta << "realized_snr_db = " << MeasuredSnrDb(scene, spec.scenario) << "\n";
  WriteText((dir / "meta.txt").string(), meta.str());
  std::cout << "wrote x.wav y.wav s.wav e.wav v.wav meta.txt to " << a.out_dir << "\n";
  return 0;
}

// ---- process

struct ProcessArgs {
  std::string mic, far, config, out, stage = "full", weights, near_ref, echo_ref, report_csv;
  std::string format = "float32";
  bool streaming = false;
  std::int64_t seed = -1;
};

int RunProcess(const ProcessArgs& a) {
  auto cfg = LoadConfig(a.config);
  if (!a.weights.empty()) cfg.weights_path = a.weights;
  if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
  const auto stage = ParseStage(a.stage);
  const auto format = ParseFormat(a.format);
  const auto mic = ReadWav(a.mic).samples;
  const auto far = ReadWav(a.far).samples;

  Pipeline pipeline(cfg, BuildModel(cfg));
  const auto res = a.streaming ? pipeline.ProcessStreaming(mic, far, stage)
                               : pipeline.ProcessBatch(mic, far, stage);
  WriteWav(a.out, res.output, format);
  std::cout << "wrote " << a.out << " (" << res.output.size() << " samples, stage "
            << a.stage << (a.streaming ? ", streaming" : ", batch") << ")\n";

  if (!a.near_ref.empty() || !a.echo_ref.empty()) {
    std::vector<double> near(mic.size(), 0.0), echo(mic.size(), 0.0);
    if (!a.near_ref.empty()) near = ReadWav(a.near_ref).samples;
    if (!a.echo_ref.empty()) echo = ReadWav(a.echo_ref).samples;
    const auto report = Evaluate(near, echo, mic, res.output);
    std::cout << report.ToText();
    if (!a.report_csv.empty()) WriteText(a.report_csv, report.ToCsv());
  }
  return 0;
}

// ---- probe-delay

struct ProbeArgs {
  std::string mic, far, config, weights, out;
};

int RunProbe(const ProbeArgs& a) {
  auto cfg = LoadConfig(a.config);
  if (cfg.model.routing != InputRouting::kErrorFarEnd)
    throw ConfigError("model.routing must be z-y for the delay probe");
  if (!cfg.model.time_alignment) throw ConfigError("model.time_alignment must be true for the delay probe");
  const auto model = a.weights.empty()
                         ? Model::Build(cfg.model, IdentityFrontEndWeights(cfg.model))
                         : Model::Build(cfg.model, WeightStore::Load(a.weights));
  const auto mic = ReadWav(a.mic).samples;
  const auto far = ReadWav(a.far).samples;
  const auto probe = ProbeDelay(mic, far, model, cfg.stft, cfg.compression_alpha);
  const auto csv = DelayProbeCsv(probe, cfg.stft);
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    WriteText(a.out, csv);
    std::printf("peak d=%d (lag %.0f ms), mean probability %.4f, prominence %.3f, status %s\n",
                probe.peak_index + 1, probe.peak_lag_ms, probe.mean[probe.peak_index], probe.prominence,
                probe.out_of_span ? "out_of_span" : "ok");
  }
  return 0;
}

// ---- features-dump

struct FeaturesArgs {
  std::string input, config, layout, out;
  bool table = false;
};

int RunFeatures(const FeaturesArgs& a) {
  auto cfg = LoadConfig(a.config);
  auto layout = cfg.model.layout;
  if (!a.layout.empty())
    layout = ReorientLayout::Make(layout.num_bins, layout.subband_bins, layout.overlap,
                                  layout.sampling_factor, ParseReorientMode(a.layout));
  if (a.table) {
    std::ostringstream os;
    os << "subband,channel,position,first_bin\n";
    for (int b = 0; b < layout.num_subbands; ++b)
      os << b << "," << layout.ChannelOf(b) << "," << layout.PositionOf(b) << ","
         << b * layout.step << "\n";
    if (a.out.empty()) std::cout << os.str();
    else WriteText(a.out, os.str());
    return 0;
  }
  if (a.input.empty()) throw ConfigError("features-dump needs --input (or --table)");
  const auto signal = ReadWav(a.input).samples;
  const auto feats = SignalFeatures(signal, cfg.stft, layout, cfg.compression_alpha);

  std::ostringstream os;
  os.precision(9);
  os << "frame,channel";
  for (int f = 0; f < feats.features; ++f) os << ",f" << f;
  os << "\n";
  for (int t = 0; t < feats.frames; ++t) {
    for (int c = 0; c < feats.channels; ++c) {
      os << t << "," << c;
      for (int f = 0; f < feats.features; ++f) os << "," << feats.at(c, t, f);
      os << "\n";
    }
  }
  if (a.out.empty()) std::cout << os.str();
  else WriteText(a.out, os.str());

  const auto zeros = ZeroChannelReport(feats);
  const auto count = std::count(zeros.begin(), zeros.end(), true);
  std::cerr << "layout " << ToString(layout.mode) << ": " << feats.channels << " channels x "
            << feats.features << " features, " << feats.frames << " frames, " << count
            << " all-zero channel(s)\n";
  return 0;
}

// ---- metrics

struct MetricsArgs {
  std::string mic, processed, near, echo, csv;
};

int RunMetrics(const MetricsArgs& a) {
  const auto mic = ReadWav(a.mic).samples;
  const auto processed = ReadWav(a.processed).samples;
  std::vector<double> near(mic.size(), 0.0), echo(mic.size(), 0.0);
  if (!a.near.empty()) near = ReadWav(a.near).samples;
  if (!a.echo.empty()) echo = ReadWav(a.echo).samples;
  const auto report = Evaluate(near, echo, mic, processed);
  std::cout << report.ToText();
  if (!a.csv.empty()) WriteText(a.csv, report.ToCsv());
  return 0;
}

// ---- bench

struct BenchArgs {
  std::string config;
  double seconds = 60.0;
  int repeat = 1;
  std::uint64_t seed = 0;
  bool batch = false;
};

int RunBench(const BenchArgs& a) {
  auto cfg = LoadConfig(a.config);
  if (a.repeat < 1) throw ConfigError("--repeat must be >= 1");
  if (!(a.seconds >= 3.0)) throw ConfigError("--seconds must be >= 3");
  const auto params = ParamCount(cfg.model);
  const double gmacs = MacsPerSecond(cfg.model, cfg.stft.frame_rate()) * 1e-9;
  std::printf("params        %lld (%.4f M)   reference 0.69 M   deviation %+.1f%%\n",
              static_cast<long long>(params), params * 1e-6,
              100.0 * (params * 1e-6 - kPaperParamsM) / kPaperParamsM);
  std::printf("GMACS         %.6f            reference 0.10     deviation %+.1f%%\n", gmacs,
              100.0 * (gmacs - kPaperGmacs) / kPaperGmacs);
  std::printf("MACs/frame    %lld at %.1f frames/s\n",
              static_cast<long long>(MacsPerFrame(cfg.model)), cfg.stft.frame_rate());

  SceneSpec spec;
  spec.scenario = Scenario::kDoubleTalk;
  spec.ser_db = 0.0;
  spec.snr_db = 20.0;
  spec.delay_ms = 100.0;
  spec.seed = a.seed;
  const auto scene = GenerateScene(spec, SyntheticSpeech(2 * a.seed + 1, a.seconds),
                                   SyntheticSpeech(2 * a.seed + 2, a.seconds));
  Pipeline pipeline(cfg, BuildModel(cfg));

  std::vector<double> rtf;
  double rms = 0.0;
  for (int r = 0; r < a.repeat; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = a.batch ? pipeline.ProcessBatch(scene.mic, scene.far_end)
                             : pipeline.ProcessStreaming(scene.mic, scene.far_end);
    const auto t1 = std::chrono::steady_clock::now();
    rtf.push_back(std::chrono::duration<double>(t1 - t0).count() / a.seconds);
    double acc = 0.0;
    for (double v : res.output) acc += v * v;
    rms = std::sqrt(acc / static_cast<double>(res.output.size()));
  }
  std::sort(rtf.begin(), rtf.end());
  const double median = rtf.size() % 2 ? rtf[rtf.size() / 2]
                                       : 0.5 * (rtf[rtf.size() / 2 - 1] + rtf[rtf.size() / 2]);
  std::printf("cpu           %s\n", CpuName().c_str());
  std::printf("stream        %.1f s DT scene, %s, seeded random weights, output rms %.6g\n",
              a.seconds, a.batch ? "batch" : "frame-by-frame", rms);
  std::printf("RTF           median %.4f  min %.4f  max %.4f  (%d run%s)\n", median, rtf.front(),
              rtf.back(), a.repeat, a.repeat == 1 ? "" : "s");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid Kalman echo canceller with a time-aligned neural post-filter"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic echo/noise scene");
  simulate->add_option("--scenario", sim.scenario, "nst, fst or dt")->capture_default_str();
  simulate->add_option("--ser", sim.ser, "Signal-to-echo ratio in dB [-20, 20]")->capture_default_str();
  simulate->add_option("--snr", sim.snr, "Signal-to-noise ratio in dB [-5, 30]")->capture_default_str();
  simulate->add_option("--delay-ms", sim.delay_ms, "Echo path delay in ms [0, 1500]")->capture_default_str();
  simulate->add_option("--t60-ms", sim.t60_ms, "Synthetic RIR decay time [50, 300]")->capture_default_str();
  simulate->add_option("--rir-length", sim.rir_length, "Synthetic RIR taps")->capture_default_str();
  simulate->add_option("--rir", sim.rir_path, "RIR WAV file (overrides the synthetic RIR)");
  simulate->add_option("--nonlinearity", sim.nonlinearity, "none, clip:<t> or sigmoid:<g>")->capture_default_str();
  simulate->add_option("--bandlimit-hz", sim.bandlimit_hz, "Low-pass cutoff (0 = off)");
  simulate->add_option("--near", sim.near_path, "Near-end source WAV (default synthetic)");
  simulate->add_option("--far", sim.far_path, "Far-end source WAV (default synthetic)");
  simulate->add_option("--duration", sim.duration, "Synthetic source length in s")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "64-bit seed")->capture_default_str();
  simulate->add_option("--out-dir", sim.out_dir, "Output directory")->capture_default_str();
  simulate->add_option("--format", sim.format, "pcm16 or float32")->capture_default_str();

  ProcessArgs proc;
  auto* process = app.add_subcommand("process", "Run the pipeline on mic/far-end WAVs");
  process->add_option("--mic", proc.mic, "Microphone WAV")->required();
  process->add_option("--far", proc.far, "Far-end WAV")->required();
  process->add_option("--out", proc.out, "Output WAV")->required();
  process->add_option("--config", proc.config, "key = value config file");
  process->add_option("--weights", proc.weights, "WeightStore file (overrides config)");
  process->add_option("--seed", proc.seed, "Random-weight seed (overrides config)");
  process->add_option("--stage", proc.stage, "full or kf-only")->capture_default_str();
  process->add_flag("--streaming", proc.streaming, "Process frame by frame");
  process->add_option("--near-ref", proc.near_ref, "Clean near-end reference for metrics");
  process->add_option("--echo-ref", proc.echo_ref, "Echo reference for segment labels");
  process->add_option("--report-csv", proc.report_csv, "Write the metric report as CSV");
  process->add_option("--format", proc.format, "pcm16 or float32")->capture_default_str();

  ProbeArgs probe;
  auto* probe_cmd = app.add_subcommand("probe-delay", "Per-frame delay distribution of the time-alignment block");
  probe_cmd->add_option("--mic", probe.mic, "Microphone WAV")->required();
  probe_cmd->add_option("--far", probe.far, "Far-end WAV")->required();
  probe_cmd->add_option("--config", probe.config, "key = value config file");
  probe_cmd->add_option("--weights", probe.weights, "WeightStore file (default identity front end)");
  probe_cmd->add_option("--out", probe.out, "CSV output (default stdout)");

  FeaturesArgs feat;
  auto* features = app.add_subcommand("features-dump", "Write reoriented compressed magnitudes as CSV");
  features->add_option("--input", feat.input, "Input WAV");
  features->add_flag("--table", feat.table, "Print the subband permutation table instead");
  features->add_option("--config", feat.config, "key = value config file");
  features->add_option("--layout", feat.layout, "csamfr or csubfr (overrides config)");
  features->add_option("--out", feat.out, "CSV output (default stdout)");

  MetricsArgs met;
  auto* metrics = app.add_subcommand("metrics", "SI-SDR and ERLE of a processed signal");
  metrics->add_option("--mic", met.mic, "Microphone WAV")->required();
  metrics->add_option("--processed", met.processed, "Processed WAV")->required();
  metrics->add_option("--near", met.near, "Clean near-end reference WAV");
  metrics->add_option("--echo", met.echo, "Echo reference WAV");
  metrics->add_option("--csv", met.csv, "Also write CSV");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Complexity and real-time factor");
  bench_cmd->add_option("--config", bench.config, "key = value config file");
  bench_cmd->add_option("--seconds", bench.seconds, "Stream length")->capture_default_str();
  bench_cmd->add_option("--repeat", bench.repeat, "Timed runs")->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed, "Scene and weight seed")->capture_default_str();
  bench_cmd->add_flag("--batch", bench.batch, "Time batch instead of frame-by-frame processing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*simulate) return RunSimulate(sim);
    if (*process) return RunProcess(proc);
    if (*probe_cmd) return RunProbe(probe);
    if (*features) return RunFeatures(feat);
    if (*metrics) return RunMetrics(met);
    if (*bench_cmd) return RunBench(bench);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
