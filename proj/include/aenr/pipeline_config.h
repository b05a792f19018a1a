#ifndef AENR_PIPELINE_CONFIG_H_
#define AENR_PIPELINE_CONFIG_H_

#include <cstdint>
#include <optional>
#include <string>

#include "aenr/kalman_aec.h"
#include "aenr/model.h"
#include "aenr/stft.h"

namespace aenr {

struct PipelineConfig {
  StftConfig stft;
  KalmanConfig kalman;
  // Holds the reorientation layout and the input routing.
  ModelConfig model;
  double compression_alpha = 0.3;
  std::optional<std::string> weights_path;
  // Seed for random weights when no weights file is given.
  std::uint64_t seed = 0;

  // Per-module checks plus cross-module consistency (K, hop, padded length).
  // Throws ConfigError naming the offending field.
  void Validate() const;
  // Flat "key = value" text, readable by ParsePipelineConfig.
  std::string ToText() const;
};

// One "key = value" per line; '#' starts a comment. Unknown keys and
// malformed values throw ConfigError naming the key and line. Keys that are
// absent keep their defaults. The result is validated.
PipelineConfig ParsePipelineConfig(const std::string& text);
PipelineConfig LoadPipelineConfig(const std::string& path);

}  // namespace aenr

#endif  // AENR_PIPELINE_CONFIG_H_
