#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bp/backbone.hpp"
#include "bp/sampler.hpp"
#include "bp/training.hpp"

namespace bp {

// Experiment-wide settings not covered by the per-module configs.
struct ExperimentConfig {
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  int test_count = 64;
  std::uint64_t test_seed = 101;
  std::vector<double> t0_candidates = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  int diag_samples = 16;
  int diag_draws = 256;
};

// Parsed "[section] / key = value" document. Every field has a default;
// unknown sections or keys are rejected. The raw text is kept so commands
// can echo the configuration into their run directory verbatim.
struct Config {
  BackboneConfig backbone;
  DegradationParams degradation;
  TrainConfig train;
  SamplerConfig sampler;
  ExperimentConfig experiment;
  int encoder_hidden = 32;  // text encoder hidden width
  int token_dim = 16;       // D_in
  std::string raw_text;
};

Config default_config();
Config parse_config(const std::string& text);

// Loads, applies the BRIDGEPROMPT_SEED override (it replaces every
// section's seed) and remembers the raw text.
Config load_config(const std::filesystem::path& path);

// The default configuration rendered as a parseable document.
std::string default_config_text();

}  // namespace bp
