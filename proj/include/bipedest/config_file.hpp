#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "bipedest/experiment.hpp"
#include "bipedest/gait_sim.hpp"

namespace bipedest {

/// Everything one simulate/run invocation needs. Simulation-side and
/// filter-side noise are independent so the filter can be tuned away from
/// the values used to generate the data.
struct ExperimentConfig {
  std::optional<std::filesystem::path> dataset;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 1;
  GaitConfig gait;
  NoiseConfig sim_noise;
  RunOptions run;  ///< run.filter.noise is the filter-side noise
};

/// Parses flat "key = value" text. '#' starts a comment; blank lines are
/// ignored. Unknown keys and malformed values throw std::invalid_argument
/// with the line number. Keys are listed by config_keys_help().
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// Applies a single key/value pair.
void apply_config_key(ExperimentConfig& cfg, std::string_view key, std::string_view value);

std::string config_keys_help();

}  // namespace bipedest
