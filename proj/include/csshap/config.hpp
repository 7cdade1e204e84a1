#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "csshap/attribution.hpp"
#include "csshap/model.hpp"
#include "csshap/simulation.hpp"

namespace csshap {

enum class BackgroundSource { kTraining, kZero };
std::string to_string(BackgroundSource s);
BackgroundSource background_source_from_string(const std::string& name);

// Nested JSON run configuration. Precedence: built-in defaults, then the
// config file, then command-line flags.
struct RunConfig {
  DatasetSpec dataset = default_dataset_spec();
  ModelConfig model = default_cnn_config();
  TrainHyper train;
  AttributionConfig attribution;  // its window is the run-wide window
  std::size_t background_size = 32;
  BackgroundSource background = BackgroundSource::kTraining;
  std::filesystem::path out = "run";
  int jobs = 0;  // 0: OpenMP default
};

// Unknown keys anywhere raise ConfigurationError.
RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_json(const RunConfig& config);

// --seed: one value for the dataset, model init, training shuffle and
// attribution schedule.
void apply_seed(RunConfig& config, std::uint64_t seed);

}  // namespace csshap
