#pragma once

// Versioned JSON run specification shared by the command-line tool. Every
// value can be overridden afterwards by command-line flags.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "specnet/benchmark.hpp"
#include "specnet/dataio.hpp"
#include "specnet/network.hpp"
#include "specnet/trainer.hpp"

namespace specnet {

struct RunSpec {
  static constexpr int kVersion = 1;

  // Exactly one data source: a manifest path or the synthetic generator.
  std::filesystem::path manifest;
  bool synthetic = false;
  SyntheticSpec synthetic_spec;

  std::filesystem::path output = "run";

  // Architecture preset ("paper", "desk" or "tiny") sized to the data, then
  // patched by `network_overrides` (NetworkConfig keys).
  std::string preset = "desk";
  nlohmann::json network_overrides = nlohmann::json::object();

  TrainingConfig training;
  std::vector<double> grid_learning_rates{1e-2, 1e-3, 1e-4, 1e-5};
  BenchOptions bench;

  // One seed for every random stream: synthetic data, init, dropout,
  // shuffling and fold assignment.
  void set_seed(std::uint64_t seed);

  // Throws ConfigError naming the key.
  void validate() const;

  NetworkConfig network_for(std::size_t height, std::size_t width, std::size_t channels) const;
};

// Relative manifest paths resolve against `base_dir`.
RunSpec parse_run_spec(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunSpec load_run_spec(const std::filesystem::path& path);
nlohmann::json to_json(const RunSpec& spec);
nlohmann::json to_json(const TrainingConfig& cfg);

LabeledDataset load_run_data(const RunSpec& spec);

Flip parse_flip(const std::string& name);
std::string_view flip_name(Flip f) noexcept;

}  // namespace specnet
