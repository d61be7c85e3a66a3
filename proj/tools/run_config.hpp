#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "fmvae/data.hpp"
#include "fmvae/nets.hpp"
#include "fmvae/train_config.hpp"

namespace fmvae::cli {

// Where training data comes from. `kind` is one of pendulum (generated),
// mnist (IDX files), csv, or file (binary dataset container).
struct DatasetSource {
  std::string kind = "pendulum";
  std::size_t count = 15000;
  double noise_std = 0.05;
  std::string path;    // csv / file / mnist images
  std::string labels;  // mnist labels, optional
  std::optional<double> binarise_threshold = 0.5;
  char delimiter = ',';

  Dataset load(std::uint64_t seed) const;
};

struct RunConfig {
  std::string preset = "pendulum";
  DatasetSource dataset;
  Architecture architecture;  // data_dim is taken from the dataset
  TrainConfig train;
};

// Table rows for the pendulum, mnist and human data sets.
RunConfig preset(const std::string& name);

// Reads a JSON document. A "preset" key selects the starting point, every
// other key overrides it; unknown keys raise ConfigError naming the key.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& config);

}  // namespace fmvae::cli
