#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fmvae::cli {

struct GlobalOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = ".";
};

struct GenDataOptions {
  std::string kind = "pendulum";
  std::size_t count = 15000;
  double noise_std = 0.05;
  std::string format = "bin";  // bin or csv
};

struct TrainOptions {
  std::optional<std::string> preset;
  std::optional<std::filesystem::path> data;
  std::optional<double> eta;
  bool no_mixup = false;
  std::optional<double> fixed_c2;
  std::optional<std::size_t> steps;
  std::optional<double> learning_rate;
  std::optional<std::size_t> batch_size;
  std::size_t log_every = 100;
};

struct AnalyzeOptions {
  std::filesystem::path checkpoint;
  std::optional<std::filesystem::path> data;
  std::size_t samples = 1000;
  std::size_t pairs = 0;
  std::size_t graph_nodes = 3600;
  std::size_t graph_neighbours = 12;
  std::size_t path_steps = 100;
  std::size_t grid = 0;
  std::vector<std::string> distance_from;
};

struct InterpolateOptions {
  std::filesystem::path checkpoint;
  std::optional<std::filesystem::path> data;
  std::optional<std::string> from;
  std::optional<std::string> to;
  std::optional<std::size_t> from_index;
  std::optional<std::size_t> to_index;
  std::size_t steps = 10;
};

void cmd_gen_data(const GlobalOptions& global, const GenDataOptions& opts);
void cmd_train(const GlobalOptions& global, const TrainOptions& opts);
void cmd_analyze(const GlobalOptions& global, const AnalyzeOptions& opts);
void cmd_interpolate(const GlobalOptions& global, const InterpolateOptions& opts);

}  // namespace fmvae::cli
