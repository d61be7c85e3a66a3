#pragma once

#include <filesystem>

#include "fmvae/nets.hpp"
#include "fmvae/train_config.hpp"
#include "fmvae/trainer.hpp"

namespace fmvae {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  FmvaeModel model;
  TrainConfig config;
  TrainState state;
};

// Layout documented in docs/formats.md.
void save_checkpoint(const std::filesystem::path& path, const FmvaeModel& model, const TrainConfig& config,
                     const TrainState& state);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace fmvae
