#pragma once

#include <filesystem>
#include <string>

#include "fmvae/data.hpp"
#include "fmvae/nets.hpp"
#include "fmvae/trainer.hpp"

namespace fmvae::acceptance {

// Desk-scale pendulum setup shared by the geometry criteria.
inline constexpr std::size_t kPendulumImages = 5000;
inline constexpr std::size_t kPendulumSteps = 3000;
inline constexpr double kPendulumLearningRate = 1e-3;
// kappa^2 sits below the pixel-noise floor, so beta never leaves its initial
// value; at the library default the posterior collapses to the mean image.
inline constexpr double kPendulumBetaInit = 1e-4;
inline constexpr std::uint64_t kPendulumSeed = 1;

const Dataset& pendulum_data();
Architecture pendulum_architecture();
TrainConfig pendulum_config();

struct TrainedModel {
  FmvaeModel model;
  TrainConfig config;
  TrainState state;
};

// Loads `cache/<name>.ckpt` when it was trained with exactly `config`,
// otherwise trains from the seeded initialisation and stores it together
// with its log.
TrainedModel trained_pendulum(const std::filesystem::path& cache, const std::string& name, const TrainConfig& config);

}  // namespace fmvae::acceptance
