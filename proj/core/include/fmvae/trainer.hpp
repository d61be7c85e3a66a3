#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "fmvae/adam.hpp"
#include "fmvae/data.hpp"
#include "fmvae/flatloss.hpp"
#include "fmvae/nets.hpp"
#include "fmvae/random.hpp"
#include "fmvae/train_config.hpp"

namespace fmvae {

struct TrainState {
  std::uint64_t step = 0;
  double beta = 1e-2;  // 1 / lambda
  double c_hat = 0.0;
  bool c_hat_initialised = false;
  bool initial_phase = true;
  AdamState vae_optimizer;    // theta, phi
  AdamState prior_optimizer;  // Theta, Phi
  Rng rng;
};

TrainState make_train_state(const FmvaeModel& model, const TrainConfig& config);

// (1 - H(delta)) tanh(tau (beta - 1)) - H(delta), with H(0) = 1.
double f_beta(double beta, double delta, double tau);

// beta * exp(nu * f_beta(beta, c_hat - kappa^2; tau) * (c_hat - kappa^2)).
double update_beta(double beta, double c_hat, const TrainConfig& config);

// Exponential moving average; the first observation initialises it.
double update_c_hat(std::optional<double> previous, double batch_constraint, double smoothing);

// One iteration of the constrained loop. During the initial phase only the
// encoder and decoder are updated and beta is frozen; the phase ends for good
// the first time the smoothed constraint drops below kappa^2, after which
// beta is updated before each gradient step and all four networks train.
// Returns the loss evaluated with the beta used for the gradient step.
LossBreakdown train_step(FmvaeModel& model, const Tensor& batch, TrainState& state, const TrainConfig& config);

struct LogRow {
  std::uint64_t step = 0;
  double beta = 0.0;
  double c_hat = 0.0;
  LossBreakdown loss;
};

struct TrainLog {
  std::vector<LogRow> rows;

  static constexpr const char* kHeader = "step,beta,c_hat,total,constraint,kl_bound,flat_penalty,c_squared";
  static void write_header(std::ostream& os);
  static void write_row(std::ostream& os, const LogRow& row);
  void write_csv(const std::filesystem::path& path) const;
};

using StepCallback = std::function<void(const LogRow&)>;

// Runs train_step from state.step until config.max_steps on seeded batches.
TrainLog fit(FmvaeModel& model, const Dataset& data, const TrainConfig& config, TrainState& state,
             const StepCallback& on_step = {});

}  // namespace fmvae
