#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

namespace fmvae {

// Hyperparameters of the constrained training loop. Defaults follow the
// pendulum row of the reference architecture table where it gives a value.
struct TrainConfig {
  double kappa = 0.025;            // constraint scale; the bound is kappa^2
  double nu = 1.0;                 // beta-update gain
  double tau = 3.0;                // slope of the satisfied-branch tanh
  std::size_t k_importance = 16;   // importance samples K
  double eta = 1000.0;             // flatness penalty weight
  double alpha0 = 0.1;             // mixup coefficient ~ U(-alpha0, 1 + alpha0)
  double beta_init = 1e-2;
  double c_hat_smoothing = 0.9;    // moving-average coefficient of the constraint
  double learning_rate = 1e-4;
  std::size_t batch_size = 128;
  std::size_t max_steps = 20000;
  double jacobian_step_train = 1e-2;
  std::uint64_t seed = 1;
  bool mixup_enabled = true;
  std::optional<double> fixed_c2;  // overrides the batch scale factor

  // Throws ConfigError naming the offending field.
  void validate() const;

  bool operator==(const TrainConfig&) const = default;
};

}  // namespace fmvae
