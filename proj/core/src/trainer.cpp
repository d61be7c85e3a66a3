#include "fmvae/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "fmvae/errors.hpp"

namespace fmvae {

void TrainConfig::validate() const {
  auto fail = [](const char* key, const char* why) { throw ConfigError(std::string(key) + ": " + why); };
  if (!(kappa > 0.0)) fail("kappa", "must be positive");
  if (!(nu > 0.0)) fail("nu", "must be positive");
  if (!(tau > 0.0)) fail("tau", "must be positive");
  if (k_importance < 1) fail("k_importance", "must be at least 1");
  if (!(eta >= 0.0)) fail("eta", "must be non-negative");
  if (!(alpha0 >= 0.0)) fail("alpha0", "must be non-negative");
  if (!(beta_init > 0.0)) fail("beta_init", "must be positive");
  if (!(c_hat_smoothing > 0.0 && c_hat_smoothing < 1.0)) fail("c_hat_smoothing", "must lie in (0, 1)");
  if (!(learning_rate > 0.0)) fail("learning_rate", "must be positive");
  if (batch_size < 2) fail("batch_size", "must be at least 2");
  if (!(jacobian_step_train > 0.0)) fail("jacobian_step_train", "must be positive");
  if (fixed_c2 && !(*fixed_c2 >= 0.0)) fail("fixed_c2", "must be non-negative");
}

TrainState make_train_state(const FmvaeModel& model, const TrainConfig& config) {
  config.validate();
  TrainState state;
  state.beta = config.beta_init;
  state.vae_optimizer = make_adam(model.vae_parameters(), config.learning_rate);
  state.prior_optimizer = make_adam(model.prior_parameters(), config.learning_rate);
  state.rng = Rng(config.seed);
  return state;
}

double f_beta(double beta, double delta, double tau) {
  const double heaviside = delta >= 0.0 ? 1.0 : 0.0;
  return (1.0 - heaviside) * std::tanh(tau * (beta - 1.0)) - heaviside;
}

double update_beta(double beta, double c_hat, const TrainConfig& config) {
  const double delta = c_hat - config.kappa * config.kappa;
  return beta * std::exp(config.nu * f_beta(beta, delta, config.tau) * delta);
}

double update_c_hat(std::optional<double> previous, double batch_constraint, double smoothing) {
  if (!(smoothing > 0.0 && smoothing < 1.0)) throw ContractViolation("c_hat smoothing must lie in (0, 1)");
  if (!previous) return batch_constraint;
  return (1.0 - smoothing) * batch_constraint + smoothing * *previous;
}

LossBreakdown train_step(FmvaeModel& model, const Tensor& batch, TrainState& state, const TrainConfig& config) {
  const std::uint64_t step_no = state.step + 1;
  try {
    if (!(state.beta > 0.0)) throw ContractViolation("train_step: beta must be positive");
    Tape::current().clear();
    ParamList vae = model.vae_parameters();
    ParamList prior = model.prior_parameters();
    zero_grads(vae);
    zero_grads(prior);

    const LossTerms terms = fmvae_loss_terms(model, batch, config, state.rng);

    const double batch_c = terms.constraint.item();
    if (!std::isfinite(batch_c)) throw TrainingFault("non-finite loss component constraint");
    state.c_hat = update_c_hat(state.c_hat_initialised ? std::optional<double>(state.c_hat) : std::nullopt, batch_c,
                               config.c_hat_smoothing);
    state.c_hat_initialised = true;
    if (state.c_hat < config.kappa * config.kappa) state.initial_phase = false;
    if (!state.initial_phase) state.beta = update_beta(state.beta, state.c_hat, config);

    const Tensor total = combine_loss(terms, state.beta, config.eta);
    const LossBreakdown values = breakdown(terms, total);
    const std::pair<const char*, double> checks[] = {{"kl_bound", values.kl_bound_f},
                                                     {"flat_penalty", values.flat_penalty},
                                                     {"c_squared", values.c_squared},
                                                     {"total", values.total},
                                                     {"beta", state.beta}};
    for (const auto& [name, value] : checks) {
      if (!std::isfinite(value)) throw TrainingFault(std::string("non-finite loss component ") + name);
    }

    backward(total);
    adam_step(vae, state.vae_optimizer);
    if (!state.initial_phase) adam_step(prior, state.prior_optimizer);
    zero_grads(vae);
    zero_grads(prior);
    state.step = step_no;
    return values;
  } catch (const TrainingFault& e) {
    Tape::current().clear();
    throw TrainingFault("step " + std::to_string(step_no) + ": " + e.what());
  } catch (const DomainError& e) {
    Tape::current().clear();
    throw TrainingFault("step " + std::to_string(step_no) + ": " + e.what());
  }
}

void TrainLog::write_header(std::ostream& os) { os << kHeader << '\n'; }

void TrainLog::write_row(std::ostream& os, const LogRow& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                static_cast<unsigned long long>(r.step), r.beta, r.c_hat, r.loss.total, r.loss.constraint_c,
                r.loss.kl_bound_f, r.loss.flat_penalty, r.loss.c_squared);
  os << buf;
}

void TrainLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  write_header(out);
  for (const auto& r : rows) write_row(out, r);
}

TrainLog fit(FmvaeModel& model, const Dataset& data, const TrainConfig& config, TrainState& state,
             const StepCallback& on_step) {
  config.validate();
  if (data.rows == 0) throw ContractViolation("fit: empty dataset");
  if (data.cols != model.architecture().data_dim) {
    throw ContractViolation("fit: dataset has " + std::to_string(data.cols) + " columns, model expects " +
                            std::to_string(model.architecture().data_dim));
  }
  TrainLog log;
  if (state.step >= config.max_steps) return log;
  const BatchSchedule schedule(data.rows, config.batch_size, config.seed);
  if (schedule.batches_per_epoch() == 0) {
    throw ContractViolation("fit: dataset of " + std::to_string(data.rows) + " rows is smaller than one batch");
  }
  while (state.step < config.max_steps) {
    const auto indices = schedule.for_step(state.step);
    const LossBreakdown loss = train_step(model, data.batch(indices), state, config);
    log.rows.push_back({state.step, state.beta, state.c_hat, loss});
    if (on_step) on_step(log.rows.back());
  }
  return log;
}

}  // namespace fmvae
