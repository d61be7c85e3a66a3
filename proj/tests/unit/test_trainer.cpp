#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fmvae/checkpoint.hpp"
#include "fmvae/data.hpp"
#include "fmvae/errors.hpp"
#include "fmvae/trainer.hpp"
#include "gradcheck.hpp"

using namespace fmvae;
using fmvae::testing::to_vector;

namespace {

Architecture tiny_arch(std::size_t nx) {
  Architecture arch;
  arch.data_dim = nx;
  arch.encoder_hidden = {8};
  arch.decoder_hidden = {8};
  arch.prior_encoder_hidden = {8};
  arch.prior_decoder_hidden = {8};
  return arch;
}

Dataset toy_data(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.rows = rows;
  d.cols = cols;
  d.samples = to_vector(rng.normal_tensor({rows, cols}));
  return d;
}

TrainConfig small_config() {
  TrainConfig c;
  c.k_importance = 4;
  c.batch_size = 8;
  c.learning_rate = 1e-3;
  c.max_steps = 10;
  return c;
}

std::vector<std::vector<double>> weights_of(const FmvaeModel& m) {
  std::vector<std::vector<double>> out;
  for (const auto& p : m.all_parameters()) out.push_back(to_vector(p.tensor));
  return out;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("f_beta examples") {
  CHECK(f_beta(0.3, 0.1, 2.0) == -1.0);
  CHECK(f_beta(57.0, 0.1, 0.5) == -1.0);
  CHECK(f_beta(1.0, -0.1, 3.0) == 0.0);
  CHECK(f_beta(2.0, -0.1, 1.0) == doctest::Approx(0.7615941559557649).epsilon(1e-15));
  CHECK(f_beta(2.0, 0.0, 1.0) == -1.0);  // the boundary counts as violated
}

TEST_CASE("update_beta examples") {
  TrainConfig c;
  c.kappa = 0.1;
  c.nu = 1.0;
  c.tau = 3.0;
  const double k2 = c.kappa * c.kappa;
  CHECK(update_beta(2.0, k2, c) == 2.0);
  CHECK(update_beta(2.0, k2 + 0.5, c) == doctest::Approx(1.2130613194252668).epsilon(1e-14));
  CHECK(update_beta(2.0, k2 - 0.5, c) == doctest::Approx(1.21606447423909).epsilon(1e-12));
}

TEST_CASE("update_c_hat examples") {
  CHECK(update_c_hat(std::nullopt, 0.37, 0.9) == 0.37);
  double c = 0.0;
  std::optional<double> prev;
  for (int i = 0; i < 10; ++i) {
    c = update_c_hat(prev, 0.25, 0.9);
    prev = c;
    CHECK(c == doctest::Approx(0.25).epsilon(1e-15));
  }
  CHECK(update_c_hat(1.0, 0.0, 0.9) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK_THROWS_AS((void)update_c_hat(1.0, 0.0, 1.0), ContractViolation);
}

TEST_CASE("config validation names the key") {
  TrainConfig c;
  c.kappa = -1.0;
  try {
    c.validate();
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("kappa") != std::string::npos);
  }
  c = TrainConfig{};
  c.batch_size = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("constraint satisfied at the first step ends the initial phase") {
  const Dataset data = toy_data(16, 3, 1);
  Rng rng(2);
  FmvaeModel model = FmvaeModel::make(tiny_arch(3), rng);
  TrainConfig c = small_config();
  c.kappa = 1.5;  // kappa^2 above the initial per-dimension error of the toy data
  TrainState s = make_train_state(model, c);
  const auto prior_before = to_vector(model.prior_parameters()[0].tensor);
  train_step(model, data.all(), s, c);
  CHECK_FALSE(s.initial_phase);
  CHECK(s.step == 1);
  CHECK(to_vector(model.prior_parameters()[0].tensor) != prior_before);
}

TEST_CASE("initial phase freezes beta and the prior networks") {
  const Dataset data = toy_data(16, 3, 3);
  Rng rng(4);
  FmvaeModel model = FmvaeModel::make(tiny_arch(3), rng);
  TrainConfig c = small_config();
  c.kappa = 1e-4;
  TrainState s = make_train_state(model, c);
  const auto prior_before = weights_of(model);
  const auto vae_before = to_vector(model.vae_parameters()[0].tensor);
  for (int i = 0; i < 5; ++i) train_step(model, data.all(), s, c);
  CHECK(s.initial_phase);
  CHECK(s.beta == c.beta_init);
  const ParamList prior = model.prior_parameters();
  const std::size_t first_prior = model.vae_parameters().size();
  for (std::size_t i = 0; i < prior.size(); ++i) CHECK(to_vector(prior[i].tensor) == prior_before[first_prior + i]);
  CHECK(to_vector(model.vae_parameters()[0].tensor) != vae_before);
  CHECK(s.prior_optimizer.step_count == 0);
}

TEST_CASE("initial phase ends exactly once") {
  const Dataset data = toy_data(32, 4, 5);
  Rng rng(6);
  FmvaeModel model = FmvaeModel::make(tiny_arch(4), rng);
  TrainConfig c = small_config();
  c.max_steps = 60;
  TrainState s = make_train_state(model, c);
  c.kappa = 0.01;
  int flips = 0;
  bool was_initial = s.initial_phase;
  const BatchSchedule schedule(data.rows, c.batch_size, c.seed);
  for (std::uint64_t step = 0; step < c.max_steps; ++step) {
    // loosen the constraint half way so the flip happens mid-run
    if (step == 30) c.kappa = 1.5;
    if (step == 45) c.kappa = 0.01;
    train_step(model, data.batch(schedule.for_step(step)), s, c);
    if (was_initial && !s.initial_phase) ++flips;
    CHECK_FALSE((!was_initial && s.initial_phase));
    was_initial = s.initial_phase;
  }
  CHECK(flips == 1);
}

TEST_CASE("eta = 0 loss decreases on a single datum") {
  int improved = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Dataset data = toy_data(1, 4, 100 + seed);
    data.rows = 2;
    data.samples.insert(data.samples.end(), data.samples.begin(), data.samples.end());
    Rng rng(seed);
    FmvaeModel model = FmvaeModel::make(tiny_arch(4), rng);
    TrainConfig c = small_config();
    c.eta = 0.0;
    c.batch_size = 2;
    c.kappa = 1e-4;  // keeps the prior networks frozen
    c.max_steps = 100;
    c.seed = seed;
    TrainState s = make_train_state(model, c);
    const TrainLog log = fit(model, data, c, s);
    double head = 0.0;
    double tail = 0.0;
    for (std::size_t i = 0; i < 10; ++i) {
      head += log.rows[i].loss.total;
      tail += log.rows[90 + i].loss.total;
    }
    if (tail < head) ++improved;
  }
  CHECK(improved >= 3);
}

TEST_CASE("fit bookkeeping") {
  const Dataset data = toy_data(20, 3, 7);
  Rng rng(8);
  FmvaeModel model = FmvaeModel::make(tiny_arch(3), rng);
  TrainConfig c = small_config();
  SUBCASE("zero steps leave the model alone") {
    c.max_steps = 0;
    TrainState s = make_train_state(model, c);
    const auto before = weights_of(model);
    CHECK(fit(model, data, c, s).rows.empty());
    CHECK(weights_of(model) == before);
  }
  SUBCASE("one log row per step") {
    c.max_steps = 7;
    TrainState s = make_train_state(model, c);
    const TrainLog log = fit(model, data, c, s);
    REQUIRE(log.rows.size() == 7);
    CHECK(log.rows.back().step == 7);
    std::ostringstream os;
    TrainLog::write_header(os);
    TrainLog::write_row(os, log.rows[0]);
    CHECK(os.str().rfind("step,beta,c_hat,total,constraint,kl_bound,flat_penalty,c_squared\n1,", 0) == 0);
  }
  SUBCASE("column mismatch") {
    TrainState s = make_train_state(model, c);
    CHECK_THROWS_AS(fit(model, toy_data(20, 5, 1), c, s), ContractViolation);
  }
  SUBCASE("training faults carry the step index") {
    Dataset bad = data;
    bad.samples[0] = std::nan("");
    TrainState s = make_train_state(model, c);
    try {
      fit(model, bad, c, s);
      FAIL("expected a training fault");
    } catch (const TrainingFault& e) {
      CHECK(std::string(e.what()).rfind("step ", 0) == 0);
    }
  }
}

TEST_CASE("training is a pure function of data, config and seed") {
  const Dataset data = toy_data(24, 3, 9);
  auto run = [&] {
    Rng rng(10);
    FmvaeModel model = FmvaeModel::make(tiny_arch(3), rng);
    TrainConfig c = small_config();
    TrainState s = make_train_state(model, c);
    fit(model, data, c, s);
    return weights_of(model);
  };
  CHECK(run() == run());
}

TEST_CASE("checkpoint round trip resumes bit-identically") {
  const Dataset data = toy_data(24, 3, 11);
  Rng rng(12);
  FmvaeModel model = FmvaeModel::make(tiny_arch(3), rng);
  TrainConfig c = small_config();
  c.kappa = 1.5;  // leave the initial phase so both optimisers carry state
  c.max_steps = 5;
  TrainState s = make_train_state(model, c);
  fit(model, data, c, s);
  CHECK_FALSE(s.initial_phase);

  const auto path = std::filesystem::temp_directory_path() / "fmvae_unit_ckpt.bin";
  save_checkpoint(path, model, c, s);
  Checkpoint ck = load_checkpoint(path);
  CHECK(ck.config == c);
  CHECK(ck.state.step == s.step);
  CHECK(ck.state.rng == s.rng);
  CHECK(weights_of(ck.model) == weights_of(model));

  c.max_steps = 9;
  ck.config.max_steps = 9;
  fit(model, data, c, s);
  fit(ck.model, data, ck.config, ck.state);
  CHECK(weights_of(ck.model) == weights_of(model));
  CHECK(ck.state.beta == s.beta);
  CHECK(ck.state.c_hat == s.c_hat);
  CHECK(ck.state.vae_optimizer.second_moment == s.vae_optimizer.second_moment);
  std::filesystem::remove(path);
}

TEST_CASE("corrupt checkpoints are format errors") {
  const auto path = std::filesystem::temp_directory_path() / "fmvae_unit_bad.bin";
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOTACHECKPOINT";
  }
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  Rng rng(1);
  const FmvaeModel model = FmvaeModel::make(tiny_arch(3), rng);
  const TrainConfig c = small_config();
  save_checkpoint(path, model, c, make_train_state(model, c));
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 16);
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  std::filesystem::remove(path);
}

}  // TEST_SUITE
