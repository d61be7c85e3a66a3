#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fmvae/tensor.hpp"

namespace fmvae {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

using ParamList = std::vector<NamedTensor>;

struct AdamState {
  std::uint64_t step_count = 0;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

AdamState make_adam(const ParamList& params, double learning_rate);

// One bias-corrected Adam update over `params`, reading each tensor's
// accumulated gradient (a missing gradient counts as zero). Parameter values
// are overwritten in place. Throws TrainingFault naming the parameter if a
// gradient is not finite.
void adam_step(ParamList& params, AdamState& state);

void zero_grads(ParamList& params);

}  // namespace fmvae
