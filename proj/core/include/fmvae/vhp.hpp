#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

#include "fmvae/nets.hpp"
#include "fmvae/random.hpp"
#include "fmvae/tensor.hpp"

namespace fmvae {

// The two networks of the learned prior p(z) = int p_Theta(z|zeta) p(zeta) dzeta,
// with q_Phi(zeta|z) as the importance proposal.
struct HierarchicalPrior {
  std::function<GaussianParams(const Tensor& z)> encode;     // q_Phi(zeta|z)
  std::function<GaussianParams(const Tensor& zeta)> decode;  // p_Theta(z|zeta)

  static HierarchicalPrior of(const FmvaeModel& model);
};

struct VhpEstimate {
  Tensor f_value;       // scalar, batch mean
  Tensor z_sample;      // [batch x N_z]
  Tensor zeta_samples;  // [batch*K x N_z], row b*K + k
};

// Importance-weighted upper bound on KL(q(z|x) || p(z)) for a given
// reparameterised z ~ posterior. `zeta_noise` is a standard-normal draw of
// shape [batch*K x N_z].
Tensor iw_kl_bound(const GaussianParams& posterior, const Tensor& z, const HierarchicalPrior& prior,
                   std::size_t k_importance, const Tensor& zeta_noise, Tensor* zeta_out = nullptr);

// Draws z ~ q_phi(z|x) and K zetas per z from the generator.
VhpEstimate kl_upper_bound(const FmvaeModel& model, const Tensor& x_batch, std::size_t k_importance, Rng& rng);

struct PriorSample {
  Tensor zeta;  // [n x N_z]
  Tensor z;     // [n x N_z]
};

// Ancestral sampling zeta ~ N(0, I), z ~ p_Theta(z|zeta). Never records.
PriorSample sample_prior(const HierarchicalPrior& prior, std::size_t latent_dim, std::size_t n, std::uint64_t seed);
PriorSample sample_prior(const FmvaeModel& model, std::size_t n, std::uint64_t seed);

}  // namespace fmvae
