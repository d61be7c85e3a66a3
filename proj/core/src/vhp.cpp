#include "fmvae/vhp.hpp"

#include <cmath>

#include "fmvae/errors.hpp"

namespace fmvae {

HierarchicalPrior HierarchicalPrior::of(const FmvaeModel& model) {
  // Captures by pointer: the prior must not outlive the model.
  const FmvaeModel* m = &model;
  return {[m](const Tensor& z) { return m->prior_encode(z); },
          [m](const Tensor& zeta) { return m->prior_decode(zeta); }};
}

Tensor iw_kl_bound(const GaussianParams& posterior, const Tensor& z, const HierarchicalPrior& prior,
                   std::size_t k_importance, const Tensor& zeta_noise, Tensor* zeta_out) {
  if (k_importance < 1) throw ContractViolation("iw_kl_bound: K must be at least 1");
  if (z.rank() != 2 || z.shape()[0] == 0) throw ContractViolation("iw_kl_bound: empty latent batch");
  const std::size_t batch = z.shape()[0];
  const std::size_t nz = z.shape()[1];
  if (zeta_noise.shape() != Shape{batch * k_importance, nz}) {
    throw ContractViolation("iw_kl_bound: zeta noise " + shape_to_string(zeta_noise.shape()) + ", expected " +
                            shape_to_string({batch * k_importance, nz}));
  }

  const Tensor log_q_z = gaussian_logpdf(z, posterior);  // [B]

  const GaussianParams proposal = prior.encode(z);
  const GaussianParams proposal_rep{repeat_rows(proposal.mean, k_importance),
                                    repeat_rows(proposal.log_variance, k_importance)};
  const Tensor zeta = reparam_sample(proposal_rep, zeta_noise);  // [B*K x N_z]
  const Tensor z_rep = repeat_rows(z, k_importance);

  // log p_Theta(z|zeta_k) + log p(zeta_k) - log q_Phi(zeta_k|z)
  const Tensor log_w = sub(add(gaussian_logpdf(z_rep, prior.decode(zeta)), standard_normal_logpdf(zeta)),
                           gaussian_logpdf(zeta, proposal_rep));
  const Tensor log_mean_w =
      add_scalar(logsumexp_rows(reshape(log_w, {batch, k_importance})), -std::log(static_cast<double>(k_importance)));

  if (zeta_out) *zeta_out = zeta;
  return mean(sub(log_q_z, log_mean_w));
}

VhpEstimate kl_upper_bound(const FmvaeModel& model, const Tensor& x_batch, std::size_t k_importance, Rng& rng) {
  if (x_batch.rank() != 2 || x_batch.shape()[0] == 0) throw ContractViolation("kl_upper_bound: empty batch");
  if (k_importance < 1) throw ContractViolation("kl_upper_bound: K must be at least 1");
  const std::size_t batch = x_batch.shape()[0];
  const std::size_t nz = model.architecture().latent_dim;
  const GaussianParams posterior = model.encode(x_batch);
  const Tensor z = reparam_sample(posterior, rng.normal_tensor({batch, nz}));
  VhpEstimate out;
  out.z_sample = z;
  out.f_value = iw_kl_bound(posterior, z, HierarchicalPrior::of(model), k_importance,
                            rng.normal_tensor({batch * k_importance, nz}), &out.zeta_samples);
  return out;
}

PriorSample sample_prior(const HierarchicalPrior& prior, std::size_t latent_dim, std::size_t n, std::uint64_t seed) {
  if (n == 0) return {Tensor::zeros({0, latent_dim}), Tensor::zeros({0, latent_dim})};
  NoGradGuard no_grad;
  Rng rng(seed);
  Tensor zeta = rng.normal_tensor({n, latent_dim});
  const GaussianParams p = prior.decode(zeta);
  Tensor z = reparam_sample(p, rng.normal_tensor({n, latent_dim}));
  return {std::move(zeta), std::move(z)};
}

PriorSample sample_prior(const FmvaeModel& model, std::size_t n, std::uint64_t seed) {
  return sample_prior(HierarchicalPrior::of(model), model.architecture().latent_dim, n, seed);
}

}  // namespace fmvae
