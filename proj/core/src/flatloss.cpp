#include "fmvae/flatloss.hpp"

#include <cmath>
#include <string>

#include "fmvae/errors.hpp"
#include "fmvae/vhp.hpp"

namespace fmvae {

DecodeFn decoder_of(const FmvaeModel& model) {
  const FmvaeModel* m = &model;
  return [m](const Tensor& z) { return m->decode(z); };
}

BatchJacobian approx_jacobian(const DecodeFn& decoder, const Tensor& z, double h) {
  if (!(h > 0.0)) throw ContractViolation("approx_jacobian: step must be positive");
  if (z.rank() != 2) throw ContractViolation("approx_jacobian: z must be [batch x N_z], got " + shape_to_string(z.shape()));
  const std::size_t batch = z.shape()[0];
  const std::size_t nz = z.shape()[1];

  std::vector<Tensor> shifted{z};
  for (std::size_t t = 0; t < nz; ++t) {
    std::vector<double> e(nz, 0.0);
    e[t] = h;
    shifted.push_back(add(z, Tensor::from({nz}, std::move(e))));
  }
  const Tensor out = decoder(concat(shifted, 0));
  if (out.rank() != 2 || out.shape()[0] != (nz + 1) * batch) {
    throw ContractViolation("approx_jacobian: decoder returned " + shape_to_string(out.shape()));
  }
  const Tensor base = slice(out, 0, 0, batch);
  BatchJacobian jac;
  for (std::size_t t = 0; t < nz; ++t) {
    jac.columns.push_back(scale(sub(slice(out, 0, (t + 1) * batch, (t + 2) * batch), base), 1.0 / h));
  }
  return jac;
}

Tensor metric_tensor(const BatchJacobian& jacobian) {
  const std::size_t nz = jacobian.columns.size();
  if (nz == 0) throw ContractViolation("metric_tensor: empty Jacobian");
  const std::size_t batch = jacobian.columns[0].shape()[0];
  std::vector<Tensor> entries(nz * nz);
  for (std::size_t a = 0; a < nz; ++a) {
    for (std::size_t b = a; b < nz; ++b) {
      Tensor g = reshape(sum(mul(jacobian.columns[a], jacobian.columns[b]), 1), {batch, 1});
      entries[a * nz + b] = g;
      entries[b * nz + a] = g;
    }
  }
  return concat(entries, 1);
}

Eigen::MatrixXd metric_tensor(const Eigen::MatrixXd& jacobian) { return jacobian.transpose() * jacobian; }

std::vector<MetricSample> metric_samples(const DecodeFn& decoder, const Tensor& z, double h) {
  NoGradGuard no_grad;
  const BatchJacobian jac = approx_jacobian(decoder, z, h);
  const std::size_t batch = z.shape()[0];
  const std::size_t nz = z.shape()[1];
  const std::size_t nx = jac.columns[0].shape()[1];
  std::vector<MetricSample> out(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    auto& s = out[b];
    s.z.resize(static_cast<Eigen::Index>(nz));
    for (std::size_t t = 0; t < nz; ++t) s.z(static_cast<Eigen::Index>(t)) = z(b, t);
    s.jacobian.resize(static_cast<Eigen::Index>(nx), static_cast<Eigen::Index>(nz));
    for (std::size_t t = 0; t < nz; ++t) {
      const auto col = jac.columns[t].values().subspan(b * nx, nx);
      for (std::size_t i = 0; i < nx; ++i)
        s.jacobian(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = col[i];
    }
    s.metric = metric_tensor(s.jacobian);
  }
  return out;
}

Tensor mixup_apply(const Tensor& z, std::span<const std::size_t> partner, std::span<const double> alpha) {
  if (z.rank() != 2 || partner.size() != z.shape()[0] || alpha.size() != z.shape()[0]) {
    throw ContractViolation("mixup_apply: partner/alpha sizes do not match batch " + shape_to_string(z.shape()));
  }
  std::vector<double> keep(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) keep[i] = 1.0 - alpha[i];
  return add(scale_rows(z, keep), scale_rows(gather_rows(z, partner), alpha));
}

MixupDraws mixup_batch(const Tensor& z, Rng& rng, double alpha0) {
  if (z.rank() != 2 || z.shape()[0] < 2) {
    throw ContractViolation("mixup_batch: needs at least 2 latent samples, got " + shape_to_string(z.shape()));
  }
  if (alpha0 < 0.0) throw ContractViolation("mixup_batch: alpha0 must be non-negative");
  MixupDraws d;
  d.partner = rng.permutation(z.shape()[0]);
  d.alpha.resize(z.shape()[0]);
  for (double& a : d.alpha) a = rng.uniform(-alpha0, 1.0 + alpha0);
  d.z_aug = mixup_apply(z, d.partner, d.alpha);
  return d;
}

MixupDraws mixup_batch(const Tensor& z, std::uint64_t seed, double alpha0) {
  Rng rng(seed);
  return mixup_batch(z, rng, alpha0);
}

double scale_factor(const Tensor& metrics, std::size_t latent_dim) {
  if (metrics.rank() != 2 || metrics.shape()[1] != latent_dim * latent_dim || metrics.shape()[0] == 0) {
    throw ContractViolation("scale_factor: metrics " + shape_to_string(metrics.shape()) + " for N_z = " +
                            std::to_string(latent_dim));
  }
  const std::size_t batch = metrics.shape()[0];
  double trace_sum = 0.0;
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t a = 0; a < latent_dim; ++a) trace_sum += metrics(b, a * latent_dim + a);
  return trace_sum / static_cast<double>(batch * latent_dim);
}

Tensor flat_penalty(const Tensor& metrics, std::size_t latent_dim, double c_squared) {
  if (metrics.rank() != 2 || metrics.shape()[1] != latent_dim * latent_dim) {
    throw ContractViolation("flat_penalty: metrics " + shape_to_string(metrics.shape()) + " for N_z = " +
                            std::to_string(latent_dim));
  }
  std::vector<double> target(latent_dim * latent_dim, 0.0);
  for (std::size_t a = 0; a < latent_dim; ++a) target[a * latent_dim + a] = c_squared;
  const Tensor diff = sub(metrics, Tensor::from({latent_dim * latent_dim}, std::move(target)));
  return mean(sum(square(diff), 1));
}

namespace {

struct Penalty {
  Tensor value;
  double c_squared;
};

Penalty penalty_at(const FmvaeModel& model, const Tensor& z_aug, const TrainConfig& config) {
  const std::size_t nz = model.architecture().latent_dim;
  const Tensor metrics = metric_tensor(approx_jacobian(decoder_of(model), z_aug, config.jacobian_step_train));
  const double c2 = config.fixed_c2 ? *config.fixed_c2 : scale_factor(metrics, nz);
  return {flat_penalty(metrics, nz, c2), c2};
}

}  // namespace

LossTerms fmvae_loss_terms(const FmvaeModel& model, const Tensor& x_batch, const TrainConfig& config, Rng& rng) {
  if (x_batch.rank() != 2 || x_batch.shape()[0] == 0) throw ContractViolation("fmvae_loss: empty batch");
  const std::size_t batch = x_batch.shape()[0];
  const std::size_t nz = model.architecture().latent_dim;

  const GaussianParams posterior = model.encode(x_batch);
  const Tensor z = reparam_sample(posterior, rng.normal_tensor({batch, nz}));

  LossTerms terms;
  terms.constraint = reconstruction_constraint(model, x_batch, z);
  terms.kl_bound = iw_kl_bound(posterior, z, HierarchicalPrior::of(model), config.k_importance,
                               rng.normal_tensor({batch * config.k_importance, nz}));

  const Tensor z_aug = config.mixup_enabled ? mixup_batch(z, rng, config.alpha0).z_aug : z;
  if (config.eta > 0.0) {
    Penalty p = penalty_at(model, z_aug, config);
    terms.penalty = p.value;
    terms.c_squared = p.c_squared;
  } else {
    // Off the tape: logged for comparison only.
    NoGradGuard no_grad;
    Penalty p = penalty_at(model, z_aug.detach(), config);
    terms.penalty = p.value.detach();
    terms.c_squared = p.c_squared;
  }
  return terms;
}

Tensor combine_loss(const LossTerms& terms, double beta, double eta) {
  Tensor total = add(terms.constraint, scale(terms.kl_bound, beta));
  if (eta > 0.0) total = add(total, scale(terms.penalty, eta));
  return total;
}

LossBreakdown breakdown(const LossTerms& terms, const Tensor& total) {
  return {total.item(), terms.constraint.item(), terms.kl_bound.item(), terms.penalty.item(), terms.c_squared};
}

LossResult fmvae_loss(const FmvaeModel& model, const Tensor& x_batch, double beta, const TrainConfig& config,
                      Rng& rng) {
  if (!(beta > 0.0)) throw ContractViolation("fmvae_loss: beta must be positive");
  LossResult r;
  r.terms = fmvae_loss_terms(model, x_batch, config, rng);
  r.total = combine_loss(r.terms, beta, config.eta);
  r.values = breakdown(r.terms, r.total);
  const std::pair<const char*, double> checks[] = {{"constraint", r.values.constraint_c},
                                                   {"kl_bound", r.values.kl_bound_f},
                                                   {"flat_penalty", r.values.flat_penalty},
                                                   {"c_squared", r.values.c_squared},
                                                   {"total", r.values.total}};
  for (const auto& [name, value] : checks) {
    if (!std::isfinite(value)) throw TrainingFault(std::string("non-finite loss component ") + name);
  }
  return r;
}

}  // namespace fmvae
