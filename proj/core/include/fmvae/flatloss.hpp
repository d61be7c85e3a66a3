#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fmvae/nets.hpp"
#include "fmvae/random.hpp"
#include "fmvae/tensor.hpp"
#include "fmvae/train_config.hpp"

namespace fmvae {

inline constexpr double kAnalysisJacobianStep = 1e-4;

// Maps a latent batch [B x N_z] to observation space [B x N_x].
using DecodeFn = std::function<Tensor(const Tensor&)>;

DecodeFn decoder_of(const FmvaeModel& model);

// Column t of each sample's Jacobian, stacked over the batch: columns[t] is
// [B x N_x] with row b = (f(z_b + h e_t) - f(z_b)) / h.
struct BatchJacobian {
  std::vector<Tensor> columns;
};

// Forward-difference Jacobian. All 1 + N_z shifted copies go through one
// decoder call, so gradients w.r.t. decoder weights flow through the
// difference quotient without second-order differentiation.
BatchJacobian approx_jacobian(const DecodeFn& decoder, const Tensor& z, double h);

// Flattened per-sample metrics G = J^T J as [B x N_z*N_z] (row-major a*N_z + b).
Tensor metric_tensor(const BatchJacobian& jacobian);

// Single-sample forms used by the geometry analysis.
struct MetricSample {
  Eigen::VectorXd z;
  Eigen::MatrixXd jacobian;  // [N_x x N_z]
  Eigen::MatrixXd metric;    // [N_z x N_z]
};

Eigen::MatrixXd metric_tensor(const Eigen::MatrixXd& jacobian);
std::vector<MetricSample> metric_samples(const DecodeFn& decoder, const Tensor& z,
                                         double h = kAnalysisJacobianStep);

struct MixupDraws {
  std::vector<std::size_t> partner;  // z_j = z[partner[i]]
  std::vector<double> alpha;
  Tensor z_aug;
};

// (1 - alpha_i) z_i + alpha_i z_partner(i), differentiable in z.
Tensor mixup_apply(const Tensor& z, std::span<const std::size_t> partner, std::span<const double> alpha);
// Partners from a permutation of the batch, alpha ~ U(-alpha0, 1 + alpha0).
MixupDraws mixup_batch(const Tensor& z, Rng& rng, double alpha0);
MixupDraws mixup_batch(const Tensor& z, std::uint64_t seed, double alpha0);

// c^2 = mean over the batch of tr(G) / N_z. A plain number: no gradient.
double scale_factor(const Tensor& metrics, std::size_t latent_dim);

// Mean over the batch of the squared Frobenius norm of G - c^2 I.
Tensor flat_penalty(const Tensor& metrics, std::size_t latent_dim, double c_squared);

struct LossTerms {
  Tensor constraint;  // C, scalar
  Tensor kl_bound;    // F, scalar
  Tensor penalty;     // R, scalar (not recorded when eta == 0)
  double c_squared = 0.0;
};

struct LossBreakdown {
  double total = 0.0;
  double constraint_c = 0.0;
  double kl_bound_f = 0.0;
  double flat_penalty = 0.0;
  double c_squared = 0.0;
};

// Draws z, zetas and mixup partners from `rng` in that order and evaluates
// the three objective terms on `x_batch`.
LossTerms fmvae_loss_terms(const FmvaeModel& model, const Tensor& x_batch, const TrainConfig& config, Rng& rng);

// C + beta F + eta R.
Tensor combine_loss(const LossTerms& terms, double beta, double eta);

LossBreakdown breakdown(const LossTerms& terms, const Tensor& total);

struct LossResult {
  LossTerms terms;
  Tensor total;
  LossBreakdown values;
};

// Throws TrainingFault naming the first non-finite component.
LossResult fmvae_loss(const FmvaeModel& model, const Tensor& x_batch, double beta, const TrainConfig& config, Rng& rng);

}  // namespace fmvae
