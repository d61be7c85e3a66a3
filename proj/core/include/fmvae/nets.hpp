#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fmvae/adam.hpp"
#include "fmvae/random.hpp"
#include "fmvae/tensor.hpp"

namespace fmvae {

inline constexpr double kLogVarianceMin = -10.0;
inline constexpr double kLogVarianceMax = 10.0;

enum class Activation { relu, none };

// Fully connected layer y = act(x W + b). Copies are deep.
struct DenseLayer {
  Tensor weight;  // [in x out]
  Tensor bias;    // [out]
  Activation activation = Activation::none;

  DenseLayer() = default;
  DenseLayer(Tensor w, Tensor b, Activation act);
  DenseLayer(const DenseLayer& other);
  DenseLayer& operator=(const DenseLayer& other);
  DenseLayer(DenseLayer&&) noexcept = default;
  DenseLayer& operator=(DenseLayer&&) noexcept = default;

  std::size_t in_dim() const { return weight.shape()[0]; }
  std::size_t out_dim() const { return weight.shape()[1]; }
};

Tensor mlp_forward(std::span<const DenseLayer> layers, const Tensor& input);

class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<DenseLayer> layers);

  // ReLU hidden layers of the given widths followed by a linear output layer.
  // Weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  static Mlp make(std::size_t in, std::span<const std::size_t> hidden, std::size_t out, Rng& rng);

  Tensor forward(const Tensor& input) const { return mlp_forward(layers_, input); }
  std::size_t in_dim() const;
  std::size_t out_dim() const;
  const std::vector<DenseLayer>& layers() const { return layers_; }
  void append_parameters(const std::string& prefix, ParamList& out) const;

 private:
  std::vector<DenseLayer> layers_;
};

struct GaussianParams {
  Tensor mean;          // [batch x dim]
  Tensor log_variance;  // [batch x dim], clamped
};

// Splits a [batch x 2*dim] network output into mean and clamped log-variance.
GaussianParams gaussian_head(const Tensor& output);

// mean + exp(log_variance / 2) * noise.
Tensor reparam_sample(const GaussianParams& p, const Tensor& noise);

// Per-row diagonal Gaussian log density, shape [batch].
Tensor gaussian_logpdf(const Tensor& x, const GaussianParams& p);
Tensor standard_normal_logpdf(const Tensor& x);

// Per-row Bernoulli log likelihood of binary x under logits, shape [batch].
Tensor bernoulli_loglik(const Tensor& x, const Tensor& logits);

enum class Likelihood { gaussian, bernoulli };

const char* to_string(Likelihood likelihood);
Likelihood likelihood_from_string(const std::string& name);

struct Architecture {
  std::size_t data_dim = 0;
  std::size_t latent_dim = 2;
  std::vector<std::size_t> encoder_hidden{256, 256};
  std::vector<std::size_t> decoder_hidden{256, 256};
  std::vector<std::size_t> prior_encoder_hidden{256, 256};
  std::vector<std::size_t> prior_decoder_hidden{256, 256};
  Likelihood likelihood = Likelihood::gaussian;

  bool operator==(const Architecture&) const = default;
};

// The four networks of the hierarchical-prior VAE.
class FmvaeModel {
 public:
  FmvaeModel() = default;
  // Copies are deep: the copy owns fresh parameter tensors.
  FmvaeModel(const FmvaeModel& other);
  FmvaeModel& operator=(const FmvaeModel& other);
  FmvaeModel(FmvaeModel&&) noexcept = default;
  FmvaeModel& operator=(FmvaeModel&&) noexcept = default;

  static FmvaeModel make(const Architecture& arch, Rng& rng);

  // q_phi(z|x)
  GaussianParams encode(const Tensor& x) const;
  // Raw decoder output: the Gaussian mean, or Bernoulli logits.
  Tensor decode_raw(const Tensor& z) const;
  // Observation-space mean: the Gaussian mean, or sigmoid(logits).
  Tensor decode(const Tensor& z) const;
  // q_Phi(zeta|z)
  GaussianParams prior_encode(const Tensor& z) const;
  // p_Theta(z|zeta)
  GaussianParams prior_decode(const Tensor& zeta) const;

  // theta and phi: decoder and encoder weights (and the decoder variance).
  ParamList vae_parameters() const;
  // Theta and Phi: prior decoder and prior encoder weights.
  ParamList prior_parameters() const;
  ParamList all_parameters() const;

  const Architecture& architecture() const { return arch_; }
  Mlp& encoder() { return encoder_; }
  Mlp& decoder() { return decoder_; }
  Mlp& prior_encoder() { return prior_encoder_; }
  Mlp& prior_decoder() { return prior_decoder_; }
  const Mlp& encoder() const { return encoder_; }
  const Mlp& decoder() const { return decoder_; }
  const Tensor& decoder_log_variance() const { return decoder_log_variance_; }

 private:
  Architecture arch_;
  Mlp encoder_;
  Mlp decoder_;
  Mlp prior_encoder_;
  Mlp prior_decoder_;
  // Per-dimension decoder log-variance; not input dependent and not part of
  // the reconstruction constraint.
  Tensor decoder_log_variance_;
};

// Reconstruction term from raw decoder output: per-dimension mean squared
// error (gaussian) or per-dimension mean cross-entropy (bernoulli).
Tensor reconstruction_constraint(Likelihood likelihood, const Tensor& x, const Tensor& decoder_output);
Tensor reconstruction_constraint(const FmvaeModel& model, const Tensor& x, const Tensor& z);

}  // namespace fmvae
