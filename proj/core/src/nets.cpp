#include "fmvae/nets.hpp"

#include <cmath>

#include "fmvae/errors.hpp"

namespace fmvae {

namespace {

Tensor deep_copy(const Tensor& t) {
  if (!t.defined()) return t;
  return Tensor::from(t.shape(), std::vector<double>(t.values().begin(), t.values().end()), t.requires_grad());
}

constexpr double kLog2Pi = 1.8378770664093453;  // log(2*pi)

}  // namespace

DenseLayer::DenseLayer(Tensor w, Tensor b, Activation act)
    : weight(std::move(w)), bias(std::move(b)), activation(act) {
  if (weight.rank() != 2 || bias.rank() != 1 || bias.shape()[0] != weight.shape()[1]) {
    throw ContractViolation("dense layer: weight " + shape_to_string(weight.shape()) + " and bias " +
                            shape_to_string(bias.shape()) + " are inconsistent");
  }
}

DenseLayer::DenseLayer(const DenseLayer& other)
    : weight(deep_copy(other.weight)), bias(deep_copy(other.bias)), activation(other.activation) {}

DenseLayer& DenseLayer::operator=(const DenseLayer& other) {
  if (this != &other) {
    weight = deep_copy(other.weight);
    bias = deep_copy(other.bias);
    activation = other.activation;
  }
  return *this;
}

Tensor mlp_forward(std::span<const DenseLayer> layers, const Tensor& input) {
  if (layers.empty()) throw ContractViolation("mlp_forward: no layers");
  if (input.rank() != 2 || input.shape()[1] != layers.front().in_dim()) {
    throw ContractViolation("mlp_forward: input " + shape_to_string(input.shape()) + " does not match layer width " +
                            std::to_string(layers.front().in_dim()));
  }
  Tensor h = input;
  for (const auto& layer : layers) {
    h = add(matmul(h, layer.weight), layer.bias);
    if (layer.activation == Activation::relu) h = relu(h);
  }
  return h;
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t i = 1; i < layers_.size(); ++i) {
    if (layers_[i].in_dim() != layers_[i - 1].out_dim()) {
      throw ContractViolation("mlp: layer " + std::to_string(i) + " expects width " +
                              std::to_string(layers_[i].in_dim()) + " but receives " +
                              std::to_string(layers_[i - 1].out_dim()));
    }
  }
}

Mlp Mlp::make(std::size_t in, std::span<const std::size_t> hidden, std::size_t out, Rng& rng) {
  std::vector<DenseLayer> layers;
  std::size_t fan_in = in;
  auto add_layer = [&](std::size_t width, Activation act) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::vector<double> w(fan_in * width);
    std::vector<double> b(width);
    for (double& v : w) v = rng.uniform(-bound, bound);
    for (double& v : b) v = rng.uniform(-bound, bound);
    layers.emplace_back(Tensor::from({fan_in, width}, std::move(w), true), Tensor::from({width}, std::move(b), true),
                        act);
    fan_in = width;
  };
  for (std::size_t width : hidden) add_layer(width, Activation::relu);
  add_layer(out, Activation::none);
  return Mlp(std::move(layers));
}

std::size_t Mlp::in_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim(); }
std::size_t Mlp::out_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim(); }

void Mlp::append_parameters(const std::string& prefix, ParamList& out) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    out.push_back({prefix + "." + std::to_string(i) + ".weight", layers_[i].weight});
    out.push_back({prefix + "." + std::to_string(i) + ".bias", layers_[i].bias});
  }
}

GaussianParams gaussian_head(const Tensor& output) {
  if (output.rank() != 2 || output.shape()[1] % 2 != 0) {
    throw ContractViolation("gaussian_head: expected [batch x 2*dim], got " + shape_to_string(output.shape()));
  }
  const std::size_t d = output.shape()[1] / 2;
  return {slice(output, 1, 0, d), clamp(slice(output, 1, d, 2 * d), kLogVarianceMin, kLogVarianceMax)};
}

Tensor reparam_sample(const GaussianParams& p, const Tensor& noise) {
  if (noise.shape() != p.mean.shape()) {
    throw ContractViolation("reparam_sample: noise " + shape_to_string(noise.shape()) + " vs mean " +
                            shape_to_string(p.mean.shape()));
  }
  return add(p.mean, mul(exp(scale(p.log_variance, 0.5)), noise));
}

Tensor gaussian_logpdf(const Tensor& x, const GaussianParams& p) {
  if (x.rank() != 2 || x.shape() != p.mean.shape() || x.shape() != p.log_variance.shape()) {
    throw ContractViolation("gaussian_logpdf: x " + shape_to_string(x.shape()) + " vs mean " +
                            shape_to_string(p.mean.shape()));
  }
  const double dim = static_cast<double>(x.shape()[1]);
  Tensor quad = mul(square(sub(x, p.mean)), exp(scale(p.log_variance, -1.0)));
  return add_scalar(scale(sum(add(quad, p.log_variance), 1), -0.5), -0.5 * dim * kLog2Pi);
}

Tensor standard_normal_logpdf(const Tensor& x) {
  if (x.rank() != 2) throw ContractViolation("standard_normal_logpdf: needs [batch x dim]");
  const double dim = static_cast<double>(x.shape()[1]);
  return add_scalar(scale(sum(square(x), 1), -0.5), -0.5 * dim * kLog2Pi);
}

Tensor bernoulli_loglik(const Tensor& x, const Tensor& logits) {
  if (x.rank() != 2 || x.shape() != logits.shape()) {
    throw ContractViolation("bernoulli_loglik: x " + shape_to_string(x.shape()) + " vs logits " +
                            shape_to_string(logits.shape()));
  }
  for (double v : x.values()) {
    if (v != 0.0 && v != 1.0) throw ContractViolation("bernoulli_loglik: non-binary target " + std::to_string(v));
  }
  // x*l - log(1 + e^l) == x*log(sigmoid(l)) + (1-x)*log(1-sigmoid(l))
  return sum(sub(mul(x, logits), softplus(logits)), 1);
}

const char* to_string(Likelihood likelihood) {
  return likelihood == Likelihood::gaussian ? "gaussian" : "bernoulli";
}

Likelihood likelihood_from_string(const std::string& name) {
  if (name == "gaussian") return Likelihood::gaussian;
  if (name == "bernoulli") return Likelihood::bernoulli;
  throw ConfigError("unknown likelihood '" + name + "' (expected gaussian or bernoulli)");
}

FmvaeModel FmvaeModel::make(const Architecture& arch, Rng& rng) {
  if (arch.data_dim == 0 || arch.latent_dim == 0) throw ContractViolation("model dimensions must be positive");
  FmvaeModel m;
  m.arch_ = arch;
  const std::size_t nz = arch.latent_dim;
  m.encoder_ = Mlp::make(arch.data_dim, arch.encoder_hidden, 2 * nz, rng);
  m.decoder_ = Mlp::make(nz, arch.decoder_hidden, arch.data_dim, rng);
  m.prior_encoder_ = Mlp::make(nz, arch.prior_encoder_hidden, 2 * nz, rng);
  m.prior_decoder_ = Mlp::make(nz, arch.prior_decoder_hidden, 2 * nz, rng);
  m.decoder_log_variance_ = Tensor::zeros({arch.data_dim}, true);
  return m;
}

FmvaeModel::FmvaeModel(const FmvaeModel& other)
    : arch_(other.arch_),
      encoder_(other.encoder_),
      decoder_(other.decoder_),
      prior_encoder_(other.prior_encoder_),
      prior_decoder_(other.prior_decoder_),
      decoder_log_variance_(deep_copy(other.decoder_log_variance_)) {}

FmvaeModel& FmvaeModel::operator=(const FmvaeModel& other) {
  if (this != &other) *this = FmvaeModel(other);
  return *this;
}

GaussianParams FmvaeModel::encode(const Tensor& x) const { return gaussian_head(encoder_.forward(x)); }

Tensor FmvaeModel::decode_raw(const Tensor& z) const { return decoder_.forward(z); }

Tensor FmvaeModel::decode(const Tensor& z) const {
  Tensor out = decoder_.forward(z);
  return arch_.likelihood == Likelihood::bernoulli ? sigmoid(out) : out;
}

GaussianParams FmvaeModel::prior_encode(const Tensor& z) const { return gaussian_head(prior_encoder_.forward(z)); }

GaussianParams FmvaeModel::prior_decode(const Tensor& zeta) const {
  return gaussian_head(prior_decoder_.forward(zeta));
}

ParamList FmvaeModel::vae_parameters() const {
  ParamList out;
  encoder_.append_parameters("encoder", out);
  decoder_.append_parameters("decoder", out);
  out.push_back({"decoder.log_variance", decoder_log_variance_});
  return out;
}

ParamList FmvaeModel::prior_parameters() const {
  ParamList out;
  prior_encoder_.append_parameters("prior_encoder", out);
  prior_decoder_.append_parameters("prior_decoder", out);
  return out;
}

ParamList FmvaeModel::all_parameters() const {
  ParamList out = vae_parameters();
  for (auto& p : prior_parameters()) out.push_back(std::move(p));
  return out;
}

Tensor reconstruction_constraint(Likelihood likelihood, const Tensor& x, const Tensor& decoder_output) {
  if (x.shape() != decoder_output.shape() || x.rank() != 2) {
    throw ContractViolation("reconstruction_constraint: x " + shape_to_string(x.shape()) + " vs output " +
                            shape_to_string(decoder_output.shape()));
  }
  if (likelihood == Likelihood::gaussian) return mean(square(sub(x, decoder_output)));
  const double dim = static_cast<double>(x.shape()[1]);
  return scale(mean(bernoulli_loglik(x, decoder_output)), -1.0 / dim);
}

Tensor reconstruction_constraint(const FmvaeModel& model, const Tensor& x, const Tensor& z) {
  return reconstruction_constraint(model.architecture().likelihood, x, model.decode_raw(z));
}

}  // namespace fmvae
