#include <doctest.h>

#include <Eigen/Core>
#include <cmath>

#include "fmvae/errors.hpp"
#include "fmvae/nets.hpp"
#include "fmvae/random.hpp"
#include "gradcheck.hpp"

using namespace fmvae;
using fmvae::testing::to_vector;

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

RowMat as_matrix(const Tensor& t) {
  RowMat m(t.rows(), t.cols());
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) m(r, c) = t(r, c);
  return m;
}

GaussianParams params_of(Shape shape, std::vector<double> mean, std::vector<double> lv) {
  return {Tensor::from(shape, std::move(mean)), Tensor::from(shape, std::move(lv))};
}

}  // namespace

TEST_SUITE("nets") {

TEST_CASE("identity layer passes input through") {
  const DenseLayer layer(Tensor::identity(3), Tensor::zeros({3}), Activation::none);
  const Tensor x = Tensor::from({2, 3}, {1, -2, 3, 4, 5, -6});
  CHECK(to_vector(mlp_forward(std::span(&layer, 1), x)) == to_vector(x));
}

TEST_CASE("relu layer with negative pre-activations outputs zeros") {
  const DenseLayer layer(Tensor::identity(2), Tensor::from({2}, {-10, -10}), Activation::relu);
  const Tensor out = mlp_forward(std::span(&layer, 1), Tensor::from({1, 2}, {1, 2}));
  CHECK(to_vector(out) == std::vector<double>{0, 0});
}

TEST_CASE("width mismatch is a contract violation") {
  const DenseLayer layer(Tensor::identity(3), Tensor::zeros({3}), Activation::none);
  CHECK_THROWS_AS((void)mlp_forward(std::span(&layer, 1), Tensor::zeros({1, 2})), ContractViolation);
}

TEST_CASE("random network matches a matrix-chain re-evaluation") {
  Rng rng(5);
  const std::size_t hidden[] = {7, 5};
  const Mlp net = Mlp::make(4, hidden, 3, rng);
  const Tensor x = rng.normal_tensor({6, 4});
  RowMat h = as_matrix(x);
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    const auto& l = net.layers()[i];
    h = (h * as_matrix(l.weight)).rowwise() + as_matrix(reshape(l.bias, {1, l.out_dim()})).row(0);
    if (i + 1 < net.layers().size()) h = h.cwiseMax(0.0);
  }
  const RowMat out = as_matrix(net.forward(x));
  CHECK((out - h).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("initialisation is fan-in scaled and seeded") {
  Rng a(9);
  Rng b(9);
  const std::size_t hidden[] = {16};
  const Mlp n1 = Mlp::make(25, hidden, 2, a);
  const Mlp n2 = Mlp::make(25, hidden, 2, b);
  CHECK(to_vector(n1.layers()[0].weight) == to_vector(n2.layers()[0].weight));
  for (double w : n1.layers()[0].weight.values()) CHECK(std::abs(w) <= 0.2);
}

TEST_CASE("reparameterisation") {
  const GaussianParams p = params_of({1, 2}, {0.5, -1.5}, {0.0, 0.0});
  CHECK(to_vector(reparam_sample(p, Tensor::zeros({1, 2}))) == std::vector<double>{0.5, -1.5});
  CHECK(to_vector(reparam_sample(p, Tensor::full({1, 2}, 1.0))) == std::vector<double>{1.5, -0.5});
  CHECK_THROWS_AS((void)reparam_sample(p, Tensor::zeros({2, 2})), ContractViolation);
}

TEST_CASE("reparameterised samples have the right mean") {
  const std::size_t n = 100000;
  const GaussianParams p{Tensor::full({n, 1}, 0.7), Tensor::full({n, 1}, std::log(4.0))};
  Rng rng(17);
  const Tensor s = reparam_sample(p, rng.normal_tensor({n, 1}));
  const double m = mean(s).item();
  const double standard_error = 2.0 / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(m - 0.7) <= 3.0 * standard_error);
}

TEST_CASE("reparameterisation has unit gradient in the mean") {
  Tensor mu = Tensor::from({2, 2}, {0.1, 0.2, 0.3, 0.4}, true);
  const Tensor lv = Tensor::from({2, 2}, {0.5, -0.5, 1.0, 0.0});
  backward(sum(reparam_sample({mu, lv}, Tensor::from({2, 2}, {1, -1, 0.5, 2}))));
  for (double g : mu.grad()) CHECK(g == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gaussian log density examples") {
  CHECK(gaussian_logpdf(Tensor::zeros({1, 1}), params_of({1, 1}, {0}, {0})).item() ==
        doctest::Approx(-0.9189385332046727).epsilon(1e-14));
  CHECK(gaussian_logpdf(Tensor::from({1, 2}, {3, -4}), params_of({1, 2}, {3, -4}, {0, 0})).item() ==
        doctest::Approx(-1.8378770664093453).epsilon(1e-14));
}

TEST_CASE("gaussian log density matches a direct evaluation") {
  Rng rng(21);
  const Tensor x = rng.normal_tensor({4, 3});
  const GaussianParams p{rng.normal_tensor({4, 3}), rng.normal_tensor({4, 3})};
  const Tensor lp = gaussian_logpdf(x, p);
  for (std::size_t r = 0; r < 4; ++r) {
    double expect = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      const double var = std::exp(p.log_variance(r, c));
      const double d = x(r, c) - p.mean(r, c);
      expect += -0.5 * std::log(2.0 * M_PI) - 0.5 * p.log_variance(r, c) - d * d / (2.0 * var);
    }
    CHECK(lp[r] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("gaussian log density is stationary at the mean") {
  Tensor x = Tensor::from({1, 3}, {0.3, -1.0, 2.0}, true);
  const GaussianParams p = params_of({1, 3}, {0.3, -1.0, 2.0}, {0.2, -0.4, 1.0});
  backward(sum(gaussian_logpdf(x, p)));
  for (double g : x.grad()) CHECK(std::abs(g) < 1e-12);
  NoGradGuard guard;
  const double at_mean = gaussian_logpdf(x, p).item();
  const double off = gaussian_logpdf(Tensor::from({1, 3}, {0.31, -1.0, 2.0}), p).item();
  CHECK(off < at_mean);
}

TEST_CASE("bernoulli log likelihood examples") {
  const Tensor x = Tensor::from({1, 3}, {0, 1, 1});
  CHECK(bernoulli_loglik(x, Tensor::zeros({1, 3})).item() == doctest::Approx(-3.0 * std::log(2.0)).epsilon(1e-14));
  CHECK(std::abs(bernoulli_loglik(Tensor::from({1, 1}, {1}), Tensor::from({1, 1}, {60.0})).item()) < 1e-25);
  CHECK_THROWS_AS((void)bernoulli_loglik(Tensor::from({1, 1}, {0.5}), Tensor::zeros({1, 1})), ContractViolation);
}

TEST_CASE("bernoulli log likelihood matches the direct formula") {
  Rng rng(4);
  const Tensor logits = rng.normal_tensor({3, 5});
  std::vector<double> xv(15);
  for (std::size_t i = 0; i < 15; ++i) xv[i] = static_cast<double>((i * 7) % 3 == 0);
  const Tensor x = Tensor::from({3, 5}, xv);
  const Tensor ll = bernoulli_loglik(x, logits);
  for (std::size_t r = 0; r < 3; ++r) {
    double expect = 0.0;
    for (std::size_t c = 0; c < 5; ++c) {
      const double p = 1.0 / (1.0 + std::exp(-logits(r, c)));
      expect += x(r, c) * std::log(p) + (1.0 - x(r, c)) * std::log(1.0 - p);
    }
    CHECK(ll[r] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("reconstruction constraint examples") {
  const Tensor x = Tensor::from({2, 3}, {0.1, 0.2, 0.3, -1, 0, 1});
  CHECK(reconstruction_constraint(Likelihood::gaussian, x, x).item() == 0.0);
  CHECK(reconstruction_constraint(Likelihood::gaussian, x, add_scalar(x, 0.1)).item() ==
        doctest::Approx(0.01).epsilon(1e-12));
  const Tensor bits = Tensor::from({2, 2}, {0, 1, 1, 1});
  CHECK(reconstruction_constraint(Likelihood::bernoulli, bits, Tensor::zeros({2, 2})).item() ==
        doctest::Approx(0.6931471805599453).epsilon(1e-14));
}

TEST_CASE("reconstruction constraint is non-negative") {
  Rng rng(8);
  for (int i = 0; i < 20; ++i) {
    const Tensor out = rng.normal_tensor({4, 6});
    CHECK(reconstruction_constraint(Likelihood::gaussian, rng.normal_tensor({4, 6}), out).item() > 0.0);
    std::vector<double> bits(24);
    for (double& b : bits) b = static_cast<double>(rng.next() % 2);
    CHECK(reconstruction_constraint(Likelihood::bernoulli, Tensor::from({4, 6}, bits), out).item() > 0.0);
  }
}

TEST_CASE("model parameter groups and deep copies") {
  Architecture arch;
  arch.data_dim = 5;
  arch.encoder_hidden = {4};
  arch.decoder_hidden = {4};
  arch.prior_encoder_hidden = {3};
  arch.prior_decoder_hidden = {3};
  Rng rng(1);
  FmvaeModel model = FmvaeModel::make(arch, rng);
  const ParamList vae = model.vae_parameters();
  const ParamList prior = model.prior_parameters();
  CHECK(vae.front().name == "encoder.0.weight");
  CHECK(model.all_parameters().size() == vae.size() + prior.size());
  FmvaeModel copy = model;
  copy.vae_parameters()[0].tensor.mutable_values()[0] += 1.0;
  CHECK(copy.vae_parameters()[0].tensor[0] != model.vae_parameters()[0].tensor[0]);

  const Tensor x = rng.normal_tensor({3, 5});
  const GaussianParams q = model.encode(x);
  CHECK(q.mean.shape() == Shape{3, 2});
  CHECK(model.decode(q.mean).shape() == Shape{3, 5});
  CHECK(model.prior_decode(q.mean).mean.shape() == Shape{3, 2});
  for (double lv : q.log_variance.values()) CHECK((lv >= kLogVarianceMin && lv <= kLogVarianceMax));
}

TEST_CASE("likelihood names") {
  CHECK(likelihood_from_string("bernoulli") == Likelihood::bernoulli);
  CHECK(std::string(to_string(Likelihood::gaussian)) == "gaussian");
  CHECK_THROWS_AS((void)likelihood_from_string("poisson"), ConfigError);
}

}  // TEST_SUITE
