#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fmvae/tensor.hpp"

namespace fmvae {

// The single seeded generator every stochastic operation draws from.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  std::uint64_t next() { return engine_(); }

  Tensor normal_tensor(Shape shape) {
    std::vector<double> v(shape_size(shape));
    for (double& x : v) x = normal();
    return Tensor::from(std::move(shape), std::move(v));
  }

  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    std::shuffle(p.begin(), p.end(), engine_);
    return p;
  }

  std::mt19937_64& engine() { return engine_; }

  // Text form of the full generator state, including the normal
  // distribution's cached draw.
  std::string serialize() const {
    std::ostringstream os;
    os << engine_ << ' ' << normal_;
    return os.str();
  }

  static Rng deserialize(const std::string& text) {
    Rng rng;
    std::istringstream is(text);
    is >> rng.engine_ >> rng.normal_;
    return rng;
  }

  bool operator==(const Rng& other) const { return engine_ == other.engine_ && normal_ == other.normal_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace fmvae
