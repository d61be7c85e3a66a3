#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "fmvae/tensor.hpp"

namespace fmvae {

enum class DataKind { continuous, binary };

// Row-major sample matrix. `metadata` holds one value per row (pendulum
// angle, digit label) for analysis colouring; training never reads it.
struct Dataset {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> samples;
  DataKind kind = DataKind::continuous;
  std::vector<double> metadata;

  std::span<const double> row(std::size_t i) const { return {samples.data() + i * cols, cols}; }
  Tensor batch(std::span<const std::size_t> indices) const;
  Tensor all() const;
  bool has_metadata() const { return metadata.size() == rows && rows > 0; }

  // Throws FormatError on NaNs, non-binary values in a binary set, or size
  // inconsistencies.
  void validate() const;
};

// Rows [begin, end) including metadata.
Dataset subset(const Dataset& data, std::size_t begin, std::size_t end);

inline constexpr std::size_t kPendulumSide = 16;
inline constexpr double kPendulumRodLength = 6.0;
inline constexpr double kPendulumBobSigma = 1.2;

struct PendulumSpec {
  std::size_t count = 15000;
  double noise_std = 0.05;
  std::uint64_t seed = 1;
};

// Noiseless 16x16 image in [0, 1]: a rod from the image centre towards the
// given angle (0 = straight down, increasing clockwise) with a Gaussian bob
// at its tip.
std::vector<double> pendulum_render(double angle_degrees);

// Angles ~ U[0, 360), pixels = render + N(0, noise_std^2). Angles go to
// metadata.
Dataset pendulum_dataset(const PendulumSpec& spec);

// IDX image file (magic 0x00000803) with an optional label file (magic
// 0x00000801). Pixels are scaled to [0, 1] and, when `binarise_threshold`
// is set, mapped to {0, 1} by `value > threshold`.
Dataset mnist_load(const std::filesystem::path& images, const std::filesystem::path& labels,
                   std::optional<double> binarise_threshold = 0.5);

// Numeric table, one sample per row. A first row containing any
// non-numeric cell is taken as a header.
Dataset csv_load(const std::filesystem::path& path, char delimiter = ',');
void csv_save(const Dataset& data, const std::filesystem::path& path, char delimiter = ',');

// Self-describing binary dataset container (see docs/formats.md).
void save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

// Seeded mini-batch order: epoch e uses its own permutation of the rows and
// the trailing short batch is dropped. Any step's batch can be recomputed
// directly, which is what makes training resumable.
class BatchSchedule {
 public:
  BatchSchedule(std::size_t rows, std::size_t batch_size, std::uint64_t seed);

  std::size_t batches_per_epoch() const { return rows_ / batch_size_; }
  std::vector<std::vector<std::size_t>> epoch(std::uint64_t e) const;
  std::vector<std::size_t> for_step(std::uint64_t step) const;

 private:
  std::vector<std::size_t> permutation(std::uint64_t e) const;

  std::size_t rows_;
  std::size_t batch_size_;
  std::uint64_t seed_;
};

}  // namespace fmvae
