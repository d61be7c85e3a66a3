#include "fmvae/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>
#include <string>

#include "binary_io.hpp"
#include "fmvae/errors.hpp"
#include "fmvae/random.hpp"

namespace fmvae {

namespace {

constexpr char kDatasetMagic[8] = {'F', 'M', 'V', 'A', 'E', 'D', 'S', '1'};
constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t big_endian_u32(const std::vector<unsigned char>& bytes, std::size_t offset, const std::string& file) {
  if (offset + 4 > bytes.size()) throw FormatError("truncated IDX header in " + file, static_cast<long long>(offset));
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split(std::string_view line, char delimiter) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delimiter, start);
    cells.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

}  // namespace

Tensor Dataset::batch(std::span<const std::size_t> indices) const {
  std::vector<double> v(indices.size() * cols);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= rows) throw ContractViolation("dataset index " + std::to_string(indices[k]) + " out of range");
    std::copy_n(samples.data() + indices[k] * cols, cols, v.data() + k * cols);
  }
  return Tensor::from({indices.size(), cols}, std::move(v));
}

Tensor Dataset::all() const { return Tensor::from({rows, cols}, samples); }

void Dataset::validate() const {
  if (samples.size() != rows * cols) throw FormatError("dataset holds " + std::to_string(samples.size()) + " values for " +
                                                       std::to_string(rows) + " x " + std::to_string(cols));
  if (!metadata.empty() && metadata.size() != rows) throw FormatError("dataset metadata length does not match rows");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double v = samples[i];
    if (std::isnan(v)) throw FormatError("NaN in dataset row " + std::to_string(i / std::max<std::size_t>(cols, 1)));
    if (kind == DataKind::binary && v != 0.0 && v != 1.0) {
      throw FormatError("non-binary value in binary dataset row " + std::to_string(i / cols));
    }
  }
}

Dataset subset(const Dataset& data, std::size_t begin, std::size_t end) {
  if (begin > end || end > data.rows) throw ContractViolation("subset: bad row range");
  Dataset out;
  out.rows = end - begin;
  out.cols = data.cols;
  out.kind = data.kind;
  out.samples.assign(data.samples.begin() + static_cast<std::ptrdiff_t>(begin * data.cols),
                     data.samples.begin() + static_cast<std::ptrdiff_t>(end * data.cols));
  if (data.has_metadata()) {
    out.metadata.assign(data.metadata.begin() + static_cast<std::ptrdiff_t>(begin),
                        data.metadata.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pendulum

std::vector<double> pendulum_render(double angle_degrees) {
  double reduced = std::fmod(angle_degrees, 360.0);
  if (reduced < 0.0) reduced += 360.0;
  const double theta = reduced * std::numbers::pi / 180.0;
  const double centre = (static_cast<double>(kPendulumSide) - 1.0) / 2.0;
  const double tip_x = centre + kPendulumRodLength * std::sin(theta);
  const double tip_y = centre + kPendulumRodLength * std::cos(theta);
  const double dx = tip_x - centre;
  const double dy = tip_y - centre;
  const double len2 = dx * dx + dy * dy;

  std::vector<double> img(kPendulumSide * kPendulumSide);
  for (std::size_t r = 0; r < kPendulumSide; ++r) {
    for (std::size_t c = 0; c < kPendulumSide; ++c) {
      const double px = static_cast<double>(c);
      const double py = static_cast<double>(r);
      // distance from the pixel centre to the rod segment
      const double t = std::clamp(((px - centre) * dx + (py - centre) * dy) / len2, 0.0, 1.0);
      const double ex = px - (centre + t * dx);
      const double ey = py - (centre + t * dy);
      const double d = std::sqrt(ex * ex + ey * ey);
      const double rod = 0.5 * std::clamp(1.5 - d, 0.0, 1.0);
      const double bx = px - tip_x;
      const double by = py - tip_y;
      const double bob = std::exp(-(bx * bx + by * by) / (2.0 * kPendulumBobSigma * kPendulumBobSigma));
      img[r * kPendulumSide + c] = std::max(rod, bob);
    }
  }
  return img;
}

Dataset pendulum_dataset(const PendulumSpec& spec) {
  if (spec.noise_std < 0.0) throw ContractViolation("pendulum noise_std must be non-negative");
  Rng rng(spec.seed);
  Dataset data;
  data.rows = spec.count;
  data.cols = kPendulumSide * kPendulumSide;
  data.kind = DataKind::continuous;
  data.samples.reserve(data.rows * data.cols);
  data.metadata.reserve(data.rows);
  for (std::size_t i = 0; i < spec.count; ++i) {
    double angle = rng.uniform(0.0, 360.0);
    if (angle >= 360.0) angle = 0.0;
    data.metadata.push_back(angle);
    for (double v : pendulum_render(angle)) {
      data.samples.push_back(spec.noise_std > 0.0 ? v + spec.noise_std * rng.normal() : v);
    }
  }
  return data;
}

// ---------------------------------------------------------------------------
// MNIST IDX

Dataset mnist_load(const std::filesystem::path& images, const std::filesystem::path& labels,
                   std::optional<double> binarise_threshold) {
  const std::string image_name = images.string();
  const auto bytes = read_all(images);
  const std::uint32_t magic = big_endian_u32(bytes, 0, image_name);
  if (magic != kIdxImageMagic) throw FormatError("bad IDX image magic in " + image_name, 0);
  const std::size_t count = big_endian_u32(bytes, 4, image_name);
  const std::size_t height = big_endian_u32(bytes, 8, image_name);
  const std::size_t width = big_endian_u32(bytes, 12, image_name);
  const std::size_t pixels = height * width;
  const std::size_t need = 16 + count * pixels;
  if (bytes.size() < need) {
    throw FormatError("truncated IDX image data in " + image_name + ": need " + std::to_string(need) + " bytes",
                      static_cast<long long>(bytes.size()));
  }

  Dataset data;
  data.rows = count;
  data.cols = pixels;
  data.kind = binarise_threshold ? DataKind::binary : DataKind::continuous;
  data.samples.resize(count * pixels);
  for (std::size_t i = 0; i < count * pixels; ++i) {
    const double v = static_cast<double>(bytes[16 + i]) / 255.0;
    data.samples[i] = binarise_threshold ? (v > *binarise_threshold ? 1.0 : 0.0) : v;
  }

  if (!labels.empty()) {
    const std::string label_name = labels.string();
    const auto lb = read_all(labels);
    if (big_endian_u32(lb, 0, label_name) != kIdxLabelMagic) throw FormatError("bad IDX label magic in " + label_name, 0);
    const std::size_t label_count = big_endian_u32(lb, 4, label_name);
    if (label_count != count) {
      throw FormatError("label count " + std::to_string(label_count) + " does not match image count " +
                            std::to_string(count),
                        4);
    }
    if (lb.size() < 8 + count) throw FormatError("truncated IDX label data in " + label_name, static_cast<long long>(lb.size()));
    data.metadata.resize(count);
    for (std::size_t i = 0; i < count; ++i) data.metadata[i] = lb[8 + i];
  }
  return data;
}

// ---------------------------------------------------------------------------
// Delimited text

Dataset csv_load(const std::filesystem::path& path, char delimiter) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  Dataset data;
  std::string line;
  long long line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line, delimiter);
    std::vector<double> row;
    row.reserve(cells.size());
    bool numeric = true;
    for (auto cell : cells) {
      auto v = parse_number(cell);
      if (!v) {
        numeric = false;
        break;
      }
      row.push_back(*v);
    }
    if (!numeric) {
      if (first) {  // header
        first = false;
        continue;
      }
      throw FormatError("non-numeric cell in " + path.string() + " line", line_no);
    }
    first = false;
    if (data.rows == 0) {
      data.cols = row.size();
    } else if (row.size() != data.cols) {
      throw FormatError("ragged row in " + path.string() + ": expected " + std::to_string(data.cols) +
                            " cells, got " + std::to_string(row.size()) + " on line",
                        line_no);
    }
    data.samples.insert(data.samples.end(), row.begin(), row.end());
    ++data.rows;
  }
  data.validate();
  return data;
}

void csv_save(const Dataset& data, const std::filesystem::path& path, char delimiter) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  for (std::size_t c = 0; c < data.cols; ++c) out << (c ? std::string(1, delimiter) : "") << 'x' << c;
  out << '\n';
  char buf[32];
  for (std::size_t r = 0; r < data.rows; ++r) {
    for (std::size_t c = 0; c < data.cols; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", data.samples[r * data.cols + c]);
      if (c) out << delimiter;
      out << buf;
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Binary container

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  data.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(kDatasetMagic, sizeof kDatasetMagic);
  io::write<std::uint8_t>(out, data.kind == DataKind::binary ? 1 : 0);
  io::write<std::uint8_t>(out, data.has_metadata() ? 1 : 0);
  io::write<std::uint64_t>(out, data.rows);
  io::write<std::uint64_t>(out, data.cols);
  io::write_f64s(out, data.samples);
  if (data.has_metadata()) io::write_f64s(out, data.metadata);
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + 8, kDatasetMagic)) {
    throw FormatError("not an fmvae dataset file: " + path.string(), 0);
  }
  Dataset data;
  const auto kind = io::read<std::uint8_t>(in, "dataset kind");
  if (kind > 1) throw FormatError("bad dataset kind", 8);
  data.kind = kind == 1 ? DataKind::binary : DataKind::continuous;
  const bool has_meta = io::read<std::uint8_t>(in, "metadata flag") != 0;
  data.rows = io::read<std::uint64_t>(in, "row count");
  data.cols = io::read<std::uint64_t>(in, "column count");
  if (data.cols != 0 && data.rows > (std::uint64_t{1} << 40) / data.cols) throw FormatError("implausible dataset size", 10);
  data.samples = io::read_f64s(in, data.rows * data.cols, "dataset samples");
  if (has_meta) data.metadata = io::read_f64s(in, data.rows, "dataset metadata");
  data.validate();
  return data;
}

// ---------------------------------------------------------------------------
// Batches

BatchSchedule::BatchSchedule(std::size_t rows, std::size_t batch_size, std::uint64_t seed)
    : rows_(rows), batch_size_(batch_size), seed_(seed) {
  if (batch_size < 2) throw ContractViolation("batch size must be at least 2");
}

std::vector<std::size_t> BatchSchedule::permutation(std::uint64_t e) const {
  Rng rng(seed_ ^ (0x9E3779B97F4A7C15ULL * (e + 1)));
  return rng.permutation(rows_);
}

std::vector<std::vector<std::size_t>> BatchSchedule::epoch(std::uint64_t e) const {
  const auto perm = permutation(e);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t b = 0; b < batches_per_epoch(); ++b) {
    out.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(b * batch_size_),
                     perm.begin() + static_cast<std::ptrdiff_t>((b + 1) * batch_size_));
  }
  return out;
}

std::vector<std::size_t> BatchSchedule::for_step(std::uint64_t step) const {
  const std::size_t per_epoch = batches_per_epoch();
  if (per_epoch == 0) {
    throw ContractViolation("dataset of " + std::to_string(rows_) + " rows is smaller than one batch of " +
                            std::to_string(batch_size_));
  }
  const auto perm = permutation(step / per_epoch);
  const std::size_t b = step % per_epoch;
  return {perm.begin() + static_cast<std::ptrdiff_t>(b * batch_size_),
          perm.begin() + static_cast<std::ptrdiff_t>((b + 1) * batch_size_)};
}

}  // namespace fmvae
