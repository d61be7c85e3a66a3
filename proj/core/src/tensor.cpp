#include "fmvae/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fmvae/errors.hpp"

namespace fmvae {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using NodePtr = std::shared_ptr<detail::Node>;

thread_local bool g_grad_enabled = true;

NodePtr leaf(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_size(shape) != values.size()) {
    throw ContractViolation("tensor of shape " + shape_to_string(shape) + " needs " +
                            std::to_string(shape_size(shape)) + " values, got " +
                            std::to_string(values.size()));
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  node->requires_grad = requires_grad;
  return node;
}

const detail::Node& node_of(const Tensor& t) {
  if (!t.defined()) throw ContractViolation("operation on an undefined tensor");
  return *t.node();
}

// Builds an op result. The backward rule is only attached (and the node only
// recorded) when grad mode is on and some input requires a gradient.
Tensor make_result(Shape shape, std::vector<double> values, std::vector<NodePtr> inputs,
                   std::function<void(detail::Node&)> backward_rule) {
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  const bool needs = g_grad_enabled && std::any_of(inputs.begin(), inputs.end(),
                                                   [](const NodePtr& n) { return n->requires_grad; });
  if (needs) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward = std::move(backward_rule);
    Tape::current().record(node);
  }
  return Tensor(node);
}

void require_finite(const std::vector<double>& values, const char* op) {
  for (double v : values) {
    if (!std::isfinite(v)) throw DomainError(std::string(op) + " produced a non-finite value");
  }
}

enum class Broadcast { none, rhs, lhs };

Broadcast broadcast_mode(const Shape& a, const Shape& b, const char* op) {
  if (a == b) return Broadcast::none;
  if (b.size() + 1 == a.size() && std::equal(b.begin(), b.end(), a.begin() + 1)) return Broadcast::rhs;
  if (a.size() + 1 == b.size() && std::equal(a.begin(), a.end(), b.begin() + 1)) return Broadcast::lhs;
  throw ContractViolation(std::string(op) + ": shapes " + shape_to_string(a) + " and " +
                          shape_to_string(b) + " do not conform");
}

// Shared driver for elementwise binaries: f(x, y) forward, and the partials
// dfdx(x, y), dfdy(x, y).
template <class F, class Dx, class Dy>
Tensor binary(const Tensor& a, const Tensor& b, const char* op, F f, Dx dfdx, Dy dfdy) {
  const auto& na = node_of(a);
  const auto& nb = node_of(b);
  const Broadcast mode = broadcast_mode(na.shape, nb.shape, op);
  const bool lhs_big = mode != Broadcast::lhs;
  const Shape& out_shape = lhs_big ? na.shape : nb.shape;
  const std::size_t n = shape_size(out_shape);
  const std::size_t small = lhs_big ? nb.values.size() : na.values.size();
  // index into each operand for output element i
  auto ia = [mode, small](std::size_t i) { return mode == Broadcast::lhs ? i % small : i; };
  auto ib = [mode, small](std::size_t i) { return mode == Broadcast::rhs ? i % small : i; };

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = f(na.values[ia(i)], nb.values[ib(i)]);

  return make_result(out_shape, std::move(out), {a.node(), b.node()},
                     [ia, ib, n, dfdx, dfdy](detail::Node& self) {
                       auto& x = *self.inputs[0];
                       auto& y = *self.inputs[1];
                       if (x.requires_grad) {
                         auto& g = x.ensure_grad();
                         for (std::size_t i = 0; i < n; ++i)
                           g[ia(i)] += self.grad[i] * dfdx(x.values[ia(i)], y.values[ib(i)]);
                       }
                       if (y.requires_grad) {
                         auto& g = y.ensure_grad();
                         for (std::size_t i = 0; i < n; ++i)
                           g[ib(i)] += self.grad[i] * dfdy(x.values[ia(i)], y.values[ib(i)]);
                       }
                     });
}

// Elementwise unary with derivative expressed via (input, output).
template <class F, class D>
Tensor unary(const Tensor& a, F f, D deriv) {
  const auto& na = node_of(a);
  std::vector<double> out(na.values.size());
  std::transform(na.values.begin(), na.values.end(), out.begin(), f);
  return make_result(na.shape, std::move(out), {a.node()}, [deriv](detail::Node& self) {
    auto& x = *self.inputs[0];
    auto& g = x.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * deriv(x.values[i], self.values[i]);
  });
}

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t d = 0; d < axis; ++d) s.outer *= shape[d];
  s.extent = shape[axis];
  for (std::size_t d = axis + 1; d < shape.size(); ++d) s.inner *= shape[d];
  return s;
}

}  // namespace

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? " x " : "") << shape[i];
  os << ']';
  return os.str();
}

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

// ---------------------------------------------------------------------------
// Tensor

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_size(shape);
  return Tensor(leaf(std::move(shape), std::vector<double>(n, value), requires_grad));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  return Tensor(leaf(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return Tensor(leaf({}, {value}, requires_grad)); }

Tensor Tensor::identity(std::size_t n) {
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  return Tensor(leaf({n, n}, std::move(v), false));
}

const Shape& Tensor::shape() const { return node_of(*this).shape; }
std::size_t Tensor::size() const { return node_of(*this).values.size(); }

std::size_t Tensor::rows() const {
  const auto& s = shape();
  return s.empty() ? 1 : s[0];
}

std::size_t Tensor::cols() const {
  const auto& s = shape();
  return s.size() <= 1 ? 1 : shape_size(Shape(s.begin() + 1, s.end()));
}

std::span<const double> Tensor::values() const { return node_of(*this).values; }

double Tensor::item() const {
  const auto& n = node_of(*this);
  if (n.values.size() != 1) throw ContractViolation("item() on tensor of shape " + shape_to_string(n.shape));
  return n.values[0];
}

double Tensor::operator()(std::size_t row, std::size_t col) const { return values()[row * cols() + col]; }

bool Tensor::requires_grad() const { return node_of(*this).requires_grad; }
bool Tensor::has_grad() const { return !node_of(*this).grad.empty(); }
std::span<const double> Tensor::grad() const { return node_of(*this).grad; }
void Tensor::zero_grad() { node_->grad.clear(); }

Tensor Tensor::detach() const {
  const auto& n = node_of(*this);
  return Tensor(leaf(n.shape, n.values, false));
}

std::span<double> Tensor::mutable_values() {
  if (!node_of(*this).inputs.empty()) throw ContractViolation("mutable_values() on a non-leaf tensor");
  return node_->values;
}

// ---------------------------------------------------------------------------
// Tape

Tape& Tape::current() {
  thread_local Tape tape;
  return tape;
}

void Tape::record(std::shared_ptr<detail::Node> node) { nodes_.push_back(std::move(node)); }

void Tape::backward(const Tensor& root) {
  const auto& r = node_of(root);
  if (r.values.size() != 1) {
    throw ContractViolation("backward() needs a scalar root, got shape " + shape_to_string(r.shape));
  }
  if (nodes_.empty()) throw ContractViolation("backward() on an empty tape");
  if (!r.requires_grad) throw ContractViolation("backward() root does not require gradients");
  root.node()->ensure_grad()[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    auto& node = **it;
    if (!node.grad.empty() && node.backward) node.backward(node);
  }
  nodes_.clear();
}

void backward(const Tensor& root) { Tape::current().backward(root); }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_mode_enabled() { return g_grad_enabled; }

// ---------------------------------------------------------------------------
// Primitives

Tensor matmul(const Tensor& a, const Tensor& b) {
  const auto& na = node_of(a);
  const auto& nb = node_of(b);
  if (na.shape.size() != 2 || nb.shape.size() != 2 || na.shape[1] != nb.shape[0]) {
    throw ContractViolation("matmul: shapes " + shape_to_string(na.shape) + " and " +
                            shape_to_string(nb.shape) + " do not conform");
  }
  const auto m = static_cast<Eigen::Index>(na.shape[0]);
  const auto k = static_cast<Eigen::Index>(na.shape[1]);
  const auto n = static_cast<Eigen::Index>(nb.shape[1]);
  std::vector<double> out(static_cast<std::size_t>(m * n));
  Eigen::Map<RowMat>(out.data(), m, n).noalias() =
      Eigen::Map<const RowMat>(na.values.data(), m, k) * Eigen::Map<const RowMat>(nb.values.data(), k, n);
  return make_result({na.shape[0], nb.shape[1]}, std::move(out), {a.node(), b.node()},
                     [m, k, n](detail::Node& self) {
                       auto& x = *self.inputs[0];
                       auto& y = *self.inputs[1];
                       Eigen::Map<const RowMat> g(self.grad.data(), m, n);
                       if (x.requires_grad) {
                         Eigen::Map<RowMat>(x.ensure_grad().data(), m, k).noalias() +=
                             g * Eigen::Map<const RowMat>(y.values.data(), k, n).transpose();
                       }
                       if (y.requires_grad) {
                         Eigen::Map<RowMat>(y.ensure_grad().data(), k, n).noalias() +=
                             Eigen::Map<const RowMat>(x.values.data(), m, k).transpose() * g;
                       }
                     });
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double offset) {
  return unary(
      a, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Tensor relu(const Tensor& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& a) {
  Tensor out = unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
  require_finite(out.node()->values, "exp");
  return out;
}

Tensor log(const Tensor& a) {
  for (double v : node_of(a).values) {
    if (!(v > 0.0)) throw DomainError("log of non-positive value " + std::to_string(v));
  }
  return unary(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor square(const Tensor& a) {
  return unary(
      a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor softplus(const Tensor& a) {
  return unary(
      a, [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
      [](double x, double) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  if (!(lo <= hi)) throw ContractViolation("clamp: empty interval");
  return unary(
      a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Tensor sum(const Tensor& a) {
  const auto& na = node_of(a);
  const double total = std::accumulate(na.values.begin(), na.values.end(), 0.0);
  return make_result({}, {total}, {a.node()}, [](detail::Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (double& v : g) v += self.grad[0];
  });
}

Tensor sum(const Tensor& a, std::size_t axis) {
  const auto& na = node_of(a);
  if (na.shape.size() != 2 || axis > 1) {
    throw ContractViolation("sum(axis): needs a rank-2 tensor and axis 0/1, got " + shape_to_string(na.shape));
  }
  const std::size_t r = na.shape[0];
  const std::size_t c = na.shape[1];
  std::vector<double> out(axis == 0 ? c : r, 0.0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[axis == 0 ? j : i] += na.values[i * c + j];
  Shape shape{out.size()};
  return make_result(std::move(shape), std::move(out), {a.node()}, [r, c, axis](detail::Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[axis == 0 ? j : i];
  });
}

Tensor mean(const Tensor& a) {
  const std::size_t n = a.size();
  if (n == 0) throw ContractViolation("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Tensor mean(const Tensor& a, std::size_t axis) {
  const auto& s = a.shape();
  if (s.size() != 2 || axis > 1) throw ContractViolation("mean(axis): needs a rank-2 tensor");
  return scale(sum(a, axis), 1.0 / static_cast<double>(s[axis]));
}

Tensor logsumexp_rows(const Tensor& a) {
  const auto& na = node_of(a);
  if (na.shape.size() != 2 || na.shape[1] == 0) {
    throw ContractViolation("logsumexp_rows: needs a non-empty rank-2 tensor, got " + shape_to_string(na.shape));
  }
  const std::size_t r = na.shape[0];
  const std::size_t c = na.shape[1];
  std::vector<double> out(r);
  for (std::size_t i = 0; i < r; ++i) {
    const double* row = na.values.data() + i * c;
    const double m = *std::max_element(row, row + c);
    double acc = 0.0;
    for (std::size_t j = 0; j < c; ++j) acc += std::exp(row[j] - m);
    out[i] = m + std::log(acc);
  }
  return make_result({r}, std::move(out), {a.node()}, [r, c](detail::Node& self) {
    auto& x = *self.inputs[0];
    auto& g = x.ensure_grad();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j)
        g[i * c + j] += self.grad[i] * std::exp(x.values[i * c + j] - self.values[i]);
  });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ContractViolation("concat of zero tensors");
  const Shape& first = node_of(parts[0]).shape;
  if (axis >= first.size()) throw ContractViolation("concat: axis out of range for " + shape_to_string(first));
  Shape out_shape = first;
  out_shape[axis] = 0;
  std::vector<NodePtr> inputs;
  std::vector<std::size_t> extents;
  for (const auto& p : parts) {
    const Shape& s = node_of(p).shape;
    bool ok = s.size() == first.size();
    for (std::size_t d = 0; ok && d < s.size(); ++d) ok = d == axis || s[d] == first[d];
    if (!ok) {
      throw ContractViolation("concat: shapes " + shape_to_string(first) + " and " + shape_to_string(s) +
                              " do not conform");
    }
    out_shape[axis] += s[axis];
    extents.push_back(s[axis]);
    inputs.push_back(p.node());
  }
  const AxisSplit split = split_at(out_shape, axis);
  std::vector<double> out(shape_size(out_shape));
  for (std::size_t o = 0; o < split.outer; ++o) {
    std::size_t offset = 0;
    for (std::size_t p = 0; p < parts.size(); ++p) {
      const std::size_t chunk = extents[p] * split.inner;
      const double* src = inputs[p]->values.data() + o * chunk;
      std::copy(src, src + chunk, out.data() + (o * split.extent + offset) * split.inner);
      offset += extents[p];
    }
  }
  return make_result(std::move(out_shape), std::move(out), std::move(inputs),
                     [split, extents](detail::Node& self) {
                       for (std::size_t o = 0; o < split.outer; ++o) {
                         std::size_t offset = 0;
                         for (std::size_t p = 0; p < extents.size(); ++p) {
                           const std::size_t chunk = extents[p] * split.inner;
                           auto& in = *self.inputs[p];
                           if (in.requires_grad) {
                             auto& g = in.ensure_grad();
                             const double* src = self.grad.data() + (o * split.extent + offset) * split.inner;
                             for (std::size_t i = 0; i < chunk; ++i) g[o * chunk + i] += src[i];
                           }
                           offset += extents[p];
                         }
                       }
                     });
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end) {
  const auto& na = node_of(a);
  if (axis >= na.shape.size() || begin > end || end > na.shape[axis]) {
    throw ContractViolation("slice [" + std::to_string(begin) + ", " + std::to_string(end) + ") on axis " +
                            std::to_string(axis) + " of " + shape_to_string(na.shape));
  }
  const AxisSplit split = split_at(na.shape, axis);
  Shape out_shape = na.shape;
  out_shape[axis] = end - begin;
  const std::size_t width = (end - begin) * split.inner;
  std::vector<double> out(split.outer * width);
  for (std::size_t o = 0; o < split.outer; ++o) {
    const double* src = na.values.data() + (o * split.extent + begin) * split.inner;
    std::copy(src, src + width, out.data() + o * width);
  }
  return make_result(std::move(out_shape), std::move(out), {a.node()},
                     [split, begin, width](detail::Node& self) {
                       auto& g = self.inputs[0]->ensure_grad();
                       for (std::size_t o = 0; o < split.outer; ++o) {
                         double* dst = g.data() + (o * split.extent + begin) * split.inner;
                         for (std::size_t i = 0; i < width; ++i) dst[i] += self.grad[o * width + i];
                       }
                     });
}

Tensor reshape(const Tensor& a, Shape shape) {
  const auto& na = node_of(a);
  if (shape_size(shape) != na.values.size()) {
    throw ContractViolation("reshape: " + shape_to_string(na.shape) + " cannot become " + shape_to_string(shape));
  }
  return make_result(std::move(shape), na.values, {a.node()}, [](detail::Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index) {
  const auto& na = node_of(a);
  const std::size_t r = a.rows();
  const std::size_t c = a.cols();
  if (na.shape.empty()) throw ContractViolation("gather_rows on a scalar");
  for (std::size_t i : index) {
    if (i >= r) throw ContractViolation("gather_rows: index " + std::to_string(i) + " out of range " + std::to_string(r));
  }
  Shape out_shape = na.shape;
  out_shape[0] = index.size();
  std::vector<double> out(index.size() * c);
  for (std::size_t k = 0; k < index.size(); ++k)
    std::copy_n(na.values.data() + index[k] * c, c, out.data() + k * c);
  std::vector<std::size_t> idx(index.begin(), index.end());
  return make_result(std::move(out_shape), std::move(out), {a.node()}, [idx, c](detail::Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t k = 0; k < idx.size(); ++k)
      for (std::size_t j = 0; j < c; ++j) g[idx[k] * c + j] += self.grad[k * c + j];
  });
}

Tensor repeat_rows(const Tensor& a, std::size_t times) {
  const auto& na = node_of(a);
  if (na.shape.empty()) throw ContractViolation("repeat_rows on a scalar");
  if (times == 0) throw ContractViolation("repeat_rows: times must be positive");
  const std::size_t r = a.rows();
  const std::size_t c = a.cols();
  Shape out_shape = na.shape;
  out_shape[0] = r * times;
  std::vector<double> out(r * times * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t t = 0; t < times; ++t) std::copy_n(na.values.data() + i * c, c, out.data() + (i * times + t) * c);
  return make_result(std::move(out_shape), std::move(out), {a.node()}, [r, c, times](detail::Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t t = 0; t < times; ++t)
        for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[(i * times + t) * c + j];
  });
}

Tensor scale_rows(const Tensor& a, std::span<const double> coeff) {
  const auto& na = node_of(a);
  if (na.shape.empty() || coeff.size() != a.rows()) {
    throw ContractViolation("scale_rows: " + std::to_string(coeff.size()) + " coefficients for shape " +
                            shape_to_string(na.shape));
  }
  const std::size_t c = a.cols();
  std::vector<double> out(na.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = coeff[i / c] * na.values[i];
  std::vector<double> k(coeff.begin(), coeff.end());
  return make_result(na.shape, std::move(out), {a.node()}, [k, c](detail::Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += k[i / c] * self.grad[i];
  });
}

}  // namespace fmvae
