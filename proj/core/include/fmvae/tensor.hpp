#pragma once

// Dense row-major tensors of doubles with tape-based reverse-mode
// differentiation.
//
// A Tensor is a cheap handle onto an immutable node. Operations on tensors
// that require gradients are appended to the calling thread's Tape; calling
// backward() on a scalar replays the tape in reverse and accumulates
// gradients into every reachable leaf.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fmvae {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until a gradient reaches this node
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this->grad and accumulates into the inputs' grads.
  std::function<void(Node&)> backward;

  std::vector<double>& ensure_grad() {
    if (grad.empty()) grad.assign(values.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  // [n x n] identity.
  static Tensor identity(std::size_t n);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  // Leading axis extent; 1 for a rank-0 tensor.
  std::size_t rows() const;
  // Product of the trailing axes.
  std::size_t cols() const;

  std::span<const double> values() const;
  double item() const;
  double operator()(std::size_t row, std::size_t col) const;
  double operator[](std::size_t flat) const { return values()[flat]; }

  bool requires_grad() const;
  bool has_grad() const;
  // Gradient accumulated by backward(); empty span when none reached this tensor.
  std::span<const double> grad() const;
  void zero_grad();

  // Leaf copy of the values with no history.
  Tensor detach() const;

  // In-place update for optimiser-owned parameters. Only legal on leaves.
  std::span<double> mutable_values();

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// Ordered record of differentiable operations for one thread.
class Tape {
 public:
  static Tape& current();

  void record(std::shared_ptr<detail::Node> node);
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  void clear() { nodes_.clear(); }

  // Seeds d(root)/d(root) = 1, propagates in reverse recording order and
  // clears the tape. Leaf gradients accumulate across calls.
  void backward(const Tensor& root);

 private:
  std::vector<std::shared_ptr<detail::Node>> nodes_;
};

// Convenience for Tape::current().backward(root).
void backward(const Tensor& root);

// While alive, no operation on this thread records onto the tape and
// results never require gradients.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled();

// Primitive operations. Elementwise binaries accept identical shapes or a
// rank-(r-1) operand broadcast across the leading axis of the rank-r one.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double offset);
Tensor relu(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor square(const Tensor& a);
// log(1 + exp(a)), evaluated without overflow.
Tensor softplus(const Tensor& a);
// Values outside [lo, hi] are clamped and pass no gradient.
Tensor clamp(const Tensor& a, double lo, double hi);
Tensor sum(const Tensor& a);
// Reduces a rank-2 tensor over `axis`, returning a rank-1 tensor.
Tensor sum(const Tensor& a, std::size_t axis);
Tensor mean(const Tensor& a);
Tensor mean(const Tensor& a, std::size_t axis);
// Row-wise max-shifted log-sum-exp of a rank-2 tensor; returns [rows].
Tensor logsumexp_rows(const Tensor& a);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end);
Tensor reshape(const Tensor& a, Shape shape);
// Row r of the result is row index[r] of `a` (leading axis).
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index);
// Each leading-axis row repeated `times` times consecutively.
Tensor repeat_rows(const Tensor& a, std::size_t times);
// Multiplies leading-axis row r by the constant coeff[r].
Tensor scale_rows(const Tensor& a, std::span<const double> coeff);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(const Tensor& a, double s) { return scale(a, s); }
inline Tensor operator*(double s, const Tensor& a) { return scale(a, s); }

}  // namespace fmvae
