#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vdn/errors.hpp"

namespace vdn {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);
std::size_t shape_size(const Shape& s);

namespace detail {

// One entry on the implicit tape. Creation order (seq) is the recording
// order; the backward pass walks reachable nodes in reverse seq order,
// which is a valid reverse topological order because an op's inputs are
// always created before the op itself.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty means "all zeros"
  bool requires_grad = false;
  std::uint64_t seq = 0;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backprop;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

std::shared_ptr<Node> make_node(Shape shape, std::vector<double> value,
                                bool requires_grad);

}  // namespace detail

// Dense row-major f64 tensor participating in a dynamic (define-by-run)
// reverse-mode autodiff tape. Copying a Tensor aliases the same tape node.
// A tape must not be shared mutably across threads; tensors themselves are
// safe to move between threads.
class Tensor {
 public:
  Tensor() = default;

  static Tensor from_data(Shape shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  std::size_t rows() const;  // 2-D only
  std::size_t cols() const;  // 2-D only

  const std::vector<double>& data() const { return node_->value; }
  std::vector<double>& data() { return node_->value; }
  double at(std::size_t i) const { return node_->value.at(i); }
  double at(std::size_t r, std::size_t c) const;

  // Scalar convenience; ContractError unless size() == 1.
  double value() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }

  // Gradient accumulated by backward(); empty vector when untouched.
  const std::vector<double>& grad() const { return node_->grad; }
  void zero_grad() {
    if (!node_->grad.empty()) node_->grad.assign(node_->value.size(), 0.0);
  }

  // Reverse-mode sweep from this scalar. Gradients accumulate additively
  // into every requires_grad node that contributed to it.
  void backward() const;

  std::shared_ptr<detail::Node> node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// --- op set ------------------------------------------------------------
// Elementwise binary ops broadcast in exactly two cases: a scalar operand,
// or a right operand whose shape equals the left shape minus its leading
// dimension (bias-style). Anything else is a ShapeError; reshape explicitly.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor matmul(const Tensor& a, const Tensor& b);  // (m,k) x (k,n) -> (m,n)

Tensor exp(const Tensor& t);
Tensor log(const Tensor& t);  // DomainError on non-positive input
Tensor tanh(const Tensor& t);
Tensor relu(const Tensor& t);                       // subgradient 0 at 0
Tensor leaky_relu(const Tensor& t, double slope = 0.2);
Tensor softplus(const Tensor& t);
Tensor abs(const Tensor& t);                        // subgradient 0 at 0
Tensor neg(const Tensor& t);
Tensor clamp(const Tensor& t, double lo, double hi);
Tensor scale(const Tensor& t, double s);
Tensor add_scalar(const Tensor& t, double s);
Tensor square(const Tensor& t);

Tensor sum(const Tensor& t);   // scalar
Tensor mean(const Tensor& t);  // scalar
Tensor sum_axis(const Tensor& t, std::size_t axis);  // 2-D, drops the axis
Tensor max_axis(const Tensor& t, std::size_t axis);  // 2-D; grad to first argmax

Tensor broadcast_to(const Tensor& t, const Shape& target);
Tensor reshape(const Tensor& t, const Shape& target);
Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis);
Tensor slice(const Tensor& t, std::size_t axis, std::size_t start,
             std::size_t len);

// Select one row per example: out[i] = t[i, index[i]]. Used for the
// per-domain critic heads.
Tensor select_columns(const Tensor& t, const std::vector<int>& index);

// Gather rows: out[i] = t[index[i], :]. Grad scatters back.
Tensor take_rows(const Tensor& t, const std::vector<std::size_t>& index);

// Fused stable softmax + cross-entropy, mean over the batch.
// logits: (B, C); labels in [0, C).
Tensor softmax_cross_entropy(const Tensor& logits,
                             const std::vector<int>& labels);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }

}  // namespace vdn
