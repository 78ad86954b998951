#include "vdn/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace vdn {

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ", ";
    os << s[i];
  }
  os << ')';
  return os.str();
}

std::size_t shape_size(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

namespace detail {

namespace {
thread_local std::uint64_t g_seq = 0;
}

std::shared_ptr<Node> make_node(Shape shape, std::vector<double> value,
                                bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  n->seq = ++g_seq;
  return n;
}

}  // namespace detail

using detail::Node;

namespace {

void accumulate_into(Node& n, std::size_t i, double v) {
  n.ensure_grad();
  n.grad[i] += v;
}

Tensor make_op(Shape shape, std::vector<double> value,
               std::vector<std::shared_ptr<Node>> inputs,
               std::function<void(Node&)> backprop) {
  bool rg = false;
  for (const auto& in : inputs) rg = rg || in->requires_grad;
  auto n = detail::make_node(std::move(shape), std::move(value), rg);
  if (rg) {
    n->inputs = std::move(inputs);
    n->backprop = std::move(backprop);
  }
  return Tensor(std::move(n));
}

void check_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw ContractError(std::string(op) + ": undefined tensor");
}

}  // namespace

Tensor Tensor::from_data(Shape shape, std::vector<double> data,
                         bool requires_grad) {
  if (shape_size(shape) != data.size()) {
    throw ShapeError("from_data: shape " + shape_str(shape) + " expects " +
                     std::to_string(shape_size(shape)) + " values, got " +
                     std::to_string(data.size()));
  }
  return Tensor(detail::make_node(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  std::vector<double> d(shape_size(shape), 0.0);
  return Tensor(detail::make_node(std::move(shape), std::move(d), requires_grad));
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
  std::vector<double> d(shape_size(shape), v);
  return Tensor(detail::make_node(std::move(shape), std::move(d), requires_grad));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return Tensor(detail::make_node(Shape{}, std::vector<double>{v}, requires_grad));
}

std::size_t Tensor::rows() const {
  if (node_->shape.size() != 2) {
    throw ContractError("rows: tensor is not 2-D, shape " + shape_str(node_->shape));
  }
  return node_->shape[0];
}

std::size_t Tensor::cols() const {
  if (node_->shape.size() != 2) {
    throw ContractError("cols: tensor is not 2-D, shape " + shape_str(node_->shape));
  }
  return node_->shape[1];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  return node_->value.at(r * cols() + c);
}

double Tensor::value() const {
  if (node_->value.size() != 1) {
    throw ContractError("value: tensor is not scalar, shape " +
                        shape_str(node_->shape));
  }
  return node_->value[0];
}

void Tensor::backward() const {
  if (!node_) throw ContractError("backward: undefined tensor");
  if (node_->value.size() != 1) {
    throw ContractError("backward: loss must be scalar, got shape " +
                        shape_str(node_->shape));
  }
  // Collect every reachable node once.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{node_.get()};
  seen.insert(node_.get());
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& in : n->inputs) {
      if (seen.insert(in.get()).second) stack.push_back(in.get());
    }
  }
  // Reverse recording order; every op is visited exactly once.
  std::sort(order.begin(), order.end(),
            [](const Node* a, const Node* b) { return a->seq > b->seq; });
  node_->ensure_grad();
  node_->grad[0] += 1.0;
  for (Node* n : order) {
    if (n->backprop) {
      if (!n->grad.empty()) n->backprop(*n);
      // Intermediate grads are transient: clearing them keeps repeated
      // backward passes over overlapping graphs additive on leaves only.
      n->grad.clear();
    }
  }
}

// --- elementwise binary with restricted broadcast -----------------------

namespace {

// Returns the index period of b when applied over a's flat index space, or
// throws. Period 0 means shapes are identical (direct), period 1 a scalar,
// otherwise b covers the trailing dimensions of a.
std::size_t broadcast_period(const Shape& a, const Shape& b, const char* op) {
  if (a == b) return 0;
  if (shape_size(b) == 1) return 1;
  if (b.size() + 1 == a.size() &&
      std::equal(b.begin(), b.end(), a.begin() + 1)) {
    return shape_size(b);
  }
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) +
                   " and " + shape_str(b));
}

enum class Bin { Add, Sub, Mul, Div };

Tensor binary_op(const Tensor& ta, const Tensor& tb, Bin kind, const char* name) {
  check_defined(ta, name);
  check_defined(tb, name);
  // Either operand may be the "small" one; normalize so b is broadcast.
  bool swapped = false;
  Tensor a = ta, b = tb;
  if (a.shape() != b.shape() && shape_size(a.shape()) < shape_size(b.shape())) {
    std::swap(a, b);
    swapped = true;
  }
  const std::size_t period = broadcast_period(a.shape(), b.shape(), name);
  const auto& av = a.data();
  const auto& bv = b.data();
  const std::size_t n = av.size();
  const std::size_t m = bv.size();
  auto bidx = [&](std::size_t i) { return period == 0 ? i : i % m; };

  if (kind == Bin::Div) {
    for (double v : bv) {
      if (!swapped && v == 0.0) throw DomainError("div: division by zero");
    }
    if (swapped) {
      for (double v : av) {
        if (v == 0.0) throw DomainError("div: division by zero");
      }
    }
  }

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = swapped ? bv[bidx(i)] : av[i];
    const double y = swapped ? av[i] : bv[bidx(i)];
    switch (kind) {
      case Bin::Add: out[i] = x + y; break;
      case Bin::Sub: out[i] = x - y; break;
      case Bin::Mul: out[i] = x * y; break;
      case Bin::Div: out[i] = x / y; break;
    }
  }

  auto an = a.node();
  auto bn = b.node();
  return make_op(
      a.shape(), std::move(out), {an, bn},
      [kind, period, swapped](Node& self) {
        Node& na = *self.inputs[0];
        Node& nb = *self.inputs[1];
        const std::size_t n = self.value.size();
        const std::size_t m = nb.value.size();
        auto bidx = [&](std::size_t i) { return period == 0 ? i : i % m; };
        for (std::size_t i = 0; i < n; ++i) {
          const double g = self.grad[i];
          if (g == 0.0) continue;
          const std::size_t j = bidx(i);
          const double x = swapped ? nb.value[j] : na.value[i];
          const double y = swapped ? na.value[i] : nb.value[j];
          double gx = 0.0, gy = 0.0;
          switch (kind) {
            case Bin::Add: gx = g; gy = g; break;
            case Bin::Sub: gx = g; gy = -g; break;
            case Bin::Mul: gx = g * y; gy = g * x; break;
            case Bin::Div: gx = g / y; gy = -g * x / (y * y); break;
          }
          const double ga = swapped ? gy : gx;
          const double gb = swapped ? gx : gy;
          if (na.requires_grad) accumulate_into(na, i, ga);
          if (nb.requires_grad) accumulate_into(nb, j, gb);
        }
      });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary_op(a, b, Bin::Add, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary_op(a, b, Bin::Sub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary_op(a, b, Bin::Mul, "mul"); }
Tensor div(const Tensor& a, const Tensor& b) { return binary_op(a, b, Bin::Div, "div"); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_defined(a, "matmul");
  check_defined(b, "matmul");
  if (a.shape().size() != 2 || b.shape().size() != 2 ||
      a.shape()[1] != b.shape()[0]) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) +
                     " and " + shape_str(b.shape()));
  }
  const std::size_t m = a.shape()[0];
  const std::size_t k = a.shape()[1];
  const std::size_t n = b.shape()[1];
  const auto& av = a.data();
  const auto& bv = b.data();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t l = 0; l < k; ++l) {
      const double x = av[i * k + l];
      if (x == 0.0) continue;
      const double* brow = &bv[l * n];
      double* orow = &out[i * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += x * brow[j];
    }
  }
  return make_op(
      Shape{m, n}, std::move(out), {a.node(), b.node()},
      [m, k, n](Node& self) {
        Node& na = *self.inputs[0];
        Node& nb = *self.inputs[1];
        const bool ga = na.requires_grad;
        const bool gb = nb.requires_grad;
        if (ga) {
          na.ensure_grad();
          // dA = G * B^T
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t l = 0; l < k; ++l) {
              double acc = 0.0;
              const double* grow = &self.grad[i * n];
              const double* brow = &nb.value[l * n];
              for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
              na.grad[i * k + l] += acc;
            }
          }
        }
        if (gb) {
          nb.ensure_grad();
          // dB = A^T * G
          for (std::size_t i = 0; i < m; ++i) {
            const double* grow = &self.grad[i * n];
            for (std::size_t l = 0; l < k; ++l) {
              const double x = na.value[i * k + l];
              if (x == 0.0) continue;
              double* brow = &nb.grad[l * n];
              for (std::size_t j = 0; j < n; ++j) brow[j] += x * grow[j];
            }
          }
        }
      });
}

// --- unary ops ----------------------------------------------------------

namespace {

template <typename Fwd, typename Bwd>
Tensor unary_op(const Tensor& t, const char* name, Fwd fwd, Bwd bwd) {
  check_defined(t, name);
  const auto& v = t.data();
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = fwd(v[i]);
  return make_op(t.shape(), std::move(out), {t.node()},
                 [bwd](Node& self) {
                   Node& in = *self.inputs[0];
                   in.ensure_grad();
                   for (std::size_t i = 0; i < self.value.size(); ++i) {
                     in.grad[i] += self.grad[i] * bwd(in.value[i], self.value[i]);
                   }
                 });
}

}  // namespace

Tensor exp(const Tensor& t) {
  return unary_op(t, "exp", [](double x) { return std::exp(x); },
                  [](double, double y) { return y; });
}

Tensor log(const Tensor& t) {
  check_defined(t, "log");
  for (double x : t.data()) {
    if (!(x > 0.0)) {
      throw DomainError("log: input " + std::to_string(x) + " is not positive");
    }
  }
  return unary_op(t, "log", [](double x) { return std::log(x); },
                  [](double x, double) { return 1.0 / x; });
}

Tensor tanh(const Tensor& t) {
  return unary_op(t, "tanh", [](double x) { return std::tanh(x); },
                  [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& t) {
  return unary_op(t, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
                  [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& t, double slope) {
  return unary_op(t, "leaky_relu",
                  [slope](double x) { return x > 0.0 ? x : slope * x; },
                  [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Tensor softplus(const Tensor& t) {
  return unary_op(t, "softplus",
                  [](double x) {
                    if (x > 30.0) return x;
                    return std::log1p(std::exp(x));
                  },
                  [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

Tensor abs(const Tensor& t) {
  return unary_op(t, "abs", [](double x) { return std::fabs(x); },
                  [](double x, double) {
                    if (x > 0.0) return 1.0;
                    if (x < 0.0) return -1.0;
                    return 0.0;
                  });
}

Tensor neg(const Tensor& t) {
  return unary_op(t, "neg", [](double x) { return -x; },
                  [](double, double) { return -1.0; });
}

Tensor clamp(const Tensor& t, double lo, double hi) {
  if (lo > hi) throw ContractError("clamp: lo > hi");
  return unary_op(t, "clamp",
                  [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
                  [lo, hi](double x, double) {
                    return (x > lo && x < hi) ? 1.0 : 0.0;
                  });
}

Tensor scale(const Tensor& t, double s) {
  return unary_op(t, "scale", [s](double x) { return s * x; },
                  [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& t, double s) {
  return unary_op(t, "add_scalar", [s](double x) { return x + s; },
                  [](double, double) { return 1.0; });
}

Tensor square(const Tensor& t) {
  return unary_op(t, "square", [](double x) { return x * x; },
                  [](double x, double) { return 2.0 * x; });
}

// --- reductions ----------------------------------------------------------

Tensor sum(const Tensor& t) {
  check_defined(t, "sum");
  double acc = 0.0;
  for (double v : t.data()) acc += v;
  return make_op(Shape{}, {acc}, {t.node()}, [](Node& self) {
    Node& in = *self.inputs[0];
    in.ensure_grad();
    const double g = self.grad[0];
    for (auto& gi : in.grad) gi += g;
  });
}

Tensor mean(const Tensor& t) {
  check_defined(t, "mean");
  if (t.size() == 0) throw ContractError("mean: empty tensor");
  double acc = 0.0;
  for (double v : t.data()) acc += v;
  const double inv = 1.0 / static_cast<double>(t.size());
  return make_op(Shape{}, {acc * inv}, {t.node()}, [inv](Node& self) {
    Node& in = *self.inputs[0];
    in.ensure_grad();
    const double g = self.grad[0] * inv;
    for (auto& gi : in.grad) gi += g;
  });
}

Tensor sum_axis(const Tensor& t, std::size_t axis) {
  check_defined(t, "sum_axis");
  if (t.shape().size() != 2 || axis > 1) {
    throw ContractError("sum_axis: expects a 2-D tensor and axis 0 or 1");
  }
  const std::size_t m = t.shape()[0];
  const std::size_t n = t.shape()[1];
  const auto& v = t.data();
  if (axis == 0) {
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) out[j] += v[i * n + j];
    return make_op(Shape{n}, std::move(out), {t.node()}, [m, n](Node& self) {
      Node& in = *self.inputs[0];
      in.ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) in.grad[i * n + j] += self.grad[j];
    });
  }
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i] += v[i * n + j];
  return make_op(Shape{m}, std::move(out), {t.node()}, [m, n](Node& self) {
    Node& in = *self.inputs[0];
    in.ensure_grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) in.grad[i * n + j] += self.grad[i];
  });
}

Tensor max_axis(const Tensor& t, std::size_t axis) {
  check_defined(t, "max_axis");
  if (t.shape().size() != 2 || axis != 1) {
    throw ContractError("max_axis: expects a 2-D tensor and axis 1");
  }
  const std::size_t m = t.shape()[0];
  const std::size_t n = t.shape()[1];
  if (n == 0) throw ContractError("max_axis: empty rows");
  const auto& v = t.data();
  std::vector<double> out(m);
  std::vector<std::size_t> arg(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < n; ++j)
      if (v[i * n + j] > v[i * n + best]) best = j;
    arg[i] = best;
    out[i] = v[i * n + best];
  }
  return make_op(Shape{m}, std::move(out), {t.node()},
                 [n, arg = std::move(arg)](Node& self) {
                   Node& in = *self.inputs[0];
                   in.ensure_grad();
                   for (std::size_t i = 0; i < self.value.size(); ++i)
                     in.grad[i * n + arg[i]] += self.grad[i];
                 });
}

// --- structural ops -------------------------------------------------------

Tensor broadcast_to(const Tensor& t, const Shape& target) {
  check_defined(t, "broadcast_to");
  if (t.shape() == target) return t;
  const std::size_t period = broadcast_period(target, t.shape(), "broadcast_to");
  const std::size_t n = shape_size(target);
  const auto& v = t.data();
  const std::size_t m = v.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = v[period == 1 ? 0 : i % m];
  return make_op(target, std::move(out), {t.node()}, [m](Node& self) {
    Node& in = *self.inputs[0];
    in.ensure_grad();
    for (std::size_t i = 0; i < self.value.size(); ++i) {
      in.grad[i % m] += self.grad[i];
    }
  });
}

Tensor reshape(const Tensor& t, const Shape& target) {
  check_defined(t, "reshape");
  if (shape_size(target) != t.size()) {
    throw ShapeError("reshape: cannot view " + shape_str(t.shape()) + " as " +
                     shape_str(target));
  }
  std::vector<double> out = t.data();
  return make_op(target, std::move(out), {t.node()}, [](Node& self) {
    Node& in = *self.inputs[0];
    in.ensure_grad();
    for (std::size_t i = 0; i < self.value.size(); ++i)
      in.grad[i] += self.grad[i];
  });
}

Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis) {
  check_defined(a, "concat");
  check_defined(b, "concat");
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != sb.size() || sa.empty() || sa.size() > 2 || axis >= sa.size()) {
    throw ShapeError("concat: unsupported shapes " + shape_str(sa) + " and " +
                     shape_str(sb) + " on axis " + std::to_string(axis));
  }
  for (std::size_t d = 0; d < sa.size(); ++d) {
    if (d != axis && sa[d] != sb[d]) {
      throw ShapeError("concat: shapes " + shape_str(sa) + " and " +
                       shape_str(sb) + " differ off-axis");
    }
  }
  Shape out_shape = sa;
  out_shape[axis] += sb[axis];
  const auto& av = a.data();
  const auto& bv = b.data();
  std::vector<double> out(shape_size(out_shape));
  if (sa.size() == 1 || axis == 0) {
    std::copy(av.begin(), av.end(), out.begin());
    std::copy(bv.begin(), bv.end(), out.begin() + static_cast<std::ptrdiff_t>(av.size()));
    return make_op(out_shape, std::move(out), {a.node(), b.node()},
                   [na = av.size()](Node& self) {
                     Node& a = *self.inputs[0];
                     Node& b = *self.inputs[1];
                     if (a.requires_grad) {
                       a.ensure_grad();
                       for (std::size_t i = 0; i < na; ++i) a.grad[i] += self.grad[i];
                     }
                     if (b.requires_grad) {
                       b.ensure_grad();
                       for (std::size_t i = na; i < self.value.size(); ++i)
                         b.grad[i - na] += self.grad[i];
                     }
                   });
  }
  // 2-D, axis 1
  const std::size_t rows = sa[0];
  const std::size_t ca = sa[1];
  const std::size_t cb = sb[1];
  for (std::size_t i = 0; i < rows; ++i) {
    std::copy(av.begin() + static_cast<std::ptrdiff_t>(i * ca),
              av.begin() + static_cast<std::ptrdiff_t>((i + 1) * ca),
              out.begin() + static_cast<std::ptrdiff_t>(i * (ca + cb)));
    std::copy(bv.begin() + static_cast<std::ptrdiff_t>(i * cb),
              bv.begin() + static_cast<std::ptrdiff_t>((i + 1) * cb),
              out.begin() + static_cast<std::ptrdiff_t>(i * (ca + cb) + ca));
  }
  return make_op(out_shape, std::move(out), {a.node(), b.node()},
                 [rows, ca, cb](Node& self) {
                   Node& a = *self.inputs[0];
                   Node& b = *self.inputs[1];
                   if (a.requires_grad) {
                     a.ensure_grad();
                     for (std::size_t i = 0; i < rows; ++i)
                       for (std::size_t j = 0; j < ca; ++j)
                         a.grad[i * ca + j] += self.grad[i * (ca + cb) + j];
                   }
                   if (b.requires_grad) {
                     b.ensure_grad();
                     for (std::size_t i = 0; i < rows; ++i)
                       for (std::size_t j = 0; j < cb; ++j)
                         b.grad[i * cb + j] += self.grad[i * (ca + cb) + ca + j];
                   }
                 });
}

Tensor slice(const Tensor& t, std::size_t axis, std::size_t start,
             std::size_t len) {
  check_defined(t, "slice");
  const Shape& s = t.shape();
  if (s.empty() || s.size() > 2 || axis >= s.size() || start + len > s[axis]) {
    throw ShapeError("slice: invalid range [" + std::to_string(start) + ", " +
                     std::to_string(start + len) + ") on axis " +
                     std::to_string(axis) + " of " + shape_str(s));
  }
  const auto& v = t.data();
  if (s.size() == 1 || axis == 0) {
    const std::size_t rowlen = s.size() == 1 ? 1 : s[1];
    Shape out_shape = s;
    out_shape[0] = len;
    std::vector<double> out(v.begin() + static_cast<std::ptrdiff_t>(start * rowlen),
                            v.begin() + static_cast<std::ptrdiff_t>((start + len) * rowlen));
    return make_op(out_shape, std::move(out), {t.node()},
                   [start, rowlen](Node& self) {
                     Node& in = *self.inputs[0];
                     in.ensure_grad();
                     for (std::size_t i = 0; i < self.value.size(); ++i)
                       in.grad[start * rowlen + i] += self.grad[i];
                   });
  }
  const std::size_t rows = s[0];
  const std::size_t n = s[1];
  Shape out_shape{rows, len};
  std::vector<double> out(rows * len);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < len; ++j) out[i * len + j] = v[i * n + start + j];
  return make_op(out_shape, std::move(out), {t.node()},
                 [rows, n, start, len](Node& self) {
                   Node& in = *self.inputs[0];
                   in.ensure_grad();
                   for (std::size_t i = 0; i < rows; ++i)
                     for (std::size_t j = 0; j < len; ++j)
                       in.grad[i * n + start + j] += self.grad[i * len + j];
                 });
}

Tensor select_columns(const Tensor& t, const std::vector<int>& index) {
  check_defined(t, "select_columns");
  if (t.shape().size() != 2 || index.size() != t.shape()[0]) {
    throw ShapeError("select_columns: need (B, C) tensor and B indices, got " +
                     shape_str(t.shape()) + " and " +
                     std::to_string(index.size()) + " indices");
  }
  const std::size_t m = t.shape()[0];
  const std::size_t n = t.shape()[1];
  for (int c : index) {
    if (c < 0 || static_cast<std::size_t>(c) >= n) {
      throw ContractError("select_columns: index " + std::to_string(c) +
                          " out of range [0, " + std::to_string(n) + ")");
    }
  }
  const auto& v = t.data();
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = v[i * n + static_cast<std::size_t>(index[i])];
  return make_op(Shape{m}, std::move(out), {t.node()},
                 [n, index](Node& self) {
                   Node& in = *self.inputs[0];
                   in.ensure_grad();
                   for (std::size_t i = 0; i < self.value.size(); ++i)
                     in.grad[i * n + static_cast<std::size_t>(index[i])] += self.grad[i];
                 });
}

Tensor take_rows(const Tensor& t, const std::vector<std::size_t>& index) {
  check_defined(t, "take_rows");
  if (t.shape().size() != 2) {
    throw ShapeError("take_rows: need a 2-D tensor, got " + shape_str(t.shape()));
  }
  const std::size_t m = t.shape()[0];
  const std::size_t n = t.shape()[1];
  for (auto r : index) {
    if (r >= m) throw ContractError("take_rows: row " + std::to_string(r) + " out of range");
  }
  const auto& v = t.data();
  std::vector<double> out(index.size() * n);
  for (std::size_t i = 0; i < index.size(); ++i)
    std::copy(v.begin() + static_cast<std::ptrdiff_t>(index[i] * n),
              v.begin() + static_cast<std::ptrdiff_t>((index[i] + 1) * n),
              out.begin() + static_cast<std::ptrdiff_t>(i * n));
  return make_op(Shape{index.size(), n}, std::move(out), {t.node()},
                 [n, index](Node& self) {
                   Node& in = *self.inputs[0];
                   in.ensure_grad();
                   const std::size_t rows = index.size();
                   for (std::size_t i = 0; i < rows; ++i)
                     for (std::size_t j = 0; j < n; ++j)
                       in.grad[index[i] * n + j] += self.grad[i * n + j];
                 });
}

Tensor softmax_cross_entropy(const Tensor& logits,
                             const std::vector<int>& labels) {
  check_defined(logits, "softmax_cross_entropy");
  if (logits.shape().size() != 2) {
    throw ShapeError("softmax_cross_entropy: logits must be (B, C), got " +
                     shape_str(logits.shape()));
  }
  const std::size_t b = logits.shape()[0];
  const std::size_t c = logits.shape()[1];
  if (labels.size() != b) {
    throw ShapeError("softmax_cross_entropy: batch " + std::to_string(b) +
                     " but " + std::to_string(labels.size()) + " labels");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= c) {
      throw ContractError("softmax_cross_entropy: label " + std::to_string(y) +
                          " out of range [0, " + std::to_string(c) + ")");
    }
  }
  const auto& v = logits.data();
  std::vector<double> probs(b * c);
  double loss = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    double mx = v[i * c];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, v[i * c + j]);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      probs[i * c + j] = std::exp(v[i * c + j] - mx);
      z += probs[i * c + j];
    }
    for (std::size_t j = 0; j < c; ++j) probs[i * c + j] /= z;
    loss += std::log(z) + mx - v[i * c + static_cast<std::size_t>(labels[i])];
  }
  loss /= static_cast<double>(b);
  return make_op(Shape{}, {loss}, {logits.node()},
                 [b, c, labels, probs = std::move(probs)](Node& self) {
                   Node& in = *self.inputs[0];
                   in.ensure_grad();
                   const double g = self.grad[0] / static_cast<double>(b);
                   for (std::size_t i = 0; i < b; ++i) {
                     for (std::size_t j = 0; j < c; ++j) {
                       double d = probs[i * c + j];
                       if (j == static_cast<std::size_t>(labels[i])) d -= 1.0;
                       in.grad[i * c + j] += g * d;
                     }
                   }
                 });
}

}  // namespace vdn
