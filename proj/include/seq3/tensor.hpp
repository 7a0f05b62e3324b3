#pragma once

// Minimal reverse-mode automatic differentiation over dense double tensors.
//
// A Tensor is a cheap handle onto a graph node. Operations whose inputs
// require gradients record a backward rule and keep their inputs alive; the
// graph is rebuilt on every forward pass. Parameters are trainable leaves
// whose gradients accumulate across backward() calls until cleared.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace seq3::ad {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until needed
  bool trainable = false;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  bool is_leaf() const { return inputs.empty(); }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(std::vector<double> values, Shape shape);
  static Tensor constant(std::vector<double> values);  // 1-D
  static Tensor scalar(double value);
  static Tensor zeros(Shape shape);
  static Tensor parameter(std::vector<double> values, Shape shape);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t last_dim() const { return node_->shape.back(); }

  std::span<const double> values() const { return node_->value; }
  std::span<double> mutable_values() { return node_->value; }
  double operator[](std::size_t i) const { return node_->value[i]; }
  double item() const;

  bool trainable() const { return node_->trainable; }
  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  void zero_grad();
  // Leaves only. A trainable leaf with requires_grad off behaves as a
  // constant in every later operation.
  void set_requires_grad(bool on);
  void clear_grad() { node_->grad.clear(); }

  // A constant holding a copy of the current values.
  Tensor detach() const;

  bool same_storage(const Tensor& other) const { return node_ == other.node_; }

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// ---- core ops --------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);          // [m,k] x [k,n]
Tensor matvec(const Tensor& w, const Tensor& x);          // [m,k] x [k] -> [m]
Tensor matvec_t(const Tensor& w, const Tensor& x);        // [m,k]^T x [m] -> [k]
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_n(const std::vector<Tensor>& terms);
Tensor concat(const std::vector<Tensor>& parts);          // along last axis, 1-D
Tensor slice(const Tensor& x, std::size_t offset, std::size_t length);
Tensor stack_rows(const std::vector<Tensor>& rows);       // N x [d] -> [N,d]
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor reciprocal(const Tensor& x);
Tensor softmax(const Tensor& logits, double temperature = 1.0);
Tensor log_softmax(const Tensor& logits);
Tensor embedding(const Tensor& table, std::size_t row);   // [V,d] -> [d]
Tensor scale(const Tensor& x, double factor);
Tensor mul_scalar(const Tensor& x, const Tensor& s);      // s has one element
Tensor sum(const Tensor& x);
Tensor dot(const Tensor& a, const Tensor& b);
Tensor apply_mask(const Tensor& x, std::vector<double> mask);
Tensor cosine_similarity(const Tensor& a, const Tensor& b);

// Forward value of `hard`, backward routed entirely into `relaxed`.
Tensor straight_through(const Tensor& hard, const Tensor& relaxed);

inline constexpr double kLayerNormEps = 1e-5;
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias);

// -log softmax(logits)[target] via log-sum-exp.
Tensor cross_entropy_from_logits(const Tensor& logits, std::size_t target);

// sum_i p_i (log p_i - log q_i); log_q receives no gradient.
Tensor kl_divergence(const Tensor& log_p, const Tensor& log_q);

// ---- gradients --------------------------------------------------------------

// Populates gradients of every trainable ancestor of a one-element loss.
// Leaf gradients accumulate across calls.
void backward(const Tensor& loss);

// Topological order of the recorded operations feeding `loss`.
std::vector<detail::Node*> gradient_record(const Tensor& loss);

// Central-difference check of d f / d x. `x` must be trainable and `f`
// deterministic; its gradient is cleared first. Returns the max relative
// error with denominator max(|a|, |b|, 1e-8).
double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x, double eps = 1e-3);

}  // namespace seq3::ad
