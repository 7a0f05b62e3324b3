#include "seq3/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "seq3/errors.hpp"

namespace seq3::ad {

using detail::Node;

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

[[noreturn]] void dim_error(const char* op, const Shape& a, const Shape& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " +
                       shape_str(b));
}

[[noreturn]] void dim_error(const char* op, const Shape& a) {
  throw DimensionError(std::string(op) + ": unsupported shape " + shape_str(a));
}

void require_vector(const char* op, const Tensor& x) {
  if (x.rank() != 1) dim_error(op, x.shape());
}

void require_same(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) dim_error(op, a.shape(), b.shape());
}

// Builds the result node. The backward rule is only kept when some input
// needs a gradient; otherwise the result is a detached constant.
Tensor make(const char* op, Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
            std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  const bool needs =
      std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
  if (needs) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& t : inputs) node->inputs.push_back(t.node_ptr());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

// Gradient buffer of an input, or nullptr when it does not take gradients.
double* grad_of(Node& out, std::size_t i) {
  Node& in = *out.inputs[i];
  if (!in.requires_grad) return nullptr;
  in.ensure_grad();
  return in.grad.data();
}

}  // namespace

// ---- Tensor ----------------------------------------------------------------

Tensor Tensor::constant(std::vector<double> values, Shape shape) {
  if (numel(shape) != values.size() || shape.empty())
    throw DimensionError("constant: " + std::to_string(values.size()) +
                         " values do not fill shape " + shape_str(shape));
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  return Tensor(std::move(node));
}

Tensor Tensor::constant(std::vector<double> values) {
  const std::size_t n = values.size();
  return constant(std::move(values), Shape{n});
}

Tensor Tensor::scalar(double value) { return constant({value}, Shape{1}); }

Tensor Tensor::zeros(Shape shape) {
  const std::size_t n = numel(shape);
  return constant(std::vector<double>(n, 0.0), std::move(shape));
}

Tensor Tensor::parameter(std::vector<double> values, Shape shape) {
  Tensor t = constant(std::move(values), std::move(shape));
  t.node_->trainable = true;
  t.node_->requires_grad = true;
  return t;
}

void Tensor::set_requires_grad(bool on) {
  if (!node_->is_leaf()) throw ContractError("set_requires_grad: only leaves can be toggled");
  node_->requires_grad = on;
}

double Tensor::item() const {
  if (size() != 1) throw ContractError("item: tensor of shape " + shape_str(shape()) + " is not a scalar");
  return node_->value[0];
}

void Tensor::zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

Tensor Tensor::detach() const { return constant(node_->value, node_->shape); }

// ---- linear algebra ----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) dim_error("matmul", a.shape(), b.shape());
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n, 0.0);
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * bv[p * n + j];
    }
  return make("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](Node& o) {
    const auto& av = o.inputs[0]->value;
    const auto& bv = o.inputs[1]->value;
    const auto& g = o.grad;
    if (double* ga = grad_of(o, 0))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * bv[p * n + j];
          ga[i * k + p] += s;
        }
    if (double* gb = grad_of(o, 1))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = av[i * k + p];
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * g[i * n + j];
        }
  });
}

Tensor matvec(const Tensor& w, const Tensor& x) {
  if (w.rank() != 2 || x.rank() != 1 || w.dim(1) != x.dim(0)) dim_error("matvec", w.shape(), x.shape());
  const std::size_t m = w.dim(0), k = w.dim(1);
  std::vector<double> out(m);
  const double* wv = w.values().data();
  const double* xv = x.values().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = wv + i * k;
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += row[j] * xv[j];
    out[i] = s;
  }
  return make("matvec", {m}, std::move(out), {w, x}, [m, k](Node& o) {
    const double* wv = o.inputs[0]->value.data();
    const double* xv = o.inputs[1]->value.data();
    const double* g = o.grad.data();
    if (double* gw = grad_of(o, 0))
      for (std::size_t i = 0; i < m; ++i) {
        const double gi = g[i];
        if (gi == 0.0) continue;
        double* row = gw + i * k;
        for (std::size_t j = 0; j < k; ++j) row[j] += gi * xv[j];
      }
    if (double* gx = grad_of(o, 1))
      for (std::size_t i = 0; i < m; ++i) {
        const double gi = g[i];
        if (gi == 0.0) continue;
        const double* row = wv + i * k;
        for (std::size_t j = 0; j < k; ++j) gx[j] += gi * row[j];
      }
  });
}

Tensor matvec_t(const Tensor& w, const Tensor& x) {
  if (w.rank() != 2 || x.rank() != 1 || w.dim(0) != x.dim(0)) dim_error("matvec_t", w.shape(), x.shape());
  const std::size_t m = w.dim(0), k = w.dim(1);
  std::vector<double> out(k, 0.0);
  const double* wv = w.values().data();
  const double* xv = x.values().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double xi = xv[i];
    if (xi == 0.0) continue;
    const double* row = wv + i * k;
    for (std::size_t j = 0; j < k; ++j) out[j] += xi * row[j];
  }
  return make("matvec_t", {k}, std::move(out), {w, x}, [m, k](Node& o) {
    const double* wv = o.inputs[0]->value.data();
    const double* xv = o.inputs[1]->value.data();
    const double* g = o.grad.data();
    if (double* gw = grad_of(o, 0))
      for (std::size_t i = 0; i < m; ++i) {
        const double xi = xv[i];
        if (xi == 0.0) continue;
        double* row = gw + i * k;
        for (std::size_t j = 0; j < k; ++j) row[j] += xi * g[j];
      }
    if (double* gx = grad_of(o, 1))
      for (std::size_t i = 0; i < m; ++i) {
        const double* row = wv + i * k;
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) s += row[j] * g[j];
        gx[i] += s;
      }
  });
}

// ---- elementwise ---------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  require_same("add", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return make("add", a.shape(), std::move(out), {a, b}, [](Node& o) {
    const std::size_t n = o.grad.size();
    for (std::size_t k = 0; k < 2; ++k)
      if (double* gi = grad_of(o, k))
        for (std::size_t i = 0; i < n; ++i) gi[i] += o.grad[i];
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same("sub", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return make("sub", a.shape(), std::move(out), {a, b}, [](Node& o) {
    const std::size_t n = o.grad.size();
    if (double* ga = grad_of(o, 0))
      for (std::size_t i = 0; i < n; ++i) ga[i] += o.grad[i];
    if (double* gb = grad_of(o, 1))
      for (std::size_t i = 0; i < n; ++i) gb[i] -= o.grad[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same("mul", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return make("mul", a.shape(), std::move(out), {a, b}, [](Node& o) {
    const std::size_t n = o.grad.size();
    const auto& av = o.inputs[0]->value;
    const auto& bv = o.inputs[1]->value;
    if (double* ga = grad_of(o, 0))
      for (std::size_t i = 0; i < n; ++i) ga[i] += o.grad[i] * bv[i];
    if (double* gb = grad_of(o, 1))
      for (std::size_t i = 0; i < n; ++i) gb[i] += o.grad[i] * av[i];
  });
}

Tensor add_n(const std::vector<Tensor>& terms) {
  if (terms.empty()) throw DimensionError("add_n: no terms");
  std::vector<double> out(terms[0].size(), 0.0);
  for (const auto& t : terms) {
    require_same("add_n", terms[0], t);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += t[i];
  }
  return make("add_n", terms[0].shape(), std::move(out), terms, [](Node& o) {
    for (std::size_t k = 0; k < o.inputs.size(); ++k)
      if (double* gk = grad_of(o, k))
        for (std::size_t i = 0; i < o.grad.size(); ++i) gk[i] += o.grad[i];
  });
}

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat: no parts");
  std::vector<double> out;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    if (p.rank() != 1) dim_error("concat", parts[0].shape(), p.shape());
    offsets.push_back(out.size());
    out.insert(out.end(), p.values().begin(), p.values().end());
  }
  const std::size_t n = out.size();
  return make("concat", {n}, std::move(out), parts, [offsets = std::move(offsets)](Node& o) {
    for (std::size_t k = 0; k < o.inputs.size(); ++k)
      if (double* gk = grad_of(o, k)) {
        const std::size_t len = o.inputs[k]->value.size();
        for (std::size_t i = 0; i < len; ++i) gk[i] += o.grad[offsets[k] + i];
      }
  });
}

Tensor slice(const Tensor& x, std::size_t offset, std::size_t length) {
  require_vector("slice", x);
  if (length == 0 || offset + length > x.size())
    throw DimensionError("slice: range [" + std::to_string(offset) + "," + std::to_string(offset + length) +
                         ") outside " + shape_str(x.shape()));
  std::vector<double> out(x.values().begin() + offset, x.values().begin() + offset + length);
  return make("slice", {length}, std::move(out), {x}, [offset, length](Node& o) {
    if (double* gx = grad_of(o, 0))
      for (std::size_t i = 0; i < length; ++i) gx[offset + i] += o.grad[i];
  });
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw DimensionError("stack_rows: no rows");
  const std::size_t d = rows[0].size();
  std::vector<double> out;
  out.reserve(rows.size() * d);
  for (const auto& r : rows) {
    if (r.rank() != 1 || r.size() != d) dim_error("stack_rows", rows[0].shape(), r.shape());
    out.insert(out.end(), r.values().begin(), r.values().end());
  }
  return make("stack_rows", {rows.size(), d}, std::move(out), rows, [d](Node& o) {
    for (std::size_t k = 0; k < o.inputs.size(); ++k)
      if (double* gk = grad_of(o, k))
        for (std::size_t i = 0; i < d; ++i) gk[i] += o.grad[k * d + i];
  });
}

Tensor tanh(const Tensor& x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(x[i]);
  return make("tanh", x.shape(), std::move(out), {x}, [](Node& o) {
    if (double* gx = grad_of(o, 0))
      for (std::size_t i = 0; i < o.grad.size(); ++i) gx[i] += o.grad[i] * (1.0 - o.value[i] * o.value[i]);
  });
}

Tensor sigmoid(const Tensor& x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = x[i];
    out[i] = v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  return make("sigmoid", x.shape(), std::move(out), {x}, [](Node& o) {
    if (double* gx = grad_of(o, 0))
      for (std::size_t i = 0; i < o.grad.size(); ++i) gx[i] += o.grad[i] * o.value[i] * (1.0 - o.value[i]);
  });
}

Tensor softplus(const Tensor& x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = x[i];
    out[i] = std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
  }
  return make("softplus", x.shape(), std::move(out), {x}, [](Node& o) {
    const auto& xv = o.inputs[0]->value;
    if (double* gx = grad_of(o, 0))
      for (std::size_t i = 0; i < o.grad.size(); ++i) {
        const double v = xv[i];
        const double s = v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
        gx[i] += o.grad[i] * s;
      }
  });
}

Tensor reciprocal(const Tensor& x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (x[i] == 0.0) throw InputError("reciprocal: division by zero");
    out[i] = 1.0 / x[i];
  }
  return make("reciprocal", x.shape(), std::move(out), {x}, [](Node& o) {
    if (double* gx = grad_of(o, 0))
      for (std::size_t i = 0; i < o.grad.size(); ++i) gx[i] -= o.grad[i] * o.value[i] * o.value[i];
  });
}

namespace {

std::vector<double> softmax_values(std::span<const double> u, double temperature) {
  const double mx = *std::max_element(u.begin(), u.end());
  std::vector<double> out(u.size());
  double z = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    out[i] = std::exp((u[i] - mx) / temperature);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

double log_sum_exp(std::span<const double> u) {
  const double mx = *std::max_element(u.begin(), u.end());
  double z = 0.0;
  for (double v : u) z += std::exp(v - mx);
  return mx + std::log(z);
}

}  // namespace

Tensor softmax(const Tensor& logits, double temperature) {
  require_vector("softmax", logits);
  if (!(temperature > 0.0)) throw InputError("softmax: temperature must be positive");
  return make("softmax", logits.shape(), softmax_values(logits.values(), temperature), {logits},
              [temperature](Node& o) {
                if (double* gu = grad_of(o, 0)) {
                  double gs = 0.0;
                  for (std::size_t i = 0; i < o.grad.size(); ++i) gs += o.grad[i] * o.value[i];
                  for (std::size_t i = 0; i < o.grad.size(); ++i)
                    gu[i] += o.value[i] * (o.grad[i] - gs) / temperature;
                }
              });
}

Tensor log_softmax(const Tensor& logits) {
  require_vector("log_softmax", logits);
  const double lse = log_sum_exp(logits.values());
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = logits[i] - lse;
  return make("log_softmax", logits.shape(), std::move(out), {logits}, [](Node& o) {
    if (double* gu = grad_of(o, 0)) {
      double gs = 0.0;
      for (double g : o.grad) gs += g;
      for (std::size_t i = 0; i < o.grad.size(); ++i) gu[i] += o.grad[i] - std::exp(o.value[i]) * gs;
    }
  });
}

Tensor embedding(const Tensor& table, std::size_t row) {
  if (table.rank() != 2) dim_error("embedding", table.shape());
  if (row >= table.dim(0))
    throw IndexError("embedding: row " + std::to_string(row) + " outside table " + shape_str(table.shape()));
  const std::size_t d = table.dim(1);
  std::vector<double> out(table.values().begin() + row * d, table.values().begin() + (row + 1) * d);
  return make("embedding", {d}, std::move(out), {table}, [row, d](Node& o) {
    if (double* gt = grad_of(o, 0))
      for (std::size_t i = 0; i < d; ++i) gt[row * d + i] += o.grad[i];
  });
}

Tensor scale(const Tensor& x, double factor) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * factor;
  return make("scale", x.shape(), std::move(out), {x}, [factor](Node& o) {
    if (double* gx = grad_of(o, 0))
      for (std::size_t i = 0; i < o.grad.size(); ++i) gx[i] += o.grad[i] * factor;
  });
}

Tensor mul_scalar(const Tensor& x, const Tensor& s) {
  if (s.size() != 1) dim_error("mul_scalar", x.shape(), s.shape());
  const double sv = s[0];
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * sv;
  return make("mul_scalar", x.shape(), std::move(out), {x, s}, [](Node& o) {
    const auto& xv = o.inputs[0]->value;
    const double sv = o.inputs[1]->value[0];
    if (double* gx = grad_of(o, 0))
      for (std::size_t i = 0; i < o.grad.size(); ++i) gx[i] += o.grad[i] * sv;
    if (double* gs = grad_of(o, 1))
      for (std::size_t i = 0; i < o.grad.size(); ++i) gs[0] += o.grad[i] * xv[i];
  });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  return make("sum", {1}, {s}, {x}, [](Node& o) {
    if (double* gx = grad_of(o, 0)) {
      const std::size_t n = o.inputs[0]->value.size();
      for (std::size_t i = 0; i < n; ++i) gx[i] += o.grad[0];
    }
  });
}

Tensor dot(const Tensor& a, const Tensor& b) {
  require_same("dot", a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return make("dot", {1}, {s}, {a, b}, [](Node& o) {
    const auto& av = o.inputs[0]->value;
    const auto& bv = o.inputs[1]->value;
    const double g = o.grad[0];
    if (double* ga = grad_of(o, 0))
      for (std::size_t i = 0; i < av.size(); ++i) ga[i] += g * bv[i];
    if (double* gb = grad_of(o, 1))
      for (std::size_t i = 0; i < av.size(); ++i) gb[i] += g * av[i];
  });
}

Tensor apply_mask(const Tensor& x, std::vector<double> mask) {
  if (mask.size() != x.size()) dim_error("apply_mask", x.shape(), Shape{mask.size()});
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * mask[i];
  return make("apply_mask", x.shape(), std::move(out), {x}, [mask = std::move(mask)](Node& o) {
    if (double* gx = grad_of(o, 0))
      for (std::size_t i = 0; i < o.grad.size(); ++i) gx[i] += o.grad[i] * mask[i];
  });
}

Tensor cosine_similarity(const Tensor& a, const Tensor& b) {
  require_same("cosine_similarity", a, b);
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) throw InputError("cosine_similarity: zero-norm vector");
  const double na = std::sqrt(aa), nb = std::sqrt(bb);
  const double cos = ab / (na * nb);
  // Rounding can push |cos| just past 1; the reported value is clamped.
  return make("cosine_similarity", {1}, {std::clamp(cos, -1.0, 1.0)}, {a, b}, [na, nb, cos](Node& o) {
    const auto& av = o.inputs[0]->value;
    const auto& bv = o.inputs[1]->value;
    const double g = o.grad[0];
    if (double* ga = grad_of(o, 0))
      for (std::size_t i = 0; i < av.size(); ++i) ga[i] += g * (bv[i] / (na * nb) - cos * av[i] / (na * na));
    if (double* gb = grad_of(o, 1))
      for (std::size_t i = 0; i < av.size(); ++i) gb[i] += g * (av[i] / (na * nb) - cos * bv[i] / (nb * nb));
  });
}

Tensor straight_through(const Tensor& hard, const Tensor& relaxed) {
  require_same("straight_through", hard, relaxed);
  std::vector<double> out(hard.values().begin(), hard.values().end());
  // Input 0 is the relaxed path so only it is linked into the graph.
  return make("straight_through", hard.shape(), std::move(out), {relaxed}, [](Node& o) {
    if (double* gr = grad_of(o, 0))
      for (std::size_t i = 0; i < o.grad.size(); ++i) gr[i] += o.grad[i];
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias) {
  require_vector("layer_norm", x);
  require_same("layer_norm", x, gain);
  require_same("layer_norm", x, bias);
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x.values()) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : x.values()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
  std::vector<double> xhat(n), out(n);
  for (std::size_t i = 0; i < n; ++i) {
    xhat[i] = (x[i] - mean) * inv_std;
    out[i] = gain[i] * xhat[i] + bias[i];
  }
  return make("layer_norm", x.shape(), std::move(out), {x, gain, bias},
              [n, inv_std, xhat = std::move(xhat)](Node& o) {
                const auto& g = o.grad;
                const auto& gain = o.inputs[1]->value;
                if (double* gx = grad_of(o, 0)) {
                  double mean_d = 0.0, mean_dx = 0.0;
                  for (std::size_t i = 0; i < n; ++i) {
                    const double d = g[i] * gain[i];
                    mean_d += d;
                    mean_dx += d * xhat[i];
                  }
                  mean_d /= static_cast<double>(n);
                  mean_dx /= static_cast<double>(n);
                  for (std::size_t i = 0; i < n; ++i)
                    gx[i] += inv_std * (g[i] * gain[i] - mean_d - xhat[i] * mean_dx);
                }
                if (double* gg = grad_of(o, 1))
                  for (std::size_t i = 0; i < n; ++i) gg[i] += g[i] * xhat[i];
                if (double* gb = grad_of(o, 2))
                  for (std::size_t i = 0; i < n; ++i) gb[i] += g[i];
              });
}

Tensor cross_entropy_from_logits(const Tensor& logits, std::size_t target) {
  require_vector("cross_entropy_from_logits", logits);
  if (target >= logits.size())
    throw IndexError("cross_entropy_from_logits: target " + std::to_string(target) + " outside " +
                     std::to_string(logits.size()) + " classes");
  const double lse = log_sum_exp(logits.values());
  return make("cross_entropy", {1}, {lse - logits[target]}, {logits}, [target, lse](Node& o) {
    if (double* gu = grad_of(o, 0)) {
      const auto& u = o.inputs[0]->value;
      const double g = o.grad[0];
      for (std::size_t i = 0; i < u.size(); ++i) gu[i] += g * std::exp(u[i] - lse);
      gu[target] -= g;
    }
  });
}

Tensor kl_divergence(const Tensor& log_p, const Tensor& log_q) {
  require_same("kl_divergence", log_p, log_q);
  require_vector("kl_divergence", log_p);
  double mass_p = 0.0, mass_q = 0.0, kl = 0.0;
  for (std::size_t i = 0; i < log_p.size(); ++i) {
    const double p = std::exp(log_p[i]);
    mass_p += p;
    mass_q += std::exp(log_q[i]);
    if (p > 0.0) kl += p * (log_p[i] - log_q[i]);
  }
  if (std::abs(mass_p - 1.0) > 1e-6 || std::abs(mass_q - 1.0) > 1e-6)
    throw InputError("kl_divergence: inputs are not normalized log-distributions");
  // log_q is treated as a constant: only log_p is linked.
  auto q = std::vector<double>(log_q.values().begin(), log_q.values().end());
  return make("kl_divergence", {1}, {kl}, {log_p}, [q = std::move(q)](Node& o) {
    if (double* gl = grad_of(o, 0)) {
      const auto& lp = o.inputs[0]->value;
      const double g = o.grad[0];
      for (std::size_t i = 0; i < lp.size(); ++i) {
        const double p = std::exp(lp[i]);
        if (p > 0.0) gl[i] += g * p * (lp[i] - q[i] + 1.0);
      }
    }
  });
}

// ---- backward ------------------------------------------------------------------

std::vector<Node*> gradient_record(const Tensor& loss) {
  std::vector<Node*> order;
  if (!loss.requires_grad()) return order;
  std::unordered_set<Node*> seen;
  // Iterative post-order DFS: inputs land before the ops that consume them.
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(loss.node(), 0);
  seen.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw ContractError("backward: loss must be a scalar, got shape " +
                        (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  const auto order = gradient_record(loss);
  if (order.empty()) return;
  for (Node* n : order) {
    if (n->is_leaf())
      n->ensure_grad();
    else
      n->grad.assign(n->value.size(), 0.0);
  }
  loss.node()->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if (!(*it)->is_leaf()) (*it)->backward(**it);
}

double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x, double eps) {
  if (!x.trainable()) throw ContractError("grad_check: x must be a trainable tensor");
  x.clear_grad();
  backward(f(x));
  std::vector<double> analytic(x.size(), 0.0);
  if (x.has_grad()) std::copy(x.grad().begin(), x.grad().end(), analytic.begin());
  x.clear_grad();

  double worst = 0.0;
  auto vals = x.mutable_values();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = vals[i];
    vals[i] = saved + eps;
    const double up = f(x).item();
    vals[i] = saved - eps;
    const double down = f(x).item();
    vals[i] = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-8});
    worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
  }
  return worst;
}

}  // namespace seq3::ad
