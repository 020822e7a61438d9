// Copyright 2026 The HashNews Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hashnews/diffmath.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "hashnews/errors.h"

namespace hashnews::diff {

namespace {

void require_rank2(const Var& v, const char* op) {
  if (v.value().rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got shape " +
                     v.value().shape_string());
  }
}

[[noreturn]] void shape_mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " +
                   b.shape_string());
}

// Adds `src` into the grad of `node` when it tracks one.
void accumulate(Node& node, const Tensor& src) {
  if (!node.requires_grad) return;
  auto g = node.ensure_grad().data();
  auto s = src.data();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += s[i];
}

thread_local bool grad_disabled = false;

}  // namespace

NoGradGuard::NoGradGuard() : previous_(grad_disabled) { grad_disabled = true; }
NoGradGuard::~NoGradGuard() { grad_disabled = previous_; }

Tensor::Tensor(std::initializer_list<std::size_t> shape, double fill) {
  if (shape.size() > kMaxRank) throw ShapeError("tensor rank exceeds 3");
  rank_ = shape.size();
  std::copy(shape.begin(), shape.end(), dims_.begin());
  const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                        std::multiplies<>());
  data_.assign(n, fill);
}

Tensor::Tensor(std::span<const std::size_t> shape, std::vector<double> data) {
  if (shape.size() > kMaxRank) throw ShapeError("tensor rank exceeds 3");
  rank_ = shape.size();
  std::copy(shape.begin(), shape.end(), dims_.begin());
  const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                        std::multiplies<>());
  if (n != data.size()) {
    throw ShapeError("tensor data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_string());
  }
  data_ = std::move(data);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
  const std::array<std::size_t, 2> shape{rows, cols};
  return Tensor(shape, std::move(data));
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

std::string Tensor::shape_string() const {
  std::string s = "[";
  for (std::size_t i = 0; i < rank_; ++i) {
    if (i) s += "x";
    s += std::to_string(dims_[i]);
  }
  return s + "]";
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor& Node::ensure_grad() {
  if (!grad.same_shape(value) || grad.size() != value.size()) {
    grad = value;
    grad.fill(0.0);
  }
  return grad;
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

void Var::zero_grad() {
  if (node_->requires_grad) node_->ensure_grad().fill(0.0);
}

double Var::item() const {
  if (value().size() != 1) throw ArgumentError("item: tensor is not a scalar");
  return value()[0];
}

Var make_op(const char* name, Tensor value, std::vector<Var> inputs,
            std::function<void(Node&)> backward) {
  if (!value.all_finite()) {
    throw NumericError(std::string(name) + ": non-finite value in output " + value.shape_string());
  }
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = name;
  node->requires_grad =
      !grad_disabled && std::any_of(inputs.begin(), inputs.end(), [](const Var& v) { return v.requires_grad(); });
  if (node->requires_grad) {
    node->inputs.reserve(inputs.size());
    for (auto& v : inputs) node->inputs.push_back(v.node());
    node->backward_fn = std::move(backward);
  }
  return Var(std::move(node));
}

std::vector<Node*> topological_order(const Var& root) {
  std::vector<Node*> order;
  std::unordered_set<const Node*> visited;
  // Iterative post-order DFS.
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

void backward(const Var& loss) {
  if (loss.value().size() != 1) {
    throw ArgumentError("backward: loss must be a scalar, got shape " +
                        loss.value().shape_string());
  }
  if (!loss.requires_grad()) return;
  auto order = topological_order(loss);
  for (Node* n : order) {
    if (n->backward_fn) n->ensure_grad().fill(0.0);
  }
  loss.node()->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

Var matmul(const Var& a, const Var& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const auto &A = a.value(), &B = b.value();
  const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
  if (B.rows() != k) shape_mismatch("matmul", A, B);
  Tensor C({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A(i, p);
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) C(i, j) += av * B(p, j);
    }
  }
  return make_op("matmul", std::move(C), {a, b}, [n, k, m](Node& out) {
    Node& na = *out.inputs[0];
    Node& nb = *out.inputs[1];
    const Tensor& G = out.grad;
    if (na.requires_grad) {
      Tensor& GA = na.ensure_grad();
      const Tensor& Bv = nb.value;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
          const double g = G(i, j);
          if (g == 0.0) continue;
          for (std::size_t p = 0; p < k; ++p) GA(i, p) += g * Bv(p, j);
        }
    }
    if (nb.requires_grad) {
      Tensor& GB = nb.ensure_grad();
      const Tensor& Av = na.value;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double av = Av(i, p);
          if (av == 0.0) continue;
          for (std::size_t j = 0; j < m; ++j) GB(p, j) += av * G(i, j);
        }
    }
  });
}

Var transpose(const Var& a) {
  require_rank2(a, "transpose");
  const auto& A = a.value();
  const std::size_t n = A.rows(), m = A.cols();
  Tensor T({m, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) T(j, i) = A(i, j);
  return make_op("transpose", std::move(T), {a}, [n, m](Node& out) {
    Node& na = *out.inputs[0];
    Tensor& GA = na.ensure_grad();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) GA(i, j) += out.grad(j, i);
  });
}

Var add(const Var& a, const Var& b) {
  require_rank2(a, "add");
  require_rank2(b, "add");
  const auto &A = a.value(), &B = b.value();
  if (A.same_shape(B)) {
    Tensor C = A;
    for (std::size_t i = 0; i < C.size(); ++i) C[i] += B[i];
    return make_op("add", std::move(C), {a, b}, [](Node& out) {
      accumulate(*out.inputs[0], out.grad);
      accumulate(*out.inputs[1], out.grad);
    });
  }
  if (B.rows() != 1 || B.cols() != A.cols()) shape_mismatch("add", A, B);
  const std::size_t n = A.rows(), m = A.cols();
  Tensor C = A;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) C(i, j) += B(0, j);
  return make_op("add_row", std::move(C), {a, b}, [n, m](Node& out) {
    accumulate(*out.inputs[0], out.grad);
    Node& nb = *out.inputs[1];
    if (!nb.requires_grad) return;
    Tensor& GB = nb.ensure_grad();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) GB(0, j) += out.grad(i, j);
  });
}

Var sub(const Var& a, const Var& b) {
  require_rank2(a, "sub");
  const auto &A = a.value(), &B = b.value();
  if (!A.same_shape(B)) shape_mismatch("sub", A, B);
  Tensor C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C[i] -= B[i];
  return make_op("sub", std::move(C), {a, b}, [](Node& out) {
    accumulate(*out.inputs[0], out.grad);
    Node& nb = *out.inputs[1];
    if (!nb.requires_grad) return;
    auto g = nb.ensure_grad().data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] -= out.grad[i];
  });
}

Var mul(const Var& a, const Var& b) {
  require_rank2(a, "mul");
  const auto &A = a.value(), &B = b.value();
  if (!A.same_shape(B)) shape_mismatch("mul", A, B);
  Tensor C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C[i] *= B[i];
  return make_op("mul", std::move(C), {a, b}, [](Node& out) {
    Node& na = *out.inputs[0];
    Node& nb = *out.inputs[1];
    if (na.requires_grad) {
      auto g = na.ensure_grad().data();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i] * nb.value[i];
    }
    if (nb.requires_grad) {
      auto g = nb.ensure_grad().data();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i] * na.value[i];
    }
  });
}

Var scale(const Var& a, double s) {
  Tensor C = a.value();
  for (auto& x : C.data()) x *= s;
  return make_op("scale", std::move(C), {a}, [s](Node& out) {
    auto g = out.inputs[0]->ensure_grad().data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * out.grad[i];
  });
}

Var concat(const std::vector<Var>& parts, int axis) {
  if (parts.empty()) throw ArgumentError("concat: no inputs");
  if (axis != 0 && axis != 1) throw ArgumentError("concat: axis must be 0 or 1");
  for (const auto& p : parts) require_rank2(p, "concat");
  const auto& first = parts.front().value();
  std::size_t rows = 0, cols = 0;
  for (const auto& p : parts) {
    const auto& v = p.value();
    if (axis == 0) {
      if (v.cols() != first.cols()) shape_mismatch("concat", first, v);
      rows += v.rows();
    } else {
      if (v.rows() != first.rows()) shape_mismatch("concat", first, v);
      cols += v.cols();
    }
  }
  if (axis == 0) cols = first.cols();
  else rows = first.rows();

  Tensor C({rows, cols});
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const auto& v = p.value();
    for (std::size_t i = 0; i < v.rows(); ++i)
      for (std::size_t j = 0; j < v.cols(); ++j) {
        if (axis == 0) C(offset + i, j) = v(i, j);
        else C(i, offset + j) = v(i, j);
      }
    offset += axis == 0 ? v.rows() : v.cols();
  }
  return make_op("concat", std::move(C), parts, [axis](Node& out) {
    std::size_t off = 0;
    for (auto& in : out.inputs) {
      const std::size_t r = in->value.rows(), c = in->value.cols();
      if (in->requires_grad) {
        Tensor& g = in->ensure_grad();
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j)
            g(i, j) += axis == 0 ? out.grad(off + i, j) : out.grad(i, off + j);
      }
      off += axis == 0 ? r : c;
    }
  });
}

Var slice(const Var& a, int axis, std::size_t begin, std::size_t end) {
  require_rank2(a, "slice");
  if (axis != 0 && axis != 1) throw ArgumentError("slice: axis must be 0 or 1");
  const auto& A = a.value();
  const std::size_t extent = axis == 0 ? A.rows() : A.cols();
  if (begin >= end || end > extent) {
    throw ShapeError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of bounds for shape " + A.shape_string());
  }
  const std::size_t rows = axis == 0 ? end - begin : A.rows();
  const std::size_t cols = axis == 1 ? end - begin : A.cols();
  Tensor C({rows, cols});
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      C(i, j) = axis == 0 ? A(begin + i, j) : A(i, begin + j);
  return make_op("slice", std::move(C), {a}, [axis, begin, rows, cols](Node& out) {
    Tensor& g = out.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) {
        if (axis == 0) g(begin + i, j) += out.grad(i, j);
        else g(i, begin + j) += out.grad(i, j);
      }
  });
}

Var tanh(const Var& a) {
  Tensor C = a.value();
  for (auto& x : C.data()) x = std::tanh(x);
  return make_op("tanh", std::move(C), {a}, [](Node& out) {
    auto g = out.inputs[0]->ensure_grad().data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double y = out.value[i];
      g[i] += out.grad[i] * (1.0 - y * y);
    }
  });
}

Var sigmoid(const Var& a) {
  Tensor C = a.value();
  for (auto& x : C.data()) x = 1.0 / (1.0 + std::exp(-x));
  return make_op("sigmoid", std::move(C), {a}, [](Node& out) {
    auto g = out.inputs[0]->ensure_grad().data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double y = out.value[i];
      g[i] += out.grad[i] * y * (1.0 - y);
    }
  });
}

namespace {

// Visits each softmax "lane" (a column for axis 0, a row for axis 1) as
// (start offset, stride, length).
template <typename Fn>
void for_each_lane(const Tensor& t, int axis, Fn fn) {
  const std::size_t r = t.rows(), c = t.cols();
  if (axis == 0) {
    for (std::size_t j = 0; j < c; ++j) fn(j, c, r);
  } else {
    for (std::size_t i = 0; i < r; ++i) fn(i * c, std::size_t{1}, c);
  }
}

}  // namespace

Var softmax(const Var& a, int axis) {
  require_rank2(a, "softmax");
  if (axis != 0 && axis != 1) throw ArgumentError("softmax: axis must be 0 or 1");
  Tensor C = a.value();
  for_each_lane(C, axis, [&](std::size_t start, std::size_t stride, std::size_t len) {
    double mx = -INFINITY;
    for (std::size_t t = 0; t < len; ++t) mx = std::max(mx, C[start + t * stride]);
    double z = 0;
    for (std::size_t t = 0; t < len; ++t) {
      double& x = C[start + t * stride];
      x = std::exp(x - mx);
      z += x;
    }
    for (std::size_t t = 0; t < len; ++t) C[start + t * stride] /= z;
  });
  return make_op("softmax", std::move(C), {a}, [axis](Node& out) {
    Tensor& g = out.inputs[0]->ensure_grad();
    for_each_lane(out.value, axis, [&](std::size_t start, std::size_t stride, std::size_t len) {
      double dot = 0;
      for (std::size_t t = 0; t < len; ++t) {
        const std::size_t idx = start + t * stride;
        dot += out.grad[idx] * out.value[idx];
      }
      for (std::size_t t = 0; t < len; ++t) {
        const std::size_t idx = start + t * stride;
        g[idx] += out.value[idx] * (out.grad[idx] - dot);
      }
    });
  });
}

Var log_softmax(const Var& a, int axis) {
  require_rank2(a, "log_softmax");
  if (axis != 0 && axis != 1) throw ArgumentError("log_softmax: axis must be 0 or 1");
  Tensor C = a.value();
  for_each_lane(C, axis, [&](std::size_t start, std::size_t stride, std::size_t len) {
    double mx = -INFINITY;
    for (std::size_t t = 0; t < len; ++t) mx = std::max(mx, C[start + t * stride]);
    double z = 0;
    for (std::size_t t = 0; t < len; ++t) z += std::exp(C[start + t * stride] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t t = 0; t < len; ++t) C[start + t * stride] -= lse;
  });
  return make_op("log_softmax", std::move(C), {a}, [axis](Node& out) {
    Tensor& g = out.inputs[0]->ensure_grad();
    for_each_lane(out.value, axis, [&](std::size_t start, std::size_t stride, std::size_t len) {
      double total = 0;
      for (std::size_t t = 0; t < len; ++t) total += out.grad[start + t * stride];
      for (std::size_t t = 0; t < len; ++t) {
        const std::size_t idx = start + t * stride;
        g[idx] += out.grad[idx] - std::exp(out.value[idx]) * total;
      }
    });
  });
}

Var pick(const Var& a, std::span<const std::int32_t> index) {
  require_rank2(a, "pick");
  const auto& A = a.value();
  if (index.size() != A.rows()) {
    throw ShapeError("pick: " + std::to_string(index.size()) + " indices for shape " +
                     A.shape_string());
  }
  std::vector<std::int32_t> idx(index.begin(), index.end());
  Tensor C({A.rows(), 1});
  for (std::size_t i = 0; i < A.rows(); ++i) {
    if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= A.cols()) {
      throw ArgumentError("pick: index " + std::to_string(idx[i]) + " out of range");
    }
    C(i, 0) = A(i, static_cast<std::size_t>(idx[i]));
  }
  return make_op("pick", std::move(C), {a}, [idx = std::move(idx)](Node& out) {
    Tensor& g = out.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      g(i, static_cast<std::size_t>(idx[i])) += out.grad(i, 0);
    }
  });
}

Var sum(const Var& a) {
  double s = 0;
  for (double x : a.value().data()) s += x;
  return make_op("sum", Tensor::matrix(1, 1, {s}), {a}, [](Node& out) {
    const double go = out.grad[0];
    for (auto& g : out.inputs[0]->ensure_grad().data()) g += go;
  });
}

Var mean(const Var& a) {
  if (a.value().size() == 0) throw ArgumentError("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var dropout(const Var& a, double rate, Rng& rng, bool training) {
  if (!(rate >= 0 && rate < 1)) throw ArgumentError("dropout: rate must be in [0, 1)");
  if (!training || rate == 0.0) return a;
  const double keep = 1.0 - rate;
  Tensor mask = a.value();
  for (auto& m : mask.data()) m = uniform01(rng) < keep ? 1.0 / keep : 0.0;
  Tensor C = a.value();
  for (std::size_t i = 0; i < C.size(); ++i) C[i] *= mask[i];
  return make_op("dropout", std::move(C), {a}, [mask = std::move(mask)](Node& out) {
    auto g = out.inputs[0]->ensure_grad().data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i] * mask[i];
  });
}

Var embedding_lookup(const Var& table, std::span<const std::int32_t> ids) {
  require_rank2(table, "embedding_lookup");
  const auto& E = table.value();
  if (ids.empty()) throw ArgumentError("embedding_lookup: empty id sequence");
  std::vector<std::int32_t> rows(ids.begin(), ids.end());
  const std::size_t dim = E.cols();
  Tensor C({rows.size(), dim});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || static_cast<std::size_t>(rows[i]) >= E.rows()) {
      throw ArgumentError("embedding_lookup: id " + std::to_string(rows[i]) + " out of range [0, " +
                          std::to_string(E.rows()) + ")");
    }
    for (std::size_t j = 0; j < dim; ++j) C(i, j) = E(static_cast<std::size_t>(rows[i]), j);
  }
  return make_op("embedding", std::move(C), {table}, [rows = std::move(rows), dim](Node& out) {
    Tensor& g = out.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < dim; ++j)
        g(static_cast<std::size_t>(rows[i]), j) += out.grad(i, j);
  });
}

double grad_check(const std::function<Var()>& loss_fn, std::vector<Var> params, double eps,
                  std::size_t samples, std::uint64_t seed) {
  if (!(eps > 0)) throw ArgumentError("grad_check: eps must be > 0");
  for (auto& p : params) p.zero_grad();
  backward(loss_fn());

  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t p = 0; p < params.size(); ++p)
    for (std::size_t i = 0; i < params[p].value().size(); ++i) coords.emplace_back(p, i);
  if (coords.size() > samples) {
    Rng rng(seed);
    shuffle(coords, rng);
    coords.resize(samples);
  }

  double worst = 0;
  for (auto [p, i] : coords) {
    Tensor& value = params[p].mutable_value();
    const double saved = value[i];
    value[i] = saved + eps;
    const double plus = loss_fn().item();
    value[i] = saved - eps;
    const double minus = loss_fn().item();
    value[i] = saved;
    const double numeric = (plus - minus) / (2 * eps);
    const double analytic = params[p].grad()[i];
    const double err =
        std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace hashnews::diff
