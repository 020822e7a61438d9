// Copyright 2026 The HashNews Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

// Dense double-precision tensors with tape-free reverse-mode autodiff.
//
// Every operation returns a Var whose node remembers its inputs and a
// backward closure. backward() on a scalar Var walks the resulting DAG in
// reverse topological order, visiting each node once, and adds the
// gradient into every node that requires one. Leaf gradients accumulate
// across backward() calls until zero_grad().
//
// Ops take rank-2 operands. The only broadcast is add(matrix, row vector).

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hashnews/rng.h"

namespace hashnews::diff {

class Tensor {
 public:
  static constexpr std::size_t kMaxRank = 3;

  Tensor() = default;
  Tensor(std::initializer_list<std::size_t> shape, double fill = 0.0);
  Tensor(std::span<const std::size_t> shape, std::vector<double> data);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  static Tensor zeros(std::size_t rows, std::size_t cols) { return Tensor({rows, cols}); }

  std::size_t rank() const { return rank_; }
  std::size_t dim(std::size_t i) const { return dims_[i]; }
  std::vector<std::size_t> shape() const { return {dims_.begin(), dims_.begin() + rank_}; }
  std::size_t size() const { return data_.size(); }
  // Rank-2 accessors; a rank-1 tensor reads as a single row.
  std::size_t rows() const { return rank_ == 2 ? dims_[0] : 1; }
  std::size_t cols() const { return rank_ == 2 ? dims_[1] : (rank_ == 1 ? dims_[0] : 1); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const Tensor& other) const {
    return rank_ == other.rank_ && dims_ == other.dims_;
  }
  bool all_finite() const;
  std::string shape_string() const;
  void fill(double v);

  bool operator==(const Tensor& other) const {
    return same_shape(other) && data_ == other.data_;
  }

 private:
  std::array<std::size_t, kMaxRank> dims_{};
  std::size_t rank_ = 0;
  std::vector<double> data_;
};

struct Node {
  Tensor value;
  Tensor grad;  // allocated on first use when requires_grad
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward_fn;

  Tensor& ensure_grad();
};

// Handle to a node in the computation graph.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Tensor& value() const { return node_->value; }
  // Direct mutation is meant for parameters (optimizer updates, gradient
  // checks), never for interior nodes.
  Tensor& mutable_value() { return node_->value; }
  const Tensor& grad() const { return node_->ensure_grad(); }
  Tensor& mutable_grad() { return node_->ensure_grad(); }
  bool requires_grad() const { return node_->requires_grad; }
  void zero_grad();

  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  double item() const;

  const std::shared_ptr<Node>& node() const { return node_; }
  bool defined() const { return node_ != nullptr; }

 private:
  std::shared_ptr<Node> node_;
};

// While alive on a thread, ops built on that thread record no inputs or
// backward closures. Used for inference.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Builds a node from a forward value and a backward closure. The closure
// receives the output node (its grad holds dLoss/dOutput) and must add
// into the grads of those inputs that require one. Exposed so tests and
// callers can define custom ops.
Var make_op(const char* name, Tensor value, std::vector<Var> inputs,
            std::function<void(Node&)> backward);

// Populates grads of every node reachable from `loss` (a 1x1 tensor).
void backward(const Var& loss);

// Nodes reachable from root in topological order (inputs first), each once.
std::vector<Node*> topological_order(const Var& root);

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
// Same shapes, or `b` a 1 x cols row vector added to every row of `a`.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
// axis 0 stacks rows, axis 1 stacks columns.
Var concat(const std::vector<Var>& parts, int axis);
Var slice(const Var& a, int axis, std::size_t begin, std::size_t end);
Var tanh(const Var& a);
Var sigmoid(const Var& a);
// axis 0 normalizes each column, axis 1 each row.
Var softmax(const Var& a, int axis);
Var log_softmax(const Var& a, int axis);
// Element (r, index[r]) of each row, as an n x 1 column.
Var pick(const Var& a, std::span<const std::int32_t> index);
Var sum(const Var& a);
Var mean(const Var& a);
// Inverted dropout; identity when !training or rate == 0.
Var dropout(const Var& a, double rate, Rng& rng, bool training);
Var embedding_lookup(const Var& table, std::span<const std::int32_t> ids);

// Central-difference gradient check. Samples up to `samples` coordinates
// across `params` (all of them when fewer exist) and returns the maximum of
// |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
double grad_check(const std::function<Var()>& loss_fn, std::vector<Var> params, double eps = 1e-4,
                  std::size_t samples = 200, std::uint64_t seed = 7);

}  // namespace hashnews::diff
