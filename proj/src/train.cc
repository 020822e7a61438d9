// Copyright 2026 The HashNews Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "hashnews/errors.h"
#include "hashnews/generator.h"

namespace hashnews {

namespace {

using diff::Tensor;
using diff::Var;

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, std::vector<Var> params) : kind_(kind), params_(std::move(params)) {
    if (kind_ == OptimizerKind::kAdam) {
      for (const auto& p : params_) {
        Tensor zero = p.value();
        zero.fill(0.0);
        m_.push_back(zero);
        v_.push_back(zero);
      }
    }
  }

  void step(double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto value = params_[i].mutable_value().data();
      const auto grad = params_[i].grad().data();
      if (kind_ == OptimizerKind::kSgd) {
        for (std::size_t j = 0; j < value.size(); ++j) value[j] -= lr * grad[j];
        continue;
      }
      auto m = m_[i].data();
      auto v = v_[i].data();
      for (std::size_t j = 0; j < value.size(); ++j) {
        m[j] = kBeta1 * m[j] + (1 - kBeta1) * grad[j];
        v[j] = kBeta2 * v[j] + (1 - kBeta2) * grad[j] * grad[j];
        value[j] -= lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + kEps);
      }
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  OptimizerKind kind_;
  std::vector<Var> params_;
  std::vector<Tensor> m_, v_;
  std::uint64_t t_ = 0;
};

std::vector<Var> parameter_list(const HashtagGenerator& model) {
  std::vector<Var> out;
  for (auto& [name, p] : model.params().named()) out.push_back(p);
  return out;
}

void scale_and_clip(std::vector<Var>& params, double scale, double max_norm) {
  double sq = 0;
  for (auto& p : params) {
    for (auto& g : p.mutable_grad().data()) {
      g *= scale;
      sq += g * g;
    }
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const double c = max_norm / norm;
    for (auto& p : params)
      for (auto& g : p.mutable_grad().data()) g *= c;
  }
}

std::string fmt_double(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace

double evaluate_loss(const HashtagGenerator& model, std::span<const Example> examples) {
  if (examples.empty()) throw ArgumentError("evaluate_loss: no examples");
  diff::NoGradGuard no_grad;
  Rng rng(0);
  double total = 0;
  for (const auto& ex : examples) total += model.loss(ex, false, rng).item();
  return total / static_cast<double>(examples.size());
}

TrainResult train(HashtagGenerator& model, std::span<const Example> train_set,
                  std::span<const Example> validation_set, const TrainLogger& log) {
  if (train_set.empty()) throw ArgumentError("train: empty training set");
  const auto& cfg = model.config();
  auto params = parameter_list(model);
  Optimizer optimizer(cfg.optimizer, params);
  Rng order_rng(cfg.seed);
  Rng dropout_rng(cfg.seed + 1);

  std::vector<Tensor> best_values;
  double best = std::numeric_limits<double>::infinity();
  double lr = cfg.learning_rate;
  std::size_t bad_epochs = 0;
  TrainResult result;

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order, order_rng);
    double total = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      for (auto& p : params) p.zero_grad();
      for (std::size_t i = start; i < end; ++i) {
        const Var loss = model.loss(train_set[order[i]], true, dropout_rng);
        total += loss.item();
        diff::backward(loss);
      }
      scale_and_clip(params, 1.0 / static_cast<double>(end - start), cfg.max_grad_norm);
      optimizer.step(lr);
    }
    const double train_loss = total / static_cast<double>(train_set.size());
    const double val_loss =
        validation_set.empty() ? train_loss : evaluate_loss(model, validation_set);
    result.train_loss.push_back(train_loss);
    result.validation_loss.push_back(val_loss);
    if (log) {
      log("epoch " + std::to_string(epoch) + " train_loss " + fmt_double(train_loss) +
          " validation_loss " + fmt_double(val_loss) + " lr " + fmt_double(lr));
    }

    if (val_loss < best) {
      best = val_loss;
      bad_epochs = 0;
      result.best_epoch = epoch;
      best_values.clear();
      for (const auto& p : params) best_values.push_back(p.value());
      continue;
    }
    ++bad_epochs;
    const double new_lr = lr * cfg.lr_decay;
    result.events.push_back({TrainEvent::Kind::kLrDecay, epoch, lr, new_lr});
    if (log) {
      log("epoch " + std::to_string(epoch) + " lr decay " + fmt_double(lr) + " -> " +
          fmt_double(new_lr));
    }
    lr = new_lr;
    if (bad_epochs > cfg.patience) {
      result.events.push_back({TrainEvent::Kind::kEarlyStop, epoch, lr, lr});
      if (log) log("early stop at epoch " + std::to_string(epoch));
      break;
    }
  }
  for (std::size_t i = 0; i < best_values.size(); ++i) params[i].mutable_value() = best_values[i];
  return result;
}

}  // namespace hashnews
