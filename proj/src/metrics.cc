// Copyright 2026 The HashNews Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hashnews/metrics.h"

#include <algorithm>
#include <map>
#include <set>

#include "hashnews/errors.h"

namespace hashnews {

namespace {

Hashtag lower(const Hashtag& h) {
  Hashtag out;
  out.reserve(h.size());
  for (const auto& w : h) out.push_back(lowercase(w));
  return out;
}

std::set<Hashtag> gold_set(const std::vector<Hashtag>& golds, const char* op) {
  if (golds.empty()) throw ArgumentError(std::string(op) + ": empty gold set");
  std::set<Hashtag> out;
  for (const auto& g : golds) out.insert(lower(g));
  return out;
}

std::vector<Hashtag> dedup(const std::vector<Hashtag>& preds) {
  std::vector<Hashtag> out;
  std::set<Hashtag> seen;
  for (const auto& p : preds) {
    auto l = lower(p);
    if (seen.insert(l).second) out.push_back(std::move(l));
  }
  return out;
}

std::size_t hits(const std::vector<Hashtag>& preds, const std::set<Hashtag>& golds,
                 std::size_t k) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < std::min(k, preds.size()); ++i) c += golds.count(preds[i]);
  return c;
}

}  // namespace

std::size_t matched_at_k(const std::vector<Hashtag>& preds, const std::vector<Hashtag>& golds,
                         std::size_t k) {
  return hits(dedup(preds), gold_set(golds, "matched_at_k"), k);
}

double f1_at_k(const std::vector<Hashtag>& preds, const std::vector<Hashtag>& golds,
               std::size_t k) {
  const auto g = gold_set(golds, "f1_at_k");
  const auto p = dedup(preds);
  const std::size_t shown = std::min(k, p.size());
  if (shown == 0) return 0.0;
  const double c = static_cast<double>(hits(p, g, k));
  const double precision = c / static_cast<double>(shown);
  const double recall = c / static_cast<double>(g.size());
  if (precision + recall == 0) return 0.0;
  return 2 * precision * recall / (precision + recall);
}

double accuracy_at_1(const std::vector<Hashtag>& preds, const std::vector<Hashtag>& golds) {
  const auto g = gold_set(golds, "accuracy_at_1");
  if (preds.empty()) return 0.0;
  return g.count(lower(preds.front())) ? 1.0 : 0.0;
}

double map_at_5(const std::vector<Hashtag>& preds, const std::vector<Hashtag>& golds) {
  const auto g = gold_set(golds, "map_at_5");
  const auto p = dedup(preds);
  double total = 0;
  std::size_t found = 0;
  for (std::size_t r = 0; r < std::min<std::size_t>(5, p.size()); ++r) {
    if (g.count(p[r])) {
      ++found;
      total += static_cast<double>(found) / static_cast<double>(r + 1);
    }
  }
  return total / static_cast<double>(std::min<std::size_t>(5, g.size()));
}

double rouge1(const Hashtag& pred, const std::vector<Hashtag>& golds) {
  const auto g = gold_set(golds, "rouge1");
  if (pred.empty()) return 0.0;
  std::map<std::string, std::size_t> pred_counts;
  for (const auto& w : pred) ++pred_counts[lowercase(w)];
  double best = 0;
  for (const auto& gold : g) {
    std::map<std::string, std::size_t> gold_counts;
    for (const auto& w : gold) ++gold_counts[w];
    std::size_t overlap = 0;
    for (const auto& [w, n] : pred_counts) {
      auto it = gold_counts.find(w);
      if (it != gold_counts.end()) overlap += std::min(n, it->second);
    }
    if (overlap == 0) continue;
    const double p = static_cast<double>(overlap) / static_cast<double>(pred.size());
    const double r = static_cast<double>(overlap) / static_cast<double>(gold.size());
    best = std::max(best, 2 * p * r / (p + r));
  }
  return best;
}

EvalReport evaluate(const std::vector<PostPrediction>& predictions,
                    const std::vector<PostGold>& golds) {
  std::map<std::string, const PostGold*> by_id;
  for (const auto& g : golds) {
    if (!by_id.emplace(g.post_id, &g).second) {
      throw ValidationError("evaluate: duplicate gold post '" + g.post_id + "'");
    }
    if (g.hashtags.empty()) {
      throw ValidationError("evaluate: post '" + g.post_id + "' has no gold hashtags");
    }
  }
  if (predictions.size() != golds.size()) {
    throw ValidationError("evaluate: " + std::to_string(predictions.size()) +
                          " prediction records for " + std::to_string(golds.size()) + " gold posts");
  }
  std::set<std::string> seen;
  EvalReport report;
  for (const auto& pred : predictions) {
    auto it = by_id.find(pred.post_id);
    if (it == by_id.end()) {
      throw ValidationError("evaluate: no gold post for prediction '" + pred.post_id + "'");
    }
    if (!seen.insert(pred.post_id).second) {
      throw ValidationError("evaluate: duplicate prediction for '" + pred.post_id + "'");
    }
    const auto& gold = it->second->hashtags;
    const auto& p = pred.hashtags;
    report.f1_at_1 += f1_at_k(p, gold, 1);
    report.f1_at_5 += f1_at_k(p, gold, 5);
    report.f1_at_10 += f1_at_k(p, gold, 10);
    report.acc += accuracy_at_1(p, gold);
    report.map += map_at_5(p, gold);
    report.rg1 += p.empty() ? 0.0 : rouge1(p.front(), gold);
  }
  report.n_posts = predictions.size();
  if (report.n_posts > 0) {
    const double n = static_cast<double>(report.n_posts);
    report.f1_at_1 /= n;
    report.f1_at_5 /= n;
    report.f1_at_10 /= n;
    report.acc /= n;
    report.map /= n;
    report.rg1 /= n;
  }
  return report;
}

}  // namespace hashnews
