// Copyright 2026 The HashNews Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hashnews/corpus.h"

namespace hashnews {

// Macro averages over posts; every value lies in [0, 1].
struct EvalReport {
  double f1_at_1 = 0;
  double f1_at_5 = 0;
  double f1_at_10 = 0;
  double acc = 0;
  double map = 0;
  double rg1 = 0;
  std::size_t n_posts = 0;
};

// All metric functions lowercase both sides, match hashtags by exact word
// sequence, drop repeated predictions (first occurrence kept) and treat
// golds as a set. They throw ArgumentError on an empty gold set.

// c = |top-k ∩ golds|; P = c / min(k, |preds|) (0 without predictions);
// R = c / |golds|; harmonic mean, 0 when both are 0.
double f1_at_k(const std::vector<Hashtag>& preds, const std::vector<Hashtag>& golds, std::size_t k);
// Hits among the top-k predictions.
std::size_t matched_at_k(const std::vector<Hashtag>& preds, const std::vector<Hashtag>& golds,
                         std::size_t k);
double accuracy_at_1(const std::vector<Hashtag>& preds, const std::vector<Hashtag>& golds);
// (sum of precision@r at each hit rank r <= 5) / min(5, |golds|).
double map_at_5(const std::vector<Hashtag>& preds, const std::vector<Hashtag>& golds);
// Clipped unigram F1 against each gold, best over golds. Empty pred -> 0.
double rouge1(const Hashtag& pred, const std::vector<Hashtag>& golds);

struct PostPrediction {
  std::string post_id;
  std::vector<Hashtag> hashtags;  // ranked
};

struct PostGold {
  std::string post_id;
  std::vector<Hashtag> hashtags;
};

// Predictions and golds must cover the same post ids (any order);
// otherwise ValidationError.
EvalReport evaluate(const std::vector<PostPrediction>& predictions,
                    const std::vector<PostGold>& golds);

}  // namespace hashnews
