// Copyright 2026 The HashNews Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace hashnews {

struct Hypothesis {
  std::vector<std::int32_t> tokens;  // generated words, EOS excluded
  double log_prob = 0;               // cumulative, EOS included when emitted
  bool finished = false;
  bool ended_with_eos = false;

  // Number of scored decoding steps.
  std::size_t length() const { return tokens.size() + (ended_with_eos ? 1 : 0); }
  double normalized_score() const {
    return length() == 0 ? log_prob : log_prob / static_cast<double>(length());
  }
};

// Orders finished hypotheses for output: normalized score descending, then
// token sequence ascending so the ranking is total.
inline bool ranks_before(const Hypothesis& a, const Hypothesis& b) {
  const double sa = a.normalized_score(), sb = b.normalized_score();
  if (sa != sb) return sa > sb;
  return a.tokens < b.tokens;
}

// A scorer supplies next-token log-probabilities for an opaque decoder state:
//
//   struct Scorer {
//     using State = ...;
//     State initial();                                  // after consuming BOS
//     std::vector<double> log_probs(const State&);      // size = vocabulary
//     State advance(const State&, std::int32_t token);
//   };
//
// Tokens whose log-probability is -inf are never expanded.
template <typename Scorer>
std::vector<Hypothesis> beam_search_raw(Scorer& scorer, std::size_t beam_size,
                                        std::size_t max_len, std::int32_t eos) {
  using State = typename Scorer::State;
  struct Alive {
    Hypothesis hyp;
    State state;
  };
  struct Candidate {
    std::size_t parent;
    std::int32_t token;
    double log_prob;
  };

  std::vector<Hypothesis> finished;
  if (beam_size == 0 || max_len == 0) return finished;
  std::vector<Alive> alive;
  alive.push_back({Hypothesis{}, scorer.initial()});

  for (std::size_t step = 0; step < max_len && !alive.empty(); ++step) {
    std::vector<Candidate> candidates;
    for (std::size_t h = 0; h < alive.size(); ++h) {
      const auto lp = scorer.log_probs(alive[h].state);
      for (std::size_t t = 0; t < lp.size(); ++t) {
        if (std::isinf(lp[t]) && lp[t] < 0) continue;
        candidates.push_back({h, static_cast<std::int32_t>(t), alive[h].hyp.log_prob + lp[t]});
      }
    }
    // Stable order on ties: earlier parent, then smaller token id.
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.log_prob > b.log_prob; });
    if (candidates.size() > beam_size) candidates.resize(beam_size);

    std::vector<Alive> next;
    for (const auto& c : candidates) {
      Hypothesis hyp = alive[c.parent].hyp;
      hyp.log_prob = c.log_prob;
      if (c.token == eos) {
        hyp.finished = true;
        hyp.ended_with_eos = true;
        finished.push_back(std::move(hyp));
        continue;
      }
      hyp.tokens.push_back(c.token);
      if (hyp.tokens.size() >= max_len) {
        hyp.finished = true;
        finished.push_back(std::move(hyp));
        continue;
      }
      next.push_back({std::move(hyp), scorer.advance(alive[c.parent].state, c.token)});
    }
    alive = std::move(next);
  }
  std::stable_sort(finished.begin(), finished.end(), ranks_before);
  return finished;
}

// Argmax decoding; the smallest token id wins ties.
template <typename Scorer>
Hypothesis greedy_decode(Scorer& scorer, std::size_t max_len, std::int32_t eos) {
  Hypothesis hyp;
  if (max_len == 0) return hyp;
  auto state = scorer.initial();
  while (true) {
    const auto lp = scorer.log_probs(state);
    std::int32_t best = -1;
    for (std::size_t t = 0; t < lp.size(); ++t) {
      if (std::isinf(lp[t]) && lp[t] < 0) continue;
      if (best < 0 || lp[t] > lp[static_cast<std::size_t>(best)]) best = static_cast<std::int32_t>(t);
    }
    if (best < 0) break;
    hyp.log_prob += lp[static_cast<std::size_t>(best)];
    if (best == eos) {
      hyp.ended_with_eos = true;
      break;
    }
    hyp.tokens.push_back(best);
    if (hyp.tokens.size() >= max_len) break;
    state = scorer.advance(state, best);
  }
  hyp.finished = true;
  return hyp;
}

}  // namespace hashnews
