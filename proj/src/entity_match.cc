// Copyright 2026 The HashNews Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hashnews/entity_match.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "hashnews/errors.h"

namespace hashnews {

void AlignmentParams::validate() const {
  if (!(match_reward > 0)) throw ArgumentError("alignment: match reward must be > 0");
  if (!(token_threshold > 0 && token_threshold <= 1)) {
    throw ArgumentError("alignment: token threshold t must be in (0, 1]");
  }
  if (!(coverage_threshold > 0 && coverage_threshold <= 1)) {
    throw ArgumentError("alignment: coverage threshold q must be in (0, 1]");
  }
}

double align(std::string_view a, std::string_view b, const AlignmentParams& params) {
  if (a.empty() || b.empty()) throw ArgumentError("align: tokens must be nonempty");
  // Two-row local alignment; the shorter token indexes the columns.
  if (b.size() > a.size()) std::swap(a, b);
  std::vector<double> prev(b.size() + 1, 0.0), cur(b.size() + 1, 0.0);
  double best = 0.0;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = 0.0;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const double diag =
          prev[j - 1] + (a[i - 1] == b[j - 1] ? params.match_reward : params.mismatch_penalty);
      const double h =
          std::max({0.0, diag, prev[j] + params.gap_penalty, cur[j - 1] + params.gap_penalty});
      cur[j] = h;
      best = std::max(best, h);
    }
    std::swap(prev, cur);
  }
  return best / (params.match_reward * static_cast<double>(b.size()));
}

bool strict_match(const Entity& post_entity, const Entity& news_entity,
                  const AlignmentParams& params) {
  if (post_entity.tokens.empty() || news_entity.tokens.empty()) {
    throw ArgumentError("strict_match: entities must be nonempty");
  }
  std::size_t aligned = 0;
  for (const auto& tp : post_entity.tokens) {
    const bool hit = std::any_of(news_entity.tokens.begin(), news_entity.tokens.end(),
                                 [&](const std::string& td) {
                                   return align(tp, td, params) >= params.token_threshold;
                                 });
    if (hit) ++aligned;
  }
  const double coverage =
      static_cast<double>(aligned) / static_cast<double>(post_entity.tokens.size());
  return coverage >= params.coverage_threshold;
}

MatchResult match_sets(const Entity& post_entity, const NewsArticle& article,
                       const AlignmentParams& params) {
  MatchResult out;
  const auto& ents = article.entities;
  for (std::size_t i = 0; i < ents.size(); ++i) {
    if (strict_match(post_entity, ents[i], params)) out.strict.push_back(i);
  }
  if (out.strict.empty()) return out;
  for (std::size_t i = 0; i < ents.size(); ++i) {
    const bool conditional = std::any_of(out.strict.begin(), out.strict.end(), [&](std::size_t s) {
      return s == i || strict_match(ents[i], ents[s], params);
    });
    if (conditional) out.soft.push_back(i);
  }
  return out;
}

std::size_t soft_tf(const Entity& post_entity, const NewsArticle& article,
                    const AlignmentParams& params) {
  return match_sets(post_entity, article, params).soft.size();
}

bool has_strict_match(const Entity& post_entity, const NewsArticle& article,
                      const AlignmentParams& params) {
  return std::any_of(article.entities.begin(), article.entities.end(),
                     [&](const Entity& e) { return strict_match(post_entity, e, params); });
}

double smoothed_idf(std::size_t corpus_size, std::size_t doc_freq) {
  return std::log((static_cast<double>(corpus_size) + 1.0) / (static_cast<double>(doc_freq) + 1.0)) +
         1.0;
}

double soft_idf(const Entity& post_entity, const ArticleRefs& corpus,
                const AlignmentParams& params) {
  std::size_t df = 0;
  for (const auto* d : corpus) {
    if (has_strict_match(post_entity, *d, params)) ++df;
  }
  return smoothed_idf(corpus.size(), df);
}

}  // namespace hashnews
