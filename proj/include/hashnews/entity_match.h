// Copyright 2026 The HashNews Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "hashnews/corpus.h"

namespace hashnews {

// Smith-Waterman scoring and the two soft-match thresholds.
struct AlignmentParams {
  double match_reward = 2.0;
  double mismatch_penalty = -1.0;
  double gap_penalty = -1.0;
  double token_threshold = 0.8;     // t: a post token "aligns" when align() >= t
  double coverage_threshold = 0.6;  // q: fraction of post-entity tokens that must align

  void validate() const;
};

// Indices into a news article's entity list.
struct MatchResult {
  std::vector<std::size_t> strict;  // sorted
  std::vector<std::size_t> soft;    // sorted, superset of strict
};

// Best local alignment score of the two tokens, divided by
// match_reward * min(|a|, |b|). Symmetric, in [0, 1]; 1 exactly when the
// shorter token occurs contiguously inside the longer one (default scoring).
double align(std::string_view a, std::string_view b, const AlignmentParams& params = {});

// True when at least a q-fraction of the post-entity tokens (counted with
// multiplicity) align to some token of the news entity at threshold t.
bool strict_match(const Entity& post_entity, const Entity& news_entity,
                  const AlignmentParams& params = {});

// Strict matches of the post entity in the article, plus the conditional
// matches: news entities that strictly match one of the strict matches
// (one hop, no transitive closure).
MatchResult match_sets(const Entity& post_entity, const NewsArticle& article,
                       const AlignmentParams& params = {});

// Soft entity frequency: number of entity occurrences in the article that
// soft-match the post entity.
std::size_t soft_tf(const Entity& post_entity, const NewsArticle& article,
                    const AlignmentParams& params = {});

// True when the article holds at least one strict match of the entity.
bool has_strict_match(const Entity& post_entity, const NewsArticle& article,
                      const AlignmentParams& params = {});

// Smoothed IDF: log((N + 1) / (df + 1)) + 1 where df counts documents with
// a strict match. Always >= 1.
double smoothed_idf(std::size_t corpus_size, std::size_t doc_freq);
double soft_idf(const Entity& post_entity, const ArticleRefs& corpus,
                const AlignmentParams& params = {});

}  // namespace hashnews
