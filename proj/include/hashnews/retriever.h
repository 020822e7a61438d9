// Copyright 2026 The HashNews Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hashnews/corpus.h"
#include "hashnews/entity_match.h"

namespace hashnews {

// How a post entity is weighted in the ranking kernel.
enum class EntityWeighting {
  kTemporalPopularity,  // IDF(e, R) / IDF(e, D_i)
  kIdf,                 // IDF(e, D_i): plain Okapi BM25 over soft entity counts
};

struct RankingParams {
  double a = 1.2;
  double b = 0.75;
  int k = 5;
  std::size_t context_size = 100;
  double local_weight_floor = 0.05;
  EntityWeighting weighting = EntityWeighting::kTemporalPopularity;

  void validate() const;
};

struct RetrievedItem {
  std::string article_id;
  double score = 0;
  int window = 0;  // 1-based

  bool operator==(const RetrievedItem&) const = default;
};

// At most one article per window, ids pairwise distinct, windows increasing.
struct RetrievedSet {
  std::vector<RetrievedItem> items;

  bool operator==(const RetrievedSet&) const = default;
};

// Context words sorted by raw weight (descending, then token). norm_weights
// are raw / max(raw), floored at RankingParams::local_weight_floor.
struct ContextBundle {
  Tokens tokens;
  std::vector<double> raw_weights;
  std::vector<double> norm_weights;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  bool operator==(const ContextBundle&) const = default;
};

using ArticleIndex = std::unordered_map<std::string, const NewsArticle*>;
ArticleIndex index_articles(std::span<const NewsArticle> news);

const std::unordered_set<std::string>& default_stopwords();

// Mean token count over the corpus; 1 for an empty corpus.
double average_length(const ArticleRefs& corpus);

// One BM25 saturation term: tf (a+1) / (tf + a (1 - b + b |d| / avg)).
double bm25_term(double tf, double doc_length, double avg_length, const RankingParams& params);

double temporal_popularity(const Entity& entity, const ArticleRefs& window,
                           const BackgroundCorpus& background, const AlignmentParams& align = {});

// Ranking score s(p, d | D_i). Throws ArgumentError when d is not in the window.
double score(const Post& post, const NewsArticle& article, const ArticleRefs& window,
             const BackgroundCorpus& background, const RankingParams& params = {},
             const AlignmentParams& align = {});

// Ranks news for many posts against one background corpus. Background
// IDFs are memoized per entity; the cache is internally synchronized so a
// single instance may serve concurrent retrieve() calls.
class Retriever {
 public:
  Retriever(const BackgroundCorpus& background, RankingParams params, AlignmentParams align);

  // Greedy per-window selection: window i contributes its best-scoring
  // article not selected by an earlier window, ties broken by smaller id.
  // Windows whose remaining articles all score 0 contribute nothing.
  RetrievedSet retrieve(const Post& post, const WindowSeries& windows) const;

  const RankingParams& params() const { return params_; }
  const AlignmentParams& alignment() const { return align_; }

 private:
  double background_idf(const Entity& entity) const;

  const BackgroundCorpus& background_;
  RankingParams params_;
  AlignmentParams align_;
  mutable std::mutex cache_mutex_;
  mutable std::unordered_map<std::string, double> idf_cache_;
};

RetrievedSet retrieve(const Post& post, const WindowSeries& windows,
                      const BackgroundCorpus& background, const RankingParams& params = {},
                      const AlignmentParams& align = {});

// Context words: w_t = sum_i s(p, h_i | D_i) * freq(t, h_i) over the
// retrieved articles, stopwords removed, top context_size kept.
ContextBundle build_context(const RetrievedSet& retrieved, const ArticleIndex& articles,
                            const RankingParams& params,
                            const std::unordered_set<std::string>& stopwords = default_stopwords());

}  // namespace hashnews
