// Copyright 2026 The HashNews Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hashnews/retriever.h"

#include <algorithm>
#include <map>

#include "hashnews/errors.h"

namespace hashnews {

namespace {

std::string entity_key(const Entity& e) {
  std::string key;
  for (const auto& t : e.tokens) {
    key += t;
    key += ' ';
  }
  return key;
}

// Per-article statistics for every post entity, computed once per post.
struct ArticleStats {
  std::vector<std::size_t> tf;  // soft_tf per post entity
  std::vector<bool> strict;     // has_strict_match per post entity
};

}  // namespace

void RankingParams::validate() const {
  if (!(a > 0)) throw ArgumentError("ranking: a must be > 0");
  if (!(b >= 0 && b <= 1)) throw ArgumentError("ranking: b must be in [0, 1]");
  if (k < 1) throw ArgumentError("ranking: k must be >= 1");
  if (context_size < 1) throw ArgumentError("ranking: context size must be >= 1");
  if (!(local_weight_floor > 0 && local_weight_floor <= 1)) {
    throw ArgumentError("ranking: local weight floor must be in (0, 1]");
  }
}

ArticleIndex index_articles(std::span<const NewsArticle> news) {
  ArticleIndex index;
  for (const auto& a : news) index.emplace(a.id, &a);
  return index;
}

double average_length(const ArticleRefs& corpus) {
  if (corpus.empty()) return 1.0;
  double total = 0;
  for (const auto* d : corpus) total += static_cast<double>(d->tokens.size());
  return total / static_cast<double>(corpus.size());
}

double bm25_term(double tf, double doc_length, double avg_length, const RankingParams& params) {
  const double norm = 1.0 - params.b + params.b * doc_length / avg_length;
  return tf * (params.a + 1.0) / (tf + params.a * norm);
}

double temporal_popularity(const Entity& entity, const ArticleRefs& window,
                           const BackgroundCorpus& background, const AlignmentParams& align) {
  return soft_idf(entity, background.articles, align) / soft_idf(entity, window, align);
}

double score(const Post& post, const NewsArticle& article, const ArticleRefs& window,
             const BackgroundCorpus& background, const RankingParams& params,
             const AlignmentParams& align) {
  const bool member = std::any_of(window.begin(), window.end(),
                                  [&](const NewsArticle* d) { return d->id == article.id; });
  if (!member) throw ArgumentError("score: article '" + article.id + "' is not in the window");
  const double avg = average_length(window);
  const double len = static_cast<double>(article.tokens.size());
  double total = 0;
  for (const auto& e : post.entities) {
    const double idf_window = soft_idf(e, window, align);
    const double weight = params.weighting == EntityWeighting::kTemporalPopularity
                              ? soft_idf(e, background.articles, align) / idf_window
                              : idf_window;
    const auto tf = static_cast<double>(soft_tf(e, article, align));
    total += weight * bm25_term(tf, len, avg, params);
  }
  return total;
}

Retriever::Retriever(const BackgroundCorpus& background, RankingParams params,
                     AlignmentParams align)
    : background_(background), params_(params), align_(align) {
  params_.validate();
  align_.validate();
}

double Retriever::background_idf(const Entity& entity) const {
  const auto key = entity_key(entity);
  {
    std::lock_guard lock(cache_mutex_);
    auto it = idf_cache_.find(key);
    if (it != idf_cache_.end()) return it->second;
  }
  const double idf = soft_idf(entity, background_.articles, align_);
  std::lock_guard lock(cache_mutex_);
  idf_cache_.emplace(key, idf);
  return idf;
}

RetrievedSet Retriever::retrieve(const Post& post, const WindowSeries& windows) const {
  RetrievedSet out;
  if (windows.windows.empty() || post.entities.empty()) return out;

  const auto& largest = windows.windows.back();
  const std::size_t n_ent = post.entities.size();
  std::unordered_map<const NewsArticle*, ArticleStats> stats;
  stats.reserve(largest.size());
  for (const auto* d : largest) {
    ArticleStats s;
    s.tf.resize(n_ent);
    s.strict.resize(n_ent);
    for (std::size_t e = 0; e < n_ent; ++e) {
      const auto m = match_sets(post.entities[e], *d, align_);
      s.tf[e] = m.soft.size();
      s.strict[e] = !m.strict.empty();
    }
    stats.emplace(d, std::move(s));
  }

  std::vector<double> bg_idf(n_ent);
  if (params_.weighting == EntityWeighting::kTemporalPopularity) {
    for (std::size_t e = 0; e < n_ent; ++e) bg_idf[e] = background_idf(post.entities[e]);
  }

  std::vector<const NewsArticle*> selected;
  for (std::size_t w = 0; w < windows.k(); ++w) {
    const auto& window = windows.windows[w];
    if (window.empty()) continue;

    std::vector<double> weight(n_ent);
    for (std::size_t e = 0; e < n_ent; ++e) {
      std::size_t df = 0;
      for (const auto* d : window) df += stats.at(d).strict[e] ? 1 : 0;
      const double idf_window = smoothed_idf(window.size(), df);
      weight[e] = params_.weighting == EntityWeighting::kTemporalPopularity
                      ? bg_idf[e] / idf_window
                      : idf_window;
    }
    const double avg = average_length(window);

    const NewsArticle* best = nullptr;
    double best_score = 0;
    for (const auto* d : window) {
      if (std::find(selected.begin(), selected.end(), d) != selected.end()) continue;
      const auto& s = stats.at(d);
      const double len = static_cast<double>(d->tokens.size());
      double total = 0;
      for (std::size_t e = 0; e < n_ent; ++e) {
        total += weight[e] * bm25_term(static_cast<double>(s.tf[e]), len, avg, params_);
      }
      if (total <= 0) continue;
      if (best == nullptr || total > best_score || (total == best_score && d->id < best->id)) {
        best = d;
        best_score = total;
      }
    }
    if (best != nullptr) {
      selected.push_back(best);
      out.items.push_back({best->id, best_score, static_cast<int>(w + 1)});
    }
  }
  return out;
}

RetrievedSet retrieve(const Post& post, const WindowSeries& windows,
                      const BackgroundCorpus& background, const RankingParams& params,
                      const AlignmentParams& align) {
  return Retriever(background, params, align).retrieve(post, windows);
}

ContextBundle build_context(const RetrievedSet& retrieved, const ArticleIndex& articles,
                            const RankingParams& params,
                            const std::unordered_set<std::string>& stopwords) {
  std::map<std::string, double> weights;
  for (const auto& item : retrieved.items) {
    auto it = articles.find(item.article_id);
    if (it == articles.end()) {
      throw ValidationError("build_context: unknown article '" + item.article_id + "'");
    }
    std::map<std::string, std::size_t> freq;
    for (const auto& t : it->second->tokens) {
      if (!stopwords.count(t)) ++freq[t];
    }
    for (const auto& [t, n] : freq) weights[t] += item.score * static_cast<double>(n);
  }

  std::vector<std::pair<std::string, double>> ranked;
  for (auto& [t, w] : weights) {
    if (w > 0) ranked.emplace_back(t, w);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
    return x.second != y.second ? x.second > y.second : x.first < y.first;
  });
  if (ranked.size() > params.context_size) ranked.resize(params.context_size);

  ContextBundle bundle;
  if (ranked.empty()) return bundle;
  const double max_w = ranked.front().second;
  for (auto& [t, w] : ranked) {
    bundle.tokens.push_back(t);
    bundle.raw_weights.push_back(w);
    bundle.norm_weights.push_back(std::max(w / max_w, params.local_weight_floor));
  }
  return bundle;
}

}  // namespace hashnews
