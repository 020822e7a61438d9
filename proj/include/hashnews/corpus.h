// Copyright 2026 The HashNews Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hashnews {

using Tokens = std::vector<std::string>;

// A named entity mention, as a lowercased token sequence ("donald trump").
struct Entity {
  Tokens tokens;

  bool operator==(const Entity&) const = default;
};

// A hashtag, segmented into lowercased words.
using Hashtag = Tokens;

struct Post {
  std::string id;
  std::int64_t day = 0;
  Tokens tokens;
  std::vector<Entity> entities;
  std::vector<Hashtag> hashtags;

  bool operator==(const Post&) const = default;
};

struct NewsArticle {
  std::string id;
  std::int64_t day = 0;
  Tokens tokens;
  std::vector<Entity> entities;

  bool operator==(const NewsArticle&) const = default;
};

// Non-owning view over a subset of a news collection. The collection must
// outlive every view into it.
using ArticleRefs = std::vector<const NewsArticle*>;

// Nested day windows D_1 ⊆ ... ⊆ D_k ending at the post day. windows[i]
// holds D_{i+1}: every article with day in [post_day - (i+1), post_day],
// in collection order.
struct WindowSeries {
  std::int64_t post_day = 0;
  std::vector<ArticleRefs> windows;

  std::size_t k() const { return windows.size(); }
  std::vector<std::string> ids(std::size_t window) const;
};

// Time-independent reference corpus sampled uniformly from the whole
// collection.
struct BackgroundCorpus {
  std::vector<std::string> article_ids;  // sorted
  std::uint64_t seed = 0;
  ArticleRefs articles;  // same order as article_ids
};

class Vocabulary {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;
  static constexpr std::int32_t kBos = 2;
  static constexpr std::int32_t kEos = 3;
  static constexpr std::int32_t kNumReserved = 4;

  Vocabulary();
  // Reserved entries are prepended; `tokens` must be distinct and must not
  // collide with the reserved spellings.
  explicit Vocabulary(const Tokens& tokens);

  std::int32_t id(std::string_view token) const;  // kUnk when absent
  const std::string& token(std::int32_t id) const;
  bool contains(std::string_view token) const;
  std::size_t size() const { return id_to_token_.size(); }
  const Tokens& tokens() const { return id_to_token_; }

  std::vector<std::int32_t> encode(const Tokens& tokens) const;

  bool operator==(const Vocabulary& other) const {
    return id_to_token_ == other.id_to_token_;
  }

 private:
  Tokens id_to_token_;
  std::unordered_map<std::string, std::int32_t> token_to_id_;
};

// JSON-lines ingestion with a strict schema. Tokens are lowercased.
std::vector<Post> read_posts(std::istream& in);
std::vector<NewsArticle> read_news(std::istream& in);
std::vector<Post> load_posts(const std::filesystem::path& path);
std::vector<NewsArticle> load_news(const std::filesystem::path& path);

// Canonical one-line serialization; read_* followed by these is the
// identity on canonical input.
std::string to_json_line(const Post& post);
std::string to_json_line(const NewsArticle& article);

std::string lowercase(std::string_view s);

WindowSeries build_windows(std::span<const NewsArticle> news, std::int64_t post_day, int k);

BackgroundCorpus sample_background(std::span<const NewsArticle> news, std::size_t size,
                                   std::uint64_t seed);

// Frequencies are counted over post tokens, post hashtag words and every
// token sequence in `context_token_sources`.
Vocabulary build_vocab(std::span<const Post> posts, std::span<const Tokens> context_token_sources,
                       int min_freq);

}  // namespace hashnews
