// Copyright 2026 The HashNews Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hashnews/corpus.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <unordered_set>

#include <json.hpp>

#include "hashnews/errors.h"
#include "hashnews/rng.h"

namespace hashnews {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const std::array<const char*, 4> kReservedTokens = {"<pad>", "<unk>", "<s>", "</s>"};

bool has_whitespace(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

void check_keys(const json& obj, std::initializer_list<const char*> expected, std::size_t line) {
  if (!obj.is_object()) throw ParseError(line, "record is not a JSON object");
  for (const char* key : expected) {
    if (!obj.contains(key)) throw ParseError(line, std::string("missing field '") + key + "'");
  }
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(expected.begin(), expected.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) throw ParseError(line, "unknown field '" + item.key() + "'");
  }
}

Tokens parse_tokens(const json& value, std::size_t line, const char* what, bool allow_empty) {
  if (!value.is_array()) throw ParseError(line, std::string(what) + " must be an array");
  Tokens out;
  out.reserve(value.size());
  for (const auto& t : value) {
    if (!t.is_string()) throw ParseError(line, std::string(what) + " must contain strings");
    auto s = lowercase(t.get<std::string>());
    if (s.empty()) throw ParseError(line, std::string(what) + " contains an empty token");
    out.push_back(std::move(s));
  }
  if (out.empty() && !allow_empty) throw ParseError(line, std::string(what) + " must be nonempty");
  return out;
}

std::vector<Entity> parse_entities(const json& value, std::size_t line) {
  if (!value.is_array()) throw ParseError(line, "entities must be an array");
  std::vector<Entity> out;
  for (const auto& e : value) {
    Entity entity{parse_tokens(e, line, "entity", false)};
    for (const auto& t : entity.tokens) {
      if (has_whitespace(t)) throw ParseError(line, "entity token contains whitespace: '" + t + "'");
    }
    out.push_back(std::move(entity));
  }
  return out;
}

std::int64_t parse_day(const json& value, std::size_t line) {
  if (!value.is_number_integer()) throw ParseError(line, "day must be an integer");
  const auto day = value.get<std::int64_t>();
  if (day < 0) throw ParseError(line, "day must be >= 0");
  return day;
}

std::string parse_id(const json& value, std::size_t line) {
  if (!value.is_string()) throw ParseError(line, "id must be a string");
  return value.get<std::string>();
}

template <typename Record, typename ParseFn>
std::vector<Record> read_records(std::istream& in, ParseFn parse) {
  std::vector<Record> out;
  std::unordered_set<std::string> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line, std::string("malformed JSON: ") + e.what());
    }
    Record rec = parse(obj, line);
    if (!seen.insert(rec.id).second) {
      throw ValidationError("line " + std::to_string(line) + ": duplicate id '" + rec.id + "'");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

ordered_json entities_json(const std::vector<Entity>& entities) {
  ordered_json arr = ordered_json::array();
  for (const auto& e : entities) arr.push_back(e.tokens);
  return arr;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

}  // namespace

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<std::string> WindowSeries::ids(std::size_t window) const {
  std::vector<std::string> out;
  for (const auto* a : windows.at(window)) out.push_back(a->id);
  return out;
}

std::vector<Post> read_posts(std::istream& in) {
  return read_records<Post>(in, [](const json& obj, std::size_t line) {
    check_keys(obj, {"id", "day", "tokens", "entities", "hashtags"}, line);
    Post p;
    p.id = parse_id(obj["id"], line);
    p.day = parse_day(obj["day"], line);
    p.tokens = parse_tokens(obj["tokens"], line, "tokens", false);
    p.entities = parse_entities(obj["entities"], line);
    if (!obj["hashtags"].is_array()) throw ParseError(line, "hashtags must be an array");
    for (const auto& h : obj["hashtags"]) {
      p.hashtags.push_back(parse_tokens(h, line, "hashtag", false));
    }
    return p;
  });
}

std::vector<NewsArticle> read_news(std::istream& in) {
  return read_records<NewsArticle>(in, [](const json& obj, std::size_t line) {
    check_keys(obj, {"id", "day", "tokens", "entities"}, line);
    NewsArticle a;
    a.id = parse_id(obj["id"], line);
    a.day = parse_day(obj["day"], line);
    a.tokens = parse_tokens(obj["tokens"], line, "tokens", false);
    a.entities = parse_entities(obj["entities"], line);
    return a;
  });
}

std::vector<Post> load_posts(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return read_posts(in);
}

std::vector<NewsArticle> load_news(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return read_news(in);
}

std::string to_json_line(const Post& post) {
  ordered_json obj;
  obj["id"] = post.id;
  obj["day"] = post.day;
  obj["tokens"] = post.tokens;
  obj["entities"] = entities_json(post.entities);
  obj["hashtags"] = ordered_json::array();
  for (const auto& h : post.hashtags) obj["hashtags"].push_back(h);
  return obj.dump();
}

std::string to_json_line(const NewsArticle& article) {
  ordered_json obj;
  obj["id"] = article.id;
  obj["day"] = article.day;
  obj["tokens"] = article.tokens;
  obj["entities"] = entities_json(article.entities);
  return obj.dump();
}

WindowSeries build_windows(std::span<const NewsArticle> news, std::int64_t post_day, int k) {
  if (k < 1) throw ArgumentError("build_windows: k must be >= 1, got " + std::to_string(k));
  if (post_day < 0) throw ArgumentError("build_windows: post_day must be >= 0");
  WindowSeries series;
  series.post_day = post_day;
  series.windows.resize(static_cast<std::size_t>(k));
  for (const auto& article : news) {
    if (article.day > post_day) continue;
    const std::int64_t age = post_day - article.day;
    // An article of age a belongs to every D_i with i >= a; same-day news
    // (age 0) is in D_1 as well.
    for (std::int64_t i = std::max<std::int64_t>(age, 1); i <= k; ++i) {
      series.windows[static_cast<std::size_t>(i - 1)].push_back(&article);
    }
  }
  return series;
}

BackgroundCorpus sample_background(std::span<const NewsArticle> news, std::size_t size,
                                   std::uint64_t seed) {
  if (size < 1) throw ArgumentError("sample_background: size must be >= 1");
  std::map<std::string, const NewsArticle*> by_id;
  for (const auto& a : news) by_id.emplace(a.id, &a);
  std::vector<const NewsArticle*> pool;
  pool.reserve(by_id.size());
  for (const auto& [id, a] : by_id) pool.push_back(a);

  // Partial Fisher-Yates over the id-sorted pool.
  Rng rng(seed);
  const std::size_t take = std::min(size, pool.size());
  for (std::size_t i = 0; i < take; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_index(rng, pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  std::sort(pool.begin(), pool.end(),
            [](const NewsArticle* a, const NewsArticle* b) { return a->id < b->id; });

  BackgroundCorpus out;
  out.seed = seed;
  out.articles = std::move(pool);
  for (const auto* a : out.articles) out.article_ids.push_back(a->id);
  return out;
}

Vocabulary::Vocabulary() : Vocabulary(Tokens{}) {}

Vocabulary::Vocabulary(const Tokens& tokens) {
  for (const char* r : kReservedTokens) id_to_token_.emplace_back(r);
  id_to_token_.insert(id_to_token_.end(), tokens.begin(), tokens.end());
  for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
    if (!token_to_id_.emplace(id_to_token_[i], static_cast<std::int32_t>(i)).second) {
      throw ValidationError("vocabulary: duplicate token '" + id_to_token_[i] + "'");
    }
  }
}

std::int32_t Vocabulary::id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    throw ArgumentError("vocabulary: id out of range: " + std::to_string(id));
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(std::string_view token) const {
  return token_to_id_.count(std::string(token)) != 0;
}

std::vector<std::int32_t> Vocabulary::encode(const Tokens& tokens) const {
  std::vector<std::int32_t> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

Vocabulary build_vocab(std::span<const Post> posts, std::span<const Tokens> context_token_sources,
                       int min_freq) {
  if (min_freq < 1) throw ArgumentError("build_vocab: min_freq must be >= 1");
  std::unordered_map<std::string, std::size_t> freq;
  auto count = [&](const Tokens& ts) {
    for (const auto& t : ts) ++freq[t];
  };
  for (const auto& p : posts) {
    count(p.tokens);
    for (const auto& h : p.hashtags) count(h);
  }
  for (const auto& src : context_token_sources) count(src);

  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : freq) {
    const bool reserved = std::any_of(kReservedTokens.begin(), kReservedTokens.end(),
                                      [&](const char* r) { return tok == r; });
    if (!reserved && n >= static_cast<std::size_t>(min_freq)) kept.emplace_back(tok, n);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Tokens tokens;
  tokens.reserve(kept.size());
  for (auto& [tok, n] : kept) tokens.push_back(std::move(tok));
  return Vocabulary(tokens);
}

}  // namespace hashnews
