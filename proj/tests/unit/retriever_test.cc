// Copyright 2026 The HashNews Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <thread>

#include "hashnews/errors.h"
#include "hashnews/retriever.h"
#include "oracles.h"
#include "synthetic.h"

using namespace hashnews;

namespace {

Entity ent(Tokens t) { return Entity{std::move(t)}; }

ArticleRefs refs(const std::vector<NewsArticle>& docs) {
  ArticleRefs out;
  for (const auto& d : docs) out.push_back(&d);
  return out;
}

BackgroundCorpus background_of(const std::vector<NewsArticle>& docs) {
  BackgroundCorpus bg;
  for (const auto& d : docs) {
    bg.article_ids.push_back(d.id);
    bg.articles.push_back(&d);
  }
  return bg;
}

NewsArticle doc(std::string id, std::int64_t day, Tokens tokens, std::vector<Entity> ents) {
  return {std::move(id), day, std::move(tokens), std::move(ents)};
}

}  // namespace

TEST_CASE("temporal popularity examples") {
  // Same corpus on both sides.
  std::vector<NewsArticle> docs = {doc("a", 0, {"x"}, {ent({"trump"})}), doc("b", 0, {"x"}, {})};
  const auto bg = background_of(docs);
  CHECK(temporal_popularity(ent({"trump"}), refs(docs), bg) == 1.0);

  // |R| = 9 with df 4, |D| = 3 with df 0.
  std::vector<NewsArticle> r, d;
  for (int i = 0; i < 9; ++i) {
    r.push_back(doc("r" + std::to_string(i), 0, {"x"},
                    i < 4 ? std::vector<Entity>{ent({"obama"})} : std::vector<Entity>{}));
  }
  for (int i = 0; i < 3; ++i) d.push_back(doc("d" + std::to_string(i), 0, {"x"}, {ent({"paris"})}));
  CHECK(temporal_popularity(ent({"obama"}), refs(d), background_of(r)) ==
        doctest::Approx(0.7095298920982026).epsilon(1e-14));

  // Saturates the recent window, absent from the background.
  std::vector<NewsArticle> hot = {doc("h0", 0, {"x"}, {ent({"trump"})}),
                                  doc("h1", 0, {"x"}, {ent({"trump"})})};
  const double tp = temporal_popularity(ent({"trump"}), refs(hot), background_of(r));
  CHECK(tp == doctest::Approx(smoothed_idf(9, 0)));
  CHECK(tp > 1.0);
}

TEST_CASE("score examples") {
  const std::vector<NewsArticle> window = {doc("a", 0, {"x", "y"}, {ent({"trump"})})};
  const auto bg = background_of(window);
  Post none;
  CHECK(score(none, window[0], refs(window), bg) == 0.0);

  // f = 1, |d| equals the mean, TP = 1: 1 * 2.2 / 2.2.
  Post p;
  p.entities = {ent({"trump"})};
  CHECK(score(p, window[0], refs(window), bg) == doctest::Approx(1.0).epsilon(1e-15));

  const NewsArticle outside = doc("z", 0, {"x"}, {});
  CHECK_THROWS_AS(score(p, outside, refs(window), bg), ArgumentError);
}

TEST_CASE("bm25 term saturates at a + 1") {
  RankingParams params;
  double prev = 0;
  for (double f : {1.0, 2.0, 10.0, 1e3, 1e6}) {
    const double t = bm25_term(f, 10, 10, params);
    CHECK(t > prev);
    CHECK(t < params.a + 1.0);
    prev = t;
  }
  CHECK(bm25_term(1e9, 10, 10, params) == doctest::Approx(params.a + 1.0).epsilon(1e-8));
  CHECK(bm25_term(0, 10, 10, params) == 0.0);
}

TEST_CASE("idf weighting reduces to BM25 over soft counts") {
  const auto rc = testing::make_retrieval_case(4, 60, 5);
  const auto windows = build_windows(rc.news, rc.post.day, 3);
  RankingParams bm25;
  bm25.weighting = EntityWeighting::kIdf;
  const BackgroundCorpus empty_bg;
  for (const auto* d : windows.windows[2]) {
    const double avg = average_length(windows.windows[2]);
    double expected = 0;
    for (const auto& e : rc.post.entities) {
      expected += soft_idf(e, windows.windows[2]) *
                  bm25_term(static_cast<double>(soft_tf(e, *d)),
                            static_cast<double>(d->tokens.size()), avg, bm25);
    }
    CHECK(score(rc.post, *d, windows.windows[2], empty_bg, bm25) == expected);
  }
}

TEST_CASE("score is monotone in soft tf") {
  std::vector<NewsArticle> docs = {doc("a", 0, {"x", "y", "z"}, {ent({"trump"})}),
                                   doc("b", 0, {"x", "y", "z"}, {ent({"paris"})})};
  const auto bg = background_of(docs);
  Post p;
  p.entities = {ent({"trump"}), ent({"paris"})};
  double prev = score(p, docs[0], refs(docs), bg);
  for (int i = 0; i < 6; ++i) {
    docs[0].entities.push_back(ent({"trump"}));
    const double s = score(p, docs[0], refs(docs), bg);
    CHECK(s >= prev);
    prev = s;
  }
}

TEST_CASE("retrieval with one article total yields one item") {
  const std::vector<NewsArticle> news = {doc("only", 100, {"x"}, {ent({"trump"})})};
  Post p;
  p.day = 100;
  p.entities = {ent({"trump"})};
  const auto windows = build_windows(news, 100, 2);
  const auto bg = background_of(news);
  const auto got = retrieve(p, windows, bg);
  REQUIRE(got.items.size() == 1);
  CHECK(got.items[0].article_id == "only");
  CHECK(got.items[0].window == 1);
}

TEST_CASE("same-day news can fill every window") {
  std::vector<NewsArticle> news;
  for (int i = 0; i < 6; ++i) news.push_back(doc("n" + std::to_string(i), 100, {"x"}, {ent({"trump"})}));
  news.push_back(doc("old", 97, {"x"}, {ent({"paris"})}));
  Post p;
  p.day = 100;
  p.entities = {ent({"trump"})};
  const auto windows = build_windows(news, 100, 5);
  const auto got = retrieve(p, windows, background_of(news));
  REQUIRE(got.items.size() == 5);
  std::set<std::string> ids;
  for (int i = 0; i < 5; ++i) {
    CHECK(got.items[i].window == i + 1);
    ids.insert(got.items[i].article_id);
  }
  CHECK(ids.size() == 5);
  // Equal scores in window 1 resolve to the smallest id.
  CHECK(got.items[0].article_id == "n0");
}

TEST_CASE("windows where every remaining article scores zero contribute nothing") {
  const std::vector<NewsArticle> news = {doc("a", 100, {"x"}, {ent({"trump"})}),
                                         doc("b", 99, {"x"}, {ent({"paris"})})};
  Post p;
  p.day = 100;
  p.entities = {ent({"trump"})};
  const auto got = retrieve(p, build_windows(news, 100, 3), background_of(news));
  REQUIRE(got.items.size() == 1);
  CHECK(got.items[0].article_id == "a");
}

TEST_CASE("retrieve matches the exhaustive oracle on synthetic corpora") {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    const int k = 1 + static_cast<int>(seed % 5);
    const auto rc = testing::make_retrieval_case(seed, 200, k);
    const auto windows = build_windows(rc.news, rc.post.day, k);
    const auto bg = sample_background(rc.news, 50, seed);
    for (bool temporal : {true, false}) {
      RankingParams params;
      params.k = k;
      params.weighting = temporal ? EntityWeighting::kTemporalPopularity : EntityWeighting::kIdf;
      const auto got = retrieve(rc.post, windows, bg, params);
      const auto want = testing::retrieve_oracle(rc.post, windows, bg.articles, temporal);
      CHECK(got == want);
    }
  }
}

TEST_CASE("retrieved sets satisfy their invariants") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto rc = testing::make_retrieval_case(seed, 120, 5);
    const auto windows = build_windows(rc.news, rc.post.day, 5);
    const auto got = retrieve(rc.post, windows, sample_background(rc.news, 40, 1));
    std::set<std::string> ids;
    int last_window = 0;
    for (const auto& item : got.items) {
      CHECK(item.score > 0);
      CHECK(item.window > last_window);
      last_window = item.window;
      ids.insert(item.article_id);
    }
    CHECK(ids.size() == got.items.size());
    CHECK(got.items.size() <= 5);
  }
}

TEST_CASE("a shared retriever is safe across threads") {
  const auto rc = testing::make_retrieval_case(77, 150, 5);
  const auto bg = sample_background(rc.news, 60, 3);
  const Retriever retriever(bg, {}, {});
  std::vector<Post> posts;
  for (std::uint64_t s = 0; s < 8; ++s) {
    auto other = testing::make_retrieval_case(s, 1, 5).post;
    other.day = rc.post.day;
    posts.push_back(other);
  }
  const auto windows = build_windows(rc.news, rc.post.day, 5);
  std::vector<RetrievedSet> serial, parallel(posts.size());
  for (const auto& p : posts) serial.push_back(retrieve(p, windows, bg));
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    threads.emplace_back([&, i] { parallel[i] = retriever.retrieve(posts[i], windows); });
  }
  for (auto& t : threads) t.join();
  CHECK(serial == parallel);
}

TEST_CASE("build_context examples") {
  const std::vector<NewsArticle> news = {
      doc("a", 0, {"floyd", "the", "floyd", "protest"}, {}),
      doc("b", 0, {"protest", "protest", "protest", "city"}, {})};
  const auto index = index_articles(news);
  RankingParams params;

  RetrievedSet one;
  one.items = {{"a", 3.0, 1}};
  const auto c1 = build_context(one, index, params);
  REQUIRE(c1.tokens == Tokens{"floyd", "protest"});
  CHECK(c1.raw_weights == std::vector<double>{6.0, 3.0});
  CHECK(c1.norm_weights == std::vector<double>{1.0, 0.5});

  // "protest": 2 * 1 + 5 * 3.
  RetrievedSet two;
  two.items = {{"a", 2.0, 1}, {"b", 5.0, 2}};
  const auto c2 = build_context(two, index, params);
  REQUIRE(c2.tokens.front() == "protest");
  CHECK(c2.raw_weights.front() == 17.0);
  CHECK(std::find(c2.tokens.begin(), c2.tokens.end(), "the") == c2.tokens.end());

  RetrievedSet zero;
  zero.items = {{"a", 0.0, 1}};
  CHECK(build_context(zero, index, params).empty());
  CHECK(build_context(RetrievedSet{}, index, params).empty());

  RetrievedSet unknown;
  unknown.items = {{"missing", 1.0, 1}};
  CHECK_THROWS_AS(build_context(unknown, index, params), ValidationError);
}

TEST_CASE("context bundles are sorted, truncated and floored") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto rc = testing::make_retrieval_case(seed, 150, 5);
    const auto windows = build_windows(rc.news, rc.post.day, 5);
    const auto got = retrieve(rc.post, windows, sample_background(rc.news, 40, 2));
    RankingParams params;
    params.context_size = 7;
    const auto c = build_context(got, index_articles(rc.news), params);
    CHECK(c.size() <= 7);
    CHECK(c.raw_weights.size() == c.size());
    CHECK(c.norm_weights.size() == c.size());
    for (std::size_t i = 0; i + 1 < c.size(); ++i) {
      const bool ordered = c.raw_weights[i] > c.raw_weights[i + 1] ||
                           (c.raw_weights[i] == c.raw_weights[i + 1] && c.tokens[i] < c.tokens[i + 1]);
      CHECK(ordered);
    }
    for (double w : c.norm_weights) {
      CHECK(w >= 0.05);
      CHECK(w <= 1.0);
    }
    if (!c.empty()) CHECK(c.norm_weights.front() == 1.0);
  }
}

TEST_CASE("ranking parameters are validated") {
  RankingParams p;
  p.k = 0;
  CHECK_THROWS_AS(p.validate(), ArgumentError);
  p = {};
  p.b = 1.5;
  CHECK_THROWS_AS(p.validate(), ArgumentError);
  p = {};
  p.a = 0;
  CHECK_THROWS_AS(p.validate(), ArgumentError);
  p = {};
  p.context_size = 0;
  CHECK_THROWS_AS(p.validate(), ArgumentError);
}
