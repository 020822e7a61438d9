// Copyright 2026 The HashNews Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "hashnews/corpus.h"
#include "hashnews/errors.h"
#include "synthetic.h"

using namespace hashnews;

namespace {

std::vector<NewsArticle> news_on_days(std::initializer_list<std::int64_t> days) {
  std::vector<NewsArticle> out;
  int i = 0;
  for (auto d : days) out.push_back({"a" + std::to_string(i++), d, {"tok"}, {}});
  return out;
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("read_posts maps fields directly") {
  std::istringstream in(
      R"({"id":"t1","day":100,"tokens":["hello"],"entities":[],"hashtags":[["hello"]]})");
  const auto posts = read_posts(in);
  REQUIRE(posts.size() == 1);
  CHECK(posts[0].id == "t1");
  CHECK(posts[0].day == 100);
  CHECK(posts[0].tokens == Tokens{"hello"});
  CHECK(posts[0].hashtags == std::vector<Hashtag>{{"hello"}});
}

TEST_CASE("empty input yields no records") {
  std::istringstream posts(""), news("");
  CHECK(read_posts(posts).empty());
  CHECK(read_news(news).empty());
}

TEST_CASE("schema violations are parse errors with line numbers") {
  auto post_error_line = [](const std::string& text) -> std::size_t {
    std::istringstream in(text);
    try {
      read_posts(in);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  const std::string good =
      R"({"id":"a","day":1,"tokens":["x"],"entities":[["x"]],"hashtags":[]})";
  CHECK(post_error_line(R"({"id":"t1","day":1,"tokens":[],"entities":[],"hashtags":[]})") == 1);
  CHECK(post_error_line(good + "\n" +
                        R"({"id":"b","day":1,"tokens":["x"],"entities":[],"hashtags":[],"x":1})") ==
        2);
  CHECK(post_error_line(R"({"id":"b","day":1,"tokens":["x"],"entities":[]})") == 1);
  CHECK(post_error_line(R"({"id":"b","day":-1,"tokens":["x"],"entities":[],"hashtags":[]})") == 1);
  CHECK(post_error_line(R"({"id":"b","day":1,"tokens":["x"],"entities":[["a b"]],"hashtags":[]})") ==
        1);
  CHECK(post_error_line("{not json") == 1);
  CHECK(post_error_line(good) == 0);

  std::istringstream news(R"({"id":"n","day":1,"tokens":["x"],"entities":[],"hashtags":[]})");
  CHECK_THROWS_AS(read_news(news), ParseError);
}

TEST_CASE("duplicate ids are rejected") {
  std::istringstream in(R"({"id":"n","day":1,"tokens":["x"],"entities":[]}
{"id":"n","day":2,"tokens":["y"],"entities":[]})");
  CHECK_THROWS_AS(read_news(in), ValidationError);
}

TEST_CASE("ingestion lowercases and skips blank lines") {
  std::istringstream in(
      "\n{\"id\":\"n\",\"day\":1,\"tokens\":[\"Trump\"],\"entities\":[[\"Donald\",\"TRUMP\"]]}\n\n");
  const auto news = read_news(in);
  REQUIRE(news.size() == 1);
  CHECK(news[0].tokens == Tokens{"trump"});
  CHECK(news[0].entities[0].tokens == Tokens{"donald", "trump"});
}

TEST_CASE("missing file is a validation error") {
  CHECK_THROWS_AS(load_posts("/nonexistent/posts.jsonl"), ValidationError);
}

TEST_CASE("serialization round-trips canonical lines") {
  const std::string post_line =
      R"({"id":"t1","day":100,"tokens":["a","b"],"entities":[["donald","trump"]],"hashtags":[["george","floyd"]]})";
  const std::string news_line = R"({"id":"n1","day":7,"tokens":["x"],"entities":[]})";
  std::istringstream p(post_line), n(news_line);
  CHECK(to_json_line(read_posts(p).at(0)) == post_line);
  CHECK(to_json_line(read_news(n).at(0)) == news_line);

  // Generated records survive write -> read -> write unchanged.
  const auto rc = testing::make_retrieval_case(3, 40, 5);
  std::ostringstream out;
  for (const auto& a : rc.news) out << to_json_line(a) << '\n';
  std::istringstream back(out.str());
  CHECK(read_news(back) == rc.news);
}

TEST_CASE("build_windows nests day ranges ending at the post day") {
  const auto news = news_on_days({98, 99, 100});
  const auto w = build_windows(news, 100, 2);
  REQUIRE(w.k() == 2);
  CHECK(as_set(w.ids(0)) == std::set<std::string>{"a1", "a2"});
  CHECK(as_set(w.ids(1)) == std::set<std::string>{"a0", "a1", "a2"});

  CHECK(build_windows(news, 100, 5).k() == 5);
  const auto empty = build_windows(news, 10, 3);
  for (const auto& d : empty.windows) CHECK(d.empty());
  CHECK_THROWS_AS(build_windows(news, 100, 0), ArgumentError);
}

TEST_CASE("windows are nested and causal on random collections") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto rc = testing::make_retrieval_case(seed, 60, 5);
    const int k = 1 + static_cast<int>(seed % 5);
    const auto w = build_windows(rc.news, rc.post.day, k);
    for (int i = 0; i < k; ++i) {
      for (const auto* d : w.windows[i]) {
        CHECK(d->day <= rc.post.day);
        CHECK(d->day >= rc.post.day - (i + 1));
      }
      // Every article in range is present.
      const auto expected = std::count_if(rc.news.begin(), rc.news.end(), [&](const auto& a) {
        return a.day <= rc.post.day && a.day >= rc.post.day - (i + 1);
      });
      CHECK(static_cast<long>(w.windows[i].size()) == expected);
      if (i + 1 < k) {
        const auto inner = as_set(w.ids(i));
        const auto outer = as_set(w.ids(i + 1));
        CHECK(std::includes(outer.begin(), outer.end(), inner.begin(), inner.end()));
      }
    }
  }
}

TEST_CASE("sample_background is deterministic, distinct and saturating") {
  std::vector<NewsArticle> news;
  for (int i = 0; i < 5000; ++i) news.push_back({"n" + std::to_string(i), i % 30, {"t"}, {}});

  const auto a = sample_background(news, 100, 9);
  const auto b = sample_background(news, 100, 9);
  CHECK(a.article_ids == b.article_ids);
  CHECK(a.article_ids.size() == 100);
  CHECK(as_set(a.article_ids).size() == 100);
  CHECK(std::is_sorted(a.article_ids.begin(), a.article_ids.end()));
  CHECK(sample_background(news, 100, 10).article_ids != a.article_ids);

  // Depends on ids, not input order.
  auto shuffled = news;
  std::reverse(shuffled.begin(), shuffled.end());
  CHECK(sample_background(shuffled, 100, 9).article_ids == a.article_ids);

  const std::vector<NewsArticle> few(news.begin(), news.begin() + 7);
  CHECK(sample_background(few, 50, 1).article_ids.size() == 7);
  CHECK_THROWS_AS(sample_background(news, 0, 1), ArgumentError);
}

TEST_CASE("build_vocab orders by frequency then token and applies the cutoff") {
  std::vector<Post> posts(1);
  posts[0].tokens = {"a", "a", "a", "b"};
  const auto v = build_vocab(posts, {}, 2);
  CHECK(v.size() == 5);
  CHECK(v.id("a") == 4);
  CHECK(v.id("b") == Vocabulary::kUnk);
  CHECK(v.token(Vocabulary::kPad) == "<pad>");
  CHECK(v.token(Vocabulary::kEos) == "</s>");

  const auto all = build_vocab(posts, {}, 1);
  CHECK(all.contains("b"));

  posts[0].tokens = {"zeta", "alpha", "mid"};
  const std::vector<Tokens> ctx = {{"beta"}};
  const auto tied = build_vocab(posts, ctx, 1);
  CHECK(tied.tokens() == Tokens{"<pad>", "<unk>", "<s>", "</s>", "alpha", "beta", "mid", "zeta"});
  CHECK_THROWS_AS(build_vocab(posts, {}, 0), ArgumentError);
}

TEST_CASE("vocabulary encodes unknown tokens as UNK") {
  const Vocabulary v(Tokens{"x", "y"});
  CHECK(v.encode({"y", "q", "x"}) == std::vector<std::int32_t>{5, Vocabulary::kUnk, 4});
}
