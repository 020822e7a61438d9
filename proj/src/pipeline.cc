// Copyright 2026 The HashNews Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hashnews/pipeline.h"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "hashnews/errors.h"

namespace hashnews {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fixed(double x, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
  return buf;
}

void emit(const Log& log, const std::string& msg) {
  if (log) log(msg);
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  return out;
}

template <typename Parse>
auto read_jsonl(const std::filesystem::path& path, Parse parse) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::vector<decltype(parse(json{}, std::size_t{}))> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      out.push_back(parse(json::parse(text), line));
    } catch (const json::exception& e) {
      throw ParseError(line, std::string(path.filename().string()) + ": " + e.what());
    }
  }
  return out;
}

std::unordered_map<std::string, const ContextRecord*> index_contexts(
    const std::vector<ContextRecord>& records) {
  std::unordered_map<std::string, const ContextRecord*> out;
  for (const auto& r : records) {
    if (!out.emplace(r.post_id, &r).second) {
      throw ValidationError("duplicate context record for post '" + r.post_id + "'");
    }
  }
  return out;
}

const ContextBundle& context_for(
    const std::unordered_map<std::string, const ContextRecord*>& contexts, const Post& post,
    bool required) {
  static const ContextBundle kEmpty;
  auto it = contexts.find(post.id);
  if (it != contexts.end()) return it->second->context;
  if (required) throw ValidationError("no context record for post '" + post.id + "'");
  return kEmpty;
}

}  // namespace

void RunConfig::sync() {
  ranking.weighting = ranking_weighting(mode);
  generator.mode = mode;
  generator.seed = seed;
}

std::string to_json_line(const ContextRecord& record) {
  ordered_json obj;
  obj["post_id"] = record.post_id;
  obj["retrieved"] = ordered_json::array();
  for (const auto& item : record.retrieved.items) {
    ordered_json r;
    r["article_id"] = item.article_id;
    r["score"] = item.score;
    r["window"] = item.window;
    obj["retrieved"].push_back(std::move(r));
  }
  obj["context"] = ordered_json::array();
  for (std::size_t i = 0; i < record.context.size(); ++i) {
    ordered_json c;
    c["token"] = record.context.tokens[i];
    c["weight"] = record.context.raw_weights[i];
    c["norm_weight"] = record.context.norm_weights[i];
    obj["context"].push_back(std::move(c));
  }
  return obj.dump();
}

std::string to_json_line(const PredictionRecord& record) {
  ordered_json obj;
  obj["post_id"] = record.post_id;
  obj["hashtags"] = ordered_json::array();
  for (const auto& [words, score] : record.hashtags) {
    ordered_json h;
    h["words"] = words;
    h["score"] = score;
    obj["hashtags"].push_back(std::move(h));
  }
  return obj.dump();
}

std::vector<ContextRecord> read_context_records(const std::filesystem::path& path) {
  return read_jsonl(path, [](const json& obj, std::size_t line) {
    ContextRecord r;
    r.post_id = obj.at("post_id").get<std::string>();
    for (const auto& item : obj.at("retrieved")) {
      r.retrieved.items.push_back({item.at("article_id").get<std::string>(),
                                   item.at("score").get<double>(), item.at("window").get<int>()});
    }
    for (const auto& c : obj.at("context")) {
      r.context.tokens.push_back(lowercase(c.at("token").get<std::string>()));
      r.context.raw_weights.push_back(c.at("weight").get<double>());
      const double w = c.at("norm_weight").get<double>();
      if (!(w > 0 && w <= 1)) throw ParseError(line, "norm_weight must be in (0, 1]");
      r.context.norm_weights.push_back(w);
    }
    return r;
  });
}

std::vector<PredictionRecord> read_prediction_records(const std::filesystem::path& path) {
  return read_jsonl(path, [](const json& obj, std::size_t) {
    PredictionRecord r;
    r.post_id = obj.at("post_id").get<std::string>();
    for (const auto& h : obj.at("hashtags")) {
      r.hashtags.emplace_back(h.at("words").get<Hashtag>(), h.at("score").get<double>());
    }
    return r;
  });
}

std::string to_json(const EvalReport& report) {
  ordered_json obj;
  obj["averaging"] = "macro";
  obj["n_posts"] = report.n_posts;
  obj["f1_at_1"] = report.f1_at_1;
  obj["f1_at_5"] = report.f1_at_5;
  obj["f1_at_10"] = report.f1_at_10;
  obj["acc"] = report.acc;
  obj["map"] = report.map;
  obj["rg1"] = report.rg1;
  return obj.dump();
}

std::string format_report_table(const EvalReport& report) {
  std::ostringstream os;
  os << "macro-averaged over " << report.n_posts
     << " posts (precision@K divides by min(K, #predictions))\n";
  os << "  F1@1    F1@5    F1@10   ACC     MAP     RG-1\n";
  for (double v : {report.f1_at_1, report.f1_at_5, report.f1_at_10, report.acc, report.map,
                   report.rg1}) {
    os << "  " << fixed(100 * v) << (100 * v < 10 ? "  " : " ");
  }
  os << "\n";
  return os.str();
}

void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  for (std::size_t t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(n);
          return;
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

std::vector<ContextRecord> retrieve_contexts(const std::vector<Post>& posts,
                                             const std::vector<NewsArticle>& news,
                                             const RunConfig& config) {
  const auto background = sample_background(news, config.background_size, config.seed);
  const Retriever retriever(background, config.ranking, config.alignment);
  const auto articles = index_articles(news);
  std::vector<ContextRecord> out(posts.size());
  parallel_for(posts.size(), config.threads, [&](std::size_t i) {
    const auto& post = posts[i];
    const auto windows = build_windows(news, post.day, config.ranking.k);
    ContextRecord rec;
    rec.post_id = post.id;
    rec.retrieved = retriever.retrieve(post, windows);
    rec.context = build_context(rec.retrieved, articles, config.ranking);
    out[i] = std::move(rec);
  });
  return out;
}

void run_retrieve(const RunConfig& config, const std::filesystem::path& out_path,
                  const Log& log) {
  Stopwatch clock;
  const auto posts = load_posts(config.posts);
  const auto news = load_news(config.news);
  const auto records = retrieve_contexts(posts, news, config);
  auto out = open_output(out_path);
  for (const auto& r : records) out << to_json_line(r) << '\n';
  std::size_t with_context = 0;
  for (const auto& r : records) with_context += r.context.empty() ? 0 : 1;
  emit(log, "retrieve: " + std::to_string(records.size()) + " posts (" +
                std::to_string(with_context) + " with context) against " +
                std::to_string(news.size()) + " articles in " + fixed(clock.seconds()) + " s");
}

TrainResult run_train(const RunConfig& config, const std::filesystem::path& contexts_path,
                      const std::filesystem::path& checkpoint_path, const Log& log) {
  Stopwatch clock;
  const auto posts = load_posts(config.posts);
  const bool needs_context = config.mode != GeneratorMode::kPostOnly;
  std::vector<ContextRecord> records;
  if (needs_context || !contexts_path.empty()) records = read_context_records(contexts_path);
  const auto contexts = index_contexts(records);

  std::vector<const Post*> labelled;
  for (const auto& p : posts) {
    if (!p.hashtags.empty()) labelled.push_back(&p);
  }
  if (labelled.empty()) throw ValidationError("train: no posts with hashtags");

  // Deterministic post-level validation split.
  std::vector<std::size_t> order(labelled.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  shuffle(order, split_rng);
  auto n_val = static_cast<std::size_t>(config.validation_fraction *
                                        static_cast<double>(labelled.size()));
  if (n_val >= labelled.size()) n_val = 0;
  std::vector<const Post*> train_posts, val_posts;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_val ? val_posts : train_posts).push_back(labelled[order[i]]);
  }
  // Restore input order inside each split.
  auto by_input = [&](const Post* a, const Post* b) { return a < b; };
  std::sort(train_posts.begin(), train_posts.end(), by_input);
  std::sort(val_posts.begin(), val_posts.end(), by_input);

  std::vector<Post> vocab_posts;
  std::vector<Tokens> context_tokens;
  for (const auto* p : train_posts) {
    vocab_posts.push_back(*p);
    if (needs_context) context_tokens.push_back(context_for(contexts, *p, true).tokens);
  }
  const Vocabulary vocab = build_vocab(vocab_posts, context_tokens, config.min_freq);

  auto examples_for = [&](const std::vector<const Post*>& ps) {
    std::vector<Example> out;
    for (const auto* p : ps) {
      auto ex = make_examples(*p, context_for(contexts, *p, needs_context), vocab, config.mode);
      out.insert(out.end(), ex.begin(), ex.end());
    }
    return out;
  };
  const auto train_set = examples_for(train_posts);
  const auto val_set = examples_for(val_posts);
  emit(log, "train: " + std::to_string(train_set.size()) + " training pairs, " +
                std::to_string(val_set.size()) + " validation pairs, vocabulary " +
                std::to_string(vocab.size()) + ", mode " + to_string(config.mode));

  HashtagGenerator model(config.generator, vocab);
  const auto result = train(model, train_set, val_set, log);
  model.save(checkpoint_path);

  ordered_json trace;
  trace["train_loss"] = result.train_loss;
  trace["validation_loss"] = result.validation_loss;
  trace["best_epoch"] = result.best_epoch;
  trace["events"] = ordered_json::array();
  for (const auto& e : result.events) {
    ordered_json j;
    j["kind"] = e.kind == TrainEvent::Kind::kLrDecay ? "lr_decay" : "early_stop";
    j["epoch"] = e.epoch;
    j["old_lr"] = e.old_lr;
    j["new_lr"] = e.new_lr;
    trace["events"].push_back(std::move(j));
  }
  auto sidecar = open_output(checkpoint_path.string() + ".losses.json");
  sidecar << trace.dump(2) << '\n';
  emit(log, "train: " + std::to_string(result.train_loss.size()) + " epochs in " +
                fixed(clock.seconds()) + " s, best epoch " + std::to_string(result.best_epoch));
  return result;
}

void run_generate(const RunConfig& config, const std::filesystem::path& checkpoint_path,
                  const std::filesystem::path& contexts_path,
                  const std::filesystem::path& out_path, const GenerateOverrides& overrides,
                  const Log& log) {
  Stopwatch clock;
  const auto loaded = HashtagGenerator::load(checkpoint_path);
  GeneratorConfig gen_config = loaded.config();
  if (overrides.mode && *overrides.mode != gen_config.mode) {
    throw ValidationError("generate: checkpoint was trained in mode " +
                          to_string(gen_config.mode) + ", requested " +
                          to_string(*overrides.mode));
  }
  if (overrides.beam_size) gen_config.beam_size = *overrides.beam_size;
  if (overrides.max_gen_len) gen_config.max_gen_len = *overrides.max_gen_len;
  HashtagGenerator model(gen_config, loaded.vocab());
  {
    auto dst = model.params().named();
    const auto src = loaded.params().named();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i].second.mutable_value() = src[i].second.value();
  }

  const auto posts = load_posts(config.posts);
  const bool needs_context = gen_config.mode != GeneratorMode::kPostOnly;
  std::vector<ContextRecord> records;
  if (needs_context || !contexts_path.empty()) records = read_context_records(contexts_path);
  const auto contexts = index_contexts(records);

  std::vector<PredictionRecord> predictions(posts.size());
  parallel_for(posts.size(), config.threads, [&](std::size_t i) {
    const auto& post = posts[i];
    const auto input = make_inference_input(post, context_for(contexts, post, needs_context),
                                            model.vocab(), gen_config.mode);
    predictions[i] = {post.id, model.generate(input.post, input.context, input.context_weights)};
  });
  auto out = open_output(out_path);
  for (const auto& p : predictions) out << to_json_line(p) << '\n';
  emit(log, "generate: " + std::to_string(posts.size()) + " posts, beam " +
                std::to_string(gen_config.beam_size) + ", in " + fixed(clock.seconds()) + " s");
}

EvalReport run_evaluate(const std::filesystem::path& predictions_path,
                        const std::filesystem::path& posts_path) {
  const auto records = read_prediction_records(predictions_path);
  const auto posts = load_posts(posts_path);
  std::vector<PostPrediction> preds;
  for (const auto& r : records) {
    PostPrediction p{r.post_id, {}};
    for (const auto& [words, score] : r.hashtags) p.hashtags.push_back(words);
    preds.push_back(std::move(p));
  }
  std::vector<PostGold> golds;
  for (const auto& p : posts) golds.push_back({p.id, p.hashtags});
  return evaluate(preds, golds);
}

EvalReport run_pipeline(const RunConfig& config, const Log& log) {
  const auto dir = config.output_dir;
  std::filesystem::create_directories(dir);
  run_retrieve(config, dir / "contexts.jsonl", log);
  run_train(config, dir / "contexts.jsonl", dir / "model.ckpt", log);
  run_generate(config, dir / "model.ckpt", dir / "contexts.jsonl", dir / "predictions.jsonl", {},
               log);
  const auto report = run_evaluate(dir / "predictions.jsonl", config.posts);
  auto out = open_output(dir / "report.json");
  out << to_json(report) << '\n';
  return report;
}

}  // namespace hashnews
