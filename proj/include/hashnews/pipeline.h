// Copyright 2026 The HashNews Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

// File-based stages: retrieve -> train -> generate -> evaluate. Each stage
// reads and writes JSON-lines files so it can be rerun on its own.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hashnews/corpus.h"
#include "hashnews/entity_match.h"
#include "hashnews/generator.h"
#include "hashnews/metrics.h"
#include "hashnews/retriever.h"

namespace hashnews {

struct RunConfig {
  std::filesystem::path posts;
  std::filesystem::path news;
  std::filesystem::path output_dir;
  RankingParams ranking;
  AlignmentParams alignment;
  GeneratorConfig generator;
  GeneratorMode mode = GeneratorMode::kHashNews;
  std::size_t background_size = 1000;
  int min_freq = 1;
  double validation_fraction = 0.1;
  std::uint64_t seed = 42;
  std::size_t threads = 1;

  // Copies mode and seed into the ranking and generator sections.
  void sync();
};

// Retriever output for one post; the generator's input.
struct ContextRecord {
  std::string post_id;
  RetrievedSet retrieved;
  ContextBundle context;
};

struct PredictionRecord {
  std::string post_id;
  std::vector<std::pair<Hashtag, double>> hashtags;  // ranked, with scores
};

std::string to_json_line(const ContextRecord& record);
std::string to_json_line(const PredictionRecord& record);
std::vector<ContextRecord> read_context_records(const std::filesystem::path& path);
std::vector<PredictionRecord> read_prediction_records(const std::filesystem::path& path);

std::string to_json(const EvalReport& report);
std::string format_report_table(const EvalReport& report);

// Runs fn(i) for i in [0, n) on up to `threads` workers. The first
// exception thrown by any call is rethrown after all workers finish.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

std::vector<ContextRecord> retrieve_contexts(const std::vector<Post>& posts,
                                             const std::vector<NewsArticle>& news,
                                             const RunConfig& config);

using Log = std::function<void(const std::string&)>;

void run_retrieve(const RunConfig& config, const std::filesystem::path& out_path, const Log& log);

// Writes the checkpoint and a "<checkpoint>.losses.json" sidecar.
TrainResult run_train(const RunConfig& config, const std::filesystem::path& contexts_path,
                      const std::filesystem::path& checkpoint_path, const Log& log);

struct GenerateOverrides {
  std::optional<GeneratorMode> mode;  // must match the checkpoint when set
  std::optional<std::size_t> beam_size;
  std::optional<std::size_t> max_gen_len;
};

void run_generate(const RunConfig& config, const std::filesystem::path& checkpoint_path,
                  const std::filesystem::path& contexts_path,
                  const std::filesystem::path& out_path, const GenerateOverrides& overrides,
                  const Log& log);

EvalReport run_evaluate(const std::filesystem::path& predictions_path,
                        const std::filesystem::path& posts_path);

// retrieve -> train -> generate -> evaluate inside config.output_dir
// (contexts.jsonl, model.ckpt, predictions.jsonl, report.json).
EvalReport run_pipeline(const RunConfig& config, const Log& log);

}  // namespace hashnews
