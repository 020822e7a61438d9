// Copyright 2026 The HashNews Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

// hashnews: retrieve news context for posts, train the hashtag generator,
// decode hashtags and score them.
//
//   hashnews retrieve --posts P --news N --out contexts.jsonl
//   hashnews train    --posts P --contexts contexts.jsonl --checkpoint model.ckpt
//   hashnews generate --posts P --contexts contexts.jsonl --checkpoint model.ckpt --out preds.jsonl
//   hashnews evaluate --predictions preds.jsonl --posts P
//   hashnews pipeline --posts P --news N --output-dir run/
//
// Exit codes: 0 success, 1 internal error, 2 usage or validation error.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hashnews/errors.h"
#include "hashnews/pipeline.h"

namespace {

using namespace hashnews;

struct GeneratorFlags {
  bool desk = false;
  std::optional<std::size_t> embed_dim, hidden, encoder_layers, decoder_layers, merge_layers;
  std::optional<std::size_t> batch_size, beam, max_len, max_epochs, patience;
  std::optional<double> lr, lr_decay, dropout, max_grad_norm, init_scale;
  std::optional<std::string> optimizer;

  GeneratorConfig resolve() const {
    GeneratorConfig c = desk ? GeneratorConfig::desk() : GeneratorConfig{};
    if (embed_dim) c.embed_dim = *embed_dim;
    if (hidden) c.hidden = *hidden;
    if (encoder_layers) c.encoder_layers = *encoder_layers;
    if (decoder_layers) c.decoder_layers = *decoder_layers;
    if (merge_layers) c.merge_layers = *merge_layers;
    if (batch_size) c.batch_size = *batch_size;
    if (beam) c.beam_size = *beam;
    if (max_len) c.max_gen_len = *max_len;
    if (max_epochs) c.max_epochs = *max_epochs;
    if (patience) c.patience = *patience;
    if (lr) c.learning_rate = *lr;
    if (lr_decay) c.lr_decay = *lr_decay;
    if (dropout) c.dropout = *dropout;
    if (max_grad_norm) c.max_grad_norm = *max_grad_norm;
    if (init_scale) c.init_scale = *init_scale;
    if (optimizer) c.optimizer = parse_optimizer(*optimizer);
    return c;
  }
};

struct Options {
  RunConfig run;
  std::string mode = "hashnews";
  GeneratorFlags gen;
  std::filesystem::path out, contexts, checkpoint, predictions;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--seed", o.run.seed, "Random seed")->capture_default_str();
  cmd->add_option("--threads", o.run.threads, "Worker threads")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

void add_mode(CLI::App* cmd, Options& o) {
  cmd->add_option("--mode", o.mode, "hashnews | norank | noranknolocal | postonly")
      ->capture_default_str()
      ->check(CLI::IsMember({"hashnews", "norank", "noranknolocal", "postonly"}));
}

void add_retrieval(CLI::App* cmd, Options& o) {
  auto& r = o.run.ranking;
  auto& a = o.run.alignment;
  cmd->add_option("--news", o.run.news, "News articles (JSON lines)")->required();
  cmd->add_option("--k-windows", r.k, "Number of day windows")->capture_default_str();
  cmd->add_option("--context-size", r.context_size, "Context words per post")
      ->capture_default_str();
  cmd->add_option("--background-size", o.run.background_size,
                  "Articles sampled for the background corpus")
      ->capture_default_str();
  cmd->add_option("--bm25-a", r.a, "BM25 saturation constant")->capture_default_str();
  cmd->add_option("--bm25-b", r.b, "BM25 length normalization")->capture_default_str();
  cmd->add_option("--local-weight-floor", r.local_weight_floor,
                  "Lower bound of normalized context weights")
      ->capture_default_str();
  cmd->add_option("--match-t", a.token_threshold, "Token alignment threshold")
      ->capture_default_str();
  cmd->add_option("--match-q", a.coverage_threshold, "Entity coverage threshold")
      ->capture_default_str();
  cmd->add_option("--sw-match", a.match_reward, "Alignment match reward")->capture_default_str();
  cmd->add_option("--sw-mismatch", a.mismatch_penalty, "Alignment mismatch penalty")
      ->capture_default_str();
  cmd->add_option("--sw-gap", a.gap_penalty, "Alignment gap penalty")->capture_default_str();
}

void add_decoding(CLI::App* cmd, Options& o) {
  cmd->add_option("--beam", o.gen.beam, "Beam size (default 20)");
  cmd->add_option("--max-len", o.gen.max_len, "Maximum hashtag length in words (default 10)");
}

void add_training(CLI::App* cmd, Options& o) {
  auto& g = o.gen;
  cmd->add_flag("--desk", g.desk, "Small model preset (embed 32, hidden 32, one encoder layer)");
  cmd->add_option("--embed-dim", g.embed_dim, "Embedding width (default 300)");
  cmd->add_option("--hidden", g.hidden, "GRU units per direction (default 400)");
  cmd->add_option("--encoder-layers", g.encoder_layers, "Stacked Bi-GRU layers (default 2)");
  cmd->add_option("--decoder-layers", g.decoder_layers, "Stacked decoder GRU layers (default 1)");
  cmd->add_option("--merge-layers", g.merge_layers, "Merge layers (default 1)");
  cmd->add_option("--batch-size", g.batch_size, "Mini-batch size (default 64)");
  cmd->add_option("--lr", g.lr, "Learning rate (default 0.001)");
  cmd->add_option("--lr-decay", g.lr_decay, "Decay factor on a non-improving epoch (default 0.5)");
  cmd->add_option("--dropout", g.dropout, "Dropout rate (default 0.1)");
  cmd->add_option("--epochs", g.max_epochs, "Maximum epochs (default 20)");
  cmd->add_option("--patience", g.patience, "Non-improving epochs tolerated (default 3)");
  cmd->add_option("--max-grad-norm", g.max_grad_norm, "Gradient clipping norm, 0 disables");
  cmd->add_option("--init-scale", g.init_scale, "Embedding init range (default 0.1)");
  cmd->add_option("--optimizer", g.optimizer, "adam | sgd (default adam)")
      ->check(CLI::IsMember({"adam", "sgd"}));
  cmd->add_option("--min-freq", o.run.min_freq, "Vocabulary frequency cutoff")
      ->capture_default_str();
  cmd->add_option("--val-fraction", o.run.validation_fraction,
                  "Share of labelled posts held out for validation")
      ->capture_default_str();
}

void finalize(Options& o) {
  o.run.mode = parse_mode(o.mode);
  o.run.generator = o.gen.resolve();
  o.run.sync();
}

void log_line(const std::string& msg) { std::cerr << msg << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hashtag generation for microblog posts with retrieved news context"};
  app.require_subcommand(1);
  Options o;

  auto* retrieve = app.add_subcommand("retrieve", "Rank news articles and build context words");
  retrieve->add_option("--posts", o.run.posts, "Posts (JSON lines)")->required();
  retrieve->add_option("--out", o.out, "Context records output")->required();
  add_retrieval(retrieve, o);
  add_mode(retrieve, o);
  add_common(retrieve, o);

  auto* train_cmd = app.add_subcommand("train", "Train the generator on context records");
  train_cmd->add_option("--posts", o.run.posts, "Labelled posts (JSON lines)")->required();
  train_cmd->add_option("--contexts", o.contexts, "Context records from `retrieve`");
  train_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint output")->required();
  add_mode(train_cmd, o);
  add_training(train_cmd, o);
  add_decoding(train_cmd, o);
  add_common(train_cmd, o);

  auto* generate = app.add_subcommand("generate", "Decode hashtags with a trained checkpoint");
  std::optional<std::string> generate_mode;
  generate->add_option("--posts", o.run.posts, "Posts (JSON lines)")->required();
  generate->add_option("--contexts", o.contexts, "Context records from `retrieve`");
  generate->add_option("--checkpoint", o.checkpoint, "Trained checkpoint")->required();
  generate->add_option("--out", o.out, "Prediction records output")->required();
  generate->add_option("--mode", generate_mode, "Must match the checkpoint when given")
      ->check(CLI::IsMember({"hashnews", "norank", "noranknolocal", "postonly"}));
  add_decoding(generate, o);
  add_common(generate, o);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predictions against gold hashtags");
  evaluate_cmd->add_option("--predictions", o.predictions, "Prediction records")->required();
  evaluate_cmd->add_option("--posts", o.run.posts, "Gold posts (JSON lines)")->required();

  auto* pipeline = app.add_subcommand("pipeline", "retrieve, train, generate and evaluate");
  pipeline->add_option("--posts", o.run.posts, "Labelled posts (JSON lines)")->required();
  pipeline->add_option("--output-dir", o.run.output_dir, "Directory for all artifacts")
      ->required();
  add_retrieval(pipeline, o);
  add_mode(pipeline, o);
  add_training(pipeline, o);
  add_decoding(pipeline, o);
  add_common(pipeline, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    finalize(o);
    if (*retrieve) {
      o.run.ranking.validate();
      o.run.alignment.validate();
      run_retrieve(o.run, o.out, log_line);
    } else if (*train_cmd) {
      run_train(o.run, o.contexts, o.checkpoint, log_line);
    } else if (*generate) {
      GenerateOverrides ov;
      if (generate_mode) ov.mode = parse_mode(*generate_mode);
      ov.beam_size = o.gen.beam;
      ov.max_gen_len = o.gen.max_len;
      run_generate(o.run, o.checkpoint, o.contexts, o.out, ov, log_line);
    } else if (*evaluate_cmd) {
      const auto report = run_evaluate(o.predictions, o.run.posts);
      std::cout << to_json(report) << '\n' << format_report_table(report);
    } else if (*pipeline) {
      o.run.ranking.validate();
      o.run.alignment.validate();
      const auto report = run_pipeline(o.run, log_line);
      std::cout << to_json(report) << '\n' << format_report_table(report);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
