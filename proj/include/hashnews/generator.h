// Copyright 2026 The HashNews Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

// Dual-encoder hashtag generator with hybrid bi-attention.
//
//   post ids ──► Bi-GRU ──► H_p ─┐                 ┌─► merge_p([H_p; R_c]) ─┐
//                                ├─ bi-attention ──┤                         ├─► memory ─► attention GRU decoder
//   context ids ─► Bi-GRU ─► H_c ┘   (W_b, w_norm) └─► merge_c([H_c; R_p]) ─┘
//
// The context-side attention logits are scaled by the per-token local
// weights produced by the retriever.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hashnews/beam_search.h"
#include "hashnews/corpus.h"
#include "hashnews/diffmath.h"
#include "hashnews/retriever.h"

namespace hashnews {

enum class GeneratorMode {
  kHashNews,        // temporal ranking + hybrid bi-attention
  kNoRank,          // BM25 ranking + hybrid bi-attention
  kNoRankNoLocal,   // BM25 ranking + plain bi-attention
  kPostOnly,        // no context encoder (seq2seq with attention)
};

enum class OptimizerKind { kAdam, kSgd };

std::string to_string(GeneratorMode mode);
GeneratorMode parse_mode(const std::string& name);
std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(const std::string& name);

// Ranking kernel matching each mode: only kHashNews uses temporal popularity.
EntityWeighting ranking_weighting(GeneratorMode mode);

struct GeneratorConfig {
  std::size_t embed_dim = 300;
  std::size_t hidden = 400;  // per direction; encoder states have width 2 * hidden
  std::size_t encoder_layers = 2;
  std::size_t decoder_layers = 1;
  std::size_t merge_layers = 1;
  double learning_rate = 0.001;
  double lr_decay = 0.5;
  std::size_t batch_size = 64;
  double dropout = 0.1;
  std::size_t max_gen_len = 10;
  std::size_t beam_size = 20;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  GeneratorMode mode = GeneratorMode::kHashNews;
  std::size_t max_epochs = 20;
  std::size_t patience = 3;
  double max_grad_norm = 5.0;  // 0 disables clipping
  double init_scale = 0.1;  // embedding init range; other weights are Glorot-uniform
  std::uint64_t seed = 42;

  std::size_t state_dim() const { return 2 * hidden; }
  void validate() const;

  // Small dimensions for tests and laptop runs.
  static GeneratorConfig desk();
};

// One (post, context, hashtag) training pair, already mapped to ids.
struct Example {
  std::vector<std::int32_t> post;
  std::vector<std::int32_t> context;      // may be empty
  std::vector<double> context_weights;    // normalized local weights, same length as context
  std::vector<std::int32_t> target;       // hashtag words, no BOS/EOS
};

// Outputs of the bi-attention layer. a_p is |p| x |c| normalized over
// posts (columns sum to 1); a_c is |p| x |c| normalized over context
// (rows sum to 1). r_p is |c| x d, r_c is |p| x d.
struct AttentionOutput {
  diff::Var r_p;
  diff::Var r_c;
  diff::Var a_p;
  diff::Var a_c;
};

AttentionOutput hybrid_bi_attention(const diff::Var& h_post, const diff::Var& h_context,
                                    const diff::Var& w_b, std::span<const double> local_weights);
// Same mechanism without local weights.
AttentionOutput bi_attention(const diff::Var& h_post, const diff::Var& h_context,
                             const diff::Var& w_b);

struct GruLayer {
  diff::Var w_x;  // in x 3h, gate order [reset, update, candidate]
  diff::Var w_h;  // h x 3h
  diff::Var b_x;  // 1 x 3h
  diff::Var b_h;  // 1 x 3h

  std::size_t hidden() const { return w_h.rows(); }
};

// One GRU step for a single row input x (1 x in) and state h (1 x hidden).
diff::Var gru_step(const GruLayer& layer, const diff::Var& x_proj_row, const diff::Var& h);
// Runs a GRU over the rows of x (T x in); returns T x hidden states.
diff::Var gru_sequence(const GruLayer& layer, const diff::Var& x, bool reverse);

struct BiEncoderParams {
  std::vector<GruLayer> forward;
  std::vector<GruLayer> backward;
};

struct AffineLayer {
  diff::Var weight;  // in x out
  diff::Var bias;    // 1 x out
};

diff::Var affine(const AffineLayer& layer, const diff::Var& x);

struct ModelParams {
  diff::Var embedding;  // V x embed_dim
  BiEncoderParams post_encoder;
  BiEncoderParams context_encoder;
  diff::Var w_b;  // d x d
  std::vector<AffineLayer> merge_post;
  std::vector<AffineLayer> merge_context;
  AffineLayer decoder_init;      // (2d or d) x d
  std::vector<GruLayer> decoder;  // state width d
  diff::Var w_attention;         // d x d bilinear decoder attention
  AffineLayer attention_out;     // 2d x d
  AffineLayer projection;        // d x V

  // Every tensor with a stable name, in serialization order.
  std::vector<std::pair<std::string, diff::Var>> named() const;
};

struct EncodedInput {
  diff::Var memory;       // L x d, attended by the decoder
  diff::Var init_source;  // 1 x (2d or d), mapped to the decoder's initial state
};

struct EncoderOutput {
  diff::Var states;  // T x d
  diff::Var final;   // 1 x d: [last forward state; first backward state]
};

class HashtagGenerator {
 public:
  HashtagGenerator(GeneratorConfig config, Vocabulary vocab);

  const GeneratorConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  ModelParams& params() { return params_; }
  const ModelParams& params() const { return params_; }

  enum class Side { kPost, kContext };
  EncoderOutput encode(std::span<const std::int32_t> ids, Side side) const;

  // Fused memory and decoder-init source for one example. Dropout is
  // applied to encoder outputs when `training`.
  EncodedInput encode_input(std::span<const std::int32_t> post,
                            std::span<const std::int32_t> context,
                            std::span<const double> context_weights, bool training,
                            Rng& rng) const;

  diff::Var merge(const diff::Var& h, const diff::Var& r, Side side) const;

  // Teacher-forced mean negative log-likelihood of BOS target EOS.
  diff::Var decode_train(const EncodedInput& input, std::span<const std::int32_t> target,
                         bool training, Rng& rng) const;

  diff::Var loss(const Example& example, bool training, Rng& rng) const;

  // Decoder state and one-step API used by beam search.
  struct DecoderState {
    std::vector<diff::Var> layers;  // 1 x d each
  };
  DecoderState initial_state(const EncodedInput& input) const;
  DecoderState step(const DecoderState& state, std::int32_t token, bool training, Rng& rng) const;
  diff::Var output_log_probs(const DecoderState& state, const diff::Var& memory,
                             const diff::Var& keys_t) const;
  diff::Var attention_keys(const diff::Var& memory) const;

  // Ranked hashtags (word sequences with normalized log-prob scores).
  std::vector<std::pair<Tokens, double>> generate(std::span<const std::int32_t> post,
                                                  std::span<const std::int32_t> context,
                                                  std::span<const double> context_weights) const;
  // Unprocessed finished hypotheses from beam search (or greedy when
  // `greedy` is set, as a single-element list).
  std::vector<Hypothesis> decode_hypotheses(std::span<const std::int32_t> post,
                                            std::span<const std::int32_t> context,
                                            std::span<const double> context_weights,
                                            std::size_t beam_size, bool greedy = false) const;

  void save(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  static HashtagGenerator load(std::istream& in);
  static HashtagGenerator load(const std::filesystem::path& path);

 private:
  bool uses_context() const { return config_.mode != GeneratorMode::kPostOnly; }

  GeneratorConfig config_;
  Vocabulary vocab_;
  ModelParams params_;
};

// Maps finished hypotheses to hashtags: UNK tokens dropped, empty and
// duplicate sequences removed, at most `limit` kept, order preserved.
std::vector<std::pair<Tokens, double>> hypotheses_to_hashtags(const std::vector<Hypothesis>& hyps,
                                                              const Vocabulary& vocab,
                                                              std::size_t limit);

// One pair per gold hashtag. Context tokens are mapped through the
// vocabulary; in kNoRankNoLocal mode weights are ignored by the model, in
// kPostOnly mode the context is dropped.
std::vector<Example> make_examples(const Post& post, const ContextBundle& context,
                                   const Vocabulary& vocab, GeneratorMode mode);
Example make_inference_input(const Post& post, const ContextBundle& context,
                             const Vocabulary& vocab, GeneratorMode mode);

struct TrainEvent {
  enum class Kind { kLrDecay, kEarlyStop };
  Kind kind;
  std::size_t epoch;  // 1-based
  double old_lr = 0;
  double new_lr = 0;
};

struct TrainResult {
  std::vector<double> train_loss;       // per epoch, mean over pairs
  std::vector<double> validation_loss;  // per epoch; equals train_loss without a validation set
  std::vector<TrainEvent> events;
  std::size_t best_epoch = 0;           // 1-based; parameters are restored to this epoch
};

using TrainLogger = std::function<void(const std::string&)>;

// Mini-batch training. The learning rate is multiplied by lr_decay each
// epoch the validation loss fails to improve; training stops once that
// happens more than `patience` epochs in a row, or after max_epochs.
TrainResult train(HashtagGenerator& model, std::span<const Example> train_set,
                  std::span<const Example> validation_set, const TrainLogger& log = {});

double evaluate_loss(const HashtagGenerator& model, std::span<const Example> examples);

}  // namespace hashnews
