// Copyright 2026 The HashNews Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hashnews/generator.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "hashnews/errors.h"

namespace hashnews {

using diff::Tensor;
using diff::Var;

std::string to_string(GeneratorMode mode) {
  switch (mode) {
    case GeneratorMode::kHashNews: return "hashnews";
    case GeneratorMode::kNoRank: return "norank";
    case GeneratorMode::kNoRankNoLocal: return "noranknolocal";
    case GeneratorMode::kPostOnly: return "postonly";
  }
  return "hashnews";
}

GeneratorMode parse_mode(const std::string& name) {
  if (name == "hashnews") return GeneratorMode::kHashNews;
  if (name == "norank") return GeneratorMode::kNoRank;
  if (name == "noranknolocal") return GeneratorMode::kNoRankNoLocal;
  if (name == "postonly") return GeneratorMode::kPostOnly;
  throw ArgumentError("unknown mode '" + name +
                      "' (expected hashnews, norank, noranknolocal or postonly)");
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::kAdam ? "adam" : "sgd"; }

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd") return OptimizerKind::kSgd;
  throw ArgumentError("unknown optimizer '" + name + "' (expected adam or sgd)");
}

EntityWeighting ranking_weighting(GeneratorMode mode) {
  return mode == GeneratorMode::kHashNews || mode == GeneratorMode::kPostOnly
             ? EntityWeighting::kTemporalPopularity
             : EntityWeighting::kIdf;
}

void GeneratorConfig::validate() const {
  if (embed_dim < 1 || hidden < 1 || encoder_layers < 1 || decoder_layers < 1 ||
      merge_layers < 1) {
    throw ArgumentError("generator: all dimensions and layer counts must be >= 1");
  }
  if (!(dropout >= 0 && dropout < 1)) throw ArgumentError("generator: dropout must be in [0, 1)");
  if (max_gen_len < 1) throw ArgumentError("generator: max_gen_len must be >= 1");
  if (beam_size < 1) throw ArgumentError("generator: beam_size must be >= 1");
  if (batch_size < 1) throw ArgumentError("generator: batch_size must be >= 1");
  if (!(learning_rate > 0)) throw ArgumentError("generator: learning rate must be > 0");
  if (!(lr_decay > 0 && lr_decay <= 1)) throw ArgumentError("generator: lr_decay must be in (0, 1]");
  if (!(init_scale > 0)) throw ArgumentError("generator: init_scale must be > 0");
  if (max_grad_norm < 0) throw ArgumentError("generator: max_grad_norm must be >= 0");
}

GeneratorConfig GeneratorConfig::desk() {
  GeneratorConfig c;
  c.embed_dim = 32;
  c.hidden = 32;
  c.encoder_layers = 1;
  c.batch_size = 8;
  c.learning_rate = 0.01;
  return c;
}

// ---------------------------------------------------------------------------
// Layers

Var affine(const AffineLayer& layer, const Var& x) {
  return diff::add(diff::matmul(x, layer.weight), layer.bias);
}

Var gru_step(const GruLayer& layer, const Var& x_proj_row, const Var& h) {
  const std::size_t H = layer.hidden();
  const Var h_proj = diff::add(diff::matmul(h, layer.w_h), layer.b_h);
  const Var rz = diff::sigmoid(diff::add(diff::slice(x_proj_row, 1, 0, 2 * H),
                                         diff::slice(h_proj, 1, 0, 2 * H)));
  const Var r = diff::slice(rz, 1, 0, H);
  const Var z = diff::slice(rz, 1, H, 2 * H);
  const Var n = diff::tanh(diff::add(diff::slice(x_proj_row, 1, 2 * H, 3 * H),
                                     diff::mul(r, diff::slice(h_proj, 1, 2 * H, 3 * H))));
  // (1 - z) * n + z * h
  return diff::add(n, diff::mul(z, diff::sub(h, n)));
}

Var gru_sequence(const GruLayer& layer, const Var& x, bool reverse) {
  const std::size_t T = x.rows();
  const Var x_proj = diff::add(diff::matmul(x, layer.w_x), layer.b_x);
  Var h(Tensor::zeros(1, layer.hidden()));
  std::vector<Var> states(T);
  for (std::size_t s = 0; s < T; ++s) {
    const std::size_t t = reverse ? T - 1 - s : s;
    h = gru_step(layer, diff::slice(x_proj, 0, t, t + 1), h);
    states[t] = h;
  }
  return diff::concat(states, 0);
}

namespace {

void check_attention_inputs(const Var& h_post, const Var& h_context, const Var& w_b) {
  if (h_post.cols() != h_context.cols() || w_b.rows() != h_post.cols() ||
      w_b.cols() != h_context.cols()) {
    throw ShapeError("bi-attention: post states " + h_post.value().shape_string() +
                     ", context states " + h_context.value().shape_string() + ", W_b " +
                     w_b.value().shape_string());
  }
}

AttentionOutput attend(const Var& h_post, const Var& h_context, const Var& logits_post,
                       const Var& logits_context) {
  AttentionOutput out;
  out.a_p = diff::softmax(logits_post, 0);
  out.a_c = diff::softmax(logits_context, 1);
  out.r_p = diff::matmul(diff::transpose(out.a_p), h_post);
  out.r_c = diff::matmul(out.a_c, h_context);
  return out;
}

}  // namespace

AttentionOutput hybrid_bi_attention(const Var& h_post, const Var& h_context, const Var& w_b,
                                    std::span<const double> local_weights) {
  check_attention_inputs(h_post, h_context, w_b);
  const std::size_t P = h_post.rows(), C = h_context.rows();
  if (local_weights.size() != C) {
    throw ShapeError("hybrid bi-attention: " + std::to_string(local_weights.size()) +
                     " local weights for " + std::to_string(C) + " context states");
  }
  Tensor scale_matrix({P, C});
  for (std::size_t j = 0; j < C; ++j) {
    if (!(local_weights[j] > 0 && local_weights[j] <= 1)) {
      throw ArgumentError("hybrid bi-attention: local weights must be in (0, 1]");
    }
    for (std::size_t i = 0; i < P; ++i) scale_matrix(i, j) = local_weights[j];
  }
  const Var logits = diff::matmul(diff::matmul(h_post, w_b), diff::transpose(h_context));
  return attend(h_post, h_context, logits, diff::mul(logits, Var(std::move(scale_matrix))));
}

AttentionOutput bi_attention(const Var& h_post, const Var& h_context, const Var& w_b) {
  check_attention_inputs(h_post, h_context, w_b);
  const Var logits = diff::matmul(diff::matmul(h_post, w_b), diff::transpose(h_context));
  return attend(h_post, h_context, logits, logits);
}

// ---------------------------------------------------------------------------
// Parameters

namespace {

GruLayer make_gru(std::size_t in, std::size_t hidden) {
  return {Var(Tensor::zeros(in, 3 * hidden), true), Var(Tensor::zeros(hidden, 3 * hidden), true),
          Var(Tensor::zeros(1, 3 * hidden), true), Var(Tensor::zeros(1, 3 * hidden), true)};
}

AffineLayer make_affine(std::size_t in, std::size_t out) {
  return {Var(Tensor::zeros(in, out), true), Var(Tensor::zeros(1, out), true)};
}

BiEncoderParams make_encoder(const GeneratorConfig& c) {
  BiEncoderParams p;
  for (std::size_t l = 0; l < c.encoder_layers; ++l) {
    const std::size_t in = l == 0 ? c.embed_dim : c.state_dim();
    p.forward.push_back(make_gru(in, c.hidden));
    p.backward.push_back(make_gru(in, c.hidden));
  }
  return p;
}

void name_gru(std::vector<std::pair<std::string, Var>>& out, const std::string& prefix,
              const GruLayer& g) {
  out.emplace_back(prefix + ".w_x", g.w_x);
  out.emplace_back(prefix + ".w_h", g.w_h);
  out.emplace_back(prefix + ".b_x", g.b_x);
  out.emplace_back(prefix + ".b_h", g.b_h);
}

void name_affine(std::vector<std::pair<std::string, Var>>& out, const std::string& prefix,
                 const AffineLayer& a) {
  out.emplace_back(prefix + ".weight", a.weight);
  out.emplace_back(prefix + ".bias", a.bias);
}

void name_encoder(std::vector<std::pair<std::string, Var>>& out, const std::string& prefix,
                  const BiEncoderParams& e) {
  for (std::size_t l = 0; l < e.forward.size(); ++l) {
    name_gru(out, prefix + ".l" + std::to_string(l) + ".fwd", e.forward[l]);
    name_gru(out, prefix + ".l" + std::to_string(l) + ".bwd", e.backward[l]);
  }
}

}  // namespace

std::vector<std::pair<std::string, Var>> ModelParams::named() const {
  std::vector<std::pair<std::string, Var>> out;
  out.emplace_back("embedding", embedding);
  name_encoder(out, "post_encoder", post_encoder);
  name_encoder(out, "context_encoder", context_encoder);
  out.emplace_back("w_b", w_b);
  for (std::size_t l = 0; l < merge_post.size(); ++l) {
    name_affine(out, "merge_post.l" + std::to_string(l), merge_post[l]);
  }
  for (std::size_t l = 0; l < merge_context.size(); ++l) {
    name_affine(out, "merge_context.l" + std::to_string(l), merge_context[l]);
  }
  name_affine(out, "decoder_init", decoder_init);
  for (std::size_t l = 0; l < decoder.size(); ++l) {
    name_gru(out, "decoder.l" + std::to_string(l), decoder[l]);
  }
  out.emplace_back("w_attention", w_attention);
  name_affine(out, "attention_out", attention_out);
  name_affine(out, "projection", projection);
  return out;
}

HashtagGenerator::HashtagGenerator(GeneratorConfig config, Vocabulary vocab)
    : config_(config), vocab_(std::move(vocab)) {
  config_.validate();
  const std::size_t d = config_.state_dim();
  const std::size_t V = vocab_.size();
  params_.embedding = Var(Tensor::zeros(V, config_.embed_dim), true);
  params_.post_encoder = make_encoder(config_);
  params_.context_encoder = make_encoder(config_);
  params_.w_b = Var(Tensor::zeros(d, d), true);
  for (std::size_t l = 0; l < config_.merge_layers; ++l) {
    params_.merge_post.push_back(make_affine(l == 0 ? 2 * d : d, d));
    params_.merge_context.push_back(make_affine(l == 0 ? 2 * d : d, d));
  }
  params_.decoder_init = make_affine(uses_context() ? 2 * d : d, d);
  for (std::size_t l = 0; l < config_.decoder_layers; ++l) {
    params_.decoder.push_back(make_gru(l == 0 ? config_.embed_dim : d, d));
  }
  params_.w_attention = Var(Tensor::zeros(d, d), true);
  params_.attention_out = make_affine(2 * d, d);
  params_.projection = make_affine(d, V);

  // Embeddings ~ U(-init_scale, init_scale), weight matrices Glorot-uniform,
  // biases zero.
  Rng rng(config_.seed);
  for (auto& [name, p] : params_.named()) {
    auto& t = p.mutable_value();
    if (name.ends_with("bias") || name.ends_with(".b_x") || name.ends_with(".b_h")) continue;
    const double limit = name == "embedding"
                             ? config_.init_scale
                             : std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
    for (auto& x : t.data()) x = uniform(rng, -limit, limit);
  }
}

EncoderOutput HashtagGenerator::encode(std::span<const std::int32_t> ids, Side side) const {
  if (ids.empty()) throw ArgumentError("encode: empty token sequence");
  const auto& enc = side == Side::kPost ? params_.post_encoder : params_.context_encoder;
  Var input = diff::embedding_lookup(params_.embedding, ids);
  Var fwd, bwd;
  for (std::size_t l = 0; l < enc.forward.size(); ++l) {
    fwd = gru_sequence(enc.forward[l], input, false);
    bwd = gru_sequence(enc.backward[l], input, true);
    input = diff::concat({fwd, bwd}, 1);
  }
  const std::size_t T = ids.size();
  return {input, diff::concat({diff::slice(fwd, 0, T - 1, T), diff::slice(bwd, 0, 0, 1)}, 1)};
}

Var HashtagGenerator::merge(const Var& h, const Var& r, Side side) const {
  if (!h.value().same_shape(r.value())) {
    throw ShapeError("merge: " + h.value().shape_string() + " vs " + r.value().shape_string());
  }
  const auto& layers = side == Side::kPost ? params_.merge_post : params_.merge_context;
  Var x = diff::concat({h, r}, 1);
  for (const auto& layer : layers) x = diff::tanh(affine(layer, x));
  return x;
}

EncodedInput HashtagGenerator::encode_input(std::span<const std::int32_t> post,
                                            std::span<const std::int32_t> context,
                                            std::span<const double> context_weights,
                                            bool training, Rng& rng) const {
  const std::size_t d = config_.state_dim();
  const auto enc_p = encode(post, Side::kPost);
  const Var h_post = diff::dropout(enc_p.states, config_.dropout, rng, training);
  if (!uses_context()) return {h_post, enc_p.final};

  if (context.empty()) {
    const Var fused_post = merge(h_post, Var(Tensor::zeros(post.size(), d)), Side::kPost);
    return {fused_post, diff::concat({enc_p.final, Var(Tensor::zeros(1, d))}, 1)};
  }
  if (context_weights.size() != context.size()) {
    throw ShapeError("encode_input: " + std::to_string(context_weights.size()) +
                     " weights for " + std::to_string(context.size()) + " context tokens");
  }
  const auto enc_c = encode(context, Side::kContext);
  const Var h_context = diff::dropout(enc_c.states, config_.dropout, rng, training);
  const AttentionOutput att =
      config_.mode == GeneratorMode::kNoRankNoLocal
          ? bi_attention(h_post, h_context, params_.w_b)
          : hybrid_bi_attention(h_post, h_context, params_.w_b, context_weights);
  const Var fused_post = merge(h_post, att.r_c, Side::kPost);
  const Var fused_context = merge(h_context, att.r_p, Side::kContext);
  return {diff::concat({fused_post, fused_context}, 0),
          diff::concat({enc_p.final, enc_c.final}, 1)};
}

HashtagGenerator::DecoderState HashtagGenerator::initial_state(const EncodedInput& input) const {
  const Var s0 = affine(params_.decoder_init, input.init_source);
  return {std::vector<Var>(params_.decoder.size(), s0)};
}

HashtagGenerator::DecoderState HashtagGenerator::step(const DecoderState& state,
                                                      std::int32_t token, bool training,
                                                      Rng& rng) const {
  const std::int32_t ids[] = {token};
  Var x = diff::dropout(diff::embedding_lookup(params_.embedding, ids), config_.dropout, rng,
                        training);
  DecoderState next;
  next.layers.reserve(state.layers.size());
  for (std::size_t l = 0; l < params_.decoder.size(); ++l) {
    const auto& layer = params_.decoder[l];
    const Var x_proj = diff::add(diff::matmul(x, layer.w_x), layer.b_x);
    x = gru_step(layer, x_proj, state.layers[l]);
    next.layers.push_back(x);
  }
  return next;
}

Var HashtagGenerator::attention_keys(const Var& memory) const { return diff::transpose(memory); }

namespace {

// Attentional hidden state tanh(W_o [s; c] + b_o) for the top decoder layer.
Var attentional_output(const ModelParams& p, const Var& s, const Var& memory, const Var& keys_t) {
  const Var scores = diff::matmul(diff::matmul(s, p.w_attention), keys_t);
  const Var alpha = diff::softmax(scores, 1);
  const Var ctx = diff::matmul(alpha, memory);
  return diff::tanh(affine(p.attention_out, diff::concat({s, ctx}, 1)));
}

}  // namespace

Var HashtagGenerator::output_log_probs(const DecoderState& state, const Var& memory,
                                       const Var& keys_t) const {
  const Var o = attentional_output(params_, state.layers.back(), memory, keys_t);
  return diff::log_softmax(affine(params_.projection, o), 1);
}

Var HashtagGenerator::decode_train(const EncodedInput& input,
                                   std::span<const std::int32_t> target, bool training,
                                   Rng& rng) const {
  if (target.empty()) throw ArgumentError("decode_train: empty target");
  if (input.memory.rows() == 0) throw ArgumentError("decode_train: empty memory");
  const Var keys_t = attention_keys(input.memory);
  std::vector<std::int32_t> inputs{Vocabulary::kBos};
  inputs.insert(inputs.end(), target.begin(), target.end());
  std::vector<std::int32_t> outputs(target.begin(), target.end());
  outputs.push_back(Vocabulary::kEos);

  DecoderState state = initial_state(input);
  std::vector<Var> attn_states;
  attn_states.reserve(inputs.size());
  for (const auto token : inputs) {
    state = step(state, token, training, rng);
    attn_states.push_back(attentional_output(params_, state.layers.back(), input.memory, keys_t));
  }
  const Var logits = affine(params_.projection, diff::concat(attn_states, 0));
  const Var picked = diff::pick(diff::log_softmax(logits, 1), outputs);
  return diff::scale(diff::mean(picked), -1.0);
}

Var HashtagGenerator::loss(const Example& example, bool training, Rng& rng) const {
  const auto input =
      encode_input(example.post, example.context, example.context_weights, training, rng);
  return decode_train(input, example.target, training, rng);
}

namespace {

class ModelScorer {
 public:
  using State = HashtagGenerator::DecoderState;

  ModelScorer(const HashtagGenerator& model, EncodedInput input)
      : model_(model), input_(std::move(input)), keys_t_(model.attention_keys(input_.memory)) {}

  State initial() { return model_.step(model_.initial_state(input_), Vocabulary::kBos, false, rng_); }

  std::vector<double> log_probs(const State& state) {
    const auto lp = model_.output_log_probs(state, input_.memory, keys_t_);
    std::vector<double> out(lp.value().data().begin(), lp.value().data().end());
    out[Vocabulary::kPad] = -std::numeric_limits<double>::infinity();
    out[Vocabulary::kBos] = -std::numeric_limits<double>::infinity();
    return out;
  }

  State advance(const State& state, std::int32_t token) {
    return model_.step(state, token, false, rng_);
  }

 private:
  const HashtagGenerator& model_;
  EncodedInput input_;
  Var keys_t_;
  Rng rng_{0};  // unused in eval mode
};

}  // namespace

std::vector<Hypothesis> HashtagGenerator::decode_hypotheses(std::span<const std::int32_t> post,
                                                            std::span<const std::int32_t> context,
                                                            std::span<const double> context_weights,
                                                            std::size_t beam_size,
                                                            bool greedy) const {
  diff::NoGradGuard no_grad;
  Rng rng(0);
  ModelScorer scorer(*this, encode_input(post, context, context_weights, false, rng));
  if (greedy) return {greedy_decode(scorer, config_.max_gen_len, Vocabulary::kEos)};
  return beam_search_raw(scorer, beam_size, config_.max_gen_len, Vocabulary::kEos);
}

std::vector<std::pair<Tokens, double>> HashtagGenerator::generate(
    std::span<const std::int32_t> post, std::span<const std::int32_t> context,
    std::span<const double> context_weights) const {
  return hypotheses_to_hashtags(
      decode_hypotheses(post, context, context_weights, config_.beam_size), vocab_,
      config_.beam_size);
}

std::vector<std::pair<Tokens, double>> hypotheses_to_hashtags(const std::vector<Hypothesis>& hyps,
                                                              const Vocabulary& vocab,
                                                              std::size_t limit) {
  std::vector<std::pair<Tokens, double>> out;
  std::set<Tokens> seen;
  for (const auto& h : hyps) {
    if (out.size() >= limit) break;
    Tokens words;
    for (const auto t : h.tokens) {
      if (t == Vocabulary::kUnk) continue;
      words.push_back(vocab.token(t));
    }
    if (words.empty() || !seen.insert(words).second) continue;
    out.emplace_back(std::move(words), h.normalized_score());
  }
  return out;
}

Example make_inference_input(const Post& post, const ContextBundle& context,
                             const Vocabulary& vocab, GeneratorMode mode) {
  Example ex;
  ex.post = vocab.encode(post.tokens);
  if (mode != GeneratorMode::kPostOnly) {
    ex.context = vocab.encode(context.tokens);
    ex.context_weights = context.norm_weights;
  }
  return ex;
}

std::vector<Example> make_examples(const Post& post, const ContextBundle& context,
                                   const Vocabulary& vocab, GeneratorMode mode) {
  std::vector<Example> out;
  const Example base = make_inference_input(post, context, vocab, mode);
  for (const auto& h : post.hashtags) {
    Example ex = base;
    ex.target = vocab.encode(h);
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace hashnews
