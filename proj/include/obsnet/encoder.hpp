#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "obsnet/errors.hpp"
#include "obsnet/graph.hpp"
#include "obsnet/mask.hpp"
#include "obsnet/rng.hpp"
#include "obsnet/tensor.hpp"
#include "obsnet/tokenizer.hpp"

namespace obsnet {

enum class Pooling { cls, observers };

struct EncoderConfig {
  int layers = 4;
  int heads = 4;
  int hidden_dim = 128;
  int ff_dim = 512;
  int max_len = 32;
  int n_observers = 20;
  Pooling pooling = Pooling::observers;
  float dropout = 0.0f;  // reserved; 0 keeps runs deterministic

  int head_dim() const { return hidden_dim / heads; }
  std::size_t seq_side() const {
    return static_cast<std::size_t>(max_len + n_observers);
  }

  void validate() const {
    if (layers < 1 || heads < 1 || hidden_dim < 1 || ff_dim < 1 || max_len < 3)
      throw ConfigError("encoder config: non-positive dimension");
    if (hidden_dim % heads != 0)
      throw ConfigError("encoder config: hidden_dim not divisible by heads");
    if (n_observers < 0) throw ConfigError("encoder config: negative observer count");
    if (pooling == Pooling::observers && n_observers < 1)
      throw ConfigError("encoder config: observer pooling requires n_observers >= 1");
    if (dropout < 0.0f || dropout >= 1.0f)
      throw ConfigError("encoder config: dropout outside [0,1)");
  }
};

template <typename T>
struct LayerParams {
  Tensor<T> wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor<T> ln1_g, ln1_b;
  Tensor<T> w1, b1, w2, b2;
  Tensor<T> ln2_g, ln2_b;
};

// All learnable tensors of the encoder. The observer token embedding is the
// shared [OBS] row of the token table; observers are differentiated only by
// their dedicated position embeddings.
template <typename T>
struct EncoderParams {
  Tensor<T> token_emb;  // |V| x d
  Tensor<T> word_pos;   // max_len x d
  Tensor<T> obs_pos;    // n_observers x d
  std::vector<LayerParams<T>> layers;

  template <typename Fn>
  void for_each(Fn fn) {
    fn("token_emb", token_emb);
    fn("word_pos", word_pos);
    fn("obs_pos", obs_pos);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string p = "layer" + std::to_string(l) + ".";
      auto& L = layers[l];
      fn(p + "wq", L.wq); fn(p + "bq", L.bq);
      fn(p + "wk", L.wk); fn(p + "bk", L.bk);
      fn(p + "wv", L.wv); fn(p + "bv", L.bv);
      fn(p + "wo", L.wo); fn(p + "bo", L.bo);
      fn(p + "ln1_g", L.ln1_g); fn(p + "ln1_b", L.ln1_b);
      fn(p + "w1", L.w1); fn(p + "b1", L.b1);
      fn(p + "w2", L.w2); fn(p + "b2", L.b2);
      fn(p + "ln2_g", L.ln2_g); fn(p + "ln2_b", L.ln2_b);
    }
  }

  template <typename Fn>
  void for_each(Fn fn) const {
    const_cast<EncoderParams*>(this)->for_each(
        [&](const std::string& n, Tensor<T>& t) { fn(n, static_cast<const Tensor<T>&>(t)); });
  }
};

template <typename T>
struct LinearHead {
  Tensor<T> weight;  // |C| x d
  Tensor<T> bias;    // |C|
};

// Truncated-normal (std 0.02) weights, zero biases, unit layer-norm gains.
template <typename T>
EncoderParams<T> init_encoder_params(const EncoderConfig& cfg, int vocab_size, Rng& rng) {
  cfg.validate();
  const std::size_t d = static_cast<std::size_t>(cfg.hidden_dim);
  const std::size_t ff = static_cast<std::size_t>(cfg.ff_dim);
  auto tn = [&](std::vector<std::size_t> shape) {
    Tensor<T> t = Tensor<T>::zeros(std::move(shape));
    for (auto& x : t.data) x = static_cast<T>(rng.trunc_normal(0.02));
    return t;
  };
  EncoderParams<T> p;
  p.token_emb = tn({static_cast<std::size_t>(vocab_size), d});
  p.word_pos = tn({static_cast<std::size_t>(cfg.max_len), d});
  p.obs_pos = tn({static_cast<std::size_t>(cfg.n_observers), d});
  for (int l = 0; l < cfg.layers; ++l) {
    LayerParams<T> L;
    L.wq = tn({d, d}); L.bq = Tensor<T>::zeros({d});
    L.wk = tn({d, d}); L.bk = Tensor<T>::zeros({d});
    L.wv = tn({d, d}); L.bv = Tensor<T>::zeros({d});
    L.wo = tn({d, d}); L.bo = Tensor<T>::zeros({d});
    L.ln1_g = Tensor<T>::full({d}, T(1)); L.ln1_b = Tensor<T>::zeros({d});
    L.w1 = tn({d, ff}); L.b1 = Tensor<T>::zeros({ff});
    L.w2 = tn({ff, d}); L.b2 = Tensor<T>::zeros({d});
    L.ln2_g = Tensor<T>::full({d}, T(1)); L.ln2_b = Tensor<T>::zeros({d});
    p.layers.push_back(std::move(L));
  }
  return p;
}

template <typename T>
LinearHead<T> init_linear_head(int n_classes, int hidden_dim, Rng& rng) {
  LinearHead<T> h;
  h.weight = Tensor<T>::zeros(
      {static_cast<std::size_t>(n_classes), static_cast<std::size_t>(hidden_dim)});
  for (auto& x : h.weight.data) x = static_cast<T>(rng.trunc_normal(0.02));
  h.bias = Tensor<T>::zeros({static_cast<std::size_t>(n_classes)});
  return h;
}

// Graph leaves for one forward/backward pass; shared by every sequence
// encoded in the same graph so gradients accumulate across encodes.
template <typename T>
struct EncoderRefs {
  using Ref = typename Graph<T>::NodeRef;
  Ref token_emb, word_pos, obs_pos;
  struct LayerRefs {
    Ref wq, bq, wk, bk, wv, bv, wo, bo, ln1_g, ln1_b, w1, b1, w2, b2, ln2_g, ln2_b;
  };
  std::vector<LayerRefs> layers;
};

template <typename T>
EncoderRefs<T> make_encoder_refs(Graph<T>& g, const EncoderParams<T>& p, bool requires_grad) {
  EncoderRefs<T> r;
  r.token_emb = g.leaf(p.token_emb, requires_grad);
  r.word_pos = g.leaf(p.word_pos, requires_grad);
  r.obs_pos = g.leaf(p.obs_pos, requires_grad);
  for (const auto& L : p.layers) {
    typename EncoderRefs<T>::LayerRefs lr;
    lr.wq = g.leaf(L.wq, requires_grad); lr.bq = g.leaf(L.bq, requires_grad);
    lr.wk = g.leaf(L.wk, requires_grad); lr.bk = g.leaf(L.bk, requires_grad);
    lr.wv = g.leaf(L.wv, requires_grad); lr.bv = g.leaf(L.bv, requires_grad);
    lr.wo = g.leaf(L.wo, requires_grad); lr.bo = g.leaf(L.bo, requires_grad);
    lr.ln1_g = g.leaf(L.ln1_g, requires_grad); lr.ln1_b = g.leaf(L.ln1_b, requires_grad);
    lr.w1 = g.leaf(L.w1, requires_grad); lr.b1 = g.leaf(L.b1, requires_grad);
    lr.w2 = g.leaf(L.w2, requires_grad); lr.b2 = g.leaf(L.b2, requires_grad);
    lr.ln2_g = g.leaf(L.ln2_g, requires_grad); lr.ln2_b = g.leaf(L.ln2_b, requires_grad);
    r.layers.push_back(lr);
  }
  return r;
}

// Post-softmax attention tensors, per layer then per head, each [S,S].
template <typename T>
struct AttentionCapture {
  std::vector<std::vector<Tensor<T>>> layers;
};

template <typename T>
struct EncodeHooks {
  AttentionCapture<T>* attention = nullptr;
  std::vector<Tensor<T>>* layer_outputs = nullptr;  // embedding output + each layer
};

// Full post-layer-norm transformer stack over one padded sequence; returns
// the [max_len + n_observers, d] final representations.
template <typename T>
typename Graph<T>::NodeRef encoder_forward(Graph<T>& g, const EncoderRefs<T>& refs,
                                           const EncoderConfig& cfg,
                                           const TokenSequence& seq,
                                           const AttentionMask& mask,
                                           EncodeHooks<T> hooks = {}) {
  using Ref = typename Graph<T>::NodeRef;
  if (static_cast<int>(seq.ids.size()) != cfg.max_len)
    throw ContractError("encoder_forward: sequence length != max_len");
  if (mask.side != cfg.seq_side())
    throw ContractError("encoder_forward: mask side mismatch");
  const std::size_t vocab_rows = g.value(refs.token_emb).rows();
  for (int id : seq.ids)
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_rows)
      throw ContractError("encoder_forward: token id outside vocabulary");

  // Input: token embedding + position embedding; observers use the shared
  // [OBS] token row plus their own position rows.
  Ref words = g.add(g.gather_rows(refs.token_emb, seq.ids), refs.word_pos);
  Ref x;
  if (cfg.n_observers > 0) {
    std::vector<int> obs_ids(static_cast<std::size_t>(cfg.n_observers), Vocab::kObs);
    Ref obs = g.add(g.gather_rows(refs.token_emb, obs_ids), refs.obs_pos);
    x = g.concat_rows(words, obs);
  } else {
    x = words;
  }
  if (hooks.layer_outputs) hooks.layer_outputs->push_back(g.value(x));
  if (hooks.attention) hooks.attention->layers.assign(static_cast<std::size_t>(cfg.layers), {});

  const int dh = cfg.head_dim();
  const T inv_sqrt_dh = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  for (int l = 0; l < cfg.layers; ++l) {
    const auto& L = refs.layers[static_cast<std::size_t>(l)];
    Ref q = g.add_row(g.matmul(x, L.wq), L.bq);
    Ref k = g.add_row(g.matmul(x, L.wk), L.bk);
    Ref v = g.add_row(g.matmul(x, L.wv), L.bv);
    std::vector<Ref> head_ctx;
    for (int h = 0; h < cfg.heads; ++h) {
      const std::size_t off = static_cast<std::size_t>(h * dh);
      Ref qh = g.slice_cols(q, off, static_cast<std::size_t>(dh));
      Ref kh = g.slice_cols(k, off, static_cast<std::size_t>(dh));
      Ref vh = g.slice_cols(v, off, static_cast<std::size_t>(dh));
      Ref scores = g.scale(g.matmul_nt(qh, kh), inv_sqrt_dh);
      Ref attn = g.masked_softmax(scores, mask.allow, EmptyRowPolicy::zero_row);
      if (hooks.attention)
        hooks.attention->layers[static_cast<std::size_t>(l)].push_back(g.value(attn));
      head_ctx.push_back(g.matmul(attn, vh));
    }
    Ref ctx = cfg.heads == 1 ? head_ctx[0] : g.concat_cols(head_ctx);
    Ref attn_out = g.add_row(g.matmul(ctx, L.wo), L.bo);
    x = g.layer_norm(g.add(x, attn_out), L.ln1_g, L.ln1_b);
    Ref ffn = g.add_row(
        g.matmul(g.gelu(g.add_row(g.matmul(x, L.w1), L.b1)), L.w2), L.b2);
    x = g.layer_norm(g.add(x, ffn), L.ln2_g, L.ln2_b);
    if (hooks.layer_outputs) hooks.layer_outputs->push_back(g.value(x));
  }
  return x;
}

// Pooled utterance vector as a [1,d] node.
template <typename T>
typename Graph<T>::NodeRef pool(Graph<T>& g, typename Graph<T>::NodeRef reps,
                                const EncoderConfig& cfg) {
  if (cfg.pooling == Pooling::cls) return g.slice_rows(reps, 0, 1);
  if (cfg.n_observers < 1)
    throw ConfigError("pool: observer pooling requires n_observers >= 1");
  return g.row_mean(g.slice_rows(reps, static_cast<std::size_t>(cfg.max_len),
                                 static_cast<std::size_t>(cfg.n_observers)));
}

template <typename T>
typename Graph<T>::NodeRef encode_pooled(Graph<T>& g, const EncoderRefs<T>& refs,
                                         const EncoderConfig& cfg, const TokenSequence& seq,
                                         EncodeHooks<T> hooks = {}) {
  const AttentionMask mask =
      build_attention_mask(seq.eligible, static_cast<std::size_t>(cfg.n_observers));
  return pool(g, encoder_forward(g, refs, cfg, seq, mask, hooks), cfg);
}

}  // namespace obsnet
