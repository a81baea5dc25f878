#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "obsnet/errors.hpp"
#include "obsnet/graph.hpp"
#include "obsnet/tensor.hpp"

namespace obsnet {

// Labeled utterances reasoned over at classification time. `encodings`, when
// frozen, caches one pooled vector per entry under the parameters that
// produced it; any parameter update invalidates the cache.
struct ExampleBank {
  struct Entry {
    std::string text;
    int intent = -1;
  };
  std::vector<Entry> entries;
  Tensor<float> encodings;  // n x d when frozen
  bool frozen = false;

  std::size_t size() const { return entries.size(); }

  std::vector<int> labels() const {
    std::vector<int> y;
    y.reserve(entries.size());
    for (const auto& e : entries) y.push_back(e.intent);
    return y;
  }
};

// score_i = dot(u, X_i), optionally cosine / temperature-scaled (defaults
// keep the plain dot product).
template <typename T>
std::vector<T> example_logits(const std::vector<T>& u, const Tensor<T>& bank_enc,
                              bool cosine = false, T temperature = T(1)) {
  const std::size_t n = bank_enc.rows(), d = bank_enc.cols();
  if (n == 0) throw ContractError("example_logits: empty bank");
  if (u.size() != d) throw DimensionError("example_logits: dimension mismatch");
  std::vector<T> scores(n, T(0));
  T unorm = T(0);
  if (cosine) {
    for (auto x : u) unorm += x * x;
    unorm = std::sqrt(unorm);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const T* xi = bank_enc.row_ptr(i);
    T acc = T(0);
    for (std::size_t j = 0; j < d; ++j) acc += u[j] * xi[j];
    if (cosine) {
      T xn = T(0);
      for (std::size_t j = 0; j < d; ++j) xn += xi[j] * xi[j];
      const T denom = std::max(unorm * std::sqrt(xn), T(1e-12));
      acc /= denom;
    }
    scores[i] = acc / temperature;
  }
  return scores;
}

// Softmax over raw similarity scores (Eq. 3 weights).
template <typename T>
std::vector<T> similarity_weights(const std::vector<T>& scores) {
  if (scores.empty()) throw ContractError("similarity_weights: empty scores");
  T mx = scores[0];
  for (auto s : scores) mx = std::max(mx, s);
  double sum = 0.0;
  std::vector<T> alpha(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double e = std::exp(static_cast<double>(scores[i] - mx));
    alpha[i] = static_cast<T>(e);
    sum += e;
  }
  for (auto& a : alpha) a = static_cast<T>(static_cast<double>(a) / sum);
  return alpha;
}

// Grouped sums of alpha by intent; intents absent from the bank get exactly 0.
template <typename T>
std::vector<T> class_probs(const std::vector<T>& alpha, const std::vector<int>& labels,
                           int n_classes) {
  if (alpha.size() != labels.size())
    throw ContractError("class_probs: alpha/labels size mismatch");
  std::vector<T> p(static_cast<std::size_t>(n_classes), T(0));
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= n_classes) throw DataError("class_probs: label outside inventory");
    p[static_cast<std::size_t>(y)] += alpha[i];
  }
  return p;
}

struct Neighbor {
  std::size_t bank_index = 0;
  int intent = -1;
  float weight = 0.0f;
};

// Top-k bank entries by alpha, descending; ties broken by lowest bank index.
template <typename T>
std::vector<Neighbor> nearest_examples(const std::vector<T>& alpha,
                                       const std::vector<int>& labels, std::size_t k) {
  if (k > alpha.size()) throw ContractError("nearest_examples: k exceeds bank size");
  std::vector<std::size_t> order(alpha.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return alpha[a] > alpha[b];
  });
  std::vector<Neighbor> out;
  for (std::size_t i = 0; i < k; ++i)
    out.push_back({order[i], labels[order[i]], static_cast<float>(alpha[order[i]])});
  return out;
}

// ---- training-graph losses ----------------------------------------------

// Negative log of the grouped softmax mass on the gold class, computed in
// log space from one row of a scores matrix. Gradients flow through both the
// query encoding and every bank encoding feeding `scores_row`.
template <typename T>
typename Graph<T>::NodeRef example_loss(Graph<T>& g, typename Graph<T>::NodeRef scores_row,
                                        const std::vector<int>& bank_labels, int gold) {
  std::vector<std::size_t> gold_idx, all_idx;
  for (std::size_t i = 0; i < bank_labels.size(); ++i) {
    all_idx.push_back(i);
    if (bank_labels[i] == gold) gold_idx.push_back(i);
  }
  if (gold_idx.empty())
    throw ProtocolError("example_loss: gold intent has no example in the bank");
  return g.sub(g.logsumexp_subset(scores_row, all_idx),
               g.logsumexp_subset(scores_row, gold_idx));
}

// Cross-entropy of a softmax over one logits row.
template <typename T>
typename Graph<T>::NodeRef cross_entropy_row(Graph<T>& g, typename Graph<T>::NodeRef logits_row,
                                             std::size_t n_classes, int gold) {
  if (gold < 0 || static_cast<std::size_t>(gold) >= n_classes)
    throw DataError("cross_entropy_row: gold outside inventory");
  std::vector<std::size_t> all_idx(n_classes);
  for (std::size_t i = 0; i < n_classes; ++i) all_idx[i] = i;
  return g.sub(g.logsumexp_subset(logits_row, all_idx),
               g.logsumexp_subset(logits_row, {static_cast<std::size_t>(gold)}));
}

// Softmax distribution of a linear head over a pooled vector (inference path).
template <typename T>
std::vector<T> linear_head_forward(const std::vector<T>& u, const Tensor<T>& weight,
                                   const Tensor<T>& bias) {
  const std::size_t c = weight.rows(), d = weight.cols();
  if (u.size() != d || bias.numel() != c)
    throw DimensionError("linear_head_forward: shape mismatch");
  std::vector<T> logits(c, T(0));
  for (std::size_t i = 0; i < c; ++i) {
    const T* wi = weight.row_ptr(i);
    T acc = bias.data[i];
    for (std::size_t j = 0; j < d; ++j) acc += u[j] * wi[j];
    logits[i] = acc;
  }
  return similarity_weights(logits);
}

}  // namespace obsnet
