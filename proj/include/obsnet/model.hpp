#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "obsnet/encoder.hpp"
#include "obsnet/tokenizer.hpp"

namespace obsnet {

enum class Mode { linear, example_driven };

inline std::string to_string(Mode m) { return m == Mode::linear ? "linear" : "example"; }
inline std::string to_string(Pooling p) { return p == Pooling::cls ? "cls" : "observers"; }

Mode mode_from_string(const std::string& s);
Pooling pooling_from_string(const std::string& s);

// A trained (or freshly initialized) classifier: encoder, vocabulary, intent
// inventory, and the linear head when mode == linear.
struct Model {
  EncoderConfig config;
  Mode mode = Mode::example_driven;
  Vocab vocab;
  std::vector<std::string> intent_labels;
  EncoderParams<float> encoder;
  std::optional<LinearHead<float>> head;

  template <typename Fn>
  void for_each_tensor(Fn fn) {
    encoder.for_each(fn);
    if (head) {
      fn(std::string("head.weight"), head->weight);
      fn(std::string("head.bias"), head->bias);
    }
  }

  template <typename Fn>
  void for_each_tensor(Fn fn) const {
    const_cast<Model*>(this)->for_each_tensor(
        [&](const std::string& n, Tensor<float>& t) {
          fn(n, static_cast<const Tensor<float>&>(t));
        });
  }
};

// FNV-1a over all parameter bytes, for no-update audits.
std::uint64_t model_param_hash(const Model& m);

}  // namespace obsnet
