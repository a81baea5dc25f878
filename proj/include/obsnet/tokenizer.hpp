#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "obsnet/tensor.hpp"

namespace obsnet {

// Word-level vocabulary with a fixed reserved block.
struct Vocab {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;
  static constexpr int kObs = 4;
  static constexpr int kReserved = 5;

  std::unordered_map<std::string, int> token_to_id;
  std::vector<std::string> id_to_token;  // index == id

  int size() const { return static_cast<int>(id_to_token.size()); }

  int id(const std::string& token) const {
    auto it = token_to_id.find(token);
    return it == token_to_id.end() ? kUnk : it->second;
  }

  const std::string& token(int id) const { return id_to_token.at(static_cast<std::size_t>(id)); }
};

struct TokenSequence {
  std::vector<int> ids;                // [CLS] w_1..w_k [SEP] PAD*
  int length = 0;                      // non-pad positions
  std::vector<std::uint8_t> eligible;  // per position, false at pads
};

// Lowercased word/punctuation tokens of a raw utterance.
std::vector<std::string> split_words(const std::string& text);

// Word types with frequency >= min_count get ids after the reserved block in
// descending-frequency order, ties broken lexicographically.
Vocab build_vocab(const std::vector<std::string>& corpus, int min_count = 1);

TokenSequence encode_text(const Vocab& v, const std::string& text, int max_len);

struct Batch {
  Tensor<float> ids;                        // rows x max_len, values are token ids
  std::vector<std::vector<std::uint8_t>> eligibility;  // per row
};

Batch pad_batch(const std::vector<TokenSequence>& seqs);

}  // namespace obsnet
