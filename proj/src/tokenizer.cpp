#include "obsnet/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "obsnet/errors.hpp"

namespace obsnet {

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      words.push_back(cur);
      cur.clear();
    }
  };
  for (char raw : text) {
    const unsigned char c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      flush();
    } else if (std::isalnum(c) || c == '\'') {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else {
      // punctuation becomes its own token
      flush();
      words.push_back(std::string(1, static_cast<char>(c)));
    }
  }
  flush();
  return words;
}

Vocab build_vocab(const std::vector<std::string>& corpus, int min_count) {
  if (corpus.empty()) throw DataError("build_vocab: empty corpus");
  std::map<std::string, long long> freq;
  for (const auto& utt : corpus)
    for (const auto& w : split_words(utt)) ++freq[w];

  std::vector<std::pair<std::string, long long>> kept;
  for (const auto& [w, c] : freq)
    if (c >= min_count) kept.emplace_back(w, c);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocab v;
  v.id_to_token = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[OBS]"};
  for (int i = 0; i < Vocab::kReserved; ++i) v.token_to_id[v.id_to_token[i]] = i;
  for (const auto& [w, c] : kept) {
    (void)c;
    v.token_to_id[w] = v.size();
    v.id_to_token.push_back(w);
  }
  return v;
}

TokenSequence encode_text(const Vocab& v, const std::string& text, int max_len) {
  if (max_len < 3) throw ContractError("encode_text: max_len must be >= 3");
  auto words = split_words(text);
  const std::size_t keep = static_cast<std::size_t>(max_len - 2);
  if (words.size() > keep) words.resize(keep);

  TokenSequence seq;
  seq.ids.reserve(static_cast<std::size_t>(max_len));
  seq.ids.push_back(Vocab::kCls);
  for (const auto& w : words) seq.ids.push_back(v.id(w));
  seq.ids.push_back(Vocab::kSep);
  seq.length = static_cast<int>(seq.ids.size());
  while (static_cast<int>(seq.ids.size()) < max_len) seq.ids.push_back(Vocab::kPad);
  seq.eligible.assign(static_cast<std::size_t>(max_len), 0);
  for (int i = 0; i < seq.length; ++i) seq.eligible[static_cast<std::size_t>(i)] = 1;
  return seq;
}

Batch pad_batch(const std::vector<TokenSequence>& seqs) {
  Batch b;
  if (seqs.empty()) {
    b.ids = Tensor<float>::zeros({0, 0});
    return b;
  }
  const std::size_t max_len = seqs[0].ids.size();
  for (const auto& s : seqs)
    if (s.ids.size() != max_len)
      throw ContractError("pad_batch: sequences have mixed max_len");
  b.ids = Tensor<float>::zeros({seqs.size(), max_len});
  for (std::size_t r = 0; r < seqs.size(); ++r) {
    for (std::size_t j = 0; j < max_len; ++j)
      b.ids.data[r * max_len + j] = static_cast<float>(seqs[r].ids[j]);
    b.eligibility.push_back(seqs[r].eligible);
  }
  return b;
}

}  // namespace obsnet
