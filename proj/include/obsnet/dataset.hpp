#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace obsnet {

struct Example {
  std::string text;
  int intent = -1;
};

struct IntentDataset {
  std::string name;
  std::vector<std::string> intent_labels;           // id -> label
  std::unordered_map<std::string, int> intent_ids;  // label -> id
  std::vector<Example> train, val, test;

  int n_intents() const { return static_cast<int>(intent_labels.size()); }

  int intern_intent(const std::string& label) {
    auto it = intent_ids.find(label);
    if (it != intent_ids.end()) return it->second;
    const int id = n_intents();
    intent_ids[label] = id;
    intent_labels.push_back(label);
    return id;
  }

  std::vector<std::string> train_texts() const {
    std::vector<std::string> out;
    out.reserve(train.size());
    for (const auto& e : train) out.push_back(e.text);
    return out;
  }
};

// Records parsed from a single file, labels still as strings.
struct RawRecord {
  std::string text;
  std::string intent;
};

// CSV with header exactly `text,category`, standard quoting rules.
std::vector<RawRecord> load_csv(const std::string& path);

// One JSON object per line with string fields "text" and "intent".
std::vector<RawRecord> load_jsonl(const std::string& path);

void save_csv(const std::string& path, const std::vector<RawRecord>& records);
void save_jsonl(const std::string& path, const std::vector<RawRecord>& records);

// Loads a dataset directory: train.{csv|jsonl} required, val/test optional.
// When val is absent, `val_fraction` of train is carved out (seeded).
IntentDataset load_dataset_dir(const std::string& dir, double val_fraction = 0.1,
                               std::uint64_t seed = 0);

void save_dataset_dir(const std::string& dir, const IntentDataset& ds);

// Deterministic per-intent sample of up to `per_intent` train utterances.
struct FewShotView {
  std::vector<Example> train;
  std::uint64_t seed = 0;
};

FewShotView few_shot_subsample(const IntentDataset& ds, std::uint64_t seed,
                               int per_intent = 10);

// Dataset identical to `ds` except train replaced by the few-shot view.
IntentDataset few_shot_dataset(const IntentDataset& ds, std::uint64_t seed,
                               int per_intent = 10);

// Templated synthetic corpus; a fixed catalog of 16 intents in two disjoint
// 8-intent domains. `first_intent` selects the starting catalog slot.
IntentDataset synth_generate(int n_intents, int per_intent, std::uint64_t seed,
                             int first_intent = 0);

// Per-utterance binary target sets over the top_k most frequent train words.
struct WordContentTargets {
  std::vector<std::string> words;              // index -> word, frequency order
  std::vector<std::vector<int>> train_targets; // word indices present, ascending
  std::vector<std::vector<int>> test_targets;
};

WordContentTargets word_content_targets(const IntentDataset& ds, int top_k = 1000);

}  // namespace obsnet
