#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "obsnet/dataset.hpp"
#include "obsnet/model.hpp"
#include "obsnet/trainer.hpp"

namespace obsnet {

struct ProtocolReport {
  std::string protocol;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json runs = nlohmann::json::array();
  nlohmann::json aggregate = nlohmann::json::object();

  nlohmann::json to_json() const;
  std::string to_table() const;
  void write(const std::string& path) const;
};

nlohmann::json aggregate_json(const std::vector<double>& values);

// ---- unseen-intent transfer ---------------------------------------------

struct UnseenIntentOptions {
  int runs = 30;
  int k_min = 4;
  int k_max = 10;
  std::uint64_t seed = 0;
  int few_shot_per_intent = 10;
  bool add_back = true;  // false: harness self-test, accuracy must be 0
};

ProtocolReport unseen_intent_protocol(const IntentDataset& dataset,
                                      const EncoderConfig& enc_cfg,
                                      const TrainConfig& train_cfg,
                                      const UnseenIntentOptions& opts);

// ---- cross-dataset transfer ---------------------------------------------

// Bank = target train split; no parameter updates. The target's texts pass
// through the source vocabulary with UNK fallback.
EvalResult cross_dataset_transfer(const Model& model, const IntentDataset& target);

// ---- word-content probing ------------------------------------------------

double micro_f1_from_counts(long long tp, long long fp, long long fn);

struct ProbeResult {
  double micro_f1 = 0.0;
  long long tp = 0, fp = 0, fn = 0;
};

// Linear sigmoid probe over frozen pooled representations; binary
// cross-entropy on the train split, micro-F1 at threshold 0.5 on test.
ProbeResult probe_word_content(const Model& model, const IntentDataset& dataset,
                               int top_k = 1000, std::uint64_t seed = 0,
                               std::optional<Pooling> pooling_override = std::nullopt);

// ---- ablations -----------------------------------------------------------

ProtocolReport ablate_observers(const IntentDataset& dataset, const EncoderConfig& enc_cfg,
                                const TrainConfig& train_cfg,
                                const std::vector<int>& counts, std::uint64_t seed);

ProtocolReport ablate_example_fraction(const Model& model, const IntentDataset& dataset,
                                       const std::vector<double>& fractions,
                                       std::uint64_t seed);

// Stratified bank subsample used by the fraction ablation.
std::vector<Example> subsample_bank_entries(const std::vector<Example>& entries,
                                            double fraction, int n_intents, Rng& rng);

}  // namespace obsnet
