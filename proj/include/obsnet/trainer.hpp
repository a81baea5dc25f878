#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "obsnet/dataset.hpp"
#include "obsnet/heads.hpp"
#include "obsnet/model.hpp"
#include "obsnet/rng.hpp"

namespace obsnet {

struct TrainConfig {
  int batch_size = 64;  // example set at train time is 2x this
  int max_epochs = 100;
  int patience = 20;
  std::uint64_t seed = 1;
  Mode mode = Mode::example_driven;
  double lr = 5e-4;
  bool few_shot = false;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double seconds = 0.0;
  std::vector<double> step_losses;  // one entry per optimizer step
};

struct History {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
  double best_val_accuracy = -1.0;
  double test_accuracy = -1.0;

  nlohmann::json to_json() const;
};

struct FitResult {
  Model model;  // parameters of the best validation epoch
  History history;
};

// Train-time example sampling: one non-batch utterance per batch intent, then
// uniform non-batch fillers up to `bank_size`. Falls back (with a warning)
// when an intent has no non-batch utterance left.
struct SampledBank {
  std::vector<std::size_t> indices;  // into the train split
  int fallback_count = 0;
};

SampledBank sample_example_set(const std::vector<std::size_t>& batch,
                               const std::vector<Example>& train,
                               std::size_t bank_size, Rng& rng);

FitResult fit(const IntentDataset& dataset, const EncoderConfig& enc_cfg,
              const TrainConfig& cfg);

// ---- evaluation ----------------------------------------------------------

struct EvalOptions {
  bool cosine = false;
  float temperature = 1.0f;
};

struct EvalResult {
  double accuracy = 0.0;
  std::vector<int> per_intent_correct;
  std::vector<int> per_intent_total;
  std::vector<std::vector<int>> confusion;  // [gold][predicted]
  std::vector<int> predictions;
};

// Pooled encodings of arbitrary texts under the current parameters (no
// gradients; parallel over sequences).
Tensor<float> encode_texts(const Model& model, const std::vector<std::string>& texts);

// Bank with frozen encodings for inference.
ExampleBank build_bank(const Model& model, const std::vector<Example>& entries);

EvalResult evaluate(const Model& model, const std::vector<Example>& split,
                    const ExampleBank* bank, const EvalOptions& opts = {});

// Classifies one utterance against a frozen bank; returns alpha weights.
std::vector<float> classify_weights(const Model& model, const std::string& text,
                                    const ExampleBank& bank, const EvalOptions& opts = {});

}  // namespace obsnet
