#include "obsnet/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "obsnet/adam.hpp"
#include "obsnet/checkpoint.hpp"
#include "obsnet/errors.hpp"
#include "obsnet/util.hpp"

namespace obsnet {

using nlohmann::json;

json ProtocolReport::to_json() const {
  return json{{"protocol", protocol},
              {"config", config},
              {"runs", runs},
              {"aggregate", aggregate}};
}

std::string ProtocolReport::to_table() const {
  std::ostringstream out;
  out << "protocol: " << protocol << "\n";
  if (!runs.empty() && runs[0].is_object()) {
    std::vector<std::string> keys;
    for (auto it = runs[0].begin(); it != runs[0].end(); ++it) keys.push_back(it.key());
    std::vector<std::size_t> widths;
    for (const auto& k : keys) widths.push_back(k.size());
    std::vector<std::vector<std::string>> cells;
    for (const auto& run : runs) {
      std::vector<std::string> row;
      for (std::size_t c = 0; c < keys.size(); ++c) {
        const auto& v = run.at(keys[c]);
        std::string s = v.is_string() ? v.get<std::string>() : v.dump();
        widths[c] = std::max(widths[c], s.size());
        row.push_back(std::move(s));
      }
      cells.push_back(std::move(row));
    }
    auto emit_row = [&](const std::vector<std::string>& row) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        out << row[c];
        for (std::size_t p = row[c].size(); p < widths[c] + 2; ++p) out << ' ';
      }
      out << "\n";
    };
    emit_row(keys);
    for (const auto& row : cells) emit_row(row);
  }
  for (auto it = aggregate.begin(); it != aggregate.end(); ++it)
    out << it.key() << " = " << it.value().dump() << "\n";
  return out.str();
}

void ProtocolReport::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write report: " + path);
  out << to_json().dump(2) << "\n";
}

json aggregate_json(const std::vector<double>& values) {
  const Aggregate a = aggregate_stats(values);
  return json{{"mean", a.mean}, {"median", a.median}, {"std", a.stddev}};
}

// ---- unseen-intent transfer ---------------------------------------------

ProtocolReport unseen_intent_protocol(const IntentDataset& dataset,
                                      const EncoderConfig& enc_cfg,
                                      const TrainConfig& train_cfg,
                                      const UnseenIntentOptions& opts) {
  if (train_cfg.mode != Mode::example_driven)
    throw ConfigError("unseen-intent protocol requires example mode");
  if (opts.k_max >= dataset.n_intents())
    throw ConfigError("unseen-intent protocol: k_max must be < number of intents");
  if (opts.k_min < 1 || opts.k_min > opts.k_max)
    throw ConfigError("unseen-intent protocol: invalid k range");

  ProtocolReport report;
  report.protocol = "unseen_intent";
  report.config = {{"runs", opts.runs},   {"k_min", opts.k_min},
                   {"k_max", opts.k_max}, {"seed", opts.seed},
                   {"few_shot_per_intent", opts.few_shot_per_intent},
                   {"add_back", opts.add_back}};

  std::vector<double> accuracies;
  Rng master(opts.seed);
  for (int run = 0; run < opts.runs; ++run) {
    Rng rng = master.derive(static_cast<std::uint64_t>(run));
    const int k =
        static_cast<int>(rng.uniform_int(opts.k_min, opts.k_max));
    std::vector<int> removed;
    {
      auto picks = rng.sample_without_replacement(
          static_cast<std::size_t>(dataset.n_intents()), static_cast<std::size_t>(k));
      for (auto p : picks) removed.push_back(static_cast<int>(p));
      std::sort(removed.begin(), removed.end());
    }
    std::set<int> removed_set(removed.begin(), removed.end());

    IntentDataset reduced = dataset;
    auto strip = [&](std::vector<Example>& split) {
      std::vector<Example> kept;
      for (const auto& e : split)
        if (!removed_set.count(e.intent)) kept.push_back(e);
      split = std::move(kept);
    };
    strip(reduced.train);
    strip(reduced.val);

    const std::uint64_t run_seed = rng.next_u64();
    reduced = few_shot_dataset(reduced, run_seed, opts.few_shot_per_intent);

    TrainConfig cfg = train_cfg;
    cfg.seed = run_seed;
    cfg.few_shot = true;
    FitResult fitted = fit(reduced, enc_cfg, cfg);

    // Bank: the few-shot training data, extended by few-shot examples of the
    // removed intents when adding them back.
    std::vector<Example> bank_entries = reduced.train;
    if (opts.add_back) {
      IntentDataset removed_only = dataset;
      std::vector<Example> kept;
      for (const auto& e : dataset.train)
        if (removed_set.count(e.intent)) kept.push_back(e);
      removed_only.train = std::move(kept);
      const auto removed_view =
          few_shot_subsample(removed_only, run_seed, opts.few_shot_per_intent);
      for (const auto& e : removed_view.train) bank_entries.push_back(e);
    }
    const ExampleBank bank = build_bank(fitted.model, bank_entries);

    std::vector<Example> unseen_test;
    for (const auto& e : dataset.test)
      if (removed_set.count(e.intent)) unseen_test.push_back(e);
    if (unseen_test.empty())
      throw DataError("unseen-intent protocol: no test utterances for removed intents");
    const double acc = evaluate(fitted.model, unseen_test, &bank).accuracy;
    accuracies.push_back(acc);

    report.runs.push_back({{"run", run},
                           {"seed", run_seed},
                           {"removed_intents", removed},
                           {"accuracy", acc}});
  }
  report.aggregate = aggregate_json(accuracies);
  return report;
}

// ---- cross-dataset transfer ---------------------------------------------

EvalResult cross_dataset_transfer(const Model& model, const IntentDataset& target) {
  if (model.mode != Mode::example_driven)
    throw ProtocolError("cross-dataset transfer requires an example-mode checkpoint");
  Model transfer = model;
  transfer.intent_labels = target.intent_labels;  // target label space via the bank
  const ExampleBank bank = build_bank(transfer, target.train);
  return evaluate(transfer, target.test, &bank);
}

// ---- word-content probing ------------------------------------------------

double micro_f1_from_counts(long long tp, long long fp, long long fn) {
  const long long denom = 2 * tp + fp + fn;
  if (denom == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

ProbeResult probe_word_content(const Model& model, const IntentDataset& dataset,
                               int top_k, std::uint64_t seed,
                               std::optional<Pooling> pooling_override) {
  Model probe_model = model;
  if (pooling_override) {
    probe_model.config.pooling = *pooling_override;
    probe_model.config.validate();
  }

  const WordContentTargets targets = word_content_targets(dataset, top_k);
  const std::size_t k = targets.words.size();
  if (k == 0) throw DataError("probe: no words in train split");
  const std::size_t d = static_cast<std::size_t>(probe_model.config.hidden_dim);

  std::vector<std::string> train_texts, test_texts;
  for (const auto& e : dataset.train) train_texts.push_back(e.text);
  for (const auto& e : dataset.test) test_texts.push_back(e.text);
  const Tensor<float> train_feat = encode_texts(probe_model, train_texts);
  const Tensor<float> test_feat = encode_texts(probe_model, test_texts);

  // Linear probe trained with sigmoid binary cross-entropy; the encoder
  // stays frozen (features are precomputed above).
  Tensor<float> w = Tensor<float>::zeros({k, d});
  Tensor<float> b = Tensor<float>::zeros({k});
  Rng rng(seed);
  for (auto& x : w.data) x = static_cast<float>(rng.trunc_normal(0.02));
  AdamState<float> adam{AdamHyper{2e-2, 0.9, 0.999, 1e-8}};

  const int epochs = 60;
  const std::size_t batch = 32;
  const std::size_t n_train = dataset.train.size();
  std::vector<std::uint8_t> y(k);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::vector<std::size_t> order(n_train);
    for (std::size_t i = 0; i < n_train; ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t start = 0; start < n_train; start += batch) {
      const std::size_t end = std::min(n_train, start + batch);
      Tensor<float> gw = Tensor<float>::zeros({k, d});
      Tensor<float> gb = Tensor<float>::zeros({k});
      for (std::size_t s = start; s < end; ++s) {
        const std::size_t i = order[s];
        const float* u = train_feat.row_ptr(i);
        std::fill(y.begin(), y.end(), 0);
        for (int wi : targets.train_targets[i]) y[static_cast<std::size_t>(wi)] = 1;
        for (std::size_t c = 0; c < k; ++c) {
          const float* wc = w.row_ptr(c);
          float z = b.data[c];
          for (std::size_t j = 0; j < d; ++j) z += wc[j] * u[j];
          const float p = 1.0f / (1.0f + std::exp(-z));
          const float dz = (p - static_cast<float>(y[c])) /
                           static_cast<float>(end - start);
          float* gwc = gw.row_ptr(c);
          for (std::size_t j = 0; j < d; ++j) gwc[j] += dz * u[j];
          gb.data[c] += dz;
        }
      }
      std::vector<Tensor<float>*> params = {&w, &b};
      std::vector<const Tensor<float>*> grads = {&gw, &gb};
      std::vector<std::string> names = {"probe.w", "probe.b"};
      adam.step(params, grads, names);
    }
  }

  ProbeResult res;
  for (std::size_t i = 0; i < dataset.test.size(); ++i) {
    const float* u = test_feat.row_ptr(i);
    std::fill(y.begin(), y.end(), 0);
    for (int wi : targets.test_targets[i]) y[static_cast<std::size_t>(wi)] = 1;
    for (std::size_t c = 0; c < k; ++c) {
      const float* wc = w.row_ptr(c);
      float z = b.data[c];
      for (std::size_t j = 0; j < d; ++j) z += wc[j] * u[j];
      const bool pred = z > 0.0f;  // sigmoid threshold 0.5
      if (pred && y[c]) ++res.tp;
      else if (pred && !y[c]) ++res.fp;
      else if (!pred && y[c]) ++res.fn;
    }
  }
  res.micro_f1 = micro_f1_from_counts(res.tp, res.fp, res.fn);
  return res;
}

// ---- observer-count ablation ---------------------------------------------

ProtocolReport ablate_observers(const IntentDataset& dataset, const EncoderConfig& enc_cfg,
                                const TrainConfig& train_cfg,
                                const std::vector<int>& counts, std::uint64_t seed) {
  if (train_cfg.mode != Mode::example_driven)
    throw ConfigError("observer ablation requires example mode");
  ProtocolReport report;
  report.protocol = "ablate_observers";
  report.config = {{"counts", counts}, {"seed", seed}};
  std::vector<double> accuracies;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    EncoderConfig cfg = enc_cfg;
    cfg.n_observers = counts[i];
    cfg.validate();
    TrainConfig tc = train_cfg;
    tc.seed = seed;  // shared seed schedule across counts
    FitResult fitted = fit(dataset, cfg, tc);
    const ExampleBank bank = build_bank(fitted.model, dataset.train);
    const double acc = evaluate(fitted.model, dataset.test, &bank).accuracy;
    accuracies.push_back(acc);
    report.runs.push_back({{"observers", counts[i]}, {"test_accuracy", acc}});
  }
  report.aggregate = aggregate_json(accuracies);
  return report;
}

// ---- example-fraction ablation -------------------------------------------

std::vector<Example> subsample_bank_entries(const std::vector<Example>& entries,
                                            double fraction, int n_intents, Rng& rng) {
  if (fraction >= 1.0) return entries;
  const std::size_t n = entries.size();
  const std::size_t target =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * n)));
  std::map<int, std::vector<std::size_t>> by_intent;
  for (std::size_t i = 0; i < n; ++i) by_intent[entries[i].intent].push_back(i);

  std::vector<std::size_t> chosen;
  if (target >= by_intent.size()) {
    // stratified: every present intent keeps at least one example
    for (auto& [intent, idx] : by_intent) {
      Rng sub = rng.derive(static_cast<std::uint64_t>(intent));
      sub.shuffle(idx);
      const std::size_t keep = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::llround(fraction * idx.size())));
      for (std::size_t i = 0; i < keep && i < idx.size(); ++i) chosen.push_back(idx[i]);
    }
  } else {
    chosen = rng.sample_without_replacement(n, target);
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<Example> out;
  for (auto i : chosen) out.push_back(entries[i]);
  return out;
}

ProtocolReport ablate_example_fraction(const Model& model, const IntentDataset& dataset,
                                       const std::vector<double>& fractions,
                                       std::uint64_t seed) {
  if (model.mode != Mode::example_driven)
    throw ProtocolError("example-fraction ablation requires an example-mode checkpoint");
  ProtocolReport report;
  report.protocol = "ablate_example_fraction";
  report.config = {{"fractions", fractions}, {"seed", seed}};
  const std::uint64_t hash_before = model_param_hash(model);
  std::vector<double> accuracies;
  Rng master(seed);
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    Rng rng = master.derive(i);
    const auto entries =
        subsample_bank_entries(dataset.train, fractions[i], dataset.n_intents(), rng);
    const ExampleBank bank = build_bank(model, entries);
    const double acc = evaluate(model, dataset.test, &bank).accuracy;
    accuracies.push_back(acc);
    report.runs.push_back({{"fraction", fractions[i]},
                           {"bank_size", entries.size()},
                           {"test_accuracy", acc}});
  }
  if (model_param_hash(model) != hash_before)
    throw ProtocolError("example-fraction ablation mutated parameters");
  report.config["param_hash"] = hash_before;
  report.aggregate = aggregate_json(accuracies);
  return report;
}

}  // namespace obsnet
