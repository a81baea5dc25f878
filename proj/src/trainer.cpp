#include "obsnet/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <iostream>
#include <limits>
#include <map>
#include <set>

#include "obsnet/adam.hpp"
#include "obsnet/errors.hpp"
#include "obsnet/graph.hpp"
#include "obsnet/util.hpp"

namespace obsnet {

using Ref = Graph<float>::NodeRef;
using nlohmann::json;

json History::to_json() const {
  json epochs_j = json::array();
  for (const auto& e : epochs)
    epochs_j.push_back({{"epoch", e.epoch},
                        {"train_loss", e.train_loss},
                        {"val_accuracy", e.val_accuracy},
                        {"seconds", e.seconds},
                        {"step_losses", e.step_losses}});
  return json{{"epochs", epochs_j},
              {"final",
               {{"best_epoch", best_epoch},
                {"best_val_accuracy", best_val_accuracy},
                {"test_accuracy", test_accuracy}}}};
}

SampledBank sample_example_set(const std::vector<std::size_t>& batch,
                               const std::vector<Example>& train,
                               std::size_t bank_size, Rng& rng) {
  SampledBank bank;
  std::set<std::size_t> in_batch(batch.begin(), batch.end());
  std::set<std::size_t> taken;

  // (i) one different utterance per intent present in the batch
  std::set<int> batch_intents;
  for (auto i : batch) batch_intents.insert(train[i].intent);
  for (int intent : batch_intents) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < train.size(); ++i)
      if (train[i].intent == intent && !in_batch.count(i)) candidates.push_back(i);
    if (candidates.empty()) {
      ++bank.fallback_count;
      std::cerr << "warning: example sampling: intent " << intent
                << " has no non-batch utterance; using a different-class filler\n";
      continue;
    }
    const std::size_t pick = candidates[rng.index(candidates.size())];
    bank.indices.push_back(pick);
    taken.insert(pick);
  }

  // (ii) uniform fillers without replacement from train minus batch
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < train.size(); ++i)
    if (!in_batch.count(i) && !taken.count(i)) pool.push_back(i);
  rng.shuffle(pool);
  for (auto i : pool) {
    if (bank.indices.size() >= bank_size) break;
    bank.indices.push_back(i);
  }
  if (bank.indices.size() < bank_size && bank.fallback_count == 0 &&
      bank.indices.size() < train.size() - batch.size() + batch_intents.size())
    std::cerr << "warning: example sampling: train split too small for a bank of "
              << bank_size << " (got " << bank.indices.size() << ")\n";
  return bank;
}

namespace {

std::vector<TokenSequence> tokenize_split(const Vocab& v, const std::vector<Example>& split,
                                          int max_len) {
  std::vector<TokenSequence> seqs;
  seqs.reserve(split.size());
  for (const auto& e : split) seqs.push_back(encode_text(v, e.text, max_len));
  return seqs;
}

struct HeadRefs {
  Ref weight, bias;
};

// One optimizer step over a batch; returns the mean loss.
double train_step(Model& model, AdamState<float>& adam,
                  const std::vector<Example>& train,
                  const std::vector<TokenSequence>& train_seqs,
                  const std::vector<std::size_t>& batch, const TrainConfig& cfg, Rng& rng) {
  Graph<float> g;
  EncoderRefs<float> refs = make_encoder_refs(g, model.encoder, true);
  HeadRefs head_refs{};
  if (cfg.mode == Mode::linear) {
    head_refs.weight = g.leaf(model.head->weight, true);
    head_refs.bias = g.leaf(model.head->bias, true);
  }

  std::vector<Ref> pooled;
  pooled.reserve(batch.size());
  for (auto i : batch)
    pooled.push_back(encode_pooled(g, refs, model.config, train_seqs[i]));
  Ref u_stack = g.stack_rows(pooled);

  std::vector<Ref> losses;
  if (cfg.mode == Mode::example_driven) {
    SampledBank bank = sample_example_set(
        batch, train, static_cast<std::size_t>(2 * cfg.batch_size), rng);
    if (bank.indices.empty())
      throw ProtocolError("train_step: example bank is empty; train split too small");
    std::vector<int> bank_labels;
    std::vector<Ref> bank_pooled;
    for (auto i : bank.indices) {
      bank_labels.push_back(train[i].intent);
      bank_pooled.push_back(encode_pooled(g, refs, model.config, train_seqs[i]));
    }
    Ref x_stack = g.stack_rows(bank_pooled);
    Ref scores = g.matmul_nt(u_stack, x_stack);
    std::set<int> bank_intents(bank_labels.begin(), bank_labels.end());
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const int gold = train[batch[b]].intent;
      if (!bank_intents.count(gold)) {
        // only reachable through the single-utterance fallback
        std::cerr << "warning: skipping loss term: gold intent " << gold
                  << " absent from sampled bank\n";
        continue;
      }
      losses.push_back(example_loss(g, g.slice_rows(scores, b, 1), bank_labels, gold));
    }
  } else {
    Ref logits = g.add_row(g.matmul_nt(u_stack, head_refs.weight), head_refs.bias);
    const std::size_t n_classes = g.value(head_refs.bias).numel();
    for (std::size_t b = 0; b < batch.size(); ++b)
      losses.push_back(cross_entropy_row(g, g.slice_rows(logits, b, 1), n_classes,
                                         train[batch[b]].intent));
  }
  if (losses.empty()) return 0.0;
  Ref total = losses[0];
  for (std::size_t i = 1; i < losses.size(); ++i) total = g.add(total, losses[i]);
  Ref loss = g.scale(total, 1.0f / static_cast<float>(losses.size()));
  g.backward(loss);

  std::vector<Tensor<float>*> params;
  std::vector<Tensor<float>> grads;
  std::vector<std::string> names;
  model.encoder.for_each([&](const std::string& name, Tensor<float>& t) {
    params.push_back(&t);
    names.push_back(name);
  });
  auto take_grad = [&](Ref r) { grads.push_back(g.grad(r)); };
  take_grad(refs.token_emb);
  take_grad(refs.word_pos);
  take_grad(refs.obs_pos);
  for (const auto& L : refs.layers) {
    take_grad(L.wq); take_grad(L.bq); take_grad(L.wk); take_grad(L.bk);
    take_grad(L.wv); take_grad(L.bv); take_grad(L.wo); take_grad(L.bo);
    take_grad(L.ln1_g); take_grad(L.ln1_b);
    take_grad(L.w1); take_grad(L.b1); take_grad(L.w2); take_grad(L.b2);
    take_grad(L.ln2_g); take_grad(L.ln2_b);
  }
  if (cfg.mode == Mode::linear) {
    params.push_back(&model.head->weight);
    names.push_back("head.weight");
    take_grad(head_refs.weight);
    params.push_back(&model.head->bias);
    names.push_back("head.bias");
    take_grad(head_refs.bias);
  }
  std::vector<const Tensor<float>*> grad_ptrs;
  for (const auto& t : grads) grad_ptrs.push_back(&t);
  adam.step(params, grad_ptrs, names);
  return static_cast<double>(g.value(loss).data[0]);
}

}  // namespace

Tensor<float> encode_texts(const Model& model, const std::vector<std::string>& texts) {
  const std::size_t d = static_cast<std::size_t>(model.config.hidden_dim);
  Tensor<float> out = Tensor<float>::zeros({texts.size(), d});
  // Chunked so each worker amortizes its parameter leaves over many
  // sequences; result layout is independent of the worker count.
  constexpr std::size_t kChunk = 16;
  const std::size_t n_chunks = (texts.size() + kChunk - 1) / kChunk;
  parallel_for(n_chunks, [&](std::size_t c) {
    const std::size_t begin = c * kChunk;
    const std::size_t end = std::min(texts.size(), begin + kChunk);
    Graph<float> g;
    EncoderRefs<float> refs = make_encoder_refs(g, model.encoder, false);
    for (std::size_t i = begin; i < end; ++i) {
      const TokenSequence seq = encode_text(model.vocab, texts[i], model.config.max_len);
      Ref pooled = encode_pooled(g, refs, model.config, seq);
      const Tensor<float>& v = g.value(pooled);
      for (std::size_t j = 0; j < d; ++j) out.data[i * d + j] = v.data[j];
    }
  });
  return out;
}

ExampleBank build_bank(const Model& model, const std::vector<Example>& entries) {
  ExampleBank bank;
  std::vector<std::string> texts;
  for (const auto& e : entries) {
    bank.entries.push_back({e.text, e.intent});
    texts.push_back(e.text);
  }
  bank.encodings = encode_texts(model, texts);
  bank.frozen = true;
  return bank;
}

EvalResult evaluate(const Model& model, const std::vector<Example>& split,
                    const ExampleBank* bank, const EvalOptions& opts) {
  if (split.empty()) throw DataError("evaluate: empty split");
  const int n_classes = static_cast<int>(model.intent_labels.size());
  if (model.mode == Mode::example_driven) {
    if (bank == nullptr || !bank->frozen)
      throw ContractError("evaluate: example mode requires a frozen bank");
    if (bank->size() == 0) throw ContractError("evaluate: empty bank");
  }

  std::vector<std::string> texts;
  for (const auto& e : split) texts.push_back(e.text);
  const Tensor<float> encodings = encode_texts(model, texts);
  const std::size_t d = static_cast<std::size_t>(model.config.hidden_dim);
  const std::vector<int> bank_labels = bank ? bank->labels() : std::vector<int>{};

  EvalResult res;
  res.per_intent_correct.assign(static_cast<std::size_t>(n_classes), 0);
  res.per_intent_total.assign(static_cast<std::size_t>(n_classes), 0);
  res.confusion.assign(static_cast<std::size_t>(n_classes),
                       std::vector<int>(static_cast<std::size_t>(n_classes), 0));
  int correct = 0;
  for (std::size_t i = 0; i < split.size(); ++i) {
    std::vector<float> u(encodings.row_ptr(i), encodings.row_ptr(i) + d);
    std::vector<float> probs;
    if (model.mode == Mode::example_driven) {
      const auto scores = example_logits(u, bank->encodings, opts.cosine, opts.temperature);
      probs = class_probs(similarity_weights(scores), bank_labels, n_classes);
    } else {
      probs = linear_head_forward(u, model.head->weight, model.head->bias);
    }
    int pred = 0;
    for (int c2 = 1; c2 < n_classes; ++c2)
      if (probs[static_cast<std::size_t>(c2)] > probs[static_cast<std::size_t>(pred)])
        pred = c2;
    const int gold = split[i].intent;
    res.predictions.push_back(pred);
    ++res.per_intent_total[static_cast<std::size_t>(gold)];
    ++res.confusion[static_cast<std::size_t>(gold)][static_cast<std::size_t>(pred)];
    if (pred == gold) {
      ++correct;
      ++res.per_intent_correct[static_cast<std::size_t>(gold)];
    }
  }
  res.accuracy = static_cast<double>(correct) / static_cast<double>(split.size());
  return res;
}

std::vector<float> classify_weights(const Model& model, const std::string& text,
                                    const ExampleBank& bank, const EvalOptions& opts) {
  if (!bank.frozen) throw ContractError("classify_weights: bank is not frozen");
  const Tensor<float> enc = encode_texts(model, {text});
  std::vector<float> u(enc.data.begin(), enc.data.end());
  return similarity_weights(example_logits(u, bank.encodings, opts.cosine, opts.temperature));
}

FitResult fit(const IntentDataset& dataset, const EncoderConfig& enc_cfg,
              const TrainConfig& cfg) {
  enc_cfg.validate();
  if (dataset.train.empty()) throw DataError("fit: empty train split");
  if (dataset.val.empty()) throw DataError("fit: empty val split");
  if (cfg.batch_size < 1 || cfg.max_epochs < 1 || cfg.patience < 0)
    throw ConfigError("fit: invalid training configuration");

  Rng rng(cfg.seed);
  Rng init_rng = rng.derive(0);
  Rng epoch_rng = rng.derive(1);

  Model model;
  model.config = enc_cfg;
  model.mode = cfg.mode;
  model.intent_labels = dataset.intent_labels;
  model.vocab = build_vocab(dataset.train_texts());
  model.encoder = init_encoder_params<float>(enc_cfg, model.vocab.size(), init_rng);
  if (cfg.mode == Mode::linear)
    model.head = init_linear_head<float>(dataset.n_intents(), enc_cfg.hidden_dim, init_rng);

  const auto train_seqs = tokenize_split(model.vocab, dataset.train, enc_cfg.max_len);

  AdamState<float> adam{AdamHyper{cfg.lr, 0.9, 0.999, 1e-8}};

  FitResult result;
  result.model = model;
  History& hist = result.history;
  int since_improvement = 0;
  double snapshot_loss = std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(dataset.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    epoch_rng.shuffle(order);

    EpochRecord rec;
    rec.epoch = epoch;
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(end));
      const double loss =
          train_step(model, adam, dataset.train, train_seqs, batch, cfg, epoch_rng);
      rec.step_losses.push_back(loss);
      loss_sum += loss;
    }
    rec.train_loss = loss_sum / static_cast<double>(rec.step_losses.size());

    // Validation: example mode classifies against a bank built from the full
    // training split of the current setting.
    if (cfg.mode == Mode::example_driven) {
      const ExampleBank val_bank = build_bank(model, dataset.train);
      rec.val_accuracy = evaluate(model, dataset.val, &val_bank).accuracy;
    } else {
      rec.val_accuracy = evaluate(model, dataset.val, nullptr).accuracy;
    }
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    hist.epochs.push_back(rec);

    if (rec.val_accuracy > hist.best_val_accuracy) {
      hist.best_val_accuracy = rec.val_accuracy;
      hist.best_epoch = epoch;
      result.model = model;
      snapshot_loss = rec.train_loss;
      since_improvement = 0;
    } else {
      // Validation ties keep the better-trained parameters: when a tiny
      // validation split saturates early, later epochs with lower train loss
      // replace the snapshot. Patience still counts strict improvements only.
      if (rec.val_accuracy == hist.best_val_accuracy &&
          rec.train_loss < snapshot_loss) {
        hist.best_epoch = epoch;
        result.model = model;
        snapshot_loss = rec.train_loss;
      }
      ++since_improvement;
      if (since_improvement > cfg.patience) break;
    }
  }
  return result;
}

}  // namespace obsnet
