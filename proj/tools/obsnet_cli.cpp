#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "obsnet/checkpoint.hpp"
#include "obsnet/dataset.hpp"
#include "obsnet/errors.hpp"
#include "obsnet/experiments.hpp"
#include "obsnet/trainer.hpp"

using namespace obsnet;
using nlohmann::json;

namespace {

struct EncoderFlags {
  int layers = 4;
  int heads = 4;
  int hidden_dim = 128;
  int ff_dim = 512;
  int max_len = 32;
  int observers = 20;
  std::string pooling = "observers";

  void attach(CLI::App* cmd) {
    cmd->add_option("--layers", layers, "Encoder layers");
    cmd->add_option("--heads", heads, "Attention heads");
    cmd->add_option("--hidden-dim", hidden_dim, "Hidden dimension");
    cmd->add_option("--ff-dim", ff_dim, "Feed-forward dimension");
    cmd->add_option("--max-len", max_len, "Maximum sequence length");
    cmd->add_option("--observers", observers, "Number of observer tokens");
    cmd->add_option("--pooling", pooling, "Pooling mode: cls|observers");
  }

  EncoderConfig to_config() const {
    EncoderConfig c;
    c.layers = layers;
    c.heads = heads;
    c.hidden_dim = hidden_dim;
    c.ff_dim = ff_dim;
    c.max_len = max_len;
    c.n_observers = observers;
    c.pooling = pooling_from_string(pooling);
    c.validate();
    return c;
  }
};

struct TrainFlags {
  std::string mode = "example";
  int batch_size = 64;
  int epochs = 100;
  int patience = 20;
  double lr = 5e-4;
  std::uint64_t seed = 1;
  bool few_shot = false;
  double val_fraction = 0.1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--mode", mode, "Head: linear|example");
    cmd->add_option("--batch-size", batch_size, "Training batch size");
    cmd->add_option("--epochs", epochs, "Maximum epochs");
    cmd->add_option("--patience", patience, "Early-stopping patience");
    cmd->add_option("--lr", lr, "Adam learning rate");
    cmd->add_option("--seed", seed, "Master random seed");
    cmd->add_flag("--few-shot", few_shot, "Subsample 10 utterances per intent");
    cmd->add_option("--val-fraction", val_fraction,
                    "Validation fraction when the dataset has no val split");
  }

  TrainConfig to_config() const {
    TrainConfig c;
    c.mode = mode_from_string(mode);
    c.batch_size = batch_size;
    c.max_epochs = epochs;
    c.patience = patience;
    c.lr = lr;
    c.seed = seed;
    c.few_shot = few_shot;
    return c;
  }
};

std::string join_args(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

std::string g_cmdline;

void write_manifest(const std::string& primary_out, const json& resolved_config,
                    std::uint64_t seed, const std::vector<std::string>& outputs,
                    double wall_seconds) {
  json m = {{"command", g_cmdline},
            {"config", resolved_config},
            {"seed", seed},
            {"outputs", outputs},
            {"wall_seconds", wall_seconds}};
  std::ofstream out(primary_out + ".manifest.json");
  out << m.dump(2) << "\n";
}

IntentDataset load_data(const std::string& dir, double val_fraction, std::uint64_t seed,
                        bool few_shot) {
  IntentDataset ds = load_dataset_dir(dir, val_fraction, seed);
  if (few_shot) ds = few_shot_dataset(ds, seed);
  return ds;
}

void emit_report(const ProtocolReport& report, const std::string& path, bool table) {
  if (!path.empty()) report.write(path);
  if (table) std::cout << report.to_table();
  else std::cout << report.to_json().dump(2) << "\n";
}

int run(int argc, char** argv) {
  g_cmdline = join_args(argc, argv);
  CLI::App app{"Observer-token intent classification harness"};
  app.option_defaults()->always_capture_default();
  app.set_help_all_flag("--help-all", "Print help for all subcommands");
  app.require_subcommand(1);

  // ---- synth ----
  auto* synth = app.add_subcommand("synth", "Generate the synthetic intent dataset");
  int synth_intents = 8, synth_per_intent = 50, synth_offset = 0;
  std::uint64_t synth_seed = 1;
  std::string synth_out;
  synth->add_option("--intents", synth_intents, "Number of intents (catalog of 16)");
  synth->add_option("--per-intent", synth_per_intent, "Utterances per intent");
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--offset", synth_offset, "First catalog intent (8 = second domain)");
  synth->add_option("--out", synth_out, "Output dataset directory")->required();

  // ---- train ----
  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint");
  EncoderFlags train_enc;
  TrainFlags train_flags;
  std::string train_data, train_out, train_history;
  train->add_option("--data", train_data, "Dataset directory")->required();
  train->add_option("--out", train_out, "Checkpoint output path")->required();
  train->add_option("--history", train_history, "Training history JSON path");
  train_enc.attach(train);
  train_flags.attach(train);

  // ---- eval ----
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
  std::string eval_ckpt, eval_data, eval_split = "test", eval_report;
  bool eval_cosine = false, eval_table = false;
  double eval_temperature = 1.0;
  eval_cmd->add_option("--ckpt", eval_ckpt, "Checkpoint path")->required();
  eval_cmd->add_option("--data", eval_data, "Dataset directory")->required();
  eval_cmd->add_option("--split", eval_split, "Split: train|val|test");
  eval_cmd->add_flag("--cosine", eval_cosine, "Cosine similarity (ablation)");
  eval_cmd->add_option("--temperature", eval_temperature, "Similarity temperature");
  eval_cmd->add_option("--report", eval_report, "Report JSON path");
  eval_cmd->add_flag("--table", eval_table, "Print a plain-text table");

  // ---- nearest ----
  auto* nearest = app.add_subcommand("nearest", "Nearest bank examples for an utterance");
  std::string near_ckpt, near_data, near_bank, near_text;
  int near_k = 4;
  nearest->add_option("--ckpt", near_ckpt, "Checkpoint path")->required();
  nearest->add_option("--data", near_data, "Dataset directory (train split as bank)");
  nearest->add_option("--bank", near_bank, "Bank JSONL path (text/intent records)");
  nearest->add_option("--text", near_text, "Utterance to classify")->required();
  nearest->add_option("-k", near_k, "Number of neighbors");

  // ---- transfer-unseen ----
  auto* unseen = app.add_subcommand("transfer-unseen", "Unseen-intent transfer protocol");
  EncoderFlags unseen_enc;
  TrainFlags unseen_flags;
  std::string unseen_data, unseen_report;
  int unseen_runs = 30, unseen_kmin = 4, unseen_kmax = 10, unseen_removed = 0;
  bool unseen_table = false, unseen_no_add_back = false;
  unseen->add_option("--data", unseen_data, "Dataset directory")->required();
  unseen->add_option("--runs", unseen_runs, "Number of runs");
  unseen->add_option("--k-min", unseen_kmin, "Minimum removed intents");
  unseen->add_option("--k-max", unseen_kmax, "Maximum removed intents");
  unseen->add_option("--removed", unseen_removed, "Fixed removed-intent count (overrides k range)");
  unseen->add_option("--report", unseen_report, "Report JSON path");
  unseen->add_flag("--table", unseen_table, "Print a plain-text table");
  unseen->add_flag("--no-add-back", unseen_no_add_back,
                   "Skip re-adding removed intents to the bank (self-test)");
  unseen_enc.attach(unseen);
  unseen_flags.attach(unseen);

  // ---- transfer-cross ----
  auto* cross = app.add_subcommand("transfer-cross", "Cross-dataset transfer evaluation");
  std::string cross_ckpt, cross_data, cross_report;
  bool cross_table = false;
  cross->add_option("--ckpt", cross_ckpt, "Source checkpoint")->required();
  cross->add_option("--data", cross_data, "Target dataset directory")->required();
  cross->add_option("--report", cross_report, "Report JSON path");
  cross->add_flag("--table", cross_table, "Print a plain-text table");

  // ---- probe ----
  auto* probe = app.add_subcommand("probe", "Word-content probe over frozen representations");
  std::string probe_ckpt, probe_data, probe_report;
  int probe_topk = 1000;
  std::uint64_t probe_seed = 1;
  bool probe_table = false;
  probe->add_option("--ckpt", probe_ckpt, "Checkpoint path")->required();
  probe->add_option("--data", probe_data, "Dataset directory")->required();
  probe->add_option("--top-k", probe_topk, "Most frequent words to probe");
  probe->add_option("--seed", probe_seed, "Probe training seed");
  probe->add_option("--report", probe_report, "Report JSON path");
  probe->add_flag("--table", probe_table, "Print a plain-text table");

  // ---- ablate-observers ----
  auto* ab_obs = app.add_subcommand("ablate-observers", "Observer-count ablation");
  EncoderFlags ab_obs_enc;
  TrainFlags ab_obs_flags;
  std::string ab_obs_data, ab_obs_report;
  std::vector<int> ab_obs_counts = {1, 5, 10, 20};
  bool ab_obs_table = false;
  ab_obs->add_option("--data", ab_obs_data, "Dataset directory")->required();
  ab_obs->add_option("--counts", ab_obs_counts, "Observer counts to train");
  ab_obs->add_option("--report", ab_obs_report, "Report JSON path");
  ab_obs->add_flag("--table", ab_obs_table, "Print a plain-text table");
  ab_obs_enc.attach(ab_obs);
  ab_obs_flags.attach(ab_obs);

  // ---- ablate-fraction ----
  auto* ab_frac = app.add_subcommand("ablate-fraction", "Example-bank fraction ablation");
  std::string ab_frac_ckpt, ab_frac_data, ab_frac_report;
  std::vector<double> ab_frac_fractions = {0.01, 0.05, 0.10, 0.50, 1.0};
  std::uint64_t ab_frac_seed = 1;
  bool ab_frac_table = false;
  ab_frac->add_option("--ckpt", ab_frac_ckpt, "Example-mode checkpoint")->required();
  ab_frac->add_option("--data", ab_frac_data, "Dataset directory")->required();
  ab_frac->add_option("--fractions", ab_frac_fractions, "Bank fractions to evaluate");
  ab_frac->add_option("--seed", ab_frac_seed, "Subsampling seed");
  ab_frac->add_option("--report", ab_frac_report, "Report JSON path");
  ab_frac->add_flag("--table", ab_frac_table, "Print a plain-text table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the error message
    return code == 0 ? 0 : 2;
  }
  const auto t0 = std::chrono::steady_clock::now();
  auto wall = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  if (synth->parsed()) {
    const IntentDataset ds =
        synth_generate(synth_intents, synth_per_intent, synth_seed, synth_offset);
    save_dataset_dir(synth_out, ds);
    write_manifest(synth_out, {{"intents", synth_intents},
                               {"per_intent", synth_per_intent},
                               {"offset", synth_offset}},
                   synth_seed,
                   {synth_out + "/train.csv", synth_out + "/val.csv", synth_out + "/test.csv"},
                   wall());
    std::cout << "wrote " << synth_out << " (" << ds.train.size() << "/" << ds.val.size()
              << "/" << ds.test.size() << " train/val/test)\n";
    return 0;
  }

  if (train->parsed()) {
    const EncoderConfig enc_cfg = train_enc.to_config();
    const TrainConfig cfg = train_flags.to_config();
    const IntentDataset ds =
        load_data(train_data, train_flags.val_fraction, cfg.seed, cfg.few_shot);
    FitResult fitted = fit(ds, enc_cfg, cfg);
    ExampleBank bank;
    if (cfg.mode == Mode::example_driven)
      bank = build_bank(fitted.model, ds.train);
    fitted.history.test_accuracy =
        ds.test.empty() ? -1.0
                        : evaluate(fitted.model, ds.test,
                                   cfg.mode == Mode::example_driven ? &bank : nullptr)
                              .accuracy;
    json meta = {{"dataset", ds.name},
                 {"seed", cfg.seed},
                 {"few_shot", cfg.few_shot},
                 {"best_epoch", fitted.history.best_epoch},
                 {"best_val_accuracy", fitted.history.best_val_accuracy}};
    save_checkpoint(train_out, fitted.model, meta);
    std::vector<std::string> outputs = {train_out};
    if (!train_history.empty()) {
      std::ofstream h(train_history);
      h << fitted.history.to_json().dump(2) << "\n";
      outputs.push_back(train_history);
    }
    write_manifest(train_out,
                   {{"encoder",
                     {{"layers", enc_cfg.layers},
                      {"heads", enc_cfg.heads},
                      {"hidden_dim", enc_cfg.hidden_dim},
                      {"ff_dim", enc_cfg.ff_dim},
                      {"max_len", enc_cfg.max_len},
                      {"n_observers", enc_cfg.n_observers},
                      {"pooling", to_string(enc_cfg.pooling)}}},
                    {"train",
                     {{"mode", to_string(cfg.mode)},
                      {"batch_size", cfg.batch_size},
                      {"max_epochs", cfg.max_epochs},
                      {"patience", cfg.patience},
                      {"lr", cfg.lr},
                      {"few_shot", cfg.few_shot}}}},
                   cfg.seed, outputs, wall());
    std::cout << "best epoch " << fitted.history.best_epoch << ", val accuracy "
              << fitted.history.best_val_accuracy << ", test accuracy "
              << fitted.history.test_accuracy << "\n";
    return 0;
  }

  if (eval_cmd->parsed()) {
    const Model model = load_checkpoint(eval_ckpt).model;
    IntentDataset ds = load_dataset_dir(eval_data);
    const std::vector<Example>* split = &ds.test;
    if (eval_split == "train") split = &ds.train;
    else if (eval_split == "val") split = &ds.val;
    else if (eval_split != "test") throw ConfigError("unknown split: " + eval_split);
    EvalOptions opts;
    opts.cosine = eval_cosine;
    opts.temperature = static_cast<float>(eval_temperature);
    EvalResult res;
    if (model.mode == Mode::example_driven) {
      const ExampleBank bank = build_bank(model, ds.train);
      res = evaluate(model, *split, &bank, opts);
    } else {
      res = evaluate(model, *split, nullptr, opts);
    }
    ProtocolReport report;
    report.protocol = "eval";
    report.config = {{"ckpt", eval_ckpt}, {"data", eval_data}, {"split", eval_split}};
    json per_intent = json::array();
    for (std::size_t c = 0; c < model.intent_labels.size() &&
                            c < res.per_intent_total.size(); ++c)
      if (res.per_intent_total[c] > 0)
        per_intent.push_back({{"intent", model.intent_labels[c]},
                              {"correct", res.per_intent_correct[c]},
                              {"total", res.per_intent_total[c]}});
    report.runs = per_intent;
    report.aggregate = {{"accuracy", res.accuracy}};
    emit_report(report, eval_report, eval_table);
    return 0;
  }

  if (nearest->parsed()) {
    const Model model = load_checkpoint(near_ckpt).model;
    std::vector<Example> entries;
    std::vector<std::string> intent_names;
    if (!near_data.empty()) {
      IntentDataset ds = load_dataset_dir(near_data);
      entries = ds.train;
      intent_names = ds.intent_labels;
    } else if (!near_bank.empty()) {
      IntentDataset tmp;
      for (const auto& r : load_jsonl(near_bank))
        entries.push_back({r.text, tmp.intern_intent(r.intent)});
      intent_names = tmp.intent_labels;
    } else {
      throw ConfigError("nearest: provide --data or --bank");
    }
    const ExampleBank bank = build_bank(model, entries);
    const auto alpha = classify_weights(model, near_text, bank);
    const auto neighbors =
        nearest_examples(alpha, bank.labels(),
                         std::min<std::size_t>(static_cast<std::size_t>(near_k), alpha.size()));
    for (const auto& n : neighbors)
      std::printf("%.6f  %s (%s)\n", n.weight, bank.entries[n.bank_index].text.c_str(),
                  intent_names[static_cast<std::size_t>(n.intent)].c_str());
    return 0;
  }

  if (unseen->parsed()) {
    const EncoderConfig enc_cfg = unseen_enc.to_config();
    TrainConfig cfg = unseen_flags.to_config();
    if (cfg.mode != Mode::example_driven)
      throw ConfigError("transfer-unseen requires --mode example");
    const IntentDataset ds = load_dataset_dir(unseen_data, unseen_flags.val_fraction, unseen_flags.seed);
    UnseenIntentOptions opts;
    opts.runs = unseen_runs;
    opts.k_min = unseen_removed > 0 ? unseen_removed : unseen_kmin;
    opts.k_max = unseen_removed > 0 ? unseen_removed : unseen_kmax;
    opts.seed = unseen_flags.seed;
    opts.add_back = !unseen_no_add_back;
    const ProtocolReport report = unseen_intent_protocol(ds, enc_cfg, cfg, opts);
    emit_report(report, unseen_report, unseen_table);
    if (!unseen_report.empty())
      write_manifest(unseen_report, report.config, unseen_flags.seed, {unseen_report}, wall());
    return 0;
  }

  if (cross->parsed()) {
    const Model model = load_checkpoint(cross_ckpt).model;
    const IntentDataset target = load_dataset_dir(cross_data);
    const EvalResult res = cross_dataset_transfer(model, target);
    ProtocolReport report;
    report.protocol = "cross_dataset_transfer";
    report.config = {{"ckpt", cross_ckpt}, {"target", cross_data}};
    report.runs.push_back({{"target", target.name}, {"test_accuracy", res.accuracy}});
    report.aggregate = {{"accuracy", res.accuracy}};
    emit_report(report, cross_report, cross_table);
    return 0;
  }

  if (probe->parsed()) {
    const Model model = load_checkpoint(probe_ckpt).model;
    const IntentDataset ds = load_dataset_dir(probe_data);
    ProtocolReport report;
    report.protocol = "probe_word_content";
    report.config = {{"ckpt", probe_ckpt}, {"data", probe_data}, {"top_k", probe_topk}};
    const ProbeResult main_res =
        probe_word_content(model, ds, probe_topk, probe_seed);
    report.runs.push_back({{"pooling", to_string(model.config.pooling)},
                           {"micro_f1", main_res.micro_f1}});
    std::vector<double> f1s = {main_res.micro_f1};
    if (model.config.n_observers > 0) {
      // report both pooling modes when observers are available
      const Pooling other = model.config.pooling == Pooling::cls ? Pooling::observers
                                                                 : Pooling::cls;
      const ProbeResult other_res =
          probe_word_content(model, ds, probe_topk, probe_seed, other);
      report.runs.push_back({{"pooling", to_string(other)}, {"micro_f1", other_res.micro_f1}});
      f1s.push_back(other_res.micro_f1);
    }
    report.aggregate = aggregate_json(f1s);
    emit_report(report, probe_report, probe_table);
    return 0;
  }

  if (ab_obs->parsed()) {
    const EncoderConfig enc_cfg = ab_obs_enc.to_config();
    TrainConfig cfg = ab_obs_flags.to_config();
    const IntentDataset ds =
        load_data(ab_obs_data, ab_obs_flags.val_fraction, ab_obs_flags.seed, cfg.few_shot);
    const ProtocolReport report =
        ablate_observers(ds, enc_cfg, cfg, ab_obs_counts, ab_obs_flags.seed);
    emit_report(report, ab_obs_report, ab_obs_table);
    return 0;
  }

  if (ab_frac->parsed()) {
    const Model model = load_checkpoint(ab_frac_ckpt).model;
    const IntentDataset ds = load_dataset_dir(ab_frac_data);
    const ProtocolReport report =
        ablate_example_fraction(model, ds, ab_frac_fractions, ab_frac_seed);
    emit_report(report, ab_frac_report, ab_frac_table);
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
