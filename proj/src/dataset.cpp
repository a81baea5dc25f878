#include "obsnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "obsnet/errors.hpp"
#include "obsnet/rng.hpp"
#include "obsnet/tokenizer.hpp"

namespace obsnet {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- CSV -----------------------------------------------------------------

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& content,
                                                const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  auto end_field = [&] {
    row.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(row);
    row.clear();
  };
  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      if (!field.empty() || !row.empty()) end_row();
    } else if (c == '\r') {
      // swallowed; \r\n handled by the \n branch
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) throw FormatError(path + ": unterminated quoted field");
  if (!field.empty() || !row.empty()) end_row();
  return rows;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<RawRecord> load_csv(const std::string& path) {
  const auto rows = parse_csv(read_file(path), path);
  if (rows.empty() || rows[0].size() != 2 || rows[0][0] != "text" || rows[0][1] != "category")
    throw FormatError(path + ": expected header `text,category`");
  std::vector<RawRecord> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 2)
      throw FormatError(path + ": row " + std::to_string(r + 1) + " does not have 2 fields");
    if (rows[r][0].empty()) {
      std::cerr << "warning: " << path << ": row " << (r + 1)
                << " has empty text, skipped\n";
      continue;
    }
    out.push_back({rows[r][0], rows[r][1]});
  }
  return out;
}

void save_csv(const std::string& path, const std::vector<RawRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += "\"\"";
      else q.push_back(c);
    }
    q.push_back('"');
    return q;
  };
  out << "text,category\n";
  for (const auto& r : records) out << quote(r.text) << ',' << quote(r.intent) << '\n';
}

// ---- JSONL ---------------------------------------------------------------

std::vector<RawRecord> load_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::vector<RawRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("text") || !j.contains("intent") ||
        !j["text"].is_string() || !j["intent"].is_string())
      throw FormatError(path + ": malformed record at line " + std::to_string(line_no));
    out.push_back({j["text"].get<std::string>(), j["intent"].get<std::string>()});
  }
  return out;
}

void save_jsonl(const std::string& path, const std::vector<RawRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  for (const auto& r : records)
    out << json{{"text", r.text}, {"intent", r.intent}}.dump() << '\n';
}

// ---- dataset directories -------------------------------------------------

namespace {

bool try_load_split(const std::string& dir, const std::string& split,
                    std::vector<RawRecord>& out) {
  const std::string csv = dir + "/" + split + ".csv";
  const std::string jsonl = dir + "/" + split + ".jsonl";
  if (fs::exists(csv)) {
    out = load_csv(csv);
    return true;
  }
  if (fs::exists(jsonl)) {
    out = load_jsonl(jsonl);
    return true;
  }
  return false;
}

void intern_split(IntentDataset& ds, const std::vector<RawRecord>& raw,
                  std::vector<Example>& split) {
  for (const auto& r : raw) split.push_back({r.text, ds.intern_intent(r.intent)});
}

}  // namespace

IntentDataset load_dataset_dir(const std::string& dir, double val_fraction,
                               std::uint64_t seed) {
  std::vector<RawRecord> train_raw, val_raw, test_raw;
  if (!try_load_split(dir, "train", train_raw))
    throw DataError(dir + ": no train.csv or train.jsonl found");
  const bool has_val = try_load_split(dir, "val", val_raw);
  try_load_split(dir, "test", test_raw);

  IntentDataset ds;
  ds.name = fs::path(dir).filename().string();
  if (ds.name.empty()) ds.name = dir;
  intern_split(ds, train_raw, ds.train);
  intern_split(ds, val_raw, ds.val);
  intern_split(ds, test_raw, ds.test);

  if (!has_val && val_fraction > 0.0 && !ds.train.empty()) {
    Rng rng(seed);
    std::vector<std::size_t> idx(ds.train.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    rng.shuffle(idx);
    const std::size_t n_val = static_cast<std::size_t>(
        std::llround(val_fraction * static_cast<double>(ds.train.size())));
    std::vector<std::uint8_t> is_val(ds.train.size(), 0);
    for (std::size_t i = 0; i < n_val; ++i) is_val[idx[i]] = 1;
    std::vector<Example> new_train;
    for (std::size_t i = 0; i < ds.train.size(); ++i)
      (is_val[i] ? ds.val : new_train).push_back(ds.train[i]);
    ds.train = std::move(new_train);
  }
  return ds;
}

void save_dataset_dir(const std::string& dir, const IntentDataset& ds) {
  fs::create_directories(dir);
  auto to_raw = [&](const std::vector<Example>& split) {
    std::vector<RawRecord> raw;
    for (const auto& e : split)
      raw.push_back({e.text, ds.intent_labels[static_cast<std::size_t>(e.intent)]});
    return raw;
  };
  save_csv(dir + "/train.csv", to_raw(ds.train));
  save_csv(dir + "/val.csv", to_raw(ds.val));
  save_csv(dir + "/test.csv", to_raw(ds.test));
}

// ---- few-shot ------------------------------------------------------------

FewShotView few_shot_subsample(const IntentDataset& ds, std::uint64_t seed, int per_intent) {
  if (ds.train.empty()) throw DataError("few_shot_subsample: empty train split");
  std::map<int, std::vector<std::size_t>> by_intent;
  for (std::size_t i = 0; i < ds.train.size(); ++i)
    by_intent[ds.train[i].intent].push_back(i);

  FewShotView view;
  view.seed = seed;
  Rng rng(seed);
  std::vector<std::size_t> chosen;
  for (auto& [intent, indices] : by_intent) {
    Rng sub = rng.derive(static_cast<std::uint64_t>(intent));
    sub.shuffle(indices);
    const std::size_t keep = std::min(indices.size(), static_cast<std::size_t>(per_intent));
    for (std::size_t i = 0; i < keep; ++i) chosen.push_back(indices[i]);
  }
  std::sort(chosen.begin(), chosen.end());  // stable train-order view
  for (auto i : chosen) view.train.push_back(ds.train[i]);
  return view;
}

IntentDataset few_shot_dataset(const IntentDataset& ds, std::uint64_t seed, int per_intent) {
  IntentDataset out = ds;
  out.train = few_shot_subsample(ds, seed, per_intent).train;
  return out;
}

// ---- synthetic corpus ----------------------------------------------------

namespace {

struct IntentTemplates {
  const char* label;
  std::vector<const char*> templates;
};

// Two disjoint 8-intent domains. The first domain is an action x object grid
// (volume, lights, music, fan crossed with up/down/on/off) built so that every
// direction word spans three intent pairs and "sound" bridges the volume and
// music families. Any two intents can therefore be removed from training while
// each held-out utterance keeps in-vocabulary words that identify it.
const std::vector<IntentTemplates>& synth_catalog() {
  static const std::vector<IntentTemplates> catalog = {
      {"volume_up",
       {"turn the volume up", "turn up the sound", "raise the volume",
        "make the sound higher", "put the volume higher", "turn the sound up"}},
      {"volume_down",
       {"turn the volume down", "turn down the sound", "lower the volume",
        "make the sound lower", "put the volume lower", "turn the sound down"}},
      {"lights_on",
       {"turn the lights on", "switch the lamp on", "turn the brightness up",
        "raise the brightness", "put the lights on", "make the brightness higher"}},
      {"lights_off",
       {"turn the lights off", "switch the lamp off", "turn the brightness down",
        "lower the brightness", "switch off the lamp", "make the brightness lower"}},
      {"music_on",
       {"turn the music on", "put the song on", "switch the music on",
        "put on the playlist", "turn the sound on", "switch the song on"}},
      {"music_off",
       {"turn the music off", "switch the song off", "switch the music off",
        "turn off the playlist", "turn the sound off", "switch off the song"}},
      {"fan_up",
       {"turn the fan up", "raise the fan speed", "make the fan higher",
        "turn up the fan", "put the fan higher", "raise the fan"}},
      {"fan_down",
       {"turn the fan down", "lower the fan speed", "make the fan lower",
        "turn down the fan", "put the fan lower", "lower the fan"}},
      {"alarm_set",
       {"set an alarm", "schedule a reminder", "turn the alarm on",
        "set the reminder", "schedule the alarm", "switch the reminder on"}},
      {"alarm_cancel",
       {"cancel the alarm", "remove a reminder", "turn the alarm off",
        "delete the reminder", "cancel the reminder", "switch the alarm off"}},
      {"heat_up",
       {"turn the heat up", "raise the temperature", "increase the thermostat",
        "make the heat higher", "turn up the thermostat", "raise the heat"}},
      {"heat_down",
       {"turn the heat down", "lower the temperature", "decrease the thermostat",
        "make the heat lower", "turn down the thermostat", "lower the heat"}},
      {"door_lock",
       {"lock the door", "secure the gate", "turn the lock on",
        "lock the front gate", "secure the front door", "bolt the door"}},
      {"door_unlock",
       {"unlock the door", "open the gate", "turn the lock off",
        "unlock the front gate", "open the front door", "unbolt the door"}},
      {"news_query",
       {"what is the news", "tell me the headlines", "check the news",
        "give me the headlines", "what is in the news today", "tell me the news"}},
      {"joke_request",
       {"what is a good joke", "tell me a joke", "give me a joke",
        "tell me something funny", "make me laugh", "another good joke"}},
  };
  return catalog;
}

const std::vector<const char*>& synth_prefixes() {
  static const std::vector<const char*> p = {"", "please ", "hey ", "can you "};
  return p;
}

const std::vector<const char*>& synth_suffixes() {
  static const std::vector<const char*> s = {"", " please", " now", " for me"};
  return s;
}

}  // namespace

IntentDataset synth_generate(int n_intents, int per_intent, std::uint64_t seed,
                             int first_intent) {
  const auto& catalog = synth_catalog();
  if (n_intents < 2) throw ConfigError("synth_generate: need at least 2 intents");
  if (per_intent < 1) throw ConfigError("synth_generate: need at least 1 per intent");
  if (first_intent < 0 ||
      first_intent + n_intents > static_cast<int>(catalog.size()))
    throw ConfigError("synth_generate: intent range outside the 16-intent catalog");

  IntentDataset ds;
  ds.name = "synth";

  const int n_total = n_intents * per_intent;
  const int test_total = static_cast<int>(std::llround(0.15 * n_total));
  const int val_total = static_cast<int>(std::llround(0.15 * n_total));
  // Largest-remainder allocation of split quotas across intents.
  auto allocate = [&](int total) {
    std::vector<int> counts(static_cast<std::size_t>(n_intents), total / n_intents);
    for (int i = 0; i < total % n_intents; ++i) ++counts[static_cast<std::size_t>(i)];
    return counts;
  };
  const auto test_counts = allocate(test_total);
  const auto val_counts = allocate(val_total);

  Rng rng(seed);
  for (int ci = 0; ci < n_intents; ++ci) {
    const auto& entry = catalog[static_cast<std::size_t>(first_intent + ci)];
    const int intent = ds.intern_intent(entry.label);
    std::vector<std::string> variants;
    for (const char* t : entry.templates)
      for (const char* pre : synth_prefixes())
        for (const char* suf : synth_suffixes())
          variants.push_back(std::string(pre) + t + suf);

    Rng sub = rng.derive(static_cast<std::uint64_t>(first_intent + ci));
    sub.shuffle(variants);
    std::vector<std::string> chosen;
    for (int i = 0; i < per_intent && i < static_cast<int>(variants.size()); ++i)
      chosen.push_back(variants[static_cast<std::size_t>(i)]);
    const int n_test = std::min(test_counts[static_cast<std::size_t>(ci)],
                                static_cast<int>(chosen.size()));
    const int n_val = std::min(val_counts[static_cast<std::size_t>(ci)],
                               static_cast<int>(chosen.size()) - n_test);
    for (int i = 0; i < static_cast<int>(chosen.size()); ++i) {
      Example e{chosen[static_cast<std::size_t>(i)], intent};
      if (i < n_test) ds.test.push_back(e);
      else if (i < n_test + n_val) ds.val.push_back(e);
      else ds.train.push_back(e);
    }
    // Demand beyond template capacity is met by duplicating train utterances,
    // keeping val/test disjoint from train.
    const int n_train_unique = static_cast<int>(chosen.size()) - n_test - n_val;
    for (int i = static_cast<int>(chosen.size()); i < per_intent; ++i) {
      const std::size_t pick = static_cast<std::size_t>(n_test + n_val) +
                               sub.index(static_cast<std::size_t>(std::max(1, n_train_unique)));
      ds.train.push_back({chosen[pick], intent});
    }
  }
  return ds;
}

// ---- word-content targets ------------------------------------------------

WordContentTargets word_content_targets(const IntentDataset& ds, int top_k) {
  std::map<std::string, long long> freq;
  for (const auto& e : ds.train)
    for (const auto& w : split_words(e.text)) ++freq[w];
  std::vector<std::pair<std::string, long long>> order(freq.begin(), freq.end());
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (static_cast<int>(order.size()) > top_k)
    order.resize(static_cast<std::size_t>(top_k));

  WordContentTargets t;
  std::unordered_map<std::string, int> index;
  for (const auto& [w, c] : order) {
    (void)c;
    index[w] = static_cast<int>(t.words.size());
    t.words.push_back(w);
  }
  auto targets_for = [&](const std::vector<Example>& split) {
    std::vector<std::vector<int>> out;
    for (const auto& e : split) {
      std::vector<int> present;
      for (const auto& w : split_words(e.text)) {
        auto it = index.find(w);
        if (it != index.end()) present.push_back(it->second);
      }
      std::sort(present.begin(), present.end());
      present.erase(std::unique(present.begin(), present.end()), present.end());
      out.push_back(std::move(present));
    }
    return out;
  };
  t.train_targets = targets_for(ds.train);
  t.test_targets = targets_for(ds.test);
  return t;
}

}  // namespace obsnet
