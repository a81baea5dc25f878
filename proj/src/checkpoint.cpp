#include "obsnet/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "obsnet/errors.hpp"
#include "obsnet/rng.hpp"

namespace obsnet {

using nlohmann::json;

Mode mode_from_string(const std::string& s) {
  if (s == "linear") return Mode::linear;
  if (s == "example") return Mode::example_driven;
  throw ConfigError("unknown mode: " + s + " (expected linear or example)");
}

Pooling pooling_from_string(const std::string& s) {
  if (s == "cls") return Pooling::cls;
  if (s == "observers") return Pooling::observers;
  throw ConfigError("unknown pooling: " + s + " (expected cls or observers)");
}

std::uint64_t model_param_hash(const Model& m) {
  std::uint64_t h = 1469598103934665603ULL;
  m.for_each_tensor([&](const std::string&, const Tensor<float>& t) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(t.data.data());
    for (std::size_t i = 0; i < t.data.size() * sizeof(float); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  });
  return h;
}

namespace {

json config_to_json(const EncoderConfig& c) {
  return json{{"layers", c.layers},       {"heads", c.heads},
              {"hidden_dim", c.hidden_dim}, {"ff_dim", c.ff_dim},
              {"max_len", c.max_len},     {"n_observers", c.n_observers},
              {"pooling", to_string(c.pooling)}, {"dropout", c.dropout}};
}

EncoderConfig config_from_json(const json& j) {
  EncoderConfig c;
  c.layers = j.at("layers");
  c.heads = j.at("heads");
  c.hidden_dim = j.at("hidden_dim");
  c.ff_dim = j.at("ff_dim");
  c.max_len = j.at("max_len");
  c.n_observers = j.at("n_observers");
  c.pooling = pooling_from_string(j.at("pooling"));
  c.dropout = j.at("dropout");
  return c;
}

template <typename T>
void write_raw(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model, const json& metadata) {
  json header = {
      {"config", config_to_json(model.config)},
      {"mode", to_string(model.mode)},
      {"vocab", model.vocab.id_to_token},
      {"intents", model.intent_labels},
      {"metadata", metadata},
  };
  const std::string header_str = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write("OBSN", 4);
  write_raw<std::uint32_t>(out, 1);
  write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(header_str.size()));
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));

  std::uint32_t count = 0;
  model.for_each_tensor([&](const std::string&, const Tensor<float>&) { ++count; });
  write_raw(out, count);
  model.for_each_tensor([&](const std::string& name, const Tensor<float>& t) {
    write_raw<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_raw<std::uint8_t>(out, static_cast<std::uint8_t>(t.shape.size()));
    for (auto d : t.shape) write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  });
  if (!out) throw DataError("checkpoint write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "OBSN", 4) != 0)
    throw FormatError(path + ": not a checkpoint file (bad magic)");
  const auto version = read_raw<std::uint32_t>(in);
  if (version != 1) throw FormatError(path + ": unsupported checkpoint version");
  const auto header_len = read_raw<std::uint32_t>(in);
  std::string header_str(header_len, '\0');
  in.read(header_str.data(), header_len);
  if (!in) throw FormatError(path + ": truncated header");
  json header = json::parse(header_str, nullptr, false);
  if (header.is_discarded()) throw FormatError(path + ": malformed header JSON");

  LoadedCheckpoint lc;
  Model& m = lc.model;
  m.config = config_from_json(header.at("config"));
  m.mode = mode_from_string(header.at("mode"));
  m.intent_labels = header.at("intents").get<std::vector<std::string>>();
  m.vocab.id_to_token = header.at("vocab").get<std::vector<std::string>>();
  for (std::size_t i = 0; i < m.vocab.id_to_token.size(); ++i)
    m.vocab.token_to_id[m.vocab.id_to_token[i]] = static_cast<int>(i);
  lc.metadata = header.value("metadata", json::object());

  // Shape-correct skeleton, then overwrite from the tensor table.
  Rng rng(0);
  m.encoder = init_encoder_params<float>(m.config, m.vocab.size(), rng);
  if (m.mode == Mode::linear)
    m.head = init_linear_head<float>(static_cast<int>(m.intent_labels.size()),
                                     m.config.hidden_dim, rng);

  std::map<std::string, Tensor<float>*> by_name;
  m.for_each_tensor([&](const std::string& name, Tensor<float>& t) { by_name[name] = &t; });

  const auto count = read_raw<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = read_raw<std::uint16_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto ndim = read_raw<std::uint8_t>(in);
    std::vector<std::size_t> shape;
    for (std::uint8_t d = 0; d < ndim; ++d)
      shape.push_back(read_raw<std::uint32_t>(in));
    auto it = by_name.find(name);
    if (it == by_name.end()) throw FormatError(path + ": unknown tensor " + name);
    if (it->second->shape != shape)
      throw FormatError(path + ": shape mismatch for tensor " + name);
    in.read(reinterpret_cast<char*>(it->second->data.data()),
            static_cast<std::streamsize>(it->second->data.size() * sizeof(float)));
    if (!in) throw FormatError(path + ": truncated tensor data");
  }
  return lc;
}

}  // namespace obsnet
