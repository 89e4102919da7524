#include "sqzt/nn/checkpoint.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace sqzt::nn {

namespace {

constexpr char kMagic[4] = {'S', 'Q', 'Z', 'M'};

using nlohmann::json;

json config_json(const CnnConfig& cfg) {
  return json{{"input_len", cfg.input_len},
              {"width_scale", cfg.width_scale},
              {"stages", cfg.stages},
              {"tail_layers", cfg.tail_layers},
              {"dense_shortcuts", cfg.dense_shortcuts},
              {"phase_channel", cfg.phase_channel},
              {"head_kind", cfg.head_kind == HeadKind::kCharacteristic ? "characteristic"
                                                                       : "reconstruction"},
              {"m", cfg.m},
              {"head_hidden", cfg.head_hidden},
              {"r_max", cfg.r_max},
              {"n_max", cfg.n_max},
              {"input_scale", cfg.input_scale}};
}

CnnConfig config_from(const json& j) {
  CnnConfig cfg;
  cfg.input_len = j.at("input_len").get<int>();
  cfg.width_scale = j.at("width_scale").get<double>();
  cfg.stages = j.at("stages").get<int>();
  cfg.tail_layers = j.at("tail_layers").get<int>();
  cfg.dense_shortcuts = j.at("dense_shortcuts").get<bool>();
  cfg.phase_channel = j.at("phase_channel").get<bool>();
  const std::string head = j.at("head_kind").get<std::string>();
  if (head == "characteristic")
    cfg.head_kind = HeadKind::kCharacteristic;
  else if (head == "reconstruction")
    cfg.head_kind = HeadKind::kReconstruction;
  else
    throw std::runtime_error("unknown head kind: " + head);
  cfg.m = j.at("m").get<int>();
  cfg.head_hidden = j.at("head_hidden").get<std::vector<int>>();
  cfg.r_max = j.at("r_max").get<double>();
  cfg.n_max = j.at("n_max").get<double>();
  cfg.input_scale = j.at("input_scale").get<double>();
  return cfg;
}

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

}  // namespace

std::string config_to_json(const CnnConfig& cfg) { return config_json(cfg).dump(); }

CnnConfig config_from_json(const std::string& text) {
  return config_from(json::parse(text));
}

void save_checkpoint(const Model<float>& model, const CheckpointMeta& meta,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(kMagic, 4);
  put(out, std::uint32_t{1});

  json blob{{"config", config_json(model.config)},
            {"meta",
             {{"epochs", meta.epochs},
              {"final_train_mse", meta.final_train_mse},
              {"final_val_mse", meta.final_val_mse},
              {"seed", meta.seed}}}};
  const std::string text = blob.dump();
  put(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));

  put(out, static_cast<std::uint32_t>(model.plan.tensors.size()));
  for (const auto& info : model.plan.tensors) {
    put(out, static_cast<std::uint32_t>(info.name.size()));
    out.write(info.name.data(), static_cast<std::streamsize>(info.name.size()));
    put(out, static_cast<std::uint32_t>(info.dims.size()));
    for (int d : info.dims) put(out, static_cast<std::uint32_t>(d));
    out.write(reinterpret_cast<const char*>(model.params.data() + info.offset),
              static_cast<std::streamsize>(info.size * sizeof(float)));
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not a SQZM checkpoint: " + path);
  if (get<std::uint32_t>(in) != 1)
    throw std::runtime_error("unsupported checkpoint version in " + path);

  const auto blob_len = get<std::uint32_t>(in);
  std::string text(blob_len, '\0');
  in.read(text.data(), blob_len);
  if (!in) throw std::runtime_error("truncated checkpoint blob: " + path);
  const json blob = json::parse(text);

  LoadedCheckpoint loaded;
  loaded.model.config = config_from(blob.at("config"));
  loaded.model.plan = build_plan(loaded.model.config);
  loaded.model.params.resize(loaded.model.plan.param_count);
  const json& meta = blob.at("meta");
  loaded.meta.epochs = meta.at("epochs").get<int>();
  loaded.meta.final_train_mse = meta.at("final_train_mse").get<double>();
  loaded.meta.final_val_mse = meta.at("final_val_mse").get<double>();
  loaded.meta.seed = meta.at("seed").get<std::uint64_t>();

  const auto n_tensors = get<std::uint32_t>(in);
  if (n_tensors != loaded.model.plan.tensors.size())
    throw std::runtime_error("checkpoint tensor count does not match its config");
  for (const auto& info : loaded.model.plan.tensors) {
    const auto name_len = get<std::uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto rank = get<std::uint32_t>(in);
    std::vector<int> dims(rank);
    for (auto& d : dims) d = static_cast<int>(get<std::uint32_t>(in));
    if (name != info.name || dims != info.dims)
      throw std::runtime_error("checkpoint tensor " + name + " does not match plan tensor " +
                               info.name);
    in.read(reinterpret_cast<char*>(loaded.model.params.data() + info.offset),
            static_cast<std::streamsize>(info.size * sizeof(float)));
  }
  if (!in) throw std::runtime_error("truncated checkpoint tensors: " + path);
  return loaded;
}

}  // namespace sqzt::nn
