#pragma once

#include <cstdint>
#include <string>

#include "sqzt/nn/model.hpp"

namespace sqzt::nn {

struct CheckpointMeta {
  int epochs = 0;
  double final_train_mse = 0.0;
  double final_val_mse = 0.0;
  std::uint64_t seed = 0;
};

// Binary checkpoint (little-endian): magic "SQZM", u32 version=1,
// u32 blob_len + canonical JSON config/metadata blob, u32 tensor count, then
// per tensor: u32 name_len, name, u32 rank, u32 dims[rank], f32 data.
// Loading reproduces forward outputs bit-identically.
void save_checkpoint(const Model<float>& model, const CheckpointMeta& meta,
                     const std::string& path);

struct LoadedCheckpoint {
  Model<float> model;
  CheckpointMeta meta;
};

LoadedCheckpoint load_checkpoint(const std::string& path);  // throws on bad format

// canonical JSON form of the config (alphabetical keys)
std::string config_to_json(const CnnConfig& cfg);
CnnConfig config_from_json(const std::string& json_text);

}  // namespace sqzt::nn
