#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqzt/fock.hpp"
#include "sqzt/rng.hpp"

namespace sqzt::nn {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

enum class HeadKind { kCharacteristic, kReconstruction };

// 1D-CNN trunk: stem conv, `stages` stages of dense-shortcut conv blocks
// (two conv layers per block, block input concatenated channel-wise onto the
// block output) closed by stride-4 1-wide transitions, then `tail_layers`
// stride-2 convs, flatten, and the head. At width_scale 1 / stages 3 /
// tail_layers 3 this is exactly the published 17-conv-layer table.
struct CnnConfig {
  int input_len = 4096;
  double width_scale = 1.0;
  int stages = 3;       // 1..3
  int tail_layers = 3;  // 0..3
  bool dense_shortcuts = true;
  bool phase_channel = false;  // feed (phase, value) instead of value only
  HeadKind head_kind = HeadKind::kCharacteristic;
  int m = 0;                    // reconstruction truncation; head emits m*m
  std::vector<int> head_hidden; // extra fully connected widths (ReLU)
  double r_max = 1.75;          // label normalization echoed from the dataset
  double n_max = 1.2;
  double input_scale = 1.0;

  int in_channels() const { return phase_channel ? 2 : 1; }
  int output_dim() const {
    return head_kind == HeadKind::kCharacteristic ? 4 : m * m;
  }
};

struct ConvPlan {
  std::string name;
  int kernel = 0, cin = 0, cout = 0, stride = 1;
  int len_in = 0, len_out = 0, pad_left = 0, pad_right = 0;
  bool relu = true;
  int id = 0;                       // execution index
  std::ptrdiff_t w_off = 0, b_off = 0;
};

struct BlockPlan {
  ConvPlan c1, c2;
};

struct StagePlan {
  std::vector<BlockPlan> blocks;
  ConvPlan transition;
};

struct DensePlan {
  std::string name;
  int in = 0, out = 0;
  bool relu = false;
  int id = 0;
  std::ptrdiff_t w_off = 0, b_off = 0;
};

struct TensorInfo {
  std::string name;
  std::vector<int> dims;
  std::ptrdiff_t offset = 0;
  std::ptrdiff_t size = 0;
};

struct ModelPlan {
  ConvPlan stem;
  std::vector<StagePlan> stages;
  std::vector<ConvPlan> tail;
  int n_convs = 0;
  int n_dense = 0;
  int flat_len = 0;
  std::vector<DensePlan> head;
  std::ptrdiff_t param_count = 0;
  std::vector<TensorInfo> tensors;
};

// Builds and validates the execution plan. Throws std::invalid_argument when
// a stride does not divide the running sequence length or the config is
// inconsistent.
ModelPlan build_plan(const CnnConfig& cfg);

struct LayerDesc {
  std::string name;
  int kernel = 0, channels = 0, stride = 1;
};
// Flat (kernel, channels, stride) listing of the trunk, for reporting;
// reproduces the published table at width_scale 1.
std::vector<LayerDesc> layer_table(const CnnConfig& cfg);

template <typename T>
struct Model {
  CnnConfig config;
  ModelPlan plan;
  Vec<T> params;
};

// Deterministic He/Glorot-uniform initialization from the seed.
template <typename T>
Model<T> build_model(const CnnConfig& cfg, std::uint64_t seed) {
  Model<T> model{cfg, build_plan(cfg), {}};
  model.params = Vec<T>::Zero(model.plan.param_count);
  Rng rng(seed);
  for (const auto& info : model.plan.tensors) {
    if (info.name.ends_with(".b")) continue;  // biases stay zero
    // dims are [out, ...fan-in factors...]
    std::ptrdiff_t fan_in = 1;
    for (std::size_t d = 1; d < info.dims.size(); ++d) fan_in *= info.dims[d];
    const std::ptrdiff_t fan_out = info.dims[0];
    const bool head_output = info.name.starts_with("head.out");
    const double limit = head_output
                             ? std::sqrt(6.0 / static_cast<double>(fan_in + fan_out))
                             : std::sqrt(6.0 / static_cast<double>(fan_in));
    for (std::ptrdiff_t i = 0; i < info.size; ++i)
      model.params(info.offset + i) = static_cast<T>(rng.uniform(-limit, limit));
  }
  return model;
}

// Activation storage for one sample; reuse across calls to avoid allocation.
template <typename T>
struct Workspace {
  std::vector<Mat<T>> cols;      // im2col buffer per conv id
  std::vector<Mat<T>> conv_out;  // post-activation output per conv id
  std::vector<Vec<T>> dense_in;  // input per dense id
  std::vector<Vec<T>> dense_out;
  // backward scratch
  std::vector<Mat<T>> dcols;
};

// Assembles the network input from a scan window (values sorted by phase;
// optional phase channel).
template <typename T>
Mat<T> make_input(const CnnConfig& cfg, std::span<const float> values,
                  std::span<const float> phases) {
  if (static_cast<int>(values.size()) != cfg.input_len)
    throw std::invalid_argument("input length mismatch: model expects " +
                                std::to_string(cfg.input_len) + " samples, got " +
                                std::to_string(values.size()));
  Mat<T> x(cfg.in_channels(), cfg.input_len);
  for (int i = 0; i < cfg.input_len; ++i)
    x(0, i) = static_cast<T>(values[i] * cfg.input_scale);
  if (cfg.phase_channel) {
    if (phases.size() != values.size())
      throw std::invalid_argument("phase channel requested but phases missing");
    for (int i = 0; i < cfg.input_len; ++i)
      x(1, i) = static_cast<T>(phases[i] / kTwoPi);
  }
  return x;
}

// forward pass; ws holds the activations needed by backward
template <typename T>
Vec<T> forward(const Model<T>& model, const Mat<T>& input, Workspace<T>& ws);

// Accumulates d(loss)/d(params) into grad (same layout as params) given
// d(loss)/d(output). forward() must have run on ws.
template <typename T>
void backward(const Model<T>& model, const Vec<T>& dout, Workspace<T>& ws, Vec<T>& grad);

// decoded domain outputs
SqueezedThermalParams decode_characteristic(const Eigen::VectorXd& out, const CnnConfig& cfg);
FockDensityMatrix decode_density(const Eigen::VectorXd& out, const CnnConfig& cfg);

}  // namespace sqzt::nn

#include "sqzt/nn/model_impl.hpp"
