#include <cmath>

#include "sqzt/dataset.hpp"
#include "sqzt/nn/model.hpp"

namespace sqzt::nn {

namespace {

int scaled(int base, double ws) {
  return std::max(1, static_cast<int>(std::lround(base * ws)));
}

// published trunk widths
constexpr int kStemChannels = 96;
constexpr int kBlockChannels[3] = {96, 64, 128};
constexpr int kBlockCounts[3] = {1, 2, 2};
constexpr int kTransitionChannels[3] = {48, 64, 96};
struct TailSpec {
  int kernel, channels, stride;
};
constexpr TailSpec kTail[3] = {{4, 96, 2}, {2, 128, 2}, {2, 48, 2}};

struct PlanBuilder {
  ModelPlan plan;
  int conv_id = 0;
  int dense_id = 0;

  ConvPlan conv(const std::string& name, int kernel, int cin, int cout, int stride,
                bool relu, int len_in) {
    if (len_in % stride != 0)
      throw std::invalid_argument("stride " + std::to_string(stride) +
                                  " does not divide sequence length " +
                                  std::to_string(len_in) + " at layer " + name);
    ConvPlan p;
    p.name = name;
    p.kernel = kernel;
    p.cin = cin;
    p.cout = cout;
    p.stride = stride;
    p.relu = relu;
    p.len_in = len_in;
    p.len_out = len_in / stride;
    const int pad_total =
        std::max(0, (p.len_out - 1) * stride + kernel - len_in);
    p.pad_left = pad_total / 2;
    p.pad_right = pad_total - p.pad_left;
    p.id = conv_id++;
    p.w_off = plan.param_count;
    plan.tensors.push_back({name + ".w", {cout, kernel, cin}, plan.param_count,
                            static_cast<std::ptrdiff_t>(cout) * kernel * cin});
    plan.param_count += static_cast<std::ptrdiff_t>(cout) * kernel * cin;
    p.b_off = plan.param_count;
    plan.tensors.push_back({name + ".b", {cout}, plan.param_count, cout});
    plan.param_count += cout;
    return p;
  }

  DensePlan dense(const std::string& name, int in, int out, bool relu) {
    DensePlan d;
    d.name = name;
    d.in = in;
    d.out = out;
    d.relu = relu;
    d.id = dense_id++;
    d.w_off = plan.param_count;
    plan.tensors.push_back(
        {name + ".w", {out, in}, plan.param_count, static_cast<std::ptrdiff_t>(out) * in});
    plan.param_count += static_cast<std::ptrdiff_t>(out) * in;
    d.b_off = plan.param_count;
    plan.tensors.push_back({name + ".b", {out}, plan.param_count, out});
    plan.param_count += out;
    return d;
  }
};

void validate(const CnnConfig& cfg) {
  if (cfg.input_len < 8) throw std::invalid_argument("input length too small");
  if (cfg.stages < 1 || cfg.stages > 3)
    throw std::invalid_argument("stages must be in 1..3");
  if (cfg.tail_layers < 0 || cfg.tail_layers > 3)
    throw std::invalid_argument("tail_layers must be in 0..3");
  if (cfg.width_scale <= 0) throw std::invalid_argument("width_scale must be positive");
  if (cfg.head_kind == HeadKind::kReconstruction && cfg.m < 1)
    throw std::invalid_argument("reconstruction head needs m >= 1");
  for (int h : cfg.head_hidden)
    if (h < 1) throw std::invalid_argument("head widths must be positive");
}

}  // namespace

ModelPlan build_plan(const CnnConfig& cfg) {
  validate(cfg);
  PlanBuilder b;
  const double ws = cfg.width_scale;

  int len = cfg.input_len;
  int ch = cfg.in_channels();
  b.plan.stem = b.conv("stem", 4, ch, scaled(kStemChannels, ws), 1, true, len);
  ch = b.plan.stem.cout;

  for (int s = 0; s < cfg.stages; ++s) {
    StagePlan stage;
    const int bc = scaled(kBlockChannels[s], ws);
    for (int blk = 0; blk < kBlockCounts[s]; ++blk) {
      const std::string base =
          "stage" + std::to_string(s) + ".block" + std::to_string(blk);
      BlockPlan block;
      block.c1 = b.conv(base + ".conv0", 4, ch, bc, 1, true, len);
      block.c2 = b.conv(base + ".conv1", 4, bc, bc, 1, true, len);
      if (cfg.dense_shortcuts)
        ch += bc;  // concat
      else
        ch = bc;
      stage.blocks.push_back(block);
    }
    stage.transition = b.conv("transition" + std::to_string(s), 1, ch,
                              scaled(kTransitionChannels[s], ws), 4, false, len);
    ch = stage.transition.cout;
    len /= 4;
    b.plan.stages.push_back(std::move(stage));
  }

  for (int t = 0; t < cfg.tail_layers; ++t) {
    b.plan.tail.push_back(b.conv("tail" + std::to_string(t), kTail[t].kernel, ch,
                                 scaled(kTail[t].channels, ws), kTail[t].stride, true,
                                 len));
    ch = b.plan.tail.back().cout;
    len /= kTail[t].stride;
  }

  b.plan.flat_len = ch * len;
  int in = b.plan.flat_len;
  for (std::size_t i = 0; i < cfg.head_hidden.size(); ++i) {
    b.plan.head.push_back(
        b.dense("head.fc" + std::to_string(i), in, cfg.head_hidden[i], true));
    in = cfg.head_hidden[i];
  }
  b.plan.head.push_back(b.dense("head.out", in, cfg.output_dim(), false));

  b.plan.n_convs = b.conv_id;
  b.plan.n_dense = b.dense_id;
  return b.plan;
}

std::vector<LayerDesc> layer_table(const CnnConfig& cfg) {
  const ModelPlan plan = build_plan(cfg);
  std::vector<LayerDesc> out;
  auto push = [&](const ConvPlan& p) {
    out.push_back({p.name, p.kernel, p.cout, p.stride});
  };
  push(plan.stem);
  for (const auto& st : plan.stages) {
    for (const auto& bl : st.blocks) {
      push(bl.c1);
      push(bl.c2);
    }
    push(st.transition);
  }
  for (const auto& t : plan.tail) push(t);
  return out;
}

SqueezedThermalParams decode_characteristic(const Eigen::VectorXd& out, const CnnConfig& cfg) {
  if (out.size() != 4) throw std::invalid_argument("characteristic output must have 4 entries");
  const double r = std::clamp(out(0), 0.0, 1.0) * cfg.r_max;
  const double theta = wrap_angle(std::atan2(out(2), out(1)));
  const double n_th = std::clamp(out(3), 0.0, 1.0) * cfg.n_max;
  return SqueezedThermalParams(r, theta, n_th);
}

FockDensityMatrix decode_density(const Eigen::VectorXd& out, const CnnConfig& cfg) {
  if (out.size() != static_cast<Eigen::Index>(cfg.m) * cfg.m)
    throw std::invalid_argument("reconstruction output size mismatch");
  std::vector<float> packed(out.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) packed[i] = static_cast<float>(out(i));
  return density_from_cholesky(unpack_cholesky_label(packed.data(), cfg.m));
}

}  // namespace sqzt::nn
