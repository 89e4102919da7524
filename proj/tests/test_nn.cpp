#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>

#include "sqzt/dataset.hpp"
#include "sqzt/nn/checkpoint.hpp"
#include "sqzt/nn/model.hpp"
#include "sqzt/nn/train.hpp"

using namespace sqzt;
using namespace sqzt::nn;

namespace {

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

CnnConfig tiny_config() {
  CnnConfig cfg;
  cfg.input_len = 64;
  cfg.width_scale = 0.25;
  cfg.stages = 2;
  cfg.tail_layers = 1;
  cfg.head_kind = HeadKind::kCharacteristic;
  return cfg;
}

Mat<float> random_input(const CnnConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> vals(cfg.input_len), phases(cfg.input_len);
  for (int i = 0; i < cfg.input_len; ++i) {
    vals[i] = static_cast<float>(rng.gaussian());
    phases[i] = static_cast<float>(kTwoPi * i / cfg.input_len);
  }
  return make_input<float>(cfg, vals, phases);
}

}  // namespace

TEST_CASE("plan: published table at width_scale 1") {
  CnnConfig cfg;  // defaults: input 4096, full width
  const auto table = layer_table(cfg);
  // (kernel, channels, stride) rows of the published hyper-parameter table
  const std::vector<std::array<int, 3>> want = {
      {4, 96, 1},                            // stem
      {4, 96, 1},  {4, 96, 1},               // block a
      {1, 48, 4},                            // transition 1
      {4, 64, 1},  {4, 64, 1},               // block b1
      {4, 64, 1},  {4, 64, 1},               // block b2
      {1, 64, 4},                            // transition 2
      {4, 128, 1}, {4, 128, 1},              // block c1
      {4, 128, 1}, {4, 128, 1},              // block c2
      {1, 96, 4},                            // transition 3
      {4, 96, 2},  {2, 128, 2}, {2, 48, 2},  // tail
  };
  REQUIRE(table.size() == 17);  // the published 17 convolutional layers
  for (std::size_t i = 0; i < want.size(); ++i) {
    CHECK(table[i].kernel == want[i][0]);
    CHECK(table[i].channels == want[i][1]);
    CHECK(table[i].stride == want[i][2]);
  }
  const auto plan = build_plan(cfg);
  CHECK(plan.flat_len == 384);  // 4096 / (4*4*4*2*2*2) positions x 48 channels
  CHECK(plan.head.back().out == 4);
}

TEST_CASE("plan: reconstruction head emits m^2 entries") {
  CnnConfig cfg;
  cfg.head_kind = HeadKind::kReconstruction;
  cfg.m = 35;
  cfg.head_hidden = {256};
  const auto plan = build_plan(cfg);
  CHECK(plan.head.size() == 2);
  CHECK(plan.head.back().out == 1225);
}

TEST_CASE("plan: stride/length mismatch is rejected") {
  CnnConfig cfg;
  cfg.input_len = 100;  // not divisible by the stride chain
  CHECK_THROWS_AS(build_plan(cfg), std::invalid_argument);
  CnnConfig bad = tiny_config();
  bad.head_kind = HeadKind::kReconstruction;
  bad.m = 0;
  CHECK_THROWS_AS(build_plan(bad), std::invalid_argument);
}

TEST_CASE("forward: finite, pure, deterministic") {
  const CnnConfig cfg = tiny_config();
  const auto model = build_model<float>(cfg, 11);
  const Mat<float> x = random_input(cfg, 3);
  Workspace<float> ws1, ws2;
  const Vec<float> y1 = forward(model, x, ws1);
  const Vec<float> y2 = forward(model, x, ws2);
  REQUIRE(y1.size() == 4);
  for (Eigen::Index i = 0; i < y1.size(); ++i) {
    CHECK(std::isfinite(y1(i)));
    CHECK(y1(i) == y2(i));
  }
  // reusing a workspace must not change results
  const Vec<float> y3 = forward(model, x, ws1);
  CHECK(y1 == y3);
}

TEST_CASE("forward: reconstruction outputs decode to valid densities for any weights") {
  CnnConfig cfg = tiny_config();
  cfg.head_kind = HeadKind::kReconstruction;
  cfg.m = 8;
  for (std::uint64_t seed : {1ull, 77ull, 901ull}) {
    const auto model = build_model<float>(cfg, seed);
    Workspace<float> ws;
    const Vec<float> y = forward(model, random_input(cfg, seed + 5), ws);
    const auto rho = decode_density(y.cast<double>(), cfg);
    CHECK(std::abs(rho.entries.real().trace() - 1.0) <= 1e-6);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(rho.entries, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-7);
  }
}

TEST_CASE("decode: characteristic angle embedding is 2*pi consistent") {
  CnnConfig cfg = tiny_config();
  Eigen::VectorXd out(4);
  out << 0.3, std::cos(6.2), std::sin(6.2), 0.4;
  const auto p = decode_characteristic(out, cfg);
  CHECK(p.r == doctest::Approx(0.3 * cfg.r_max));
  CHECK(p.n_th == doctest::Approx(0.4 * cfg.n_max));
  CHECK(std::abs(p.theta_s - 6.2) < 1e-9);
  // clamping
  out << -0.2, 1.0, 0.0, 1.7;
  const auto q = decode_characteristic(out, cfg);
  CHECK(q.r == 0.0);
  CHECK(q.n_th == cfg.n_max);
}

TEST_CASE("checkpoint: save/load reproduces forward outputs bit-identically") {
  CnnConfig cfg = tiny_config();
  cfg.head_hidden = {16};
  const auto model = build_model<float>(cfg, 19);
  const auto path = temp_file("sqzt_test_ckpt.sqzm");
  save_checkpoint(model, {12, 1e-3, 2e-3, 19}, path.string());
  const auto loaded = load_checkpoint(path.string());
  CHECK(loaded.meta.epochs == 12);
  CHECK(loaded.meta.seed == 19);
  CHECK(loaded.model.params.size() == model.params.size());
  const Mat<float> x = random_input(cfg, 4);
  Workspace<float> wa, wb;
  const Vec<float> ya = forward(model, x, wa);
  const Vec<float> yb = forward(loaded.model, x, wb);
  for (Eigen::Index i = 0; i < ya.size(); ++i) CHECK(ya(i) == yb(i));
  std::filesystem::remove(path);
}

TEST_CASE("gradient check: analytic gradients match central differences") {
  const GradCheckResult res = gradient_check(tiny_config(), 2024, 220);
  CHECK(res.checked >= 200);
  CHECK(res.max_rel_error <= 1e-6);
}

TEST_CASE("gradient check: reconstruction head too") {
  CnnConfig cfg = tiny_config();
  cfg.head_kind = HeadKind::kReconstruction;
  cfg.m = 5;
  cfg.head_hidden = {12};
  const GradCheckResult res = gradient_check(cfg, 7, 200);
  CHECK(res.max_rel_error <= 1e-6);
}

TEST_CASE("gradients: zero input, zero targets, zero head give zero head-bias gradient") {
  const CnnConfig cfg = tiny_config();
  auto model = build_model<double>(cfg, 3);
  // zero the head tensors
  for (const auto& info : model.plan.tensors)
    if (info.name.starts_with("head."))
      model.params.segment(info.offset, info.size).setZero();
  std::vector<Mat<double>> inputs = {Mat<double>::Zero(1, cfg.input_len)};
  std::vector<Vec<double>> targets = {Vec<double>::Zero(4)};
  Vec<double> grad = Vec<double>::Zero(model.plan.param_count);
  loss_and_gradient(model, inputs, targets, &grad);
  const auto& head_bias = model.plan.tensors.back();
  REQUIRE(head_bias.name == "head.out.b");
  CHECK(grad.segment(head_bias.offset, head_bias.size).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gradients: linear in the loss scale") {
  const CnnConfig cfg = tiny_config();
  const auto model = build_model<double>(cfg, 5);
  std::vector<Mat<double>> inputs = {random_input(cfg, 8).cast<double>()};
  std::vector<Vec<double>> targets = {Vec<double>::Constant(4, 0.25)};
  Vec<double> g1 = Vec<double>::Zero(model.plan.param_count);
  Vec<double> g2 = Vec<double>::Zero(model.plan.param_count);
  loss_and_gradient(model, inputs, targets, &g1, 1.0);
  loss_and_gradient(model, inputs, targets, &g2, 2.0);
  CHECK((g2 - 2.0 * g1).cwiseAbs().maxCoeff() <= 1e-14 * g1.cwiseAbs().maxCoeff());
}

TEST_CASE("training: one epoch reduces the loss on a small set") {
  DatasetGenConfig gen;
  gen.count = 200;
  gen.seq_len = 64;
  gen.seed = 31;
  const auto path = temp_file("sqzt_test_train200.sqzt");
  gen_dataset(gen, path.string());
  const auto data = load_training_data(path.string(), false);

  CnnConfig cfg = tiny_config();
  auto model = build_model<float>(cfg, 1);

  std::vector<int> all(200);
  std::iota(all.begin(), all.end(), 0);
  const double before = evaluate_mse(model, data, all, 2);

  TrainConfig tc;
  tc.epochs = 1;
  tc.seed = 9;
  const auto result = train(model, data, tc);
  CHECK(result.history.size() == 1);
  CHECK(result.history[0].train_mse < before);
  std::filesystem::remove(path);
}

TEST_CASE("training: deterministic across runs and thread counts") {
  DatasetGenConfig gen;
  gen.count = 96;
  gen.seq_len = 64;
  gen.seed = 77;
  const auto path = temp_file("sqzt_test_det.sqzt");
  gen_dataset(gen, path.string());
  const auto data = load_training_data(path.string(), false);

  auto run = [&](int threads) {
    auto model = build_model<float>(tiny_config(), 42);
    TrainConfig tc;
    tc.epochs = 2;
    tc.seed = 5;
    tc.threads = threads;
    train(model, data, tc);
    return model.params;
  };
  const auto p1 = run(1);
  const auto p2 = run(2);
  const auto p3 = run(3);
  CHECK(p1 == p2);
  CHECK(p2 == p3);
  std::filesystem::remove(path);
}

TEST_CASE("training: label/head mismatch and empty data are rejected") {
  DatasetGenConfig gen;
  gen.count = 40;
  gen.seq_len = 64;
  gen.label_kind = LabelKind::kCholesky;
  gen.m = 6;
  gen.ranges.r_max = 0.4;
  gen.ranges.nth_max = 0.2;
  gen.seed = 3;
  const auto path = temp_file("sqzt_test_mismatch.sqzt");
  gen_dataset(gen, path.string());
  const auto data = load_training_data(path.string(), false);

  auto model = build_model<float>(tiny_config(), 1);  // characteristic head
  TrainConfig tc;
  tc.epochs = 1;
  CHECK_THROWS_AS(train(model, data, tc), std::invalid_argument);
  std::filesystem::remove(path);
}

TEST_CASE("training: memorizes 32 samples within 500 epochs") {
  DatasetGenConfig gen;
  gen.count = 36;  // 32 train + 4 validation at val_fraction 1/9
  gen.seq_len = 128;
  gen.seed = 13;
  const auto path = temp_file("sqzt_test_overfit.sqzt");
  gen_dataset(gen, path.string());
  const auto data = load_training_data(path.string(), false);

  CnnConfig cfg = tiny_config();
  cfg.input_len = 128;
  auto model = build_model<float>(cfg, 17);

  TrainConfig tc;
  tc.epochs = 500;
  tc.batch_size = 32;
  tc.val_fraction = 1.0 / 9.0;
  tc.seed = 21;
  tc.plateau_patience = 1 << 20;  // keep the rate fixed; validation cannot improve here
  const auto result = train(model, data, tc);
  CHECK(result.final_train_mse <= 1e-4);

  // smoothed (window 3) training loss is non-increasing on a memorization run
  const auto& h = result.history;
  int violations = 0;
  for (std::size_t i = 3; i + 2 < h.size(); ++i) {
    const double prev = (h[i - 3].train_mse + h[i - 2].train_mse + h[i - 1].train_mse) / 3.0;
    const double cur = (h[i].train_mse + h[i + 1].train_mse + h[i + 2].train_mse) / 3.0;
    if (cur > prev * 1.0001) ++violations;
  }
  CHECK(violations == 0);
  std::filesystem::remove(path);
}

TEST_CASE("training: loss log has one three-column line per epoch") {
  DatasetGenConfig gen;
  gen.count = 48;
  gen.seq_len = 64;
  gen.seed = 55;
  const auto data_path = temp_file("sqzt_test_log.sqzt");
  gen_dataset(gen, data_path.string());
  const auto data = load_training_data(data_path.string(), false);

  auto model = build_model<float>(tiny_config(), 2);
  TrainConfig tc;
  tc.epochs = 3;
  const auto log_path = temp_file("sqzt_test_loss.txt");
  tc.loss_log_path = log_path.string();
  train(model, data, tc);

  std::ifstream log(log_path);
  int lines = 0;
  std::string line;
  while (std::getline(log, line)) {
    int epoch;
    double tr, va;
    CHECK(std::sscanf(line.c_str(), "%d %lf %lf", &epoch, &tr, &va) == 3);
    CHECK(epoch == lines);
    ++lines;
  }
  CHECK(lines == 3);
  std::filesystem::remove(data_path);
  std::filesystem::remove(log_path);
}
