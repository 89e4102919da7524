#include "sqzt/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>
#include <thread>

#include "sqzt/parallel.hpp"

namespace sqzt::nn {

TrainingData load_training_data(const std::string& path, bool with_phases) {
  DatasetReader reader(path);
  const auto& h = reader.header();
  TrainingData data;
  data.header = h;
  data.values.resize(h.seq_len, h.count);
  data.labels.resize(h.label_len(), h.count);
  if (with_phases) data.phases.resize(h.seq_len, h.count);
  for (std::uint32_t i = 0; i < h.count; ++i) {
    const DatasetRecord rec = reader.record(i);
    std::copy(rec.values.begin(), rec.values.end(), data.values.col(i).data());
    std::copy(rec.labels.begin(), rec.labels.end(), data.labels.col(i).data());
    if (with_phases)
      std::copy(rec.phases.begin(), rec.phases.end(), data.phases.col(i).data());
  }
  return data;
}

namespace {

void check_compat(const Model<float>& model, const TrainingData& data) {
  const auto& h = data.header;
  if (data.count() == 0) throw std::invalid_argument("train: empty dataset");
  if (static_cast<int>(h.seq_len) != model.config.input_len)
    throw std::invalid_argument("train: dataset seq_len " + std::to_string(h.seq_len) +
                                " != model input length " +
                                std::to_string(model.config.input_len));
  const bool char_head = model.config.head_kind == HeadKind::kCharacteristic;
  if (char_head && h.label_kind != LabelKind::kParams4)
    throw std::invalid_argument("train: characteristic head needs params labels");
  if (!char_head && h.label_kind != LabelKind::kCholesky)
    throw std::invalid_argument("train: reconstruction head needs Cholesky labels");
  if (!char_head && static_cast<int>(h.m) != model.config.m)
    throw std::invalid_argument("train: dataset m != model m");
  if (model.config.phase_channel && data.phases.size() == 0)
    throw std::invalid_argument("train: phase channel requested but phases not loaded");
}

struct SampleRunner {
  const Model<float>& model;
  const TrainingData& data;
  int dim;

  Mat<float> input_for(int record) const {
    std::span<const float> vals(data.values.col(record).data(), data.header.seq_len);
    std::span<const float> phs;
    if (model.config.phase_channel)
      phs = {data.phases.col(record).data(), data.header.seq_len};
    return make_input<float>(model.config, vals, phs);
  }

  // returns per-sample mse; fills grad if non-null (scaled by 2/(batch*dim))
  double run(int record, Workspace<float>& ws, Vec<float>* grad, int batch) const {
    const Mat<float> x = input_for(record);
    const Vec<float> y = forward(model, x, ws);
    Eigen::Map<const Eigen::VectorXf> t(data.labels.col(record).data(), dim);
    const Vec<float> e = y - t;
    if (grad) {
      const Vec<float> dout = e * (2.0f / static_cast<float>(batch) / static_cast<float>(dim));
      backward(model, dout, ws, *grad);
    }
    return static_cast<double>(e.squaredNorm()) / dim;
  }
};

// contiguous chunks over [0, n) executed by worker threads with stable ids
void run_chunked(int n, int threads, const std::function<void(int, int, int)>& body) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    body(0, n, 0);
    return;
  }
  std::vector<std::thread> pool;
  const int per = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int lo = t * per, hi = std::min(n, lo + per);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi, t] { body(lo, hi, t); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

double evaluate_mse(const Model<float>& model, const TrainingData& data,
                    std::span<const int> indices, int threads) {
  if (threads <= 0) threads = default_threads();
  const int n = static_cast<int>(indices.size());
  if (n == 0) return 0.0;
  SampleRunner runner{model, data, model.config.output_dim()};
  std::vector<double> losses(n, 0.0);
  std::vector<Workspace<float>> ws(std::max(1, std::min(threads, n)));
  run_chunked(n, threads, [&](int lo, int hi, int tid) {
    for (int i = lo; i < hi; ++i) losses[i] = runner.run(indices[i], ws[tid], nullptr, 1);
  });
  double sum = 0.0;
  for (double l : losses) sum += l;  // fixed order
  return sum / n;
}

TrainResult train(Model<float>& model, const TrainingData& data, const TrainConfig& tc) {
  check_compat(model, data);
  if (tc.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (!(tc.val_fraction > 0.0 && tc.val_fraction < 0.5))
    throw std::invalid_argument("train: val_fraction must be in (0, 0.5)");

  const int n_total = data.count();
  const int n_val = std::max(1, static_cast<int>(std::lround(n_total * tc.val_fraction)));
  const int n_train = n_total - n_val;
  if (n_train < 1) throw std::invalid_argument("train: no training records left");

  std::vector<int> train_idx(n_train), val_idx(n_val);
  std::iota(train_idx.begin(), train_idx.end(), 0);
  std::iota(val_idx.begin(), val_idx.end(), n_train);

  const int threads = tc.threads > 0 ? tc.threads : default_threads();
  const std::ptrdiff_t n_params = model.plan.param_count;
  SampleRunner runner{model, data, model.config.output_dim()};

  // Adam state
  Eigen::VectorXf adam_m = Eigen::VectorXf::Zero(n_params);
  Eigen::VectorXf adam_v = Eigen::VectorXf::Zero(n_params);
  long step_t = 0;
  double lr = tc.lr;

  std::vector<Vec<float>> sample_grads(tc.batch_size);
  for (auto& g : sample_grads) g = Vec<float>::Zero(n_params);
  Vec<float> batch_grad = Vec<float>::Zero(n_params);
  std::vector<double> sample_losses(tc.batch_size, 0.0);
  std::vector<Workspace<float>> ws(std::max(1, std::min(threads, tc.batch_size)));

  std::ofstream log;
  if (!tc.loss_log_path.empty()) {
    log.open(tc.loss_log_path);
    if (!log) throw std::runtime_error("cannot write loss log: " + tc.loss_log_path);
  }

  TrainResult result;
  double best_val = std::numeric_limits<double>::infinity();
  int stall = 0;
  Rng shuffle_rng(derive_seed(tc.seed, 0x5u));

  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    // Fisher-Yates with the run seed; order is part of the determinism contract
    for (int i = n_train - 1; i > 0; --i) {
      const int j = static_cast<int>(shuffle_rng.next_u64() % static_cast<std::uint64_t>(i + 1));
      std::swap(train_idx[i], train_idx[j]);
    }

    double train_loss_sum = 0.0;
    int train_loss_count = 0;
    for (int base = 0; base < n_train; base += tc.batch_size) {
      const int bsz = std::min(tc.batch_size, n_train - base);
      run_chunked(bsz, threads, [&](int lo, int hi, int tid) {
        for (int i = lo; i < hi; ++i) {
          sample_grads[i].setZero();
          sample_losses[i] =
              runner.run(train_idx[base + i], ws[tid], &sample_grads[i], bsz);
        }
      });
      batch_grad.setZero();
      for (int i = 0; i < bsz; ++i) {
        batch_grad += sample_grads[i];
        train_loss_sum += sample_losses[i];
      }
      train_loss_count += bsz;

      // Adam
      ++step_t;
      const float b1 = static_cast<float>(tc.beta1), b2 = static_cast<float>(tc.beta2);
      const float corr1 = 1.0f - std::pow(b1, static_cast<float>(step_t));
      const float corr2 = 1.0f - std::pow(b2, static_cast<float>(step_t));
      adam_m = b1 * adam_m + (1.0f - b1) * batch_grad;
      adam_v = b2 * adam_v + (1.0f - b2) * batch_grad.cwiseProduct(batch_grad);
      const float alpha = static_cast<float>(lr);
      const float eps = static_cast<float>(tc.eps);
      model.params.array() -= alpha * (adam_m.array() / corr1) /
                              ((adam_v.array() / corr2).sqrt() + eps);
    }

    const double train_mse = train_loss_sum / train_loss_count;
    const double val_mse = evaluate_mse(model, data, val_idx, threads);
    result.history.push_back({epoch, train_mse, val_mse, lr});
    if (log) {
      log << epoch << ' ' << train_mse << ' ' << val_mse << '\n';
      log.flush();
    }

    if (val_mse < best_val - 1e-12) {
      best_val = val_mse;
      stall = 0;
    } else if (++stall >= tc.plateau_patience) {
      lr *= 0.5;
      stall = 0;
    }
  }

  if (!result.history.empty()) {
    result.final_train_mse = result.history.back().train_mse;
    result.final_val_mse = result.history.back().val_mse;
  }
  return result;
}

GradCheckResult gradient_check(const CnnConfig& cfg, std::uint64_t seed, int n_params,
                               double step) {
  Model<double> model = build_model<double>(cfg, seed);
  Rng rng(derive_seed(seed, 1));

  const int batch = 3;
  std::vector<Mat<double>> inputs;
  std::vector<Vec<double>> targets;
  for (int b = 0; b < batch; ++b) {
    std::vector<float> vals(cfg.input_len), phases(cfg.input_len);
    for (int i = 0; i < cfg.input_len; ++i) {
      phases[i] = static_cast<float>(kTwoPi * i / cfg.input_len);
      vals[i] = static_cast<float>(rng.gaussian());
    }
    inputs.push_back(make_input<double>(cfg, vals, phases));
    Vec<double> t(cfg.output_dim());
    for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = 0.5 * rng.gaussian();
    targets.push_back(std::move(t));
  }

  Vec<double> grad = Vec<double>::Zero(model.plan.param_count);
  loss_and_gradient(model, inputs, targets, &grad);

  std::set<std::ptrdiff_t> picked;
  while (static_cast<int>(picked.size()) < std::min<std::ptrdiff_t>(n_params, model.plan.param_count))
    picked.insert(static_cast<std::ptrdiff_t>(rng.next_u64() % model.plan.param_count));

  GradCheckResult res;
  for (std::ptrdiff_t idx : picked) {
    const double saved = model.params(idx);
    model.params(idx) = saved + step;
    const double lp = loss_and_gradient<double>(model, inputs, targets, nullptr);
    model.params(idx) = saved - step;
    const double lm = loss_and_gradient<double>(model, inputs, targets, nullptr);
    model.params(idx) = saved;
    const double fd = (lp - lm) / (2.0 * step);
    const double ga = grad(idx);
    const double denom = std::max({std::abs(ga), std::abs(fd), 1e-8});
    res.max_rel_error = std::max(res.max_rel_error, std::abs(ga - fd) / denom);
    ++res.checked;
  }
  return res;
}

}  // namespace sqzt::nn
