#pragma once

#include <span>
#include <string>
#include <vector>

#include "sqzt/dataset.hpp"
#include "sqzt/nn/model.hpp"

namespace sqzt::nn {

struct TrainConfig {
  int batch_size = 32;
  int epochs = 30;
  double lr = 1e-3;  // halved on validation plateau
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double val_fraction = 0.1;  // in (0, 0.5)
  std::uint64_t seed = 1;
  int threads = 0;            // 0 = default_threads()
  int plateau_patience = 3;   // epochs without val improvement before halving
  std::string loss_log_path;  // optional: "epoch train_mse val_mse" per line
};

struct EpochStats {
  int epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  double final_train_mse = 0.0;
  double final_val_mse = 0.0;
};

// Column-per-record in-memory view of a dataset.
struct TrainingData {
  DatasetHeader header;
  Eigen::MatrixXf values;  // (seq_len, N)
  Eigen::MatrixXf phases;  // (seq_len, N); empty unless requested
  Eigen::MatrixXf labels;  // (label_len, N)
  int count() const { return static_cast<int>(values.cols()); }
};

TrainingData load_training_data(const std::string& path, bool with_phases);

// Adam on the MSE between head outputs and stored labels. Deterministic for
// a fixed seed: per-sample gradients are reduced in sample order regardless
// of the worker count. Throws on label/head mismatch or an empty dataset.
TrainResult train(Model<float>& model, const TrainingData& data, const TrainConfig& tc);

// Mean per-sample MSE over the given record indices (forward only).
double evaluate_mse(const Model<float>& model, const TrainingData& data,
                    std::span<const int> indices, int threads);

// loss = loss_scale * mean_{samples, dims} (y - t)^2, gradient accumulated
// into grad (sequential; used by the finite-difference checks).
template <typename T>
double loss_and_gradient(const Model<T>& model, const std::vector<Mat<T>>& inputs,
                         const std::vector<Vec<T>>& targets, Vec<T>* grad,
                         double loss_scale = 1.0) {
  const int b = static_cast<int>(inputs.size());
  const int dim = model.config.output_dim();
  Workspace<T> ws;
  double loss = 0.0;
  for (int i = 0; i < b; ++i) {
    const Vec<T> y = forward(model, inputs[i], ws);
    const Vec<T> e = y - targets[i];
    loss += static_cast<double>(e.squaredNorm());
    if (grad) {
      const Vec<T> dout = e * static_cast<T>(2.0 * loss_scale / (b * dim));
      backward(model, dout, ws, *grad);
    }
  }
  return loss_scale * loss / (static_cast<double>(b) * dim);
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  int checked = 0;
};

// Central-difference validation of the analytic gradient on a reduced
// double-precision model; checks n_params randomly chosen parameters.
GradCheckResult gradient_check(const CnnConfig& cfg, std::uint64_t seed,
                               int n_params = 200, double step = 1e-5);

}  // namespace sqzt::nn
