// sqzt: squeezed-light homodyne tomography toolkit.
//
// Subcommands: gen, train, predict, mle, covfit, fit-degradation, report,
// export. Every run writes a <out>.manifest.json with the resolved
// configuration and seeds; deterministic subcommands reproduce their outputs
// bit-for-bit when re-run from the same arguments.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "sqzt/baselines.hpp"
#include "sqzt/dataset.hpp"
#include "sqzt/degradation.hpp"
#include "sqzt/fock.hpp"
#include "sqzt/homodyne.hpp"
#include "sqzt/nn/checkpoint.hpp"
#include "sqzt/nn/train.hpp"
#include "sqzt/parallel.hpp"
#include "sqzt/version.hpp"

namespace {

using json = nlohmann::json;
using namespace sqzt;

// All floating-point report output is rounded to 9 significant digits so
// reruns diff cleanly.
json jnum(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return json::parse(buf);
}

json jlevels(const NoiseLevels& lv) {
  return json{{"sqz_db", jnum(lv.sqz_db)}, {"asqz_db", jnum(lv.asqz_db)}};
}

json jparams(const SqueezedThermalParams& p) {
  return json{{"r", jnum(p.r)}, {"theta_s", jnum(p.theta_s)}, {"n_th", jnum(p.n_th)}};
}

json jphoton(const PhotonDecomposition& d) {
  json out{{"n_total", jnum(d.n_total)},
           {"n_sq", jnum(d.n_sq)},
           {"n_other", jnum(d.n_other)}};
  if (d.sigma) out["sigma"] = jnum(*d.sigma);
  return out;
}

json jpacked(const FockDensityMatrix& rho) {
  const auto packed = pack_cholesky_label(cholesky_factor(rho));
  json arr = json::array();
  for (float v : packed) arr.push_back(jnum(v));
  return arr;
}

void write_json(const json& doc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

struct ManifestClock {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void write(const std::string& subcommand, const json& config,
             const std::vector<std::string>& inputs,
             const std::vector<std::string>& outputs) const {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json doc{{"subcommand", subcommand}, {"config", config},
             {"inputs", inputs},        {"outputs", outputs},
             {"tool_version", kVersion}, {"duration_seconds", jnum(secs)}};
    write_json(doc, outputs.at(0) + ".manifest.json");
  }
};

// scan -> fixed-length model input, resampling long records
QuadratureScan fit_scan_to(const QuadratureScan& scan, int input_len,
                           std::uint64_t resample_seed) {
  if (static_cast<int>(scan.size()) == input_len) return scan;
  if (static_cast<int>(scan.size()) > input_len)
    return resample_scan(scan, input_len, resample_seed);
  throw std::runtime_error("scan has " + std::to_string(scan.size()) +
                           " samples but the model needs " + std::to_string(input_len));
}

std::vector<float> to_floats(const std::vector<double>& v) {
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
  return out;
}

json predict_with_checkpoint(const nn::LoadedCheckpoint& ckpt, const QuadratureScan& scan,
                             std::uint64_t resample_seed) {
  const auto& cfg = ckpt.model.config;
  const QuadratureScan window = fit_scan_to(scan, cfg.input_len, resample_seed);
  const auto values = to_floats(window.values);
  const auto phases = to_floats(window.phases);
  const auto input = nn::make_input<float>(cfg, values, phases);
  nn::Workspace<float> ws;
  const Eigen::VectorXd out = nn::forward(ckpt.model, input, ws).cast<double>();

  if (cfg.head_kind == nn::HeadKind::kCharacteristic) {
    const auto p = nn::decode_characteristic(out, cfg);
    return json{{"kind", "characteristic"},
                {"params", jparams(p)},
                {"levels", jlevels(levels_from_estimate(p))},
                {"photon", jphoton(photon_report(p))}};
  }
  const auto rho = nn::decode_density(out, cfg);
  return json{{"kind", "reconstruction"},
              {"m", cfg.m},
              {"cholesky_packed", jpacked(rho)},
              {"levels", jlevels(levels_from_estimate(rho))},
              {"photon", jphoton(photon_report(rho))}};
}

json run_covfit(const QuadratureScan& scan, int bins) {
  const auto fit = fit_variance_model(binned_variances(scan, bins));
  json out{{"a", jnum(fit.a)},
           {"b", jnum(fit.b)},
           {"c", jnum(fit.c)},
           {"physical", fit.physical},
           {"residual_rms", jnum(fit.residual_rms)},
           {"bins_used", fit.bins_used}};
  if (fit.params) {
    out["params"] = jparams(*fit.params);
    out["levels"] = jlevels(levels_from_estimate(*fit.params));
  }
  return out;
}

json run_mle(const QuadratureScan& scan, const MleConfig& cfg) {
  const auto res = mle_reconstruct(scan, cfg);
  return json{{"m", cfg.m},
              {"iterations", res.iterations},
              {"converged", res.converged},
              {"final_log_likelihood", jnum(res.log_likelihood.back())},
              {"cholesky_packed", jpacked(res.rho)},
              {"levels", jlevels(levels_from_estimate(res.rho))},
              {"photon", jphoton(photon_report(res.rho))}};
}

std::vector<NoiseLevels> read_levels_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open points file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty points file: " + path);
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
  if (line != "sqz_db,asqz_db")
    throw std::runtime_error(path + ":1: expected header 'sqz_db,asqz_db'");
  std::vector<NoiseLevels> pts;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected two fields");
    try {
      pts.push_back({std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed numeric field");
    }
  }
  return pts;
}

json fit_to_json(const DegradationFit& fit, double curve_max_r, int curve_points) {
  json points = json::array();
  for (const auto& pt : fit.points)
    points.push_back(json{{"sqz_db", jnum(pt.sqz_db)},
                          {"asqz_db", jnum(pt.asqz_db)},
                          {"r_proj", jnum(pt.r_proj)},
                          {"residual_db", jnum(pt.residual_db)}});
  json curve = json::array();
  for (int i = 0; i < curve_points; ++i) {
    const double r = curve_max_r * i / (curve_points - 1);
    const auto lv = degraded_levels(r, fit.params);
    curve.push_back(
        json{{"r", jnum(r)}, {"sqz_db", jnum(lv.sqz_db)}, {"asqz_db", jnum(lv.asqz_db)}});
  }
  return json{{"loss", jnum(fit.params.loss)},
              {"theta_pn", jnum(fit.params.theta_pn)},
              {"sigma_band",
               {{"loss", jnum(fit.sigma_band.loss)}, {"theta_pn", jnum(fit.sigma_band.theta_pn)}}},
              {"objective", jnum(fit.objective)},
              {"converged", fit.converged},
              {"flat_objective", fit.flat_objective},
              {"points", points},
              {"curve", curve}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"squeezed-light homodyne tomography toolkit"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker thread cap (default: SQZT_THREADS or hardware)");

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "generate a training dataset");
  DatasetGenConfig gen_cfg;
  std::string gen_labels = "params";
  std::string gen_out;
  gen->add_option("--n", gen_cfg.count, "record count")->required();
  gen->add_option("--seq-len", gen_cfg.seq_len, "samples per scan (default 4096)");
  gen->add_option("--labels", gen_labels, "params | cholesky");
  gen->add_option("--m", gen_cfg.m, "truncation dimension (cholesky labels)");
  gen->add_option("--seed", gen_cfg.seed, "master seed");
  gen->add_option("--r-min", gen_cfg.ranges.r_min);
  gen->add_option("--r-max", gen_cfg.ranges.r_max);
  gen->add_option("--theta-min", gen_cfg.ranges.theta_min);
  gen->add_option("--theta-max", gen_cfg.ranges.theta_max);
  gen->add_option("--nth-min", gen_cfg.ranges.nth_min);
  gen->add_option("--nth-max", gen_cfg.ranges.nth_max);
  gen->add_option("--mass-floor", gen_cfg.mass_floor, "truncation mass floor (cholesky labels)");
  gen->add_option("--out", gen_out, "output dataset path")->required();

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "train a model on a dataset");
  std::string train_data, train_out, train_loss_log;
  nn::TrainConfig train_tc;
  double train_width = 0.25;
  std::vector<int> train_hidden;
  double train_input_scale = 1.0;
  bool train_phase_channel = false;
  int train_stages = 3, train_tail = 3;
  std::uint64_t model_seed = 1;
  train_cmd->add_option("--data", train_data, "dataset path")->required();
  train_cmd->add_option("--out", train_out, "checkpoint path")->required();
  train_cmd->add_option("--epochs", train_tc.epochs, "training epochs (default 30)");
  train_cmd->add_option("--batch", train_tc.batch_size, "batch size (default 32)");
  train_cmd->add_option("--lr", train_tc.lr, "Adam learning rate (default 1e-3)");
  train_cmd->add_option("--val-frac", train_tc.val_fraction, "validation fraction");
  train_cmd->add_option("--seed", train_tc.seed, "training seed (shuffle + init)");
  train_cmd->add_option("--width-scale", train_width, "channel width factor (default 0.25)");
  train_cmd->add_option("--stages", train_stages, "conv-block stages, 1..3 (default 3)");
  train_cmd->add_option("--tail-layers", train_tail, "trailing strided convs, 0..3 (default 3)");
  train_cmd->add_option("--head-hidden", train_hidden, "extra fully connected widths");
  train_cmd->add_option("--input-scale", train_input_scale, "input value scaling");
  train_cmd->add_flag("--phase-channel", train_phase_channel, "feed phases as a second channel");
  train_cmd->add_option("--patience", train_tc.plateau_patience, "plateau epochs before halving lr");
  train_cmd->add_option("--loss-log", train_loss_log, "per-epoch loss log path");

  // ---- predict ----
  auto* predict = app.add_subcommand("predict", "run a trained model on a scan");
  std::string pr_ckpt, pr_scan, pr_out;
  std::uint64_t pr_resample_seed = 1;
  predict->add_option("--ckpt", pr_ckpt, "checkpoint path")->required();
  predict->add_option("--scan", pr_scan, "scan CSV")->required();
  predict->add_option("--out", pr_out, "output JSON")->required();
  predict->add_option("--resample-seed", pr_resample_seed, "seed for down-sampling long scans");

  // ---- mle ----
  auto* mle = app.add_subcommand("mle", "iterative maximum-likelihood reconstruction");
  std::string mle_scan, mle_out;
  MleConfig mle_cfg;
  mle->add_option("--scan", mle_scan, "scan CSV")->required();
  mle->add_option("--out", mle_out, "output JSON")->required();
  mle->add_option("--m", mle_cfg.m, "truncation dimension (default 15)");
  mle->add_option("--x-max", mle_cfg.x_max, "quadrature grid half-width (default 12)");
  mle->add_option("--x-bins", mle_cfg.x_bins, "quadrature bins (default 256)");
  mle->add_option("--phase-bins", mle_cfg.phase_bins, "phase bins (default 24)");
  mle->add_option("--max-iter", mle_cfg.max_iter, "iteration cap (default 1000)");
  mle->add_option("--tol", mle_cfg.tol, "trace-distance stop tolerance");

  // ---- covfit ----
  auto* covfit = app.add_subcommand("covfit", "covariance-method variance fit");
  std::string cov_scan, cov_out;
  int cov_bins = 24;
  covfit->add_option("--scan", cov_scan, "scan CSV")->required();
  covfit->add_option("--out", cov_out, "output JSON")->required();
  covfit->add_option("--bins", cov_bins, "phase bins (default 24)");

  // ---- fit-degradation ----
  auto* fitdeg = app.add_subcommand("fit-degradation",
                                    "loss/phase-noise fit of (SQZ, ASQZ) points");
  std::string deg_points, deg_out, deg_metric = "db";
  double deg_curve_max_r = 2.0;
  int deg_curve_points = 101;
  fitdeg->add_option("--points", deg_points, "CSV with header sqz_db,asqz_db")->required();
  fitdeg->add_option("--out", deg_out, "output JSON")->required();
  fitdeg->add_option("--metric", deg_metric, "db | linear (orthogonal-distance metric)");
  fitdeg->add_option("--curve-max-r", deg_curve_max_r, "exported curve range");
  fitdeg->add_option("--curve-points", deg_curve_points, "exported curve resolution");

  // ---- report ----
  auto* report = app.add_subcommand("report", "run all estimators on one scan");
  std::string rep_scan, rep_out, rep_char, rep_recon;
  MleConfig rep_mle_cfg;
  int rep_bins = 24;
  std::uint64_t rep_resample_seed = 1;
  report->add_option("--scan", rep_scan, "scan CSV")->required();
  report->add_option("--out", rep_out, "output JSON")->required();
  report->add_option("--char-ckpt", rep_char, "characteristic checkpoint (optional)");
  report->add_option("--recon-ckpt", rep_recon, "reconstruction checkpoint (optional)");
  report->add_option("--m", rep_mle_cfg.m, "MLE truncation dimension (default 15)");
  report->add_option("--bins", rep_bins, "covariance-fit phase bins");
  report->add_option("--max-iter", rep_mle_cfg.max_iter, "MLE iteration cap");
  report->add_option("--resample-seed", rep_resample_seed, "seed for down-sampling long scans");

  // ---- export ----
  auto* exp = app.add_subcommand("export", "generate a scan and write it as CSV");
  double exp_r = 0.0, exp_theta = 0.0, exp_nth = 0.0;
  int exp_n = 4096;
  std::string exp_mode = "uniform-random-sorted", exp_out;
  std::uint64_t exp_seed = 0;
  exp->add_option("--r", exp_r, "squeezing ratio");
  exp->add_option("--theta-s", exp_theta, "squeezing angle (rad)");
  exp->add_option("--n-th", exp_nth, "thermal occupation");
  exp->add_option("--n", exp_n, "sample count (default 4096)");
  exp->add_option("--mode", exp_mode, "uniform-random-sorted | linear-ramp | triangle");
  exp->add_option("--seed", exp_seed, "sampler seed");
  exp->add_option("--out", exp_out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "{\"error\":\"" << e.what() << "\"}\n";
    return 2;
  }

  ManifestClock clock;
  try {
    if (*gen) {
      gen_cfg.label_kind = gen_labels == "cholesky" ? LabelKind::kCholesky
                           : gen_labels == "params" ? LabelKind::kParams4
                                                    : throw std::runtime_error(
                                                          "unknown label kind: " + gen_labels);
      gen_cfg.threads = threads;
      gen_dataset(gen_cfg, gen_out);
      clock.write("gen",
                  json{{"n", gen_cfg.count},
                       {"seq_len", gen_cfg.seq_len},
                       {"labels", gen_labels},
                       {"m", gen_cfg.m},
                       {"seed", gen_cfg.seed},
                       {"mass_floor", jnum(gen_cfg.mass_floor)},
                       {"ranges",
                        {{"r", {jnum(gen_cfg.ranges.r_min), jnum(gen_cfg.ranges.r_max)}},
                         {"theta", {jnum(gen_cfg.ranges.theta_min), jnum(gen_cfg.ranges.theta_max)}},
                         {"n_th", {jnum(gen_cfg.ranges.nth_min), jnum(gen_cfg.ranges.nth_max)}}}},
                       {"threads", threads}},
                  {}, {gen_out});
    } else if (*train_cmd) {
      const auto probe = DatasetReader(train_data).header();
      nn::CnnConfig cfg;
      cfg.input_len = static_cast<int>(probe.seq_len);
      cfg.width_scale = train_width;
      cfg.stages = train_stages;
      cfg.tail_layers = train_tail;
      cfg.head_kind = probe.label_kind == LabelKind::kParams4
                          ? nn::HeadKind::kCharacteristic
                          : nn::HeadKind::kReconstruction;
      cfg.m = static_cast<int>(probe.m);
      cfg.head_hidden = train_hidden;
      cfg.phase_channel = train_phase_channel;
      cfg.input_scale = train_input_scale;
      cfg.r_max = probe.ranges.r_max;
      cfg.n_max = probe.ranges.nth_max;
      auto model = nn::build_model<float>(cfg, train_tc.seed);
      model_seed = train_tc.seed;

      const auto data = nn::load_training_data(train_data, train_phase_channel);
      train_tc.threads = threads;
      train_tc.loss_log_path = train_loss_log.empty() ? train_out + ".loss.txt" : train_loss_log;
      const auto result = nn::train(model, data, train_tc);
      nn::save_checkpoint(model,
                          {train_tc.epochs, result.final_train_mse, result.final_val_mse,
                           train_tc.seed},
                          train_out);
      std::cout << "final train MSE " << result.final_train_mse << ", val MSE "
                << result.final_val_mse << "\n";
      clock.write("train",
                  json{{"data", train_data},
                       {"epochs", train_tc.epochs},
                       {"batch", train_tc.batch_size},
                       {"lr", jnum(train_tc.lr)},
                       {"val_frac", jnum(train_tc.val_fraction)},
                       {"seed", train_tc.seed},
                       {"model_seed", model_seed},
                       {"width_scale", jnum(train_width)},
                       {"head_hidden", train_hidden},
                       {"phase_channel", train_phase_channel},
                       {"input_scale", jnum(train_input_scale)},
                       {"patience", train_tc.plateau_patience},
                       {"config", json::parse(nn::config_to_json(cfg))},
                       {"final_train_mse", jnum(result.final_train_mse)},
                       {"final_val_mse", jnum(result.final_val_mse)},
                       {"threads", threads}},
                  {train_data}, {train_out, train_tc.loss_log_path});
    } else if (*predict) {
      const auto ckpt = nn::load_checkpoint(pr_ckpt);
      const auto scan = ingest_csv(pr_scan);
      json out = predict_with_checkpoint(ckpt, scan, pr_resample_seed);
      write_json(out, pr_out);
      clock.write("predict",
                  json{{"ckpt", pr_ckpt}, {"scan", pr_scan},
                       {"resample_seed", pr_resample_seed}},
                  {pr_ckpt, pr_scan}, {pr_out});
    } else if (*mle) {
      const auto scan = ingest_csv(mle_scan);
      write_json(run_mle(scan, mle_cfg), mle_out);
      clock.write("mle",
                  json{{"scan", mle_scan},
                       {"m", mle_cfg.m},
                       {"x_max", jnum(mle_cfg.x_max)},
                       {"x_bins", mle_cfg.x_bins},
                       {"phase_bins", mle_cfg.phase_bins},
                       {"max_iter", mle_cfg.max_iter},
                       {"tol", jnum(mle_cfg.tol)}},
                  {mle_scan}, {mle_out});
    } else if (*covfit) {
      const auto scan = ingest_csv(cov_scan);
      write_json(run_covfit(scan, cov_bins), cov_out);
      clock.write("covfit", json{{"scan", cov_scan}, {"bins", cov_bins}}, {cov_scan},
                  {cov_out});
    } else if (*fitdeg) {
      DegradationFitOptions opt;
      if (deg_metric == "db")
        opt.metric = FitMetric::kDecibel;
      else if (deg_metric == "linear")
        opt.metric = FitMetric::kLinearVariance;
      else
        throw std::runtime_error("unknown metric: " + deg_metric);
      const auto pts = read_levels_csv(deg_points);
      const auto fit = fit_degradation(pts, opt);
      write_json(fit_to_json(fit, deg_curve_max_r, deg_curve_points), deg_out);
      clock.write("fit-degradation",
                  json{{"points", deg_points},
                       {"metric", deg_metric},
                       {"curve_max_r", jnum(deg_curve_max_r)},
                       {"curve_points", deg_curve_points}},
                  {deg_points}, {deg_out});
    } else if (*report) {
      const auto scan = ingest_csv(rep_scan);
      json doc;
      doc["covfit"] = run_covfit(scan, rep_bins);
      doc["mle"] = run_mle(scan, rep_mle_cfg);
      std::vector<std::string> inputs = {rep_scan};
      if (!rep_char.empty()) {
        doc["characteristic"] =
            predict_with_checkpoint(nn::load_checkpoint(rep_char), scan, rep_resample_seed);
        inputs.push_back(rep_char);
      }
      if (!rep_recon.empty()) {
        doc["reconstruction"] =
            predict_with_checkpoint(nn::load_checkpoint(rep_recon), scan, rep_resample_seed);
        inputs.push_back(rep_recon);
      }
      write_json(doc, rep_out);
      clock.write("report",
                  json{{"scan", rep_scan},
                       {"char_ckpt", rep_char},
                       {"recon_ckpt", rep_recon},
                       {"m", rep_mle_cfg.m},
                       {"bins", rep_bins},
                       {"max_iter", rep_mle_cfg.max_iter},
                       {"resample_seed", rep_resample_seed}},
                  inputs, {rep_out});
    } else if (*exp) {
      const auto scan = sample_scan(SqueezedThermalParams(exp_r, exp_theta, exp_nth), exp_n,
                                    phase_mode_from_string(exp_mode), exp_seed);
      export_csv(scan, exp_out);
      clock.write("export",
                  json{{"r", jnum(exp_r)},
                       {"theta_s", jnum(exp_theta)},
                       {"n_th", jnum(exp_nth)},
                       {"n", exp_n},
                       {"mode", exp_mode},
                       {"seed", exp_seed}},
                  {}, {exp_out});
    }
  } catch (const std::exception& e) {
    json err{{"error", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
