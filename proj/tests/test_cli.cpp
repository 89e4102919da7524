#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sqzt/dataset.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string bin() {
  const char* b = std::getenv("SQZT_BIN");
  REQUIRE_MESSAGE(b != nullptr, "SQZT_BIN must point at the sqzt binary");
  return b;
}

int run(const std::string& args) {
  const std::string cmd = bin() + " " + args + " >/dev/null 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

fs::path tmp(const char* name) { return fs::temp_directory_path() / name; }

std::string sha_of(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return std::to_string(std::hash<std::string>{}(ss.str()));
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  return json::parse(in);
}

}  // namespace

TEST_CASE("cli: gen writes a readable dataset plus manifest, reproducibly") {
  const auto out = tmp("cli_gen.sqzt");
  const std::string args = "gen --n 50 --seq-len 64 --labels params --seed 1 --out " +
                           out.string();
  CHECK(run(args) == 0);
  sqzt::DatasetReader reader(out.string());
  CHECK(reader.header().count == 50);
  CHECK(fs::exists(out.string() + ".manifest.json"));
  const json manifest = read_json(out.string() + ".manifest.json");
  CHECK(manifest["subcommand"] == "gen");
  CHECK(manifest["tool_version"].is_string());

  const auto hash1 = sha_of(out);
  CHECK(run(args) == 0);
  CHECK(sha_of(out) == hash1);  // determinism: same args, same bytes
  fs::remove(out);
  fs::remove(out.string() + ".manifest.json");
}

TEST_CASE("cli: usage errors exit with code 2") {
  CHECK(run("gen --n 10") == 2);                    // missing --out
  CHECK(run("definitely-not-a-subcommand") == 2);
  CHECK(run("") == 2);                              // a subcommand is required
}

TEST_CASE("cli: runtime failures exit with code 1 and one-line JSON error") {
  const std::string cmd = bin() + " covfit --scan /nonexistent.csv --out /tmp/x.json 2>" +
                          tmp("cli_err.txt").string() + " >/dev/null";
  CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 1);
  std::ifstream err(tmp("cli_err.txt"));
  std::string line;
  REQUIRE(std::getline(err, line));
  const json parsed = json::parse(line);
  CHECK(parsed.contains("error"));
  CHECK_FALSE(std::getline(err, line));  // exactly one line
  fs::remove(tmp("cli_err.txt"));
}

TEST_CASE("cli: export then covfit round trip") {
  const auto scan = tmp("cli_scan.csv");
  const auto fitj = tmp("cli_covfit.json");
  CHECK(run("export --r 0.5 --theta-s 1.2 --n-th 0.1 --n 4096 --seed 5 --out " +
            scan.string()) == 0);
  CHECK(run("covfit --scan " + scan.string() + " --out " + fitj.string()) == 0);
  const json fit = read_json(fitj);
  CHECK(fit["physical"] == true);
  CHECK(std::abs(fit["params"]["r"].get<double>() - 0.5) < 0.1);
  CHECK(std::abs(fit["params"]["n_th"].get<double>() - 0.1) < 0.1);
  fs::remove(scan);
  fs::remove(fitj);
  fs::remove(fitj.string() + ".manifest.json");
  fs::remove(scan.string() + ".manifest.json");
}

TEST_CASE("cli: mle on an exported vacuum scan") {
  const auto scan = tmp("cli_vac.csv");
  const auto outj = tmp("cli_mle.json");
  CHECK(run("export --n 2048 --seed 9 --out " + scan.string()) == 0);
  CHECK(run("mle --scan " + scan.string() + " --m 8 --max-iter 200 --out " + outj.string()) ==
        0);
  const json mle = read_json(outj);
  CHECK(mle["m"] == 8);
  CHECK(mle["cholesky_packed"].size() == 64);
  // vacuum: levels close to 0 dB
  CHECK(std::abs(mle["levels"]["sqz_db"].get<double>()) < 0.5);
  CHECK(std::abs(mle["levels"]["asqz_db"].get<double>()) < 0.5);
  fs::remove(scan);
  fs::remove(outj);
  fs::remove(scan.string() + ".manifest.json");
  fs::remove(outj.string() + ".manifest.json");
}

TEST_CASE("cli: train, predict and report on a tiny dataset") {
  const auto data = tmp("cli_train.sqzt");
  const auto ckpt = tmp("cli_model.sqzm");
  const auto scan = tmp("cli_pred_scan.csv");
  const auto pred = tmp("cli_pred.json");
  const auto rep = tmp("cli_report.json");

  CHECK(run("gen --n 120 --seq-len 64 --labels params --seed 3 --out " + data.string()) == 0);
  CHECK(run("train --data " + data.string() + " --out " + ckpt.string() +
            " --epochs 2 --batch 16 --seed 4 --stages 2 --tail-layers 1") == 0);
  CHECK(fs::exists(ckpt));
  CHECK(fs::exists(ckpt.string() + ".loss.txt"));

  CHECK(run("export --r 0.3 --theta-s 0.5 --n-th 0.05 --n 64 --seed 8 --out " +
            scan.string()) == 0);
  CHECK(run("predict --ckpt " + ckpt.string() + " --scan " + scan.string() + " --out " +
            pred.string()) == 0);
  const json p = read_json(pred);
  CHECK(p["kind"] == "characteristic");
  CHECK(p["params"].contains("r"));

  // resampling path: a longer scan is down-sampled to the model input length
  const auto long_scan = tmp("cli_long_scan.csv");
  CHECK(run("export --r 0.3 --n 4096 --seed 2 --out " + long_scan.string()) == 0);
  CHECK(run("predict --ckpt " + ckpt.string() + " --scan " + long_scan.string() + " --out " +
            pred.string()) == 0);

  CHECK(run("report --scan " + long_scan.string() + " --m 6 --max-iter 100 --char-ckpt " +
            ckpt.string() + " --out " + rep.string()) == 0);
  const json r = read_json(rep);
  CHECK(r.contains("covfit"));
  CHECK(r.contains("mle"));
  CHECK(r.contains("characteristic"));
  CHECK_FALSE(r.contains("reconstruction"));

  for (const auto& f : {data, ckpt, scan, pred, rep, long_scan})
    fs::remove(f);
  for (const auto& f : {data, ckpt, scan, pred, rep, long_scan})
    fs::remove(f.string() + ".manifest.json");
  fs::remove(ckpt.string() + ".loss.txt");
}

TEST_CASE("cli: fit-degradation from a points CSV") {
  const auto pts = tmp("cli_points.csv");
  const auto outj = tmp("cli_deg.json");
  {
    std::ofstream f(pts);
    f << "sqz_db,asqz_db\n";
    // forward model at loss 0.1, theta 0.02 on r = 0.35..1.85
    f << "2.616,2.814\n3.756,4.197\n4.805,5.598\n5.746,7.011\n6.566,8.434\n"
         "7.253,9.864\n7.804,11.299\n8.216,12.737\n8.493,14.179\n8.639,15.622\n";
  }
  CHECK(run("fit-degradation --points " + pts.string() + " --out " + outj.string()) == 0);
  const json fit = read_json(outj);
  CHECK(std::abs(fit["loss"].get<double>() - 0.1) < 0.02);
  CHECK(std::abs(fit["theta_pn"].get<double>() - 0.02) < 0.01);
  CHECK(fit["points"].size() == 10);
  CHECK(fit["curve"].size() == 101);
  CHECK(fit.contains("sigma_band"));
  fs::remove(pts);
  fs::remove(outj);
  fs::remove(outj.string() + ".manifest.json");
}
