#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "sqzt/dataset.hpp"
#include "sqzt/fock.hpp"

using namespace sqzt;

namespace {

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("dataset: write then read back bit-identically") {
  DatasetGenConfig cfg;
  cfg.count = 100;
  cfg.seq_len = 64;
  cfg.label_kind = LabelKind::kParams4;
  cfg.seed = 2024;
  const auto path = temp_file("sqzt_test_params.sqzt");
  const auto header = gen_dataset(cfg, path.string());
  CHECK(header.label_len() == 4);

  DatasetReader reader(path.string());
  CHECK(reader.header().count == 100);
  CHECK(reader.header().seq_len == 64);
  CHECK(reader.header().master_seed == 2024);
  CHECK(reader.header().ranges.r_max == doctest::Approx(1.75));

  for (std::uint32_t i : {0u, 17u, 99u}) {
    const auto rec = reader.record(i);
    const auto regen = generate_record(cfg, i);
    CHECK(rec.phases == regen.phases);
    CHECK(rec.values == regen.values);
    CHECK(rec.labels == regen.labels);
  }
  CHECK_THROWS_AS(reader.record(100), std::out_of_range);
  std::filesystem::remove(path);
}

TEST_CASE("dataset: identical config produces identical bytes") {
  DatasetGenConfig cfg;
  cfg.count = 40;
  cfg.seq_len = 32;
  cfg.seed = 7;
  const auto p1 = temp_file("sqzt_det_a.sqzt");
  const auto p2 = temp_file("sqzt_det_b.sqzt");
  cfg.threads = 1;
  gen_dataset(cfg, p1.string());
  cfg.threads = 4;  // thread count must not affect the output bytes
  gen_dataset(cfg, p2.string());
  std::ifstream a(p1, std::ios::binary), b(p2, std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {});
  const std::string sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);
  CHECK(sa.size() == 77 + 40 * (32 * 2 + 4) * sizeof(float));
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST_CASE("dataset: degenerate ranges decode to vacuum") {
  DatasetGenConfig cfg;
  cfg.count = 1;
  cfg.seq_len = 32;
  cfg.ranges.r_max = 0.0;
  cfg.ranges.nth_max = 0.0;
  cfg.seed = 5;
  const auto path = temp_file("sqzt_test_vac.sqzt");
  gen_dataset(cfg, path.string());
  DatasetReader reader(path.string());
  const auto rec = reader.record(0);
  const auto p = unpack_params_label(rec.labels.data(), reader.header().ranges);
  CHECK(p.r == 0.0);
  CHECK(p.n_th == 0.0);
  std::filesystem::remove(path);
}

TEST_CASE("dataset: Cholesky labels decode to valid densities") {
  DatasetGenConfig cfg;
  cfg.count = 300;
  cfg.seq_len = 32;
  cfg.label_kind = LabelKind::kCholesky;
  cfg.m = 10;
  // m = 10 keeps >= 99% mass only for modest squeezing
  cfg.ranges.r_max = 0.5;
  cfg.ranges.nth_max = 0.2;
  cfg.seed = 99;
  const auto path = temp_file("sqzt_test_chol.sqzt");
  const auto header = gen_dataset(cfg, path.string());
  CHECK(header.label_len() == 100);

  DatasetReader reader(path.string());
  for (std::uint32_t i = 0; i < cfg.count; ++i) {
    const auto rec = reader.record(i);
    const auto L = unpack_cholesky_label(rec.labels.data(), 10);
    const auto rho = density_from_cholesky(L);
    CHECK(std::abs(rho.entries.real().trace() - 1.0) <= 1e-6);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(rho.entries, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-7);
  }
  std::filesystem::remove(path);
}

TEST_CASE("dataset: Cholesky packing roundtrip") {
  const auto rho = squeezed_thermal_state(SqueezedThermalParams(0.5, 2.2, 0.15), 8);
  const auto L = cholesky_factor(rho);
  const auto packed = pack_cholesky_label(L);
  REQUIRE(packed.size() == 64);
  const auto back = unpack_cholesky_label(packed.data(), 8);
  // f32 packing: entries agree to single precision
  CHECK((back.entries - L.entries).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("dataset: negative-diagonal label columns are canonicalized") {
  std::vector<float> label(9, 0.0f);
  label[0] = -0.8f;  // diag
  label[1] = 0.6f;
  label[2] = 0.0f;
  label[3] = 0.5f;  // L(1,0) = 0.5 - 0.1i
  label[4] = -0.1f;
  const auto L = unpack_cholesky_label(label.data(), 3);
  CHECK(L.entries(0, 0).real() == doctest::Approx(0.8));
  CHECK(L.entries(1, 0).real() == doctest::Approx(-0.5));
  CHECK(L.entries(1, 0).imag() == doctest::Approx(0.1));
}

TEST_CASE("dataset: invalid configurations are rejected") {
  DatasetGenConfig cfg;
  cfg.count = 0;
  cfg.seq_len = 64;
  CHECK_THROWS_AS(gen_dataset(cfg, "/tmp/never.sqzt"), std::invalid_argument);
  cfg.count = 1;
  cfg.seq_len = 8;
  CHECK_THROWS_AS(gen_dataset(cfg, "/tmp/never.sqzt"), std::invalid_argument);
  cfg.seq_len = 64;
  cfg.ranges.r_min = -1.0;
  CHECK_THROWS_AS(gen_dataset(cfg, "/tmp/never.sqzt"), std::invalid_argument);
  cfg.ranges.r_min = 0.0;
  cfg.label_kind = LabelKind::kCholesky;
  cfg.m = 0;
  CHECK_THROWS_AS(gen_dataset(cfg, "/tmp/never.sqzt"), std::invalid_argument);
  CHECK_THROWS(gen_dataset(DatasetGenConfig{.count = 1, .seq_len = 64},
                           "/nonexistent-dir/x.sqzt"));
}
