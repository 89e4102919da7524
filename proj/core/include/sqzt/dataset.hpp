#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sqzt/fock.hpp"
#include "sqzt/homodyne.hpp"

namespace sqzt {

enum class LabelKind : std::uint8_t { kParams4 = 0, kCholesky = 1 };

struct DatasetRanges {
  double r_min = 0.0, r_max = 1.75;
  double theta_min = 0.0, theta_max = kTwoPi;
  double nth_min = 0.0, nth_max = 1.2;
};

// On-disk layout (little-endian):
//   "SQZT" | u32 version=1 | u32 count | u32 seq_len | u8 label_kind |
//   u32 m | f64 ranges[6] | u64 master_seed
// then per record: f32 phases[seq_len], f32 values[seq_len],
// f32 labels[label_len].
struct DatasetHeader {
  std::uint32_t version = 1;
  std::uint32_t count = 0;
  std::uint32_t seq_len = 0;
  LabelKind label_kind = LabelKind::kParams4;
  std::uint32_t m = 0;  // present iff label_kind == kCholesky
  DatasetRanges ranges;
  std::uint64_t master_seed = 0;

  int label_len() const {
    return label_kind == LabelKind::kParams4 ? 4 : static_cast<int>(m * m);
  }
};

struct DatasetRecord {
  std::vector<float> phases;
  std::vector<float> values;
  std::vector<float> labels;
};

struct DatasetGenConfig {
  DatasetRanges ranges;
  std::uint32_t count = 0;
  std::uint32_t seq_len = 4096;
  LabelKind label_kind = LabelKind::kParams4;
  std::uint32_t m = 0;          // required for Cholesky labels
  std::uint64_t seed = 0;
  double mass_floor = 0.99;     // Cholesky labels only
  int threads = 0;              // 0 = default_threads()
};

// Label packing. params4 stores (r/r_max, cos theta_s, sin theta_s,
// n_th/n_max); Cholesky stores the m real diagonal entries followed by the
// row-major (re, im) pairs of the strict lower triangle.
std::vector<float> pack_params_label(const SqueezedThermalParams& p, const DatasetRanges& ranges);
SqueezedThermalParams unpack_params_label(const float* label, const DatasetRanges& ranges);
std::vector<float> pack_cholesky_label(const CholeskyFactor& L);
// Accepts arbitrary entries (e.g. raw network output); columns with a
// negative diagonal are sign-flipped into the canonical factor.
CholeskyFactor unpack_cholesky_label(const float* label, int m);

// Draws record `index` of the dataset described by (header-level) config.
// Pure function of (cfg, index): the per-record stream is seeded with
// derive_seed(cfg.seed, index), which is what makes generation
// order-independent and parallelizable.
DatasetRecord generate_record(const DatasetGenConfig& cfg, std::uint32_t index);

// Generates and writes the full dataset. Records are produced in parallel
// and written in index order; the output bytes depend only on cfg.
DatasetHeader gen_dataset(const DatasetGenConfig& cfg, const std::string& path);

// Random-access reader.
class DatasetReader {
 public:
  explicit DatasetReader(const std::string& path);  // throws on bad format
  const DatasetHeader& header() const { return header_; }
  DatasetRecord record(std::uint32_t index) const;

 private:
  std::string path_;
  DatasetHeader header_;
  std::size_t record_bytes_ = 0;
};

}  // namespace sqzt
