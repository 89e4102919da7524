#include "sqzt/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <stdexcept>

#include "sqzt/parallel.hpp"
#include "sqzt/rng.hpp"

namespace sqzt {

namespace {

constexpr char kMagic[4] = {'S', 'Q', 'Z', 'T'};

// The format is defined little-endian; all supported targets are.
static_assert(std::endian::native == std::endian::little,
              "dataset serialization assumes a little-endian host");

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

void validate_ranges(const DatasetRanges& r) {
  const bool ok = r.r_min >= 0.0 && r.r_max >= r.r_min && r.nth_min >= 0.0 &&
                  r.nth_max >= r.nth_min && r.theta_max >= r.theta_min &&
                  std::isfinite(r.r_max) && std::isfinite(r.nth_max) &&
                  std::isfinite(r.theta_min) && std::isfinite(r.theta_max);
  if (!ok) throw std::invalid_argument("invalid parameter ranges");
}

}  // namespace

std::vector<float> pack_params_label(const SqueezedThermalParams& p, const DatasetRanges& ranges) {
  const float rn = ranges.r_max > 0 ? static_cast<float>(p.r / ranges.r_max) : 0.0f;
  const float nn = ranges.nth_max > 0 ? static_cast<float>(p.n_th / ranges.nth_max) : 0.0f;
  return {rn, static_cast<float>(std::cos(p.theta_s)), static_cast<float>(std::sin(p.theta_s)), nn};
}

SqueezedThermalParams unpack_params_label(const float* label, const DatasetRanges& ranges) {
  const double r = std::clamp<double>(label[0], 0.0, 1.0) * ranges.r_max;
  const double theta = std::atan2(static_cast<double>(label[2]), static_cast<double>(label[1]));
  const double n_th = std::clamp<double>(label[3], 0.0, 1.0) * ranges.nth_max;
  return SqueezedThermalParams(r, wrap_angle(theta), n_th);
}

std::vector<float> pack_cholesky_label(const CholeskyFactor& L) {
  const int m = L.dim();
  std::vector<float> out;
  out.reserve(static_cast<std::size_t>(m) * m);
  for (int i = 0; i < m; ++i) out.push_back(static_cast<float>(L.entries(i, i).real()));
  for (int i = 1; i < m; ++i)
    for (int j = 0; j < i; ++j) {
      out.push_back(static_cast<float>(L.entries(i, j).real()));
      out.push_back(static_cast<float>(L.entries(i, j).imag()));
    }
  return out;
}

CholeskyFactor unpack_cholesky_label(const float* label, int m) {
  CMatrix L = CMatrix::Zero(m, m);
  for (int i = 0; i < m; ++i) L(i, i) = static_cast<double>(label[i]);
  std::size_t k = m;
  for (int i = 1; i < m; ++i)
    for (int j = 0; j < i; ++j) {
      L(i, j) = {static_cast<double>(label[k]), static_cast<double>(label[k + 1])};
      k += 2;
    }
  // canonicalize: L diag(+-1) leaves L L^dag unchanged
  for (int j = 0; j < m; ++j)
    if (L(j, j).real() < 0.0) L.col(j) = -L.col(j);
  return CholeskyFactor{std::move(L)};
}

DatasetRecord generate_record(const DatasetGenConfig& cfg, std::uint32_t index) {
  Rng rng(derive_seed(cfg.seed, index));
  const SqueezedThermalParams p(rng.uniform(cfg.ranges.r_min, cfg.ranges.r_max),
                                wrap_angle(rng.uniform(cfg.ranges.theta_min, cfg.ranges.theta_max)),
                                rng.uniform(cfg.ranges.nth_min, cfg.ranges.nth_max));

  DatasetRecord rec;
  rec.phases.resize(cfg.seq_len);
  rec.values.resize(cfg.seq_len);
  std::vector<double> phases(cfg.seq_len);
  for (auto& ph : phases) ph = rng.uniform(0.0, kTwoPi);
  std::sort(phases.begin(), phases.end());
  for (std::uint32_t i = 0; i < cfg.seq_len; ++i) {
    rec.phases[i] = static_cast<float>(phases[i]);
    rec.values[i] =
        static_cast<float>(std::sqrt(quadrature_variance(p, phases[i])) * rng.gaussian());
  }

  if (cfg.label_kind == LabelKind::kParams4) {
    rec.labels = pack_params_label(p, cfg.ranges);
  } else {
    const auto rho = squeezed_thermal_state(p, static_cast<int>(cfg.m), 0, cfg.mass_floor);
    rec.labels = pack_cholesky_label(cholesky_factor(rho));
  }
  return rec;
}

DatasetHeader gen_dataset(const DatasetGenConfig& cfg, const std::string& path) {
  validate_ranges(cfg.ranges);
  if (cfg.count < 1) throw std::invalid_argument("dataset needs at least one record");
  if (cfg.seq_len < 16) throw std::invalid_argument("seq_len must be >= 16");
  if (cfg.label_kind == LabelKind::kCholesky && cfg.m < 1)
    throw std::invalid_argument("Cholesky labels need a truncation dimension m");

  DatasetHeader h;
  h.count = cfg.count;
  h.seq_len = cfg.seq_len;
  h.label_kind = cfg.label_kind;
  h.m = cfg.label_kind == LabelKind::kCholesky ? cfg.m : 0;
  h.ranges = cfg.ranges;
  h.master_seed = cfg.seed;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset: " + path);
  out.write(kMagic, 4);
  put(out, h.version);
  put(out, h.count);
  put(out, h.seq_len);
  put(out, static_cast<std::uint8_t>(h.label_kind));
  put(out, h.m);
  put(out, h.ranges.r_min);
  put(out, h.ranges.r_max);
  put(out, h.ranges.theta_min);
  put(out, h.ranges.theta_max);
  put(out, h.ranges.nth_min);
  put(out, h.ranges.nth_max);
  put(out, h.master_seed);

  const int threads = cfg.threads > 0 ? cfg.threads : default_threads();
  const std::uint32_t chunk = 512;
  std::vector<DatasetRecord> buf;
  std::string gen_error;
  std::mutex err_mu;
  for (std::uint32_t base = 0; base < cfg.count; base += chunk) {
    const std::uint32_t n = std::min(chunk, cfg.count - base);
    buf.assign(n, DatasetRecord{});
    parallel_for(static_cast<int>(n), threads, [&](int i) {
      try {
        buf[i] = generate_record(cfg, base + static_cast<std::uint32_t>(i));
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (gen_error.empty()) gen_error = e.what();
      }
    });
    if (!gen_error.empty())
      throw std::runtime_error("dataset generation failed: " + gen_error);
    for (const auto& rec : buf) {
      out.write(reinterpret_cast<const char*>(rec.phases.data()),
                static_cast<std::streamsize>(rec.phases.size() * sizeof(float)));
      out.write(reinterpret_cast<const char*>(rec.values.data()),
                static_cast<std::streamsize>(rec.values.size() * sizeof(float)));
      out.write(reinterpret_cast<const char*>(rec.labels.data()),
                static_cast<std::streamsize>(rec.labels.size() * sizeof(float)));
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
  return h;
}

DatasetReader::DatasetReader(const std::string& path) : path_(path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not a SQZT dataset: " + path);
  header_.version = get<std::uint32_t>(in);
  if (header_.version != 1)
    throw std::runtime_error("unsupported dataset version in " + path);
  header_.count = get<std::uint32_t>(in);
  header_.seq_len = get<std::uint32_t>(in);
  header_.label_kind = static_cast<LabelKind>(get<std::uint8_t>(in));
  header_.m = get<std::uint32_t>(in);
  header_.ranges.r_min = get<double>(in);
  header_.ranges.r_max = get<double>(in);
  header_.ranges.theta_min = get<double>(in);
  header_.ranges.theta_max = get<double>(in);
  header_.ranges.nth_min = get<double>(in);
  header_.ranges.nth_max = get<double>(in);
  header_.master_seed = get<std::uint64_t>(in);
  if (!in) throw std::runtime_error("truncated dataset header: " + path);
  record_bytes_ = sizeof(float) *
                  (2 * static_cast<std::size_t>(header_.seq_len) + header_.label_len());
}

DatasetRecord DatasetReader::record(std::uint32_t index) const {
  if (index >= header_.count) throw std::out_of_range("record index out of range");
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset: " + path_);
  const std::size_t header_bytes = 4 + 4 + 4 + 4 + 1 + 4 + 6 * 8 + 8;
  in.seekg(static_cast<std::streamoff>(header_bytes + record_bytes_ * index));
  DatasetRecord rec;
  rec.phases.resize(header_.seq_len);
  rec.values.resize(header_.seq_len);
  rec.labels.resize(header_.label_len());
  in.read(reinterpret_cast<char*>(rec.phases.data()),
          static_cast<std::streamsize>(rec.phases.size() * sizeof(float)));
  in.read(reinterpret_cast<char*>(rec.values.data()),
          static_cast<std::streamsize>(rec.values.size() * sizeof(float)));
  in.read(reinterpret_cast<char*>(rec.labels.data()),
          static_cast<std::streamsize>(rec.labels.size() * sizeof(float)));
  if (!in) throw std::runtime_error("truncated dataset record in " + path_);
  return rec;
}

}  // namespace sqzt
