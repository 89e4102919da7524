#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sqzt/fock.hpp"

namespace sqzt {

// LO phase layout of a synthetic scan.
//   kUniformRandomSorted: i.i.d. uniform phases, sorted ascending (the
//     training-set layout);
//   kLinearRamp: equally spaced over [0, 2*pi);
//   kTriangle: up-then-down sweep covering [0, 2*pi] (a PZT triangle drive).
enum class PhaseMode { kUniformRandomSorted, kLinearRamp, kTriangle };

const char* to_string(PhaseMode mode);
PhaseMode phase_mode_from_string(const std::string& name);  // throws on unknown

// Paired LO phases and quadrature samples in shot-noise units.
struct QuadratureScan {
  std::vector<double> phases;  // radians in [0, 2*pi)
  std::vector<double> values;
  std::size_t size() const { return phases.size(); }
};

// Draws a scan of n_points quadrature samples from the exact zero-mean
// Gaussian marginal of the squeezed thermal family. Bit-deterministic in
// (params, n_points, mode, seed).
QuadratureScan sample_scan(const SqueezedThermalParams& params, int n_points,
                           PhaseMode mode, std::uint64_t seed);

// Draws seq_len distinct points uniformly from a longer scan and returns them
// sorted by phase; feeds fixed-length model inputs from long records.
QuadratureScan resample_scan(const QuadratureScan& scan, int seq_len, std::uint64_t seed);

struct PhaseBin {
  double theta_center = 0.0;
  double variance = 0.0;  // unbiased sample variance; NaN when count < 2
  int count = 0;
};

// K equal-width bins on [0, 2*pi); empty bins are reported with count 0.
// Requires K >= 4 and scan.size() >= 4*K.
std::vector<PhaseBin> binned_variances(const QuadratureScan& scan, int K);

// CSV interchange: header "phase_rad,quadrature", one sample per row.
// ingest sorts by phase, reduces phases mod 2*pi and rejects non-finite
// values with the offending line number in the error message.
QuadratureScan ingest_csv(const std::string& path);
void export_csv(const QuadratureScan& scan, const std::string& path);

}  // namespace sqzt
