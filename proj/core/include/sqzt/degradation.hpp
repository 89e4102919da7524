#pragma once

#include <vector>

#include "sqzt/fock.hpp"

namespace sqzt {

// Optical loss fraction and effective phase-noise angle of the degradation
// model
//   V_sqz  = (1-L)[V_id_sqz  cos^2(t) + V_id_asqz sin^2(t)] + L
//   V_asqz = (1-L)[V_id_asqz cos^2(t) + V_id_sqz  sin^2(t)] + L
// with V_id_sqz = e^{-2 r_id}, V_id_asqz = e^{+2 r_id}.
struct DegradationParams {
  double loss = 0.0;      // in [0, 1]
  double theta_pn = 0.0;  // radians, [0, pi/2]
};

NoiseLevels degraded_levels(double r_id, const DegradationParams& dp);

struct DegradationPoint {
  double sqz_db = 0.0;
  double asqz_db = 0.0;
  double r_proj = 0.0;       // ideal squeezing ratio of the nearest curve point
  double residual_db = 0.0;  // orthogonal distance to the curve
};

enum class FitMetric { kDecibel, kLinearVariance };

struct DegradationFitOptions {
  FitMetric metric = FitMetric::kDecibel;
  double r_hi = 3.0;      // inner projection search range [0, r_hi]
  int nm_budget = 400;    // Nelder-Mead evaluation budget
};

struct DegradationFit {
  DegradationParams params;
  DegradationParams sigma_band;  // one-sigma via Gauss-Newton at the optimum
  std::vector<DegradationPoint> points;
  double objective = 0.0;  // sum of squared orthogonal distances
  bool converged = true;
  bool flat_objective = false;  // ideal-line degenerate input
};

// Orthogonal distance regression of measured (SQZ, ASQZ) pairs against the
// degradation curve family. Points with ASQZ <= 0 dB are discarded; at least
// 3 must remain unless every remaining point lies exactly on the ideal line
// (then the fit degenerates to L = 0, theta = 0).
DegradationFit fit_degradation(const std::vector<NoiseLevels>& pts,
                               const DegradationFitOptions& opt = {});

// Squeezing/anti-squeezing levels of an estimate: closed form for parameter
// estimates, a 360-point scan of V(theta) = <X^2> - <X>^2 for matrices.
NoiseLevels levels_from_estimate(const SqueezedThermalParams& params);
NoiseLevels levels_from_estimate(const FockDensityMatrix& rho);

// Photon-number report. The density-matrix path eigendecomposes; the
// parameter path uses <n> = n_th + (2 n_th + 1) sinh^2 r with the pure
// squeezed component carrying sinh^2 r (sigma stays unset).
PhotonDecomposition photon_report(const SqueezedThermalParams& params);
PhotonDecomposition photon_report(const FockDensityMatrix& rho);

}  // namespace sqzt
