#pragma once

#include <optional>
#include <vector>

#include "sqzt/fock.hpp"
#include "sqzt/homodyne.hpp"

namespace sqzt {

struct MleConfig {
  int m = 15;             // reconstruction dimension
  double x_max = 12.0;    // grid is symmetric: [-x_max, x_max]
  int x_bins = 256;
  int phase_bins = 24;
  int max_iter = 1000;
  double tol = 1e-10;     // trace distance between successive iterates
};

struct MleResult {
  FockDensityMatrix rho;
  int iterations = 0;
  bool converged = false;
  std::vector<double> log_likelihood;  // per accepted iterate, natural log per sample
};

// Iterative maximum-likelihood reconstruction (R rho R fixed point) from a
// binned (theta, x) histogram of the scan. Quadrature projectors are built
// from the harmonic-oscillator eigenfunctions of quadrature_pdf. Throws when
// the grid is too narrow for the sampled values (x_max must cover
// max |x| + 3) or a populated bin has vanishing predicted probability.
MleResult mle_reconstruct(const QuadratureScan& scan, const MleConfig& cfg);

struct VarianceFit {
  double a = 0.0, b = 0.0, c = 0.0;  // V(theta) ~ a + b cos 2theta + c sin 2theta
  bool physical = false;             // a >= sqrt(b^2 + c^2)
  std::optional<SqueezedThermalParams> params;
  double residual_rms = 0.0;         // count-weighted RMS of V residuals
  int bins_used = 0;
};

// Weighted least squares (weights = bin counts) in {1, cos 2theta,
// sin 2theta}, then the closed-form decode
//   D = sqrt(b^2+c^2), theta_s = atan2(-c, -b),
//   2 n_th + 1 = sqrt(a^2 - D^2), r = atanh(D/a)/2.
// Bins with fewer than 5 samples are dropped. Throws when fewer than 3
// usable bins remain or the design is degenerate.
VarianceFit fit_variance_model(const std::vector<PhaseBin>& bins);

}  // namespace sqzt
