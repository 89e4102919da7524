#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>

namespace sqzt {

using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kTwoPi = 6.283185307179586476925287;

// wraps an angle into [0, 2*pi)
double wrap_angle(double theta);

// Squeezing ratio r, squeezing angle theta_s and thermal occupation n_th of
// the squeezed thermal family S(r, theta_s) rho_th(n_th) S^dag(r, theta_s).
struct SqueezedThermalParams {
  double r = 0.0;
  double theta_s = 0.0;  // canonical range [0, 2*pi)
  double n_th = 0.0;

  SqueezedThermalParams() = default;
  // throws std::invalid_argument on r < 0 or n_th < 0; wraps theta_s
  SqueezedThermalParams(double r_in, double theta_s_in, double n_th_in);
};

// m x m density matrix in the number basis |0>..|m-1>.
struct FockDensityMatrix {
  CMatrix entries;
  int dim() const { return static_cast<int>(entries.rows()); }
};

// Lower-triangular factor with real nonnegative diagonal; rho = L L^dag / tr.
struct CholeskyFactor {
  CMatrix entries;
  int dim() const { return static_cast<int>(entries.rows()); }
};

// Squeezing/anti-squeezing relative to the vacuum variance (= 1):
//   sqz_db  = -10*log10(V_min),  asqz_db = +10*log10(V_max).
struct NoiseLevels {
  double sqz_db = 0.0;
  double asqz_db = 0.0;
};

// Eigendecomposition-based photon-number split of a density matrix:
// sigma is the dominant eigenvalue, n_sq the photon number carried by the
// dominant eigenvector weighted by sigma. sigma is unset for sources that
// never had a matrix (characteristic-model path).
struct PhotonDecomposition {
  std::optional<double> sigma;
  double n_total = 0.0;
  double n_sq = 0.0;
  double n_other = 0.0;
};

struct DensityCheck {
  bool ok = false;
  double hermiticity_error = 0.0;  // max |rho - rho^dag|
  double min_eigenvalue = 0.0;
  double trace_error = 0.0;  // |tr(rho) - 1|
};

// Validates Hermiticity (<= 1e-12), positivity (eigenvalues >= -1e-10) and
// unit trace (<= 1e-10).
DensityCheck check_density(const FockDensityMatrix& rho);

// --- elementary operators (number basis, dimension dim) ---
CMatrix annihilation_operator(int dim);
CMatrix number_operator(int dim);
// X_theta = a e^{-i theta} + a^dag e^{+i theta}; vacuum variance 1
CMatrix quadrature_operator(int dim, double theta_lo);

// --- state builders ---

// Geometric photon-number distribution p_n = n_th^n/(1+n_th)^(n+1), truncated
// to m and renormalized; the pre-renormalization mass is written to
// retained_mass when given.
FockDensityMatrix thermal_state(double n_th, int m, double* retained_mass = nullptr);

// exp[(xi^* a^2 - xi a^dag2)/2] with xi = r e^{i theta_s}, evaluated on the
// m_work-dimensional truncation. Unitary on the truncated space; agrees with
// the untruncated operator on low-lying states.
CMatrix squeeze_operator(double r, double theta_s, int m_work);

// Working dimension headroom for building an m-dimensional state: squeezing
// spreads population upward by roughly sinh^2(r) per thermal photon.
int default_working_dim(const SqueezedThermalParams& params, int m);

// S rho_th S^dag built at m_work >= m, projected to the top-left m x m block
// and renormalized. Throws std::runtime_error if the block retains less
// probability mass than mass_floor (truncation too tight). m_work = 0 picks
// default_working_dim. retained_mass (if given) receives the block trace
// before renormalization.
FockDensityMatrix squeezed_thermal_state(const SqueezedThermalParams& params, int m,
                                         int m_work = 0, double mass_floor = 0.99,
                                         double* retained_mass = nullptr);

// --- quadrature statistics ---

// Analytic variance of X_theta_lo for the squeezed thermal family:
//   V = (2 n_th + 1) [e^{-2r} cos^2(theta_lo - theta_s/2)
//                     + e^{+2r} sin^2(theta_lo - theta_s/2)].
double quadrature_variance(const SqueezedThermalParams& params, double theta_lo);

// psi_n(x), n = 0..m-1: harmonic-oscillator eigenfunctions in the scaling
// where |psi_0(x)|^2 = (2 pi)^{-1/2} e^{-x^2/2} (vacuum variance 1).
RVector quadrature_eigenfunctions(int m, double x);

// marginal <x_theta| rho |x_theta>
double quadrature_pdf(const FockDensityMatrix& rho, double theta_lo, double x);
// same, evaluated on a grid of x values (one basis-rotation, then O(m^2) per point)
RVector quadrature_pdf_grid(const FockDensityMatrix& rho, double theta_lo,
                            const RVector& xs);

// --- Cholesky parameterization ---

// Lower-triangular L with L L^dag = rho. Eigenvalues in [-1e-10, 0) are
// clipped to zero first; anything below -1e-10 throws std::runtime_error.
CholeskyFactor cholesky_factor(const FockDensityMatrix& rho);

// L L^dag normalized to unit trace. Always Hermitian PSD by construction.
// Throws std::invalid_argument when L L^dag has zero trace.
FockDensityMatrix density_from_cholesky(const CholeskyFactor& L);

// --- comparisons and summaries ---

// Uhlmann fidelity (tr sqrt(sqrt(rho1) rho2 sqrt(rho1)))^2, clamped to [0,1].
double fidelity(const FockDensityMatrix& rho1, const FockDensityMatrix& rho2);

PhotonDecomposition photon_decomposition(const FockDensityMatrix& rho);

NoiseLevels noise_levels_from_params(const SqueezedThermalParams& params);

// Inverts (sqz_db, asqz_db) to (r, 0, n_th). Requires V_min <= V_max and
// V_min * V_max >= 1 (otherwise n_th < 0); throws std::invalid_argument.
SqueezedThermalParams params_from_levels(const NoiseLevels& levels);

}  // namespace sqzt
