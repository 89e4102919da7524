#include "sqzt/fock.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <stdexcept>

namespace sqzt {

namespace {

using Complex = std::complex<double>;

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

CMatrix hermitized(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

}  // namespace

double wrap_angle(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0) t += kTwoPi;
  // fmod can return exactly 2*pi after the correction when theta is a tiny
  // negative number
  if (t >= kTwoPi) t = 0.0;
  return t;
}

SqueezedThermalParams::SqueezedThermalParams(double r_in, double theta_s_in, double n_th_in)
    : r(r_in), theta_s(wrap_angle(theta_s_in)), n_th(n_th_in) {
  require(std::isfinite(r_in) && r_in >= 0.0, "squeezing ratio r must be >= 0");
  require(std::isfinite(n_th_in) && n_th_in >= 0.0, "thermal occupation n_th must be >= 0");
  require(std::isfinite(theta_s_in), "squeezing angle must be finite");
}

DensityCheck check_density(const FockDensityMatrix& rho) {
  DensityCheck c;
  const CMatrix& m = rho.entries;
  if (m.rows() == 0 || m.rows() != m.cols()) return c;
  c.hermiticity_error = (m - m.adjoint()).cwiseAbs().maxCoeff();
  c.trace_error = std::abs(m.trace() - Complex(1.0, 0.0));
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitized(m), Eigen::EigenvaluesOnly);
  c.min_eigenvalue = es.eigenvalues().minCoeff();
  c.ok = c.hermiticity_error <= 1e-12 && c.trace_error <= 1e-10 && c.min_eigenvalue >= -1e-10;
  return c;
}

CMatrix annihilation_operator(int dim) {
  require(dim >= 1, "operator dimension must be >= 1");
  CMatrix a = CMatrix::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

CMatrix number_operator(int dim) {
  require(dim >= 1, "operator dimension must be >= 1");
  CMatrix n = CMatrix::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) n(k, k) = static_cast<double>(k);
  return n;
}

CMatrix quadrature_operator(int dim, double theta_lo) {
  const CMatrix a = annihilation_operator(dim);
  const Complex ph(std::cos(theta_lo), std::sin(theta_lo));
  return a * std::conj(ph) + a.adjoint() * ph;
}

FockDensityMatrix thermal_state(double n_th, int m, double* retained_mass) {
  require(std::isfinite(n_th) && n_th >= 0.0, "thermal occupation n_th must be >= 0");
  require(m >= 1, "truncation dimension m must be >= 1");
  RVector p = RVector::Zero(m);
  if (n_th == 0.0) {
    p(0) = 1.0;
  } else {
    // p_n = n_th^n / (1+n_th)^(n+1), evaluated by running product
    const double ratio = n_th / (1.0 + n_th);
    double pn = 1.0 / (1.0 + n_th);
    for (int n = 0; n < m; ++n) {
      p(n) = pn;
      pn *= ratio;
    }
  }
  const double mass = p.sum();
  if (retained_mass) *retained_mass = mass;
  FockDensityMatrix rho;
  rho.entries = (p / mass).cast<Complex>().asDiagonal();
  return rho;
}

CMatrix squeeze_operator(double r, double theta_s, int m_work) {
  require(std::isfinite(r) && r >= 0.0, "squeezing ratio r must be >= 0");
  require(m_work >= 2, "working dimension must be >= 2");
  const CMatrix a = annihilation_operator(m_work);
  const CMatrix a2 = a * a;
  const Complex xi = r * Complex(std::cos(theta_s), std::sin(theta_s));
  // generator (xi^* a^2 - xi a^dag2)/2 is anti-Hermitian by construction,
  // so the exponential is unitary up to rounding
  const CMatrix gen = 0.5 * (std::conj(xi) * a2 - xi * a2.adjoint());
  return gen.exp();
}

int default_working_dim(const SqueezedThermalParams& params, int m) {
  const double sh = std::sinh(params.r);
  const int spread = static_cast<int>(std::ceil(20.0 * sh * sh));
  return std::max(2 * m, m + spread);
}

FockDensityMatrix squeezed_thermal_state(const SqueezedThermalParams& params, int m,
                                         int m_work, double mass_floor,
                                         double* retained_mass) {
  require(m >= 1, "truncation dimension m must be >= 1");
  if (m_work == 0) m_work = default_working_dim(params, m);
  require(m_work >= m, "working dimension must be >= m");

  // S(r, theta) = e^{i phi n} S(r, 0) e^{-i phi n} with phi = theta_s/2, and
  // the phase rotation commutes with the diagonal thermal state, so the
  // squeezing angle enters only as an entrywise phase on the final matrix.
  const CMatrix s0 = squeeze_operator(params.r, 0.0, m_work);
  double th_mass = 0.0;
  const FockDensityMatrix th = thermal_state(params.n_th, m_work, &th_mass);
  CMatrix full = s0 * th.entries.diagonal().asDiagonal() * s0.adjoint();

  CMatrix block = full.topLeftCorner(m, m);
  const double phi = params.theta_s * 0.5;
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      const double ang = phi * (i - j);
      block(i, j) *= Complex(std::cos(ang), std::sin(ang));
    }
  }

  const double mass = block.real().trace() * th_mass;  // mass w.r.t. the untruncated state
  if (retained_mass) *retained_mass = mass;
  if (!(mass >= mass_floor)) {
    throw std::runtime_error(
        "squeezed_thermal_state: retained probability mass " + std::to_string(mass) +
        " below floor " + std::to_string(mass_floor) +
        "; increase the truncation dimension");
  }
  FockDensityMatrix rho;
  rho.entries = hermitized(block / block.real().trace());
  return rho;
}

double quadrature_variance(const SqueezedThermalParams& params, double theta_lo) {
  const double c = std::cos(theta_lo - params.theta_s * 0.5);
  const double s = std::sin(theta_lo - params.theta_s * 0.5);
  return (2.0 * params.n_th + 1.0) *
         (std::exp(-2.0 * params.r) * c * c + std::exp(2.0 * params.r) * s * s);
}

RVector quadrature_eigenfunctions(int m, double x) {
  require(m >= 1, "need at least one eigenfunction");
  // phi_n are the unit-variance-oscillator Hermite functions; psi_n(x) =
  // 2^{-1/4} phi_n(x/sqrt(2)) rescales to vacuum variance 1
  const double q = x / std::sqrt(2.0);
  RVector psi(m);
  const double phi0 = std::pow(M_PI, -0.25) * std::exp(-0.5 * q * q);
  psi(0) = phi0;
  if (m > 1) psi(1) = std::sqrt(2.0) * q * phi0;
  for (int n = 2; n < m; ++n) {
    psi(n) = std::sqrt(2.0 / n) * q * psi(n - 1) -
             std::sqrt(static_cast<double>(n - 1) / n) * psi(n - 2);
  }
  return psi * std::pow(2.0, -0.25);
}

double quadrature_pdf(const FockDensityMatrix& rho, double theta_lo, double x) {
  RVector val = quadrature_pdf_grid(rho, theta_lo, RVector::Constant(1, x));
  return val(0);
}

RVector quadrature_pdf_grid(const FockDensityMatrix& rho, double theta_lo,
                            const RVector& xs) {
  const int m = rho.dim();
  require(m >= 1, "empty density matrix");
  // rotate the matrix once: rho'_{nk} = rho_{nk} e^{i(k-n) theta}; the
  // marginal is then psi^T rho' psi with real psi
  CMatrix rot(m, m);
  Eigen::VectorXcd ph(m);
  for (int n = 0; n < m; ++n)
    ph(n) = Complex(std::cos(n * theta_lo), std::sin(n * theta_lo));
  for (int k = 0; k < m; ++k)
    for (int n = 0; n < m; ++n) rot(n, k) = rho.entries(n, k) * std::conj(ph(n)) * ph(k);

  RVector out(xs.size());
  for (Eigen::Index i = 0; i < xs.size(); ++i) {
    const RVector psi = quadrature_eigenfunctions(m, xs(i));
    const Complex val = psi.cast<Complex>().dot(rot * psi.cast<Complex>());
    out(i) = std::max(0.0, val.real());
  }
  return out;
}

CholeskyFactor cholesky_factor(const FockDensityMatrix& rho) {
  const int m = rho.dim();
  require(m >= 1, "empty density matrix");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitized(rho.entries));
  RVector ev = es.eigenvalues();
  if (ev.minCoeff() < -1e-10) {
    throw std::runtime_error("cholesky_factor: eigenvalue " + std::to_string(ev.minCoeff()) +
                             " below -1e-10; input is not positive semidefinite");
  }
  ev = ev.cwiseMax(0.0);
  const CMatrix psd = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();

  // semidefinite-tolerant lower Cholesky: a vanishing pivot forces a zero
  // column in exact arithmetic
  CMatrix L = CMatrix::Zero(m, m);
  const double pivot_floor = 1e-14 * std::max(1.0, psd.real().trace());
  for (int j = 0; j < m; ++j) {
    Complex acc = psd(j, j);
    for (int k = 0; k < j; ++k) acc -= L(j, k) * std::conj(L(j, k));
    const double d = std::max(acc.real(), 0.0);
    if (d <= pivot_floor * pivot_floor) continue;  // column stays zero
    const double ljj = std::sqrt(d);
    L(j, j) = ljj;
    for (int i = j + 1; i < m; ++i) {
      Complex s = psd(i, j);
      for (int k = 0; k < j; ++k) s -= L(i, k) * std::conj(L(j, k));
      L(i, j) = s / ljj;
    }
  }
  return CholeskyFactor{std::move(L)};
}

FockDensityMatrix density_from_cholesky(const CholeskyFactor& L) {
  require(L.dim() >= 1, "empty Cholesky factor");
  CMatrix prod = L.entries * L.entries.adjoint();
  const double tr = prod.real().trace();
  require(std::isfinite(tr) && tr > 0.0, "L L^dag has non-positive trace");
  FockDensityMatrix rho;
  rho.entries = hermitized(prod / tr);
  return rho;
}

double fidelity(const FockDensityMatrix& rho1, const FockDensityMatrix& rho2) {
  require(rho1.dim() == rho2.dim(), "fidelity: dimension mismatch");
  const auto sqrt_of = [](const CMatrix& rho) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitized(rho));
    const RVector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return CMatrix(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint());
  };
  // (tr sqrt(sqrt(r1) r2 sqrt(r1)))^2 = (tr |sqrt(r1) sqrt(r2)|)^2; the
  // singular-value form is symmetric in the arguments to rounding
  Eigen::BDCSVD<CMatrix> svd(sqrt_of(rho1.entries) * sqrt_of(rho2.entries));
  const double root_sum = svd.singularValues().sum();
  return std::min(1.0, std::max(0.0, root_sum * root_sum));
}

PhotonDecomposition photon_decomposition(const FockDensityMatrix& rho) {
  const int m = rho.dim();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitized(rho.entries));
  int imax = 0;
  es.eigenvalues().maxCoeff(&imax);
  const double sigma = std::min(1.0, std::max(0.0, es.eigenvalues()(imax)));
  const Eigen::VectorXcd psi = es.eigenvectors().col(imax);

  double n_total = 0.0, n_dom = 0.0;
  for (int n = 0; n < m; ++n) {
    n_total += n * rho.entries(n, n).real();
    n_dom += n * std::norm(psi(n));
  }
  PhotonDecomposition d;
  d.sigma = sigma;
  d.n_total = n_total;
  d.n_sq = sigma * n_dom;
  d.n_other = n_total - d.n_sq;
  return d;
}

NoiseLevels noise_levels_from_params(const SqueezedThermalParams& params) {
  const double vmin = (2.0 * params.n_th + 1.0) * std::exp(-2.0 * params.r);
  const double vmax = (2.0 * params.n_th + 1.0) * std::exp(2.0 * params.r);
  return NoiseLevels{-10.0 * std::log10(vmin), 10.0 * std::log10(vmax)};
}

SqueezedThermalParams params_from_levels(const NoiseLevels& levels) {
  const double vmin = std::pow(10.0, -levels.sqz_db / 10.0);
  const double vmax = std::pow(10.0, levels.asqz_db / 10.0);
  require(vmin <= vmax, "params_from_levels: V_min must not exceed V_max");
  const double prod = vmin * vmax;
  require(prod >= 1.0 - 1e-12,
          "params_from_levels: V_min * V_max < 1 would require n_th < 0");
  const double r = 0.25 * std::log(vmax / vmin);
  const double n_th = std::max(0.0, 0.5 * (std::sqrt(prod) - 1.0));
  return SqueezedThermalParams(r, 0.0, n_th);
}

}  // namespace sqzt
