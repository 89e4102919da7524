#include "sqzt/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace sqzt {

MleResult mle_reconstruct(const QuadratureScan& scan, const MleConfig& cfg) {
  const std::size_t n = scan.size();
  if (n == 0) throw std::invalid_argument("mle_reconstruct: empty scan");
  if (cfg.m < 1 || cfg.x_bins < 32 || cfg.phase_bins < 1 || cfg.max_iter < 1)
    throw std::invalid_argument("mle_reconstruct: bad configuration");

  double max_abs = 0.0;
  for (double v : scan.values) max_abs = std::max(max_abs, std::abs(v));
  if (cfg.x_max < max_abs + 3.0)
    throw std::invalid_argument(
        "mle_reconstruct: x grid too narrow (need x_max >= max |x| + 3 = " +
        std::to_string(max_abs + 3.0) + ")");

  // histogram on (phase bin, x bin); only populated bins matter
  const double dx = 2.0 * cfg.x_max / cfg.x_bins;
  std::map<std::pair<int, int>, int> counts;
  for (std::size_t i = 0; i < n; ++i) {
    int pb = static_cast<int>(wrap_angle(scan.phases[i]) / kTwoPi * cfg.phase_bins);
    pb = std::min(pb, cfg.phase_bins - 1);
    int xb = static_cast<int>((scan.values[i] + cfg.x_max) / dx);
    xb = std::clamp(xb, 0, cfg.x_bins - 1);
    ++counts[{pb, xb}];
  }

  const int J = static_cast<int>(counts.size());
  const int m = cfg.m;
  CMatrix V(m, J);
  Eigen::VectorXd freq(J);
  {
    int j = 0;
    for (const auto& [key, c] : counts) {
      const double theta = kTwoPi * (key.first + 0.5) / cfg.phase_bins;
      const double x = -cfg.x_max + (key.second + 0.5) * dx;
      const RVector psi = quadrature_eigenfunctions(m, x);
      for (int k = 0; k < m; ++k)
        V(k, j) = psi(k) * std::complex<double>(std::cos(k * theta), std::sin(k * theta));
      freq(j) = static_cast<double>(c) / static_cast<double>(n);
      ++j;
    }
  }

  MleResult res;
  CMatrix rho = CMatrix::Identity(m, m) / static_cast<double>(m);
  res.log_likelihood.reserve(cfg.max_iter);
  for (int it = 0; it < cfg.max_iter; ++it) {
    const CMatrix P = rho * V;                      // m x J
    Eigen::VectorXd q(J);
    for (int j = 0; j < J; ++j) q(j) = std::real(V.col(j).dot(P.col(j)));
    if (q.minCoeff() <= 0.0)
      throw std::runtime_error(
          "mle_reconstruct: populated bin with vanishing predicted probability; "
          "widen the x grid or increase m");

    double ll = 0.0;
    for (int j = 0; j < J; ++j) ll += freq(j) * std::log(q(j));
    res.log_likelihood.push_back(ll);

    const CMatrix R = V * (freq.array() / q.array()).matrix().asDiagonal() * V.adjoint();
    CMatrix next = R * rho * R;
    next = 0.5 * (next + next.adjoint());
    next /= next.real().trace();

    // trace distance between iterates
    Eigen::SelfAdjointEigenSolver<CMatrix> es(next - rho, Eigen::EigenvaluesOnly);
    const double dist = 0.5 * es.eigenvalues().cwiseAbs().sum();
    rho = std::move(next);
    res.iterations = it + 1;
    if (dist < cfg.tol) {
      res.converged = true;
      break;
    }
  }
  res.rho.entries = std::move(rho);
  return res;
}

VarianceFit fit_variance_model(const std::vector<PhaseBin>& bins) {
  Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
  Eigen::Vector3d aty = Eigen::Vector3d::Zero();
  int used = 0;
  double wsum = 0.0;
  for (const auto& bin : bins) {
    if (bin.count < 5 || !std::isfinite(bin.variance)) continue;
    const double w = static_cast<double>(bin.count);
    const Eigen::Vector3d row(1.0, std::cos(2.0 * bin.theta_center),
                              std::sin(2.0 * bin.theta_center));
    ata += w * row * row.transpose();
    aty += w * bin.variance * row;
    wsum += w;
    ++used;
  }
  if (used < 3)
    throw std::invalid_argument("fit_variance_model: need at least 3 usable bins (count >= 5)");

  Eigen::FullPivLU<Eigen::Matrix3d> lu(ata);
  if (!lu.isInvertible())
    throw std::invalid_argument("fit_variance_model: degenerate phase design");
  const Eigen::Vector3d beta = lu.solve(aty);

  VarianceFit fit;
  fit.a = beta(0);
  fit.b = beta(1);
  fit.c = beta(2);
  fit.bins_used = used;

  double ss = 0.0;
  for (const auto& bin : bins) {
    if (bin.count < 5 || !std::isfinite(bin.variance)) continue;
    const double pred = fit.a + fit.b * std::cos(2.0 * bin.theta_center) +
                        fit.c * std::sin(2.0 * bin.theta_center);
    ss += bin.count * (bin.variance - pred) * (bin.variance - pred);
  }
  fit.residual_rms = std::sqrt(ss / wsum);

  const double d = std::hypot(fit.b, fit.c);
  fit.physical = fit.a > d && fit.a > 0.0;
  if (fit.physical) {
    const double r = 0.5 * std::atanh(d / fit.a);
    const double theta_s = wrap_angle(std::atan2(-fit.c, -fit.b));
    // sampling noise can push the variance product slightly below the
    // Heisenberg floor; clamp the decoded occupation at zero
    const double n_th = std::max(0.0, 0.5 * (std::sqrt(fit.a * fit.a - d * d) - 1.0));
    fit.params = SqueezedThermalParams(r, theta_s, n_th);
  }
  return fit;
}

}  // namespace sqzt
