#include "sqzt/degradation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace sqzt {

namespace {

struct Point2 {
  double x = 0.0, y = 0.0;
};

double to_db(double v) { return 10.0 * std::log10(v); }

// model curve point in fit coordinates
Point2 curve_point(double r_id, const DegradationParams& dp, FitMetric metric) {
  const NoiseLevels lv = degraded_levels(r_id, dp);
  if (metric == FitMetric::kDecibel) return {lv.sqz_db, lv.asqz_db};
  return {std::pow(10.0, -lv.sqz_db / 10.0), std::pow(10.0, lv.asqz_db / 10.0)};
}

Point2 data_point(const NoiseLevels& lv, FitMetric metric) {
  if (metric == FitMetric::kDecibel) return {lv.sqz_db, lv.asqz_db};
  return {std::pow(10.0, -lv.sqz_db / 10.0), std::pow(10.0, lv.asqz_db / 10.0)};
}

double sq_dist(const Point2& a, const Point2& b) {
  return (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y);
}

// nearest curve parameter for one data point: coarse scan then golden-section
double project_point(const Point2& pt, const DegradationParams& dp, FitMetric metric,
                     double r_hi) {
  const int n_coarse = 121;
  double best_r = 0.0, best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_coarse; ++i) {
    const double r = r_hi * i / (n_coarse - 1);
    const double d = sq_dist(pt, curve_point(r, dp, metric));
    if (d < best_d) {
      best_d = d;
      best_r = r;
    }
  }
  const double step = r_hi / (n_coarse - 1);
  double lo = std::max(0.0, best_r - step), hi = std::min(r_hi, best_r + step);
  constexpr double kGolden = 0.3819660112501051;
  double x1 = lo + kGolden * (hi - lo), x2 = hi - kGolden * (hi - lo);
  double f1 = sq_dist(pt, curve_point(x1, dp, metric));
  double f2 = sq_dist(pt, curve_point(x2, dp, metric));
  for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = lo + kGolden * (hi - lo);
      f1 = sq_dist(pt, curve_point(x1, dp, metric));
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = hi - kGolden * (hi - lo);
      f2 = sq_dist(pt, curve_point(x2, dp, metric));
    }
  }
  return 0.5 * (lo + hi);
}

struct Objective {
  const std::vector<Point2>& pts;
  FitMetric metric;
  double r_hi;

  double operator()(const DegradationParams& dp) const {
    double s = 0.0;
    for (const auto& pt : pts) {
      const double r = project_point(pt, dp, metric, r_hi);
      s += sq_dist(pt, curve_point(r, dp, metric));
    }
    return s;
  }
};

constexpr double kThetaMax = 1.5707963267948966;  // pi/2

double penalized(const Objective& obj, double l, double t, int& evals) {
  ++evals;
  double pen = 0.0;
  if (l < 0.0) pen += l * l;
  if (l > 1.0) pen += (l - 1.0) * (l - 1.0);
  if (t < 0.0) pen += t * t;
  if (t > kThetaMax) pen += (t - kThetaMax) * (t - kThetaMax);
  const DegradationParams dp{std::clamp(l, 0.0, 1.0), std::clamp(t, 0.0, kThetaMax)};
  return obj(dp) + 1e6 * pen;
}

}  // namespace

NoiseLevels degraded_levels(double r_id, const DegradationParams& dp) {
  if (!(r_id >= 0.0)) throw std::invalid_argument("degraded_levels: r_id must be >= 0");
  const double v_id_sqz = std::exp(-2.0 * r_id);
  const double v_id_asqz = std::exp(2.0 * r_id);
  const double c2 = std::cos(dp.theta_pn) * std::cos(dp.theta_pn);
  const double s2 = std::sin(dp.theta_pn) * std::sin(dp.theta_pn);
  const double v_sqz = (1.0 - dp.loss) * (v_id_sqz * c2 + v_id_asqz * s2) + dp.loss;
  const double v_asqz = (1.0 - dp.loss) * (v_id_asqz * c2 + v_id_sqz * s2) + dp.loss;
  return NoiseLevels{-to_db(v_sqz), to_db(v_asqz)};
}

DegradationFit fit_degradation(const std::vector<NoiseLevels>& pts,
                               const DegradationFitOptions& opt) {
  std::vector<NoiseLevels> kept;
  for (const auto& p : pts)
    if (p.asqz_db > 0.0) kept.push_back(p);
  if (kept.empty())
    throw std::invalid_argument("fit_degradation: no points with ASQZ > 0 dB");

  DegradationFit fit;

  // degenerate input: every point already on the ideal SQZ = ASQZ line
  bool all_ideal = true;
  for (const auto& p : kept) all_ideal = all_ideal && std::abs(p.sqz_db - p.asqz_db) <= 1e-9;
  if (all_ideal) {
    fit.params = {0.0, 0.0};
    fit.sigma_band = {0.0, 0.0};
    fit.flat_objective = true;
    fit.objective = 0.0;
    for (const auto& p : kept) {
      // on the ideal line sqz_db = 20 r / ln 10
      fit.points.push_back({p.sqz_db, p.asqz_db, p.sqz_db * std::log(10.0) / 20.0, 0.0});
    }
    return fit;
  }

  if (kept.size() < 3)
    throw std::invalid_argument("fit_degradation: need at least 3 points off the ideal line");

  std::vector<Point2> data;
  data.reserve(kept.size());
  for (const auto& p : kept) data.push_back(data_point(p, opt.metric));
  const Objective obj{data, opt.metric, opt.r_hi};

  // coarse start grid; the optimum returned can only improve on it
  int evals = 0;
  double best = std::numeric_limits<double>::infinity();
  DegradationParams start;
  for (double l = 0.0; l <= 0.31; l += 0.03) {
    for (double t = 0.0; t <= 0.105; t += 0.015) {
      const double v = penalized(obj, l, t, evals);
      if (v < best) {
        best = v;
        start = {l, t};
      }
    }
  }

  // Nelder-Mead on (loss, theta)
  struct Vertex {
    double l, t, f;
  };
  std::vector<Vertex> simplex = {
      {start.loss, start.theta_pn, best},
      {start.loss + 0.02, start.theta_pn, 0.0},
      {start.loss, start.theta_pn + 0.01, 0.0},
  };
  simplex[1].f = penalized(obj, simplex[1].l, simplex[1].t, evals);
  simplex[2].f = penalized(obj, simplex[2].l, simplex[2].t, evals);

  bool converged = false;
  while (evals < opt.nm_budget) {
    std::sort(simplex.begin(), simplex.end(),
              [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
    const double spread = std::max(
        std::abs(simplex[2].l - simplex[0].l) + std::abs(simplex[2].t - simplex[0].t),
        std::abs(simplex[2].f - simplex[0].f));
    if (spread < 1e-12) {
      converged = true;
      break;
    }
    const double cl = 0.5 * (simplex[0].l + simplex[1].l);
    const double ct = 0.5 * (simplex[0].t + simplex[1].t);
    const double rl = cl + (cl - simplex[2].l), rt = ct + (ct - simplex[2].t);
    const double fr = penalized(obj, rl, rt, evals);
    if (fr < simplex[0].f) {
      const double el = cl + 2.0 * (cl - simplex[2].l), et = ct + 2.0 * (ct - simplex[2].t);
      const double fe = penalized(obj, el, et, evals);
      simplex[2] = fe < fr ? Vertex{el, et, fe} : Vertex{rl, rt, fr};
    } else if (fr < simplex[1].f) {
      simplex[2] = {rl, rt, fr};
    } else {
      const double kl = cl + 0.5 * (simplex[2].l - cl), kt = ct + 0.5 * (simplex[2].t - ct);
      const double fk = penalized(obj, kl, kt, evals);
      if (fk < simplex[2].f) {
        simplex[2] = {kl, kt, fk};
      } else {
        for (int i = 1; i < 3; ++i) {
          simplex[i].l = 0.5 * (simplex[i].l + simplex[0].l);
          simplex[i].t = 0.5 * (simplex[i].t + simplex[0].t);
          simplex[i].f = penalized(obj, simplex[i].l, simplex[i].t, evals);
        }
      }
    }
  }
  std::sort(simplex.begin(), simplex.end(),
            [](const Vertex& a, const Vertex& b) { return a.f < b.f; });

  fit.params = {std::clamp(simplex[0].l, 0.0, 1.0), std::clamp(simplex[0].t, 0.0, kThetaMax)};
  fit.converged = converged;
  fit.objective = 0.0;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const double r = project_point(data[i], fit.params, opt.metric, opt.r_hi);
    const double d2 = sq_dist(data[i], curve_point(r, fit.params, opt.metric));
    fit.objective += d2;
    fit.points.push_back({kept[i].sqz_db, kept[i].asqz_db, r, std::sqrt(d2)});
  }

  // one-sigma parameter band: Gauss-Newton on the 2N-vector of coordinate
  // residuals with the inner projections re-solved at displaced parameters
  const std::size_t n_pts = kept.size();
  auto residuals = [&](const DegradationParams& dp) {
    Eigen::VectorXd e(2 * n_pts);
    for (std::size_t i = 0; i < n_pts; ++i) {
      const double r = project_point(data[i], dp, opt.metric, opt.r_hi);
      const Point2 c = curve_point(r, dp, opt.metric);
      e(2 * i) = data[i].x - c.x;
      e(2 * i + 1) = data[i].y - c.y;
    }
    return e;
  };
  const double hl = 1e-4, ht = 1e-4;
  const Eigen::VectorXd ep_l = residuals({fit.params.loss + hl, fit.params.theta_pn});
  const Eigen::VectorXd em_l = residuals({std::max(0.0, fit.params.loss - hl), fit.params.theta_pn});
  const Eigen::VectorXd ep_t = residuals({fit.params.loss, fit.params.theta_pn + ht});
  const Eigen::VectorXd em_t = residuals({fit.params.loss, std::max(0.0, fit.params.theta_pn - ht)});
  Eigen::MatrixXd jac(2 * n_pts, 2);
  jac.col(0) = (ep_l - em_l) / (hl + std::min(hl, fit.params.loss));
  jac.col(1) = (ep_t - em_t) / (ht + std::min(ht, fit.params.theta_pn));
  const int dof = std::max<int>(1, static_cast<int>(n_pts) - 2);
  const double s2 = fit.objective / dof;
  const Eigen::Matrix2d jtj = jac.transpose() * jac;
  if (jtj.determinant() > 1e-30) {
    const Eigen::Matrix2d cov = s2 * jtj.inverse();
    fit.sigma_band.loss = std::sqrt(std::max(0.0, cov(0, 0)));
    fit.sigma_band.theta_pn = std::sqrt(std::max(0.0, cov(1, 1)));
  }
  if (fit.objective <= 1e-18 && fit.params.loss <= 1e-9 && fit.params.theta_pn <= 1e-9) {
    fit.params = {0.0, 0.0};
    fit.flat_objective = true;
  }
  return fit;
}

NoiseLevels levels_from_estimate(const SqueezedThermalParams& params) {
  return noise_levels_from_params(params);
}

NoiseLevels levels_from_estimate(const FockDensityMatrix& rho) {
  const int m = rho.dim();
  // V(theta) = 2 Re(e^{-2 i theta} <a^2>) + 2 <n> + 1 - (2 Re(e^{-i theta} <a>))^2
  std::complex<double> a1(0, 0), a2(0, 0);
  double nbar = 0.0;
  for (int n = 0; n < m; ++n) {
    nbar += n * rho.entries(n, n).real();
    if (n + 1 < m) a1 += std::sqrt(n + 1.0) * rho.entries(n + 1, n);
    if (n + 2 < m) a2 += std::sqrt((n + 1.0) * (n + 2.0)) * rho.entries(n + 2, n);
  }
  double vmin = std::numeric_limits<double>::infinity();
  double vmax = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < 360; ++k) {
    const double th = kTwoPi * k / 360.0;
    const std::complex<double> e1(std::cos(th), -std::sin(th));
    const double mean = 2.0 * std::real(e1 * a1);
    const double v = 2.0 * std::real(e1 * e1 * a2) + 2.0 * nbar + 1.0 - mean * mean;
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  return NoiseLevels{-to_db(vmin), to_db(vmax)};
}

PhotonDecomposition photon_report(const SqueezedThermalParams& params) {
  const double sh2 = std::sinh(params.r) * std::sinh(params.r);
  PhotonDecomposition d;
  d.n_total = params.n_th + (2.0 * params.n_th + 1.0) * sh2;
  d.n_sq = sh2;
  d.n_other = d.n_total - d.n_sq;
  return d;
}

PhotonDecomposition photon_report(const FockDensityMatrix& rho) {
  return photon_decomposition(rho);
}

}  // namespace sqzt
