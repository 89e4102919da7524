#include "sqzt/homodyne.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "sqzt/rng.hpp"

namespace sqzt {

const char* to_string(PhaseMode mode) {
  switch (mode) {
    case PhaseMode::kUniformRandomSorted: return "uniform-random-sorted";
    case PhaseMode::kLinearRamp: return "linear-ramp";
    case PhaseMode::kTriangle: return "triangle";
  }
  return "?";
}

PhaseMode phase_mode_from_string(const std::string& name) {
  if (name == "uniform-random-sorted") return PhaseMode::kUniformRandomSorted;
  if (name == "linear-ramp") return PhaseMode::kLinearRamp;
  if (name == "triangle") return PhaseMode::kTriangle;
  throw std::invalid_argument("unknown phase mode: " + name);
}

QuadratureScan sample_scan(const SqueezedThermalParams& params, int n_points,
                           PhaseMode mode, std::uint64_t seed) {
  if (n_points < 16) throw std::invalid_argument("sample_scan: need at least 16 points");
  Rng rng(seed);
  QuadratureScan scan;
  scan.phases.resize(n_points);

  switch (mode) {
    case PhaseMode::kUniformRandomSorted:
      for (auto& p : scan.phases) p = rng.uniform(0.0, kTwoPi);
      std::sort(scan.phases.begin(), scan.phases.end());
      break;
    case PhaseMode::kLinearRamp:
      for (int i = 0; i < n_points; ++i) scan.phases[i] = kTwoPi * i / n_points;
      break;
    case PhaseMode::kTriangle: {
      // apex hits 2*pi at the midpoint; clip it just inside the canonical range
      const double apex = std::nextafter(kTwoPi, 0.0);
      for (int i = 0; i < n_points; ++i) {
        const double frac = 2.0 * i / n_points;
        const double ph = kTwoPi * (frac <= 1.0 ? frac : 2.0 - frac);
        scan.phases[i] = std::min(ph, apex);
      }
      break;
    }
  }

  scan.values.resize(n_points);
  for (int i = 0; i < n_points; ++i) {
    const double sd = std::sqrt(quadrature_variance(params, scan.phases[i]));
    scan.values[i] = sd * rng.gaussian();
  }
  return scan;
}

QuadratureScan resample_scan(const QuadratureScan& scan, int seq_len, std::uint64_t seed) {
  const int n = static_cast<int>(scan.size());
  if (seq_len < 1 || seq_len > n)
    throw std::invalid_argument("resample_scan: seq_len must be in [1, scan size]");
  // partial Fisher-Yates over index space: uniform draw without replacement
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (int i = 0; i < seq_len; ++i) {
    const int j = i + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(seq_len);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    return scan.phases[a] < scan.phases[b] || (scan.phases[a] == scan.phases[b] && a < b);
  });
  QuadratureScan out;
  out.phases.reserve(seq_len);
  out.values.reserve(seq_len);
  for (int i : idx) {
    out.phases.push_back(scan.phases[i]);
    out.values.push_back(scan.values[i]);
  }
  return out;
}

std::vector<PhaseBin> binned_variances(const QuadratureScan& scan, int K) {
  if (K < 4) throw std::invalid_argument("binned_variances: need K >= 4");
  if (scan.size() < static_cast<std::size_t>(4 * K))
    throw std::invalid_argument("binned_variances: need at least 4*K samples");

  std::vector<double> sum(K, 0.0), sum2(K, 0.0);
  std::vector<int> count(K, 0);
  for (std::size_t i = 0; i < scan.size(); ++i) {
    int k = static_cast<int>(wrap_angle(scan.phases[i]) / kTwoPi * K);
    k = std::min(k, K - 1);
    sum[k] += scan.values[i];
    sum2[k] += scan.values[i] * scan.values[i];
    ++count[k];
  }
  std::vector<PhaseBin> bins(K);
  for (int k = 0; k < K; ++k) {
    bins[k].theta_center = kTwoPi * (k + 0.5) / K;
    bins[k].count = count[k];
    if (count[k] >= 2) {
      const double mean = sum[k] / count[k];
      bins[k].variance = (sum2[k] - count[k] * mean * mean) / (count[k] - 1);
    } else {
      bins[k].variance = std::nan("");
    }
  }
  return bins;
}

namespace {

std::string trimmed(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n' || s.back() == ' ' || s.back() == '\t'))
    s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && (s[b] == ' ' || s[b] == '\t')) ++b;
  return s.substr(b);
}

}  // namespace

QuadratureScan ingest_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scan file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty scan file: " + path);
  if (trimmed(line) != "phase_rad,quadrature")
    throw std::runtime_error(path + ":1: expected header 'phase_rad,quadrature'");

  QuadratureScan scan;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trimmed(line);
    if (t.empty()) continue;
    const std::size_t comma = t.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected two comma-separated fields");
    double ph = 0.0, val = 0.0;
    try {
      std::size_t used_a = 0, used_b = 0;
      const std::string fa = trimmed(t.substr(0, comma));
      const std::string fb = trimmed(t.substr(comma + 1));
      ph = std::stod(fa, &used_a);
      val = std::stod(fb, &used_b);
      if (used_a != fa.size() || used_b != fb.size())
        throw std::invalid_argument("trailing junk");
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed numeric field");
    }
    if (!std::isfinite(ph) || !std::isfinite(val))
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": non-finite sample");
    scan.phases.push_back(wrap_angle(ph));
    scan.values.push_back(val);
  }
  if (scan.size() == 0) throw std::runtime_error("scan file has no samples: " + path);

  std::vector<std::size_t> order(scan.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scan.phases[a] < scan.phases[b]; });
  QuadratureScan out;
  out.phases.reserve(scan.size());
  out.values.reserve(scan.size());
  for (std::size_t i : order) {
    out.phases.push_back(scan.phases[i]);
    out.values.push_back(scan.values[i]);
  }
  return out;
}

void export_csv(const QuadratureScan& scan, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scan file: " + path);
  out << "phase_rad,quadrature\n";
  char buf[80];
  for (std::size_t i = 0; i < scan.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.12g,%.12g\n", scan.phases[i], scan.values[i]);
    out << buf;
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace sqzt
