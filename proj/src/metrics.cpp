#include "ofdmtr/metrics.hpp"

#include <cmath>

namespace ofdmtr {

namespace {

bool all_zero(std::span<const Cplx> samples) {
  for (const Cplx& s : samples) {
    if (s != Cplx(0.0, 0.0)) return false;
  }
  return true;
}

}  // namespace

double pmepr(std::span<const Cplx> samples) {
  if (samples.empty() || all_zero(samples)) {
    throw UndefinedMetricError("pmepr: undefined for an all-zero signal");
  }
  double peak = 0.0;
  double sum = 0.0;
  for (const Cplx& s : samples) {
    const double p = std::norm(s);
    if (p > peak) peak = p;
    sum += p;
  }
  return peak / (sum / double(samples.size()));
}

double pmepr(const BasebandSignal& signal) { return pmepr(std::span<const Cplx>(signal.samples())); }

double papr_real(std::span<const double> samples) {
  bool nonzero = false;
  double peak = 0.0;
  double sum = 0.0;
  for (double s : samples) {
    if (s != 0.0) nonzero = true;
    const double p = s * s;
    if (p > peak) peak = p;
    sum += p;
  }
  if (samples.empty() || !nonzero) {
    throw UndefinedMetricError("papr_real: undefined for an all-zero vector");
  }
  return peak / (sum / double(samples.size()));
}

double cve(std::span<const Cplx> samples) {
  if (samples.empty() || all_zero(samples)) {
    throw UndefinedMetricError("cve: undefined for an all-zero signal");
  }
  const double n = double(samples.size());
  double mean_abs = 0.0;
  for (const Cplx& s : samples) mean_abs += std::abs(s);
  mean_abs /= n;
  double var = 0.0;
  for (const Cplx& s : samples) {
    const double d = std::abs(s) - mean_abs;
    var += d * d;
  }
  var /= n;
  return var / (mean_abs * mean_abs);
}

double cve(const BasebandSignal& signal) { return cve(std::span<const Cplx>(signal.samples())); }

BoundCheck pmepr_cve_bound(const BasebandSignal& signal) {
  const double root_pmepr = std::sqrt(pmepr(signal));
  const double L = double(signal.size());
  BoundCheck check;
  check.upper = std::sqrt(L * cve(signal)) + 1.0;
  // Slack absorbs rounding when both sides sit at the constant-envelope
  // equality point.
  constexpr double kSlack = 1e-9;
  check.holds =
      root_pmepr >= check.lower - kSlack && root_pmepr <= check.upper + kSlack;
  return check;
}

}  // namespace ofdmtr
