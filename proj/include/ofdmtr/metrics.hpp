#ifndef OFDMTR_METRICS_HPP
#define OFDMTR_METRICS_HPP

#include <span>

#include "ofdmtr/waveform.hpp"

namespace ofdmtr {

/// Peak-to-mean envelope power ratio max|x|^2 / mean|x|^2. Always >= 1.
double pmepr(std::span<const Cplx> samples);
double pmepr(const BasebandSignal& signal);

/// Peak-to-average power ratio of a real-valued sample vector.
double papr_real(std::span<const double> samples);

/// Coefficient of variation of the envelope:
/// E[(|x| - E|x|)^2] / (E|x|)^2. Zero iff the envelope is constant;
/// invariant under x -> alpha*x for alpha != 0.
double cve(std::span<const Cplx> samples);
double cve(const BasebandSignal& signal);

struct BoundCheck {
  double lower = 1.0;
  double upper = 0.0;  // sqrt(L * cve) + 1
  bool holds = false;  // 1 <= sqrt(pmepr) <= upper
};

/// Two-sided envelope bound 1 <= sqrt(PMEPR) <= sqrt(L*CVE) + 1; both
/// equalities hold exactly when the envelope is constant.
BoundCheck pmepr_cve_bound(const BasebandSignal& signal);

}  // namespace ofdmtr

#endif
