#ifndef OFDMTR_RADAR_HPP
#define OFDMTR_RADAR_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "ofdmtr/waveform.hpp"

namespace ofdmtr {

/// Polyphase code with quadratic phase: a_m = exp(j gamma (pi/M) m^2),
/// m = 0..length-1, gamma in {+1, -1}. Unit modulus by construction.
CplxVec chu_code(std::size_t length, int gamma);

/// Delay-Doppler correlation surface. Delays are integer sample offsets,
/// Dopplers are in cycles per pulse; magnitudes are normalized so the
/// zero-delay zero-Doppler value is 1.
struct AmbiguityGrid {
  std::vector<std::int64_t> delays;
  std::vector<double> dopplers;
  std::vector<double> magnitudes;  // row-major: [delay][doppler]

  double at(std::size_t delay_idx, std::size_t doppler_idx) const {
    return magnitudes[delay_idx * dopplers.size() + doppler_idx];
  }
};

struct AfGridSpec {
  std::size_t n_delays = 121;    // odd so the grid contains delay 0
  std::size_t n_dopplers = 121;  // odd so the grid contains Doppler 0
  double max_delay = -1.0;       // samples; negative = one pulse width (L)
  double max_doppler = -1.0;     // cycles/pulse; negative = N*M (band edge)
};

/// chi(tau, nu) = sum_l x_l conj(x_{l+tau}) exp(j 2 pi nu l / L), zero-padded
/// outside [0, L), normalized by ||x||^2.
AmbiguityGrid ambiguity_function(const BasebandSignal& signal,
                                 const AfGridSpec& spec = {});
AmbiguityGrid ambiguity_function(const BasebandSignal& signal,
                                 std::size_t n_delays, std::size_t n_dopplers);

/// Largest magnitude outside the mainlobe window
/// |tau| <= delay_excl, |nu| <= doppler_excl.
double max_sidelobe(const AmbiguityGrid& grid, double delay_excl,
                    double doppler_excl);

/// Unit-energy-normalized correlation <echo, x> / ||x||_2 at the known delay.
Cplx matched_filter(std::span<const Cplx> echo, const BasebandSignal& tmpl);

struct DetectionConfig {
  double noise_power = 1.0;  // sigma^2 per complex sample
  double pfa = 1e-5;
  std::vector<double> snr_grid_db;  // per-sample SNR
  std::size_t n_trials = 100000;

  void validate() const;
};

/// Threshold on |matched filter|^2 for the requested false-alarm rate:
/// the noise-only statistic is exponential with mean sigma^2, so
/// t = sigma^2 * ln(1/pfa). Analytic, no Monte Carlo.
double detection_threshold(const DetectionConfig& config);

/// Closed-form Pd for an ideal point target at per-sample SNR: the matched
/// filter output is Rician, |mf|^2 * 2/sigma^2 is noncentral chi-square with
/// 2 dof and noncentrality 2*SNR*L.
double analytic_pd(double snr_linear, std::size_t n_samples,
                   double noise_power, double pfa);

struct DetectionCurves {
  std::vector<double> snr_db;
  std::vector<double> pd_mc;
  std::vector<double> pd_analytic;
};

/// Monte-Carlo detection probability per SNR grid point for a waveform
/// normalized to unit average power, with the analytic curve alongside.
/// Trials are partitioned into fixed blocks seeded by block index, so the
/// result does not depend on worker scheduling.
DetectionCurves detection_probability(const BasebandSignal& waveform,
                                      const DetectionConfig& config,
                                      std::uint64_t seed);

/// Scale so mean |x|^2 = 1.
BasebandSignal normalize_to_unit_power(const BasebandSignal& signal);

}  // namespace ofdmtr

#endif
