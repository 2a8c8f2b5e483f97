#include "ofdmtr/radar.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include "ofdmtr/rng.hpp"

namespace ofdmtr {

CplxVec chu_code(std::size_t length, int gamma) {
  if (length == 0) {
    throw DimensionError("chu_code: length must be >= 1");
  }
  if (gamma != 1 && gamma != -1) {
    throw DimensionError("chu_code: gamma must be +1 or -1");
  }
  CplxVec code(length);
  for (std::size_t m = 0; m < length; ++m) {
    // Phase reduced mod 2M before multiplying by pi/M to keep it small.
    const std::size_t q = (m * m) % (2 * length);
    code[m] = std::polar(
        1.0, double(gamma) * std::numbers::pi * double(q) / double(length));
  }
  return code;
}

AmbiguityGrid ambiguity_function(const BasebandSignal& signal,
                                 const AfGridSpec& spec) {
  const CplxVec& x = signal.samples();
  const std::int64_t L = std::int64_t(x.size());
  double energy = 0.0;
  for (const Cplx& s : x) energy += std::norm(s);
  if (energy == 0.0) {
    throw UndefinedMetricError("ambiguity_function: zero signal");
  }
  if (spec.n_delays == 0 || spec.n_dopplers == 0 || spec.n_delays % 2 == 0 ||
      spec.n_dopplers % 2 == 0) {
    throw DimensionError("ambiguity_function: grid sizes must be odd and positive");
  }

  const double max_delay = spec.max_delay >= 0.0 ? spec.max_delay : double(L);
  const double max_doppler =
      spec.max_doppler >= 0.0
          ? spec.max_doppler
          : double(signal.params().n_carriers() * signal.params().n_bits());

  AmbiguityGrid grid;
  grid.delays.resize(spec.n_delays);
  grid.dopplers.resize(spec.n_dopplers);
  for (std::size_t i = 0; i < spec.n_delays; ++i) {
    const double frac =
        spec.n_delays == 1 ? 0.5 : double(i) / double(spec.n_delays - 1);
    grid.delays[i] = std::llround(-max_delay + 2.0 * max_delay * frac);
  }
  for (std::size_t j = 0; j < spec.n_dopplers; ++j) {
    const double frac =
        spec.n_dopplers == 1 ? 0.5 : double(j) / double(spec.n_dopplers - 1);
    grid.dopplers[j] = -max_doppler + 2.0 * max_doppler * frac;
  }

  grid.magnitudes.resize(spec.n_delays * spec.n_dopplers);
  for (std::size_t i = 0; i < spec.n_delays; ++i) {
    const std::int64_t tau = grid.delays[i];
    const std::int64_t lo = std::max<std::int64_t>(0, -tau);
    const std::int64_t hi = std::min<std::int64_t>(L, L - tau);
    for (std::size_t j = 0; j < spec.n_dopplers; ++j) {
      const double nu = grid.dopplers[j];
      Cplx acc(0.0, 0.0);
      const double step = 2.0 * std::numbers::pi * nu / double(L);
      for (std::int64_t l = lo; l < hi; ++l) {
        acc += x[std::size_t(l)] * std::conj(x[std::size_t(l + tau)]) *
               std::polar(1.0, step * double(l));
      }
      grid.magnitudes[i * spec.n_dopplers + j] = std::abs(acc) / energy;
    }
  }
  return grid;
}

AmbiguityGrid ambiguity_function(const BasebandSignal& signal,
                                 std::size_t n_delays, std::size_t n_dopplers) {
  AfGridSpec spec;
  spec.n_delays = n_delays;
  spec.n_dopplers = n_dopplers;
  return ambiguity_function(signal, spec);
}

double max_sidelobe(const AmbiguityGrid& grid, double delay_excl,
                    double doppler_excl) {
  double peak = 0.0;
  for (std::size_t i = 0; i < grid.delays.size(); ++i) {
    for (std::size_t j = 0; j < grid.dopplers.size(); ++j) {
      if (std::abs(double(grid.delays[i])) <= delay_excl &&
          std::abs(grid.dopplers[j]) <= doppler_excl) {
        continue;
      }
      peak = std::max(peak, grid.at(i, j));
    }
  }
  return peak;
}

Cplx matched_filter(std::span<const Cplx> echo, const BasebandSignal& tmpl) {
  const CplxVec& x = tmpl.samples();
  if (echo.size() != x.size()) {
    throw DimensionError("matched_filter: echo length does not match template");
  }
  double energy = 0.0;
  for (const Cplx& s : x) energy += std::norm(s);
  if (energy == 0.0) {
    throw UndefinedMetricError("matched_filter: zero template");
  }
  Cplx acc(0.0, 0.0);
  for (std::size_t l = 0; l < x.size(); ++l) acc += echo[l] * std::conj(x[l]);
  return acc / std::sqrt(energy);
}

void DetectionConfig::validate() const {
  if (!(noise_power > 0.0)) {
    throw ConfigError("DetectionConfig: noise_power must be positive");
  }
  if (!(pfa > 0.0 && pfa < 1.0)) {
    throw ConfigError("DetectionConfig: pfa must lie in (0, 1)");
  }
  if (n_trials == 0) {
    throw ConfigError("DetectionConfig: n_trials must be >= 1");
  }
}

double detection_threshold(const DetectionConfig& config) {
  config.validate();
  return config.noise_power * std::log(1.0 / config.pfa);
}

double analytic_pd(double snr_linear, std::size_t n_samples,
                   double noise_power, double pfa) {
  // P(X > y) for X ~ noncentral chi^2, 2 dof, noncentrality lambda:
  // Poisson(lambda/2) mixture of Erlang survival functions at u = y/2.
  const double lambda = 2.0 * snr_linear * double(n_samples);
  const double u = std::log(1.0 / pfa);  // y/2 with y = 2 t / sigma^2
  (void)noise_power;                     // threshold and statistic share sigma^2
  const double half = lambda / 2.0;
  const std::size_t kmax =
      std::size_t(half + 12.0 * std::sqrt(half + 1.0) + 30.0);
  double erlang_sf = std::exp(-u);  // P(Erlang(k+1) > u), starts at k = 0
  double erlang_term = erlang_sf;   // e^{-u} u^k / k!
  double pd = 0.0;
  for (std::size_t k = 0; k <= kmax; ++k) {
    double log_pois;
    if (half > 0.0) {
      log_pois = -half + double(k) * std::log(half) - std::lgamma(double(k) + 1.0);
    } else {
      log_pois = k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    }
    pd += std::exp(log_pois) * erlang_sf;
    erlang_term *= u / double(k + 1);
    erlang_sf += erlang_term;
  }
  return std::min(pd, 1.0);
}

DetectionCurves detection_probability(const BasebandSignal& waveform,
                                      const DetectionConfig& config,
                                      std::uint64_t seed) {
  config.validate();
  const CplxVec& x = waveform.samples();
  const std::size_t L = x.size();
  double mean_pow = 0.0;
  for (const Cplx& s : x) mean_pow += std::norm(s);
  mean_pow /= double(L);
  if (std::abs(mean_pow - 1.0) > 1e-9) {
    throw DimensionError(
        "detection_probability: waveform must be normalized to unit average power");
  }

  const double sigma2 = config.noise_power;
  const double threshold = detection_threshold(config);
  const double norm_x = std::sqrt(double(L));  // ||x||_2 at unit power

  DetectionCurves curves;
  curves.snr_db = config.snr_grid_db;
  curves.pd_mc.resize(config.snr_grid_db.size());
  curves.pd_analytic.resize(config.snr_grid_db.size());

  constexpr std::size_t kBlock = 4096;
  const std::size_t n_blocks = (config.n_trials + kBlock - 1) / kBlock;
  const unsigned n_workers =
      std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                      unsigned(n_blocks)));

  for (std::size_t si = 0; si < config.snr_grid_db.size(); ++si) {
    const double snr = std::pow(10.0, curves.snr_db[si] / 10.0);
    const double amp = std::sqrt(snr * sigma2);
    const double mean_mf = amp * norm_x;

    std::vector<std::size_t> block_hits(n_blocks, 0);
    std::atomic<std::size_t> next_block{0};
    auto worker = [&]() {
      for (;;) {
        const std::size_t blk = next_block.fetch_add(1);
        if (blk >= n_blocks) return;
        const std::size_t begin = blk * kBlock;
        const std::size_t end = std::min(begin + kBlock, config.n_trials);
        SplitRng rng(seed, (std::uint64_t(si) << 32) | std::uint64_t(blk));
        std::size_t hits = 0;
        for (std::size_t t = begin; t < end; ++t) {
          // mf = amp*||x|| + <n, x/||x||>; the echo's signal part projects
          // exactly, so only the noise correlation needs the sample loop.
          Cplx noise_corr(0.0, 0.0);
          for (std::size_t l = 0; l < L; ++l) {
            noise_corr += rng.complex_gaussian(sigma2) * std::conj(x[l]);
          }
          const Cplx mf = mean_mf + noise_corr / norm_x;
          if (std::norm(mf) > threshold) ++hits;
        }
        block_hits[blk] = hits;
      }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w + 1 < n_workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    std::size_t hits = 0;
    for (std::size_t h : block_hits) hits += h;
    curves.pd_mc[si] = double(hits) / double(config.n_trials);
    curves.pd_analytic[si] = analytic_pd(snr, L, sigma2, config.pfa);
  }
  return curves;
}

BasebandSignal normalize_to_unit_power(const BasebandSignal& signal) {
  double mean_pow = 0.0;
  for (const Cplx& s : signal.samples()) mean_pow += std::norm(s);
  mean_pow /= double(signal.size());
  if (mean_pow == 0.0) {
    throw UndefinedMetricError("normalize_to_unit_power: zero signal");
  }
  const double scale = 1.0 / std::sqrt(mean_pow);
  CplxVec scaled = signal.samples();
  for (Cplx& s : scaled) s *= scale;
  return BasebandSignal(signal.params(), std::move(scaled));
}

}  // namespace ofdmtr
