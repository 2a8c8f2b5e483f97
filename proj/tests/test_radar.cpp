#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <numbers>

#include "ofdmtr/csv.hpp"
#include "ofdmtr/metrics.hpp"
#include "ofdmtr/radar.hpp"
#include "ofdmtr/rng.hpp"
#include "oracles.hpp"

using namespace ofdmtr;

namespace {

BasebandSignal random_unit_power_waveform(std::uint64_t seed, std::size_t n_carriers = 4,
                                          std::size_t n_bits = 2,
                                          std::size_t oversampling = 4) {
  SplitRng rng(seed);
  WaveformParams params(n_carriers, n_bits, oversampling, 1.0e6);
  return normalize_to_unit_power(
      synthesize(params, oracles::random_qpsk_symbols(params, rng)));
}

}  // namespace

TEST_CASE("chu code values and conjugation") {
  const CplxVec c1 = chu_code(10, 1);
  CHECK(std::abs(c1[0] - Cplx(1.0, 0.0)) < 1e-15);
  CHECK(std::abs(c1[1] - std::polar(1.0, std::numbers::pi / 10.0)) < 1e-15);
  const CplxVec cm = chu_code(10, -1);
  for (std::size_t m = 0; m < 10; ++m) {
    CHECK(std::abs(cm[m] - std::conj(c1[m])) < 1e-15);
    CHECK(std::abs(std::abs(c1[m]) - 1.0) <= 1e-15);
  }
  for (std::size_t m = 0; m < 10; ++m) {
    const double want = std::numbers::pi / 10.0 * double(m * m);
    CHECK(std::abs(c1[m] - std::polar(1.0, want)) < 1e-12);
  }
  CHECK(std::abs(chu_code(7, -1)[0] - Cplx(1.0, 0.0)) < 1e-15);
  CHECK_THROWS_AS(chu_code(0, 1), DimensionError);
  CHECK_THROWS_AS(chu_code(4, 2), DimensionError);
}

TEST_CASE("ambiguity grid peak, symmetry and bounds") {
  const BasebandSignal x = random_unit_power_waveform(61);
  const AmbiguityGrid grid = ambiguity_function(x, 41, 41);
  REQUIRE(grid.delays.size() == 41);
  REQUIRE(grid.dopplers.size() == 41);

  // the center point is (0, 0) and carries the normalized peak
  CHECK(grid.delays[20] == 0);
  CHECK(grid.dopplers[20] == doctest::Approx(0.0));
  CHECK(grid.at(20, 20) == doctest::Approx(1.0).epsilon(1e-12));

  for (std::size_t i = 0; i < 41; ++i) {
    for (std::size_t j = 0; j < 41; ++j) {
      CHECK(grid.at(i, j) <= 1.0 + 1e-9);
      // |chi(-tau, -nu)| = |chi(tau, nu)|: the grid is symmetric
      CHECK(grid.at(i, j) == doctest::Approx(grid.at(40 - i, 40 - j)).epsilon(1e-9));
    }
  }

  CHECK_THROWS_AS(ambiguity_function(x, 40, 41), DimensionError);
  CHECK_THROWS_AS(
      ambiguity_function(BasebandSignal(x.params(), CplxVec(x.size())), 5, 5),
      UndefinedMetricError);
}

TEST_CASE("ambiguity volume integrates to one") {
  const BasebandSignal x = random_unit_power_waveform(67);
  const std::int64_t L = std::int64_t(x.size());
  AfGridSpec spec;
  spec.n_delays = std::size_t(2 * L + 1);
  spec.n_dopplers = std::size_t(2 * L + 1);  // one Doppler period, half-cycle steps
  spec.max_delay = double(L);
  spec.max_doppler = double(L) / 2.0;
  const AmbiguityGrid grid = ambiguity_function(x, spec);

  double volume = 0.0;
  for (std::size_t i = 0; i < grid.delays.size(); ++i) {
    for (std::size_t j = 0; j < grid.dopplers.size(); ++j) {
      const double w = (j == 0 || j + 1 == grid.dopplers.size()) ? 0.5 : 1.0;
      const double m = grid.at(i, j);
      volume += w * m * m;
    }
  }
  volume /= double(2 * L);  // trapezoid weight in per-sample frequency
  CHECK(volume == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("matched filter basics") {
  const BasebandSignal x = random_unit_power_waveform(71);
  double energy = 0.0;
  for (const Cplx& s : x.samples()) energy += std::norm(s);

  CHECK(std::abs(matched_filter(x.samples(), x) - std::sqrt(energy)) < 1e-10);

  // a different tone in the same bit is exactly orthogonal
  WaveformParams params(4, 1, 4, 1.0e6);
  SymbolMatrix t1(4, 1), t2(4, 1);
  t1.at(1, 0) = 1.0;
  t2.at(2, 0) = 1.0;
  const BasebandSignal s1 = synthesize(params, t1);
  const BasebandSignal s2 = synthesize(params, t2);
  CHECK(std::abs(matched_filter(s2.samples(), s1)) < 1e-10);

  CHECK_THROWS_AS(matched_filter(CplxVec(3), x), DimensionError);
  CHECK_THROWS_AS(
      matched_filter(x.samples(), BasebandSignal(x.params(), CplxVec(x.size()))),
      UndefinedMetricError);
}

TEST_CASE("matched filter of signal plus noise matches the analytic mean") {
  const BasebandSignal x = random_unit_power_waveform(73);
  const std::size_t L = x.size();
  const double sigma2 = 0.8;
  SplitRng rng(99);
  const std::size_t trials = 20000;
  Cplx mean(0.0, 0.0);
  double mean_sq = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    CplxVec echo = x.samples();
    for (Cplx& e : echo) e += rng.complex_gaussian(sigma2);
    const Cplx mf = matched_filter(echo, x);
    mean += mf;
    mean_sq += std::norm(mf - Cplx(std::sqrt(double(L)), 0.0));
  }
  mean /= double(trials);
  mean_sq /= double(trials);
  // E[mf] = ||x||, Var[mf] = sigma^2
  const double se = std::sqrt(sigma2 / double(trials));
  CHECK(std::abs(mean - Cplx(std::sqrt(double(L)), 0.0)) < 4.0 * se);
  CHECK(mean_sq == doctest::Approx(sigma2).epsilon(0.05));
}

TEST_CASE("detection threshold analytic values") {
  DetectionConfig config;
  config.snr_grid_db = {0.0};
  config.pfa = std::exp(-1.0);
  config.noise_power = 1.0;
  CHECK(detection_threshold(config) == doctest::Approx(1.0).epsilon(1e-12));

  config.pfa = 0.999999;
  CHECK(detection_threshold(config) < 1.1e-6);

  config.pfa = 1e-5;
  config.noise_power = 2.0;
  CHECK(detection_threshold(config) ==
        doctest::Approx(2.0 * std::log(1e5)).epsilon(1e-12));

  config.pfa = 0.0;
  CHECK_THROWS_AS(detection_threshold(config), ConfigError);
}

TEST_CASE("empirical false-alarm rate matches pfa") {
  const BasebandSignal x = random_unit_power_waveform(79);
  DetectionConfig config;
  config.pfa = 1e-3;
  config.noise_power = 1.0;
  const double t = detection_threshold(config);
  SplitRng rng(123);
  const std::size_t trials = 1000000;
  std::size_t hits = 0;
  // noise-only statistic sampled directly: <n, x/||x||> ~ CN(0, sigma^2)
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const Cplx mf = rng.complex_gaussian(config.noise_power);
    if (std::norm(mf) > t) ++hits;
  }
  const double rate = double(hits) / double(trials);
  const double sigma = std::sqrt(config.pfa * (1 - config.pfa) / double(trials));
  CHECK(std::abs(rate - config.pfa) < 3.0 * sigma);
}

TEST_CASE("full-vector false alarm through the matched filter") {
  const BasebandSignal x = random_unit_power_waveform(83);
  DetectionConfig config;
  config.pfa = 1e-2;
  const double t = detection_threshold(config);
  SplitRng rng(321);
  const std::size_t trials = 40000;
  std::size_t hits = 0;
  CplxVec echo(x.size());
  for (std::size_t trial = 0; trial < trials; ++trial) {
    for (Cplx& e : echo) e = rng.complex_gaussian(config.noise_power);
    if (std::norm(matched_filter(echo, x)) > t) ++hits;
  }
  const double rate = double(hits) / double(trials);
  const double sigma = std::sqrt(config.pfa * (1 - config.pfa) / double(trials));
  CHECK(std::abs(rate - config.pfa) < 3.5 * sigma);
}

TEST_CASE("detection probability endpoints and analytic cross-check") {
  const BasebandSignal x = random_unit_power_waveform(89);
  DetectionConfig config;
  config.pfa = 1e-3;
  config.n_trials = 30000;
  config.snr_grid_db = {-300.0, 10.0};
  const DetectionCurves curves = detection_probability(x, config, 7);

  // no target -> hits at the false-alarm rate
  const double sigma =
      std::sqrt(config.pfa * (1 - config.pfa) / double(config.n_trials));
  CHECK(std::abs(curves.pd_mc[0] - config.pfa) < 4.0 * sigma);
  CHECK(curves.pd_analytic[0] == doctest::Approx(config.pfa).epsilon(1e-6));

  // strong target -> certain detection
  CHECK(curves.pd_mc[1] == doctest::Approx(1.0));
  CHECK(curves.pd_analytic[1] == doctest::Approx(1.0).epsilon(1e-9));

  // mid-curve agreement between Monte Carlo and the closed form
  DetectionConfig mid;
  mid.pfa = 1e-3;
  mid.n_trials = 50000;
  const double snr_db = 10.0 * std::log10(9.0 / double(x.size()));
  mid.snr_grid_db = {snr_db};
  const DetectionCurves mc = detection_probability(x, mid, 11);
  const double pa = mc.pd_analytic[0];
  const double se = std::sqrt(pa * (1 - pa) / double(mid.n_trials));
  CHECK(std::abs(mc.pd_mc[0] - pa) < 3.0 * se);
  CHECK(pa > 0.1);
  CHECK(pa < 0.9);
}

TEST_CASE("detection rejects signals that are not unit power") {
  SplitRng rng(5);
  WaveformParams params(4, 2, 4, 1.0e6);
  const BasebandSignal raw = synthesize(params, oracles::random_qpsk_symbols(params, rng));
  DetectionConfig config;
  config.n_trials = 10;
  CplxVec doubled = raw.samples();
  for (Cplx& s : doubled) s *= 2.0;
  CHECK_THROWS_AS(
      detection_probability(BasebandSignal(params, doubled), config, 1),
      DimensionError);
}

TEST_CASE("pd depends only on template energy (two-sample chi-square)") {
  const BasebandSignal a = random_unit_power_waveform(91);
  const BasebandSignal b = random_unit_power_waveform(92);
  DetectionConfig config;
  config.pfa = 1e-3;
  config.n_trials = 100000;
  config.snr_grid_db = {10.0 * std::log10(10.0 / double(a.size()))};
  // independent seeds: the two-sample test assumes independent counts
  const DetectionCurves ca = detection_probability(a, config, 1001);
  const DetectionCurves cb = detection_probability(b, config, 2002);
  const double n = double(config.n_trials);
  const double h1 = ca.pd_mc[0] * n, m1 = n - h1;
  const double h2 = cb.pd_mc[0] * n, m2 = n - h2;
  const double total = 2.0 * n;
  const double chi2 = total * std::pow(h1 * m2 - h2 * m1, 2) /
                      ((h1 + m1) * (h2 + m2) * (h1 + h2) * (m1 + m2));
  CHECK(chi2 < 6.635);  // 1% critical value, 1 dof
}

TEST_CASE("binary grid file round-trips") {
  const BasebandSignal x = random_unit_power_waveform(97);
  const AmbiguityGrid grid = ambiguity_function(x, 21, 31);
  const auto dir = std::filesystem::temp_directory_path() / "ofdmtr_radar_tests";
  std::filesystem::create_directories(dir);
  const auto path = dir / "grid.bin";
  write_af_binary(path, grid);
  const BinaryGrid back = read_af_binary(path);
  CHECK(back.n_delays == 21);
  CHECK(back.n_dopplers == 31);
  REQUIRE(back.magnitudes.size() == grid.magnitudes.size());
  for (std::size_t i = 0; i < grid.magnitudes.size(); ++i) {
    CHECK(back.magnitudes[i] == grid.magnitudes[i]);
  }
}
