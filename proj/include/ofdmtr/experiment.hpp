#ifndef OFDMTR_EXPERIMENT_HPP
#define OFDMTR_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ofdmtr/radar.hpp"
#include "ofdmtr/tone_reservation.hpp"

namespace ofdmtr {

enum class SolverKind { None, TrCve, TrMax, TrE4, UniformFill };

std::string solver_name(SolverKind kind);
SolverKind parse_solver_name(const std::string& name);

enum class PlanKind { Carriers, Indices, RandomCarriers };
enum class SymbolSource { Explicit, QpskRandom, Chu, UniformPhase };

/// Flat key-value experiment description. parse/serialize round-trip through
/// the canonical form (all keys, sorted). Values use shortest round-trip
/// decimal formatting, so reruns of identical configs are byte-identical.
struct ExperimentConfig {
  // waveform grid
  std::size_t n_carriers = 6;
  std::size_t n_bits = 1;
  std::size_t oversampling = 10;
  double freq_step_hz = 50.0e6 / 6.0;

  // reservation plan
  PlanKind plan_kind = PlanKind::Carriers;
  std::vector<std::size_t> plan_set = {2, 3};  // carriers or flat indices
  std::size_t plan_random_count = 2;           // for random-carriers

  // informative symbols
  SymbolSource symbol_source = SymbolSource::Explicit;
  CplxVec symbol_values = {Cplx(1.0, 0.0), Cplx(1.0, 0.0)};
  std::vector<int> chu_gammas = {1, -1};  // aligned with sorted carriers

  // solvers
  std::vector<SolverKind> solvers = {SolverKind::TrCve, SolverKind::TrMax,
                                     SolverKind::TrE4};
  std::size_t max_iters = 0;  // 0 = command default (design/detect 800, ccdf 200)
  double rel_cost_tol = 1e-10;

  std::uint64_t seed = 1;
  std::size_t n_trials = 2000;

  // detection
  double noise_power = 1.0;
  double pfa = 1e-5;
  std::vector<double> snr_grid_db = {-30, -28, -26, -24, -22, -20,
                                     -18, -16, -14, -12, -10};

  // ambiguity grid
  std::size_t af_n_delays = 121;
  std::size_t af_n_dopplers = 121;
  double af_max_delay = -1.0;
  double af_max_doppler = -1.0;

  bool operator==(const ExperimentConfig&) const = default;

  WaveformParams waveform_params() const;
  void validate() const;  // throws ConfigError
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& config);
/// FNV-1a hash of the canonical serialization, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

ExperimentConfig default_design_config();
ExperimentConfig default_ccdf_config();
ExperimentConfig default_detect_config();
ExperimentConfig default_af_config();

struct EnvelopeResult {
  BasebandSignal initial;
  std::vector<std::pair<SolverKind, BasebandSignal>> optimized;
  std::vector<std::pair<SolverKind, SolverTrace>> traces;
  std::vector<std::filesystem::path> files;
};

/// One-shot deterministic design study: synthesize the initial waveform,
/// run every selected solver, emit envelope/symbol/trace tables.
/// Envelopes are written as-is (not normalized).
EnvelopeResult run_envelope_experiment(const ExperimentConfig& config,
                                       const std::filesystem::path& out_dir);

struct CcdfCurve {
  std::vector<double> pmepr0_db;
  std::vector<double> pmepr0_linear;
  std::vector<double> prob;  // P(PMEPR > pmepr0), nonincreasing
  std::vector<std::size_t> exceed_count;
  std::size_t n_trials = 0;
  std::uint64_t seed = 0;
};

struct CcdfResult {
  std::vector<std::pair<SolverKind, CcdfCurve>> curves;
  std::vector<std::pair<SolverKind, std::vector<double>>> pmeprs;  // per trial
  std::vector<std::filesystem::path> files;
};

/// Monte-Carlo PMEPR CCDF: per trial draw the informative plan/symbols,
/// run each selected solver plus the unoptimized baseline ("none"), and
/// estimate P(PMEPR > pmepr0) on a shared 0.05 dB grid.
CcdfResult run_ccdf_experiment(const ExperimentConfig& config,
                               const std::filesystem::path& out_dir);

struct DetectionResult {
  std::vector<std::pair<std::string, BasebandSignal>> waveforms;  // unit power
  std::vector<std::pair<std::string, AmbiguityGrid>> grids;
  std::vector<std::pair<std::string, DetectionCurves>> pd;
  std::vector<std::filesystem::path> files;
};

/// Builds the four study waveforms (tr-cve, tr-max, tr-e4, uniform-ofdm) from
/// the Chu-coded informative carriers, normalizes each to unit average power,
/// and emits ambiguity grids plus Pd-vs-SNR curves. All four detection runs
/// share the same noise streams.
DetectionResult run_detection_experiment(const ExperimentConfig& config,
                                         const std::filesystem::path& out_dir);

struct AfResult {
  std::vector<std::pair<SolverKind, AmbiguityGrid>> grids;
  std::vector<std::filesystem::path> files;
};

/// Ambiguity grids of the designed waveforms for each selected solver.
AfResult run_af_experiment(const ExperimentConfig& config,
                           const std::filesystem::path& out_dir);

}  // namespace ofdmtr

#endif
