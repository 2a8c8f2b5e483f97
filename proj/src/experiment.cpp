#include "ofdmtr/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "ofdmtr/csv.hpp"
#include "ofdmtr/metrics.hpp"
#include "ofdmtr/rng.hpp"

namespace ofdmtr {

namespace {

// Stream id for the uniform-ofdm reserved fill; detection blocks use
// (snr_index << 32) | block and never reach this value at snr_index 0.
constexpr std::uint64_t kUniformFillStream = 0xFFFF0001ull;

constexpr double kCcdfGridStepDb = 0.05;

std::string join_list(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ',';
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  if (text.empty()) return parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = text.find(',', start);
    if (comma == std::string::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  std::size_t e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

std::uint64_t parse_u64(const std::string& text) {
  std::uint64_t value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError("invalid integer: '" + text + "'");
  }
  return value;
}

std::int64_t parse_i64(const std::string& text) {
  std::int64_t value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError("invalid integer: '" + text + "'");
  }
  return value;
}

Cplx parse_complex(const std::string& text) {
  const std::size_t colon = text.find(':');
  if (colon == std::string::npos) {
    throw ConfigError("complex values use re:im, got '" + text + "'");
  }
  return {parse_double(text.substr(0, colon)), parse_double(text.substr(colon + 1))};
}

std::string format_complex(const Cplx& z) {
  return format_double(z.real()) + ":" + format_double(z.imag());
}

std::string plan_kind_name(PlanKind kind) {
  switch (kind) {
    case PlanKind::Carriers: return "carriers";
    case PlanKind::Indices: return "indices";
    case PlanKind::RandomCarriers: return "random-carriers";
  }
  return "carriers";
}

PlanKind parse_plan_kind(const std::string& name) {
  if (name == "carriers") return PlanKind::Carriers;
  if (name == "indices") return PlanKind::Indices;
  if (name == "random-carriers") return PlanKind::RandomCarriers;
  throw ConfigError("unknown plan.kind '" + name + "'");
}

std::string symbol_source_name(SymbolSource source) {
  switch (source) {
    case SymbolSource::Explicit: return "explicit";
    case SymbolSource::QpskRandom: return "qpsk-random";
    case SymbolSource::Chu: return "chu";
    case SymbolSource::UniformPhase: return "uniform-phase";
  }
  return "explicit";
}

SymbolSource parse_symbol_source(const std::string& name) {
  if (name == "explicit") return SymbolSource::Explicit;
  if (name == "qpsk-random") return SymbolSource::QpskRandom;
  if (name == "chu") return SymbolSource::Chu;
  if (name == "uniform-phase") return SymbolSource::UniformPhase;
  throw ConfigError("unknown symbols.source '" + name + "'");
}

void run_parallel(std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const unsigned workers = std::max(
      1u, std::min<unsigned>(std::thread::hardware_concurrency(), unsigned(n)));
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w + 1 < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

std::string solver_name(SolverKind kind) {
  switch (kind) {
    case SolverKind::None: return "none";
    case SolverKind::TrCve: return "tr-cve";
    case SolverKind::TrMax: return "tr-max";
    case SolverKind::TrE4: return "tr-e4";
    case SolverKind::UniformFill: return "uniform-ofdm";
  }
  return "none";
}

SolverKind parse_solver_name(const std::string& name) {
  if (name == "none") return SolverKind::None;
  if (name == "tr-cve") return SolverKind::TrCve;
  if (name == "tr-max") return SolverKind::TrMax;
  if (name == "tr-e4") return SolverKind::TrE4;
  if (name == "uniform-ofdm" || name == "uniform") return SolverKind::UniformFill;
  throw ConfigError("unknown solver '" + name + "'");
}

WaveformParams ExperimentConfig::waveform_params() const {
  return WaveformParams(n_carriers, n_bits, oversampling, freq_step_hz);
}

void ExperimentConfig::validate() const {
  try {
    (void)waveform_params();
  } catch (const DimensionError& e) {
    throw ConfigError(e.what());
  }
  const std::size_t total = n_carriers * n_bits;
  switch (plan_kind) {
    case PlanKind::Carriers:
      for (std::size_t c : plan_set) {
        if (c >= n_carriers) throw ConfigError("plan.set carrier out of range");
      }
      break;
    case PlanKind::Indices:
      for (std::size_t g : plan_set) {
        if (g >= total) throw ConfigError("plan.set index out of range");
      }
      break;
    case PlanKind::RandomCarriers:
      if (plan_random_count == 0 || plan_random_count > n_carriers) {
        throw ConfigError("plan.random_count must lie in [1, n_carriers]");
      }
      break;
  }
  const bool random_plan = plan_kind == PlanKind::RandomCarriers;
  std::size_t informative_slots = 0;
  if (!random_plan) {
    informative_slots = plan_kind == PlanKind::Carriers ? plan_set.size() * n_bits
                                                        : plan_set.size();
  }
  switch (symbol_source) {
    case SymbolSource::Explicit:
      if (random_plan) {
        throw ConfigError("explicit symbols require a fixed plan");
      }
      if (symbol_values.size() != informative_slots) {
        throw ConfigError("symbols.values count does not match the informative slots");
      }
      break;
    case SymbolSource::Chu:
      if (plan_kind != PlanKind::Carriers) {
        throw ConfigError("chu symbols require plan.kind = carriers");
      }
      if (chu_gammas.size() != plan_set.size()) {
        throw ConfigError("symbols.chu_gammas count does not match plan.set");
      }
      for (int g : chu_gammas) {
        if (g != 1 && g != -1) throw ConfigError("chu gamma must be +1 or -1");
      }
      break;
    case SymbolSource::QpskRandom:
    case SymbolSource::UniformPhase:
      break;
  }
  if (solvers.empty()) throw ConfigError("solvers list is empty");
  for (std::size_t i = 0; i < solvers.size(); ++i) {
    for (std::size_t j = i + 1; j < solvers.size(); ++j) {
      if (solvers[i] == solvers[j]) throw ConfigError("duplicate solver in list");
    }
  }
  if (rel_cost_tol < 0.0 || !std::isfinite(rel_cost_tol)) {
    throw ConfigError("solver.rel_cost_tol must be >= 0");
  }
  if (!(noise_power > 0.0)) throw ConfigError("detect.noise_power must be positive");
  if (!(pfa > 0.0 && pfa < 1.0)) throw ConfigError("detect.pfa must lie in (0,1)");
  if (snr_grid_db.empty()) throw ConfigError("detect.snr_db is empty");
  if (n_trials == 0) throw ConfigError("n_trials must be >= 1");
  if (af_n_delays == 0 || af_n_dopplers == 0 || af_n_delays % 2 == 0 ||
      af_n_dopplers % 2 == 0) {
    throw ConfigError("af grid sizes must be odd and positive");
  }
}

std::string serialize_config(const ExperimentConfig& c) {
  std::vector<std::string> solver_names, snrs, set, values, gammas;
  for (SolverKind s : c.solvers) solver_names.push_back(solver_name(s));
  for (double v : c.snr_grid_db) snrs.push_back(format_double(v));
  for (std::size_t g : c.plan_set) set.push_back(std::to_string(g));
  for (const Cplx& z : c.symbol_values) values.push_back(format_complex(z));
  for (int g : c.chu_gammas) gammas.push_back(std::to_string(g));

  std::ostringstream out;
  out << "af.max_delay = " << format_double(c.af_max_delay) << "\n";
  out << "af.max_doppler = " << format_double(c.af_max_doppler) << "\n";
  out << "af.n_delays = " << c.af_n_delays << "\n";
  out << "af.n_dopplers = " << c.af_n_dopplers << "\n";
  out << "detect.noise_power = " << format_double(c.noise_power) << "\n";
  out << "detect.pfa = " << format_double(c.pfa) << "\n";
  out << "detect.snr_db = " << join_list(snrs) << "\n";
  out << "freq_step_hz = " << format_double(c.freq_step_hz) << "\n";
  out << "n_bits = " << c.n_bits << "\n";
  out << "n_carriers = " << c.n_carriers << "\n";
  out << "n_trials = " << c.n_trials << "\n";
  out << "oversampling = " << c.oversampling << "\n";
  out << "plan.kind = " << plan_kind_name(c.plan_kind) << "\n";
  out << "plan.random_count = " << c.plan_random_count << "\n";
  out << "plan.set = " << join_list(set) << "\n";
  out << "seed = " << c.seed << "\n";
  out << "solver.max_iters = " << c.max_iters << "\n";
  out << "solver.rel_cost_tol = " << format_double(c.rel_cost_tol) << "\n";
  out << "solvers = " << join_list(solver_names) << "\n";
  out << "symbols.chu_gammas = " << join_list(gammas) << "\n";
  out << "symbols.source = " << symbol_source_name(c.symbol_source) << "\n";
  out << "symbols.values = " << join_list(values) << "\n";
  return out.str();
}

ExperimentConfig parse_config(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line is not key = value: '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (kv.count(key)) throw ConfigError("duplicate config key '" + key + "'");
    kv[key] = value;
  }

  ExperimentConfig c;
  auto take = [&](const char* key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };

  if (auto v = take("af.max_delay")) c.af_max_delay = parse_double(*v);
  if (auto v = take("af.max_doppler")) c.af_max_doppler = parse_double(*v);
  if (auto v = take("af.n_delays")) c.af_n_delays = std::size_t(parse_u64(*v));
  if (auto v = take("af.n_dopplers")) c.af_n_dopplers = std::size_t(parse_u64(*v));
  if (auto v = take("detect.noise_power")) c.noise_power = parse_double(*v);
  if (auto v = take("detect.pfa")) c.pfa = parse_double(*v);
  if (auto v = take("detect.snr_db")) {
    c.snr_grid_db.clear();
    for (const std::string& s : split_list(*v)) c.snr_grid_db.push_back(parse_double(trim(s)));
  }
  if (auto v = take("freq_step_hz")) c.freq_step_hz = parse_double(*v);
  if (auto v = take("n_bits")) c.n_bits = std::size_t(parse_u64(*v));
  if (auto v = take("n_carriers")) c.n_carriers = std::size_t(parse_u64(*v));
  if (auto v = take("n_trials")) c.n_trials = std::size_t(parse_u64(*v));
  if (auto v = take("oversampling")) c.oversampling = std::size_t(parse_u64(*v));
  if (auto v = take("plan.kind")) c.plan_kind = parse_plan_kind(*v);
  if (auto v = take("plan.random_count")) c.plan_random_count = std::size_t(parse_u64(*v));
  if (auto v = take("plan.set")) {
    c.plan_set.clear();
    for (const std::string& s : split_list(*v)) c.plan_set.push_back(std::size_t(parse_u64(trim(s))));
  }
  if (auto v = take("seed")) c.seed = parse_u64(*v);
  if (auto v = take("solver.max_iters")) c.max_iters = std::size_t(parse_u64(*v));
  if (auto v = take("solver.rel_cost_tol")) c.rel_cost_tol = parse_double(*v);
  if (auto v = take("solvers")) {
    c.solvers.clear();
    for (const std::string& s : split_list(*v)) c.solvers.push_back(parse_solver_name(trim(s)));
  }
  if (auto v = take("symbols.chu_gammas")) {
    c.chu_gammas.clear();
    for (const std::string& s : split_list(*v)) c.chu_gammas.push_back(int(parse_i64(trim(s))));
  }
  if (auto v = take("symbols.source")) c.symbol_source = parse_symbol_source(*v);
  if (auto v = take("symbols.values")) {
    c.symbol_values.clear();
    for (const std::string& s : split_list(*v)) c.symbol_values.push_back(parse_complex(trim(s)));
  }

  if (!kv.empty()) {
    throw ConfigError("unknown config key '" + kv.begin()->first + "'");
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string text = serialize_config(config);
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)h);
  return std::string(buf);
}

ExperimentConfig default_design_config() {
  ExperimentConfig c;  // the field defaults are the single-bit design study
  c.n_trials = 1;
  return c;
}

ExperimentConfig default_ccdf_config() {
  ExperimentConfig c;
  c.n_bits = 10;
  c.plan_kind = PlanKind::RandomCarriers;
  c.plan_random_count = 2;
  c.plan_set.clear();
  c.symbol_source = SymbolSource::QpskRandom;
  c.symbol_values.clear();
  c.n_trials = 2000;
  return c;
}

ExperimentConfig default_detect_config() {
  ExperimentConfig c;
  c.n_bits = 10;
  c.symbol_source = SymbolSource::Chu;
  c.symbol_values.clear();
  c.n_trials = 20000;
  c.pfa = 1e-5;
  return c;
}

ExperimentConfig default_af_config() {
  ExperimentConfig c = default_detect_config();
  c.solvers = {SolverKind::TrCve};
  return c;
}

namespace {

std::size_t resolved_iters(const ExperimentConfig& config, std::size_t fallback) {
  return config.max_iters != 0 ? config.max_iters : fallback;
}

ReservationPlan build_plan(const ExperimentConfig& config, SplitRng* rng) {
  const WaveformParams params = config.waveform_params();
  switch (config.plan_kind) {
    case PlanKind::Carriers:
      return ReservationPlan::from_informative_carriers(params, config.plan_set);
    case PlanKind::Indices: {
      std::vector<std::size_t> informative(config.plan_set);
      return ReservationPlan::from_informative(params, std::move(informative));
    }
    case PlanKind::RandomCarriers: {
      if (rng == nullptr) {
        throw ConfigError("random plan requires a randomized experiment");
      }
      // Partial Fisher-Yates draw of k distinct carriers.
      std::vector<std::size_t> pool(config.n_carriers);
      for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
      std::vector<std::size_t> chosen;
      for (std::size_t k = 0; k < config.plan_random_count; ++k) {
        const std::size_t j = k + rng->uniform_index(pool.size() - k);
        std::swap(pool[k], pool[j]);
        chosen.push_back(pool[k]);
      }
      return ReservationPlan::from_informative_carriers(params, chosen);
    }
  }
  throw ConfigError("unreachable plan kind");
}

// Informative symbol values in sorted-slot order.
CplxVec informative_symbols_for(const ExperimentConfig& config,
                                const ReservationPlan& plan, SplitRng* rng) {
  const std::size_t N = plan.params().n_carriers();
  const auto& slots = plan.informative();
  CplxVec values(slots.size());
  switch (config.symbol_source) {
    case SymbolSource::Explicit:
      if (config.symbol_values.size() != slots.size()) {
        throw ConfigError("symbols.values count does not match the plan");
      }
      return config.symbol_values;
    case SymbolSource::Chu: {
      // One quadratic-phase code per informative carrier, gamma aligned with
      // the sorted carrier list.
      std::vector<std::size_t> carriers(config.plan_set);
      std::sort(carriers.begin(), carriers.end());
      std::map<std::size_t, CplxVec> codes;
      for (std::size_t i = 0; i < carriers.size(); ++i) {
        codes[carriers[i]] = chu_code(plan.params().n_bits(), config.chu_gammas[i]);
      }
      for (std::size_t j = 0; j < slots.size(); ++j) {
        const std::size_t g = slots[j];
        values[j] = codes.at(g % N)[g / N];
      }
      return values;
    }
    case SymbolSource::QpskRandom:
      for (Cplx& v : values) v = rng->qpsk();
      return values;
    case SymbolSource::UniformPhase:
      for (Cplx& v : values) v = std::polar(1.0, rng->phase());
      return values;
  }
  throw ConfigError("unreachable symbol source");
}

CplxVec uniform_reserved_fill(const ReservationPlan& plan, SplitRng& rng) {
  CplxVec fill(plan.reserved().size());
  for (Cplx& v : fill) v = std::polar(1.0, rng.phase());
  return fill;
}

void write_config_file(const ExperimentConfig& config,
                       const std::filesystem::path& path,
                       std::vector<std::filesystem::path>& files) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path.string());
  out << serialize_config(config);
  files.push_back(path);
}

}  // namespace

namespace {

EnvelopeResult run_envelopes_impl(const ExperimentConfig& config,
                                  const std::filesystem::path& out_dir,
                                  const std::string& prefix, bool emit_files) {
  config.validate();
  if (config.plan_kind == PlanKind::RandomCarriers ||
      (config.symbol_source != SymbolSource::Explicit &&
       config.symbol_source != SymbolSource::Chu)) {
    throw ConfigError("design experiments need a deterministic plan and symbols "
                      "(explicit or chu)");
  }

  const ReservationPlan plan = build_plan(config, nullptr);
  const CplxVec informative = informative_symbols_for(config, plan, nullptr);
  const FixedPart fixed = build_fixed_part(plan, informative);
  const CplxVec zeros(plan.reserved().size(), Cplx(0.0, 0.0));
  const SymbolMatrix initial_symbols = assemble_symbols(plan, informative, zeros);
  BasebandSignal initial = plan.op().synthesize(initial_symbols);

  EnvelopeResult result{std::move(initial), {}, {}, {}};

  const std::string hash = config_hash(config);
  const std::string stem = prefix + "_" + hash + "_";
  std::filesystem::create_directories(out_dir);
  auto out = [&](const std::string& name) { return out_dir / (stem + name); };

  if (emit_files) {
    write_config_file(config, out("config.txt"), result.files);
    write_symbols_csv(out("symbols_initial.csv"), initial_symbols);
    write_signal_csv(out("envelope_initial.csv"), result.initial);
    result.files.push_back(out("symbols_initial.csv"));
    result.files.push_back(out("envelope_initial.csv"));
  }

  SolverConfig solver_config;
  solver_config.max_iters = resolved_iters(config, 800);
  solver_config.rel_cost_tol = config.rel_cost_tol;

  for (SolverKind kind : config.solvers) {
    CplxVec b;
    bool has_trace = false;
    SolverTrace trace;
    switch (kind) {
      case SolverKind::None:
        b = zeros;
        break;
      case SolverKind::UniformFill: {
        SplitRng rng(config.seed, kUniformFillStream);
        b = uniform_reserved_fill(plan, rng);
        break;
      }
      case SolverKind::TrCve: {
        SolveResult r = solve_tr_cve(plan, fixed, solver_config);
        b = std::move(r.b);
        trace = std::move(r.trace);
        has_trace = true;
        break;
      }
      case SolverKind::TrMax: {
        SolveResult r = solve_tr_max(plan, fixed, solver_config);
        b = std::move(r.b);
        trace = std::move(r.trace);
        has_trace = true;
        break;
      }
      case SolverKind::TrE4: {
        SolveResult r = solve_tr_e4(plan, fixed, solver_config);
        b = std::move(r.b);
        trace = std::move(r.trace);
        has_trace = true;
        break;
      }
    }
    const SymbolMatrix symbols = assemble_symbols(plan, informative, b);
    BasebandSignal optimized = plan.op().synthesize(symbols);
    const std::string name = solver_name(kind);
    if (emit_files) {
      write_symbols_csv(out("symbols_" + name + ".csv"), symbols);
      write_signal_csv(out("envelope_" + name + ".csv"), optimized);
      result.files.push_back(out("symbols_" + name + ".csv"));
      result.files.push_back(out("envelope_" + name + ".csv"));
      if (has_trace) {
        write_trace_csv(out("trace_" + name + ".csv"), trace);
        result.files.push_back(out("trace_" + name + ".csv"));
      }
    }
    result.optimized.emplace_back(kind, std::move(optimized));
    if (has_trace) result.traces.emplace_back(kind, std::move(trace));
  }
  return result;
}

}  // namespace

EnvelopeResult run_envelope_experiment(const ExperimentConfig& config,
                                       const std::filesystem::path& out_dir) {
  return run_envelopes_impl(config, out_dir, "design", true);
}

CcdfResult run_ccdf_experiment(const ExperimentConfig& config,
                               const std::filesystem::path& out_dir) {
  config.validate();
  if (config.symbol_source == SymbolSource::Explicit &&
      config.plan_kind == PlanKind::RandomCarriers) {
    throw ConfigError("explicit symbols cannot be paired with a random plan");
  }

  SolverConfig solver_config;
  solver_config.max_iters = resolved_iters(config, 200);
  solver_config.rel_cost_tol = config.rel_cost_tol;

  // Baseline curve is always estimated alongside the requested solvers.
  std::vector<SolverKind> kinds = config.solvers;
  if (std::find(kinds.begin(), kinds.end(), SolverKind::None) == kinds.end()) {
    kinds.push_back(SolverKind::None);
  }

  const bool random_plan = config.plan_kind == PlanKind::RandomCarriers;
  std::optional<ReservationPlan> fixed_plan;
  if (!random_plan) fixed_plan.emplace(build_plan(config, nullptr));

  std::vector<std::vector<double>> pmeprs(kinds.size(),
                                          std::vector<double>(config.n_trials));

  run_parallel(config.n_trials, [&](std::size_t trial) {
    SplitRng rng(config.seed, trial);
    std::optional<ReservationPlan> local_plan;
    const ReservationPlan& plan =
        random_plan ? local_plan.emplace(build_plan(config, &rng)) : *fixed_plan;
    const CplxVec informative = informative_symbols_for(config, plan, &rng);
    const FixedPart fixed = build_fixed_part(plan, informative);

    for (std::size_t s = 0; s < kinds.size(); ++s) {
      double value = 0.0;
      switch (kinds[s]) {
        case SolverKind::None:
          value = pmepr(std::span<const Cplx>(fixed.c));
          break;
        case SolverKind::UniformFill: {
          CplxVec fill = uniform_reserved_fill(plan, rng);
          CplxVec x = fixed.c;
          const CplxVec bx = apply_reserved(plan, fill);
          for (std::size_t l = 0; l < x.size(); ++l) x[l] += bx[l];
          value = pmepr(std::span<const Cplx>(x));
          break;
        }
        case SolverKind::TrCve:
        case SolverKind::TrMax:
        case SolverKind::TrE4: {
          SolveResult r = kinds[s] == SolverKind::TrCve
                              ? solve_tr_cve(plan, fixed, solver_config)
                              : kinds[s] == SolverKind::TrMax
                                    ? solve_tr_max(plan, fixed, solver_config)
                                    : solve_tr_e4(plan, fixed, solver_config);
          CplxVec x = fixed.c;
          const CplxVec bx = apply_reserved(plan, r.b);
          for (std::size_t l = 0; l < x.size(); ++l) x[l] += bx[l];
          value = pmepr(std::span<const Cplx>(x));
          break;
        }
      }
      pmeprs[s][trial] = value;
    }
  });

  // Shared abscissa grid in 0.05 dB steps covering every observed value.
  double max_pm = 1.0;
  for (const auto& v : pmeprs) {
    for (double p : v) max_pm = std::max(max_pm, p);
  }
  const double max_db = 10.0 * std::log10(max_pm);
  const std::size_t n_points = std::size_t(std::floor(max_db / kCcdfGridStepDb)) + 2;

  CcdfResult result;
  const std::string hash = config_hash(config);
  std::filesystem::create_directories(out_dir);
  const std::string stem = "ccdf_" + hash + "_";
  write_config_file(config, out_dir / (stem + "config.txt"), result.files);

  for (std::size_t s = 0; s < kinds.size(); ++s) {
    CcdfCurve curve;
    curve.n_trials = config.n_trials;
    curve.seed = config.seed;
    curve.pmepr0_db.resize(n_points);
    curve.pmepr0_linear.resize(n_points);
    curve.prob.resize(n_points);
    curve.exceed_count.resize(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
      const double db = kCcdfGridStepDb * double(i);
      const double lin = std::pow(10.0, db / 10.0);
      std::size_t count = 0;
      for (double p : pmeprs[s]) {
        if (p > lin) ++count;
      }
      curve.pmepr0_db[i] = db;
      curve.pmepr0_linear[i] = lin;
      curve.exceed_count[i] = count;
      curve.prob[i] = double(count) / double(config.n_trials);
    }

    const std::string name = solver_name(kinds[s]);
    Table curve_table({"pmepr0_db", "pmepr0_linear", "prob"});
    for (std::size_t i = 0; i < n_points; ++i) {
      curve_table.add_row({curve.pmepr0_db[i], curve.pmepr0_linear[i], curve.prob[i]});
    }
    curve_table.set_meta("n_trials", std::uint64_t(config.n_trials));
    curve_table.set_meta("seed", std::uint64_t(config.seed));
    const auto curve_path = out_dir / (stem + "curve_" + name + ".csv");
    curve_table.write(curve_path);
    result.files.push_back(curve_path);

    Table trial_table({"trial", "pmepr"});
    for (std::size_t t = 0; t < config.n_trials; ++t) {
      trial_table.add_row({std::uint64_t(t), pmeprs[s][t]});
    }
    const auto trials_path = out_dir / (stem + "trials_" + name + ".csv");
    trial_table.write(trials_path);
    result.files.push_back(trials_path);

    result.curves.emplace_back(kinds[s], std::move(curve));
    result.pmeprs.emplace_back(kinds[s], std::move(pmeprs[s]));
  }
  return result;
}

DetectionResult run_detection_experiment(const ExperimentConfig& config,
                                         const std::filesystem::path& out_dir) {
  config.validate();
  if (config.symbol_source != SymbolSource::Chu ||
      config.plan_kind != PlanKind::Carriers) {
    throw ConfigError("detection experiment expects chu-coded informative carriers");
  }

  const ReservationPlan plan = build_plan(config, nullptr);
  const CplxVec informative = informative_symbols_for(config, plan, nullptr);
  const FixedPart fixed = build_fixed_part(plan, informative);

  SolverConfig solver_config;
  solver_config.max_iters = resolved_iters(config, 800);
  solver_config.rel_cost_tol = config.rel_cost_tol;

  DetectionResult result;
  const auto add_waveform = [&](const std::string& name, const CplxVec& b) {
    const SymbolMatrix symbols = assemble_symbols(plan, informative, b);
    result.waveforms.emplace_back(
        name, normalize_to_unit_power(plan.op().synthesize(symbols)));
  };

  add_waveform("tr-cve", solve_tr_cve(plan, fixed, solver_config).b);
  add_waveform("tr-max", solve_tr_max(plan, fixed, solver_config).b);
  add_waveform("tr-e4", solve_tr_e4(plan, fixed, solver_config).b);
  {
    SplitRng rng(config.seed, kUniformFillStream);
    add_waveform("uniform-ofdm", uniform_reserved_fill(plan, rng));
  }

  AfGridSpec af_spec{config.af_n_delays, config.af_n_dopplers,
                     config.af_max_delay, config.af_max_doppler};
  DetectionConfig det{config.noise_power, config.pfa, config.snr_grid_db,
                      config.n_trials};

  const std::string hash = config_hash(config);
  std::filesystem::create_directories(out_dir);
  const std::string stem = "detect_" + hash + "_";
  write_config_file(config, out_dir / (stem + "config.txt"), result.files);

  for (const auto& [name, waveform] : result.waveforms) {
    AmbiguityGrid grid = ambiguity_function(waveform, af_spec);
    const auto csv_path = out_dir / (stem + "af_" + name + ".csv");
    const auto bin_path = out_dir / (stem + "af_" + name + ".bin");
    write_af_csv(csv_path, grid);
    write_af_binary(bin_path, grid);
    result.files.push_back(csv_path);
    result.files.push_back(bin_path);
    result.grids.emplace_back(name, std::move(grid));

    // Same seed for every waveform: the noise streams are shared, so the
    // four Pd estimates are paired.
    DetectionCurves curves = detection_probability(waveform, det, config.seed);
    const auto pd_path = out_dir / (stem + "pd_" + name + ".csv");
    write_pd_csv(pd_path, curves);
    result.files.push_back(pd_path);
    result.pd.emplace_back(name, std::move(curves));
  }
  return result;
}

AfResult run_af_experiment(const ExperimentConfig& config,
                           const std::filesystem::path& out_dir) {
  EnvelopeResult designs = run_envelopes_impl(config, out_dir, "af", false);

  AfResult result;
  AfGridSpec af_spec{config.af_n_delays, config.af_n_dopplers,
                     config.af_max_delay, config.af_max_doppler};
  const std::string hash = config_hash(config);
  std::filesystem::create_directories(out_dir);
  const std::string stem = "af_" + hash + "_";
  write_config_file(config, out_dir / (stem + "config.txt"), result.files);

  for (const auto& [kind, waveform] : designs.optimized) {
    AmbiguityGrid grid = ambiguity_function(waveform, af_spec);
    const std::string name = solver_name(kind);
    const auto csv_path = out_dir / (stem + "grid_" + name + ".csv");
    const auto bin_path = out_dir / (stem + "grid_" + name + ".bin");
    write_af_csv(csv_path, grid);
    write_af_binary(bin_path, grid);
    result.files.push_back(csv_path);
    result.files.push_back(bin_path);
    result.grids.emplace_back(kind, std::move(grid));
  }
  return result;
}

}  // namespace ofdmtr
