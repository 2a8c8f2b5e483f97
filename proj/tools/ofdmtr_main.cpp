#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ofdmtr/csv.hpp"
#include "ofdmtr/experiment.hpp"
#include "ofdmtr/metrics.hpp"
#include "ofdmtr/rng.hpp"

namespace {

using namespace ofdmtr;

struct CommonOpts {
  std::string config_path;
  std::string out_dir = "out";
  std::string solver;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t iters = 0;
  std::size_t trials = 0;
  bool trials_set = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "key = value config file");
  cmd->add_option("--out", opts.out_dir, "output directory")->capture_default_str();
  cmd->add_option("--solver", opts.solver,
                  "restrict to one solver: tr-cve|tr-max|tr-e4|none");
  cmd->add_option("--seed", opts.seed, "64-bit experiment seed")
      ->each([&](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--iters", opts.iters, "solver iteration budget (0 = default)");
  cmd->add_option("--trials", opts.trials, "Monte-Carlo trial count")
      ->each([&](const std::string&) { opts.trials_set = true; });
}

ExperimentConfig resolve_config(const CommonOpts& opts,
                                ExperimentConfig defaults) {
  ExperimentConfig config = std::move(defaults);
  if (!opts.config_path.empty()) config = load_config(opts.config_path);
  if (opts.seed_set) config.seed = opts.seed;
  if (opts.iters != 0) config.max_iters = opts.iters;
  if (opts.trials_set && opts.trials != 0) config.n_trials = opts.trials;
  if (!opts.solver.empty()) config.solvers = {parse_solver_name(opts.solver)};
  config.validate();
  return config;
}

void warn_low_oversampling(const ExperimentConfig& config) {
  if (!config.waveform_params().oversampling_adequate()) {
    std::cerr << "warning: oversampling < 4; sampled PMEPR may underestimate "
                 "the continuous envelope peak\n";
  }
}

int cmd_design(const CommonOpts& opts) {
  const ExperimentConfig config = resolve_config(opts, default_design_config());
  warn_low_oversampling(config);
  const EnvelopeResult result = run_envelope_experiment(config, opts.out_dir);
  std::printf("initial  pmepr=%.6f\n", pmepr(result.initial));
  for (const auto& [kind, signal] : result.optimized) {
    std::printf("%-8s pmepr=%.6f\n", solver_name(kind).c_str(), pmepr(signal));
  }
  std::printf("wrote %zu files to %s\n", result.files.size(), opts.out_dir.c_str());
  return 0;
}

int cmd_ccdf(const CommonOpts& opts) {
  const ExperimentConfig config = resolve_config(opts, default_ccdf_config());
  warn_low_oversampling(config);
  const CcdfResult result = run_ccdf_experiment(config, opts.out_dir);
  for (const auto& [kind, curve] : result.curves) {
    // report the 10% exceedance level as a quick summary
    double level = curve.pmepr0_db.back();
    for (std::size_t i = 0; i < curve.prob.size(); ++i) {
      if (curve.prob[i] <= 0.1) {
        level = curve.pmepr0_db[i];
        break;
      }
    }
    std::printf("%-12s P(PMEPR>x)=0.1 near x=%.2f dB (%zu trials)\n",
                solver_name(kind).c_str(), level, curve.n_trials);
  }
  std::printf("wrote %zu files to %s\n", result.files.size(), opts.out_dir.c_str());
  return 0;
}

int cmd_af(const CommonOpts& opts) {
  const ExperimentConfig config = resolve_config(opts, default_af_config());
  const AfResult result = run_af_experiment(config, opts.out_dir);
  for (const auto& [kind, grid] : result.grids) {
    std::printf("%-12s grid %zux%zu, peak sidelobe=%.4f\n",
                solver_name(kind).c_str(), grid.delays.size(),
                grid.dopplers.size(),
                max_sidelobe(grid, double(config.oversampling), 1.0));
  }
  std::printf("wrote %zu files to %s\n", result.files.size(), opts.out_dir.c_str());
  return 0;
}

int cmd_detect(const CommonOpts& opts) {
  const ExperimentConfig config = resolve_config(opts, default_detect_config());
  const DetectionResult result = run_detection_experiment(config, opts.out_dir);
  for (const auto& [name, curves] : result.pd) {
    std::printf("%-12s", name.c_str());
    for (std::size_t i = 0; i < curves.snr_db.size(); ++i) {
      std::printf(" %.3f", curves.pd_mc[i]);
    }
    std::printf("\n");
  }
  std::printf("wrote %zu files to %s\n", result.files.size(), opts.out_dir.c_str());
  return 0;
}

bool check(const char* name, bool ok) {
  std::printf("[%s] %s\n", ok ? "ok" : "FAIL", name);
  return ok;
}

int cmd_selftest() {
  bool all = true;

  {
    bool ok = true;
    for (std::size_t n_carriers : {1, 5, 16}) {
      for (std::size_t os : {1, 4, 10}) {
        WaveformParams params(n_carriers, 1, os, 1.0e6);
        FourierOperator op(params);
        const std::size_t K = params.samples_per_bit();
        for (std::size_t a = 0; a < n_carriers && ok; ++a) {
          for (std::size_t b = 0; b < n_carriers && ok; ++b) {
            Cplx acc(0.0, 0.0);
            for (std::size_t k = 0; k < K; ++k) {
              acc += std::conj(op.column(a)[k]) * op.column(b)[k];
            }
            const Cplx expect = a == b ? Cplx(double(K), 0.0) : Cplx(0.0, 0.0);
            ok = ok && std::abs(acc - expect) < 1e-10;
          }
        }
      }
    }
    all &= check("Fourier columns orthogonal (F^H F = O_sN I)", ok);
  }

  {
    bool ok = true;
    SplitRng rng(42);
    for (int rep = 0; rep < 20 && ok; ++rep) {
      WaveformParams params(2 + rng.uniform_index(6), 1 + rng.uniform_index(4),
                            1 + rng.uniform_index(6), 1.0e6);
      SymbolMatrix symbols(params.n_carriers(), params.n_bits());
      for (std::size_t n = 0; n < params.n_carriers(); ++n) {
        for (std::size_t m = 0; m < params.n_bits(); ++m) {
          symbols.at(n, m) = rng.complex_gaussian(1.0);
        }
      }
      const BasebandSignal fast = synthesize(params, symbols);
      const std::size_t K = params.samples_per_bit();
      double max_rel = 0.0;
      for (std::size_t m = 0; m < params.n_bits(); ++m) {
        for (std::size_t k = 0; k < K; ++k) {
          Cplx direct(0.0, 0.0);
          for (std::size_t n = 0; n < params.n_carriers(); ++n) {
            direct += symbols.at(n, m) *
                      std::polar(1.0, 2.0 * std::numbers::pi * double(n) *
                                          double(k) / double(K));
          }
          const Cplx got = fast.samples()[k + m * K];
          max_rel = std::max(max_rel, std::abs(got - direct) /
                                          std::max(1.0, std::abs(direct)));
        }
      }
      ok = max_rel <= 1e-12;
    }
    all &= check("synthesis matches the direct double-sum evaluation", ok);
  }

  {
    bool ok = true;
    SplitRng rng(7);
    for (int rep = 0; rep < 200 && ok; ++rep) {
      WaveformParams params(6, 10, 10, 1.0e6);
      SymbolMatrix symbols(6, 10);
      for (std::size_t n = 0; n < 6; ++n) {
        for (std::size_t m = 0; m < 10; ++m) symbols.at(n, m) = rng.qpsk();
      }
      const BoundCheck bound = pmepr_cve_bound(synthesize(params, symbols));
      ok = bound.holds;
    }
    all &= check("envelope bound holds on random QPSK grids", ok);
  }

  {
    bool ok = true;
    SplitRng rng(11);
    for (int rep = 0; rep < 10 && ok; ++rep) {
      WaveformParams params(4 + rng.uniform_index(5), 1 + rng.uniform_index(4), 4,
                            1.0e6);
      std::vector<std::size_t> informative;
      for (std::size_t g = 0; g < params.n_codes(); ++g) {
        if (rng.uniform01() < 0.3) informative.push_back(g);
      }
      if (informative.size() == params.n_codes()) informative.pop_back();
      const ReservationPlan plan =
          ReservationPlan::from_informative(params, informative);
      CplxVec b(plan.reserved().size());
      for (Cplx& z : b) z = rng.complex_gaussian(1.0);
      const CplxVec back = pinv_apply(plan, apply_reserved(plan, b));
      for (std::size_t j = 0; j < b.size(); ++j) {
        ok = ok && std::abs(back[j] - b[j]) < 1e-10;
      }
    }
    all &= check("pseudo-inverse is a left inverse on S^R", ok);
  }

  {
    bool ok = true;
    SplitRng rng(13);
    for (int rep = 0; rep < 10 && ok; ++rep) {
      WaveformParams params(4 + rng.uniform_index(5), 1 + rng.uniform_index(6), 4,
                            1.0e6);
      std::vector<std::size_t> carriers = {rng.uniform_index(params.n_carriers())};
      const ReservationPlan plan =
          ReservationPlan::from_informative_carriers(params, carriers);
      CplxVec a(plan.informative().size());
      for (Cplx& z : a) z = rng.qpsk();
      const FixedPart fixed = build_fixed_part(plan, a);
      SolverConfig cfg;
      cfg.max_iters = 150;
      const SolveResult r = solve_tr_cve(plan, fixed, cfg);
      for (std::size_t i = 1; i < r.trace.records.size(); ++i) {
        ok = ok && r.trace.records[i].cost <= r.trace.records[i - 1].cost + 1e-12;
      }
    }
    all &= check("tr-cve cost sequence is nonincreasing", ok);
  }

  {
    bool ok = true;
    SplitRng rng(17);
    for (int rep = 0; rep < 5 && ok; ++rep) {
      WaveformParams params(5, 2, 4, 1.0e6);
      const ReservationPlan plan =
          ReservationPlan::from_informative_carriers(params, {1, 2});
      CplxVec a(plan.informative().size());
      for (Cplx& z : a) z = rng.qpsk();
      const FixedPart fixed = build_fixed_part(plan, a);
      CplxVec b(plan.reserved().size());
      for (Cplx& z : b) z = rng.complex_gaussian(0.5);
      const CplxVec grad = e4_gradient(plan, fixed, b);
      const double h = 1e-6;
      double max_rel = 0.0;
      for (std::size_t j = 0; j < b.size(); ++j) {
        CplxVec bp = b, bm = b;
        bp[j] += h;
        bm[j] -= h;
        const double d_re =
            (e4_objective(plan, fixed, bp) - e4_objective(plan, fixed, bm)) / (2 * h);
        bp = b;
        bm = b;
        bp[j] += Cplx(0.0, h);
        bm[j] -= Cplx(0.0, h);
        const double d_im =
            (e4_objective(plan, fixed, bp) - e4_objective(plan, fixed, bm)) / (2 * h);
        const double denom = std::max(1e-12, std::abs(grad[j]));
        max_rel = std::max(max_rel, std::abs(Cplx(d_re, d_im) - grad[j]) / denom);
      }
      ok = max_rel <= 1e-5;
    }
    all &= check("tr-e4 gradient matches central finite differences", ok);
  }

  {
    SplitRng a(123, 9), b(123, 9), c(123, 10);
    bool same = true, differ = false;
    for (int i = 0; i < 1000; ++i) {
      const std::uint64_t va = a.next_u64();
      same = same && va == b.next_u64();
      differ = differ || va != c.next_u64();
    }
    all &= check("rng streams are reproducible and split", same && differ);
  }

  return all ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-PMEPR multicarrier radar waveform designer"};
  app.require_subcommand(1);

  CommonOpts design_opts, ccdf_opts, af_opts, detect_opts;
  CLI::App* design = app.add_subcommand("design", "one-shot solve: symbols, envelopes, traces");
  add_common(design, design_opts);
  CLI::App* ccdf = app.add_subcommand("ccdf", "Monte-Carlo PMEPR CCDF study");
  add_common(ccdf, ccdf_opts);
  CLI::App* af = app.add_subcommand("af", "ambiguity-function grids of designed waveforms");
  add_common(af, af_opts);
  CLI::App* detect = app.add_subcommand("detect", "matched-filter detection study");
  add_common(detect, detect_opts);
  CLI::App* selftest = app.add_subcommand("selftest", "run the built-in invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (design->parsed()) return cmd_design(design_opts);
    if (ccdf->parsed()) return cmd_ccdf(ccdf_opts);
    if (af->parsed()) return cmd_af(af_opts);
    if (detect->parsed()) return cmd_detect(detect_opts);
    if (selftest->parsed()) return cmd_selftest();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
