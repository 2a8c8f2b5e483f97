#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "ofdmtr/metrics.hpp"
#include "ofdmtr/rng.hpp"
#include "oracles.hpp"

using namespace ofdmtr;

namespace {

// Convergence-study instance: six carriers, one bit, carriers 2 and 3 fixed
// to 1, the other four reserved.
struct StudyInstance {
  WaveformParams params{6, 1, 10, 50.0e6 / 6.0};
  ReservationPlan plan = ReservationPlan::from_informative_carriers(params, {2, 3});
  FixedPart fixed = build_fixed_part(plan, {Cplx(1.0, 0.0), Cplx(1.0, 0.0)});
};

double final_pmepr(const ReservationPlan& plan, const FixedPart& fixed,
                   const CplxVec& b) {
  CplxVec x = fixed.c;
  const CplxVec bx = apply_reserved(plan, b);
  for (std::size_t l = 0; l < x.size(); ++l) x[l] += bx[l];
  return pmepr(std::span<const Cplx>(x));
}

}  // namespace

TEST_CASE("plan validation") {
  WaveformParams params(4, 2, 4, 1.0e6);
  // partition checks
  CHECK_THROWS_AS(ReservationPlan(params, {0, 1}, {1, 2, 3}), DimensionError);
  CHECK_THROWS_AS(ReservationPlan(params, {0, 1}, {2, 3}), DimensionError);
  CHECK_THROWS_AS(ReservationPlan::from_informative(params, {8}), DimensionError);
  CHECK_THROWS_AS(ReservationPlan::from_informative_carriers(params, {4}),
                  DimensionError);

  const ReservationPlan plan = ReservationPlan::from_informative(params, {1, 5});
  CHECK(plan.informative() == std::vector<std::size_t>{1, 5});
  CHECK(plan.reserved() == std::vector<std::size_t>{0, 2, 3, 4, 6, 7});

  const ReservationPlan by_carrier =
      ReservationPlan::from_informative_carriers(params, {3});
  CHECK(by_carrier.informative() == std::vector<std::size_t>{3, 7});
}

TEST_CASE("fixed part of an empty informative set is zero") {
  WaveformParams params(3, 2, 4, 1.0e6);
  const ReservationPlan plan = ReservationPlan::from_informative(params, {});
  const FixedPart fixed = build_fixed_part(plan, {});
  for (const Cplx& s : fixed.c) CHECK(s == Cplx(0.0, 0.0));
}

TEST_CASE("study-instance fixed part has PMEPR 2") {
  StudyInstance inst;
  CHECK(pmepr(std::span<const Cplx>(inst.fixed.c)) ==
        doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("fixed part equals zero-padded synthesis") {
  SplitRng rng(41);
  for (int rep = 0; rep < 20; ++rep) {
    WaveformParams params(2 + rng.uniform_index(6), 1 + rng.uniform_index(4), 4,
                          1.0e6);
    const ReservationPlan plan = oracles::random_plan(params, rng);
    CplxVec a(plan.informative().size());
    for (Cplx& z : a) z = rng.complex_gaussian(1.0);
    const FixedPart fixed = build_fixed_part(plan, a);

    SymbolMatrix zero_padded(params.n_carriers(), params.n_bits());
    for (std::size_t j = 0; j < plan.informative().size(); ++j) {
      const std::size_t g = plan.informative()[j];
      zero_padded.at(g % params.n_carriers(), g / params.n_carriers()) = a[j];
    }
    const BasebandSignal want = synthesize(params, zero_padded);
    CHECK(oracles::max_rel_error(fixed.c, want.samples()) <= 1e-12);
  }
  StudyInstance inst;
  CHECK_THROWS_AS(build_fixed_part(inst.plan, CplxVec(3)), DimensionError);
}

TEST_CASE("apply_reserved matches the dense operator") {
  SplitRng rng(43);
  WaveformParams params(5, 3, 4, 1.0e6);
  const ReservationPlan plan = oracles::random_plan(params, rng);

  SUBCASE("zero input") {
    const CplxVec x = apply_reserved(plan, CplxVec(plan.reserved().size()));
    for (const Cplx& s : x) CHECK(s == Cplx(0.0, 0.0));
  }

  SUBCASE("single reserved slot is a pure tone in its bit block") {
    CplxVec b(plan.reserved().size(), Cplx(0.0, 0.0));
    b[1] = 1.0;
    const std::size_t g = plan.reserved()[1];
    const std::size_t m = g / params.n_carriers();
    const std::size_t n = g % params.n_carriers();
    const std::size_t K = params.samples_per_bit();
    const CplxVec x = apply_reserved(plan, b);
    for (std::size_t l = 0; l < x.size(); ++l) {
      if (l / K == m) {
        const double phase = 2.0 * std::numbers::pi * double(n) *
                             double(l % K) / double(K);
        CHECK(std::abs(x[l] - Cplx(std::cos(phase), std::sin(phase))) < 1e-12);
      } else {
        CHECK(x[l] == Cplx(0.0, 0.0));
      }
    }
  }

  SUBCASE("random input against the dense matrix") {
    const auto cols = oracles::dense_columns(params, plan.reserved());
    for (int rep = 0; rep < 20; ++rep) {
      CplxVec b(plan.reserved().size());
      for (Cplx& z : b) z = rng.complex_gaussian(1.0);
      CHECK(oracles::max_rel_error(apply_reserved(plan, b),
                                   oracles::dense_apply(cols, b)) <= 1e-12);
    }
  }

  CHECK_THROWS_AS(apply_reserved(plan, CplxVec(plan.reserved().size() + 1)),
                  DimensionError);
}

TEST_CASE("pinv_apply: left inverse, null space, dense oracle") {
  SplitRng rng(47);
  WaveformParams params(6, 2, 4, 1.0e6);
  const ReservationPlan plan = ReservationPlan::from_informative_carriers(params, {0, 4});

  SUBCASE("left inverse") {
    for (int rep = 0; rep < 20; ++rep) {
      CplxVec b(plan.reserved().size());
      for (Cplx& z : b) z = rng.complex_gaussian(2.0);
      const CplxVec back = pinv_apply(plan, apply_reserved(plan, b));
      for (std::size_t j = 0; j < b.size(); ++j) {
        CHECK(std::abs(back[j] - b[j]) < 1e-10);
      }
    }
  }

  SUBCASE("tone outside the reserved range maps to zero") {
    SymbolMatrix tone(params.n_carriers(), params.n_bits());
    tone.at(0, 1) = 1.0;  // informative carrier
    const BasebandSignal r = synthesize(params, tone);
    const CplxVec z = pinv_apply(plan, r.samples());
    for (const Cplx& v : z) CHECK(std::abs(v) < 1e-10);
  }

  SUBCASE("random vector against normal equations") {
    const auto cols = oracles::dense_columns(params, plan.reserved());
    for (int rep = 0; rep < 10; ++rep) {
      CplxVec r(params.n_samples());
      for (Cplx& z : r) z = rng.complex_gaussian(1.0);
      const CplxVec want = oracles::dense_pinv_apply(cols, r);
      const CplxVec got = pinv_apply(plan, r);
      CHECK(oracles::max_rel_error(got, want) <= 1e-10);
    }
  }

  CHECK_THROWS_AS(pinv_apply(plan, CplxVec(params.n_samples() + 2)),
                  DimensionError);
}

TEST_CASE("update_beta_theta conventions") {
  {
    const BetaTheta bt = update_beta_theta({Cplx(1.0, 0.0), Cplx(0.0, 1.0)});
    CHECK(bt.beta == doctest::Approx(1.0));
    CHECK(bt.theta[0] == doctest::Approx(0.0));
    CHECK(bt.theta[1] == doctest::Approx(std::numbers::pi / 2.0));
  }
  {
    const BetaTheta bt = update_beta_theta(CplxVec(4, Cplx(0.0, 0.0)));
    CHECK(bt.beta == 0.0);
    for (double t : bt.theta) CHECK(t == 0.0);
  }
  {
    // angle range is [-pi, pi): the negative real axis maps to -pi
    const BetaTheta bt = update_beta_theta({Cplx(-2.0, 0.0)});
    CHECK(bt.theta[0] == doctest::Approx(-std::numbers::pi));
    CHECK(bt.theta[0] < std::numbers::pi);
  }
  {
    StudyInstance inst;
    const BetaTheta bt = update_beta_theta(inst.fixed.c);
    double want = 0.0;  // mean of 2|cos(pi k / 60)|
    for (int k = 0; k < 60; ++k) {
      want += 2.0 * std::abs(std::cos(std::numbers::pi * double(k) / 60.0));
    }
    want /= 60.0;
    CHECK(bt.beta == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("tr-cve reproduces the convergence study") {
  StudyInstance inst;
  SolverConfig config;
  config.max_iters = 800;
  config.rel_cost_tol = 0.0;  // fixed-iteration mode
  const SolveResult result = solve_tr_cve(inst.plan, inst.fixed, config);
  CHECK(result.trace.iterations_run == 800);
  CHECK(result.trace.records.size() == 801);
  CHECK_FALSE(result.trace.degenerate);
  CHECK(final_pmepr(inst.plan, inst.fixed, result.b) ==
        doctest::Approx(1.05).epsilon(0.01));
  // trace cost is nonincreasing
  for (std::size_t i = 1; i < result.trace.records.size(); ++i) {
    CHECK(result.trace.records[i].cost <=
          result.trace.records[i - 1].cost + 1e-12);
  }
  // recorded initial state matches the fixed part
  CHECK(result.trace.records[0].pmepr == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("tr-cve zero fixed point is flagged degenerate") {
  WaveformParams params(4, 1, 4, 1.0e6);
  const ReservationPlan plan = ReservationPlan::from_informative(params, {});
  const FixedPart fixed = build_fixed_part(plan, {});
  SolverConfig config;
  config.max_iters = 5;
  const SolveResult result = solve_tr_cve(plan, fixed, config);
  CHECK(result.trace.degenerate);
  for (const Cplx& z : result.b) CHECK(z == Cplx(0.0, 0.0));
}

TEST_CASE("tr-cve cost never increases on random instances") {
  SplitRng rng(53);
  for (int rep = 0; rep < 100; ++rep) {
    WaveformParams params(4 + rng.uniform_index(7), 1 + rng.uniform_index(10),
                          2 + rng.uniform_index(4), 1.0e6);
    const ReservationPlan plan = oracles::random_plan(params, rng);
    CplxVec a(plan.informative().size());
    for (Cplx& z : a) z = rng.complex_gaussian(1.0);
    const FixedPart fixed = build_fixed_part(plan, a);
    SolverConfig config;
    config.max_iters = 60;
    config.rel_cost_tol = 0.0;
    // random starting point: the monotonicity argument holds from any b
    config.initial_b.resize(plan.reserved().size());
    for (Cplx& z : config.initial_b) z = rng.complex_gaussian(1.0);
    const SolveResult result = solve_tr_cve(plan, fixed, config);
    for (std::size_t i = 1; i < result.trace.records.size(); ++i) {
      CHECK(result.trace.records[i].cost <=
            result.trace.records[i - 1].cost + 1e-12);
    }
  }
}

TEST_CASE("a constant-envelope iterate is a fixed point with zero cost") {
  WaveformParams params(5, 1, 6, 1.0e6);
  const ReservationPlan plan = ReservationPlan::from_informative(params, {});
  const FixedPart fixed = build_fixed_part(plan, {});
  // b synthesizing a pure tone -> constant envelope
  CplxVec b(plan.reserved().size(), Cplx(0.0, 0.0));
  b[3] = Cplx(0.8, -0.6);
  SolverConfig config;
  config.max_iters = 1;
  config.rel_cost_tol = 0.0;
  config.initial_b = b;
  const SolveResult result = solve_tr_cve(plan, fixed, config);
  CHECK(result.trace.records[0].cost == doctest::Approx(0.0).epsilon(1e-12));
  for (std::size_t j = 0; j < b.size(); ++j) {
    CHECK(std::abs(result.b[j] - b[j]) < 1e-10);
  }
}

TEST_CASE("tr-max cancels a tone that lies in the reserved range") {
  WaveformParams params(3, 1, 4, 1.0e6);
  const ReservationPlan plan = ReservationPlan::from_informative(params, {});
  // c is the carrier-1 tone; S^R covers every carrier, so exact cancellation
  // is feasible. Built directly, bypassing build_fixed_part.
  FixedPart tone;
  tone.c.resize(params.n_samples());
  const FourierOperator op(params);
  for (std::size_t k = 0; k < params.n_samples(); ++k) tone.c[k] = op.column(1)[k];
  SolverConfig config;
  config.max_iters = 400;
  const SolveResult result = solve_tr_max(plan, tone, config);
  CplxVec x = tone.c;
  const CplxVec bx = apply_reserved(plan, result.b);
  double peak = 0.0;
  for (std::size_t l = 0; l < x.size(); ++l) peak = std::max(peak, std::abs(x[l] + bx[l]));
  CHECK(peak < 0.1);
}

TEST_CASE("tr-max reaches the reference level on the study instance") {
  StudyInstance inst;
  SolverConfig config;
  config.max_iters = 800;
  const SolveResult result = solve_tr_max(inst.plan, inst.fixed, config);
  CHECK(final_pmepr(inst.plan, inst.fixed, result.b) ==
        doctest::Approx(1.30).epsilon(0.04));
}

TEST_CASE("tr-max objective matches a dense grid search on a tiny instance") {
  WaveformParams params(3, 1, 4, 1.0e6);
  const ReservationPlan plan = ReservationPlan::from_informative(params, {1, 2});
  const FixedPart fixed = build_fixed_part(plan, {Cplx(1.0, 0.0), Cplx(0.0, 0.7)});
  REQUIRE(plan.reserved().size() == 1);

  SolverConfig config;
  config.max_iters = 800;
  const SolveResult result = solve_tr_max(plan, fixed, config);
  CplxVec x = fixed.c;
  const CplxVec bx = apply_reserved(plan, result.b);
  double solver_peak = 0.0;
  for (std::size_t l = 0; l < x.size(); ++l) {
    solver_peak = std::max(solver_peak, std::abs(x[l] + bx[l]));
  }

  // two-stage grid search over the complex disc for the single free symbol
  const auto cols = oracles::dense_columns(params, plan.reserved());
  auto objective = [&](Cplx b) {
    double peak = 0.0;
    for (std::size_t l = 0; l < fixed.c.size(); ++l) {
      peak = std::max(peak, std::abs(fixed.c[l] + b * cols[0][l]));
    }
    return peak;
  };
  Cplx best(0.0, 0.0);
  double best_peak = objective(best);
  double radius = 2.0, step = 0.02;
  for (int stage = 0; stage < 3; ++stage) {
    const Cplx center = best;
    for (double re = -radius; re <= radius; re += step) {
      for (double im = -radius; im <= radius; im += step) {
        const Cplx cand = center + Cplx(re, im);
        const double peak = objective(cand);
        if (peak < best_peak) {
          best_peak = peak;
          best = cand;
        }
      }
    }
    radius = 2.0 * step;
    step *= 0.05;
  }
  CHECK(solver_peak == doctest::Approx(best_peak).epsilon(1e-2));
}

TEST_CASE("tr-e4 stays at the quartic global minimum for zero input") {
  WaveformParams params(4, 1, 4, 1.0e6);
  const ReservationPlan plan = ReservationPlan::from_informative(params, {});
  const FixedPart fixed = build_fixed_part(plan, {});
  SolverConfig config;
  config.max_iters = 50;
  const SolveResult result = solve_tr_e4(plan, fixed, config);
  CHECK(result.trace.degenerate);
  for (const Cplx& z : result.b) CHECK(z == Cplx(0.0, 0.0));
}

TEST_CASE("tr-e4 reaches the reference level on the study instance") {
  StudyInstance inst;
  SolverConfig config;
  config.max_iters = 800;
  const SolveResult result = solve_tr_e4(inst.plan, inst.fixed, config);
  CHECK(final_pmepr(inst.plan, inst.fixed, result.b) ==
        doctest::Approx(1.51).epsilon(0.04));
  // accepted steps never increase the objective
  for (std::size_t i = 1; i < result.trace.records.size(); ++i) {
    CHECK(result.trace.records[i].cost <= result.trace.records[i - 1].cost + 1e-15);
  }
}

TEST_CASE("tr-e4 gradient matches central finite differences") {
  SplitRng rng(59);
  for (int rep = 0; rep < 50; ++rep) {
    WaveformParams params(3 + rng.uniform_index(5), 1 + rng.uniform_index(3),
                          2 + rng.uniform_index(4), 1.0e6);
    const ReservationPlan plan = oracles::random_plan(params, rng);
    CplxVec a(plan.informative().size());
    for (Cplx& z : a) z = rng.qpsk();
    const FixedPart fixed = build_fixed_part(plan, a);
    CplxVec b(plan.reserved().size());
    for (Cplx& z : b) z = rng.complex_gaussian(0.5);
    const CplxVec grad = e4_gradient(plan, fixed, b);
    const double h = 1e-6;
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
      const double scale = std::max(std::abs(grad[j]), 1e-9);
      CHECK(std::abs(Cplx(d_re, d_im) - grad[j]) / scale <= 1e-5);
    }
  }
}

TEST_CASE("solver ordering on the study instance") {
  StudyInstance inst;
  SolverConfig config;
  config.max_iters = 800;
  config.rel_cost_tol = 0.0;
  const double initial = pmepr(std::span<const Cplx>(inst.fixed.c));
  const double cve_pm =
      final_pmepr(inst.plan, inst.fixed, solve_tr_cve(inst.plan, inst.fixed, config).b);
  const double max_pm =
      final_pmepr(inst.plan, inst.fixed, solve_tr_max(inst.plan, inst.fixed, config).b);
  CHECK(cve_pm < max_pm);
  CHECK(max_pm < initial);
}

TEST_CASE("solvers reject an empty reserved set") {
  WaveformParams params(3, 1, 4, 1.0e6);
  const ReservationPlan plan = ReservationPlan::from_informative(params, {0, 1, 2});
  const FixedPart fixed = build_fixed_part(plan, {Cplx(1.0, 0.0), Cplx(1.0, 0.0), Cplx(1.0, 0.0)});
  SolverConfig config;
  CHECK_THROWS_AS(solve_tr_cve(plan, fixed, config), DimensionError);
  CHECK_THROWS_AS(solve_tr_max(plan, fixed, config), DimensionError);
  CHECK_THROWS_AS(solve_tr_e4(plan, fixed, config), DimensionError);
}
