#include "ofdmtr/tone_reservation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

namespace ofdmtr {

namespace {

std::vector<std::size_t> sorted_unique(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

bool all_zero(const CplxVec& v) {
  return std::all_of(v.begin(), v.end(),
                     [](const Cplx& z) { return z == Cplx(0.0, 0.0); });
}

// Global slot index g = m*N + n resolved to block offset and carrier column.
struct SlotRef {
  std::size_t block_offset;  // m * O_sN
  std::size_t carrier;       // n
};

std::vector<SlotRef> slot_refs(const ReservationPlan& plan,
                               const std::vector<std::size_t>& slots) {
  const std::size_t N = plan.params().n_carriers();
  const std::size_t K = plan.params().samples_per_bit();
  std::vector<SlotRef> refs;
  refs.reserve(slots.size());
  for (std::size_t g : slots) {
    refs.push_back({(g / N) * K, g % N});
  }
  return refs;
}

// x += sum_j coeff[j] * column(refs[j]) placed in the slot's bit block.
void add_reserved(const FourierOperator& op, const std::vector<SlotRef>& refs,
                  const CplxVec& coeffs, CplxVec& x) {
  const std::size_t K = op.params().samples_per_bit();
  for (std::size_t j = 0; j < refs.size(); ++j) {
    const Cplx a = coeffs[j];
    if (a == Cplx(0.0, 0.0)) continue;
    const Cplx* col = op.column(refs[j].carrier).data();
    Cplx* block = x.data() + refs[j].block_offset;
    for (std::size_t k = 0; k < K; ++k) block[k] += a * col[k];
  }
}

// out[j] = <column_j, r> = sum_k conj(F_{k,n_j}) r_{block_j + k}.
void adjoint_reserved(const FourierOperator& op,
                      const std::vector<SlotRef>& refs, const CplxVec& r,
                      CplxVec& out) {
  const std::size_t K = op.params().samples_per_bit();
  for (std::size_t j = 0; j < refs.size(); ++j) {
    const Cplx* col = op.column(refs[j].carrier).data();
    const Cplx* block = r.data() + refs[j].block_offset;
    Cplx acc(0.0, 0.0);
    for (std::size_t k = 0; k < K; ++k) acc += std::conj(col[k]) * block[k];
    out[j] = acc;
  }
}

struct EnvelopeStats {
  double beta = 0.0;      // mean |x|
  double peak_pow = 0.0;  // max |x|^2
  double mean_pow = 0.0;  // mean |x|^2
  double var = 0.0;       // mean (|x| - beta)^2
};

EnvelopeStats envelope_stats(const std::vector<double>& ax) {
  EnvelopeStats s;
  const double n = double(ax.size());
  for (double a : ax) {
    s.beta += a;
    const double p = a * a;
    if (p > s.peak_pow) s.peak_pow = p;
    s.mean_pow += p;
  }
  s.beta /= n;
  s.mean_pow /= n;
  for (double a : ax) {
    const double d = a - s.beta;
    s.var += d * d;
  }
  s.var /= n;
  return s;
}

TraceRecord make_record(std::size_t iter, double cost,
                        const EnvelopeStats& s, std::size_t n_samples) {
  TraceRecord rec;
  rec.iter = iter;
  rec.cost = cost;
  rec.beta = s.beta;
  if (s.mean_pow > 0.0) {
    rec.pmepr = s.peak_pow / s.mean_pow;
    const double c = s.var / (s.beta * s.beta);
    rec.cve = c;
    rec.sqrt_pmepr_upper_bound = std::sqrt(double(n_samples) * c) + 1.0;
  } else {
    rec.pmepr = std::numeric_limits<double>::quiet_NaN();
    rec.cve = std::numeric_limits<double>::quiet_NaN();
    rec.sqrt_pmepr_upper_bound = std::numeric_limits<double>::quiet_NaN();
  }
  return rec;
}

CplxVec initial_reserved(const ReservationPlan& plan,
                         const SolverConfig& config) {
  const std::size_t n = plan.reserved().size();
  if (n == 0) {
    throw DimensionError("solver: reserved set S^R is empty");
  }
  if (config.max_iters < 1) {
    throw DimensionError("solver: max_iters must be >= 1");
  }
  if (config.initial_b.empty()) return CplxVec(n, Cplx(0.0, 0.0));
  if (config.initial_b.size() != n) {
    throw DimensionError("solver: initial_b length does not match |S^R|");
  }
  return config.initial_b;
}

void check_fixed_part(const ReservationPlan& plan, const FixedPart& fixed) {
  if (fixed.c.size() != plan.params().n_samples()) {
    throw DimensionError("solver: fixed part length does not match L");
  }
}

// Consecutive sub-tolerance iterations required before stopping. The
// alternating map stalls transiently near unstable fixed points; a
// single-step test would abort mid-plateau.
constexpr int kStopPatience = 40;

// Smoothed max: m + mu*log(sum_l exp((x2_l - m)/mu)) with m = max x2.
double smoothed_peak(const std::vector<double>& x2, double mu) {
  double m = 0.0;
  for (double p : x2) {
    if (p > m) m = p;
  }
  double s = 0.0;
  for (double p : x2) {
    const double e = (p - m) / mu;
    if (e > -45.0) s += std::exp(e);
  }
  return m + mu * std::log(s);
}

}  // namespace

ReservationPlan::ReservationPlan(WaveformParams params,
                                 std::vector<std::size_t> informative,
                                 std::vector<std::size_t> reserved)
    : params_(params),
      informative_(sorted_unique(std::move(informative))),
      reserved_(sorted_unique(std::move(reserved))),
      op_(std::make_shared<const FourierOperator>(params_)) {
  const std::size_t total = params_.n_codes();
  if (informative_.size() + reserved_.size() != total) {
    throw DimensionError("ReservationPlan: sets must partition the NM code slots");
  }
  std::size_t i = 0, r = 0, expected = 0;
  while (expected < total) {
    if (i < informative_.size() && informative_[i] == expected) {
      ++i;
    } else if (r < reserved_.size() && reserved_[r] == expected) {
      ++r;
    } else {
      throw DimensionError("ReservationPlan: sets overlap or miss slot " +
                           std::to_string(expected));
    }
    ++expected;
  }
}

ReservationPlan ReservationPlan::from_informative(
    WaveformParams params, std::vector<std::size_t> informative) {
  informative = sorted_unique(std::move(informative));
  const std::size_t total = params.n_codes();
  std::vector<std::size_t> reserved;
  reserved.reserve(total - informative.size());
  std::size_t i = 0;
  for (std::size_t g = 0; g < total; ++g) {
    if (i < informative.size() && informative[i] == g) {
      ++i;
    } else {
      reserved.push_back(g);
    }
  }
  if (i != informative.size()) {
    throw DimensionError("ReservationPlan: informative index out of range");
  }
  return ReservationPlan(params, std::move(informative), std::move(reserved));
}

ReservationPlan ReservationPlan::from_informative_carriers(
    WaveformParams params, const std::vector<std::size_t>& carriers) {
  const std::size_t N = params.n_carriers();
  std::vector<std::size_t> informative;
  for (std::size_t n : carriers) {
    if (n >= N) {
      throw DimensionError("ReservationPlan: carrier index out of range");
    }
    for (std::size_t m = 0; m < params.n_bits(); ++m) {
      informative.push_back(m * N + n);
    }
  }
  return from_informative(params, std::move(informative));
}

FixedPart build_fixed_part(const ReservationPlan& plan,
                           const CplxVec& informative_symbols) {
  if (informative_symbols.size() != plan.informative().size()) {
    throw DimensionError("build_fixed_part: symbol count does not match |S^I|");
  }
  FixedPart fixed;
  fixed.c.assign(plan.params().n_samples(), Cplx(0.0, 0.0));
  fixed.informative_symbols = informative_symbols;
  add_reserved(plan.op(), slot_refs(plan, plan.informative()),
               informative_symbols, fixed.c);
  return fixed;
}

CplxVec apply_reserved(const ReservationPlan& plan, const CplxVec& b) {
  if (b.size() != plan.reserved().size()) {
    throw DimensionError("apply_reserved: length does not match |S^R|");
  }
  CplxVec x(plan.params().n_samples(), Cplx(0.0, 0.0));
  add_reserved(plan.op(), slot_refs(plan, plan.reserved()), b, x);
  return x;
}

CplxVec pinv_apply(const ReservationPlan& plan, const CplxVec& r) {
  if (r.size() != plan.params().n_samples()) {
    throw DimensionError("pinv_apply: vector length does not match L");
  }
  CplxVec out(plan.reserved().size());
  adjoint_reserved(plan.op(), slot_refs(plan, plan.reserved()), r, out);
  const double scale = plan.op().gram_diagonal();
  for (Cplx& z : out) z /= scale;
  return out;
}

BetaTheta update_beta_theta(const CplxVec& x) {
  BetaTheta bt;
  bt.theta.resize(x.size(), 0.0);
  if (x.empty()) return bt;
  double sum = 0.0;
  for (std::size_t l = 0; l < x.size(); ++l) {
    sum += std::abs(x[l]);
    if (x[l] != Cplx(0.0, 0.0)) {
      double t = std::arg(x[l]);
      if (t >= std::numbers::pi) t -= 2.0 * std::numbers::pi;
      bt.theta[l] = t;
    }
  }
  bt.beta = sum / double(x.size());
  return bt;
}

SolveResult solve_tr_cve(const ReservationPlan& plan, const FixedPart& fixed,
                         const SolverConfig& config) {
  check_fixed_part(plan, fixed);
  CplxVec b = initial_reserved(plan, config);
  const auto refs = slot_refs(plan, plan.reserved());
  const FourierOperator& op = plan.op();
  const std::size_t L = plan.params().n_samples();
  const double gram = op.gram_diagonal();

  SolveResult result;
  result.trace.degenerate = all_zero(fixed.c) && all_zero(b);

  CplxVec x = fixed.c;
  add_reserved(op, refs, b, x);
  std::vector<double> ax(L);
  CplxVec resid(L);

  double prev_cost = 0.0;
  int below_tol = 0;
  std::size_t iter = 0;
  for (;; ++iter) {
    for (std::size_t l = 0; l < L; ++l) ax[l] = std::abs(x[l]);
    const EnvelopeStats stats = envelope_stats(ax);
    const double cost = stats.var * double(L);
    result.trace.records.push_back(make_record(iter, cost, stats, L));

    if (iter == config.max_iters) break;
    if (config.rel_cost_tol > 0.0 && iter > 0) {
      if (prev_cost == 0.0) break;
      below_tol =
          (prev_cost - cost) < config.rel_cost_tol * prev_cost ? below_tol + 1 : 0;
      if (below_tol >= kStopPatience) break;
    }
    prev_cost = cost;

    // resid = beta e^{j theta} - c, so b = B^dagger(resid) = -B^dagger(c - beta e^{j theta}).
    for (std::size_t l = 0; l < L; ++l) {
      const Cplx target =
          ax[l] > 0.0 ? x[l] * (stats.beta / ax[l]) : Cplx(stats.beta, 0.0);
      resid[l] = target - fixed.c[l];
    }
    adjoint_reserved(op, refs, resid, b);
    for (Cplx& z : b) z /= gram;

    x = fixed.c;
    add_reserved(op, refs, b, x);
  }

  result.trace.iterations_run = iter;
  result.trace.final_b = b;
  result.b = std::move(b);
  return result;
}

SolveResult solve_tr_max(const ReservationPlan& plan, const FixedPart& fixed,
                         const SolverConfig& config) {
  check_fixed_part(plan, fixed);
  CplxVec b = initial_reserved(plan, config);
  const auto refs = slot_refs(plan, plan.reserved());
  const FourierOperator& op = plan.op();
  const std::size_t L = plan.params().n_samples();

  SolveResult result;
  result.trace.degenerate = all_zero(fixed.c) && all_zero(b);

  CplxVec x = fixed.c;
  add_reserved(op, refs, b, x);
  std::vector<double> x2(L), ax(L);
  auto refresh_pow = [&](const CplxVec& v) {
    for (std::size_t l = 0; l < L; ++l) x2[l] = std::norm(v[l]);
  };
  auto record_state = [&](std::size_t iter, double cost) {
    for (std::size_t l = 0; l < L; ++l) ax[l] = std::sqrt(x2[l]);
    result.trace.records.push_back(
        make_record(iter, cost, envelope_stats(ax), L));
  };

  refresh_pow(x);
  double peak0 = 0.0;
  for (double p : x2) {
    if (p > peak0) peak0 = p;
  }
  const double mu0 = std::max(peak0, 1e-300) / 2.0;
  record_state(0, smoothed_peak(x2, mu0));

  constexpr std::size_t kRounds = 10;
  const std::size_t inner_budget = std::max<std::size_t>(10, config.max_iters / kRounds);

  std::vector<double> w(L);
  CplxVec grad(b.size()), weighted(L), prev_b, prev_grad, trial_b, trial_x(L);
  std::size_t total_steps = 0;

  for (std::size_t round = 0; round < kRounds; ++round) {
    const double mu = mu0 * std::pow(0.5, double(round));
    double f = smoothed_peak(x2, mu);
    prev_b.clear();
    prev_grad.clear();

    for (std::size_t it = 0; it < inner_budget; ++it) {
      // Softmax weights of |x|^2 / mu; terms below exp(-45) are negligible.
      double m = 0.0;
      for (double p : x2) {
        if (p > m) m = p;
      }
      double wsum = 0.0;
      for (std::size_t l = 0; l < L; ++l) {
        const double e = (x2[l] - m) / mu;
        w[l] = e > -45.0 ? std::exp(e) : 0.0;
        wsum += w[l];
      }
      for (std::size_t l = 0; l < L; ++l) weighted[l] = (w[l] / wsum) * x[l];
      adjoint_reserved(op, refs, weighted, grad);
      double gn2 = 0.0;
      for (Cplx& g : grad) {
        g *= 2.0;
        gn2 += std::norm(g);
      }
      if (std::sqrt(gn2) <= 1e-12 * std::max(1.0, std::sqrt(m))) break;

      double alpha;
      if (!prev_b.empty()) {
        // Barzilai-Borwein step from the last accepted move.
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < b.size(); ++j) {
          const Cplx db = b[j] - prev_b[j];
          const Cplx dg = grad[j] - prev_grad[j];
          num += std::norm(db);
          den += db.real() * dg.real() + db.imag() * dg.imag();
        }
        alpha = den > 0.0 ? std::clamp(num / den, 1e-12, 1e12) : 1.0;
      } else {
        alpha = mu / (4.0 * op.gram_diagonal());
      }
      prev_b = b;
      prev_grad = grad;

      double fa = f;
      trial_b = b;
      for (int halvings = 0; halvings < 60; ++halvings) {
        for (std::size_t j = 0; j < b.size(); ++j) trial_b[j] = b[j] - alpha * grad[j];
        trial_x = fixed.c;
        add_reserved(op, refs, trial_b, trial_x);
        double tm = 0.0;
        for (std::size_t l = 0; l < L; ++l) {
          const double p = std::norm(trial_x[l]);
          x2[l] = p;  // provisional; refreshed below on reject
          if (p > tm) tm = p;
        }
        double s = 0.0;
        for (std::size_t l = 0; l < L; ++l) {
          const double e = (x2[l] - tm) / mu;
          if (e > -45.0) s += std::exp(e);
        }
        fa = tm + mu * std::log(s);
        if (fa <= f - 1e-4 * alpha * gn2) break;
        alpha *= 0.5;
        if (alpha < 1e-18) break;
      }
      if (fa >= f - 1e-14 * std::abs(f)) {
        if (fa < f) {
          b = trial_b;
          x = trial_x;
          f = fa;
          ++total_steps;
        } else {
          refresh_pow(x);  // x2 holds the rejected trial's powers
        }
        break;
      }
      b = trial_b;
      x = trial_x;
      f = fa;
      ++total_steps;
    }
    refresh_pow(x);
    record_state(round + 1, smoothed_peak(x2, mu));
  }

  result.trace.iterations_run = total_steps;
  result.trace.final_b = b;
  result.b = std::move(b);
  return result;
}

namespace {

double e4_value(const std::vector<double>& x2) {
  double acc = 0.0;
  for (double p : x2) acc += p * p;
  return acc / double(x2.size());
}

}  // namespace

SolveResult solve_tr_e4(const ReservationPlan& plan, const FixedPart& fixed,
                        const SolverConfig& config) {
  check_fixed_part(plan, fixed);
  CplxVec b = initial_reserved(plan, config);
  const auto refs = slot_refs(plan, plan.reserved());
  const FourierOperator& op = plan.op();
  const std::size_t L = plan.params().n_samples();

  SolveResult result;
  result.trace.degenerate = all_zero(fixed.c) && all_zero(b);

  CplxVec x = fixed.c;
  add_reserved(op, refs, b, x);
  std::vector<double> x2(L), ax(L);
  CplxVec grad(b.size()), weighted(L), trial_b(b.size()), trial_x(L);

  auto refresh = [&]() {
    for (std::size_t l = 0; l < L; ++l) x2[l] = std::norm(x[l]);
  };
  refresh();
  double f = e4_value(x2);

  std::size_t iter = 0;
  for (;; ++iter) {
    for (std::size_t l = 0; l < L; ++l) ax[l] = std::sqrt(x2[l]);
    result.trace.records.push_back(make_record(iter, f, envelope_stats(ax), L));
    if (iter == config.max_iters) break;

    // Gradient (4/L) B^H (|x|^2 . x) in the real view.
    for (std::size_t l = 0; l < L; ++l) weighted[l] = x2[l] * x[l];
    adjoint_reserved(op, refs, weighted, grad);
    double gn2 = 0.0;
    for (Cplx& g : grad) {
      g *= 4.0 / double(L);
      gn2 += std::norm(g);
    }
    if (std::sqrt(gn2) < 1e-8) break;

    // Armijo backtracking from unit step, factor 0.5, slope 1e-4.
    double alpha = 1.0;
    double fa = f;
    bool accepted = false;
    while (alpha >= 1e-20) {
      for (std::size_t j = 0; j < b.size(); ++j) trial_b[j] = b[j] - alpha * grad[j];
      trial_x = fixed.c;
      add_reserved(op, refs, trial_b, trial_x);
      double acc = 0.0;
      for (std::size_t l = 0; l < L; ++l) {
        const double p = std::norm(trial_x[l]);
        acc += p * p;
      }
      fa = acc / double(L);
      if (fa <= f - 1e-4 * alpha * gn2) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted || fa >= f) break;
    b = trial_b;
    x = trial_x;
    f = fa;
    refresh();
  }

  result.trace.iterations_run = iter;
  result.trace.final_b = b;
  result.b = std::move(b);
  return result;
}

double e4_objective(const ReservationPlan& plan, const FixedPart& fixed,
                    const CplxVec& b) {
  check_fixed_part(plan, fixed);
  CplxVec x = fixed.c;
  add_reserved(plan.op(), slot_refs(plan, plan.reserved()), b, x);
  double acc = 0.0;
  for (const Cplx& z : x) {
    const double p = std::norm(z);
    acc += p * p;
  }
  return acc / double(x.size());
}

CplxVec e4_gradient(const ReservationPlan& plan, const FixedPart& fixed,
                    const CplxVec& b) {
  check_fixed_part(plan, fixed);
  const auto refs = slot_refs(plan, plan.reserved());
  CplxVec x = fixed.c;
  add_reserved(plan.op(), refs, b, x);
  CplxVec weighted(x.size());
  for (std::size_t l = 0; l < x.size(); ++l) weighted[l] = std::norm(x[l]) * x[l];
  CplxVec grad(b.size());
  adjoint_reserved(plan.op(), refs, weighted, grad);
  for (Cplx& g : grad) g *= 4.0 / double(x.size());
  return grad;
}

SymbolMatrix assemble_symbols(const ReservationPlan& plan,
                              const CplxVec& informative_symbols,
                              const CplxVec& reserved_symbols) {
  if (informative_symbols.size() != plan.informative().size() ||
      reserved_symbols.size() != plan.reserved().size()) {
    throw DimensionError("assemble_symbols: value counts do not match the plan");
  }
  const std::size_t N = plan.params().n_carriers();
  SymbolMatrix symbols(N, plan.params().n_bits());
  for (std::size_t j = 0; j < plan.informative().size(); ++j) {
    const std::size_t g = plan.informative()[j];
    symbols.at(g % N, g / N) = informative_symbols[j];
  }
  for (std::size_t j = 0; j < plan.reserved().size(); ++j) {
    const std::size_t g = plan.reserved()[j];
    symbols.at(g % N, g / N) = reserved_symbols[j];
  }
  return symbols;
}

}  // namespace ofdmtr
