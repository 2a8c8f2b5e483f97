#ifndef OFDMTR_TONE_RESERVATION_HPP
#define OFDMTR_TONE_RESERVATION_HPP

#include <cstddef>
#include <memory>
#include <vector>

#include "ofdmtr/waveform.hpp"

namespace ofdmtr {

/// Disjoint split of the NM code slots {0,...,NM-1} into an informative set
/// S^I (payload, fixed) and a reserved set S^R (free variables used to smooth
/// the envelope). Both sets are kept sorted; together they cover every slot.
class ReservationPlan {
 public:
  ReservationPlan(WaveformParams params, std::vector<std::size_t> informative,
                  std::vector<std::size_t> reserved);

  /// Reserved set is the complement of the informative set.
  static ReservationPlan from_informative(WaveformParams params,
                                          std::vector<std::size_t> informative);
  /// Marks every bit of the given carriers informative.
  static ReservationPlan from_informative_carriers(
      WaveformParams params, const std::vector<std::size_t>& carriers);

  const WaveformParams& params() const { return params_; }
  const std::vector<std::size_t>& informative() const { return informative_; }
  const std::vector<std::size_t>& reserved() const { return reserved_; }

  /// Shared synthesis operator, built once per plan.
  const FourierOperator& op() const { return *op_; }

 private:
  WaveformParams params_;
  std::vector<std::size_t> informative_;
  std::vector<std::size_t> reserved_;
  std::shared_ptr<const FourierOperator> op_;
};

/// Fixed contribution of the informative symbols: c = A_{S^I} a_{S^I}.
struct FixedPart {
  CplxVec c;                    // length L
  CplxVec informative_symbols;  // the a_{S^I} c was built from
};

struct SolverConfig {
  std::size_t max_iters = 800;
  /// Early stop once the relative cost decrease stays below this for 40
  /// consecutive iterations; 0 disables early stopping (fixed iteration
  /// count, reproducing the reference behaviour exactly).
  double rel_cost_tol = 1e-10;
  /// Starting reserved symbols over S^R in sorted-index order; empty = zeros.
  CplxVec initial_b;
};

struct TraceRecord {
  std::size_t iter = 0;
  double cost = 0.0;  // solver objective at this iterate
  double beta = 0.0;  // mean envelope ||x||_1 / L
  double pmepr = 0.0; // NaN when the signal is identically zero
  double cve = 0.0;   // NaN when the signal is identically zero
  double sqrt_pmepr_upper_bound = 0.0;  // sqrt(L*cve) + 1
};

struct SolverTrace {
  std::vector<TraceRecord> records;
  CplxVec final_b;
  std::size_t iterations_run = 0;
  /// All-zero fixed part with an all-zero start: the zero vector is a fixed
  /// point and the result is returned as-is rather than raising.
  bool degenerate = false;
};

struct SolveResult {
  CplxVec b;  // reserved symbols over S^R (sorted order)
  SolverTrace trace;
};

/// c = A_{S^I} a_{S^I}, computed blockwise without materializing A.
FixedPart build_fixed_part(const ReservationPlan& plan,
                           const CplxVec& informative_symbols);

/// B*b where B = A_{S^R}; returns a length-L vector.
CplxVec apply_reserved(const ReservationPlan& plan, const CplxVec& b);

/// B^dagger r = (B^H B)^{-1} B^H r. Columns of B are orthogonal with
/// B^H B = O_sN * I, so this reduces to B^H r / (O_sN).
CplxVec pinv_apply(const ReservationPlan& plan, const CplxVec& r);

struct BetaTheta {
  double beta = 0.0;          // ||x||_1 / L
  std::vector<double> theta;  // per-sample angle in [-pi, pi); 0 at zeros
};

BetaTheta update_beta_theta(const CplxVec& x);

/// Iterative least squares on the envelope-variance objective
/// || B b + c - beta e^{j theta} ||^2: alternate beta/theta with the exact
/// least-squares update b = -B^dagger (c - beta e^{j theta}). The recorded
/// cost sequence is monotonically nonincreasing.
SolveResult solve_tr_cve(const ReservationPlan& plan, const FixedPart& fixed,
                         const SolverConfig& config);

/// Minimizes the envelope peak max_l |c_l + (Bb)_l| through a smoothed
/// log-sum-exp objective mu*log(sum exp(|x_l|^2/mu)) with continuation
/// (mu halved each of 10 outer rounds). Trace records are per outer round.
SolveResult solve_tr_max(const ReservationPlan& plan, const FixedPart& fixed,
                         const SolverConfig& config);

/// Gradient descent with Armijo backtracking on E_l |x_l|^4,
/// gradient (4/L) B^H (|x|^2 . x); stops when the gradient norm
/// drops below 1e-8 or the iteration budget runs out.
SolveResult solve_tr_e4(const ReservationPlan& plan, const FixedPart& fixed,
                        const SolverConfig& config);

/// E_l |x_l|^4 at x = c + B b (the solve_tr_e4 objective, exposed for tests).
double e4_objective(const ReservationPlan& plan, const FixedPart& fixed,
                    const CplxVec& b);
/// Analytic gradient of e4_objective in the real view (d/du + j d/dv).
CplxVec e4_gradient(const ReservationPlan& plan, const FixedPart& fixed,
                    const CplxVec& b);

/// Full symbol matrix from per-set values in sorted-index order.
SymbolMatrix assemble_symbols(const ReservationPlan& plan,
                              const CplxVec& informative_symbols,
                              const CplxVec& reserved_symbols);

}  // namespace ofdmtr

#endif
