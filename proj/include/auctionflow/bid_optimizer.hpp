#pragma once

// Optimal bidding under a utility/spend trade-off: the discrete argmax, the
// second-price fixed point, the first-price exponential-market root g(a) = 0,
// and multiplier tuning for a fixed expected budget. Every solver has an
// independence-baseline variant that ignores the dependence of utility on the
// market price.

#include <cstddef>
#include <functional>
#include <optional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "auctionflow/landscape.hpp"

namespace auctionflow {

/// Expected profit P(a) for every action a (Algorithm-1 style evaluation).
std::vector<double> action_profits(const DiscreteJoint& joint, const SquareMatrix& spend,
                                   const SquareMatrix& win, double mu);

/// Same evaluation with E[U | M = m] replaced by the marginal E[U].
std::vector<double> action_profits_independent(const DiscreteJoint& joint,
                                               const SquareMatrix& spend,
                                               const SquareMatrix& win, double mu);

/// argmax_a P(a); ties go to the smallest action.
std::size_t optimal_action_discrete(const DiscreteJoint& joint, const SquareMatrix& spend,
                                    const SquareMatrix& win, double mu);

std::size_t optimal_action_discrete_independent(const DiscreteJoint& joint,
                                                const SquareMatrix& spend,
                                                const SquareMatrix& win, double mu);

/// E[U | E° = e°, M = a] as a function of the bid a.
struct ConditionalMean {
  std::function<double(double)> fn;
  std::optional<double> constant;

  static ConditionalMean of_constant(double u);
  static ConditionalMean of(std::function<double(double)> fn);
  double operator()(double a) const { return constant ? *constant : fn(a); }
};

/// Root of a = E[U | M = a] / mu by bisection on [lo, hi] (|gap| <= 1e-10).
/// A constant conditional mean u returns u / mu exactly.
double solve_spa(const ConditionalMean& conditional_mean, double mu, double lo, double hi);

/// Second-price analog for the exponential model:
/// a = C p (lambda1/lambda) exp((lambda - lambda1) a), solved by safeguarded
/// Newton. Throws NoSolutionError when no root exists.
double solve_spa_exponential(const ExpMarketOpportunity& opp, double C);

/// g(a) = a + (e^{lambda a} - 1)/lambda - C p (lambda1/lambda) e^{(lambda - lambda1) a}
double fpa_optimality_residual(const ExpMarketOpportunity& opp, double C, double a);
double fpa_optimality_derivative(const ExpMarketOpportunity& opp, double C, double a);

enum class UniquenessClause { kNone, kLambda1AboveLambda, kSmallValue };

struct UniquenessCheck {
  bool unique = false;
  UniquenessClause clause = UniquenessClause::kNone;

  std::string describe() const;
};

/// Sufficient conditions for a unique root of g: lambda1 > lambda, or
/// lambda u / (2 mu) < 1 with u = p.
UniquenessCheck check_uniqueness_conditions(const ExpMarketOpportunity& opp, double mu);

/// Which critical point of the per-opportunity Lagrangian to bid at when g
/// has three roots (the first and third are local maxima).
enum class RootChoice {
  kSmallest,        // the smallest root
  kBestLagrangian,  // whichever local maximum has the larger Lagrangian
};

struct FpaSolution {
  double bid = 0.0;
  double residual = 0.0;
  int newton_steps = 0;
  int bisection_steps = 0;
  bool converged = false;
  bool multiple_roots = false;  // g has three roots
  int root_count = 1;
  double alternative_root = 0.0;  // the other local maximum when multiple_roots
};

struct FpaSolverOptions {
  double residual_tol = 1e-12;
  double step_tol = 1e-12;
  int max_iter = 200;
  RootChoice root_choice = RootChoice::kSmallest;
  /// Optional Newton start (e.g. the bid at a nearby multiplier); ignored
  /// when NaN or outside the bracket of the root being polished.
  double initial_guess = std::numeric_limits<double>::quiet_NaN();
};

/// Root of g. g'' changes sign at most once (concave, then convex), so the
/// roots are located exactly from the turning points of g; each is then
/// polished by Newton-Raphson with analytic g', falling back to bisection
/// inside a maintained bracket [lo, hi] with g(lo) < 0 < g(hi).
FpaSolution solve_fpa_exponential(const ExpMarketOpportunity& opp, double C,
                                  const FpaSolverOptions& options = {});

/// p (1 - e^{-lambda1 a}) - mu a (1 - e^{-lambda a}) with mu = 1 / C. Its
/// derivative is -mu lambda e^{-lambda a} g(a).
double fpa_opportunity_lagrangian(const ExpMarketOpportunity& opp, double C, double a);

/// Signs of g on a geometric grid up to where g is positive for good.
/// Returns the number of sign changes and the bracket of the first one.
struct SignScan {
  int sign_changes = 0;
  double first_lo = 0.0;
  double first_hi = 0.0;
};
SignScan scan_fpa_sign_changes(const ExpMarketOpportunity& opp, double C, int points = 256);

struct MultiplierState {
  double C = 1.0;
  double r = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct TraceRow {
  int iter = 0;
  double C = 0.0;
  double S = 0.0;
  double r = 0.0;
};

struct TuneOptions {
  double damping = 1.0;  // C <- C / r^(damping / 2); 1 reproduces C / sqrt(r)
  int max_zero_spend_doublings = 60;
  RootChoice root_choice = RootChoice::kSmallest;
};

struct TuneResult {
  MultiplierState state;
  double expected_conversions = 0.0;  // always with the true lambda1
  double expected_spend = 0.0;
  std::vector<double> bids;
  std::vector<TraceRow> trajectory;
  int multi_root_opportunities = 0;
  std::string failure;  // empty on success
};

/// Bids for every opportunity at multiplier C.
/// `hints`, when nonempty, holds one Newton start per opportunity.
std::vector<double> landscape_bids(const ExpLandscape& landscape, double C,
                                   bool dependency_aware, int* multi_root_count = nullptr,
                                   RootChoice root_choice = RootChoice::kSmallest,
                                   std::span<const double> hints = {});

TuneResult tune_multiplier(const ExpLandscape& landscape, double budget, double C0, double delta,
                           int max_iter, bool dependency_aware, const TuneOptions& options = {});

}  // namespace auctionflow
