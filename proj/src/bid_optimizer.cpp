#include "auctionflow/bid_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "auctionflow/auction_core.hpp"
#include "auctionflow/errors.hpp"

namespace auctionflow {

namespace {

void check_conformable(const DiscreteJoint& joint, const SquareMatrix& spend,
                       const SquareMatrix& win) {
  if (spend.size() != joint.n() || win.size() != joint.n()) {
    throw DomainError("joint, spend and win matrices must share side length n");
  }
  for (double w : win.values()) {
    if (!(w >= 0.0 && w <= 1.0)) throw DomainError("win entries must lie in [0, 1]");
  }
  for (double s : spend.values()) {
    if (!(s >= 0.0)) throw DomainError("spend entries must be >= 0");
  }
}

std::vector<double> profits_given_column_utility(std::span<const double> column_utility,
                                                 std::span<const double> market_marginal,
                                                 const SquareMatrix& spend,
                                                 const SquareMatrix& win, double mu) {
  const std::size_t n = market_marginal.size();
  std::vector<double> profit(n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    double total = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
      if (market_marginal[m] == 0.0) continue;
      const double w = win(m, a);
      total += (column_utility[m] * w - mu * spend(m, a) * w) * market_marginal[m];
    }
    profit[a] = total;
  }
  return profit;
}

std::size_t first_argmax(const std::vector<double>& values) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < values.size(); ++a) {
    if (values[a] > values[best]) best = a;
  }
  return best;
}

struct RootResult {
  double x = 0.0;
  double fx = 0.0;
  int newton = 0;
  int bisection = 0;
  bool converged = false;
};

// Newton's method kept inside a bracket with f(lo) < 0 < f(hi). A step that
// leaves the bracket, meets a non-positive slope, or fails to halve the step
// before last becomes a bisection, so progress is never slower than bisection
// (the slow creep of Newton down a steep exponential is the case in point).
template <class FDf>
RootResult bracketed_newton(FDf&& f_df, double lo, double hi, double x0, double residual_tol,
                            double step_tol, int max_iter) {
  RootResult res;
  double x = x0;
  double step_before_last = std::numeric_limits<double>::infinity();
  double last_step = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    const auto [fx, dfx] = f_df(x);
    res.x = x;
    res.fx = fx;
    if (std::isnan(fx)) {
      throw NumericError("root finder met a NaN residual");
    }
    if (fx < 0.0) {
      lo = std::max(lo, x);
    } else if (fx > 0.0) {
      hi = std::min(hi, x);
    } else {
      res.converged = true;
      return res;
    }
    double next = x - fx / dfx;
    // A converged Newton iterate can sit exactly on a bracket end (the
    // correction rounds to zero), so test convergence before the bracket.
    if (std::abs(fx) <= residual_tol && std::isfinite(next) &&
        std::abs(next - x) <= step_tol * std::max(1.0, std::abs(x))) {
      res.converged = true;
      ++res.newton;
      return res;
    }
    const bool newton_ok = dfx > 0.0 && std::isfinite(next) && next > lo && next < hi &&
                           std::abs(next - x) <= 0.5 * step_before_last;
    if (newton_ok) {
      ++res.newton;
    } else {
      next = 0.5 * (lo + hi);
      ++res.bisection;
    }
    const double step = std::abs(next - x);
    step_before_last = last_step;
    last_step = step;
    const double scale = std::max(1.0, std::abs(x));
    if (std::abs(fx) <= residual_tol && step <= step_tol * scale) {
      res.converged = true;
      return res;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(hi), 1e-300)) {
      const auto [fn, dn] = f_df(next);
      (void)dn;
      res.x = next;
      res.fx = fn;
      res.converged = true;
      return res;
    }
    x = next;
  }
  const auto [fx, dfx] = f_df(x);
  (void)dfx;
  res.x = x;
  res.fx = fx;
  return res;
}

// Largest argument for which std::exp stays comfortably finite.
constexpr double kExpOverflowArg = 700.0;

void require_multiplier(double C) {
  if (!(C > 0.0) || !std::isfinite(C)) {
    throw DomainError("multiplier C must be positive and finite");
  }
}

}  // namespace

std::vector<double> action_profits(const DiscreteJoint& joint, const SquareMatrix& spend,
                                   const SquareMatrix& win, double mu) {
  check_conformable(joint, spend, win);
  const auto marginal = joint.market_marginal();
  const auto conditional = joint.conditional_utility();
  return profits_given_column_utility(conditional, marginal, spend, win, mu);
}

std::vector<double> action_profits_independent(const DiscreteJoint& joint,
                                               const SquareMatrix& spend,
                                               const SquareMatrix& win, double mu) {
  check_conformable(joint, spend, win);
  const auto marginal = joint.market_marginal();
  const std::vector<double> flat(joint.n(), joint.mean_utility());
  return profits_given_column_utility(flat, marginal, spend, win, mu);
}

std::size_t optimal_action_discrete(const DiscreteJoint& joint, const SquareMatrix& spend,
                                    const SquareMatrix& win, double mu) {
  return first_argmax(action_profits(joint, spend, win, mu));
}

std::size_t optimal_action_discrete_independent(const DiscreteJoint& joint,
                                                const SquareMatrix& spend,
                                                const SquareMatrix& win, double mu) {
  return first_argmax(action_profits_independent(joint, spend, win, mu));
}

ConditionalMean ConditionalMean::of_constant(double u) {
  return {[u](double) { return u; }, u};
}

ConditionalMean ConditionalMean::of(std::function<double(double)> fn) {
  return {std::move(fn), std::nullopt};
}

double solve_spa(const ConditionalMean& conditional_mean, double mu, double lo, double hi) {
  if (!(mu > 0.0)) {
    throw DomainError("solve_spa needs mu > 0");
  }
  if (conditional_mean.constant) {
    return *conditional_mean.constant / mu;
  }
  if (!(hi > lo)) {
    throw DomainError("solve_spa needs lo < hi");
  }
  auto gap = [&](double a) { return a - conditional_mean(a) / mu; };
  double f_lo = gap(lo);
  const double f_hi = gap(hi);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if ((f_lo < 0.0) == (f_hi < 0.0)) {
    std::ostringstream os;
    os << "solve_spa: no sign change on [" << lo << ", " << hi << "] (gap " << f_lo << ", "
       << f_hi << ")";
    throw NoSolutionError(os.str(), lo, hi, f_lo, f_hi);
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = gap(mid);
    if (f_mid == 0.0 || (hi - lo) <= 1e-15 * std::max(1.0, std::abs(mid))) {
      return mid;
    }
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double solve_spa_exponential(const ExpMarketOpportunity& opp, double C) {
  opp.validate();
  require_multiplier(C);
  const double k = C * opp.p * opp.lambda1 / opp.lambda;
  const double rate = opp.lambda - opp.lambda1;
  auto f_df = [&](double a) {
    const double e = std::exp(rate * a);
    return std::pair{a - k * e, 1.0 - k * rate * e};
  };
  double hi = 2.0 * k;
  if (rate > 0.0) {
    // h(a) = a - k e^{rate a} is concave with its peak where k rate e^{rate a} = 1.
    const double peak = k * rate >= 1.0 ? 0.0 : -std::log(k * rate) / rate;
    const double f_peak = f_df(peak).first;
    if (!(f_peak > 0.0)) {
      throw NoSolutionError("second-price condition has no root: bid value never catches up",
                            0.0, peak, -k, f_peak);
    }
    hi = peak;
  }
  const auto root = bracketed_newton(f_df, 0.0, hi, 0.0, 1e-14, 1e-14, 400);
  return root.x;
}

double fpa_optimality_residual(const ExpMarketOpportunity& opp, double C, double a) {
  const double k = C * opp.p * opp.lambda1 / opp.lambda;
  const double rate = opp.lambda - opp.lambda1;
  if (opp.lambda * a < kExpOverflowArg && rate * a < kExpOverflowArg) {
    return a + std::expm1(opp.lambda * a) / opp.lambda - k * std::exp(rate * a);
  }
  // Factor out e^{lambda a} so that both exponentials cannot overflow into
  // inf - inf; the sign (and an infinite magnitude) stays meaningful.
  const double bracket = 1.0 / opp.lambda - k * std::exp(-opp.lambda1 * a);
  if (bracket == 0.0) return a - 1.0 / opp.lambda;
  return a - 1.0 / opp.lambda + std::exp(opp.lambda * a) * bracket;
}

double fpa_optimality_derivative(const ExpMarketOpportunity& opp, double C, double a) {
  const double k = C * opp.p * opp.lambda1 / opp.lambda;
  const double rate = opp.lambda - opp.lambda1;
  if (opp.lambda * a < kExpOverflowArg && rate * a < kExpOverflowArg) {
    return 1.0 + std::exp(opp.lambda * a) - k * rate * std::exp(rate * a);
  }
  const double bracket = 1.0 - k * rate * std::exp(-opp.lambda1 * a);
  if (bracket == 0.0) return 1.0;
  return 1.0 + std::exp(opp.lambda * a) * bracket;
}

std::string UniquenessCheck::describe() const {
  switch (clause) {
    case UniquenessClause::kLambda1AboveLambda:
      return "lambda1 > lambda";
    case UniquenessClause::kSmallValue:
      return "lambda*u/(2*mu) < 1";
    case UniquenessClause::kNone:
      break;
  }
  return "none";
}

UniquenessCheck check_uniqueness_conditions(const ExpMarketOpportunity& opp, double mu) {
  // A worthless opportunity (p = 0) is not a valid landscape entry, but the
  // sufficient condition still has a well-defined answer for it.
  if (opp.p == 0.0) {
    ExpMarketOpportunity rates = opp;
    rates.p = 0.5;
    rates.validate();
  } else {
    opp.validate();
  }
  if (opp.lambda1 > opp.lambda) {
    return {true, UniquenessClause::kLambda1AboveLambda};
  }
  if (!(mu > 0.0)) {
    return {false, UniquenessClause::kNone};
  }
  if (opp.lambda * opp.p / (2.0 * mu) < 1.0) {
    return {true, UniquenessClause::kSmallValue};
  }
  return {false, UniquenessClause::kNone};
}

namespace {

double fpa_curvature(const ExpMarketOpportunity& opp, double C, double a) {
  const double k = C * opp.p * opp.lambda1 / opp.lambda;
  const double rate = opp.lambda - opp.lambda1;
  if (opp.lambda * a < kExpOverflowArg) {
    return opp.lambda * std::exp(opp.lambda * a) - k * rate * rate * std::exp(rate * a);
  }
  return std::exp(opp.lambda * a) * (opp.lambda - k * rate * rate * std::exp(-opp.lambda1 * a));
}

// A point beyond every root of g: with lambda1 >= lambda, g(a) >= a - k;
// otherwise once e^{lambda1 a} >= 2 k lambda and e^{lambda a} > 2 the
// exponential part of g exceeds the 1/lambda it has to overcome.
double far_point(const ExpMarketOpportunity& opp, double k) {
  double a_far = 0.0;
  if (opp.lambda1 >= opp.lambda) {
    a_far = std::max(k, 1.0 / opp.lambda);
  } else {
    a_far = std::log(2.0) / opp.lambda;
    if (2.0 * k * opp.lambda > 1.0) {
      a_far = std::max(a_far, std::log(2.0 * k * opp.lambda) / opp.lambda1);
    }
  }
  return 1.5 * a_far;
}

// Grows hi until f(hi) > 0.
template <class F>
double expand_upper(F&& f, double hi) {
  hi = std::max(hi, std::numeric_limits<double>::min());
  for (int i = 0; !(f(hi) > 0.0); ++i) {
    if (i > 2100) throw NumericError("could not bracket a root of g");
    hi *= 2.0;
  }
  return hi;
}

}  // namespace

double fpa_opportunity_lagrangian(const ExpMarketOpportunity& opp, double C, double a) {
  return -opp.p * std::expm1(-opp.lambda1 * a) + a * std::expm1(-opp.lambda * a) / C;
}

SignScan scan_fpa_sign_changes(const ExpMarketOpportunity& opp, double C, int points) {
  const double k = C * opp.p * opp.lambda1 / opp.lambda;
  auto g = [&](double a) { return fpa_optimality_residual(opp, C, a); };
  const double a_far = expand_upper(g, far_point(opp, k));
  const double a_min = a_far * 1e-9;
  SignScan scan;
  double prev_a = 0.0;
  bool prev_neg = true;  // g(0) = -k < 0
  const double ratio = std::pow(a_far / a_min, 1.0 / std::max(1, points - 1));
  double a = a_min;
  for (int i = 0; i < points; ++i, a *= ratio) {
    const double x = i + 1 == points ? a_far : a;
    const bool neg = g(x) < 0.0;
    if (neg != prev_neg) {
      if (scan.sign_changes == 0) {
        scan.first_lo = prev_a;
        scan.first_hi = x;
      }
      ++scan.sign_changes;
    }
    prev_neg = neg;
    prev_a = x;
  }
  return scan;
}

FpaSolution solve_fpa_exponential(const ExpMarketOpportunity& opp, double C,
                                  const FpaSolverOptions& options) {
  opp.validate();
  require_multiplier(C);
  const double k = C * opp.p * opp.lambda1 / opp.lambda;
  auto g = [&](double a) { return fpa_optimality_residual(opp, C, a); };
  auto g_dg = [&](double a) {
    return std::pair{fpa_optimality_residual(opp, C, a), fpa_optimality_derivative(opp, C, a)};
  };
  if (!(g(0.0) < 0.0)) {
    throw NumericError("g(0) must be negative for a valid opportunity");
  }
  const double residual_tol = options.residual_tol * std::max(1.0, k);
  const double a_far = expand_upper(g, far_point(opp, k));

  FpaSolution out;
  int newton = 0;
  int bisection = 0;
  // Turning points of g are roots of g'; found to full precision with the
  // same bracketed Newton, using g'' as the slope.
  auto turning_point = [&](double lo, double hi, bool increasing) {
    auto h = [&](double a) {
      const double d1 = fpa_optimality_derivative(opp, C, a);
      const double d2 = fpa_curvature(opp, C, a);
      return increasing ? std::pair{d1, d2} : std::pair{-d1, -d2};
    };
    const auto r = bracketed_newton(h, lo, hi, hi, std::numeric_limits<double>::infinity(),
                                    options.step_tol, options.max_iter);
    return r.x;
  };
  auto polish = [&](double lo, double hi, double start) {
    const auto r = bracketed_newton(g_dg, lo, hi, start, residual_tol, options.step_tol,
                                    options.max_iter);
    newton += r.newton;
    bisection += r.bisection;
    return r;
  };

  // Intervals holding the smallest root and, when there are three, the largest.
  double lo1 = 0.0, hi1 = a_far, start1 = 0.0;
  bool three = false;
  double lo3 = 0.0, hi3 = a_far;
  const double rate = opp.lambda - opp.lambda1;
  const double q = rate > 0.0 ? k * rate * rate / opp.lambda : 0.0;
  if (rate > 0.0 && q > 1.0) {
    // g'' < 0 on [0, a_star) and > 0 beyond: concave, then convex.
    const double a_star = std::min(std::log(q) / opp.lambda1, a_far);
    const double slope0 = fpa_optimality_derivative(opp, C, 0.0);
    const double slope_star = fpa_optimality_derivative(opp, C, a_star);
    // d: minimiser of g on the convex part (exists when g' < 0 at a_star).
    double d = a_star;
    if (slope_star < 0.0) {
      auto dg = [&](double a) { return fpa_optimality_derivative(opp, C, a); };
      const double d_hi = expand_upper(dg, std::max(a_star, a_far));
      d = turning_point(a_star, d_hi, true);
    }
    if (slope0 > 0.0) {
      // c: maximiser of g on the concave part.
      const double c = slope_star >= 0.0 ? a_star : turning_point(0.0, a_star, false);
      const double g_c = g(c);
      if (g_c > 0.0) {
        hi1 = c;
        if (slope_star < 0.0 && g(d) < 0.0) {
          three = true;
          lo3 = d;
        }
      } else {
        lo1 = std::max(c, d);
        start1 = hi1;
      }
    } else {
      lo1 = d;
      start1 = hi1;
    }
  } else if (rate > 0.0) {
    // Convex throughout: Newton from the right descends monotonically.
    start1 = hi1;
  }

  // ln(1 + k lambda) / lambda solves e^{lambda a} - 1 = k lambda; where g is
  // positive there it is a much tighter upper end than a_far.
  const double guess = std::log1p(k * opp.lambda) / opp.lambda;
  if (guess > lo1 && guess < hi1 && g(guess) > 0.0) {
    hi1 = guess;
    start1 = guess;
  }
  if (options.initial_guess > lo1 && options.initial_guess < hi1) {
    start1 = options.initial_guess;
  }
  const auto first = polish(lo1, hi1, start1);
  out.bid = first.x;
  out.residual = first.fx;
  out.converged = first.converged;
  if (three) {
    const double start3 =
        options.initial_guess > lo3 && options.initial_guess < hi3 ? options.initial_guess : hi3;
    const auto third = polish(lo3, hi3, start3);
    out.multiple_roots = true;
    out.root_count = 3;
    out.alternative_root = third.x;
    if (options.root_choice == RootChoice::kBestLagrangian &&
        fpa_opportunity_lagrangian(opp, C, third.x) > fpa_opportunity_lagrangian(opp, C, first.x)) {
      out.alternative_root = first.x;
      out.bid = third.x;
      out.residual = third.fx;
      out.converged = third.converged;
    }
  }
  out.newton_steps = newton;
  out.bisection_steps = bisection;
  return out;
}

std::vector<double> landscape_bids(const ExpLandscape& landscape, double C,
                                   bool dependency_aware, int* multi_root_count,
                                   RootChoice root_choice, std::span<const double> hints) {
  if (!hints.empty() && hints.size() != landscape.size()) {
    throw DomainError("hints must hold one bid per opportunity");
  }
  std::vector<double> bids(landscape.size());
  FpaSolverOptions options;
  options.root_choice = root_choice;
  int multi = 0;
  for (std::size_t k = 0; k < landscape.size(); ++k) {
    const ExpMarketOpportunity& opp = landscape.opportunities[k];
    if (!hints.empty()) options.initial_guess = hints[k];
    const auto sol = solve_fpa_exponential(dependency_aware ? opp : opp.independent(), C, options);
    bids[k] = sol.bid;
    multi += sol.multiple_roots ? 1 : 0;
  }
  if (multi_root_count != nullptr) {
    *multi_root_count = multi;
  }
  return bids;
}

TuneResult tune_multiplier(const ExpLandscape& landscape, double budget, double C0, double delta,
                           int max_iter, bool dependency_aware, const TuneOptions& options) {
  if (!(budget > 0.0)) throw DomainError("budget must be > 0");
  if (!(C0 > 0.0)) throw DomainError("initial multiplier must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("tolerance must lie in (0, 1)");
  if (max_iter < 1) throw DomainError("max_iter must be >= 1");
  if (!(options.damping > 0.0)) throw DomainError("damping must be > 0");

  TuneResult result;
  double C = C0;
  auto spend_at = [&](double c) {
    // The bids at the previous multiplier are close, so they seed Newton.
    const std::vector<double> previous = std::move(result.bids);
    result.bids = landscape_bids(landscape, c, dependency_aware, &result.multi_root_opportunities,
                                 options.root_choice, previous);
    return expected_totals(landscape, result.bids).spending;
  };

  double S = spend_at(C);
  for (int d = 0; S == 0.0 && d < options.max_zero_spend_doublings; ++d) {
    C *= 2.0;
    S = spend_at(C);
  }
  if (S == 0.0) {
    result.state = {C, 0.0, 0, false};
    result.failure = "expected spend stayed zero after doubling the multiplier";
    return result;
  }

  for (int iter = 1; iter <= max_iter; ++iter) {
    const double r = S / budget;
    result.trajectory.push_back({iter, C, S, r});
    result.state = {C, r, iter, false};
    if (std::abs(r - 1.0) <= delta) {
      result.state.converged = true;
      break;
    }
    if (iter == max_iter) {
      break;
    }
    C /= std::pow(r, 0.5 * options.damping);
    S = spend_at(C);
  }
  if (!result.state.converged) {
    std::ostringstream os;
    os << "multiplier tuning did not reach |S/B - 1| <= " << delta << " in " << max_iter
       << " iterations (last r = " << result.state.r << ")";
    result.failure = os.str();
  }
  result.expected_spend = S;
  double conversions = 0.0;
  for (std::size_t k = 0; k < landscape.size(); ++k) {
    conversions += expected_conversions_exp(landscape.opportunities[k], result.bids[k]);
  }
  result.expected_conversions = conversions;
  return result;
}

}  // namespace auctionflow
