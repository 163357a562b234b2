#include <doctest.h>

#include <cmath>
#include <vector>

#include "auctionflow/auction_core.hpp"
#include "auctionflow/bid_optimizer.hpp"
#include "auctionflow/errors.hpp"
#include "auctionflow/experiment.hpp"
#include "auctionflow/rng.hpp"
#include "oracles.hpp"

using namespace auctionflow;

namespace {

struct TwoByTwo {
  DiscreteJoint joint;
  SquareMatrix win;
  SquareMatrix spend;
};

TwoByTwo worked_example() {
  TwoByTwo e;
  e.joint.probs = SquareMatrix(2);
  e.joint.probs(0, 0) = 0.4;
  e.joint.probs(0, 1) = 0.1;
  e.joint.probs(1, 0) = 0.1;
  e.joint.probs(1, 1) = 0.4;
  e.win = SquareMatrix(2);
  for (std::size_t m = 0; m < 2; ++m) {
    for (std::size_t a = 0; a < 2; ++a) e.win(m, a) = m <= a ? 1.0 : 0.0;
  }
  e.spend = discrete_spend_matrix(2);
  return e;
}

// Independent evaluation of the expected profit of an action by summing over
// the joint cells directly.
double brute_profit(const DiscreteJoint& joint, const SquareMatrix& spend, const SquareMatrix& win,
                    double mu, std::size_t a, bool dependency_aware) {
  const std::size_t n = joint.n();
  double mean_u = 0.0;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t m = 0; m < n; ++m) mean_u += static_cast<double>(u) * joint.probs(u, m);
  }
  double total = 0.0;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t m = 0; m < n; ++m) {
      const double value = dependency_aware ? static_cast<double>(u) : mean_u;
      total += joint.probs(u, m) * win(m, a) * (value - mu * spend(m, a));
    }
  }
  return total;
}

double g_direct(const ExpMarketOpportunity& o, double C, double a) {
  return a + std::expm1(o.lambda * a) / o.lambda -
         C * o.p * (o.lambda1 / o.lambda) * std::exp((o.lambda - o.lambda1) * a);
}

}  // namespace

TEST_CASE("discrete argmax: worked 2x2 example picks action 1 in both variants") {
  const auto e = worked_example();
  const auto profits = action_profits(e.joint, e.spend, e.win, 0.1);
  CHECK(profits[0] == doctest::Approx(0.05));
  CHECK(profits[1] == doctest::Approx(0.3));
  CHECK(optimal_action_discrete(e.joint, e.spend, e.win, 0.1) == 1);
  const auto base = action_profits_independent(e.joint, e.spend, e.win, 0.1);
  CHECK(base[0] == doctest::Approx((0.5 - 0.1) * 0.5));
  CHECK(base[1] == doctest::Approx(0.5 - 0.2));
  CHECK(optimal_action_discrete_independent(e.joint, e.spend, e.win, 0.1) == 1);
}

TEST_CASE("discrete argmax: agrees with exhaustive search on random 20x20 instances") {
  const auto spend = discrete_spend_matrix(20);
  for (std::size_t k = 0; k < 200; ++k) {
    const auto opp = generate_discrete_opportunity(20, 0.5 * static_cast<double>(k % 7), 17, k);
    for (double mu : {0.01, 0.3, 1.0, 4.0}) {
      std::vector<double> dep(20), ind(20);
      for (std::size_t a = 0; a < 20; ++a) {
        dep[a] = brute_profit(opp.joint, spend, opp.win, mu, a, true);
        ind[a] = brute_profit(opp.joint, spend, opp.win, mu, a, false);
      }
      const auto a_dep = optimal_action_discrete(opp.joint, spend, opp.win, mu);
      const auto a_ind = optimal_action_discrete_independent(opp.joint, spend, opp.win, mu);
      // Allow rounding-level ties between the two evaluation orders.
      CHECK(dep[a_dep] >= dep[oracle::argmax(dep)] - 1e-12);
      CHECK(ind[a_ind] >= ind[oracle::argmax(ind)] - 1e-12);
      CHECK(dep[a_dep] >= dep[a_ind] - 1e-12);
    }
  }
}

TEST_CASE("discrete argmax: independent joint makes both variants agree") {
  DiscreteJoint joint{SquareMatrix(4)};
  const double pu[4] = {0.1, 0.2, 0.3, 0.4};
  const double pm[4] = {0.25, 0.25, 0.3, 0.2};
  for (int u = 0; u < 4; ++u) {
    for (int m = 0; m < 4; ++m) joint.probs(u, m) = pu[u] * pm[m];
  }
  const auto spend = discrete_spend_matrix(4);
  auto opp = generate_discrete_opportunity(4, 0.0, 2, 0);
  for (double mu : {0.05, 0.5, 2.0}) {
    CHECK(optimal_action_discrete(joint, spend, opp.win, mu) ==
          optimal_action_discrete_independent(joint, spend, opp.win, mu));
  }
}

TEST_CASE("discrete argmax: huge mu minimises expected spend") {
  const auto spend = discrete_spend_matrix(6);
  const auto opp = generate_discrete_opportunity(6, 1.0, 5, 3);
  const auto market = opp.joint.market_marginal();
  std::vector<double> neg_spend(6);
  for (std::size_t a = 0; a < 6; ++a) {
    double s = 0.0;
    for (std::size_t m = 0; m < 6; ++m) s += spend(m, a) * opp.win(m, a) * market[m];
    neg_spend[a] = -s;
  }
  CHECK(optimal_action_discrete(opp.joint, spend, opp.win, 1e9) == oracle::argmax(neg_spend));
}

TEST_CASE("second price: truthful bid for a constant conditional mean") {
  CHECK(solve_spa(ConditionalMean::of_constant(0.002), 0.5, 0.0, 1.0) == doctest::Approx(0.004));
}

TEST_CASE("second price: linear conditional mean below mu has the root at zero") {
  const auto cm = ConditionalMean::of([](double a) { return 0.3 * a; });
  CHECK(solve_spa(cm, 0.5, 0.0, 2.0) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("second price: exponential-model bisection agrees with the dedicated solver") {
  for (double delta : {0.7, 1.0, 1.5}) {
    const auto opp = ExpMarketOpportunity::from_delta(0.002, 500.0, delta);
    const double C = 0.5;  // mu = 2
    const auto cm = ConditionalMean::of([&](double a) {
      return opp.p * (opp.lambda1 / opp.lambda) * std::exp((opp.lambda - opp.lambda1) * a);
    });
    const double generic = solve_spa(cm, 1.0 / C, 0.0, 0.01);
    CHECK(solve_spa_exponential(opp, C) == doctest::Approx(generic).epsilon(1e-8));
  }
}

TEST_CASE("first price: independent case matches a bisection oracle") {
  const ExpMarketOpportunity opp{0.002, 500.0, 500.0, 1.0};
  const double C = 10.0;
  const auto sol = solve_fpa_exponential(opp, C);
  CHECK(sol.converged);
  const double root = oracle::bisect([&](double a) { return g_direct(opp, C, a); }, 0.0, 1.0);
  CHECK(std::abs(sol.bid - root) <= 1e-10);
  // Independent case reduces to a + expm1(500 a) / 500 = 0.02.
  CHECK(sol.bid + std::expm1(500.0 * sol.bid) / 500.0 == doctest::Approx(0.02).epsilon(1e-10));
}

TEST_CASE("first price: small multipliers give vanishing bids") {
  const ExpMarketOpportunity opp{0.002, 500.0, 500.0, 1.0};
  double previous = 1.0;
  for (double C : {1.0, 1e-2, 1e-4, 1e-8}) {
    const double bid = solve_fpa_exponential(opp, C).bid;
    CHECK(bid < previous);
    previous = bid;
  }
  CHECK(previous < 1e-10);
}

TEST_CASE("first price: raising lambda1 raises the bid only while lambda1 a < 1") {
  // The conversion term C p (lambda1/lambda) e^{-(lambda1-lambda) a} grows in
  // lambda1 exactly when lambda1 a < 1, so the comparison flips at large C.
  const auto base = ExpMarketOpportunity{0.002, 500.0, 500.0, 1.0};
  const auto steep = ExpMarketOpportunity::from_delta(0.002, 500.0, 0.5);  // lambda1 = 1000
  for (double C : {0.1, 0.3, 0.5}) {
    const double b = solve_fpa_exponential(steep, C).bid;
    CHECK(steep.lambda1 * b < 1.0);
    CHECK(b > solve_fpa_exponential(base, C).bid);
  }
  for (double C : {10.0, 100.0}) {
    const double b = solve_fpa_exponential(base, C).bid;
    CHECK(base.lambda1 * b > 1.0);
    CHECK(solve_fpa_exponential(steep, C).bid < b);
  }
}

TEST_CASE("first price: random draws agree with bisection and start below the root") {
  auto rng = make_stream(2024, {7});
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    const double p = std::exp(std::log(1e-4) + rng.uniform() * std::log(1e3));
    const double lambda = std::exp(std::log(10.0) + rng.uniform() * std::log(1e3));
    const double delta = std::exp(-1.5 + 3.0 * rng.uniform());
    const double C = std::exp(std::log(0.1) + rng.uniform() * std::log(1e4));
    const auto opp = ExpMarketOpportunity::from_delta(p, lambda, delta);
    CHECK(fpa_optimality_residual(opp, C, 0.0) < 0.0);
    const auto sol = solve_fpa_exponential(opp, C);
    REQUIRE(sol.converged);
    if (sol.multiple_roots) continue;
    double hi = 1.0 / lambda;
    while (g_direct(opp, C, hi) <= 0.0) hi *= 2.0;
    const double root = oracle::bisect([&](double a) { return g_direct(opp, C, a); }, 0.0, hi);
    CHECK(std::abs(sol.bid - root) <= 1e-8);
    ++checked;
  }
  CHECK(checked > 250);
}

TEST_CASE("first price: best-Lagrangian choice never does worse than the smallest root") {
  auto rng = make_stream(77, {1});
  for (int i = 0; i < 300; ++i) {
    const double delta = std::exp(0.5 + 2.0 * rng.uniform());
    const double C = std::exp(std::log(10.0) + rng.uniform() * std::log(1e4));
    const auto opp = ExpMarketOpportunity::from_delta(0.003, 400.0, delta);
    FpaSolverOptions best;
    best.root_choice = RootChoice::kBestLagrangian;
    const auto a = solve_fpa_exponential(opp, C);
    const auto b = solve_fpa_exponential(opp, C, best);
    CHECK(fpa_opportunity_lagrangian(opp, C, b.bid) >=
          fpa_opportunity_lagrangian(opp, C, a.bid) - 1e-15);
  }
}

TEST_CASE("first price: lagrangian derivative identity") {
  const auto opp = ExpMarketOpportunity::from_delta(0.004, 300.0, 1.7);
  const double C = 40.0;
  const double mu = 1.0 / C;
  for (double a : {0.001, 0.004, 0.01}) {
    const double h = 1e-7;
    const double numeric = (fpa_opportunity_lagrangian(opp, C, a + h) -
                            fpa_opportunity_lagrangian(opp, C, a - h)) /
                           (2.0 * h);
    const double analytic = -mu * opp.lambda * std::exp(-opp.lambda * a) *
                            fpa_optimality_residual(opp, C, a);
    CHECK(numeric == doctest::Approx(analytic).epsilon(1e-5));
  }
}

TEST_CASE("uniqueness conditions") {
  const auto steep = ExpMarketOpportunity::from_delta(0.002, 500.0, 0.5);
  const auto c1 = check_uniqueness_conditions(steep, 0.1);
  CHECK(c1.unique);
  CHECK(c1.clause == UniquenessClause::kLambda1AboveLambda);
  const ExpMarketOpportunity flat{0.002, 500.0, 500.0, 1.0};
  const auto c2 = check_uniqueness_conditions(flat, 0.1);  // lambda u / (2 mu) = 5
  CHECK_FALSE(c2.unique);
  CHECK(c2.clause == UniquenessClause::kNone);
  const ExpMarketOpportunity worthless{0.0, 500.0, 500.0, 1.0};
  const auto c3 = check_uniqueness_conditions(worthless, 0.1);
  CHECK(c3.unique);
  CHECK(c3.clause == UniquenessClause::kSmallValue);
}

TEST_CASE("multiplier tuning: converges on a single opportunity") {
  ExpLandscape l;
  l.opportunities = {ExpMarketOpportunity::from_delta(0.002, 500.0, 1.3)};
  const double budget = 0.5 * expected_spend_exp(l.opportunities[0],
                                                 solve_fpa_exponential(l.opportunities[0], 5.0).bid);
  const auto r = tune_multiplier(l, budget, 1.0, 1e-3, 200, true);
  REQUIRE(r.state.converged);
  CHECK(std::abs(r.expected_spend / budget - 1.0) <= 1e-3);
  CHECK(r.failure.empty());
}

TEST_CASE("multiplier tuning: doubling the budget raises the multiplier") {
  const auto l = generate_exponential_landscape(2000, 0.5, 0.5, 3);
  const auto small = tune_multiplier(l, 2.0, 1.0, 1e-3, 200, true);
  const auto large = tune_multiplier(l, 4.0, 1.0, 1e-3, 200, true);
  REQUIRE(small.state.converged);
  REQUIRE(large.state.converged);
  CHECK(large.state.C > small.state.C);
}

TEST_CASE("multiplier tuning: dependency-aware conversions dominate at equal budget") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto l = generate_exponential_landscape(2000, 0.5, 0.8, seed);
    for (double budget : {1.0, 5.0}) {
      const auto dep = tune_multiplier(l, budget, 1.0, 1e-3, 200, true);
      const auto ind = tune_multiplier(l, budget, 1.0, 1e-3, 200, false);
      REQUIRE(dep.state.converged);
      REQUIRE(ind.state.converged);
      CHECK(dep.expected_conversions >= ind.expected_conversions * (1.0 - 1e-9));
    }
  }
}

TEST_CASE("multiplier tuning: trajectory moves toward r = 1") {
  const auto l = generate_exponential_landscape(2000, 0.5, 0.5, 9);
  const auto r = tune_multiplier(l, 3.0, 1.0, 1e-3, 200, true);
  REQUIRE(r.state.converged);
  REQUIRE(r.trajectory.size() >= 2);
  int monotone = 0;
  for (std::size_t i = 1; i < r.trajectory.size(); ++i) {
    if (std::abs(std::log(r.trajectory[i].r)) <= std::abs(std::log(r.trajectory[i - 1].r))) {
      ++monotone;
    }
  }
  CHECK(monotone >= static_cast<int>(0.95 * static_cast<double>(r.trajectory.size() - 1)));
}

TEST_CASE("multiplier tuning: an iteration cap is reported, not hidden") {
  const auto l = generate_exponential_landscape(500, 0.5, 0.5, 4);
  const auto r = tune_multiplier(l, 3.0, 1e-6, 1e-12, 2, true);
  CHECK_FALSE(r.state.converged);
  CHECK_FALSE(r.failure.empty());
}

TEST_CASE("multiplier tuning: invalid arguments") {
  const auto l = generate_exponential_landscape(10, 0.0, 0.0, 4);
  CHECK_THROWS_AS(tune_multiplier(l, -1.0, 1.0, 1e-3, 200, true), DomainError);
  CHECK_THROWS_AS(tune_multiplier(l, 1.0, 0.0, 1e-3, 200, true), DomainError);
}
