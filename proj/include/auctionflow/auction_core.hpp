#pragma once

// Repeated-auction data model: opportunities with observable contexts, win and
// spend functions, expected totals (via Wald's identity, so only per-opportunity
// expectations are needed) and realised-auction simulation.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "auctionflow/landscape.hpp"

namespace auctionflow {

/// Maps a full context vector E to the observable context pi(E).
using ContextProjection = std::function<std::vector<double>(std::span<const double>)>;

/// Projection that keeps the listed coordinates of E.
ContextProjection keep_coordinates(std::vector<std::size_t> indices);

struct Opportunity {
  std::vector<double> context;
  std::vector<double> observable_context;
  double utility = 0.0;
  double market_condition = 0.0;  // highest competing price

  static Opportunity make(std::vector<double> context, const ContextProjection& project,
                          double utility, double market_condition);
};

enum class AuctionKind { kFirstPrice, kSecondPrice, kCustom };

struct AuctionRules {
  std::function<double(double market, double action)> win;
  std::function<double(double market, double action)> spend;
  AuctionKind kind = AuctionKind::kCustom;

  static AuctionRules first_price();
  static AuctionRules second_price();
  static AuctionRules custom(std::function<double(double, double)> win,
                             std::function<double(double, double)> spend);
};

/// Deterministic strategy a(E°).
struct Strategy {
  std::function<double(std::span<const double>)> action;

  double operator()(std::span<const double> observable) const { return action(observable); }

  /// Landscape strategy: opportunity k has observable context {k} and gets actions[k].
  static Strategy table(std::vector<double> actions);
  static Strategy constant(double action);
};

struct Totals {
  double total_spending = 0.0;
  double total_utility = 0.0;
  std::int64_t total_wins = 0;
};

struct ExpectedTotals {
  double spending = 0.0;
  double utility = 0.0;
};

struct ScaleAndBudget {
  double mu = 0.0;  // utility-per-currency scale; 0 means unconstrained
  double budget = 1.0;

  void validate() const;
};

/// Actions for a landscape, one per opportunity, read off a strategy.
std::vector<double> landscape_actions(const Strategy& strategy, std::size_t n_opportunities);

/// E[s(M,a) w(M,a)] and E[U w(M,a)] for one discrete opportunity and action index.
ExpectedTotals expected_totals_discrete(const DiscreteJoint& joint, const SquareMatrix& spend,
                                        const SquareMatrix& win, std::size_t action);

ExpectedTotals expected_totals(const DiscreteLandscape& landscape, std::span<const double> actions);
ExpectedTotals expected_totals(const DiscreteLandscape& landscape, const Strategy& strategy);

/// Per-opportunity expected spend for a bid under the exponential market model.
double expected_spend_exp(const ExpMarketOpportunity& opp, double bid,
                          AuctionKind kind = AuctionKind::kFirstPrice);
/// p (1 - exp(-lambda1 bid)).
double expected_conversions_exp(const ExpMarketOpportunity& opp, double bid);

ExpectedTotals expected_totals(const ExpLandscape& landscape, std::span<const double> bids,
                               AuctionKind kind = AuctionKind::kFirstPrice);
ExpectedTotals expected_totals(const ExpLandscape& landscape, const Strategy& strategy,
                               AuctionKind kind = AuctionKind::kFirstPrice);

/// E U_tot - mu E S_tot + mu B.
double lagrangian(const ExpectedTotals& totals, const ScaleAndBudget& scale);
double lagrangian(const DiscreteLandscape& landscape, const Strategy& strategy,
                  const ScaleAndBudget& scale);
double lagrangian(const ExpLandscape& landscape, const Strategy& strategy,
                  const ScaleAndBudget& scale, AuctionKind kind = AuctionKind::kFirstPrice);

struct SimulationOptions {
  /// Draw the number of auctions as Poisson(landscape size) and pick
  /// opportunities uniformly with replacement (mixed binomial process).
  bool poisson_count = false;
};

/// Realised totals: each opportunity draws (U, M) from its joint law, then
/// W ~ Bernoulli(w(M, a)). Every opportunity uses its own counter-based stream.
Totals simulate_auctions(const DiscreteLandscape& landscape, const Strategy& strategy,
                         std::uint64_t seed, SimulationOptions options = {});

/// Exponential landscapes draw M ~ Exp(lambda) and then
/// U | M=m ~ Bernoulli(min(1, p (lambda1/lambda) exp((lambda - lambda1) m))).
Totals simulate_auctions(const ExpLandscape& landscape, const Strategy& strategy,
                         std::uint64_t seed, AuctionKind kind = AuctionKind::kFirstPrice,
                         SimulationOptions options = {});

/// Generic simulation over realised opportunities with explicit rules.
Totals simulate_auctions(std::span<const Opportunity> opportunities, const Strategy& strategy,
                         const AuctionRules& rules, std::uint64_t seed);

/// P(U = 1 | M = m) implied by the exponential model (clamped to 1).
double exp_conversion_given_market(const ExpMarketOpportunity& opp, double market);

}  // namespace auctionflow
