#include "auctionflow/auction_core.hpp"

#include <cmath>
#include <sstream>

#include "auctionflow/errors.hpp"
#include "auctionflow/rng.hpp"

namespace auctionflow {

namespace {

std::size_t action_index(double action, std::size_t n) {
  if (!(action >= 0.0)) {
    throw DomainError("action must be >= 0");
  }
  const double rounded = std::round(action);
  if (rounded != action || rounded >= static_cast<double>(n)) {
    std::ostringstream os;
    os << "discrete action " << action << " is not an index in [0, " << n << ")";
    throw DomainError(os.str());
  }
  return static_cast<std::size_t>(rounded);
}

void require_bid(double bid) {
  if (!(bid >= 0.0) || !std::isfinite(bid)) {
    throw DomainError("bid must be finite and >= 0");
  }
}

// Inverse-CDF draw of a cell of the joint; returns (u, m).
std::pair<std::size_t, std::size_t> draw_cell(const DiscreteJoint& joint, Philox4x32& rng) {
  const std::size_t n = joint.n();
  const double target = rng.uniform();
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t idx = 0; idx < n * n; ++idx) {
    const double p = joint.probs.values()[idx];
    if (p > 0.0) {
      last_positive = idx;
    }
    acc += p;
    if (target < acc) {
      return {idx / n, idx % n};
    }
  }
  return {last_positive / n, last_positive % n};
}

struct DiscreteOutcome {
  double spend = 0.0;
  double utility = 0.0;
  bool won = false;
};

DiscreteOutcome play_discrete(const DiscreteLandscape& landscape, std::size_t k, std::size_t a,
                              Philox4x32& rng) {
  const auto [u, m] = draw_cell(landscape.opportunities[k], rng);
  DiscreteOutcome out;
  if (rng.uniform() < landscape.win_matrices[k](m, a)) {
    out.won = true;
    out.spend = landscape.spend_matrix(m, a);
    out.utility = static_cast<double>(u);
  }
  return out;
}

struct ExpOutcome {
  double spend = 0.0;
  double utility = 0.0;
  bool won = false;
};

ExpOutcome play_exp(const ExpMarketOpportunity& opp, double bid, AuctionKind kind,
                    Philox4x32& rng) {
  const double market = draw_exponential(rng, opp.lambda);
  const double conv = rng.uniform() < exp_conversion_given_market(opp, market) ? 1.0 : 0.0;
  ExpOutcome out;
  if (market <= bid) {
    out.won = true;
    out.spend = kind == AuctionKind::kSecondPrice ? market : bid;
    out.utility = conv;
  }
  return out;
}

}  // namespace

ContextProjection keep_coordinates(std::vector<std::size_t> indices) {
  return [indices = std::move(indices)](std::span<const double> context) {
    std::vector<double> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) {
      if (i >= context.size()) {
        throw DomainError("projection index outside the context vector");
      }
      out.push_back(context[i]);
    }
    return out;
  };
}

Opportunity Opportunity::make(std::vector<double> context, const ContextProjection& project,
                              double utility, double market_condition) {
  if (!(market_condition >= 0.0)) {
    throw DomainError("market condition must be >= 0");
  }
  Opportunity opp;
  opp.observable_context = project(context);
  opp.context = std::move(context);
  opp.utility = utility;
  opp.market_condition = market_condition;
  return opp;
}

AuctionRules AuctionRules::first_price() {
  return {[](double m, double a) { return m <= a ? 1.0 : 0.0; },
          [](double, double a) { return a; }, AuctionKind::kFirstPrice};
}

AuctionRules AuctionRules::second_price() {
  return {[](double m, double a) { return m <= a ? 1.0 : 0.0; },
          [](double m, double) { return m; }, AuctionKind::kSecondPrice};
}

AuctionRules AuctionRules::custom(std::function<double(double, double)> win,
                                  std::function<double(double, double)> spend) {
  return {std::move(win), std::move(spend), AuctionKind::kCustom};
}

Strategy Strategy::table(std::vector<double> actions) {
  return {[actions = std::move(actions)](std::span<const double> observable) {
    if (observable.empty()) {
      throw DomainError("table strategy needs an opportunity index as observable context");
    }
    const auto k = static_cast<std::size_t>(observable[0]);
    if (k >= actions.size()) {
      throw DomainError("table strategy has no action for this opportunity");
    }
    return actions[k];
  }};
}

Strategy Strategy::constant(double action) {
  return {[action](std::span<const double>) { return action; }};
}

void ScaleAndBudget::validate() const {
  if (!(mu >= 0.0) || !(budget > 0.0)) {
    throw DomainError("scale must be >= 0 and budget > 0");
  }
}

std::vector<double> landscape_actions(const Strategy& strategy, std::size_t n_opportunities) {
  std::vector<double> actions(n_opportunities);
  for (std::size_t k = 0; k < n_opportunities; ++k) {
    const double observable = static_cast<double>(k);
    actions[k] = strategy(std::span<const double>(&observable, 1));
  }
  return actions;
}

ExpectedTotals expected_totals_discrete(const DiscreteJoint& joint, const SquareMatrix& spend,
                                        const SquareMatrix& win, std::size_t action) {
  const std::size_t n = joint.n();
  ExpectedTotals out;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t m = 0; m < n; ++m) {
      const double p = joint.probs(u, m);
      if (p == 0.0) continue;
      const double w = win(m, action);
      out.spending += p * spend(m, action) * w;
      out.utility += p * static_cast<double>(u) * w;
    }
  }
  return out;
}

ExpectedTotals expected_totals(const DiscreteLandscape& landscape,
                               std::span<const double> actions) {
  if (actions.size() != landscape.size()) {
    throw DomainError("need exactly one action per opportunity");
  }
  ExpectedTotals total;
  for (std::size_t k = 0; k < landscape.size(); ++k) {
    const auto part =
        expected_totals_discrete(landscape.opportunities[k], landscape.spend_matrix,
                                 landscape.win_matrices[k], action_index(actions[k], landscape.n));
    total.spending += part.spending;
    total.utility += part.utility;
  }
  return total;
}

ExpectedTotals expected_totals(const DiscreteLandscape& landscape, const Strategy& strategy) {
  const auto actions = landscape_actions(strategy, landscape.size());
  return expected_totals(landscape, actions);
}

double expected_spend_exp(const ExpMarketOpportunity& opp, double bid, AuctionKind kind) {
  require_bid(bid);
  const double x = opp.lambda * bid;
  if (kind == AuctionKind::kSecondPrice) {
    // integral of m lambda e^{-lambda m} over [0, bid]
    return (-std::expm1(-x) - x * std::exp(-x)) / opp.lambda;
  }
  return bid * -std::expm1(-x);
}

double expected_conversions_exp(const ExpMarketOpportunity& opp, double bid) {
  require_bid(bid);
  return opp.p * -std::expm1(-opp.lambda1 * bid);
}

ExpectedTotals expected_totals(const ExpLandscape& landscape, std::span<const double> bids,
                               AuctionKind kind) {
  if (bids.size() != landscape.size()) {
    throw DomainError("need exactly one bid per opportunity");
  }
  if (kind == AuctionKind::kCustom) {
    throw DomainError("exponential landscapes support first- and second-price rules only");
  }
  ExpectedTotals total;
  for (std::size_t k = 0; k < landscape.size(); ++k) {
    total.spending += expected_spend_exp(landscape.opportunities[k], bids[k], kind);
    total.utility += expected_conversions_exp(landscape.opportunities[k], bids[k]);
  }
  return total;
}

ExpectedTotals expected_totals(const ExpLandscape& landscape, const Strategy& strategy,
                               AuctionKind kind) {
  const auto bids = landscape_actions(strategy, landscape.size());
  return expected_totals(landscape, bids, kind);
}

double lagrangian(const ExpectedTotals& totals, const ScaleAndBudget& scale) {
  scale.validate();
  return totals.utility - scale.mu * totals.spending + scale.mu * scale.budget;
}

double lagrangian(const DiscreteLandscape& landscape, const Strategy& strategy,
                  const ScaleAndBudget& scale) {
  return lagrangian(expected_totals(landscape, strategy), scale);
}

double lagrangian(const ExpLandscape& landscape, const Strategy& strategy,
                  const ScaleAndBudget& scale, AuctionKind kind) {
  return lagrangian(expected_totals(landscape, strategy, kind), scale);
}

double exp_conversion_given_market(const ExpMarketOpportunity& opp, double market) {
  const double ratio = opp.p * (opp.lambda1 / opp.lambda) *
                       std::exp((opp.lambda - opp.lambda1) * market);
  return std::min(1.0, ratio);
}

Totals simulate_auctions(const DiscreteLandscape& landscape, const Strategy& strategy,
                         std::uint64_t seed, SimulationOptions options) {
  const auto actions = landscape_actions(strategy, landscape.size());
  std::vector<std::size_t> index(actions.size());
  for (std::size_t k = 0; k < actions.size(); ++k) {
    index[k] = action_index(actions[k], landscape.n);
  }
  Totals totals;
  auto accumulate = [&](std::size_t k, Philox4x32& rng) {
    const auto out = play_discrete(landscape, k, index[k], rng);
    totals.total_spending += out.spend;
    totals.total_utility += out.utility;
    totals.total_wins += out.won ? 1 : 0;
  };
  if (!options.poisson_count) {
    for (std::size_t k = 0; k < landscape.size(); ++k) {
      auto rng = make_stream(seed, {stream_tag::kAuction, 0, k});
      accumulate(k, rng);
    }
    return totals;
  }
  auto count_rng = make_stream(seed, {stream_tag::kAuction, 1});
  const std::int64_t count = draw_poisson(count_rng, static_cast<double>(landscape.size()));
  for (std::int64_t j = 0; j < count; ++j) {
    auto rng = make_stream(seed, {stream_tag::kAuction, 2, static_cast<std::uint64_t>(j)});
    const auto k = static_cast<std::size_t>(rng.uniform() * static_cast<double>(landscape.size()));
    accumulate(k, rng);
  }
  return totals;
}

Totals simulate_auctions(const ExpLandscape& landscape, const Strategy& strategy,
                         std::uint64_t seed, AuctionKind kind, SimulationOptions options) {
  if (kind == AuctionKind::kCustom) {
    throw DomainError("exponential landscapes support first- and second-price rules only");
  }
  const auto bids = landscape_actions(strategy, landscape.size());
  for (double b : bids) require_bid(b);
  Totals totals;
  auto accumulate = [&](std::size_t k, Philox4x32& rng) {
    const auto out = play_exp(landscape.opportunities[k], bids[k], kind, rng);
    totals.total_spending += out.spend;
    totals.total_utility += out.utility;
    totals.total_wins += out.won ? 1 : 0;
  };
  if (!options.poisson_count) {
    for (std::size_t k = 0; k < landscape.size(); ++k) {
      auto rng = make_stream(seed, {stream_tag::kAuction, 0, k});
      accumulate(k, rng);
    }
    return totals;
  }
  auto count_rng = make_stream(seed, {stream_tag::kAuction, 1});
  const std::int64_t count = draw_poisson(count_rng, static_cast<double>(landscape.size()));
  for (std::int64_t j = 0; j < count; ++j) {
    auto rng = make_stream(seed, {stream_tag::kAuction, 2, static_cast<std::uint64_t>(j)});
    const auto k = static_cast<std::size_t>(rng.uniform() * static_cast<double>(landscape.size()));
    accumulate(k, rng);
  }
  return totals;
}

Totals simulate_auctions(std::span<const Opportunity> opportunities, const Strategy& strategy,
                         const AuctionRules& rules, std::uint64_t seed) {
  Totals totals;
  for (std::size_t k = 0; k < opportunities.size(); ++k) {
    const Opportunity& opp = opportunities[k];
    const double action = strategy(opp.observable_context);
    if (!(action >= 0.0)) {
      throw DomainError("action must be >= 0");
    }
    auto rng = make_stream(seed, {stream_tag::kAuction, 3, k});
    const double w = rules.win(opp.market_condition, action);
    if (rng.uniform() < w) {
      totals.total_spending += rules.spend(opp.market_condition, action);
      totals.total_utility += opp.utility;
      ++totals.total_wins;
    }
  }
  return totals;
}

}  // namespace auctionflow
