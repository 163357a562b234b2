#pragma once

// The fixed set of landscapes shared by the unit and acceptance suites, each
// paired with the action table it is played with.

#include <cstdint>
#include <string>
#include <vector>

#include "auctionflow/auction_core.hpp"
#include "auctionflow/bid_optimizer.hpp"
#include "auctionflow/experiment.hpp"

namespace corpus {

struct DiscreteCase {
  std::string name;
  auctionflow::DiscreteLandscape landscape;
  std::vector<double> actions;
};

struct ExpCase {
  std::string name;
  auctionflow::ExpLandscape landscape;
  std::vector<double> bids;
  auctionflow::AuctionKind kind = auctionflow::AuctionKind::kFirstPrice;
};

inline std::vector<double> discrete_optimal_actions(const auctionflow::DiscreteLandscape& l,
                                                    double mu, bool dependency_aware) {
  std::vector<double> actions(l.size());
  for (std::size_t k = 0; k < l.size(); ++k) {
    const auto a = dependency_aware
                       ? auctionflow::optimal_action_discrete(l.opportunities[k], l.spend_matrix,
                                                              l.win_matrices[k], mu)
                       : auctionflow::optimal_action_discrete_independent(
                             l.opportunities[k], l.spend_matrix, l.win_matrices[k], mu);
    actions[k] = static_cast<double>(a);
  }
  return actions;
}

inline std::vector<DiscreteCase> discrete_cases() {
  using auctionflow::generate_discrete_landscape;
  std::vector<DiscreteCase> out;
  {
    auto l = generate_discrete_landscape(5, 300, 0.0, 1);
    auto a = discrete_optimal_actions(l, 0.5, true);
    out.push_back({"n5_alpha0_optimal", std::move(l), std::move(a)});
  }
  {
    auto l = generate_discrete_landscape(5, 300, 2.0, 2);
    auto a = discrete_optimal_actions(l, 0.2, false);
    out.push_back({"n5_alpha2_baseline", std::move(l), std::move(a)});
  }
  {
    auto l = generate_discrete_landscape(20, 200, 1.0, 3);
    auto a = discrete_optimal_actions(l, 1.0, true);
    out.push_back({"n20_alpha1_optimal", std::move(l), std::move(a)});
  }
  {
    auto l = generate_discrete_landscape(20, 200, 5.0, 4);
    std::vector<double> a(l.size(), 7.0);
    out.push_back({"n20_alpha5_constant", std::move(l), std::move(a)});
  }
  return out;
}

inline std::vector<ExpCase> exp_cases() {
  using auctionflow::AuctionKind;
  using auctionflow::generate_exponential_landscape;
  std::vector<ExpCase> out;
  {
    auto l = generate_exponential_landscape(300, 0.0, 0.0, 5);
    auto b = auctionflow::landscape_bids(l, 50.0, true);
    out.push_back({"independent_fpa", std::move(l), std::move(b), AuctionKind::kFirstPrice});
  }
  {
    auto l = generate_exponential_landscape(300, 0.5, 0.5, 6);
    auto b = auctionflow::landscape_bids(l, 50.0, true);
    out.push_back({"dependent_fpa", std::move(l), std::move(b), AuctionKind::kFirstPrice});
  }
  {
    auto l = generate_exponential_landscape(300, -0.5, 0.3, 7);
    std::vector<double> b(l.size());
    for (std::size_t k = 0; k < l.size(); ++k) b[k] = 1.0 / l.opportunities[k].lambda;
    out.push_back({"dependent_spa_rate_bids", std::move(l), std::move(b),
                   AuctionKind::kSecondPrice});
  }
  return out;
}

}  // namespace corpus
