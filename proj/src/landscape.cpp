#include "auctionflow/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "auctionflow/errors.hpp"

namespace auctionflow {

void DiscreteJoint::validate() const {
  if (n() == 0) {
    throw DomainError("discrete joint must have n >= 1");
  }
  double total = 0.0;
  for (double v : probs.values()) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw DomainError("discrete joint has a negative or non-finite entry");
    }
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "discrete joint sums to " << total << ", not 1";
    throw DomainError(os.str());
  }
}

std::vector<double> DiscreteJoint::market_marginal() const {
  const std::size_t size = n();
  std::vector<double> marginal(size, 0.0);
  for (std::size_t u = 0; u < size; ++u) {
    for (std::size_t m = 0; m < size; ++m) {
      marginal[m] += probs(u, m);
    }
  }
  return marginal;
}

std::vector<double> DiscreteJoint::conditional_utility() const {
  const std::size_t size = n();
  std::vector<double> mass(size, 0.0);
  std::vector<double> weighted(size, 0.0);
  for (std::size_t u = 0; u < size; ++u) {
    for (std::size_t m = 0; m < size; ++m) {
      mass[m] += probs(u, m);
      weighted[m] += static_cast<double>(u) * probs(u, m);
    }
  }
  for (std::size_t m = 0; m < size; ++m) {
    weighted[m] = mass[m] > 0.0 ? weighted[m] / mass[m] : 0.0;
  }
  return weighted;
}

double DiscreteJoint::mean_utility() const {
  double total = 0.0;
  for (std::size_t u = 0; u < n(); ++u) {
    for (std::size_t m = 0; m < n(); ++m) {
      total += static_cast<double>(u) * probs(u, m);
    }
  }
  return total;
}

ExpMarketOpportunity ExpMarketOpportunity::from_delta(double p, double lambda, double delta) {
  ExpMarketOpportunity opp{p, lambda, lambda / delta, delta};
  opp.validate();
  return opp;
}

ExpMarketOpportunity ExpMarketOpportunity::independent() const {
  return ExpMarketOpportunity{p, lambda, lambda, 1.0};
}

void ExpMarketOpportunity::validate() const {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("conversion probability p must lie in (0, 1)");
  }
  if (!(lambda > 0.0) || !(lambda1 > 0.0) || !(delta > 0.0) || !std::isfinite(lambda) ||
      !std::isfinite(lambda1)) {
    throw DomainError("lambda, lambda1 and delta must be positive and finite");
  }
  if (std::abs(lambda1 - lambda / delta) > 1e-12 * std::max(1.0, lambda1)) {
    throw DomainError("lambda1 must equal lambda / delta");
  }
}

void DiscreteLandscape::validate() const {
  if (win_matrices.size() != opportunities.size()) {
    throw DomainError("one win matrix per opportunity is required");
  }
  if (spend_matrix.size() != n) {
    throw DomainError("spend matrix must be n x n");
  }
  for (std::size_t k = 0; k < opportunities.size(); ++k) {
    if (opportunities[k].n() != n || win_matrices[k].size() != n) {
      throw DomainError("landscape matrices must share side length n");
    }
    for (double w : win_matrices[k].values()) {
      if (!(w >= 0.0 && w <= 1.0)) {
        throw DomainError("win probabilities must lie in [0, 1]");
      }
    }
  }
  for (double s : spend_matrix.values()) {
    if (!(s >= 0.0)) {
      throw DomainError("spend must be >= 0");
    }
  }
}

void ExpLandscape::validate() const {
  for (const auto& opp : opportunities) {
    opp.validate();
  }
}

}  // namespace auctionflow
