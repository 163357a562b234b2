#pragma once

// Value types describing a pre-defined set of bid opportunities ("landscape")
// as seen by a player who knows each opportunity's joint law of utility and
// market condition.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace auctionflow {

/// Dense row-major n x n matrix.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t row, std::size_t col) noexcept { return data_[row * n_ + col]; }
  double operator()(std::size_t row, std::size_t col) const noexcept {
    return data_[row * n_ + col];
  }
  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }

  bool operator==(const SquareMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// probs(i, j) = P(U = i, M = j) on the integer grid {0, ..., n-1}^2.
struct DiscreteJoint {
  SquareMatrix probs;

  std::size_t n() const noexcept { return probs.size(); }
  /// Throws DomainError on negative entries or |sum - 1| > 1e-12.
  void validate() const;
  /// P(M = m) for every m.
  std::vector<double> market_marginal() const;
  /// E[U | M = m]; zero where P(M = m) = 0.
  std::vector<double> conditional_utility() const;
  double mean_utility() const;
};

/// Binary-utility opportunity with exponential market price: M ~ Exp(lambda)
/// marginally and M | U=1 ~ Exp(lambda1), lambda1 = lambda / delta.
struct ExpMarketOpportunity {
  double p = 0.002;
  double lambda = 500.0;
  double lambda1 = 500.0;
  double delta = 1.0;

  static ExpMarketOpportunity from_delta(double p, double lambda, double delta);
  /// Same opportunity with the dependency removed (lambda1 := lambda).
  ExpMarketOpportunity independent() const;
  void validate() const;
};

struct DiscreteLandscape {
  std::vector<DiscreteJoint> opportunities;
  std::vector<SquareMatrix> win_matrices;  // win(m, a), per opportunity
  SquareMatrix spend_matrix;               // s(m, a), shared
  std::size_t n = 20;
  double alpha_dep = 0.0;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return opportunities.size(); }
  void validate() const;
};

enum class GammaReading {
  kShapeScale,  // lambda ~ Gamma(shape 1, scale 1/p): mean 1/p
  kShapeRate,   // lambda ~ Gamma(shape 1, rate 1/p): mean p
};

struct ExpLandscapeParams {
  double beta_a = 2.0;
  double beta_b = 1000.0;
  double logdelta_mean = 0.0;
  double logdelta_sd = 0.0;
  GammaReading gamma_reading = GammaReading::kShapeScale;
};

struct ExpLandscape {
  std::vector<ExpMarketOpportunity> opportunities;
  ExpLandscapeParams gen_params;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return opportunities.size(); }
  void validate() const;
};

}  // namespace auctionflow
