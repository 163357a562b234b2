#pragma once

// Poisson-approximation diagnostics: explicit total-variation bounds for a
// superposition of user streams, a Chernoff-type Poisson tail bound, the
// log(mean/variance) statistic on stratified count data, QQ pairing, and a
// Monte Carlo estimate of the second-moment gap against a matched Poisson
// process.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "auctionflow/point_process.hpp"

namespace auctionflow {

struct TvBoundInputs {
  std::vector<double> lambdas;   // per-user expected counts
  std::vector<double> r_bounds;  // per-user reduced-Palm count bounds
  double L = 0.0;
  double R = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;

  void validate() const;
};

struct TvBound {
  double bound = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  bool empty_market = false;  // total mean was zero; alpha = beta = 0
};

/// L alpha + R beta + delta1 + delta2.
TvBound tv_bound_general(const TvBoundInputs& inputs);

struct ShortIntervalBound {
  double d_tv = 0.0;  // count pseudo-metric bound: l |T|
  double d_TV = 0.0;  // total-variation bound: lambda l |T|
};

ShortIntervalBound tv_bound_short_interval(double l, double interval_len, double lambda_total);

/// Closed form exp(-x^2 / (lambda + x)) intended to dominate P(X >= lambda + x)
/// for X ~ Poisson(lambda). It does not hold everywhere: once x is comparable
/// to a large lambda the exponent overshoots the Chernoff rate, e.g.
/// lambda = 20, x = 20 gives 4.54e-5 against an exact tail of 5.32e-5.
double poisson_tail_bound(double lambda, double x);

/// Chernoff bound exp(-lambda h(x / lambda)), h(u) = (1 + u) ln(1 + u) - u.
/// Always dominates P(X >= lambda + x).
double poisson_tail_bound_chernoff(double lambda, double x);

/// rows = strata, columns = replicate windows.
struct CountMatrix {
  std::vector<std::string> strata;
  std::vector<std::vector<std::int64_t>> counts;

  std::size_t size() const noexcept { return counts.size(); }
};

/// Reads `stratum,window,count` rows (header required). Window values order
/// the replicates within a stratum; strata keep first-appearance order.
CountMatrix read_count_matrix_csv(std::istream& in);
void write_count_matrix_csv(std::ostream& out, const CountMatrix& data);

struct LogRatioResult {
  std::vector<double> statistics;      // ln(mean / variance) per kept stratum
  std::vector<std::size_t> kept;       // stratum indices behind each statistic
  std::vector<std::size_t> dropped;    // zero-variance (or < 2 replicate) strata
  std::vector<std::string> warnings;
};

/// Sample mean over unbiased sample variance, per stratum.
LogRatioResult log_mean_variance_ratio(const CountMatrix& data);

/// Matched Poisson reference: same strata design, each stratum's replicates
/// drawn from Poisson(stratum mean).
CountMatrix simulate_poisson_reference(const CountMatrix& data, std::uint64_t seed);

/// Linear-interpolated empirical quantile (type 7) of sorted data.
double empirical_quantile(std::span<const double> sorted, double level);

/// (reference quantile, actual quantile) pairs at max(n_ref, n_act) evenly
/// spaced levels in [0, 1].
std::vector<std::pair<double, double>> qq_against_poisson(std::span<const double> actual,
                                                          std::span<const double> reference);

/// Least-squares slope of actual on reference over pairs whose reference
/// quantile lies in [lo, hi].
double qq_central_slope(std::span<const std::pair<double, double>> pairs, double lo = -2.0,
                        double hi = 2.0);

/// Two-sample Kolmogorov-Smirnov distance.
double ks_distance(std::span<const double> a, std::span<const double> b);

/// Maximum |P_hat(N = k) - Poisson(mean_hat)(k)| over k = 0..max_count.
double count_distribution_gap(std::span<const std::int64_t> counts, std::size_t max_count);

struct GapEstimate {
  double gap = 0.0;          // |E f(Xi)^2 - E f(P)^2|
  double signed_gap = 0.0;   // E f(Xi)^2 - E f(P)^2
  double se = 0.0;
  double xi_second_moment = 0.0;
  double poisson_second_moment = 0.0;
  std::size_t replicates = 0;
};

/// f(Xi) = sum over points of h(t), |h| <= bound. The matched Poisson process
/// has the empirical mean measure of `patterns`. With poisson_seeds > 0 it is
/// simulated (points resampled from the pooled pattern times); with 0 its
/// second moment (int h dLambda)^2 + int h^2 dLambda is used in plug-in form.
GapEstimate second_moment_gap(double bound, std::span<const PointPattern> patterns,
                              std::size_t poisson_seeds, std::uint64_t seed,
                              const std::function<double(double)>& h = {});

}  // namespace auctionflow
