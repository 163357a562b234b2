#pragma once

// Generators for the temporal point processes that model the arrival of bid
// opportunities: homogeneous Poisson, superpositions of per-user streams, and
// the two Cox families (shot-noise and log-Gaussian).

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace auctionflow {

struct TimeInterval {
  double start = 0.0;
  double end = 1.0;

  double length() const noexcept { return end - start; }
  bool contains(double t) const noexcept { return t >= start && t < end; }
  /// Throws DomainError unless end > start and the length is finite.
  void validate() const;
};

struct PointPattern {
  std::vector<double> times;  // sorted, each in [interval.start, interval.end)
  TimeInterval interval;

  std::size_t count() const noexcept { return times.size(); }
  bool is_valid() const noexcept;
};

struct UserProcessSpec {
  std::size_t n_users = 1;
  double per_user_rate = 1.0;   // events / second, before thinning
  double min_gap = 0.0;         // seconds between kept arrivals of one user
  double cluster_excess = 0.0;  // mean Poisson offspring per kept arrival

  void validate() const;
};

enum class KernelFamily { kBoxcar, kGaussian };

/// Unit-mass kernel centred on a shot. For the boxcar the bandwidth is the full
/// width of the support; for the Gaussian it is the standard deviation.
struct Kernel {
  KernelFamily family = KernelFamily::kBoxcar;
  double bandwidth = 1.0;

  /// Mass of k(c, .) that falls at or below c + offset.
  double cdf(double offset) const;
  /// Integral of cdf over (-inf, x].
  double cdf_antiderivative(double x) const;
};

enum class MarkFamily { kConstant, kExponential, kGamma };

/// Law of the shot weight gamma.
struct MarkDistribution {
  MarkFamily family = MarkFamily::kConstant;
  double value = 1.0;  // constant value, or the mean for exponential
  double shape = 1.0;  // gamma only
  double scale = 1.0;  // gamma only

  double mean() const noexcept;
  double variance() const noexcept;
  void validate() const;
};

struct SncpParams {
  double center_rate = 1.0;  // shots / second
  MarkDistribution gamma;
  Kernel kernel;

  void validate() const;
};

/// E|Xi| over the interval by Campbell's formula (edge losses included).
double sncp_expected_count(const SncpParams& params, const TimeInterval& interval);

enum class CorrelationFamily { kExponential, kGaussian, kTable };

/// Stationary correlation rho(lag) with rho(0) = 1; lags are in grid-time units.
struct Correlation {
  CorrelationFamily family = CorrelationFamily::kExponential;
  double range = 1.0;
  std::vector<double> table;  // rho(0), rho(1), ... for integer lags

  double operator()(double lag) const;
};

struct LgcpParams {
  std::vector<double> mu;    // baseline intensity per bin
  std::vector<double> grid;  // bin centres (same length as mu)
  double sigma2 = 0.0;
  Correlation rho;

  void validate() const;
};

struct CountSeries {
  std::vector<std::int64_t> counts;
  std::vector<double> grid;
};

inline constexpr std::size_t kMaxLgcpGrid = 4096;

PointPattern sample_homogeneous_poisson(double rate, const TimeInterval& interval,
                                        std::uint64_t seed);

PointPattern sample_user_superposition(const UserProcessSpec& spec,
                                       const TimeInterval& interval, std::uint64_t seed);

/// Counts only; skips sorting and storing times. Same law (and, for a given
/// seed, the same value) as sample_user_superposition(...).count().
std::int64_t sample_user_superposition_count(const UserProcessSpec& spec,
                                             const TimeInterval& interval,
                                             std::uint64_t seed);

PointPattern sample_sncp(const SncpParams& params, const TimeInterval& interval,
                         std::uint64_t seed);

/// Factorises the log-field covariance once so that many replicates can be
/// drawn cheaply. Throws NumericError if the covariance is not PSD.
class LgcpSampler {
 public:
  explicit LgcpSampler(LgcpParams params);
  ~LgcpSampler();
  LgcpSampler(LgcpSampler&&) noexcept;
  LgcpSampler& operator=(LgcpSampler&&) noexcept;

  CountSeries sample(std::uint64_t seed) const;
  /// The Gaussian log-field G for a seed (what sample() exponentiates).
  std::vector<double> sample_field(std::uint64_t seed) const;
  const LgcpParams& params() const noexcept { return params_; }

 private:
  struct Factor;
  LgcpParams params_;
  std::unique_ptr<Factor> factor_;
};

CountSeries sample_lgcp(const LgcpParams& params, std::uint64_t seed);

struct LgcpMoments {
  double mean = 0.0;        // at t1
  double variance = 0.0;    // at t1
  double covariance = 0.0;  // between t1 and t2
  bool same_index = false;  // t1 == t2: covariance is the variance branch
};

LgcpMoments lgcp_moments(const LgcpParams& params, std::size_t t1, std::size_t t2);

}  // namespace auctionflow
