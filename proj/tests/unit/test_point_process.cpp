#include <doctest.h>

#include <cmath>
#include <vector>

#include "auctionflow/errors.hpp"
#include "auctionflow/point_process.hpp"
#include "auctionflow/poisson_diagnostics.hpp"
#include "oracles.hpp"

using namespace auctionflow;

TEST_CASE("homogeneous poisson: zero rate gives an empty pattern") {
  const auto pat = sample_homogeneous_poisson(0.0, {0.0, 3.0}, 7);
  CHECK(pat.count() == 0);
  CHECK(pat.is_valid());
}

TEST_CASE("homogeneous poisson: count mean and variance match rate times length") {
  oracle::MeanSe counts;
  std::vector<double> values;
  for (std::uint64_t seed = 0; seed < 100000; ++seed) {
    const auto pat = sample_homogeneous_poisson(5.0, {0.0, 2.0}, seed);
    counts.add(static_cast<double>(pat.count()));
    values.push_back(static_cast<double>(pat.count()));
  }
  CHECK(std::abs(counts.mean() - 10.0) <= 3.0 * counts.se());
  const auto var = oracle::variance_with_se(values);
  CHECK(std::abs(var.variance - 10.0) <= 3.0 * var.se);
}

TEST_CASE("homogeneous poisson: points are sorted and inside the interval") {
  const auto pat = sample_homogeneous_poisson(50.0, {-1.0, 1.0}, 3);
  CHECK(pat.count() > 0);
  CHECK(pat.is_valid());
}

TEST_CASE("homogeneous poisson: invalid inputs are rejected") {
  CHECK_THROWS_AS(sample_homogeneous_poisson(-1.0, {0.0, 1.0}, 1), DomainError);
  CHECK_THROWS_AS(sample_homogeneous_poisson(1.0, {1.0, 1.0}, 1), DomainError);
}

TEST_CASE("user superposition: a single plain user is a homogeneous poisson process") {
  UserProcessSpec spec;
  spec.n_users = 1;
  spec.per_user_rate = 4.0;
  oracle::MeanSe counts;
  std::vector<double> values;
  for (std::uint64_t seed = 0; seed < 20000; ++seed) {
    const double c = static_cast<double>(sample_user_superposition(spec, {0.0, 1.5}, seed).count());
    counts.add(c);
    values.push_back(c);
  }
  CHECK(std::abs(counts.mean() - 6.0) <= 3.0 * counts.se());
  const auto var = oracle::variance_with_se(values);
  CHECK(std::abs(var.variance - 6.0) <= 3.0 * var.se);
}

TEST_CASE("user superposition: a gap longer than the window allows one point per user") {
  UserProcessSpec spec;
  spec.n_users = 50;
  spec.per_user_rate = 20.0;
  spec.min_gap = 5.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CHECK(sample_user_superposition(spec, {0.0, 1.0}, seed).count() <= 50);
  }
}

TEST_CASE("user superposition: count-only path agrees with the full sampler") {
  UserProcessSpec spec;
  spec.n_users = 30;
  spec.per_user_rate = 0.7;
  spec.min_gap = 0.2;
  spec.cluster_excess = 0.5;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    CHECK(sample_user_superposition(spec, {0.0, 3.0}, seed).count() ==
          static_cast<std::size_t>(sample_user_superposition_count(spec, {0.0, 3.0}, seed)));
  }
}

TEST_CASE("user superposition: many rare users look poisson in count distribution") {
  // Each user contributes at most one point with probability about 1e-3, so
  // the total-variation bound l|T| is 1e-3.
  UserProcessSpec spec;
  spec.n_users = 10000;
  spec.per_user_rate = 1e-3;
  spec.min_gap = 10.0;
  const int reps = 4000;
  std::vector<std::int64_t> counts;
  counts.reserve(reps);
  for (int seed = 0; seed < reps; ++seed) {
    counts.push_back(sample_user_superposition_count(spec, {0.0, 1.0}, seed));
  }
  const double gap = count_distribution_gap(counts, 30);
  // Largest Poisson(10) pmf is about 0.125; the histogram SE is at most
  // sqrt(0.125 * 0.875 / reps).
  const double mc = 4.0 * std::sqrt(0.125 * 0.875 / reps);
  CHECK(gap <= 1e-3 + mc);
}

TEST_CASE("sncp: zero centre rate gives an empty pattern") {
  SncpParams params;
  params.center_rate = 0.0;
  CHECK(sample_sncp(params, {0.0, 10.0}, 1).count() == 0);
}

TEST_CASE("sncp: mean count follows Campbell, variance exceeds mean") {
  SncpParams params;
  params.center_rate = 1.0;
  params.gamma.family = MarkFamily::kConstant;
  params.gamma.value = 3.0;
  params.kernel = {KernelFamily::kBoxcar, 0.1};
  const TimeInterval interval{0.0, 10.0};
  std::vector<double> values;
  oracle::MeanSe counts;
  for (std::uint64_t seed = 0; seed < 100000; ++seed) {
    const double c = static_cast<double>(sample_sncp(params, interval, seed).count());
    counts.add(c);
    values.push_back(c);
  }
  // Narrow kernel: edge losses are O(bandwidth / length). Compare with the
  // exact Campbell mean, which includes them.
  const double expected = sncp_expected_count(params, interval);
  CHECK(std::abs(expected - 30.0) < 0.2);
  CHECK(std::abs(counts.mean() - expected) <= 3.0 * counts.se());
  // Law of total variance: Var N = E Lambda + Var Lambda = 30 + 9 * 10 (approx).
  const auto var = oracle::variance_with_se(values);
  CHECK(var.variance > counts.mean());
  CHECK(std::abs(var.variance - (expected + 9.0 * 10.0)) <= 4.0 * var.se + 1.0);
}

namespace {
LgcpParams flat_lgcp(std::size_t bins, double mu, double sigma2, double rho1) {
  LgcpParams p;
  p.mu.assign(bins, mu);
  for (std::size_t i = 0; i < bins; ++i) p.grid.push_back(static_cast<double>(i));
  p.sigma2 = sigma2;
  p.rho.family = CorrelationFamily::kTable;
  p.rho.table = {1.0, rho1};
  return p;
}
}  // namespace

TEST_CASE("lgcp moments: closed forms at the worked values") {
  const auto poisson = lgcp_moments(flat_lgcp(3, 7.0, 0.0, 0.5), 0, 0);
  CHECK(poisson.mean == doctest::Approx(7.0));
  CHECK(poisson.variance == doctest::Approx(7.0));

  const auto ln4 = flat_lgcp(3, 1.0, std::log(4.0), 0.5);
  const auto same = lgcp_moments(ln4, 1, 1);
  CHECK(same.same_index);
  CHECK(same.mean == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(same.variance == doctest::Approx(14.0).epsilon(1e-12));
  const auto lag1 = lgcp_moments(ln4, 0, 1);
  CHECK_FALSE(lag1.same_index);
  CHECK(lag1.covariance == doctest::Approx(4.0).epsilon(1e-12));
  const auto lag2 = lgcp_moments(ln4, 0, 2);
  CHECK(lag2.covariance == doctest::Approx(0.0));
}

TEST_CASE("lgcp sampler: degenerate field gives independent poisson bins") {
  const auto params = flat_lgcp(2, 3.0, 0.0, 0.5);
  const LgcpSampler sampler(params);
  std::vector<double> a, b;
  for (std::uint64_t seed = 0; seed < 20000; ++seed) {
    const auto s = sampler.sample(seed);
    a.push_back(static_cast<double>(s.counts[0]));
    b.push_back(static_cast<double>(s.counts[1]));
  }
  const auto cov = oracle::covariance_with_se(a, b);
  CHECK(std::abs(cov.variance) <= 3.0 * cov.se);
  const auto var = oracle::variance_with_se(a);
  CHECK(std::abs(var.variance - 3.0) <= 3.0 * var.se);
}

TEST_CASE("lgcp sampler: mean and lag-one covariance at sigma2 = ln 4") {
  const auto params = flat_lgcp(2, 1.0, std::log(4.0), 0.5);
  const LgcpSampler sampler(params);
  std::vector<double> a, b;
  oracle::MeanSe mean;
  for (std::uint64_t seed = 0; seed < 100000; ++seed) {
    const auto s = sampler.sample(seed);
    a.push_back(static_cast<double>(s.counts[0]));
    b.push_back(static_cast<double>(s.counts[1]));
    mean.add(a.back());
  }
  CHECK(std::abs(mean.mean() - 2.0) <= 3.0 * mean.se());
  const auto cov = oracle::covariance_with_se(a, b);
  CHECK(std::abs(cov.variance - 4.0) <= 3.0 * cov.se);
}

TEST_CASE("lgcp: an indefinite correlation table is rejected") {
  auto params = flat_lgcp(3, 1.0, 1.0, 0.5);
  params.rho.table = {1.0, 0.95, -0.9};
  CHECK_THROWS_AS(LgcpSampler{params}, NumericError);
}

TEST_CASE("lgcp: covariance vanishes as correlation goes to zero") {
  for (double rho : {0.5, 0.1, 1e-3, 0.0}) {
    const auto m = lgcp_moments(flat_lgcp(2, 2.0, 1.0, rho), 0, 1);
    CHECK(m.covariance == doctest::Approx((std::exp(rho) - 1.0) * std::exp(1.0) * 4.0));
  }
}

TEST_CASE("streams are reproducible for equal seeds and differ across seeds") {
  const auto a = sample_homogeneous_poisson(20.0, {0.0, 1.0}, 11);
  const auto b = sample_homogeneous_poisson(20.0, {0.0, 1.0}, 11);
  const auto c = sample_homogeneous_poisson(20.0, {0.0, 1.0}, 12);
  CHECK(a.times == b.times);
  CHECK(a.times != c.times);
}
