#include "auctionflow/point_process.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "auctionflow/errors.hpp"
#include "auctionflow/rng.hpp"

namespace auctionflow {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

void require_rate(double rate, const char* what) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) {
    throw DomainError(std::string(what) + " must be finite and >= 0");
  }
}

// One user's stream. The draw order is fixed so that the count-only path
// consumes the generator exactly like the full path whenever it needs to.
template <class Sink>
void user_stream(const UserProcessSpec& spec, const TimeInterval& interval,
                 Philox4x32& rng, bool need_times, Sink&& emit) {
  const double len = interval.length();
  const std::int64_t arrivals = draw_poisson(rng, spec.per_user_rate * len);
  if (arrivals == 0) {
    return;
  }
  const bool trivial = spec.min_gap == 0.0 && spec.cluster_excess == 0.0;
  if (trivial && !need_times) {
    for (std::int64_t k = 0; k < arrivals; ++k) {
      emit(0.0);
    }
    return;
  }
  std::vector<double> raw(static_cast<std::size_t>(arrivals));
  for (double& t : raw) {
    t = interval.start + rng.uniform() * len;
  }
  std::sort(raw.begin(), raw.end());

  double last_kept = -std::numeric_limits<double>::infinity();
  const double spread = 10.0 * spec.min_gap;
  for (double t : raw) {
    if (t - last_kept < spec.min_gap) {
      continue;
    }
    last_kept = t;
    emit(t);
    if (spec.cluster_excess > 0.0) {
      const std::int64_t offspring = draw_poisson(rng, spec.cluster_excess);
      for (std::int64_t j = 0; j < offspring; ++j) {
        const double child = t + rng.uniform() * spread;
        if (interval.contains(child)) {
          emit(child);
        }
      }
    }
  }
}

}  // namespace

void TimeInterval::validate() const {
  if (!std::isfinite(start) || !std::isfinite(end) || !(end > start)) {
    std::ostringstream os;
    os << "invalid time interval [" << start << ", " << end << ")";
    throw DomainError(os.str());
  }
}

bool PointPattern::is_valid() const noexcept {
  if (!(interval.end > interval.start)) {
    return false;
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!interval.contains(times[i])) {
      return false;
    }
    if (i > 0 && times[i] < times[i - 1]) {
      return false;
    }
  }
  return true;
}

void UserProcessSpec::validate() const {
  require_rate(per_user_rate, "per_user_rate");
  if (!(min_gap >= 0.0) || !std::isfinite(min_gap)) {
    throw DomainError("min_gap must be finite and >= 0");
  }
  if (!(cluster_excess >= 0.0) || !std::isfinite(cluster_excess)) {
    throw DomainError("cluster_excess must be finite and >= 0");
  }
}

double Kernel::cdf(double offset) const {
  if (family == KernelFamily::kBoxcar) {
    return std::clamp((offset + 0.5 * bandwidth) / bandwidth, 0.0, 1.0);
  }
  return normal_cdf(offset / bandwidth);
}

double Kernel::cdf_antiderivative(double x) const {
  if (family == KernelFamily::kBoxcar) {
    const double half = 0.5 * bandwidth;
    if (x <= -half) {
      return 0.0;
    }
    if (x <= half) {
      return (x + half) * (x + half) / (2.0 * bandwidth);
    }
    return half + (x - half);
  }
  const double z = x / bandwidth;
  return bandwidth * (z * normal_cdf(z) + normal_pdf(z));
}

double MarkDistribution::mean() const noexcept {
  switch (family) {
    case MarkFamily::kConstant:
    case MarkFamily::kExponential:
      return value;
    case MarkFamily::kGamma:
      return shape * scale;
  }
  return 0.0;
}

double MarkDistribution::variance() const noexcept {
  switch (family) {
    case MarkFamily::kConstant:
      return 0.0;
    case MarkFamily::kExponential:
      return value * value;
    case MarkFamily::kGamma:
      return shape * scale * scale;
  }
  return 0.0;
}

void MarkDistribution::validate() const {
  switch (family) {
    case MarkFamily::kConstant:
      if (!(value >= 0.0)) throw DomainError("constant gamma must be >= 0");
      break;
    case MarkFamily::kExponential:
      if (!(value > 0.0)) throw DomainError("exponential gamma mean must be > 0");
      break;
    case MarkFamily::kGamma:
      if (!(shape > 0.0) || !(scale > 0.0)) {
        throw DomainError("gamma mark needs shape > 0 and scale > 0");
      }
      break;
  }
}

void SncpParams::validate() const {
  require_rate(center_rate, "center_rate");
  if (!(kernel.bandwidth > 0.0) || !std::isfinite(kernel.bandwidth)) {
    throw DomainError("kernel bandwidth must be > 0");
  }
  gamma.validate();
}

double sncp_expected_count(const SncpParams& params, const TimeInterval& interval) {
  params.validate();
  interval.validate();
  const double len = interval.length();
  const Kernel& k = params.kernel;
  const double captured =
      k.cdf_antiderivative(len) - 2.0 * k.cdf_antiderivative(0.0) + k.cdf_antiderivative(-len);
  return params.center_rate * params.gamma.mean() * captured;
}

double Correlation::operator()(double lag) const {
  lag = std::abs(lag);
  switch (family) {
    case CorrelationFamily::kExponential:
      return std::exp(-lag / range);
    case CorrelationFamily::kGaussian:
      return std::exp(-(lag / range) * (lag / range));
    case CorrelationFamily::kTable: {
      if (table.empty()) {
        return lag == 0.0 ? 1.0 : 0.0;
      }
      const auto lo = static_cast<std::size_t>(std::floor(lag));
      if (lo + 1 >= table.size()) {
        return lag == static_cast<double>(table.size() - 1) ? table.back() : 0.0;
      }
      const double frac = lag - static_cast<double>(lo);
      return table[lo] * (1.0 - frac) + table[lo + 1] * frac;
    }
  }
  return 0.0;
}

void LgcpParams::validate() const {
  if (mu.empty() || mu.size() != grid.size()) {
    throw DomainError("LGCP mu and grid must be nonempty and of equal length");
  }
  if (grid.size() > kMaxLgcpGrid) {
    throw DomainError("LGCP grid larger than " + std::to_string(kMaxLgcpGrid) + " bins");
  }
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) {
    throw DomainError("sigma2 must be finite and >= 0");
  }
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!(mu[i] >= 0.0) || !std::isfinite(mu[i])) {
      throw DomainError("mu must be finite and >= 0 on every bin");
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw DomainError("grid must be strictly increasing");
    }
  }
  if (rho.family != CorrelationFamily::kTable && !(rho.range > 0.0)) {
    throw DomainError("correlation range must be > 0");
  }
  if (rho.family == CorrelationFamily::kTable && !rho.table.empty() &&
      std::abs(rho.table.front() - 1.0) > 1e-12) {
    throw DomainError("correlation table must start with rho(0) = 1");
  }
}

PointPattern sample_homogeneous_poisson(double rate, const TimeInterval& interval,
                                        std::uint64_t seed) {
  require_rate(rate, "rate");
  interval.validate();
  auto rng = make_stream(seed, {stream_tag::kPoisson});
  const std::int64_t n = draw_poisson(rng, rate * interval.length());
  PointPattern out{{}, interval};
  out.times.resize(static_cast<std::size_t>(n));
  for (double& t : out.times) {
    t = interval.start + rng.uniform() * interval.length();
  }
  std::sort(out.times.begin(), out.times.end());
  return out;
}

PointPattern sample_user_superposition(const UserProcessSpec& spec,
                                       const TimeInterval& interval, std::uint64_t seed) {
  spec.validate();
  interval.validate();
  PointPattern out{{}, interval};
  for (std::size_t user = 0; user < spec.n_users; ++user) {
    auto rng = make_stream(seed, {stream_tag::kUser, user});
    user_stream(spec, interval, rng, true, [&](double t) { out.times.push_back(t); });
  }
  std::sort(out.times.begin(), out.times.end());
  return out;
}

std::int64_t sample_user_superposition_count(const UserProcessSpec& spec,
                                             const TimeInterval& interval,
                                             std::uint64_t seed) {
  spec.validate();
  interval.validate();
  std::int64_t total = 0;
  for (std::size_t user = 0; user < spec.n_users; ++user) {
    auto rng = make_stream(seed, {stream_tag::kUser, user});
    user_stream(spec, interval, rng, false, [&](double) { ++total; });
  }
  return total;
}

PointPattern sample_sncp(const SncpParams& params, const TimeInterval& interval,
                         std::uint64_t seed) {
  params.validate();
  interval.validate();
  auto rng = make_stream(seed, {stream_tag::kSncp});
  const double len = interval.length();
  const std::int64_t centers = draw_poisson(rng, params.center_rate * len);
  PointPattern out{{}, interval};
  for (std::int64_t c = 0; c < centers; ++c) {
    const double center = interval.start + rng.uniform() * len;
    double weight = params.gamma.value;
    if (params.gamma.family == MarkFamily::kExponential) {
      weight = draw_exponential(rng, 1.0 / params.gamma.value);
    } else if (params.gamma.family == MarkFamily::kGamma) {
      weight = draw_gamma(rng, params.gamma.shape, params.gamma.scale);
    }
    // Poisson with intensity weight * k(center, .) on the whole line,
    // restricted to the interval.
    const std::int64_t shots = draw_poisson(rng, weight);
    for (std::int64_t j = 0; j < shots; ++j) {
      double offset;
      if (params.kernel.family == KernelFamily::kBoxcar) {
        offset = (rng.uniform() - 0.5) * params.kernel.bandwidth;
      } else {
        offset = draw_normal(rng, 0.0, params.kernel.bandwidth);
      }
      const double t = center + offset;
      if (interval.contains(t)) {
        out.times.push_back(t);
      }
    }
  }
  std::sort(out.times.begin(), out.times.end());
  return out;
}

struct LgcpSampler::Factor {
  // Sigma = P^T L D L^T P; sample = P^T L sqrt(D) z.
  Eigen::MatrixXd lower;
  Eigen::VectorXd sqrt_d;
  Eigen::Transpositions<Eigen::Dynamic> transpositions;
};

LgcpSampler::LgcpSampler(LgcpParams params) : params_(std::move(params)) {
  params_.validate();
  if (params_.sigma2 == 0.0) {
    return;
  }
  const auto n = static_cast<Eigen::Index>(params_.grid.size());
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double r = params_.rho(params_.grid[i] - params_.grid[j]);
      cov(i, j) = cov(j, i) = params_.sigma2 * r;
    }
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  if (ldlt.info() != Eigen::Success) {
    throw NumericError("LGCP covariance factorisation failed");
  }
  const Eigen::VectorXd d = ldlt.vectorD();
  const double tol = 1e-10 * params_.sigma2 * static_cast<double>(n);
  Eigen::Index worst = 0;
  for (Eigen::Index i = 1; i < n; ++i) {
    if (d(i) < d(worst)) worst = i;
  }
  if (d(worst) < -tol) {
    std::ostringstream os;
    os << "LGCP covariance is not positive semidefinite: pivot " << worst << " of " << n
       << " is " << d(worst) << " (sigma2=" << params_.sigma2
       << ", rho(1)=" << params_.rho(1.0) << ")";
    throw NumericError(os.str());
  }
  factor_ = std::make_unique<Factor>();
  factor_->lower = ldlt.matrixL();
  factor_->sqrt_d = d.cwiseMax(0.0).cwiseSqrt();
  factor_->transpositions = ldlt.transpositionsP();
}

LgcpSampler::~LgcpSampler() = default;
LgcpSampler::LgcpSampler(LgcpSampler&&) noexcept = default;
LgcpSampler& LgcpSampler::operator=(LgcpSampler&&) noexcept = default;

std::vector<double> LgcpSampler::sample_field(std::uint64_t seed) const {
  const std::size_t n = params_.grid.size();
  std::vector<double> field(n, 0.0);
  if (!factor_) {
    return field;
  }
  auto rng = make_stream(seed, {stream_tag::kLgcp, 0});
  Eigen::VectorXd z(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    z(i) = draw_normal(rng, 0.0, 1.0);
  }
  Eigen::VectorXd g = factor_->lower * factor_->sqrt_d.cwiseProduct(z);
  g = factor_->transpositions.transpose() * g;
  for (std::size_t i = 0; i < n; ++i) {
    field[i] = g(static_cast<Eigen::Index>(i));
  }
  return field;
}

CountSeries LgcpSampler::sample(std::uint64_t seed) const {
  const std::vector<double> field = sample_field(seed);
  auto rng = make_stream(seed, {stream_tag::kLgcp, 1});
  CountSeries out;
  out.grid = params_.grid;
  out.counts.resize(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    out.counts[i] = draw_poisson(rng, params_.mu[i] * std::exp(field[i]));
  }
  return out;
}

CountSeries sample_lgcp(const LgcpParams& params, std::uint64_t seed) {
  return LgcpSampler(params).sample(seed);
}

LgcpMoments lgcp_moments(const LgcpParams& params, std::size_t t1, std::size_t t2) {
  params.validate();
  if (t1 >= params.grid.size() || t2 >= params.grid.size()) {
    throw DomainError("lgcp_moments: grid index out of range");
  }
  const double s2 = params.sigma2;
  const double mu1 = params.mu[t1];
  const double mu2 = params.mu[t2];
  LgcpMoments m;
  m.mean = mu1 * std::exp(0.5 * s2);
  m.variance = m.mean + std::expm1(s2) * std::exp(s2) * mu1 * mu1;
  if (t1 == t2) {
    m.same_index = true;
    m.covariance = m.variance;
  } else {
    const double r = params.rho(params.grid[t1] - params.grid[t2]);
    m.covariance = std::expm1(s2 * r) * std::exp(s2) * mu1 * mu2;
  }
  return m;
}

}  // namespace auctionflow
