#include "auctionflow/poisson_diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "auctionflow/errors.hpp"
#include "auctionflow/rng.hpp"

namespace auctionflow {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    fields.push_back(field);
  }
  return fields;
}

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;  // unbiased
};

template <class T>
MeanVar mean_var(std::span<const T> xs) {
  MeanVar mv;
  if (xs.empty()) return mv;
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t k = 0;
  for (const T& raw : xs) {
    const double x = static_cast<double>(raw);
    ++k;
    const double d = x - mean;
    mean += d / static_cast<double>(k);
    m2 += d * (x - mean);
  }
  mv.mean = mean;
  mv.var = xs.size() > 1 ? m2 / static_cast<double>(xs.size() - 1) : 0.0;
  return mv;
}

}  // namespace

void TvBoundInputs::validate() const {
  if (lambdas.size() != r_bounds.size()) {
    throw DomainError("lambdas and r_bounds must have the same length");
  }
  if (!(delta1 > 0.0) || !(delta2 > 0.0)) {
    throw DomainError("delta1 and delta2 must be > 0");
  }
  if (!(L >= 0.0) || !(R >= 0.0)) {
    throw DomainError("L and R must be >= 0");
  }
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] >= 0.0) || !(r_bounds[i] >= 0.0)) {
      throw DomainError("per-user lambda and r must be >= 0");
    }
    if (lambdas[i] > L || r_bounds[i] > R) {
      throw DomainError("per-user lambda must be <= L and r must be <= R");
    }
  }
}

TvBound tv_bound_general(const TvBoundInputs& inputs) {
  inputs.validate();
  double total = 0.0;
  double heavy = 0.0;
  double sticky = 0.0;
  for (std::size_t i = 0; i < inputs.lambdas.size(); ++i) {
    const double li = inputs.lambdas[i];
    total += li;
    if (li > inputs.delta1) heavy += li;
    if (inputs.r_bounds[i] > inputs.delta2) sticky += li;
  }
  TvBound out;
  if (total == 0.0) {
    out.empty_market = true;
  } else {
    out.alpha = heavy / total;
    out.beta = sticky / total;
  }
  out.bound = inputs.L * out.alpha + inputs.R * out.beta + inputs.delta1 + inputs.delta2;
  return out;
}

ShortIntervalBound tv_bound_short_interval(double l, double interval_len, double lambda_total) {
  if (!(l >= 0.0) || !(interval_len >= 0.0) || !(lambda_total >= 0.0)) {
    throw DomainError("l, interval length and total mean must be >= 0");
  }
  const double per_user = l * interval_len;
  return {per_user, lambda_total * per_user};
}

double poisson_tail_bound(double lambda, double x) {
  if (!(lambda > 0.0) || !(x > 0.0)) {
    throw DomainError("poisson_tail_bound needs lambda > 0 and x > 0");
  }
  return std::exp(-x * x / (lambda + x));
}

double poisson_tail_bound_chernoff(double lambda, double x) {
  if (!(lambda > 0.0) || !(x > 0.0)) {
    throw DomainError("poisson_tail_bound_chernoff needs lambda > 0 and x > 0");
  }
  const double u = x / lambda;
  return std::exp(-lambda * ((1.0 + u) * std::log1p(u) - u));
}

CountMatrix read_count_matrix_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ConfigError("count matrix CSV is empty");
  }
  const auto header = split_csv_line(line);
  if (header != std::vector<std::string>{"stratum", "window", "count"}) {
    throw ConfigError("count matrix CSV header must be stratum,window,count");
  }
  CountMatrix out;
  std::map<std::string, std::size_t> index;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3) {
      throw ConfigError("count matrix CSV line " + std::to_string(line_no) +
                        ": expected 3 fields");
    }
    std::int64_t count = 0;
    try {
      std::size_t used = 0;
      count = std::stoll(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError("count matrix CSV line " + std::to_string(line_no) +
                        ": count is not an integer");
    }
    if (count < 0) {
      throw ConfigError("count matrix CSV line " + std::to_string(line_no) +
                        ": negative count");
    }
    auto [it, inserted] = index.emplace(fields[0], out.strata.size());
    if (inserted) {
      out.strata.push_back(fields[0]);
      out.counts.emplace_back();
    }
    out.counts[it->second].push_back(count);
  }
  return out;
}

void write_count_matrix_csv(std::ostream& out, const CountMatrix& data) {
  out << "stratum,window,count\n";
  for (std::size_t s = 0; s < data.size(); ++s) {
    const std::string label = s < data.strata.size() ? data.strata[s] : std::to_string(s);
    for (std::size_t w = 0; w < data.counts[s].size(); ++w) {
      out << label << ',' << w << ',' << data.counts[s][w] << '\n';
    }
  }
}

LogRatioResult log_mean_variance_ratio(const CountMatrix& data) {
  LogRatioResult out;
  for (std::size_t s = 0; s < data.size(); ++s) {
    const auto& row = data.counts[s];
    const auto mv = mean_var<std::int64_t>(row);
    if (row.size() < 2 || !(mv.var > 0.0) || !(mv.mean > 0.0)) {
      out.dropped.push_back(s);
      continue;
    }
    out.statistics.push_back(std::log(mv.mean / mv.var));
    out.kept.push_back(s);
  }
  if (!out.dropped.empty()) {
    out.warnings.push_back(std::to_string(out.dropped.size()) +
                           " strata dropped (zero variance or fewer than 2 replicates)");
  }
  if (out.statistics.empty() && data.size() > 0) {
    out.warnings.push_back("all strata degenerate; no statistics computed");
  }
  return out;
}

CountMatrix simulate_poisson_reference(const CountMatrix& data, std::uint64_t seed) {
  CountMatrix ref;
  ref.strata = data.strata;
  ref.counts.resize(data.size());
  for (std::size_t s = 0; s < data.size(); ++s) {
    const auto mv = mean_var<std::int64_t>(data.counts[s]);
    auto rng = make_stream(seed, {stream_tag::kReference, s});
    ref.counts[s].resize(data.counts[s].size());
    for (auto& c : ref.counts[s]) {
      c = draw_poisson(rng, mv.mean);
    }
  }
  return ref;
}

double empirical_quantile(std::span<const double> sorted, double level) {
  if (sorted.empty()) {
    throw DomainError("quantile of an empty sample");
  }
  if (sorted.size() == 1) return sorted.front();
  const double pos = std::clamp(level, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<std::pair<double, double>> qq_against_poisson(std::span<const double> actual,
                                                          std::span<const double> reference) {
  if (actual.empty() || reference.empty()) {
    throw DomainError("qq_against_poisson needs two nonempty samples");
  }
  std::vector<double> a(actual.begin(), actual.end());
  std::vector<double> r(reference.begin(), reference.end());
  std::sort(a.begin(), a.end());
  std::sort(r.begin(), r.end());
  const std::size_t points = std::max(a.size(), r.size());
  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double level =
        points == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(points - 1);
    pairs.emplace_back(empirical_quantile(r, level), empirical_quantile(a, level));
  }
  return pairs;
}

double qq_central_slope(std::span<const std::pair<double, double>> pairs, double lo, double hi) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t n = 0;
  for (const auto& [x, y] : pairs) {
    if (x < lo || x > hi) continue;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) {
    throw DomainError("fewer than two QQ pairs in the central region");
  }
  const double dn = static_cast<double>(n);
  const double denom = sxx - sx * sx / dn;
  if (!(denom > 0.0)) {
    throw DomainError("central QQ pairs have no spread in the reference quantiles");
  }
  return (sxy - sx * sy / dn) / denom;
}

double ks_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) {
    throw DomainError("ks_distance needs two nonempty samples");
  }
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  std::size_t i = 0, j = 0;
  double worst = 0.0;
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    worst = std::max(worst, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return worst;
}

double count_distribution_gap(std::span<const std::int64_t> counts, std::size_t max_count) {
  if (counts.empty()) {
    throw DomainError("count_distribution_gap needs samples");
  }
  const auto mv = mean_var<std::int64_t>(counts);
  std::vector<double> hist(max_count + 1, 0.0);
  for (std::int64_t c : counts) {
    if (c >= 0 && static_cast<std::size_t>(c) <= max_count) {
      hist[static_cast<std::size_t>(c)] += 1.0;
    }
  }
  const double n = static_cast<double>(counts.size());
  double worst = 0.0;
  double log_pmf = -mv.mean;  // log P(N = 0)
  for (std::size_t k = 0; k <= max_count; ++k) {
    if (k > 0) {
      log_pmf += mv.mean > 0.0 ? std::log(mv.mean) - std::log(static_cast<double>(k))
                               : -std::numeric_limits<double>::infinity();
    }
    const double pmf = std::exp(log_pmf);
    worst = std::max(worst, std::abs(hist[k] / n - pmf));
  }
  return worst;
}

GapEstimate second_moment_gap(double bound, std::span<const PointPattern> patterns,
                              std::size_t poisson_seeds, std::uint64_t seed,
                              const std::function<double(double)>& h) {
  if (!(bound > 0.0)) {
    throw DomainError("second_moment_gap needs a mark bound M > 0");
  }
  if (patterns.empty()) {
    throw DomainError("second_moment_gap needs at least one pattern");
  }
  const TimeInterval interval = patterns.front().interval;
  auto mark = [&](double t) {
    const double v = h ? h(t) : 1.0;
    if (std::abs(v) > bound) {
      throw DomainError("mark function exceeds its bound M");
    }
    return v;
  };

  const std::size_t reps = patterns.size();
  std::vector<double> f(reps), g(reps);
  std::vector<double> pooled;
  for (std::size_t k = 0; k < reps; ++k) {
    const auto& pat = patterns[k];
    if (pat.interval.start != interval.start || pat.interval.end != interval.end) {
      throw DomainError("all patterns must share one interval");
    }
    double fk = 0.0, gk = 0.0;
    for (double t : pat.times) {
      const double v = mark(t);
      fk += v;
      gk += v * v;
    }
    f[k] = fk;
    g[k] = gk;
    if (poisson_seeds > 0) {
      pooled.insert(pooled.end(), pat.times.begin(), pat.times.end());
    }
  }
  const double dr = static_cast<double>(reps);
  double f_mean = 0.0, f2_mean = 0.0, g_mean = 0.0;
  for (std::size_t k = 0; k < reps; ++k) {
    f_mean += f[k];
    f2_mean += f[k] * f[k];
    g_mean += g[k];
  }
  f_mean /= dr;
  f2_mean /= dr;
  g_mean /= dr;

  GapEstimate out;
  out.replicates = reps;
  out.xi_second_moment = f2_mean;

  if (poisson_seeds == 0) {
    out.poisson_second_moment = f_mean * f_mean + g_mean;
    out.signed_gap = f2_mean - out.poisson_second_moment;
    // Influence-function standard error of mean(f^2) - mean(f)^2 - mean(g).
    double psi_mean = 0.0, psi_sq = 0.0;
    for (std::size_t k = 0; k < reps; ++k) {
      const double psi = f[k] * f[k] - 2.0 * f_mean * f[k] - g[k];
      psi_mean += psi;
      psi_sq += psi * psi;
    }
    psi_mean /= dr;
    const double var = reps > 1 ? (psi_sq - dr * psi_mean * psi_mean) / (dr - 1.0) : 0.0;
    out.se = std::sqrt(std::max(var, 0.0) / dr);
  } else {
    const double mean_count = static_cast<double>(pooled.size()) / dr;
    double p_mean = 0.0, p_sq = 0.0;
    for (std::size_t j = 0; j < poisson_seeds; ++j) {
      auto rng = make_stream(seed, {stream_tag::kReference, 1000, j});
      const std::int64_t n = draw_poisson(rng, mean_count);
      double fp = 0.0;
      for (std::int64_t i = 0; i < n; ++i) {
        const auto pick =
            static_cast<std::size_t>(rng.uniform() * static_cast<double>(pooled.size()));
        fp += mark(pooled[std::min(pick, pooled.size() - 1)]);
      }
      p_mean += fp * fp;
      p_sq += fp * fp * fp * fp;
    }
    const double ds = static_cast<double>(poisson_seeds);
    p_mean /= ds;
    const double p_var = poisson_seeds > 1 ? (p_sq - ds * p_mean * p_mean) / (ds - 1.0) : 0.0;
    double x_var = 0.0;
    for (std::size_t k = 0; k < reps; ++k) {
      const double d = f[k] * f[k] - f2_mean;
      x_var += d * d;
    }
    x_var = reps > 1 ? x_var / (dr - 1.0) : 0.0;
    out.poisson_second_moment = p_mean;
    out.signed_gap = f2_mean - p_mean;
    out.se = std::sqrt(std::max(x_var, 0.0) / dr + std::max(p_var, 0.0) / ds);
  }
  out.gap = std::abs(out.signed_gap);
  return out;
}

}  // namespace auctionflow
