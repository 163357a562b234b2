#pragma once

// Reference implementations used only by the tests. They are deliberately
// naive (plain summation, plain bisection, exhaustive search) so that they
// share no code path with the library routines they check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

/// P(X >= k) for X ~ Poisson(lambda), by summing the pmf below k.
inline double poisson_upper_tail(double lambda, long k) {
  if (k <= 0) return 1.0;
  double below = 0.0;
  for (long j = 0; j < k; ++j) {
    below += std::exp(j * std::log(lambda) - lambda - std::lgamma(j + 1.0));
  }
  const double tail = 1.0 - below;
  if (tail > 1e-8) return tail;
  // Deep tail: sum upward directly to avoid cancellation.
  double sum = 0.0;
  for (long j = k; j < k + 10000; ++j) {
    const double term = std::exp(j * std::log(lambda) - lambda - std::lgamma(j + 1.0));
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

/// Plain bisection to |hi - lo| <= tol on a sign-changing bracket.
inline double bisect(const std::function<double(double)>& f, double lo, double hi,
                     double tol = 1e-12) {
  double flo = f(lo);
  for (int i = 0; i < 4000 && hi - lo > tol; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Running mean and standard error (Welford).
class MeanSe {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double se() const { return std::sqrt(variance() / static_cast<double>(n_)); }
  std::size_t count() const { return n_; }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Sample variance with its standard error estimated from the fourth central
/// moment: Var(s^2) ~ (m4 - s^4 (n-3)/(n-1)) / n.
struct VarianceEstimate {
  double variance = 0.0;
  double se = 0.0;
};
inline VarianceEstimate variance_with_se(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d = x - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  const double s2 = m2 / (n - 1.0);
  m4 /= n;
  const double var_s2 = (m4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n;
  return {s2, std::sqrt(std::max(var_s2, 0.0))};
}

/// Sample covariance of paired draws with a delta-method standard error.
inline VarianceEstimate covariance_with_se(const std::vector<double>& xs,
                                           const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  std::vector<double> products(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) products[i] = (xs[i] - mx) * (ys[i] - my);
  MeanSe acc;
  for (double v : products) acc.add(v);
  return {acc.mean() * n / (n - 1.0), acc.se()};
}

/// Exhaustive argmax with ties to the smallest index.
inline std::size_t argmax(const std::vector<double>& values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

/// Ordinary least-squares slope of y on x.
inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace oracle
