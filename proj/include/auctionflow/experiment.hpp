#pragma once

// Synthetic landscape generation and the three experiment families:
// Poisson-ness of superposed counts, discrete profit ratio, and exponential
// conversion ratio under a fixed budget.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "auctionflow/landscape.hpp"
#include "auctionflow/poisson_diagnostics.hpp"

namespace auctionflow {

/// One opportunity of a discrete landscape: P(U=i, M=j) proportional to
/// Z_ij + alpha_dep * n * 1(i = j) with Z_ij ~ U(0,1); win(m, a) drawn once
/// from Beta(a + 1, E[U | M = m] + 1).
struct DiscreteOpportunity {
  DiscreteJoint joint;
  SquareMatrix win;
};

DiscreteOpportunity generate_discrete_opportunity(std::size_t n, double alpha_dep,
                                                  std::uint64_t seed, std::size_t index);

/// s(m, a) = a + 1.
SquareMatrix discrete_spend_matrix(std::size_t n);

DiscreteLandscape generate_discrete_landscape(std::size_t n, std::size_t N, double alpha_dep,
                                              std::uint64_t seed);

ExpMarketOpportunity generate_exponential_opportunity(const ExpLandscapeParams& params,
                                                      std::uint64_t seed, std::size_t index);

ExpLandscape generate_exponential_landscape(std::size_t N, double logdelta_mean,
                                            double logdelta_sd, std::uint64_t seed,
                                            GammaReading reading = GammaReading::kShapeScale);

enum class ExperimentKind { kPoissonCheck, kProfitRatio, kConversionRatio };

struct Granularity {
  std::string label;
  double window_seconds = 1.0;
};

struct PoissonCheckParams {
  std::size_t strata = 200;
  std::size_t replicates = 30;
  std::size_t users_min = 1000;
  std::size_t users_max = 2000;
  double per_user_rate = 1.0 / 600.0;
  double min_gap = 30.0;
  double cluster_excess = 1.0;
  std::vector<Granularity> granularities{{"hourly", 3600.0}, {"minutely", 60.0},
                                         {"secondly", 1.0}};
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kProfitRatio;
  std::string experiment_id = "default";
  std::vector<std::uint64_t> seeds{1};
  std::string output_path = ".";
  unsigned jobs = 1;

  // profit_ratio
  std::vector<double> mu_values{1e-3, 1e-2, 1e-1, 0.3, 1.0, 3.0, 1e1, 1e2, 1e3};
  std::vector<double> alpha_values{0.0, 0.5, 1.0, 2.0, 5.0};
  std::size_t n = 20;
  std::size_t N = 10000;

  // conversion_ratio
  std::vector<double> budgets{3.0, 10.0, 30.0, 100.0};
  std::vector<double> logdelta_means{0.0, 0.5, 1.0};
  std::vector<double> logdelta_sds{0.0, 0.5, 1.0};
  std::size_t exp_N = 10000;
  double C0 = 1.0;
  double tolerance = 1e-3;
  int max_iter = 200;
  double damping = 1.0;
  GammaReading gamma_reading = GammaReading::kShapeScale;

  // poisson_check
  PoissonCheckParams poisson;

  /// Throws ConfigError when grids or seeds are empty or values out of range.
  void validate() const;
};

struct ProfitRow {
  double mu = 0.0;
  double alpha_dep = 0.0;
  std::uint64_t seed = 0;
  double profit_dep = 0.0;
  double profit_indep = 0.0;
  double ratio = 0.0;      // profit_dep / profit_indep, or the difference when flagged
  bool flagged = false;    // baseline profit <= 0: ratio holds profit_dep - profit_indep
  std::size_t dominance_violations = 0;  // opportunities where dep < indep - 1e-12
  double min_margin = 0.0;               // min over opportunities of dep - indep
};

struct ConversionRow {
  double budget = 0.0;
  double logdelta_mean = 0.0;
  double logdelta_sd = 0.0;
  std::uint64_t seed = 0;
  double conv_dep = 0.0;
  double conv_indep = 0.0;
  double ratio = 0.0;
  bool converged_dep = false;
  bool converged_indep = false;
  int iterations_dep = 0;
  int iterations_indep = 0;
  double C_dep = 0.0;
  double C_indep = 0.0;
  int multi_root_opportunities = 0;

  bool flagged() const noexcept { return !(converged_dep && converged_indep); }
};

struct StratumRow {
  std::string granularity;
  std::uint64_t seed = 0;
  std::size_t stratum = 0;
  double statistic = 0.0;            // NaN when the stratum was dropped
  double reference_statistic = 0.0;  // NaN when the reference stratum was dropped
};

struct GranularitySummary {
  std::string granularity;
  double window_seconds = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> statistics;
  std::vector<double> reference;
  std::vector<std::pair<double, double>> qq;
  double qq_slope = 0.0;
  double ks = 0.0;
  double mean_statistic = 0.0;
  double mean_reference = 0.0;
  double se_difference = 0.0;  // SE of mean_statistic - mean_reference
  std::size_t dropped = 0;
  std::size_t dropped_reference = 0;
};

struct PoissonCheckResult {
  std::vector<StratumRow> rows;
  std::vector<GranularitySummary> summaries;
};

std::vector<ProfitRow> run_profit_ratio_experiment(const ExperimentConfig& config);
std::vector<ConversionRow> run_conversion_ratio_experiment(const ExperimentConfig& config);
PoissonCheckResult run_poisson_check_experiment(const ExperimentConfig& config);

/// Synthetic stratified counts: per stratum a user population, per replicate
/// one window of the given length.
CountMatrix simulate_strata_counts(const PoissonCheckParams& params, double window_seconds,
                                   std::uint64_t seed);

// CSV emitters; headers match the row schemas exactly.
void write_profit_csv(std::ostream& out, const std::vector<ProfitRow>& rows);
void write_conversion_csv(std::ostream& out, const std::vector<ConversionRow>& rows);
void write_poisson_strata_csv(std::ostream& out, const PoissonCheckResult& result);
void write_poisson_qq_csv(std::ostream& out, const PoissonCheckResult& result);
void write_poisson_summary_csv(std::ostream& out, const PoissonCheckResult& result);

/// `row,reason` lines for flagged rows (row is the 0-based data-row index).
void write_profit_flags_csv(std::ostream& out, const std::vector<ProfitRow>& rows);
void write_conversion_flags_csv(std::ostream& out, const std::vector<ConversionRow>& rows);

std::vector<ProfitRow> read_profit_csv(std::istream& in);
std::vector<ConversionRow> read_conversion_csv(std::istream& in);

/// (x, y, series) triples for external plotting: mean ratio over seeds.
void write_profit_plot_data(std::ostream& out, const std::vector<ProfitRow>& rows);
void write_conversion_plot_data(std::ostream& out, const std::vector<ConversionRow>& rows);

/// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Formats a double with 17 significant digits so CSV round-trips exactly.
std::string format_double(double v);

}  // namespace auctionflow
