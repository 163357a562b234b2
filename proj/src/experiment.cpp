#include "auctionflow/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include "auctionflow/auction_core.hpp"
#include "auctionflow/bid_optimizer.hpp"
#include "auctionflow/errors.hpp"
#include "auctionflow/point_process.hpp"
#include "auctionflow/rng.hpp"

namespace auctionflow {

namespace {

constexpr double kDominanceTol = 1e-12;

// Runs body(i) for i in [0, count) on up to `jobs` threads. Results must be
// written to per-index slots so the output order never depends on scheduling.
template <class Body>
void parallel_for(std::size_t count, unsigned jobs, Body&& body) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (unsigned t = 0; t < jobs; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

std::uint64_t double_bits(double v) {
  std::uint64_t bits = 0;
  static_assert(sizeof bits == sizeof v);
  std::memcpy(&bits, &v, sizeof v);
  return bits;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    fields.push_back(field);
  }
  return fields;
}

double parse_double(const std::string& s) {
  if (s.empty() || s == "nan") return std::numeric_limits<double>::quiet_NaN();
  return std::stod(s);
}

double mean_of(const std::vector<double>& xs) {
  double total = 0.0;
  for (double x : xs) total += x;
  return xs.empty() ? 0.0 : total / static_cast<double>(xs.size());
}

double var_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return acc / static_cast<double>(xs.size() - 1);
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

SquareMatrix discrete_spend_matrix(std::size_t n) {
  SquareMatrix spend(n);
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t a = 0; a < n; ++a) {
      spend(m, a) = static_cast<double>(a) + 1.0;
    }
  }
  return spend;
}

DiscreteOpportunity generate_discrete_opportunity(std::size_t n, double alpha_dep,
                                                  std::uint64_t seed, std::size_t index) {
  auto rng = make_stream(seed, {stream_tag::kDiscreteLandscape, index});
  DiscreteOpportunity opp{DiscreteJoint{SquareMatrix(n)}, SquareMatrix(n)};
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double z = rng.uniform();
      if (i == j) z += alpha_dep * static_cast<double>(n);
      opp.joint.probs(i, j) = z;
      total += z;
    }
  }
  for (double& v : opp.joint.probs.values()) v /= total;
  const auto conditional = opp.joint.conditional_utility();
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t a = 0; a < n; ++a) {
      opp.win(m, a) = draw_beta(rng, static_cast<double>(a) + 1.0, conditional[m] + 1.0);
    }
  }
  return opp;
}

DiscreteLandscape generate_discrete_landscape(std::size_t n, std::size_t N, double alpha_dep,
                                              std::uint64_t seed) {
  if (n < 2 || N < 1 || !(alpha_dep >= 0.0)) {
    throw DomainError("discrete landscape needs n >= 2, N >= 1 and alpha_dep >= 0");
  }
  DiscreteLandscape land;
  land.n = n;
  land.alpha_dep = alpha_dep;
  land.seed = seed;
  land.spend_matrix = discrete_spend_matrix(n);
  land.opportunities.reserve(N);
  land.win_matrices.reserve(N);
  for (std::size_t k = 0; k < N; ++k) {
    auto opp = generate_discrete_opportunity(n, alpha_dep, seed, k);
    land.opportunities.push_back(std::move(opp.joint));
    land.win_matrices.push_back(std::move(opp.win));
  }
  return land;
}

ExpMarketOpportunity generate_exponential_opportunity(const ExpLandscapeParams& params,
                                                      std::uint64_t seed, std::size_t index) {
  auto rng = make_stream(seed, {stream_tag::kExpLandscape, index});
  double p = draw_beta(rng, params.beta_a, params.beta_b);
  p = std::clamp(p, std::numeric_limits<double>::min(), 1.0 - 1e-12);
  const double scale = params.gamma_reading == GammaReading::kShapeScale ? 1.0 / p : p;
  double lambda = draw_gamma(rng, 1.0, scale);
  lambda = std::max(lambda, std::numeric_limits<double>::min());
  const double z = draw_normal(rng, 0.0, 1.0);
  const double log_delta = params.logdelta_mean + params.logdelta_sd * z;
  const double delta = std::exp(log_delta);
  return ExpMarketOpportunity{p, lambda, lambda / delta, delta};
}

ExpLandscape generate_exponential_landscape(std::size_t N, double logdelta_mean,
                                            double logdelta_sd, std::uint64_t seed,
                                            GammaReading reading) {
  if (N < 1 || !(logdelta_sd >= 0.0)) {
    throw DomainError("exponential landscape needs N >= 1 and logdelta_sd >= 0");
  }
  ExpLandscape land;
  land.gen_params.logdelta_mean = logdelta_mean;
  land.gen_params.logdelta_sd = logdelta_sd;
  land.gen_params.gamma_reading = reading;
  land.seed = seed;
  land.opportunities.reserve(N);
  for (std::size_t k = 0; k < N; ++k) {
    land.opportunities.push_back(generate_exponential_opportunity(land.gen_params, seed, k));
  }
  return land;
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("seeds must be nonempty");
  switch (kind) {
    case ExperimentKind::kProfitRatio:
      if (mu_values.empty() || alpha_values.empty()) {
        throw ConfigError("profit_ratio needs nonempty mu_values and alpha_values");
      }
      if (n < 2 || N < 1) throw ConfigError("profit_ratio needs n >= 2 and N >= 1");
      for (double a : alpha_values) {
        if (!(a >= 0.0)) throw ConfigError("alpha_values must be >= 0");
      }
      for (double m : mu_values) {
        if (!(m >= 0.0)) throw ConfigError("mu_values must be >= 0");
      }
      break;
    case ExperimentKind::kConversionRatio:
      if (budgets.empty() || logdelta_means.empty() || logdelta_sds.empty()) {
        throw ConfigError("conversion_ratio needs nonempty budgets and logdelta grids");
      }
      for (double b : budgets) {
        if (!(b > 0.0)) throw ConfigError("budgets must be > 0");
      }
      for (double s : logdelta_sds) {
        if (!(s >= 0.0)) throw ConfigError("logdelta_sds must be >= 0");
      }
      if (exp_N < 1) throw ConfigError("exp_N must be >= 1");
      if (!(C0 > 0.0)) throw ConfigError("C0 must be > 0");
      if (!(tolerance > 0.0 && tolerance < 1.0)) throw ConfigError("tolerance must be in (0,1)");
      if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
      break;
    case ExperimentKind::kPoissonCheck:
      if (poisson.granularities.empty()) throw ConfigError("granularities must be nonempty");
      if (poisson.strata < 1 || poisson.replicates < 2) {
        throw ConfigError("poisson_check needs strata >= 1 and replicates >= 2");
      }
      if (poisson.users_min < 1 || poisson.users_max < poisson.users_min) {
        throw ConfigError("poisson_check needs 1 <= users_min <= users_max");
      }
      for (const auto& g : poisson.granularities) {
        if (!(g.window_seconds > 0.0)) throw ConfigError("window_seconds must be > 0");
      }
      break;
  }
}

std::vector<ProfitRow> run_profit_ratio_experiment(const ExperimentConfig& config) {
  if (config.kind != ExperimentKind::kProfitRatio) {
    throw ConfigError("run_profit_ratio_experiment needs kind profit_ratio");
  }
  config.validate();
  const std::size_t n_mu = config.mu_values.size();
  const std::size_t n_alpha = config.alpha_values.size();
  const std::size_t n_seed = config.seeds.size();
  const SquareMatrix spend = discrete_spend_matrix(config.n);

  // One cell per landscape (alpha, seed); every mu reuses it.
  std::vector<std::vector<ProfitRow>> by_cell(n_alpha * n_seed);
  parallel_for(by_cell.size(), config.jobs, [&](std::size_t cell) {
    const double alpha = config.alpha_values[cell / n_seed];
    const std::uint64_t seed = config.seeds[cell % n_seed];
    std::vector<ProfitRow> rows(n_mu);
    for (std::size_t i = 0; i < n_mu; ++i) {
      rows[i].mu = config.mu_values[i];
      rows[i].alpha_dep = alpha;
      rows[i].seed = seed;
      rows[i].min_margin = std::numeric_limits<double>::infinity();
    }
    for (std::size_t k = 0; k < config.N; ++k) {
      const auto opp = generate_discrete_opportunity(config.n, alpha, seed, k);
      for (std::size_t i = 0; i < n_mu; ++i) {
        const double mu = config.mu_values[i];
        const std::size_t a_dep = optimal_action_discrete(opp.joint, spend, opp.win, mu);
        const std::size_t a_ind =
            optimal_action_discrete_independent(opp.joint, spend, opp.win, mu);
        const auto t_dep = expected_totals_discrete(opp.joint, spend, opp.win, a_dep);
        const double p_dep = t_dep.utility - mu * t_dep.spending;
        double p_ind = p_dep;
        if (a_ind != a_dep) {
          const auto t_ind = expected_totals_discrete(opp.joint, spend, opp.win, a_ind);
          p_ind = t_ind.utility - mu * t_ind.spending;
        }
        ProfitRow& row = rows[i];
        row.profit_dep += p_dep;
        row.profit_indep += p_ind;
        const double margin = p_dep - p_ind;
        row.min_margin = std::min(row.min_margin, margin);
        if (margin < -kDominanceTol) ++row.dominance_violations;
      }
    }
    for (ProfitRow& row : rows) {
      if (row.profit_indep > 0.0) {
        row.ratio = row.profit_dep / row.profit_indep;
      } else {
        row.flagged = true;
        row.ratio = row.profit_dep - row.profit_indep;
      }
    }
    by_cell[cell] = std::move(rows);
  });

  std::vector<ProfitRow> out;
  out.reserve(n_mu * by_cell.size());
  for (std::size_t i = 0; i < n_mu; ++i) {
    for (std::size_t cell = 0; cell < by_cell.size(); ++cell) {
      out.push_back(by_cell[cell][i]);
    }
  }
  return out;
}

std::vector<ConversionRow> run_conversion_ratio_experiment(const ExperimentConfig& config) {
  if (config.kind != ExperimentKind::kConversionRatio) {
    throw ConfigError("run_conversion_ratio_experiment needs kind conversion_ratio");
  }
  config.validate();
  const std::size_t n_mean = config.logdelta_means.size();
  const std::size_t n_sd = config.logdelta_sds.size();
  const std::size_t n_seed = config.seeds.size();
  const std::size_t n_budget = config.budgets.size();
  TuneOptions options;
  options.damping = config.damping;

  std::vector<std::vector<ConversionRow>> by_cell(n_mean * n_sd * n_seed);
  parallel_for(by_cell.size(), config.jobs, [&](std::size_t cell) {
    const double mean = config.logdelta_means[cell / (n_sd * n_seed)];
    const double sd = config.logdelta_sds[(cell / n_seed) % n_sd];
    const std::uint64_t seed = config.seeds[cell % n_seed];
    const ExpLandscape land =
        generate_exponential_landscape(config.exp_N, mean, sd, seed, config.gamma_reading);
    std::vector<ConversionRow> rows(n_budget);
    for (std::size_t b = 0; b < n_budget; ++b) {
      const double budget = config.budgets[b];
      const auto dep = tune_multiplier(land, budget, config.C0, config.tolerance,
                                       config.max_iter, true, options);
      const auto ind = tune_multiplier(land, budget, config.C0, config.tolerance,
                                       config.max_iter, false, options);
      ConversionRow& row = rows[b];
      row.budget = budget;
      row.logdelta_mean = mean;
      row.logdelta_sd = sd;
      row.seed = seed;
      row.conv_dep = dep.expected_conversions;
      row.conv_indep = ind.expected_conversions;
      row.ratio = row.conv_indep > 0.0 ? row.conv_dep / row.conv_indep
                                       : std::numeric_limits<double>::quiet_NaN();
      row.converged_dep = dep.state.converged;
      row.converged_indep = ind.state.converged;
      row.iterations_dep = dep.state.iterations;
      row.iterations_indep = ind.state.iterations;
      row.C_dep = dep.state.C;
      row.C_indep = ind.state.C;
      row.multi_root_opportunities = dep.multi_root_opportunities;
    }
    by_cell[cell] = std::move(rows);
  });

  std::vector<ConversionRow> out;
  out.reserve(n_budget * by_cell.size());
  for (std::size_t b = 0; b < n_budget; ++b) {
    for (std::size_t cell = 0; cell < by_cell.size(); ++cell) {
      out.push_back(by_cell[cell][b]);
    }
  }
  return out;
}

CountMatrix simulate_strata_counts(const PoissonCheckParams& params, double window_seconds,
                                   std::uint64_t seed) {
  CountMatrix data;
  data.strata.resize(params.strata);
  data.counts.assign(params.strata, std::vector<std::int64_t>(params.replicates, 0));
  const TimeInterval window{0.0, window_seconds};
  for (std::size_t s = 0; s < params.strata; ++s) {
    // The stratum design (user population) does not depend on the window.
    auto design = make_stream(seed, {stream_tag::kStrata, s});
    const std::size_t span = params.users_max - params.users_min + 1;
    const std::size_t users =
        params.users_min +
        std::min(span - 1, static_cast<std::size_t>(design.uniform() * static_cast<double>(span)));
    const UserProcessSpec spec{users, params.per_user_rate, params.min_gap,
                               params.cluster_excess};
    data.strata[s] = "s" + std::to_string(s);
    for (std::size_t w = 0; w < params.replicates; ++w) {
      const std::uint64_t replicate_seed =
          stream_id({seed, stream_tag::kStrata, s, w, double_bits(window_seconds)});
      data.counts[s][w] = sample_user_superposition_count(spec, window, replicate_seed);
    }
  }
  return data;
}

PoissonCheckResult run_poisson_check_experiment(const ExperimentConfig& config) {
  if (config.kind != ExperimentKind::kPoissonCheck) {
    throw ConfigError("run_poisson_check_experiment needs kind poisson_check");
  }
  config.validate();
  const auto& grans = config.poisson.granularities;
  const std::size_t cells = grans.size() * config.seeds.size();
  std::vector<GranularitySummary> summaries(cells);
  std::vector<std::vector<StratumRow>> rows(cells);

  parallel_for(cells, config.jobs, [&](std::size_t cell) {
    const Granularity& g = grans[cell / config.seeds.size()];
    const std::uint64_t seed = config.seeds[cell % config.seeds.size()];
    const CountMatrix actual = simulate_strata_counts(config.poisson, g.window_seconds, seed);
    const CountMatrix reference =
        simulate_poisson_reference(actual, stream_id({seed, double_bits(g.window_seconds)}));
    const auto act = log_mean_variance_ratio(actual);
    const auto ref = log_mean_variance_ratio(reference);

    GranularitySummary sum;
    sum.granularity = g.label;
    sum.window_seconds = g.window_seconds;
    sum.seed = seed;
    sum.statistics = act.statistics;
    sum.reference = ref.statistics;
    sum.dropped = act.dropped.size();
    sum.dropped_reference = ref.dropped.size();
    if (!act.statistics.empty() && !ref.statistics.empty()) {
      sum.qq = qq_against_poisson(act.statistics, ref.statistics);
      try {
        sum.qq_slope = qq_central_slope(sum.qq);
      } catch (const DomainError&) {
        sum.qq_slope = std::numeric_limits<double>::quiet_NaN();
      }
      sum.ks = ks_distance(act.statistics, ref.statistics);
      sum.mean_statistic = mean_of(act.statistics);
      sum.mean_reference = mean_of(ref.statistics);
      sum.se_difference =
          std::sqrt(var_of(act.statistics) / static_cast<double>(act.statistics.size()) +
                    var_of(ref.statistics) / static_cast<double>(ref.statistics.size()));
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<StratumRow> cell_rows(actual.size());
    for (std::size_t s = 0; s < actual.size(); ++s) {
      cell_rows[s] = {g.label, seed, s, nan, nan};
    }
    for (std::size_t i = 0; i < act.kept.size(); ++i) {
      cell_rows[act.kept[i]].statistic = act.statistics[i];
    }
    for (std::size_t i = 0; i < ref.kept.size(); ++i) {
      cell_rows[ref.kept[i]].reference_statistic = ref.statistics[i];
    }
    summaries[cell] = std::move(sum);
    rows[cell] = std::move(cell_rows);
  });

  PoissonCheckResult out;
  out.summaries = std::move(summaries);
  for (auto& r : rows) {
    out.rows.insert(out.rows.end(), r.begin(), r.end());
  }
  return out;
}

void write_profit_csv(std::ostream& out, const std::vector<ProfitRow>& rows) {
  out << "mu,alpha_dep,seed,profit_dep,profit_indep,ratio\n";
  for (const auto& r : rows) {
    out << format_double(r.mu) << ',' << format_double(r.alpha_dep) << ',' << r.seed << ','
        << format_double(r.profit_dep) << ',' << format_double(r.profit_indep) << ','
        << format_double(r.ratio) << '\n';
  }
}

void write_conversion_csv(std::ostream& out, const std::vector<ConversionRow>& rows) {
  out << "budget,logdelta_mean,logdelta_sd,seed,conv_dep,conv_indep,ratio\n";
  for (const auto& r : rows) {
    out << format_double(r.budget) << ',' << format_double(r.logdelta_mean) << ','
        << format_double(r.logdelta_sd) << ',' << r.seed << ',' << format_double(r.conv_dep)
        << ',' << format_double(r.conv_indep) << ',' << format_double(r.ratio) << '\n';
  }
}

void write_profit_flags_csv(std::ostream& out, const std::vector<ProfitRow>& rows) {
  out << "row,reason\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].flagged) {
      out << i << ",nonpositive_baseline_profit_ratio_column_holds_difference\n";
    }
  }
}

void write_conversion_flags_csv(std::ostream& out, const std::vector<ConversionRow>& rows) {
  out << "row,reason\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].converged_dep) out << i << ",dependency_aware_tuning_not_converged\n";
    if (!rows[i].converged_indep) out << i << ",baseline_tuning_not_converged\n";
  }
}

void write_poisson_strata_csv(std::ostream& out, const PoissonCheckResult& result) {
  out << "granularity,seed,stratum,statistic,reference_statistic\n";
  for (const auto& r : result.rows) {
    out << r.granularity << ',' << r.seed << ',' << r.stratum << ','
        << format_double(r.statistic) << ',' << format_double(r.reference_statistic) << '\n';
  }
}

void write_poisson_qq_csv(std::ostream& out, const PoissonCheckResult& result) {
  out << "granularity,seed,reference_quantile,actual_quantile\n";
  for (const auto& s : result.summaries) {
    for (const auto& [x, y] : s.qq) {
      out << s.granularity << ',' << s.seed << ',' << format_double(x) << ','
          << format_double(y) << '\n';
    }
  }
}

void write_poisson_summary_csv(std::ostream& out, const PoissonCheckResult& result) {
  out << "granularity,seed,window_seconds,strata_kept,strata_dropped,mean_statistic,"
         "mean_reference,se_difference,qq_slope,ks\n";
  for (const auto& s : result.summaries) {
    out << s.granularity << ',' << s.seed << ',' << format_double(s.window_seconds) << ','
        << s.statistics.size() << ',' << s.dropped << ',' << format_double(s.mean_statistic)
        << ',' << format_double(s.mean_reference) << ',' << format_double(s.se_difference)
        << ',' << format_double(s.qq_slope) << ',' << format_double(s.ks) << '\n';
  }
}

std::vector<ProfitRow> read_profit_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || split_fields(line) !=
                                     std::vector<std::string>{"mu", "alpha_dep", "seed",
                                                              "profit_dep", "profit_indep",
                                                              "ratio"}) {
    throw ConfigError("profit CSV header mismatch");
  }
  std::vector<ProfitRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 6) throw ConfigError("profit CSV row needs 6 fields");
    ProfitRow r;
    r.mu = parse_double(f[0]);
    r.alpha_dep = parse_double(f[1]);
    r.seed = std::stoull(f[2]);
    r.profit_dep = parse_double(f[3]);
    r.profit_indep = parse_double(f[4]);
    r.ratio = parse_double(f[5]);
    rows.push_back(r);
  }
  return rows;
}

std::vector<ConversionRow> read_conversion_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) ||
      split_fields(line) != std::vector<std::string>{"budget", "logdelta_mean", "logdelta_sd",
                                                     "seed", "conv_dep", "conv_indep", "ratio"}) {
    throw ConfigError("conversion CSV header mismatch");
  }
  std::vector<ConversionRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 7) throw ConfigError("conversion CSV row needs 7 fields");
    ConversionRow r;
    r.budget = parse_double(f[0]);
    r.logdelta_mean = parse_double(f[1]);
    r.logdelta_sd = parse_double(f[2]);
    r.seed = std::stoull(f[3]);
    r.conv_dep = parse_double(f[4]);
    r.conv_indep = parse_double(f[5]);
    r.ratio = parse_double(f[6]);
    rows.push_back(r);
  }
  return rows;
}

void write_profit_plot_data(std::ostream& out, const std::vector<ProfitRow>& rows) {
  std::map<std::pair<double, double>, std::vector<double>> groups;  // (alpha, mu)
  for (const auto& r : rows) {
    if (!r.flagged) groups[{r.alpha_dep, r.mu}].push_back(r.ratio);
  }
  out << "x,y,series\n";
  for (const auto& [key, ratios] : groups) {
    out << format_double(key.second) << ',' << format_double(mean_of(ratios)) << ",alpha="
        << format_double(key.first) << '\n';
  }
}

void write_conversion_plot_data(std::ostream& out, const std::vector<ConversionRow>& rows) {
  std::map<std::tuple<double, double, double>, std::vector<double>> groups;
  for (const auto& r : rows) {
    if (!r.flagged()) groups[{r.logdelta_mean, r.logdelta_sd, r.budget}].push_back(r.ratio);
  }
  out << "x,y,series\n";
  for (const auto& [key, ratios] : groups) {
    const auto& [mean, sd, budget] = key;
    out << format_double(budget) << ',' << format_double(mean_of(ratios)) << ",logdelta_mean="
        << format_double(mean) << " logdelta_sd=" << format_double(sd) << '\n';
  }
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw DomainError("spearman needs two equal-length samples of size >= 2");
  }
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
      std::size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double mx = mean_of(rx);
  const double my = mean_of(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace auctionflow
