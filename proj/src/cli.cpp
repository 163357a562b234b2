#include "auctionflow/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <memory>
#include <tuple>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <utility>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "auctionflow/auction_core.hpp"
#include "auctionflow/bid_optimizer.hpp"
#include "auctionflow/config.hpp"
#include "auctionflow/errors.hpp"
#include "auctionflow/experiment.hpp"
#include "auctionflow/poisson_diagnostics.hpp"
#include "auctionflow/rng.hpp"

namespace auctionflow::cli {

namespace fs = std::filesystem;

namespace {

std::shared_ptr<spdlog::logger> logger() {
  static auto instance = [] {
    auto l = spdlog::stderr_color_mt("auctionflow");
    l->set_pattern("[%l] %v");
    l->set_level(spdlog::level::warn);
    return l;
  }();
  return instance;
}

// Collects file contents in memory and writes them only on commit, each via
// a temporary file and a rename, so a failed run leaves nothing behind.
class StagedOutputs {
 public:
  explicit StagedOutputs(fs::path dir) : dir_(std::move(dir)) {}

  std::ostream& open(const std::string& name) {
    files_.emplace_back(name, std::make_unique<std::ostringstream>());
    return *files_.back().second;
  }

  std::vector<fs::path> commit() {
    fs::create_directories(dir_);
    std::vector<fs::path> written;
    for (auto& [name, buffer] : files_) {
      const fs::path target = dir_ / name;
      const fs::path tmp = dir_ / (name + ".tmp");
      {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw ConfigError("cannot write '" + tmp.string() + "'");
        f << buffer->str();
        if (!f) throw ConfigError("failed writing '" + tmp.string() + "'");
      }
      fs::rename(tmp, target);
      written.push_back(target);
    }
    return written;
  }

 private:
  fs::path dir_;
  std::vector<std::pair<std::string, std::unique_ptr<std::ostringstream>>> files_;
};

struct Context {
  Json config;
  std::uint64_t seed = 1;
  fs::path config_dir;
};

std::string require_kind(FieldReader& r) {
  std::string kind;
  r.require("kind", kind);
  return kind;
}

void write_pattern_csv(std::ostream& out, const PointPattern& pattern) {
  out << "time\n";
  for (double t : pattern.times) out << format_double(t) << '\n';
}

void write_series_csv(std::ostream& out, const CountSeries& series) {
  out << "bin,count\n";
  for (std::size_t i = 0; i < series.counts.size(); ++i) {
    out << i << ',' << series.counts[i] << '\n';
  }
}

SquareMatrix matrix_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ConfigError(what + ": expected a nonempty square array");
  SquareMatrix m(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != j.size()) {
      throw ConfigError(what + ": row " + std::to_string(i) + " has the wrong length");
    }
    for (std::size_t k = 0; k < j.size(); ++k) {
      if (!j[i][k].is_number()) {
        throw ConfigError(what + "[" + std::to_string(i) + "][" + std::to_string(k) +
                          "]: expected a number");
      }
      m(i, k) = j[i][k].get<double>();
    }
  }
  return m;
}

// ----- gen -----

int run_gen(Context& ctx, StagedOutputs& outputs, Json& resolved) {
  FieldReader r(ctx.config, "gen config");
  const std::string kind = require_kind(r);
  r.get("seed", ctx.seed);
  resolved["kind"] = kind;

  if (kind == "poisson" || kind == "user_superposition" || kind == "sncp") {
    TimeInterval interval;
    interval = interval_from_json(r.raw("interval"));
    resolved["interval"] = to_json(interval);
    PointPattern pattern;
    if (kind == "poisson") {
      double rate = 0.0;
      r.require("rate", rate);
      resolved["rate"] = rate;
      r.finish();
      pattern = sample_homogeneous_poisson(rate, interval, ctx.seed);
    } else if (kind == "user_superposition") {
      const auto spec = user_spec_from_json(r.raw("users"));
      resolved["users"] = to_json(spec);
      r.finish();
      pattern = sample_user_superposition(spec, interval, ctx.seed);
    } else {
      const auto params = sncp_from_json(r.raw("sncp"));
      resolved["sncp"] = to_json(params);
      r.finish();
      pattern = sample_sncp(params, interval, ctx.seed);
    }
    write_pattern_csv(outputs.open("points.csv"), pattern);
    return kSuccess;
  }
  if (kind == "lgcp") {
    const auto params = lgcp_from_json(r.raw("lgcp"));
    resolved["lgcp"] = to_json(params);
    r.finish();
    write_series_csv(outputs.open("series.csv"), sample_lgcp(params, ctx.seed));
    return kSuccess;
  }
  if (kind == "strata_counts") {
    PoissonCheckParams params;
    if (r.has("poisson")) params = poisson_params_from_json(r.raw("poisson"));
    double window = 1.0;
    r.require("window_seconds", window);
    r.finish();
    if (!(window > 0.0)) throw ConfigError("gen config: window_seconds must be > 0");
    ExperimentConfig check;
    check.kind = ExperimentKind::kPoissonCheck;
    check.poisson = params;
    check.validate();
    resolved["poisson"] = to_json(params);
    resolved["window_seconds"] = window;
    write_count_matrix_csv(outputs.open("counts.csv"),
                           simulate_strata_counts(params, window, ctx.seed));
    return kSuccess;
  }
  if (kind == "discrete_landscape") {
    std::size_t n = 20, N = 10000;
    double alpha = 0.0;
    r.get("n", n);
    r.get("N", N);
    r.get("alpha_dep", alpha);
    r.finish();
    resolved["n"] = n;
    resolved["N"] = N;
    resolved["alpha_dep"] = alpha;
    const auto land = generate_discrete_landscape(n, N, alpha, ctx.seed);
    outputs.open("landscape.json") << to_json(land).dump() << '\n';
    return kSuccess;
  }
  if (kind == "exponential_landscape") {
    std::size_t N = 10000;
    double mean = 0.0, sd = 0.0;
    std::string reading = "shape_scale";
    r.get("N", N);
    r.get("logdelta_mean", mean);
    r.get("logdelta_sd", sd);
    r.get("gamma_reading", reading);
    r.finish();
    resolved["N"] = N;
    resolved["logdelta_mean"] = mean;
    resolved["logdelta_sd"] = sd;
    resolved["gamma_reading"] = reading;
    const auto land =
        generate_exponential_landscape(N, mean, sd, ctx.seed, parse_gamma_reading(reading));
    outputs.open("landscape.json") << to_json(land).dump(1) << '\n';
    return kSuccess;
  }
  throw ConfigError("gen config: unknown kind '" + kind + "'");
}

// ----- diagnose -----

int run_diagnose(Context& ctx, StagedOutputs& outputs, Json& resolved) {
  FieldReader r(ctx.config, "diagnose config");
  const std::string kind = require_kind(r);
  r.get("seed", ctx.seed);
  resolved["kind"] = kind;
  Json result;

  if (kind == "tv_bound") {
    const auto inputs = tv_inputs_from_json(r.raw("inputs"));
    r.finish();
    resolved["inputs"] = to_json(inputs);
    const auto b = tv_bound_general(inputs);
    result = {{"bound", b.bound}, {"alpha", b.alpha}, {"beta", b.beta},
              {"empty_market", b.empty_market}};
  } else if (kind == "short_interval") {
    double l = 0.0, len = 0.0, total = 0.0;
    r.require("l", l);
    r.require("interval_len", len);
    r.require("lambda_total", total);
    r.finish();
    resolved.update({{"l", l}, {"interval_len", len}, {"lambda_total", total}});
    const auto b = tv_bound_short_interval(l, len, total);
    result = {{"d_tv", b.d_tv}, {"d_TV", b.d_TV}};
  } else if (kind == "tail_bound") {
    std::vector<double> lambdas, xs;
    r.require("lambdas", lambdas);
    r.require("xs", xs);
    r.finish();
    resolved.update({{"lambdas", lambdas}, {"xs", xs}});
    std::vector<std::tuple<double, double, double, double>> rows;
    for (double lam : lambdas) {
      for (double x : xs) {
        rows.emplace_back(lam, x, poisson_tail_bound(lam, x), poisson_tail_bound_chernoff(lam, x));
      }
    }
    auto& csv = outputs.open("tail_bound.csv");
    csv << "lambda,x,bound,chernoff_bound\n";
    for (const auto& [lam, x, b, c] : rows) {
      csv << format_double(lam) << ',' << format_double(x) << ',' << format_double(b) << ','
          << format_double(c) << '\n';
    }
    result = {{"rows", rows.size()}};
  } else if (kind == "lgcp_moments") {
    const auto params = lgcp_from_json(r.raw("lgcp"));
    std::size_t t1 = 0, t2 = 1;
    r.get("t1", t1);
    r.get("t2", t2);
    r.finish();
    resolved.update({{"lgcp", to_json(params)}, {"t1", t1}, {"t2", t2}});
    const auto m = lgcp_moments(params, t1, t2);
    result = {{"mean", m.mean}, {"variance", m.variance}, {"covariance", m.covariance},
              {"same_index", m.same_index}};
  } else if (kind == "log_ratio") {
    std::string path;
    r.require("counts_csv", path);
    r.finish();
    fs::path csv_path(path);
    if (csv_path.is_relative()) csv_path = ctx.config_dir / csv_path;
    resolved["counts_csv"] = csv_path.string();
    std::ifstream in(csv_path);
    if (!in) throw ConfigError("cannot open counts CSV '" + csv_path.string() + "'");
    const CountMatrix data = read_count_matrix_csv(in);
    const auto act = log_mean_variance_ratio(data);
    const auto ref = log_mean_variance_ratio(simulate_poisson_reference(data, ctx.seed));
    for (const auto& w : act.warnings) logger()->warn("{}", w);
    auto& strata = outputs.open("strata.csv");
    strata << "stratum,statistic\n";
    for (std::size_t i = 0; i < act.kept.size(); ++i) {
      strata << data.strata[act.kept[i]] << ',' << format_double(act.statistics[i]) << '\n';
    }
    result = {{"strata", data.size()}, {"kept", act.kept.size()},
              {"dropped", act.dropped.size()}, {"warnings", act.warnings}};
    if (!act.statistics.empty() && !ref.statistics.empty()) {
      const auto qq = qq_against_poisson(act.statistics, ref.statistics);
      auto& qq_csv = outputs.open("qq.csv");
      qq_csv << "reference_quantile,actual_quantile\n";
      for (const auto& [x, y] : qq) qq_csv << format_double(x) << ',' << format_double(y) << '\n';
      result["ks"] = ks_distance(act.statistics, ref.statistics);
      try {
        result["qq_central_slope"] = qq_central_slope(qq);
      } catch (const DomainError& e) {
        logger()->warn("central QQ slope unavailable: {}", e.what());
      }
    }
  } else if (kind == "second_moment_gap") {
    const auto spec = user_spec_from_json(r.raw("users"));
    const auto interval = interval_from_json(r.raw("interval"));
    std::size_t replicates = 1000, poisson_seeds = 0;
    double bound = 1.0;
    r.get("replicates", replicates);
    r.get("poisson_seeds", poisson_seeds);
    r.get("bound", bound);
    r.finish();
    resolved.update({{"users", to_json(spec)}, {"interval", to_json(interval)},
                     {"replicates", replicates}, {"poisson_seeds", poisson_seeds},
                     {"bound", bound}});
    std::vector<PointPattern> patterns;
    patterns.reserve(replicates);
    for (std::size_t i = 0; i < replicates; ++i) {
      patterns.push_back(
          sample_user_superposition(spec, interval, stream_id({ctx.seed, i})));
    }
    const auto gap = second_moment_gap(bound, patterns, poisson_seeds, ctx.seed);
    result = {{"gap", gap.gap}, {"signed_gap", gap.signed_gap}, {"se", gap.se},
              {"xi_second_moment", gap.xi_second_moment},
              {"poisson_second_moment", gap.poisson_second_moment},
              {"replicates", gap.replicates}};
  } else {
    throw ConfigError("diagnose config: unknown kind '" + kind + "'");
  }
  outputs.open("diagnose.json") << result.dump(2) << '\n';
  return kSuccess;
}

// ----- solve -----

int run_solve(Context& ctx, StagedOutputs& outputs, Json& resolved, std::ostream& out) {
  FieldReader r(ctx.config, "solve config");
  const std::string kind = require_kind(r);
  resolved["kind"] = kind;
  Json result;
  int status = kSuccess;

  if (kind == "first_price" || kind == "second_price") {
    const auto opp = exp_opportunity_from_json(r.raw("opportunity"));
    double C = 1.0;
    r.require("C", C);
    r.finish();
    resolved.update({{"opportunity", to_json(opp)}, {"C", C}});
    double bid = 0.0;
    if (kind == "second_price") {
      bid = solve_spa_exponential(opp, C);
    } else {
      const auto sol = solve_fpa_exponential(opp, C);
      const auto unique = check_uniqueness_conditions(opp, 1.0 / C);
      bid = sol.bid;
      result = {{"residual", sol.residual},
                {"newton_steps", sol.newton_steps},
                {"bisection_steps", sol.bisection_steps},
                {"converged", sol.converged},
                {"multiple_roots", sol.multiple_roots},
                {"uniqueness", unique.describe()}};
      if (sol.multiple_roots) logger()->warn("several roots of g; reporting the smallest");
      if (!sol.converged) {
        logger()->error("first-price solver did not converge (residual {})", sol.residual);
        status = kNonConvergence;
      }
    }
    result["bid"] = bid;
    out << format_double(bid) << '\n';
  } else if (kind == "discrete") {
    const SquareMatrix joint_probs = matrix_from_json(r.raw("joint"), "joint");
    const SquareMatrix win = matrix_from_json(r.raw("win"), "win");
    SquareMatrix spend = discrete_spend_matrix(joint_probs.size());
    if (r.has("spend")) spend = matrix_from_json(r.raw("spend"), "spend");
    double mu = 1.0;
    bool dependency_aware = true;
    r.require("mu", mu);
    r.get("dependency_aware", dependency_aware);
    r.finish();
    if (win.size() != joint_probs.size() || spend.size() != joint_probs.size()) {
      throw ConfigError("solve config: joint, win and spend must share the same size");
    }
    const DiscreteJoint joint{joint_probs};
    const std::size_t action =
        dependency_aware ? optimal_action_discrete(joint, spend, win, mu)
                         : optimal_action_discrete_independent(joint, spend, win, mu);
    resolved.update({{"mu", mu}, {"dependency_aware", dependency_aware}});
    const auto profits = dependency_aware ? action_profits(joint, spend, win, mu)
                                          : action_profits_independent(joint, spend, win, mu);
    result = {{"action", action}, {"profits", profits}};
    out << action << '\n';
  } else {
    throw ConfigError("solve config: unknown kind '" + kind + "'");
  }
  outputs.open("solve.json") << result.dump(2) << '\n';
  return status;
}

// ----- tune -----

int run_tune(Context& ctx, StagedOutputs& outputs, Json& resolved) {
  FieldReader r(ctx.config, "tune config");
  std::size_t N = 10000;
  double mean = 0.0, sd = 0.0, budget = 0.0, C0 = 1.0, tolerance = 1e-3, damping = 1.0;
  int max_iter = 200;
  bool dependency_aware = true;
  std::string reading = "shape_scale";
  r.get("seed", ctx.seed);
  r.get("N", N);
  r.get("logdelta_mean", mean);
  r.get("logdelta_sd", sd);
  r.get("gamma_reading", reading);
  r.require("budget", budget);
  r.get("C0", C0);
  r.get("tolerance", tolerance);
  r.get("max_iter", max_iter);
  r.get("damping", damping);
  r.get("dependency_aware", dependency_aware);
  r.finish();
  resolved.update({{"N", N}, {"logdelta_mean", mean}, {"logdelta_sd", sd},
                   {"gamma_reading", reading}, {"budget", budget}, {"C0", C0},
                   {"tolerance", tolerance}, {"max_iter", max_iter}, {"damping", damping},
                   {"dependency_aware", dependency_aware}});

  const auto land =
      generate_exponential_landscape(N, mean, sd, ctx.seed, parse_gamma_reading(reading));
  TuneOptions options;
  options.damping = damping;
  const auto result =
      tune_multiplier(land, budget, C0, tolerance, max_iter, dependency_aware, options);

  auto& trace = outputs.open("trace.csv");
  trace << "iter,C,S,r\n";
  for (const auto& row : result.trajectory) {
    trace << row.iter << ',' << format_double(row.C) << ',' << format_double(row.S) << ','
          << format_double(row.r) << '\n';
  }
  Json summary = {{"C", result.state.C},
                  {"S", result.expected_spend},
                  {"r", result.state.r},
                  {"iterations", result.state.iterations},
                  {"converged", result.state.converged},
                  {"expected_conversions", result.expected_conversions},
                  {"expected_spend", result.expected_spend},
                  {"multi_root_opportunities", result.multi_root_opportunities},
                  {"failure", result.failure}};
  outputs.open("tune.json") << summary.dump(2) << '\n';
  if (!result.state.converged) {
    logger()->error("multiplier tuning did not converge: {}", result.failure);
    return kNonConvergence;
  }
  return kSuccess;
}

// ----- experiment -----

int run_experiment(const Invocation& inv, Context& ctx, StagedOutputs*& outputs_slot,
                   Json& resolved, std::unique_ptr<StagedOutputs>& owned) {
  ExperimentConfig config = experiment_config_from_json(ctx.config);
  if (inv.seed_override) config.seeds = {*inv.seed_override};
  if (inv.jobs > 0) config.jobs = inv.jobs;
  if (!inv.output_dir.empty()) config.output_path = inv.output_dir;
  config.validate();
  resolved = to_json(config);

  owned = std::make_unique<StagedOutputs>(config.output_path);
  outputs_slot = owned.get();
  StagedOutputs& outputs = *owned;
  const std::string stem = config.experiment_id + "_" + to_string(config.kind);
  int status = kSuccess;

  switch (config.kind) {
    case ExperimentKind::kProfitRatio: {
      const auto rows = run_profit_ratio_experiment(config);
      write_profit_csv(outputs.open(stem + ".csv"), rows);
      write_profit_flags_csv(outputs.open(stem + ".flags.csv"), rows);
      write_profit_plot_data(outputs.open(stem + ".plot.csv"), rows);
      std::size_t violations = 0;
      for (const auto& row : rows) violations += row.dominance_violations;
      if (violations > 0) {
        logger()->error("{} opportunity-level dominance violations", violations);
      }
      break;
    }
    case ExperimentKind::kConversionRatio: {
      const auto rows = run_conversion_ratio_experiment(config);
      write_conversion_csv(outputs.open(stem + ".csv"), rows);
      write_conversion_flags_csv(outputs.open(stem + ".flags.csv"), rows);
      write_conversion_plot_data(outputs.open(stem + ".plot.csv"), rows);
      std::size_t flagged = 0;
      for (const auto& row : rows) flagged += row.flagged() ? 1 : 0;
      if (flagged > 0) {
        logger()->error("{} of {} conversion rows did not converge", flagged, rows.size());
        status = kNonConvergence;
      }
      break;
    }
    case ExperimentKind::kPoissonCheck: {
      const auto result = run_poisson_check_experiment(config);
      write_poisson_strata_csv(outputs.open(stem + ".csv"), result);
      write_poisson_qq_csv(outputs.open(stem + ".qq.csv"), result);
      write_poisson_summary_csv(outputs.open(stem + ".summary.csv"), result);
      break;
    }
  }
  return status;
}

}  // namespace

void configure_logging_from_env() {
  const char* env = std::getenv("AUCTIONFLOW_LOG");
  if (env == nullptr || *env == '\0') return;
  const auto level = spdlog::level::from_str(env);
  if (level == spdlog::level::off && std::string(env) != "off") {
    logger()->warn("AUCTIONFLOW_LOG='{}' not recognised; keeping 'warn'", env);
    return;
  }
  logger()->set_level(level);
}

int dispatch(const Invocation& inv, std::ostream& out) {
  try {
    static const std::vector<std::string> known{"gen", "diagnose", "solve", "tune", "experiment"};
    if (std::find(known.begin(), known.end(), inv.subcommand) == known.end()) {
      throw ConfigError("unknown subcommand '" + inv.subcommand + "'");
    }
    if (inv.config_path.empty()) throw ConfigError("--config is required");

    Context ctx;
    ctx.config = load_json_file(inv.config_path);
    ctx.config_dir = fs::path(inv.config_path).parent_path();
    Json resolved = Json::object();

    std::unique_ptr<StagedOutputs> owned;
    StagedOutputs* outputs = nullptr;
    int status = kSuccess;
    if (inv.subcommand == "experiment") {
      status = run_experiment(inv, ctx, outputs, resolved, owned);
    } else {
      owned = std::make_unique<StagedOutputs>(inv.output_dir.empty() ? "." : inv.output_dir);
      outputs = owned.get();
      // Solving is deterministic, so its config carries no seed field.
      if (inv.seed_override && inv.subcommand != "solve") {
        if (!ctx.config.is_object()) throw ConfigError("config must be a JSON object");
        ctx.config["seed"] = *inv.seed_override;
      }
      if (inv.subcommand == "gen") {
        status = run_gen(ctx, *outputs, resolved);
      } else if (inv.subcommand == "diagnose") {
        status = run_diagnose(ctx, *outputs, resolved);
      } else if (inv.subcommand == "solve") {
        status = run_solve(ctx, *outputs, resolved, out);
      } else {
        status = run_tune(ctx, *outputs, resolved);
      }
      if (inv.subcommand != "solve") resolved["seed"] = ctx.seed;
    }

    outputs->open(inv.subcommand + ".resolved.json") << resolved.dump(2) << '\n';
    logger()->info("resolved config: {}", resolved.dump());
    for (const auto& path : outputs->commit()) {
      logger()->info("wrote {}", path.string());
    }
    return status;
  } catch (const NoSolutionError& e) {
    logger()->error("{}", e.what());
    return kNonConvergence;
  } catch (const ConfigError& e) {
    logger()->error("{}", e.what());
    return kDomainOrConfigError;
  } catch (const DomainError& e) {
    logger()->error("{}", e.what());
    return kDomainOrConfigError;
  } catch (const std::exception& e) {
    logger()->error("{}", e.what());
    return kDomainOrConfigError;
  }
}

}  // namespace auctionflow::cli
