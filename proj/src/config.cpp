#include "auctionflow/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "auctionflow/errors.hpp"

namespace auctionflow {

namespace {

// Converts a byte offset from the parser into "line L, column C".
std::string describe_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < offset; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

template <class Enum>
Enum lookup(const std::string& name, std::initializer_list<std::pair<const char*, Enum>> table,
            const char* what) {
  std::string options;
  for (const auto& [label, value] : table) {
    if (name == label) return value;
    options += options.empty() ? label : std::string(", ") + label;
  }
  throw ConfigError("unknown " + std::string(what) + " '" + name + "' (expected one of: " +
                    options + ")");
}

KernelFamily parse_kernel_family(const std::string& name) {
  return lookup<KernelFamily>(
      name, {{"boxcar", KernelFamily::kBoxcar}, {"gaussian", KernelFamily::kGaussian}},
      "kernel family");
}

std::string to_string(KernelFamily f) {
  return f == KernelFamily::kBoxcar ? "boxcar" : "gaussian";
}

MarkFamily parse_mark_family(const std::string& name) {
  return lookup<MarkFamily>(name,
                            {{"constant", MarkFamily::kConstant},
                             {"exponential", MarkFamily::kExponential},
                             {"gamma", MarkFamily::kGamma}},
                            "mark family");
}

std::string to_string(MarkFamily f) {
  switch (f) {
    case MarkFamily::kConstant: return "constant";
    case MarkFamily::kExponential: return "exponential";
    case MarkFamily::kGamma: return "gamma";
  }
  return "constant";
}

CorrelationFamily parse_correlation_family(const std::string& name) {
  return lookup<CorrelationFamily>(name,
                                   {{"exponential", CorrelationFamily::kExponential},
                                    {"gaussian", CorrelationFamily::kGaussian},
                                    {"table", CorrelationFamily::kTable}},
                                   "correlation family");
}

std::string to_string(CorrelationFamily f) {
  switch (f) {
    case CorrelationFamily::kExponential: return "exponential";
    case CorrelationFamily::kGaussian: return "gaussian";
    case CorrelationFamily::kTable: return "table";
  }
  return "exponential";
}

Kernel kernel_from_json(const Json& j, const std::string& ctx) {
  FieldReader r(j, ctx);
  Kernel k;
  std::string family = to_string(k.family);
  r.get("family", family);
  k.family = parse_kernel_family(family);
  r.get("bandwidth", k.bandwidth);
  r.finish();
  return k;
}

MarkDistribution mark_from_json(const Json& j, const std::string& ctx) {
  FieldReader r(j, ctx);
  MarkDistribution m;
  std::string family = to_string(m.family);
  r.get("family", family);
  m.family = parse_mark_family(family);
  r.get("value", m.value);
  r.get("shape", m.shape);
  r.get("scale", m.scale);
  r.finish();
  return m;
}

Correlation correlation_from_json(const Json& j, const std::string& ctx) {
  FieldReader r(j, ctx);
  Correlation c;
  std::string family = to_string(c.family);
  r.get("family", family);
  c.family = parse_correlation_family(family);
  r.get("range", c.range);
  r.get("table", c.table);
  r.finish();
  return c;
}

Granularity granularity_from_json(const Json& j, const std::string& ctx) {
  FieldReader r(j, ctx);
  Granularity g;
  r.require("label", g.label);
  r.require("window_seconds", g.window_seconds);
  r.finish();
  return g;
}

}  // namespace

FieldReader::FieldReader(const Json& object, std::string context)
    : object_(object), context_(std::move(context)) {
  if (!object_.is_object()) throw ConfigError(context_ + ": expected a JSON object");
}

bool FieldReader::has(const char* key) const { return object_.contains(key); }

const Json& FieldReader::raw(const char* key) {
  if (!has(key)) throw_missing(key);
  if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) seen_.emplace_back(key);
  return object_.at(key);
}

void FieldReader::finish() const {
  for (const auto& item : object_.items()) {
    if (std::find(seen_.begin(), seen_.end(), item.key()) == seen_.end()) {
      throw ConfigError(context_ + ": unknown field '" + item.key() + "'");
    }
  }
}

void FieldReader::throw_missing(const char* key) const {
  throw ConfigError(context_ + ": missing required field '" + key + "'");
}

void FieldReader::throw_type(const char* key, const char* detail) const {
  throw ConfigError(context_ + ": field '" + key + "': " + detail);
}

Json parse_json_text(const std::string& text, const std::string& source_name) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(source_name + ": JSON syntax error at " + describe_offset(text, e.byte) +
                      ": " + e.what());
  }
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_json_text(buffer.str(), path);
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  return lookup<ExperimentKind>(name,
                                {{"poisson_check", ExperimentKind::kPoissonCheck},
                                 {"profit_ratio", ExperimentKind::kProfitRatio},
                                 {"conversion_ratio", ExperimentKind::kConversionRatio}},
                                "experiment kind");
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kPoissonCheck: return "poisson_check";
    case ExperimentKind::kProfitRatio: return "profit_ratio";
    case ExperimentKind::kConversionRatio: return "conversion_ratio";
  }
  return "profit_ratio";
}

GammaReading parse_gamma_reading(const std::string& name) {
  return lookup<GammaReading>(
      name, {{"shape_scale", GammaReading::kShapeScale}, {"shape_rate", GammaReading::kShapeRate}},
      "gamma reading");
}

std::string to_string(GammaReading reading) {
  return reading == GammaReading::kShapeScale ? "shape_scale" : "shape_rate";
}

PoissonCheckParams poisson_params_from_json(const Json& j) {
  FieldReader r(j, "poisson");
  PoissonCheckParams p;
  r.get("strata", p.strata);
  r.get("replicates", p.replicates);
  r.get("users_min", p.users_min);
  r.get("users_max", p.users_max);
  r.get("per_user_rate", p.per_user_rate);
  r.get("min_gap", p.min_gap);
  r.get("cluster_excess", p.cluster_excess);
  if (r.has("granularities")) {
    const Json& list = r.raw("granularities");
    if (!list.is_array()) throw ConfigError("poisson: field 'granularities': expected an array");
    p.granularities.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      p.granularities.push_back(
          granularity_from_json(list[i], "poisson.granularities[" + std::to_string(i) + "]"));
    }
  }
  r.finish();
  return p;
}

Json to_json(const PoissonCheckParams& p) {
  Json grans = Json::array();
  for (const auto& g : p.granularities) {
    grans.push_back({{"label", g.label}, {"window_seconds", g.window_seconds}});
  }
  return {{"strata", p.strata},
          {"replicates", p.replicates},
          {"users_min", p.users_min},
          {"users_max", p.users_max},
          {"per_user_rate", p.per_user_rate},
          {"min_gap", p.min_gap},
          {"cluster_excess", p.cluster_excess},
          {"granularities", grans}};
}

ExperimentConfig experiment_config_from_json(const Json& j) {
  FieldReader r(j, "experiment config");
  ExperimentConfig c;
  std::string kind;
  r.require("kind", kind);
  c.kind = parse_experiment_kind(kind);
  r.get("experiment_id", c.experiment_id);
  r.get("seeds", c.seeds);
  r.get("output_path", c.output_path);
  r.get("jobs", c.jobs);
  r.get("mu_values", c.mu_values);
  r.get("alpha_values", c.alpha_values);
  r.get("n", c.n);
  r.get("N", c.N);
  r.get("budgets", c.budgets);
  r.get("logdelta_means", c.logdelta_means);
  r.get("logdelta_sds", c.logdelta_sds);
  r.get("exp_N", c.exp_N);
  r.get("C0", c.C0);
  r.get("tolerance", c.tolerance);
  r.get("max_iter", c.max_iter);
  r.get("damping", c.damping);
  if (r.has("gamma_reading")) {
    std::string reading;
    r.get("gamma_reading", reading);
    c.gamma_reading = parse_gamma_reading(reading);
  }
  if (r.has("poisson")) c.poisson = poisson_params_from_json(r.raw("poisson"));
  r.finish();
  c.validate();
  return c;
}

Json to_json(const ExperimentConfig& c) {
  return {{"kind", to_string(c.kind)},
          {"experiment_id", c.experiment_id},
          {"seeds", c.seeds},
          {"output_path", c.output_path},
          {"jobs", c.jobs},
          {"mu_values", c.mu_values},
          {"alpha_values", c.alpha_values},
          {"n", c.n},
          {"N", c.N},
          {"budgets", c.budgets},
          {"logdelta_means", c.logdelta_means},
          {"logdelta_sds", c.logdelta_sds},
          {"exp_N", c.exp_N},
          {"C0", c.C0},
          {"tolerance", c.tolerance},
          {"max_iter", c.max_iter},
          {"damping", c.damping},
          {"gamma_reading", to_string(c.gamma_reading)},
          {"poisson", to_json(c.poisson)}};
}

UserProcessSpec user_spec_from_json(const Json& j) {
  FieldReader r(j, "users");
  UserProcessSpec s;
  r.require("n_users", s.n_users);
  r.require("per_user_rate", s.per_user_rate);
  r.get("min_gap", s.min_gap);
  r.get("cluster_excess", s.cluster_excess);
  r.finish();
  return s;
}

Json to_json(const UserProcessSpec& s) {
  return {{"n_users", s.n_users},
          {"per_user_rate", s.per_user_rate},
          {"min_gap", s.min_gap},
          {"cluster_excess", s.cluster_excess}};
}

TimeInterval interval_from_json(const Json& j) {
  FieldReader r(j, "interval");
  TimeInterval t;
  r.require("start", t.start);
  r.require("end", t.end);
  r.finish();
  t.validate();
  return t;
}

Json to_json(const TimeInterval& t) { return {{"start", t.start}, {"end", t.end}}; }

SncpParams sncp_from_json(const Json& j) {
  FieldReader r(j, "sncp");
  SncpParams p;
  r.require("center_rate", p.center_rate);
  if (r.has("gamma")) p.gamma = mark_from_json(r.raw("gamma"), "sncp.gamma");
  if (r.has("kernel")) p.kernel = kernel_from_json(r.raw("kernel"), "sncp.kernel");
  r.finish();
  p.validate();
  return p;
}

Json to_json(const SncpParams& p) {
  return {{"center_rate", p.center_rate},
          {"gamma",
           {{"family", to_string(p.gamma.family)},
            {"value", p.gamma.value},
            {"shape", p.gamma.shape},
            {"scale", p.gamma.scale}}},
          {"kernel", {{"family", to_string(p.kernel.family)}, {"bandwidth", p.kernel.bandwidth}}}};
}

LgcpParams lgcp_from_json(const Json& j) {
  FieldReader r(j, "lgcp");
  LgcpParams p;
  r.require("mu", p.mu);
  if (r.has("grid")) {
    r.get("grid", p.grid);
  } else {
    p.grid.resize(p.mu.size());
    for (std::size_t i = 0; i < p.grid.size(); ++i) p.grid[i] = static_cast<double>(i);
  }
  r.get("sigma2", p.sigma2);
  if (r.has("rho")) p.rho = correlation_from_json(r.raw("rho"), "lgcp.rho");
  r.finish();
  p.validate();
  return p;
}

Json to_json(const LgcpParams& p) {
  return {{"mu", p.mu},
          {"grid", p.grid},
          {"sigma2", p.sigma2},
          {"rho", {{"family", to_string(p.rho.family)}, {"range", p.rho.range}, {"table", p.rho.table}}}};
}

ExpMarketOpportunity exp_opportunity_from_json(const Json& j) {
  FieldReader r(j, "opportunity");
  double p = 0.0;
  double lambda = 0.0;
  r.require("p", p);
  r.require("lambda", lambda);
  ExpMarketOpportunity opp;
  if (r.has("lambda1") && r.has("delta")) {
    throw ConfigError("opportunity: give either 'lambda1' or 'delta', not both");
  }
  if (r.has("delta")) {
    double delta = 1.0;
    r.get("delta", delta);
    opp = ExpMarketOpportunity::from_delta(p, lambda, delta);
  } else {
    double lambda1 = lambda;
    r.get("lambda1", lambda1);
    opp = ExpMarketOpportunity{p, lambda, lambda1, lambda / lambda1};
  }
  r.finish();
  opp.validate();
  return opp;
}

Json to_json(const ExpMarketOpportunity& o) {
  return {{"p", o.p}, {"lambda", o.lambda}, {"lambda1", o.lambda1}, {"delta", o.delta}};
}

TvBoundInputs tv_inputs_from_json(const Json& j) {
  FieldReader r(j, "tv_bound");
  TvBoundInputs t;
  r.require("lambdas", t.lambdas);
  r.require("r_bounds", t.r_bounds);
  r.require("L", t.L);
  r.require("R", t.R);
  r.get("delta1", t.delta1);
  r.get("delta2", t.delta2);
  r.finish();
  t.validate();
  return t;
}

Json to_json(const TvBoundInputs& t) {
  return {{"lambdas", t.lambdas}, {"r_bounds", t.r_bounds}, {"L", t.L},
          {"R", t.R},             {"delta1", t.delta1},     {"delta2", t.delta2}};
}

Json to_json(const DiscreteLandscape& land) {
  auto matrix = [](const SquareMatrix& m) {
    Json rows = Json::array();
    for (std::size_t i = 0; i < m.size(); ++i) {
      rows.push_back(std::vector<double>(m.values().begin() + i * m.size(),
                                         m.values().begin() + (i + 1) * m.size()));
    }
    return rows;
  };
  Json opps = Json::array();
  for (std::size_t k = 0; k < land.size(); ++k) {
    opps.push_back({{"joint", matrix(land.opportunities[k].probs)},
                    {"win", matrix(land.win_matrices[k])}});
  }
  return {{"n", land.n},
          {"N", land.size()},
          {"alpha_dep", land.alpha_dep},
          {"seed", land.seed},
          {"spend", matrix(land.spend_matrix)},
          {"opportunities", opps}};
}

Json to_json(const ExpLandscape& land) {
  Json opps = Json::array();
  for (const auto& o : land.opportunities) opps.push_back(to_json(o));
  return {{"N", land.size()},
          {"seed", land.seed},
          {"beta_a", land.gen_params.beta_a},
          {"beta_b", land.gen_params.beta_b},
          {"logdelta_mean", land.gen_params.logdelta_mean},
          {"logdelta_sd", land.gen_params.logdelta_sd},
          {"gamma_reading", to_string(land.gen_params.gamma_reading)},
          {"opportunities", opps}};
}

}  // namespace auctionflow
