#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>
#include <vector>

#include "auctionflow/auction_core.hpp"
#include "auctionflow/bid_optimizer.hpp"
#include "auctionflow/config.hpp"
#include "auctionflow/errors.hpp"
#include "auctionflow/experiment.hpp"
#include "auctionflow/point_process.hpp"
#include "auctionflow/poisson_diagnostics.hpp"

namespace py = pybind11;
using namespace auctionflow;

namespace {

SquareMatrix to_matrix(const std::vector<std::vector<double>>& rows, const char* name) {
  SquareMatrix m(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size()) {
      throw DomainError(std::string(name) + " must be a square matrix");
    }
    for (std::size_t j = 0; j < rows.size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

struct DiscreteInputs {
  DiscreteJoint joint;
  SquareMatrix spend;
  SquareMatrix win;
};

DiscreteInputs discrete_inputs(const std::vector<std::vector<double>>& joint,
                               const std::vector<std::vector<double>>& win,
                               const std::vector<std::vector<double>>& spend) {
  DiscreteInputs in{{to_matrix(joint, "joint")}, {}, to_matrix(win, "win")};
  in.spend = spend.empty() ? discrete_spend_matrix(in.joint.n()) : to_matrix(spend, "spend");
  in.joint.validate();
  if (in.win.size() != in.joint.n() || in.spend.size() != in.joint.n()) {
    throw DomainError("joint, win and spend must share the same size");
  }
  return in;
}

// Experiments take the same JSON document the CLI reads, so both entry points
// share one validation path.
py::list run_experiment(const std::string& config_json) {
  const ExperimentConfig config =
      experiment_config_from_json(parse_json_text(config_json, "run_experiment"));
  py::list out;
  if (config.kind == ExperimentKind::kProfitRatio) {
    std::vector<ProfitRow> rows;
    {
      py::gil_scoped_release release;
      rows = run_profit_ratio_experiment(config);
    }
    for (const auto& r : rows) {
      py::dict d;
      d["mu"] = r.mu;
      d["alpha_dep"] = r.alpha_dep;
      d["seed"] = r.seed;
      d["profit_dep"] = r.profit_dep;
      d["profit_indep"] = r.profit_indep;
      d["ratio"] = r.ratio;
      d["flagged"] = r.flagged;
      d["dominance_violations"] = r.dominance_violations;
      out.append(d);
    }
  } else if (config.kind == ExperimentKind::kConversionRatio) {
    std::vector<ConversionRow> rows;
    {
      py::gil_scoped_release release;
      rows = run_conversion_ratio_experiment(config);
    }
    for (const auto& r : rows) {
      py::dict d;
      d["budget"] = r.budget;
      d["logdelta_mean"] = r.logdelta_mean;
      d["logdelta_sd"] = r.logdelta_sd;
      d["seed"] = r.seed;
      d["conv_dep"] = r.conv_dep;
      d["conv_indep"] = r.conv_indep;
      d["ratio"] = r.ratio;
      d["flagged"] = r.flagged();
      out.append(d);
    }
  } else {
    PoissonCheckResult result;
    {
      py::gil_scoped_release release;
      result = run_poisson_check_experiment(config);
    }
    for (const auto& s : result.summaries) {
      py::dict d;
      d["granularity"] = s.granularity;
      d["window_seconds"] = s.window_seconds;
      d["seed"] = s.seed;
      d["qq_slope"] = s.qq_slope;
      d["ks"] = s.ks;
      d["mean_statistic"] = s.mean_statistic;
      d["mean_reference"] = s.mean_reference;
      out.append(d);
    }
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bid optimisation under utility/market dependency, with point-process diagnostics";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<ExpMarketOpportunity>(m, "ExpMarketOpportunity")
      .def(py::init([](double p, double lambda, double lambda1) {
             ExpMarketOpportunity o{p, lambda, lambda1, lambda / lambda1};
             o.validate();
             return o;
           }),
           py::arg("p"), py::arg("lam"), py::arg("lam1"))
      .def_static("from_delta", &ExpMarketOpportunity::from_delta, py::arg("p"), py::arg("lam"),
                  py::arg("delta"))
      .def("independent", &ExpMarketOpportunity::independent)
      .def_readonly("p", &ExpMarketOpportunity::p)
      .def_readonly("lam", &ExpMarketOpportunity::lambda)
      .def_readonly("lam1", &ExpMarketOpportunity::lambda1)
      .def_readonly("delta", &ExpMarketOpportunity::delta)
      .def("__repr__", [](const ExpMarketOpportunity& o) {
        std::ostringstream ss;
        ss << "ExpMarketOpportunity(p=" << o.p << ", lam=" << o.lambda << ", lam1=" << o.lambda1
           << ")";
        return ss.str();
      });

  py::class_<FpaSolution>(m, "FpaSolution")
      .def_readonly("bid", &FpaSolution::bid)
      .def_readonly("residual", &FpaSolution::residual)
      .def_readonly("converged", &FpaSolution::converged)
      .def_readonly("multiple_roots", &FpaSolution::multiple_roots)
      .def_readonly("root_count", &FpaSolution::root_count)
      .def_readonly("alternative_root", &FpaSolution::alternative_root);

  py::class_<TvBound>(m, "TvBound")
      .def_readonly("bound", &TvBound::bound)
      .def_readonly("alpha", &TvBound::alpha)
      .def_readonly("beta", &TvBound::beta)
      .def_readonly("empty_market", &TvBound::empty_market);

  py::class_<TuneResult>(m, "TuneResult")
      .def_property_readonly("C", [](const TuneResult& r) { return r.state.C; })
      .def_property_readonly("r", [](const TuneResult& r) { return r.state.r; })
      .def_property_readonly("iterations", [](const TuneResult& r) { return r.state.iterations; })
      .def_property_readonly("converged", [](const TuneResult& r) { return r.state.converged; })
      .def_readonly("expected_conversions", &TuneResult::expected_conversions)
      .def_readonly("expected_spend", &TuneResult::expected_spend)
      .def_readonly("bids", &TuneResult::bids)
      .def_readonly("failure", &TuneResult::failure);

  m.def(
      "sample_homogeneous_poisson",
      [](double rate, double start, double end, std::uint64_t seed) {
        return sample_homogeneous_poisson(rate, {start, end}, seed).times;
      },
      py::arg("rate"), py::arg("start"), py::arg("end"), py::arg("seed"),
      "Event times of a homogeneous Poisson process on [start, end).");

  m.def(
      "sample_user_superposition",
      [](std::size_t n_users, double per_user_rate, double start, double end, std::uint64_t seed,
         double min_gap, double cluster_excess) {
        UserProcessSpec spec{n_users, per_user_rate, min_gap, cluster_excess};
        return sample_user_superposition(spec, {start, end}, seed).times;
      },
      py::arg("n_users"), py::arg("per_user_rate"), py::arg("start"), py::arg("end"),
      py::arg("seed"), py::arg("min_gap") = 0.0, py::arg("cluster_excess") = 0.0);

  m.def(
      "lgcp_moments",
      [](std::vector<double> mu, double sigma2, double range, std::size_t t1, std::size_t t2) {
        LgcpParams params;
        params.grid.resize(mu.size());
        for (std::size_t i = 0; i < mu.size(); ++i) params.grid[i] = static_cast<double>(i);
        params.mu = std::move(mu);
        params.sigma2 = sigma2;
        params.rho.family = CorrelationFamily::kExponential;
        params.rho.range = range;
        const auto r = lgcp_moments(params, t1, t2);
        return py::make_tuple(r.mean, r.variance, r.covariance);
      },
      py::arg("mu"), py::arg("sigma2"), py::arg("range"), py::arg("t1"), py::arg("t2"),
      "(mean, variance, covariance) of LGCP counts with exponential correlation on a unit grid.");

  m.def(
      "tv_bound_general",
      [](std::vector<double> lambdas, std::vector<double> r_bounds, double L, double R,
         double delta1, double delta2) {
        return tv_bound_general({std::move(lambdas), std::move(r_bounds), L, R, delta1, delta2});
      },
      py::arg("lambdas"), py::arg("r_bounds"), py::arg("L"), py::arg("R"), py::arg("delta1"),
      py::arg("delta2"));

  m.def(
      "tv_bound_short_interval",
      [](double l, double interval_len, double lambda_total) {
        const auto b = tv_bound_short_interval(l, interval_len, lambda_total);
        return py::make_tuple(b.d_tv, b.d_TV);
      },
      py::arg("l"), py::arg("interval_len"), py::arg("lambda_total"));

  m.def("poisson_tail_bound", &poisson_tail_bound, py::arg("lam"), py::arg("x"));
  m.def("poisson_tail_bound_chernoff", &poisson_tail_bound_chernoff, py::arg("lam"), py::arg("x"));

  m.def(
      "expected_spend_exp",
      [](const ExpMarketOpportunity& o, double bid, bool second_price) {
        return expected_spend_exp(o, bid,
                                  second_price ? AuctionKind::kSecondPrice : AuctionKind::kFirstPrice);
      },
      py::arg("opportunity"), py::arg("bid"), py::arg("second_price") = false);
  m.def("expected_conversions_exp", &expected_conversions_exp, py::arg("opportunity"),
        py::arg("bid"));

  m.def(
      "optimal_action_discrete",
      [](const std::vector<std::vector<double>>& joint, const std::vector<std::vector<double>>& win,
         double mu, const std::vector<std::vector<double>>& spend) {
        const auto in = discrete_inputs(joint, win, spend);
        return optimal_action_discrete(in.joint, in.spend, in.win, mu);
      },
      py::arg("joint"), py::arg("win"), py::arg("mu"),
      py::arg("spend") = std::vector<std::vector<double>>{},
      "Profit-maximising action; spend defaults to s(m, a) = a + 1.");
  m.def(
      "optimal_action_discrete_independent",
      [](const std::vector<std::vector<double>>& joint, const std::vector<std::vector<double>>& win,
         double mu, const std::vector<std::vector<double>>& spend) {
        const auto in = discrete_inputs(joint, win, spend);
        return optimal_action_discrete_independent(in.joint, in.spend, in.win, mu);
      },
      py::arg("joint"), py::arg("win"), py::arg("mu"),
      py::arg("spend") = std::vector<std::vector<double>>{});

  m.def("solve_spa_exponential", &solve_spa_exponential, py::arg("opportunity"), py::arg("C"));
  m.def(
      "solve_fpa_exponential",
      [](const ExpMarketOpportunity& o, double C, bool best_lagrangian) {
        FpaSolverOptions opts;
        if (best_lagrangian) opts.root_choice = RootChoice::kBestLagrangian;
        return solve_fpa_exponential(o, C, opts);
      },
      py::arg("opportunity"), py::arg("C"), py::arg("best_lagrangian") = false);
  m.def(
      "check_uniqueness_conditions",
      [](const ExpMarketOpportunity& o, double mu) {
        const auto c = check_uniqueness_conditions(o, mu);
        return py::make_tuple(c.unique, c.describe());
      },
      py::arg("opportunity"), py::arg("mu"));

  m.def(
      "generate_exponential_landscape",
      [](std::size_t N, double logdelta_mean, double logdelta_sd, std::uint64_t seed) {
        return generate_exponential_landscape(N, logdelta_mean, logdelta_sd, seed).opportunities;
      },
      py::arg("N"), py::arg("logdelta_mean"), py::arg("logdelta_sd"), py::arg("seed"));

  m.def(
      "landscape_bids",
      [](std::vector<ExpMarketOpportunity> opps, double C, bool dependency_aware) {
        ExpLandscape l;
        l.opportunities = std::move(opps);
        return landscape_bids(l, C, dependency_aware);
      },
      py::arg("opportunities"), py::arg("C"), py::arg("dependency_aware") = true);

  m.def(
      "tune_multiplier",
      [](std::vector<ExpMarketOpportunity> opps, double budget, double C0, double delta,
         int max_iter, bool dependency_aware) {
        ExpLandscape l;
        l.opportunities = std::move(opps);
        py::gil_scoped_release release;
        return tune_multiplier(l, budget, C0, delta, max_iter, dependency_aware);
      },
      py::arg("opportunities"), py::arg("budget"), py::arg("C0") = 1.0,
      py::arg("delta") = 1e-3, py::arg("max_iter") = 200, py::arg("dependency_aware") = true);

  m.def("run_experiment", &run_experiment, py::arg("config_json"),
        "Run an experiment from a JSON config string; returns one dict per output row.");
}
