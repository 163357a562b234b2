#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "auctionflow/errors.hpp"
#include "auctionflow/experiment.hpp"
#include "oracles.hpp"

using namespace auctionflow;

TEST_CASE("discrete generator: joints are normalised, spend is a + 1") {
  const auto l = generate_discrete_landscape(6, 50, 1.5, 4);
  CHECK(l.size() == 50);
  CHECK_NOTHROW(l.validate());
  for (std::size_t m = 0; m < 6; ++m) {
    for (std::size_t a = 0; a < 6; ++a) CHECK(l.spend_matrix(m, a) == a + 1.0);
  }
}

TEST_CASE("discrete generator: diagonal mass is 1/n without dependency") {
  oracle::MeanSe diag;
  for (std::size_t k = 0; k < 4000; ++k) {
    const auto opp = generate_discrete_opportunity(10, 0.0, 8, k);
    double d = 0.0;
    for (std::size_t i = 0; i < 10; ++i) d += opp.joint.probs(i, i);
    diag.add(d);
  }
  CHECK(std::abs(diag.mean() - 0.1) <= 3.0 * diag.se());
}

TEST_CASE("discrete generator: strong dependency concentrates on the diagonal") {
  const auto opp = generate_discrete_opportunity(8, 1e6, 3, 0);
  const auto cond = opp.joint.conditional_utility();
  for (std::size_t m = 0; m < 8; ++m) CHECK(cond[m] == doctest::Approx(m).epsilon(1e-4));
}

TEST_CASE("discrete generator: opportunity streams are stable when N grows") {
  const auto a = generate_discrete_landscape(5, 10, 1.0, 2);
  const auto b = generate_discrete_landscape(5, 30, 1.0, 2);
  for (std::size_t k = 0; k < 10; ++k) {
    CHECK(a.opportunities[k].probs == b.opportunities[k].probs);
    CHECK(a.win_matrices[k] == b.win_matrices[k]);
  }
}

TEST_CASE("exponential generator: beta mean of p and conditional mean of lambda") {
  const auto l = generate_exponential_landscape(100000, 0.0, 0.0, 1);
  oracle::MeanSe p, scaled;
  for (const auto& o : l.opportunities) {
    p.add(o.p);
    scaled.add(o.lambda * o.p);  // E[lambda p | p] = 1 under the shape/scale reading
    CHECK(o.lambda1 == o.lambda);
  }
  CHECK(std::abs(p.mean() - 2.0 / 1002.0) <= 3.0 * p.se());
  CHECK(std::abs(scaled.mean() - 1.0) <= 3.0 * scaled.se());
}

TEST_CASE("exponential generator: shape/rate reading gives lambda with mean p") {
  const auto l = generate_exponential_landscape(50000, 0.0, 0.0, 1, GammaReading::kShapeRate);
  oracle::MeanSe ratio;
  for (const auto& o : l.opportunities) ratio.add(o.lambda / o.p);
  CHECK(std::abs(ratio.mean() - 1.0) <= 3.0 * ratio.se());
}

TEST_CASE("exponential generator: log delta has the requested moments") {
  const auto l = generate_exponential_landscape(50000, 0.4, 0.7, 3);
  std::vector<double> logs;
  oracle::MeanSe m;
  for (const auto& o : l.opportunities) {
    logs.push_back(std::log(o.lambda / o.lambda1));
    m.add(logs.back());
  }
  CHECK(std::abs(m.mean() - 0.4) <= 3.0 * m.se());
  const auto v = oracle::variance_with_se(logs);
  CHECK(std::abs(v.variance - 0.49) <= 3.0 * v.se);
}

TEST_CASE("config validation") {
  ExperimentConfig c;
  c.seeds.clear();
  CHECK_THROWS_AS(c.validate(), ConfigError);
  ExperimentConfig d;
  d.mu_values = {-1.0};
  CHECK_THROWS_AS(d.validate(), ConfigError);
}

TEST_CASE("profit experiment: small grid rows, ordering and dominance") {
  ExperimentConfig c;
  c.kind = ExperimentKind::kProfitRatio;
  c.seeds = {1, 2};
  c.N = 300;
  c.mu_values = {0.01, 1.0, 3.0};
  c.alpha_values = {0.0, 2.0};
  const auto rows = run_profit_ratio_experiment(c);
  REQUIRE(rows.size() == 12);
  CHECK(rows[0].mu == 0.01);
  CHECK(rows[0].alpha_dep == 0.0);
  CHECK(rows[0].seed == 1);
  CHECK(rows[1].seed == 2);
  CHECK(rows[2].alpha_dep == 2.0);
  CHECK(rows[4].mu == 1.0);
  for (const auto& r : rows) {
    CHECK(r.dominance_violations == 0);
    CHECK(r.profit_dep >= r.profit_indep - 1e-9);
    if (!r.flagged) CHECK(r.ratio >= 1.0);
  }
  // jobs do not change the result
  c.jobs = 3;
  const auto again = run_profit_ratio_experiment(c);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(again[i].profit_dep == rows[i].profit_dep);
    CHECK(again[i].profit_indep == rows[i].profit_indep);
  }
}

TEST_CASE("profit experiment: csv round trip is lossless") {
  ExperimentConfig c;
  c.kind = ExperimentKind::kProfitRatio;
  c.N = 50;
  c.mu_values = {0.1, 100.0};
  c.alpha_values = {1.0};
  const auto rows = run_profit_ratio_experiment(c);
  std::stringstream ss;
  write_profit_csv(ss, rows);
  CHECK(ss.str().rfind("mu,alpha_dep,seed,profit_dep,profit_indep,ratio\n", 0) == 0);
  const auto back = read_profit_csv(ss);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].mu == rows[i].mu);
    CHECK(back[i].seed == rows[i].seed);
    CHECK(back[i].profit_dep == rows[i].profit_dep);
    CHECK(back[i].profit_indep == rows[i].profit_indep);
    CHECK(back[i].ratio == rows[i].ratio);
  }
  std::stringstream flags;
  write_profit_flags_csv(flags, rows);
  CHECK(flags.str().rfind("row,reason\n", 0) == 0);
}

TEST_CASE("conversion experiment: zero dependency gives ratio exactly one") {
  ExperimentConfig c;
  c.kind = ExperimentKind::kConversionRatio;
  c.exp_N = 1000;
  c.budgets = {1.0, 4.0};
  c.logdelta_means = {0.0, 0.5};
  c.logdelta_sds = {0.0, 0.5};
  const auto rows = run_conversion_ratio_experiment(c);
  REQUIRE(rows.size() == 8);
  CHECK(rows[0].budget == 1.0);
  CHECK(rows[4].budget == 4.0);
  for (const auto& r : rows) {
    CHECK_FALSE(r.flagged());
    CHECK(r.ratio >= 1.0 - 1e-9);
    if (r.logdelta_mean == 0.0 && r.logdelta_sd == 0.0) CHECK(r.ratio == 1.0);
  }
  std::stringstream ss;
  write_conversion_csv(ss, rows);
  CHECK(ss.str().rfind("budget,logdelta_mean,logdelta_sd,seed,conv_dep,conv_indep,ratio\n", 0) ==
        0);
  const auto back = read_conversion_csv(ss);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(back[i].ratio == rows[i].ratio);
}

TEST_CASE("poisson check: exact poisson users match the reference at every granularity") {
  ExperimentConfig c;
  c.kind = ExperimentKind::kPoissonCheck;
  c.poisson.strata = 150;
  c.poisson.replicates = 30;
  c.poisson.users_min = 100;
  c.poisson.users_max = 200;
  c.poisson.min_gap = 0.0;
  c.poisson.cluster_excess = 0.0;
  const auto result = run_poisson_check_experiment(c);
  REQUIRE(result.summaries.size() == 3);
  for (const auto& s : result.summaries) {
    CAPTURE(s.granularity);
    CHECK(std::abs(s.mean_statistic - s.mean_reference) <= 3.0 * s.se_difference);
  }
}

TEST_CASE("spearman correlation") {
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman({1, 2, 2, 3}, {1, 2, 2, 3}) == doctest::Approx(1.0));
  CHECK(spearman({1, 1, 1}, {1, 2, 3}) == 0.0);
}

TEST_CASE("format_double round trips") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.678901234567}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(std::nan("")) == "nan");
}
