import json
import math
import os
import subprocess

import pytest

import auctionflow as af


def test_fpa_bid_independent_case_matches_closed_relation():
    opp = af.ExpMarketOpportunity(0.002, 500.0, 500.0)
    sol = af.solve_fpa_exponential(opp, 10.0)
    assert sol.converged
    a = sol.bid
    # With lambda1 = lambda the optimality condition reduces to a + expm1(lambda a) / lambda = C p.
    assert a + math.expm1(500.0 * a) / 500.0 == pytest.approx(0.02, rel=1e-10)


def test_spa_bid_is_conditional_value_times_multiplier():
    opp = af.ExpMarketOpportunity(0.002, 500.0, 500.0)
    assert af.solve_spa_exponential(opp, 2.0) == pytest.approx(0.004, rel=1e-12)


def test_discrete_worked_example():
    joint = [[0.4, 0.1], [0.1, 0.4]]
    win = [[1.0, 1.0], [0.0, 1.0]]
    assert af.optimal_action_discrete(joint, win, 0.1) == 1


def test_tv_bound_and_tail_bounds():
    b = af.tv_bound_general([2.0, 0.1, 0.1], [0.0, 0.0, 0.0], 2.0, 0.0, 0.5, 0.1)
    assert b.bound == pytest.approx(2.4181818181818, rel=1e-12)
    assert af.poisson_tail_bound(1.0, 1.0) == pytest.approx(math.exp(-0.5))
    assert af.poisson_tail_bound_chernoff(20.0, 20.0) > af.poisson_tail_bound(20.0, 20.0)


def test_lgcp_closed_forms():
    mean, var, cov = af.lgcp_moments([1.0, 1.0], math.log(4.0), 1.0, 0, 1)
    assert mean == pytest.approx(2.0)
    assert var == pytest.approx(2.0 + 4.0 * 3.0)


def test_poisson_sampler_is_reproducible():
    a = af.sample_homogeneous_poisson(5.0, 0.0, 10.0, 7)
    assert a == af.sample_homogeneous_poisson(5.0, 0.0, 10.0, 7)
    assert all(0.0 <= t < 10.0 for t in a)
    assert a == sorted(a)


def test_tuning_hits_budget():
    opps = af.generate_exponential_landscape(300, 0.5, 0.5, 3)
    res = af.tune_multiplier(opps, 1.0)
    assert res.converged
    assert abs(res.expected_spend - 1.0) <= 1e-3
    assert len(res.bids) == 300


def test_invalid_input_raises():
    with pytest.raises(ValueError):
        af.poisson_tail_bound(-1.0, 1.0)
    with pytest.raises(ValueError):
        af.run_experiment('{"kind": "profit_ratio", "mu_valuez": [1]}')


def test_conversion_experiment_rows():
    cfg = {
        "kind": "conversion_ratio",
        "seeds": [1],
        "budgets": [2.0],
        "logdelta_means": [0.0, 0.5],
        "logdelta_sds": [0.0],
        "exp_N": 300,
    }
    rows = af.run_experiment(json.dumps(cfg))
    assert len(rows) == 2
    assert rows[0]["ratio"] == 1.0
    assert rows[1]["ratio"] >= 1.0 - 1e-9


@pytest.mark.skipif("AUCTIONFLOW_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_solve_matches_binding(tmp_path):
    cfg = tmp_path / "solve.json"
    cfg.write_text(json.dumps({
        "kind": "first_price",
        "opportunity": {"p": 0.002, "lambda": 500.0, "lambda1": 450.0},
        "C": 10.0,
    }))
    out = subprocess.run(
        [os.environ["AUCTIONFLOW_CLI"], "solve", "--config", str(cfg), "--out", str(tmp_path / "o")],
        check=True, capture_output=True, text=True,
    ).stdout
    bid = af.solve_fpa_exponential(af.ExpMarketOpportunity(0.002, 500.0, 450.0), 10.0).bid
    assert f"{float(out):.12g}" == f"{bid:.12g}"
