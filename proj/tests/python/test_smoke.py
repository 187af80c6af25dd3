"""Smoke tests for the python bindings: import, core primitives, one design
solve per engine, and reproducibility of the Monte Carlo path."""

import math

import pytest

import mgst

M = [[40.0, 10.0], [10.0, 40.0]]
DESIGN = dict(
    endpoints=2,
    analyses=2,
    alpha=0.025,
    beta=0.1,
    theta0=[0.0, 0.0],
    thetaA=[1.625, 1.625],
    nuisance=M,
)


def test_normal_primitives():
    assert mgst.norm_cdf(0.0) == pytest.approx(0.5)
    assert mgst.norm_quantile(0.975) == pytest.approx(1.959963985, abs=1e-9)
    assert mgst.mvn_density([0.0, 0.0], [0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]]) == pytest.approx(
        1.0 / (2.0 * math.pi)
    )
    assert mgst.information([[0.4, 0.1], [0.1, 0.4]]) == pytest.approx(2.581988897, abs=1e-9)


def test_conditional_law_sequential_model():
    law = mgst.conditional_law(
        [0.0, 0.0],
        [[m / 23.0 for m in row] for row in M],
        [[m / 46.0 for m in row] for row in M],
        [1.0, 1.0],
    )
    assert law["mean"] == pytest.approx([0.5, 0.5])
    assert law["cov"][0][0] == pytest.approx(40.0 / 92.0)


def test_statistics():
    product = mgst.signed_product_statistic()
    assert product.evaluate([2.0, 3.0]) == 6.0
    assert product.evaluate([-2.0, -3.0]) == -6.0
    assert product.last_coord_roots([-1.0], -2.0) == pytest.approx([-2.0, 2.0])
    linear = mgst.linear_statistic([1.0, 1.0])
    assert linear.gradient([4.0, -7.0]) == [1.0, 1.0]


def test_stage_targets_power_family():
    targets = mgst.stage_targets(analyses=5, alpha=0.025, beta=0.1)
    assert targets["psi"] == pytest.approx([0.001, 0.003, 0.005, 0.007, 0.009])
    assert targets["xi"] == pytest.approx([0.004, 0.012, 0.02, 0.028, 0.036])


def test_region_semantics():
    bounds = {"a": [1.0], "b": [2.0]}
    assert mgst.region_of(bounds, 1, 1.5) == "continue"
    assert mgst.region_of(bounds, 1, 2.0) == "reject"
    assert mgst.region_of(bounds, 1, 0.5) == "accept"


def test_fixed_design_matches_the_normal_quantile():
    result = mgst.solve_design(
        statistic=mgst.linear_statistic([1.0, 1.0]),
        sample_sizes=[100.0],
        gridsize=10,
        **{**DESIGN, "analyses": 1},
    )
    assert result["b"][0] == pytest.approx(1.95996, abs=5e-4)
    assert result["realized_psi"][0] == pytest.approx(0.025, abs=1e-5)


def test_group_sequential_engines_agree_for_linear():
    kwargs = dict(
        statistic=mgst.linear_statistic([1.0, 1.0]),
        sample_sizes=[22.0, 44.0],
        **DESIGN,
    )
    simpson = mgst.solve_design(engine="simpson", gridsize=8, **kwargs)
    delta = mgst.solve_design(engine="delta", gridsize=32, **kwargs)
    for key in ("a", "b"):
        for s, d in zip(simpson[key], delta[key]):
            assert s == pytest.approx(d, abs=2e-3)


def test_monte_carlo_solver_is_reproducible():
    kwargs = dict(
        statistic=mgst.signed_product_statistic(),
        sample_sizes=[23.0, 46.0],
        engine="monte-carlo",
        replicates=50000,
        seed=20240808,
        **DESIGN,
    )
    first = mgst.solve_design(**kwargs)
    second = mgst.solve_design(**kwargs)
    assert first["b"] == second["b"]
    assert first["a"] == second["a"]


def test_evaluate_design_round_trip():
    solved = mgst.solve_design(
        statistic=mgst.signed_product_statistic(),
        sample_sizes=[23.0, 46.0],
        gridsize=4,
        **DESIGN,
    )
    realized = mgst.evaluate_design(
        statistic=mgst.signed_product_statistic(),
        sample_sizes=[23.0, 46.0],
        boundaries={"a": solved["a"], "b": solved["b"]},
        theta=[0.0, 0.0],
        gridsize=4,
        **DESIGN,
    )
    assert realized["reject"] == pytest.approx(solved["realized_psi"], abs=1e-10)


def test_sample_size_pipeline():
    result = mgst.sample_size(
        statistic=mgst.signed_product_statistic(),
        gridsize_fixed=16,
        gridsize_delta=64,
        **{**DESIGN, "analyses": 5},
    )
    assert result["n_fixed"] == 103
    assert result["group_size"] == 23
    assert result["ratio"] == pytest.approx(1.1003, abs=2e-3)


def test_config_errors_surface_as_exceptions():
    with pytest.raises(mgst.ConfigError):
        mgst.linear_statistic([1.0, 0.0])
    with pytest.raises(Exception):
        mgst.solve_design(
            statistic=mgst.linear_statistic([1.0, 1.0]),
            sample_sizes=[44.0, 22.0],  # not increasing
            **DESIGN,
        )
