"""Riccati夹逼、修正能量与Riemann函数测试"""

import math

import numpy as np
import pytest

from cosmokg.common import BoundViolated, PreconditionViolated
from cosmokg.dynamics import ExplicitPotential
from cosmokg.asymptotics import (
    RiccatiSign, power_profile, solve_riccati, energy_trajectory, modified_energy_check,
    riemann_functions, verify_riemann_bounds,
)


def test_power_profile_requires_integrable_double_integral():
    assert power_profile(-0.5, 2.0)(4.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        power_profile(-2.0)


def test_constant_potential_gives_tangent():
    c = 1.0
    solution = solve_riccati(power_profile(0.0, c), 1.0, 0.0, 2.0, n_grid=20001, grading=1.0)
    exact = math.sqrt(c) * np.tan(math.sqrt(c) * (solution.tau - solution.tau0))
    assert np.max(np.abs(solution.A - exact)) <= 1e-8
    # ∬V 取目标值 0.9/(4M²)
    assert solution.double_integral == pytest.approx(0.9 / 16.0, rel=1e-9)


def test_negative_sign_gives_hyperbolic_tangent():
    c = 2.0
    solution = solve_riccati(power_profile(0.0, c), 1.0, 0.0, 2.0, RiccatiSign.NEGATIVE,
                             n_grid=20001, grading=1.0)
    exact = -math.sqrt(c) * np.tanh(math.sqrt(c) * (solution.tau - solution.tau0))
    assert np.max(np.abs(solution.A - exact)) <= 1e-8


@pytest.mark.parametrize("gamma", [-0.5, -1.0, -1.5])
@pytest.mark.parametrize("M", [2.0, 10.0])
@pytest.mark.parametrize("sign", RiccatiSign.ALL)
def test_sandwich_bounds(gamma, M, sign):
    solution = solve_riccati(power_profile(gamma), 1.0, 0.0, M, sign)
    assert solution.sandwich_holds()
    assert solution.residual <= 1e-8
    assert solution.tau0 >= 0.0
    bound = 1.0 / (4.0 * M * M) if sign == RiccatiSign.POSITIVE else 0.5 / M
    assert solution.double_integral <= bound


def test_picard_iterates_increase_for_positive_sign():
    solution = solve_riccati(power_profile(-1.0), 1.0, 0.0, 2.0, n_grid=500, keep_iterates=True)
    iterates = solution.iterates
    assert len(iterates) == solution.iterations_used + 1
    for previous, current in zip(iterates[:-1], iterates[1:]):
        assert np.all(current >= previous * (1.0 - 1e-12))


def test_riccati_argument_validation():
    V = power_profile(-0.5)
    with pytest.raises(PreconditionViolated):
        solve_riccati(V, 1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        solve_riccati(V, 1.0, 2.0, 2.0)
    with pytest.raises(ValueError):
        solve_riccati(V, 1.0, 0.0, 2.0, sign="Zero")


def test_modified_energy_bound_along_mode():
    V = power_profile(-0.5)
    riccati = solve_riccati(V, 1.0, 0.0, 2.0, n_grid=1000)
    potential = ExplicitPotential(V, tau_plus=1.0, variable="distance")
    trajectory = energy_trajectory(potential, riccati, 100.0, 1.0, 0.0, 1e-6)
    report = modified_energy_check(trajectory, riccati, 100.0, 0.5, 0.0)
    assert np.max(report.ratio) <= 1.05
    assert report.to_dict()["points"] == len(trajectory.states)


def test_modified_energy_rejects_bad_parameters():
    V = power_profile(-0.5)
    riccati = solve_riccati(V, 1.0, 0.0, 2.0, n_grid=200)
    potential = ExplicitPotential(V, tau_plus=1.0, variable="distance")
    trajectory = energy_trajectory(potential, riccati, 4.0, 1.0, 0.0, 1e-3)
    with pytest.raises(ValueError):
        modified_energy_check(trajectory, riccati, 4.0, 1.5, 0.0)
    with pytest.raises(ValueError):
        modified_energy_check(trajectory, riccati, 0.5, 0.5, 0.0)


def test_energy_starts_at_its_bound():
    V = power_profile(-0.5)
    riccati = solve_riccati(V, 1.0, 0.0, 2.0, n_grid=400)
    potential = ExplicitPotential(V, tau_plus=1.0, variable="distance")
    trajectory = energy_trajectory(potential, riccati, 9.0, 0.0, 1.0, 1e-4)
    report = modified_energy_check(trajectory, riccati, 9.0, 0.0, 0.0)
    assert report.ratio[0] == pytest.approx(1.0)
    assert report.distance[0] == pytest.approx(1.0 - riccati.tau0)


def test_riemann_functions_initial_data_and_wronskian():
    assert riemann_functions(10.0, 1.0, 0.0) == (1.0, 0.0, 0.0, 1.0)
    r0, r1, dr0, dr1 = riemann_functions(10.0, 1.0, 0.9)
    assert r0 * dr1 - r1 * dr0 == pytest.approx(1.0, abs=1e-8)


def test_riemann_requires_q_above_quarter():
    with pytest.raises(PreconditionViolated):
        riemann_functions(10.0, 0.25, 0.5)
    with pytest.raises(PreconditionViolated):
        verify_riemann_bounds(1.0, M=2.0, lambdas=[1.0, 10.0])


def test_riemann_bounds_uniform_in_lambda():
    report = verify_riemann_bounds(1.0, M=2.0, lambdas=[10.0, 30.0, 100.0])
    assert report["C_ratio"] <= 3.0
    assert all(r["wronskian_drift"] <= 1e-8 for r in report["records"])
    assert report["R1_slope"] == pytest.approx(-1.0, abs=0.1)


def test_riemann_ratio_limit_is_enforced():
    with pytest.raises(BoundViolated):
        verify_riemann_bounds(1.0, M=2.0, lambdas=[10.0, 30.0], ratio_limit=1.0)
