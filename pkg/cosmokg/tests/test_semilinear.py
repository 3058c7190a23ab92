"""四次振子与次临界指数测试"""

import math

import numpy as np
import pytest

from cosmokg.common import SupercriticalExponent
from cosmokg.semilinear import (
    subcritical_nu, duffing_energy, duffing_solution, duffing_period, period_upper_bound,
    duffing_trajectory, duffing_period_numeric, duffing_sweep,
)


@pytest.mark.parametrize("d, p, nu", [(3, 1.0, 2.0), (3, 3.0, 0.0), (5, 5.0 / 3.0, 2.0 / 3.0), (4, 1.5, 1.25)])
def test_subcritical_nu(d, p, nu):
    assert subcritical_nu(d, p) == pytest.approx(nu)


def test_supercritical_exponent():
    with pytest.raises(SupercriticalExponent):
        subcritical_nu(3, 3.5)
    with pytest.raises(ValueError):
        subcritical_nu(3, 0.5)


def test_small_amplitude_period_is_harmonic():
    assert duffing_period(1e-4) == pytest.approx(2.0 * math.pi, abs=1e-6)
    with pytest.raises(ValueError):
        duffing_period(0.0)


@pytest.mark.parametrize("phi0", [0.01, 1.0, 10.0, 100.0])
def test_closed_form_period_matches_integration(phi0):
    assert duffing_period_numeric(phi0) == pytest.approx(duffing_period(phi0), rel=1e-8)


def test_cn_solution_matches_trajectory():
    phi0 = 2.0
    taus = np.linspace(0.1, 10.0, 50)
    states = duffing_trajectory(phi0, taus)
    exact = duffing_solution(phi0, taus)
    assert np.max(np.abs(np.array([s.phi for s in states]) - exact)) <= 1e-8
    assert duffing_solution(phi0, 0.0) == pytest.approx(phi0)


def test_energy_is_conserved():
    phi0 = 3.0
    states = duffing_trajectory(phi0, np.linspace(0.5, 30.0, 60))
    initial = duffing_energy(phi0, 0.0)
    drift = max(abs(s.energy - initial) for s in states) / initial
    assert drift <= 1e-9


def test_period_below_harmonic_and_decreasing():
    phi0s = np.geomspace(1e-2, 1e2, 9)
    rows = duffing_sweep(phi0s)
    periods = [row[1] for row in rows]
    assert all(row[5] for row in rows)
    assert all(b < a for a, b in zip(periods[:-1], periods[1:]))
    assert all(row[1] <= row[4] < 2.0 * math.pi for row in rows)
    assert duffing_sweep(phi0s, threads=3) == rows


def test_upper_bound_tends_to_harmonic_period():
    assert period_upper_bound(1e-6) == pytest.approx(2.0 * math.pi, rel=1e-9)
