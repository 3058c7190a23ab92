"""特征值阶梯、移位截断与zeta尾部测试"""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from cosmokg.common import CutoffTooLarge, EmptySpectrum, DivergentSeries
from cosmokg.potential import CouplingSpec
from cosmokg.spectrum import (
    SphereSd, FlatTorusTd, manifold_from_dict, build_ladder, shift_and_cut, zeta_partial,
    zeta_tail_bound, weyl_constant, l_of_d,
)

TWO_PI = 2.0 * math.pi


def test_sphere_ladder():
    spectrum = build_ladder(SphereSd(3), 24.0)
    assert spectrum.ladder == [(0.0, 1), (3.0, 4), (8.0, 9), (15.0, 16), (24.0, 25)]
    assert spectrum.R_gamma == 6.0


def test_sphere_radius_scales_eigenvalues():
    spectrum = build_ladder(SphereSd(4, radius=2.0), 10.0)
    assert spectrum.eigenvalues[1] == pytest.approx(4.0 / 4.0)
    assert spectrum.multiplicities[1] == 5


def test_torus_multiplicities():
    spectrum = build_ladder(FlatTorusTd([TWO_PI] * 3), 9.0)
    ladder = dict((round(lam, 12), mult) for lam, mult in spectrum.ladder)
    assert ladder[0.0] == 1
    assert ladder[1.0] == 6
    assert ladder[2.0] == 12
    assert ladder[3.0] == 8
    assert ladder[9.0] == 30
    # 7 不能写成三个平方和
    assert 7.0 not in ladder


def test_torus_threads_do_not_change_ladder():
    manifold = FlatTorusTd([TWO_PI, TWO_PI, 3.0])
    assert build_ladder(manifold, 60.0, threads=4).ladder == build_ladder(manifold, 60.0).ladder


def test_incommensurate_torus_is_sorted_and_counts_points():
    manifold = FlatTorusTd([1.0, math.sqrt(2.0), math.pi])
    spectrum = build_ladder(manifold, 200.0)
    lams = spectrum.eigenvalues
    assert all(b > a for a, b in zip(lams[:-1], lams[1:]))
    assert spectrum.ladder[0] == (0.0, 1)
    brute = 0
    for n1 in range(-3, 4):
        for n2 in range(-4, 5):
            for n3 in range(-8, 9):
                value = (TWO_PI * n1) ** 2 + (TWO_PI * n2 / math.sqrt(2.0)) ** 2 + (2.0 * n3) ** 2
                brute += value <= 200.0
    assert spectrum.total_multiplicity == brute


@given(st.floats(min_value=5.0, max_value=60.0), st.floats(min_value=1.0, max_value=40.0))
@settings(max_examples=25, deadline=None)
def test_ladder_is_monotone_in_cutoff(low, extra):
    manifold = FlatTorusTd([TWO_PI] * 3)
    small = build_ladder(manifold, low).ladder
    large = build_ladder(manifold, low + extra).ladder
    assert large[:len(small)] == small


def test_weyl_law():
    spectrum = build_ladder(FlatTorusTd([TWO_PI] * 3), 400.0)
    predicted = 4.0 / 3.0 * math.pi * 400.0 ** 1.5
    assert spectrum.total_multiplicity == pytest.approx(predicted, rel=0.05)


def test_budget_guard():
    with pytest.raises(CutoffTooLarge):
        build_ladder(FlatTorusTd([TWO_PI] * 3), 400.0, budget=1000)
    with pytest.raises(CutoffTooLarge):
        build_ladder(SphereSd(3), 400.0, budget=100)


def test_conformal_shift_on_sphere():
    base = build_ladder(SphereSd(3), 24.0)
    shifted = shift_and_cut(base, Fraction(1, 6), 0.0)
    assert [mu for mu, _ in shifted.mu_ladder] == [1.0, 4.0, 9.0, 16.0, 25.0]
    assert shift_and_cut(base, CouplingSpec.conformal(3), 0.0).mu_ladder == shifted.mu_ladder


def test_infrared_cut_drops_zero_mode():
    base = build_ladder(FlatTorusTd([TWO_PI] * 3), 4.0)
    shifted = shift_and_cut(base, 0.0, 0.5)
    assert shifted.mus[0] == 1.0
    assert shift_and_cut(base, 0.0, -math.inf).mus[0] == 0.0
    with pytest.raises(EmptySpectrum):
        shift_and_cut(base, 0.0, 100.0)


def test_zeta_tail_bounds_remainder():
    base = build_ladder(FlatTorusTd([TWO_PI] * 3), 900.0)
    full = sum(mult * lam ** -3.0 for lam, mult in base.ladder if lam > 0)
    partial, tail = zeta_partial(base, 3.0, n_terms=50)
    assert partial < full
    assert full - partial <= tail
    assert tail == pytest.approx(zeta_tail_bound(base, 3.0, base.eigenvalues[50]))


def test_shifted_tail_bounds_brute_force_remainder():
    base = build_ladder(SphereSd(3), 10000.0)
    spectrum = shift_and_cut(base, -0.5, 0.5)
    start = base.eigenvalues[20] + spectrum.shift
    brute = sum(mult * mu ** -3.0 for mu, mult in spectrum.mu_ladder if mu > start)
    assert 0.0 < brute <= spectrum.zeta_tail_bound(3.0, start)
    assert spectrum.zeta_tail_bound(3.0, start) > zeta_tail_bound(base, 3.0, start)
    unshifted = shift_and_cut(base, 0.0, 0.5)
    assert unshifted.zeta_tail_bound(3.0, start) == zeta_tail_bound(base, 3.0, start)


def test_zeta_diverges_below_half_dimension():
    base = build_ladder(FlatTorusTd([TWO_PI] * 3), 50.0)
    with pytest.raises(DivergentSeries):
        zeta_partial(base, 1.5)
    assert weyl_constant(base) > 0


def test_manifold_from_dict():
    sphere = manifold_from_dict({"kind": "SphereSd", "d": 5, "radius": 3.0})
    assert (sphere.d, sphere.radius) == (5, 3.0)
    torus = manifold_from_dict(FlatTorusTd([1.0, 2.0, 3.0]).to_dict())
    assert torus.lengths == [1.0, 2.0, 3.0]
    with pytest.raises(ValueError):
        manifold_from_dict({"kind": "Klein"})


@pytest.mark.parametrize("d, expected", [(3, 2), (4, 2), (5, 2), (6, 3), (9, 4)])
def test_l_of_d(d, expected):
    assert l_of_d(d) == expected
