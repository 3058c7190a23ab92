"""特殊函数测试：以 scipy.special 为参照"""

import math

import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from cosmokg.common import DomainError
from cosmokg.specfun import bessel_j, bessel_y, bessel_jy, elliptic_K, jacobi_elliptic, jacobi_cn


@pytest.mark.parametrize("order", [0, 1, 2, 0.5, 1.5, 0.25])
@pytest.mark.parametrize("x", [0.1, 1.0, 5.0, 11.9, 12.1, 30.0, 100.0])
def test_bessel_matches_scipy(order, x):
    assert bessel_j(order, x) == pytest.approx(special.jv(order, x), rel=1e-8, abs=1e-10)
    assert bessel_y(order, x) == pytest.approx(special.yv(order, x), rel=1e-8, abs=1e-10)


@given(st.floats(min_value=0.05, max_value=60.0))
@settings(max_examples=50, deadline=None)
def test_bessel_wronskian(x):
    result = bessel_jy(1, x)
    assert result.wronskian() == pytest.approx(2.0 / (math.pi * x), rel=1e-8)


def test_bessel_seam_is_continuous():
    below = bessel_j(1, 12.0 - 1e-9)
    above = bessel_j(1, 12.0 + 1e-9)
    assert abs(below - above) < 1e-9


def test_bessel_domain_errors():
    with pytest.raises(DomainError):
        bessel_j(-1, 1.0)
    with pytest.raises(DomainError):
        bessel_y(0, 0.0)
    assert bessel_j(0, 0.0) == 1.0


@pytest.mark.parametrize("k", [0.0, 0.1, 0.5, 0.9, 0.999])
def test_elliptic_K_matches_scipy(k):
    # scipy 以参数 m = k² 表示
    assert elliptic_K(k) == pytest.approx(special.ellipk(k * k), rel=1e-13)


def test_elliptic_K_rejects_unit_modulus():
    with pytest.raises(DomainError):
        elliptic_K(1.0)


@pytest.mark.parametrize("k", [0.0, 0.3, 0.7071067811865476, 0.95])
@pytest.mark.parametrize("z", [0.0, 0.4, 1.7, -2.3, 9.0])
def test_jacobi_matches_scipy(k, z):
    sn, cn, dn, _ = special.ellipj(z, k * k)
    ours = jacobi_elliptic(z, k)
    assert ours == pytest.approx((sn, cn, dn), abs=1e-12)


@given(st.floats(min_value=-20.0, max_value=20.0), st.floats(min_value=0.0, max_value=0.99))
@settings(max_examples=100, deadline=None)
def test_jacobi_identities(z, k):
    sn, cn, dn = jacobi_elliptic(z, k)
    assert sn * sn + cn * cn == pytest.approx(1.0, abs=1e-12)
    assert dn * dn + k * k * sn * sn == pytest.approx(1.0, abs=1e-12)


def test_cn_period():
    k = 0.6
    K = elliptic_K(k)
    assert jacobi_cn(4.0 * K + 0.3, k) == pytest.approx(jacobi_cn(0.3, k), abs=1e-12)
    assert jacobi_cn(K, k) == pytest.approx(0.0, abs=1e-12)
