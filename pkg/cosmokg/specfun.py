"""
特殊函数模块 (Special Functions Module)

该模块自包含地实现各数值预言机所需的特殊函数，不依赖外部特殊函数库。
主要功能：
- 实阶Bessel函数 J_ν、Y_ν 及其导数（小宗量幂级数，大宗量Hankel渐近展开）
- 第一类完全椭圆积分 K(k)（算术-几何平均）
- Jacobi椭圆函数 sn、cn、dn（下降Landen/AGM相位递推）

整数阶 Y_n 使用含对数项的极限形式级数，非整数阶使用连接公式。
"""

import math

import numpy as np

from .common import BESSEL_X_SWITCH, DomainError

EULER_GAMMA = 0.57721566490153286061
_SERIES_TERMS = 200


class BesselEval:
    """某一阶数与宗量处的 J、Y 及其导数"""

    def __init__(self, order, argument, J, Y, dJ, dY):
        self.order = order
        self.argument = argument
        self.J = J
        self.Y = Y
        self.dJ = dJ
        self.dY = dY

    def wronskian(self):
        """J Y′ − J′ Y，理论值为 2/(πx)"""
        return self.J * self.dY - self.dJ * self.Y

    def to_dict(self):
        return {
            "order": self.order,
            "argument": self.argument,
            "J": self.J,
            "Y": self.Y,
            "dJ": self.dJ,
            "dY": self.dY,
        }


def _is_integer_order(order):
    return float(order).is_integer()


def _use_asymptotic(order, x, x_switch):
    return x > x_switch and x > 2.0 * order * order


def _series_j(order, x):
    """J_ν 的幂级数（ν 可为负的非整数）"""
    half = 0.5 * x
    if order == 0:
        term = 1.0
    else:
        term = half ** order / math.gamma(order + 1)
    total = term
    q = -half * half
    for m in range(1, _SERIES_TERMS):
        term *= q / (m * (m + order))
        total += term
        if abs(term) < 1e-17 * abs(total):
            break
    return total


def _hankel_pq(order, x):
    """Hankel渐近展开的 P、Q 因子，在最小项处截断"""
    mu = 4.0 * order * order
    p_sum = 1.0
    q_sum = 0.0
    term = 1.0
    previous = float("inf")
    for k in range(1, 80):
        term *= (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(term) > previous:
            break
        previous = abs(term)
        # 奇数项进入Q，偶数项进入P，符号按 (−1)^⌊k/2⌋
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2:
            q_sum += sign * term
        else:
            p_sum += sign * term
        if abs(term) < 1e-17:
            break
    return p_sum, q_sum


def _asymptotic_jy(order, x):
    p_sum, q_sum = _hankel_pq(order, x)
    chi = x - (0.5 * order + 0.25) * math.pi
    scale = math.sqrt(2.0 / (math.pi * x))
    j = scale * (p_sum * math.cos(chi) - q_sum * math.sin(chi))
    y = scale * (p_sum * math.sin(chi) + q_sum * math.cos(chi))
    return j, y


def _series_y_integer(n, x):
    """整数阶 Y_n 的极限形式级数"""
    half = 0.5 * x
    finite = 0.0
    for k in range(n):
        finite += math.factorial(n - k - 1) / math.factorial(k) * half ** (2 * k - n)

    # ψ(k+1) = −γ + H_k
    harmonic_k = 0.0
    harmonic_nk = sum(1.0 / j for j in range(1, n + 1))
    term = half ** n / math.factorial(n)
    tail = term * (2.0 * -EULER_GAMMA + harmonic_k + harmonic_nk)
    q = -half * half
    for k in range(1, _SERIES_TERMS):
        term *= q / (k * (k + n))
        harmonic_k += 1.0 / k
        harmonic_nk += 1.0 / (k + n)
        contribution = term * (2.0 * -EULER_GAMMA + harmonic_k + harmonic_nk)
        tail += contribution
        if abs(contribution) < 1e-17 * abs(tail) and abs(term) < 1e-17:
            break

    return (-finite / math.pi
            + 2.0 / math.pi * math.log(half) * _series_j(n, x)
            - tail / math.pi)


def bessel_j(order, x, x_switch=BESSEL_X_SWITCH):
    """第一类Bessel函数 J_ν(x)，ν ≥ 0，x ≥ 0"""
    if order < 0:
        raise DomainError(f"仅支持非负阶数: {order}")
    if x < 0:
        raise DomainError(f"J_ν 仅在 x ≥ 0 上定义: {x}")
    if x == 0:
        return 1.0 if order == 0 else 0.0
    if _use_asymptotic(order, x, x_switch):
        return _asymptotic_jy(order, x)[0]
    return _series_j(order, x)


def bessel_y(order, x, x_switch=BESSEL_X_SWITCH):
    """第二类Bessel函数 Y_ν(x)，ν ≥ 0，x > 0"""
    if order < 0:
        raise DomainError(f"仅支持非负阶数: {order}")
    if x <= 0:
        raise DomainError(f"Y_ν 需要 x > 0: {x}")
    if _use_asymptotic(order, x, x_switch):
        return _asymptotic_jy(order, x)[1]
    if _is_integer_order(order):
        return _series_y_integer(int(order), x)
    # 连接公式
    s, c = math.sin(order * math.pi), math.cos(order * math.pi)
    return (_series_j(order, x) * c - _series_j(-order, x)) / s


def bessel_jy(order, x, x_switch=BESSEL_X_SWITCH):
    """同时计算 J_ν、Y_ν 与导数（J′_ν = (ν/x)J_ν − J_{ν+1}）"""
    if x <= 0:
        raise DomainError(f"bessel_jy 需要 x > 0: {x}")
    j0 = bessel_j(order, x, x_switch)
    j1 = bessel_j(order + 1, x, x_switch)
    y0 = bessel_y(order, x, x_switch)
    y1 = bessel_y(order + 1, x, x_switch)
    return BesselEval(
        order=float(order),
        argument=float(x),
        J=j0,
        Y=y0,
        dJ=order / x * j0 - j1,
        dY=order / x * y0 - y1,
    )


def _agm(a, b):
    while abs(a - b) > 1e-16 * abs(a):
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return a


def elliptic_K(k):
    """第一类完全椭圆积分 K(k) = π / (2·AGM(1, √(1−k²)))"""
    if not 0 <= abs(k) < 1:
        raise DomainError(f"elliptic_K 需要 0 ≤ k < 1: {k}")
    return math.pi / (2.0 * _agm(1.0, math.sqrt((1.0 - k) * (1.0 + k))))


def jacobi_elliptic(z, k):
    """Jacobi椭圆函数 (sn, cn, dn)，下降AGM相位递推"""
    if not 0 <= abs(k) < 1:
        raise DomainError(f"Jacobi椭圆函数需要 0 ≤ k < 1: {k}")
    a = [1.0]
    c = [abs(k)]
    b = math.sqrt((1.0 - k) * (1.0 + k))
    while abs(c[-1]) > 1e-16:
        a_next = 0.5 * (a[-1] + b)
        c.append(0.5 * (a[-1] - b))
        b = math.sqrt(a[-1] * b)
        a.append(a_next)
        if len(a) > 64:
            break
    n = len(a) - 1
    phi = [0.0] * (n + 1)
    phi[n] = 2.0 ** n * a[n] * z
    for i in range(n, 0, -1):
        phi[i - 1] = 0.5 * (phi[i] + math.asin(c[i] / a[i] * math.sin(phi[i])))
    sn = math.sin(phi[0])
    cn = math.cos(phi[0])
    if n == 0:
        dn = 1.0
    else:
        dn = cn / math.cos(phi[1] - phi[0])
    return sn, cn, dn


def jacobi_cn(z, k):
    """Jacobi椭圆函数 cn(z, k)，周期 4K(k)"""
    return jacobi_elliptic(z, k)[1]


bessel_j_vec = np.vectorize(bessel_j, otypes=[float])
bessel_y_vec = np.vectorize(bessel_y, otypes=[float])
