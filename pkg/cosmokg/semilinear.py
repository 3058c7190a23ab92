"""
半线性模式模块 (Semilinear Module)

空间均匀的半线性模式：四次振子 φ″ + φ + φ³ = 0，以及次临界指数的换算。
主要功能：
- ν = (d + 3 − p(d − 1))/2 及其取值区间检查
- 闭式解 φ₀·cn(τ√(1+φ₀²), k)，k² = φ₀²/(2(φ₀²+1))
- 周期 T = 4K(k)/√(1+φ₀²) < 2π，与事件检测的数值周期互相校验
- 能量 ½φ′² + ½φ² + ¼φ⁴ 的守恒检查
"""

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.integrate import solve_ivp

from .common import SupercriticalExponent, ToleranceFailure, get_logger
from .specfun import elliptic_K, jacobi_cn

logger = get_logger("semilinear")

DUFFING_RTOL = 1e-12
DUFFING_ATOL = 1e-14


def subcritical_nu(d, p):
    """ν = (d + 3 − p(d − 1))/2，要求 1 ≤ p ≤ d/(d − 2)"""
    if d < 3:
        raise ValueError(f"需要 d ≥ 3: {d}")
    if p < 1:
        raise ValueError(f"需要 p ≥ 1: {p}")
    if p > d / (d - 2):
        raise SupercriticalExponent(f"p = {p} 超过临界指数 d/(d−2) = {d / (d - 2):.6g}")
    nu = 0.5 * (d + 3 - p * (d - 1))
    lower = (d - 3) / (d - 2)
    # 端点处的舍入
    if not lower - 1e-12 <= nu <= 2.0 + 1e-12:
        raise SupercriticalExponent(f"ν = {nu} 不在 [{lower:.6g}, 2] 内")
    return nu


def duffing_energy(phi, dphi):
    return 0.5 * dphi * dphi + 0.5 * phi * phi + 0.25 * phi ** 4


class DuffingState:
    def __init__(self, tau, phi, dphi):
        self.tau = tau
        self.phi = phi
        self.dphi = dphi

    @property
    def energy(self):
        return duffing_energy(self.phi, self.dphi)

    def to_dict(self):
        return {"tau": self.tau, "phi": self.phi, "dphi": self.dphi, "energy": self.energy}


def _modulus(phi0):
    return abs(phi0) / math.sqrt(2.0 * (phi0 * phi0 + 1.0))


def _frequency(phi0):
    return math.sqrt(1.0 + phi0 * phi0)


def duffing_solution(phi0, tau):
    """φ(τ) = φ₀·cn(τ√(1+φ₀²), k)，φ(0) = φ₀，φ′(0) = 0"""
    k = _modulus(phi0)
    omega = _frequency(phi0)
    taus = np.atleast_1d(np.asarray(tau, dtype=float))
    values = np.array([phi0 * jacobi_cn(omega * t, k) for t in taus])
    return values if np.ndim(tau) else float(values[0])


def duffing_period(phi0):
    """T = 4K(k)/√(1+φ₀²)"""
    if phi0 == 0:
        raise ValueError("φ₀ 不能为零")
    return 4.0 * elliptic_K(_modulus(phi0)) / _frequency(phi0)


def period_upper_bound(phi0):
    """2π/√(1+φ₀²/2)·(1 + ln(1 + φ₀²/(φ₀²+2))/π)，恒小于 2π"""
    x = phi0 * phi0
    return 2.0 * math.pi / math.sqrt(1.0 + 0.5 * x) * (1.0 + math.log(1.0 + x / (x + 2.0)) / math.pi)


def _rhs(tau, y):
    return [y[1], -y[0] - y[0] ** 3]


def duffing_trajectory(phi0, taus):
    """从 (φ₀, 0) 直接积分，返回 taus 处的 DuffingState 列表"""
    taus = [float(t) for t in taus]
    sol = solve_ivp(_rhs, (0.0, taus[-1]), [phi0, 0.0], method="DOP853", rtol=DUFFING_RTOL,
                    atol=DUFFING_ATOL, t_eval=taus)
    if sol.status < 0:
        raise ToleranceFailure(f"Duffing积分失败: {sol.message}")
    return [DuffingState(t, sol.y[0, i], sol.y[1, i]) for i, t in enumerate(sol.t)]


def duffing_period_numeric(phi0):
    """相邻两次 φ 下降过零的时间差（稠密输出上求根）"""
    if phi0 == 0:
        raise ValueError("φ₀ 不能为零")
    amplitude = abs(phi0)

    def crossing(tau, y):
        return y[0]
    crossing.direction = -1.0

    sol = solve_ivp(_rhs, (0.0, 3.0 * 2.0 * math.pi), [amplitude, 0.0], method="DOP853",
                    rtol=DUFFING_RTOL, atol=DUFFING_ATOL, events=crossing, dense_output=True)
    times = sol.t_events[0]
    if len(times) < 2:
        raise ToleranceFailure(f"φ₀={phi0}: 检测到的过零点不足两个")
    return float(times[1] - times[0])


def duffing_sweep(phi0s, threads=1):
    """
    周期表：每行 (phi0, period, period_numeric, relative_difference, upper_bound, below_2pi)
    """
    def run(phi0):
        T = duffing_period(phi0)
        T_num = duffing_period_numeric(phi0)
        bound = period_upper_bound(phi0)
        return (float(phi0), T, T_num, abs(T - T_num) / T, bound, bool(T < 2.0 * math.pi))

    phi0s = list(phi0s)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            rows = list(executor.map(run, phi0s))
    else:
        rows = [run(p) for p in phi0s]
    logger.info(f"Duffing周期表: {len(rows)} 行, 全部 T < 2π: {all(r[5] for r in rows)}")
    return rows
