"""
Liouville-Green近似模块 (WKB Module)

实现两种Liouville-Green近似并与直接积分比较误差：
主要功能：
- Olver级数：A₀ = 1，A_{k+1} = −½A′_k − ½∫₀^τ V·A_k，w = e^{i√μτ}Σ A_k/(i√μ)^k
- 相位积分形式：w = 2^{−1/2}(μ+V)^{−1/4}exp(i∫₀^τ√(μ+V))，误差预算为Olver全变差积分
- 势剖面：常数、高斯凸起，以及沿共形坐标的 V（按截断幂级数求 τ 导数）
- 误差斜率：|w − ψ| 对 log μ 的拟合

A_k 的各阶导数由导数恒等式逐点给出，积分项用带端点导数修正的梯形公式（四阶）累积。
"""

import math

import numpy as np
from numpy.polynomial import hermite
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.interpolate import CubicHermiteSpline

from .common import SolverSettings, InsufficientSmoothness, PreconditionViolated, get_logger
from .cosmology import build_chart
from .dynamics import ExplicitPotential, ModeState, sample_mode
from .utils import loglog_slope

logger = get_logger("wkb")

# 模型闭式给出的 t 导数最高阶
MAX_SCALE_DERIVATIVE = 4


class ConstantProfile:
    """V ≡ c"""

    def __init__(self, value):
        self.c = float(value)

    def derivatives(self, tau, order):
        return [self.c] + [0.0] * order

    def value(self, tau):
        return self.c

    def to_dict(self):
        return {"profile": "constant", "value": self.c}


class GaussianBump:
    """V = amplitude·exp(−((τ − center)/width)²)，导数由Hermite多项式给出"""

    def __init__(self, amplitude=1.0, width=1.0, center=0.0):
        if width <= 0:
            raise ValueError(f"宽度必须为正: {width}")
        self.amplitude = float(amplitude)
        self.width = float(width)
        self.center = float(center)

    def derivatives(self, tau, order):
        x = (tau - self.center) / self.width
        base = self.amplitude * math.exp(-x * x)
        values = []
        for n in range(order + 1):
            coefficients = [0.0] * n + [1.0]
            values.append((-1) ** n * hermite.hermval(x, coefficients) * base / self.width ** n)
        return values

    def value(self, tau):
        x = (tau - self.center) / self.width
        return self.amplitude * math.exp(-x * x)

    def to_dict(self):
        return {"profile": "gaussian", "amplitude": self.amplitude, "width": self.width,
                "center": self.center}


def _series_mul(a, b, n):
    return np.convolve(a, b)[:n]


def _series_div(a, b, n):
    c = np.zeros(n)
    for k in range(n):
        c[k] = (a[k] - np.dot(b[1:k + 1], c[k - 1::-1][:k])) / b[0]
    return c


def _series_derivative(a):
    return np.arange(1, len(a)) * a[1:]


class ChartProfile:
    """
    沿共形坐标的 V(τ) 及其 τ 导数

    d/dτ = a·d/dt 作用在 t 的截断Taylor级数上得到 α 的各阶导数，
    再以幂级数运算组合出 V = m²α² + (ξ − ξ_c)Q。非共形耦合需要比共形多两阶尺度因子导数。
    """

    def __init__(self, chart, coupling, order):
        needed = order if coupling.is_conformal else order + 2
        if needed > MAX_SCALE_DERIVATIVE:
            raise InsufficientSmoothness(
                f"{order} 阶 V 导数需要 {needed} 阶尺度因子导数，模型只提供 {MAX_SCALE_DERIVATIVE} 阶")
        self.chart = chart
        self.coupling = coupling
        self.order = order
        self.needed = needed

    def _alpha_series(self, tau):
        side, s = self.chart.locate(tau)
        values = self.chart.model.evaluate(s, side, self.needed)
        a = np.array([v / math.factorial(k) for k, v in enumerate(values)])
        g = a.copy()
        alpha = [g[0]]
        for _ in range(self.needed):
            g = _series_mul(a, _series_derivative(g), len(g) - 1)
            alpha.append(g[0])
        return np.array([v / math.factorial(k) for k, v in enumerate(alpha)])

    def derivatives(self, tau, order):
        if order > self.order:
            raise InsufficientSmoothness(f"请求 {order} 阶导数，剖面只构造到 {self.order} 阶")
        alpha = self._alpha_series(tau)
        n = order + 1
        d = self.coupling.d
        series = self.coupling.m ** 2 * _series_mul(alpha, alpha, n)
        offset = float(self.coupling.offset)
        if offset != 0.0:
            d1 = _series_derivative(alpha)
            d2 = _series_derivative(d1)
            ratio1 = _series_div(d1, alpha, n)
            ratio2 = _series_div(d2, alpha, n)
            q = d * (d - 3) * _series_mul(ratio1, ratio1, n) + 2 * d * ratio2
            series = series + offset * q
        return [float(series[k] * math.factorial(k)) for k in range(n)]

    def value(self, tau):
        return self.derivatives(tau, 0)[0]

    def to_dict(self):
        return {"profile": "chart", "model": self.chart.model.to_dict(),
                "coupling": self.coupling.to_dict(), "order": self.order}


def chart_profile(model, coupling, order):
    return ChartProfile(build_chart(model), coupling, order)


def _grid(span, origin, n_grid):
    tau_a, tau_b = span
    if not tau_a <= origin <= tau_b:
        raise ValueError(f"原点 {origin} 不在区间 [{tau_a}, {tau_b}] 内")
    step = (tau_b - tau_a) / (n_grid - 1)
    left = max(int(round((origin - tau_a) / step)), 1) + 1 if origin > tau_a else 1
    right = max(int(round((tau_b - origin) / step)), 1) + 1 if tau_b > origin else 1
    grid = np.concatenate([np.linspace(tau_a, origin, left), np.linspace(origin, tau_b, right)[1:]])
    return grid, left - 1


def _cumulative_hermite(f, df, grid, origin_index):
    """∫_{origin}^{τ_i} f，区间上用 h/2(f_a + f_b) + h²/12(f′_a − f′_b)"""
    h = np.diff(grid)
    pieces = 0.5 * h * (f[:-1] + f[1:]) + h * h / 12.0 * (df[:-1] - df[1:])
    total = np.concatenate([[0.0], np.cumsum(pieces)])
    return total - total[origin_index]


def _leibniz(Vd, Ad, m):
    """(V·A)^{(m)}"""
    return sum(math.comb(m, i) * Vd[i] * Ad[m - i] for i in range(m + 1))


class OlverSeries:
    """Olver级数 A_k 在网格上的表；tables[k][j] 为 A_k 的 j 阶导数"""

    def __init__(self, profile, order, origin, grid, V_tables, tables, A_prime_next):
        self.profile = profile
        self.order = order
        self.origin = origin
        self.grid = grid
        self.V_tables = V_tables
        self.tables = tables
        self.A_prime_next = A_prime_next
        self._splines = {}

    @property
    def A_prime_l1(self):
        """∫|A′_{l+1}|"""
        return float(trapezoid(np.abs(self.A_prime_next), self.grid))

    def spline(self, k):
        if k not in self._splines:
            self._splines[k] = CubicHermiteSpline(self.grid, self.tables[k][0], self.tables[k][1])
        return self._splines[k]

    def A(self, k, tau):
        """A_k(τ)，网格外用三次Hermite插值"""
        return self.spline(k)(tau)

    def limits(self):
        """A_k 在区间两端的值（对 L¹ 势近似 ±∞ 处的极限）"""
        return [(float(t[0][0]), float(t[0][-1])) for t in self.tables[:self.order + 1]]

    def to_dict(self):
        return {
            "order": self.order,
            "origin": self.origin,
            "span": [float(self.grid[0]), float(self.grid[-1])],
            "points": len(self.grid),
            "A_prime_l1": self.A_prime_l1,
            "limits": self.limits(),
        }


def build_olver_series(profile, order, span=(-8.0, 8.0), origin=0.0, n_grid=4001):
    """
    在 span 上制表 A_0, …, A_order 及 A′_{order+1}

    需要 V 的 0..order 阶导数。
    """
    if order < 1:
        raise ValueError(f"阶数至少为1: {order}")
    grid, origin_index = _grid(span, origin, n_grid)
    samples = [profile.derivatives(float(t), order) for t in grid]
    Vd = [np.array([row[j] for row in samples]) for j in range(order + 1)]

    depth = order + 2
    tables = [[np.ones_like(grid)] + [np.zeros_like(grid) for _ in range(depth)]]
    for k in range(order):
        current = tables[k]
        f = Vd[0] * current[0]
        df = _leibniz(Vd, current, 1)
        integral = _cumulative_hermite(f, df, grid, origin_index)
        nxt = [-0.5 * current[1] - 0.5 * integral]
        for j in range(1, len(current) - 1):
            nxt.append(-0.5 * current[j + 1] - 0.5 * _leibniz(Vd, current, j - 1))
        tables.append(nxt)
    last = tables[order]
    A_prime_next = -0.5 * last[2] - 0.5 * Vd[0] * last[0]
    series = OlverSeries(profile, order, origin, grid, Vd, tables, A_prime_next)
    logger.debug(f"Olver级数: 阶数 {order}, ∫|A′_{order + 1}| = {series.A_prime_l1:.6e}")
    return series


def _olver_terms(series, mu, tau=None):
    """(S, S′, S″)，S = Σ_{k≤l} A_k/(i√μ)^k；tau 为 None 时取网格值"""
    factor = 1.0 / (1j * math.sqrt(mu))
    sums = [0j, 0j, 0j]
    for k in range(series.order + 1):
        weight = factor ** k
        for j in range(3):
            if tau is None:
                value = series.tables[k][j]
            else:
                value = series.A(k, tau) if j == 0 else series.spline(k)(tau, j)
            sums[j] = sums[j] + weight * value
    return sums


def wkb_solution(series, mu, tau):
    """w ≈ e^{i√μτ}Σ_{k≤l} A_k(τ)/(i√μ)^k"""
    S, _, _ = _olver_terms(series, mu, tau)
    return np.exp(1j * math.sqrt(mu) * np.asarray(tau)) * S


def wkb_derivative(series, mu, tau):
    """∂_τ w = e^{i√μτ}(i√μ·S + S′)"""
    sigma = math.sqrt(mu)
    S, dS, _ = _olver_terms(series, mu, tau)
    return np.exp(1j * sigma * np.asarray(tau)) * (1j * sigma * S + dS)


def olver_residual(series, mu):
    """sup|w″ + (μ + V)w|，等于 2μ^{−l/2}sup|A′_{l+1}|（舍入误差内）"""
    sigma = math.sqrt(mu)
    S, dS, ddS = _olver_terms(series, mu)
    return float(np.max(np.abs(ddS + 2j * sigma * dS + series.V_tables[0] * S)))


class PhaseIntegralForm:
    """相位积分形式的Liouville-Green解及其Olver误差预算"""

    def __init__(self, profile, mu, span=(-8.0, 8.0), origin=0.0, n_grid=4001):
        grid, origin_index = _grid(span, origin, n_grid)
        samples = [profile.derivatives(float(t), 2) for t in grid]
        V, dV, ddV = (np.array([row[j] for row in samples]) for j in range(3))
        u = mu + V
        if np.min(u) < 1.0:
            raise PreconditionViolated(f"μ + V 的最小值 {np.min(u):.6g} < 1")
        self.profile = profile
        self.mu = float(mu)
        self.grid = grid
        self.origin = origin
        self.V = V
        self.dV = dV
        self.omega = np.sqrt(u)
        self.phase = _cumulative_hermite(self.omega, 0.5 * dV / self.omega, grid, origin_index)
        self.amplitude = u ** -0.25
        f = self.amplitude
        ddf = 5.0 / 16.0 * u ** -2.25 * dV * dV - 0.25 * u ** -1.25 * ddV
        self.control = np.abs(f * ddf)
        self.variation = cumulative_trapezoid(self.control, grid, initial=0.0)
        self._phase_spline = CubicHermiteSpline(grid, self.phase, self.omega)

    @property
    def error_budget(self):
        """∫(μ+V)^{−1/4}|d²/dτ²(μ+V)^{−1/4}| 全区间"""
        return float(self.variation[-1])

    def bound_from_start(self):
        """从区间左端起算的 exp(变差) − 1"""
        return np.expm1(self.variation)

    def values(self):
        w = 2.0 ** -0.5 * self.amplitude * np.exp(1j * self.phase)
        dw = w * (1j * self.omega - 0.25 * self.dV / self.omega ** 2)
        return w, dw

    def __call__(self, tau):
        u = self.mu + self.profile.value(tau)
        return 2.0 ** -0.5 * u ** -0.25 * np.exp(1j * self._phase_spline(tau))

    def to_dict(self):
        return {"mu": self.mu, "span": [float(self.grid[0]), float(self.grid[-1])],
                "error_budget": self.error_budget}


def phase_integral_solution(profile, mu, tau, span=(-8.0, 8.0), origin=0.0):
    """w = 2^{−1/2}(μ+V)^{−1/4}exp(i∫₀^τ√(μ+V))"""
    return complex(PhaseIntegralForm(profile, mu, span, origin)(tau))


def _exact_settings(settings):
    return settings or SolverSettings(rtol=1e-12, atol=1e-14, method="DOP853")


def _exact_along(profile, mu, grid, psi0, dpsi0, stride, settings):
    pot = ExplicitPotential(profile.value, variable="tau", name="wkb")
    indices = list(range(stride, len(grid), stride))
    if indices[-1] != len(grid) - 1:
        indices.append(len(grid) - 1)
    start = ModeState(mu, float(grid[0]), psi0, dpsi0)
    trajectory = sample_mode(pot, mu, start, [float(grid[i]) for i in indices], settings)
    return np.array(indices), trajectory.psi


def olver_error(series, mu, settings=None, stride=20):
    """以 w 在左端的数据为初值直接积分，返回 sup|w − ψ|"""
    settings = _exact_settings(settings)
    grid = series.grid
    psi0 = complex(wkb_solution(series, mu, grid[0]))
    dpsi0 = complex(wkb_derivative(series, mu, grid[0]))
    indices, psi = _exact_along(series.profile, mu, grid, psi0, dpsi0, stride, settings)
    S, _, _ = _olver_terms(series, mu)
    w = np.exp(1j * math.sqrt(mu) * grid) * S
    return float(np.max(np.abs(w[indices] - psi)))


def phase_error(form, settings=None, stride=20):
    """返回 (sup|ψ/w − 1|, 各采样点误差是否不超过 exp(变差) − 1)"""
    settings = _exact_settings(settings)
    w, dw = form.values()
    indices, psi = _exact_along(form.profile, form.mu, form.grid, w[0], dw[0], stride, settings)
    epsilon = np.abs(psi / w[indices] - 1.0)
    within = bool(np.all(epsilon <= form.bound_from_start()[indices] + 1e-10))
    return float(np.max(epsilon)), within


def form_difference(series, form):
    """两种形式在网格上的相对差，相位形式按 √2μ^{1/4} 归一"""
    S, _, _ = _olver_terms(series, form.mu)
    olver = np.exp(1j * math.sqrt(form.mu) * series.grid) * S
    w, _ = form.values()
    scaled = math.sqrt(2.0) * form.mu ** 0.25 * w
    return float(np.max(np.abs(olver - scaled) / np.abs(olver)))


def compare_wkb(profile, order, mus, span=(-8.0, 8.0), settings=None, stride=20):
    """
    在一组 μ 上比较两种形式与直接积分，返回逐 μ 的行与拟合斜率

    行: (mu, olver_error, phase_error, phase_budget, phase_within_bound, form_difference)
    """
    series = build_olver_series(profile, order, span)
    rows = []
    for mu in sorted(mus):
        form = PhaseIntegralForm(profile, mu, span)
        olv = olver_error(series, mu, settings, stride)
        err, within = phase_error(form, settings, stride)
        rows.append((float(mu), olv, err, form.error_budget, within, form_difference(series, form)))
        logger.debug(f"μ={mu:g}: Olver误差 {olv:.3e}, 相位形式误差 {err:.3e}")
    mu_values = [r[0] for r in rows]
    olver_slope, _ = loglog_slope(mu_values, [r[1] for r in rows])
    phase_slope, _ = loglog_slope(mu_values, [r[2] for r in rows])
    logger.info(f"WKB误差斜率: Olver {olver_slope:.3f}（预期 ≤ {-(order + 1) / 2:.1f}），"
                f"相位形式 {phase_slope:.3f}")
    return {"order": order, "rows": rows, "olver_slope": olver_slope, "phase_slope": phase_slope,
            "A_prime_l1": series.A_prime_l1, "profile": profile.to_dict()}
