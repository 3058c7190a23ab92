"""
模式动力学模块 (Mode Dynamics Module)

该模块在共形时间 τ 中积分单模方程 ψ″ + (μ + V(τ))ψ = 0，一直逼近奇点，
并从积分结果中提取渐近数据（φ₀、φ₁）、发散模型、散射数据以及衰减定理的数值检验。
主要功能：
- Liouville变换及其逆：(u₀, u₁) ↔ (φ₀, φ₁)
- 势无关的积分核心 integrate_mode：嵌入式Runge-Kutta (5,4)，靠近有限端点时按几何分段、
  步长不超过到端点距离的一半；自变量取 x = τ − 端点，使 Δ = |x| 精确
- 沿共形坐标的势 ChartPotential（以 u = ln s 为辅助变量，避免每步反演坐标）与显式势 ExplicitPotential
- 极限提取（几何探针 + Richardson外推）、导数发散的对数/幂律模型选择、振荡端点的包络发散率拟合
- 无穷 τ 端与有限 τ 端的 Bogoliubov 系数
- C⁰ Big Crunch / Big Rip 在 q > 1/4 下的衰减定理检验
- 从奇点出发的 Picard 迭代（Volterra形式），用作极限提取的独立预言机

每个模式独立积分，批量积分通过线程池并按模式索引合并结果。
"""

import cmath
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.integrate import solve_ivp, cumulative_trapezoid
from scipy.optimize import minimize_scalar

from .common import (
    DECAY_TOL, SCATTERING_TOL, Side, DivergenceKind, SolverSettings,
    ToleranceFailure, EndpointReached, NoConvergence, ModelSelectionAmbiguous,
    NegativeFrequency, PreconditionViolated, get_logger,
)
from .potential import (
    potential, potential_and_scale, classify, q_coefficient, exact_singular_coefficient,
)
from .utils import aitken_extrapolate, extrapolate_limit, geometric_probes

logger = get_logger("dynamics")

DIVERGENT = "Divergent"


def liouville_forward(u0, u1, a, a_t, d):
    """(u₀, u₁) → (φ₀, φ₁)：φ₀ = a^{(d−1)/2}u₀，φ₁ = ((d−1)/2)ȧa^{(d−1)/2}u₀ + a^{(d+1)/2}u₁"""
    half = 0.5 * (d - 1)
    power = a ** half
    return power * u0, half * a_t * power * u0 + a ** (half + 1.0) * u1


def liouville_inverse(phi0, phi1, a, a_t, d):
    """liouville_forward 的逆（三角形方程组）"""
    half = 0.5 * (d - 1)
    power = a ** half
    u0 = phi0 / power
    u1 = (phi1 - half * a_t * phi0) / a ** (half + 1.0)
    return u0, u1


def wronskian(psi1, dpsi1, psi2, dpsi2):
    """ψ₁ψ₂′ − ψ₂ψ₁′，同一模式的两个解之间为常数"""
    return psi1 * dpsi2 - psi2 * dpsi1


def conserved_charge(psi1, dpsi1, psi2, dpsi2):
    """ψ̄₁ψ₂′ − ψ̄₁′ψ₂；ψ₁ = ψ₂ 时为 2i·Im(ψ̄ψ′)"""
    return np.conj(psi1) * dpsi2 - np.conj(dpsi1) * psi2


class Probe:
    """到 side 端点共形距离为 distance 的点"""

    def __init__(self, side, distance):
        if side not in Side.ALL:
            raise ValueError(f"未知端点: {side}")
        if not distance > 0:
            raise ValueError(f"探针距离必须为正: {distance}")
        self.side = side
        self.distance = float(distance)

    def __repr__(self):
        return f"Probe({self.side}, {self.distance:.3e})"


class ModeState:
    """单个模式在某一 τ 处的状态"""

    def __init__(self, mu, tau, psi, dpsi, side=None, distance=None,
                 aux=None, aux_side=None, v_integral=0.0):
        self.mu = float(mu)
        self.tau = float(tau)
        self.psi = complex(psi)
        self.dpsi = complex(dpsi)
        self.side = side
        self.distance = distance
        self.aux = aux
        self.aux_side = aux_side
        self.v_integral = v_integral

    @property
    def point(self):
        if self.distance is not None and self.side is not None:
            return Probe(self.side, self.distance)
        return self.tau

    def with_data(self, psi, dpsi):
        return ModeState(self.mu, self.tau, psi, dpsi, self.side, self.distance, self.aux, self.aux_side)

    def to_dict(self):
        return {
            "mu": self.mu,
            "tau": self.tau,
            "psi": self.psi,
            "dpsi": self.dpsi,
            "side": self.side,
            "distance": self.distance,
        }


class ModeTrajectory:
    """沿 τ 采样的模式轨迹"""

    def __init__(self, mu, states):
        self.mu = mu
        self.states = list(states)

    @property
    def tau(self):
        return np.array([s.tau for s in self.states])

    @property
    def psi(self):
        return np.array([s.psi for s in self.states])

    @property
    def dpsi(self):
        return np.array([s.dpsi for s in self.states])

    @property
    def distance(self):
        return np.array([np.nan if s.distance is None else s.distance for s in self.states])

    def rows(self):
        """CSV 行 (tau, re_psi, im_psi, re_dpsi, im_dpsi)"""
        return [(s.tau, s.psi.real, s.psi.imag, s.dpsi.real, s.dpsi.imag) for s in self.states]


class _Region:
    """分界点一侧的积分区域；anchor 为有限端点（或分界点）"""

    def __init__(self, side, anchor, finite):
        self.side = side
        self.anchor = anchor
        self.finite = finite

    @property
    def distance_sign(self):
        # 到端点的距离 = distance_sign · x
        return -1.0 if self.side == Side.FUTURE else 1.0

    def x_of(self, potential, point):
        if isinstance(point, Probe) and self.finite and point.side == self.side:
            return self.distance_sign * point.distance
        return _point_tau(potential, point) - self.anchor


class _SplitPotential:
    """τ 区间在 split 处一分为二，每一半以其有限端点为原点积分"""
    has_aux = False
    tau_minus = -math.inf
    tau_plus = math.inf
    split = 0.0

    def endpoint(self, side):
        return self.tau_plus if side == Side.FUTURE else self.tau_minus

    def is_finite(self, side):
        return math.isfinite(self.endpoint(side))

    def region(self, side):
        end = self.endpoint(side)
        if math.isfinite(end):
            return _Region(side, end, True)
        return _Region(side, self.split, False)

    def tau_limit(self, side):
        return self.endpoint(side)


class ChartPotential(_SplitPotential):
    """沿共形坐标的 V(τ)；积分时携带 u = ln s，du/dτ = ∓a/s"""
    has_aux = True

    def __init__(self, chart, coupling):
        self.chart = chart
        self.coupling = coupling
        self.tau_minus = chart.tau_minus
        self.tau_plus = chart.tau_plus
        self.split = 0.0

    def tau_limit(self, side):
        return self.chart.tau_limit(side)

    def value(self, tau):
        return potential(self.chart, self.coupling, tau)

    def value_and_scale(self, side, s):
        return potential_and_scale(self.chart.model, self.coupling, side, s)

    def initial_aux(self, region, x):
        chart_side = self.chart.side(region.side)
        if region.finite:
            distance = abs(x)
            if distance >= chart_side.tau_end:
                return math.log(chart_side.s0)
            return math.log(self.chart.s_at_distance(region.side, distance))
        depth = abs(region.anchor + x)
        if depth == 0.0:
            return math.log(chart_side.s0)
        return math.log(self.chart.s_at_depth(region.side, depth))


class ExplicitPotential(_SplitPotential):
    """
    显式给出的势 V

    variable="tau" 时 func 以 τ 为自变量；variable="distance" 时以 τ₊ − τ 为自变量，
    在端点附近按精确距离求值。
    """

    def __init__(self, func, tau_minus=-math.inf, tau_plus=math.inf, variable="tau", name="explicit"):
        if variable not in ("tau", "distance"):
            raise ValueError(f"未知自变量: {variable}")
        if variable == "distance" and not math.isfinite(tau_plus):
            raise PreconditionViolated("以距离为自变量的势需要有限的 τ₊")
        if not tau_minus < tau_plus:
            raise ValueError("需要 tau_minus < tau_plus")
        self.func = func
        self.tau_minus = float(tau_minus)
        self.tau_plus = float(tau_plus)
        self.variable = variable
        self.name = name
        finite_minus, finite_plus = math.isfinite(self.tau_minus), math.isfinite(self.tau_plus)
        if finite_minus and finite_plus:
            self.split = 0.5 * (self.tau_minus + self.tau_plus)
        elif finite_plus:
            self.split = min(0.0, self.tau_plus - 1.0)
        elif finite_minus:
            self.split = max(0.0, self.tau_minus + 1.0)
        else:
            self.split = 0.0

    def value(self, tau):
        if self.variable == "tau":
            return self.func(tau)
        return self.func(self.tau_plus - tau)

    def value_in(self, region, x):
        if self.variable == "tau":
            return self.func(region.anchor + x)
        return self.func((self.tau_plus - region.anchor) - x)


def _point_tau(potential, point):
    if isinstance(point, Probe):
        end = potential.endpoint(point.side)
        if not math.isfinite(end):
            raise PreconditionViolated(f"{point.side} 端 τ 为无穷，不能用距离探针")
        return end - point.distance if point.side == Side.FUTURE else end + point.distance
    return float(point)


def _side_of(tau, other, split):
    if tau > split:
        return Side.FUTURE
    if tau < split:
        return Side.PAST
    return Side.FUTURE if other > split else Side.PAST


def _check_target(potential, target, settings):
    tau = _point_tau(potential, target)
    for side in Side.ALL:
        end = potential.endpoint(side)
        if math.isfinite(end):
            if isinstance(target, Probe) and target.side == side:
                distance = target.distance
            else:
                distance = end - tau if side == Side.FUTURE else tau - end
            if distance <= settings.endpoint_margin * (1.0 + abs(end)):
                raise EndpointReached(f"目标点距 {side} 端 {distance:.3e}，位于端点禁区内或越过端点")
        else:
            limit = potential.tau_limit(side)
            beyond = tau > limit if side == Side.FUTURE else tau < limit
            if beyond:
                raise EndpointReached(f"目标 τ={tau:.6g} 超出 {side} 端可表示范围 {limit:.6g}")


def _breakpoints(region, x_a, x_b):
    """有限端点附近按因子2几何分段"""
    if not region.finite:
        return [x_a, x_b]
    sign = region.distance_sign
    d_a, d_b = sign * x_a, sign * x_b
    middle = []
    d = d_a
    if d_b < d_a:
        while d / 2.0 > d_b:
            d /= 2.0
            middle.append(d)
    else:
        while d * 2.0 < d_b:
            d *= 2.0
            middle.append(d)
    return [x_a] + [sign * m for m in middle] + [x_b]


def _make_rhs(potential, region, mu, accumulate, direction):
    if potential.has_aux:
        u_rate = -1.0 if region.side == Side.FUTURE else 1.0
        side = region.side

        def rhs(x, y):
            s = math.exp(y[2].real)
            V, a = potential.value_and_scale(side, s)
            terms = [y[1], -(mu + V) * y[0], u_rate * a / s]
            if accumulate:
                terms.append(direction * max(V, 0.0))
            return np.array(terms, dtype=complex)
    else:
        def rhs(x, y):
            V = potential.value_in(region, x)
            terms = [y[1], -(mu + V) * y[0]]
            if accumulate:
                terms.append(direction * max(V, 0.0))
            return np.array(terms, dtype=complex)
    return rhs


def _state_at(region, mu, x, y, potential, accumulate):
    tau = region.anchor + x
    side, distance = (region.side, region.distance_sign * x) if region.finite else (None, None)
    aux = y[2].real if potential.has_aux else None
    v_integral = y[-1].real if accumulate else 0.0
    return ModeState(mu, tau, y[0], y[1], side, distance, aux, region.side, v_integral)


def _integrate(potential, mu, state, target, settings, accumulate=False, samples=()):
    """从 state 积分到 target，途中在 samples（沿积分方向有序）处记录状态"""
    _check_target(potential, target, settings)
    tau_a = _point_tau(potential, state.point)
    tau_b = _point_tau(potential, target)
    if tau_a == tau_b and not samples:
        return [state]
    direction = 1.0 if tau_b >= tau_a else -1.0

    split = potential.split
    side_a = _side_of(tau_a, tau_b, split)
    side_b = _side_of(tau_b, tau_a, split)
    if side_a == side_b:
        legs = [(side_a, state.point, target)]
    else:
        legs = [(side_a, state.point, split), (side_b, split, target)]

    pending = list(samples)
    results = []
    y = [state.psi, state.dpsi]
    v_integral = state.v_integral
    for index, (side, start, end) in enumerate(legs):
        region = potential.region(side)
        x_a = region.x_of(potential, start)
        x_b = region.x_of(potential, end)
        vector = list(y[:2])
        if potential.has_aux:
            if index == 0 and state.aux is not None and state.aux_side == side:
                vector.append(state.aux)
            else:
                vector.append(potential.initial_aux(region, x_a))
        if accumulate:
            vector.append(v_integral)
        y = np.array(vector, dtype=complex)

        # 属于本段的采样点
        leg_samples = []
        while pending:
            tau_s = _point_tau(potential, pending[0])
            if len(legs) == 2 and index == 0 and direction * (tau_s - split) > 0:
                break
            leg_samples.append(region.x_of(potential, pending.pop(0)))

        rhs = _make_rhs(potential, region, mu, accumulate, direction)
        points = _breakpoints(region, x_a, x_b)
        for seg_a, seg_b in zip(points[:-1], points[1:]):
            if seg_a == seg_b:
                continue
            forward = seg_b > seg_a
            inside = []
            while leg_samples and ((seg_a < leg_samples[0] <= seg_b) if forward
                                   else (seg_b <= leg_samples[0] < seg_a)):
                inside.append(leg_samples.pop(0))
            t_eval = inside if inside and inside[-1] == seg_b else inside + [seg_b]
            max_step = 0.5 * min(abs(seg_a), abs(seg_b)) if region.finite else np.inf
            sol = solve_ivp(rhs, (seg_a, seg_b), y, method=settings.method, rtol=settings.rtol,
                            atol=settings.atol, max_step=max_step, t_eval=t_eval)
            if sol.status < 0:
                raise ToleranceFailure(f"积分在 x={seg_a:.6e}→{seg_b:.6e} 失败: {sol.message}")
            if not np.all(np.isfinite(sol.y)):
                raise ToleranceFailure(f"积分在 x={seg_a:.6e}→{seg_b:.6e} 出现非有限值")
            # t_eval 的前 len(inside) 列是采样点
            for k in range(len(inside)):
                results.append(_state_at(region, mu, sol.t[k], sol.y[:, k], potential, accumulate))
            y = sol.y[:, -1]
        if accumulate:
            v_integral = y[-1].real

    final = _state_at(region, mu, x_b, y, potential, accumulate)
    if isinstance(target, Probe):
        final.side, final.distance = target.side, target.distance
    results.append(final)
    return results


def integrate_mode(potential, mu, state, target, settings=None, accumulate=False):
    """
    积分单模方程到 target（τ 值或 Probe）

    accumulate=True 时同时累积 ∫max(V, 0)|dτ|，结果记在 ModeState.v_integral。
    """
    settings = settings or SolverSettings()
    return _integrate(potential, mu, state, target, settings, accumulate)[-1]


def evolve_mode(chart, coupling, mu, state, tau_target, settings=None):
    """沿共形坐标积分模式 μ 到 tau_target"""
    return integrate_mode(ChartPotential(chart, coupling), mu, state, tau_target, settings)


def evolve_modes(potential, states, target, settings=None, threads=1):
    """独立积分多个模式（各自的 state.mu），结果按输入顺序返回"""
    settings = settings or SolverSettings()

    def run(state):
        return integrate_mode(potential, state.mu, state, target, settings)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            return list(executor.map(run, states))
    return [run(state) for state in states]


def sample_mode(potential, mu, state, points, settings=None, accumulate=False):
    """在 points（沿积分方向有序）处采样，返回 ModeTrajectory"""
    settings = settings or SolverSettings()
    points = list(points)
    start_tau = _point_tau(potential, state.point)
    leading = []
    # 与起点重合的采样点直接取起点状态
    while points and _point_tau(potential, points[0]) == start_tau:
        leading.append(state)
        points.pop(0)
    if not points:
        return ModeTrajectory(mu, leading or [state])
    states = _integrate(potential, mu, state, points[-1], settings, accumulate, samples=points[:-1])
    return ModeTrajectory(mu, leading + states)


def bogoliubov_coefficients(psi, dpsi, omega, tau):
    """α = √(ω/2)e^{−iωτ}(ψ + ψ′/(iω))，β = √(ω/2)e^{iωτ}(ψ − ψ′/(iω))"""
    phase = cmath.exp(-1j * omega * tau)
    scale = math.sqrt(0.5 * omega)
    ratio = dpsi / (1j * omega)
    return scale * phase * (psi + ratio), scale / phase * (psi - ratio)


class CauchyData:
    """τ₀ 处按模式展开的Cauchy数据 [(μ, 重数, ψ₀, ψ₁)]"""

    def __init__(self, tau0, coefficients):
        self.tau0 = float(tau0)
        self.coefficients = [(float(mu), int(mult), complex(p0), complex(p1))
                             for mu, mult, p0, p1 in coefficients]

    @classmethod
    def from_spectrum(cls, spectrum, tau0, seed):
        """seed(μ) → (ψ₀, ψ₁)，μ 取自 ShiftedSpectrum 阶梯"""
        return cls(tau0, [(mu, mult) + tuple(seed(mu)) for mu, mult in spectrum.mu_ladder])

    def states(self):
        return [ModeState(mu, self.tau0, p0, p1) for mu, _, p0, p1 in self.coefficients]

    def to_dict(self):
        return {"tau0": self.tau0,
                "coefficients": [{"mu": mu, "mult": mult, "psi0": p0, "dpsi0": p1}
                                 for mu, mult, p0, p1 in self.coefficients]}


class DivergenceModel:
    """
    ∂_τψ 的发散模型：C·ln Δ + B 或 C·Δ^{−p} + B

    frequency 非空时为振荡包络 Δ^{−p}(C·Δ^{iν} + B·Δ^{−iν})，predicted_rate 为理论发散率
    """

    def __init__(self, kind, coefficient=None, rate=None, offset=None, residual_log=None,
                 residual_power=None, weighted=(), weighted_bounded=None, frequency=None,
                 predicted_rate=None):
        self.kind = kind
        self.coefficient = coefficient
        self.rate = rate
        self.offset = offset
        self.residual_log = residual_log
        self.residual_power = residual_power
        self.weighted = list(weighted)
        self.weighted_bounded = weighted_bounded
        self.frequency = frequency
        self.predicted_rate = predicted_rate

    def to_dict(self):
        return {
            "kind": self.kind,
            "coefficient": self.coefficient,
            "rate": self.rate,
            "offset": self.offset,
            "residual_log": self.residual_log,
            "residual_power": self.residual_power,
            "weighted_sup": max(self.weighted) if self.weighted else None,
            "weighted_bounded": self.weighted_bounded,
            "frequency": self.frequency,
            "predicted_rate": self.predicted_rate,
        }


class AsymptoticRecord:
    """单个模式的渐近数据；不存在的极限记为 DIVERGENT"""

    def __init__(self, mu, phi0, phi1, divergence=None, phi0_error=None, phi1_error=None):
        self.mu = mu
        self.phi0 = phi0
        self.phi1 = phi1
        self.divergence = divergence
        self.phi0_error = phi0_error
        self.phi1_error = phi1_error

    @property
    def divergence_model(self):
        return DivergenceKind.NONE if self.divergence is None else self.divergence.kind

    def to_dict(self):
        return {
            "mu": self.mu,
            "phi0": self.phi0,
            "phi1": self.phi1,
            "phi0_error": self.phi0_error,
            "phi1_error": self.phi1_error,
            "divergence_model": self.divergence_model,
            "divergence": None if self.divergence is None else self.divergence.to_dict(),
        }


class AsymptoticData:
    def __init__(self, side, records):
        self.side = side
        self.records = list(records)

    def to_dict(self):
        return {"side": self.side, "records": [r.to_dict() for r in self.records]}


def _start_distance(potential, state, side):
    if state.side == side and state.distance is not None:
        return state.distance
    tau = _point_tau(potential, state.point)
    end = potential.endpoint(side)
    return end - tau if side == Side.FUTURE else tau - end


def _probe_states(potential, mu, state, side, probes, settings, accumulate=False):
    if not potential.is_finite(side):
        raise PreconditionViolated(f"{side} 端 τ 为无穷，探针序列不适用")
    start = _start_distance(potential, state, side)
    distances = sorted((d for d in probes if d < start), reverse=True)
    if len(distances) < 3:
        raise PreconditionViolated(f"起点距端点 {start:.3e}，可用探针不足三个")
    trajectory = sample_mode(potential, mu, state, [Probe(side, d) for d in distances],
                             settings, accumulate)
    return distances, trajectory.states[-len(distances):]


def limit_data(potential, mu, state, side, settings=None):
    """逼近有限端点的探针序列上Richardson外推 (φ₀, φ₁)"""
    settings = settings or SolverSettings()
    distances, states = _probe_states(potential, mu, state, side, settings.probes, settings)
    # 相邻探针差已落入积分噪声时直接取末值
    floor = 100.0 * settings.rtol
    phi0, err0 = extrapolate_limit(distances, [s.psi for s in states], settings.cauchy_tol, floor,
                                   f"μ={mu}: φ₀", module="dynamics")
    phi1, err1 = extrapolate_limit(distances, [s.dpsi for s in states], settings.cauchy_tol, floor,
                                   f"μ={mu}: φ₁", module="dynamics")
    logger.debug(f"μ={mu}: φ₀={phi0:.10g}, φ₁={phi1:.10g}")
    return AsymptoticRecord(mu, phi0, phi1, phi0_error=err0, phi1_error=err1)


def extract_limit_data(chart, coupling, mu, state, side, settings=None):
    """沿共形坐标提取 (φ₀, φ₁)"""
    return limit_data(ChartPotential(chart, coupling), mu, state, side, settings)


def _lstsq_residual(design, values):
    coefficients, *_ = np.linalg.lstsq(design, values, rcond=None)
    scale = max(np.linalg.norm(values), 1e-300)
    return coefficients, float(np.linalg.norm(design @ coefficients - values) / scale)


def fit_divergence(distances, dpsis):
    """在 {C·ln Δ + B, C·Δ^{−p} + B} 中选择 ∂_τψ 的发散模型"""
    distances = np.asarray(distances, dtype=float)
    values = np.asarray(dpsis, dtype=complex)
    ones = np.ones_like(distances)

    log_design = np.column_stack([np.log(distances), ones]).astype(complex)
    log_coefficients, log_residual = _lstsq_residual(log_design, values)

    def power_residual(p):
        design = np.column_stack([distances ** (-p), ones]).astype(complex)
        return _lstsq_residual(design, values)[1]

    best = minimize_scalar(power_residual, bounds=(0.05, 3.0), method="bounded",
                           options={"xatol": 1e-10})
    rate = float(best.x)
    power_design = np.column_stack([distances ** (-rate), ones]).astype(complex)
    power_coefficients, power_res = _lstsq_residual(power_design, values)

    if abs(log_residual - power_res) <= 0.1 * max(log_residual, power_res):
        raise ModelSelectionAmbiguous(
            f"对数模型残差 {log_residual:.3e} 与幂律模型残差 {power_res:.3e} 相差不足10%")
    if log_residual < power_res:
        return DivergenceModel(DivergenceKind.LOG, complex(log_coefficients[0]), None,
                               complex(log_coefficients[1]), log_residual, power_res)
    return DivergenceModel(DivergenceKind.POWER, complex(power_coefficients[0]), rate,
                           complex(power_coefficients[1]), log_residual, power_res)


def fit_oscillating_divergence(distances, dpsis, frequency, predicted_rate=0.5):
    """
    拟合振荡端点上 ∂_τψ ≈ Δ^{−p}(C·Δ^{iν} + B·Δ^{−iν}) 的发散率 p

    ν = 0 时两支退化为 Δ^{−p}(C + B·ln Δ)。predicted_rate 只作为对照记录。
    """
    distances = np.asarray(distances, dtype=float)
    values = np.asarray(dpsis, dtype=complex)
    logs = np.log(distances)
    if frequency > 0.0:
        basis = np.column_stack([np.exp(1j * frequency * logs), np.exp(-1j * frequency * logs)])
    else:
        basis = np.column_stack([np.ones_like(logs), logs]).astype(complex)

    def design(p):
        return basis * (distances ** (-p))[:, None]

    best = minimize_scalar(lambda p: _lstsq_residual(design(p), values)[1], bounds=(0.05, 3.0),
                           method="bounded", options={"xatol": 1e-10})
    rate = float(best.x)
    coefficients, residual = _lstsq_residual(design(rate), values)
    return DivergenceModel(DivergenceKind.POWER, complex(coefficients[0]), rate,
                           complex(coefficients[1]), residual_power=residual,
                           frequency=frequency, predicted_rate=predicted_rate)


def _divergence_weight(params):
    """定理中使 ∂_τψ 有界的权函数 w(Δ, ∫V⁺)"""
    eta0 = params.eta0
    if eta0 == -1.0:
        return lambda delta, integral: 1.0 / (1.0 + integral)
    if eta0 < -1.0:
        exponent = (eta0 + 1.0) / (eta0 - 1.0)
        return lambda delta, integral: delta ** exponent
    if eta0 == 0.0:
        exponent = 1.0 - params.eta1
        return lambda delta, integral: delta ** exponent
    return lambda delta, integral: math.sqrt(delta)


def _check_weighted(model, weight, distances, states, settings):
    if weight is None:
        return
    weighted = [abs(weight(d, s.v_integral) * s.dpsi) for d, s in zip(distances, states)]
    model.weighted = weighted
    model.weighted_bounded = weighted[-1] <= 1.5 * max(weighted[:-1]) + settings.atol


def divergence_rate(potential, mu, state, side, settings=None, weight=None):
    """在探针序列上拟合 ∂_τψ 的发散模型，并检查加权导数是否有界"""
    settings = settings or SolverSettings()
    distances, states = _probe_states(potential, mu, state, side, settings.probes, settings,
                                      accumulate=weight is not None)
    model = fit_divergence(distances, [s.dpsi for s in states])
    _check_weighted(model, weight, distances, states, settings)
    logger.debug(f"μ={mu}: 发散模型 {model.kind}, C={model.coefficient:.6g}, p={model.rate}")
    return model


def oscillating_divergence_rate(potential, mu, state, side, frequency, settings=None, weight=None):
    """φ₀ = 0 的振荡端点：拟合 ∂_τψ 的包络发散率，返回 (模型, 最后一个探针上的 |ψ|)"""
    settings = settings or SolverSettings()
    distances, states = _probe_states(potential, mu, state, side, settings.probes, settings,
                                      accumulate=weight is not None)
    model = fit_oscillating_divergence(distances, [s.dpsi for s in states], frequency)
    _check_weighted(model, weight, distances, states, settings)
    logger.debug(f"μ={mu}: 振荡包络 p={model.rate:.6g}（理论值 {model.predicted_rate}），ν={frequency:.6g}")
    return model, abs(states[-1].psi)


def extract_divergence_rate(chart, coupling, mu, state, side, settings=None):
    """沿共形坐标拟合 ∂_τψ 的发散模型（加权导数按端点类型选取）"""
    weight = _divergence_weight(chart.side(side).params)
    return divergence_rate(ChartPotential(chart, coupling), mu, state, side, settings, weight)


def asymptotic_record(chart, coupling, mu, state, side, settings=None):
    """按分类结果提取极限或发散模型"""
    settings = settings or SolverSettings()
    report = classify(chart.model, coupling, side, chart)
    pot = ChartPotential(chart, coupling)
    if report.phi0_exists and report.phi1_exists:
        return limit_data(pot, mu, state, side, settings)
    if report.phi0_vanishes:
        # V ≈ q/Δ²：ψ ~ Δ^{1/2}(a·Δ^{iν} + b·Δ^{−iν})，ν² = q − 1/4
        frequency = math.sqrt(max(report.exact_singular_coefficient - 0.25, 0.0))
        weight = _divergence_weight(chart.side(side).params)
        divergence, last_psi = oscillating_divergence_rate(pot, mu, state, side, frequency, settings,
                                                           weight)
        return AsymptoticRecord(mu, 0.0, DIVERGENT, divergence, phi0_error=last_psi)
    distances, states = _probe_states(pot, mu, state, side, settings.probes, settings)
    phi0, err0 = extrapolate_limit(distances, [s.psi for s in states], settings.cauchy_tol,
                                   100.0 * settings.rtol, f"μ={mu}: φ₀", module="dynamics")
    divergence = extract_divergence_rate(chart, coupling, mu, state, side, settings)
    return AsymptoticRecord(mu, phi0, DIVERGENT, divergence, phi0_error=err0)


def asymptotic_data(chart, coupling, cauchy, side, settings=None, threads=1):
    """对 CauchyData 的每个模式提取渐近数据"""
    settings = settings or SolverSettings()
    states = cauchy.states()

    def run(state):
        return asymptotic_record(chart, coupling, state.mu, state, side, settings)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            records = list(executor.map(run, states))
    else:
        records = [run(state) for state in states]
    logger.info(f"已提取 {len(records)} 个模式在 {side} 端的渐近数据")
    return AsymptoticData(side, records)


class ScatteringResult:
    """散射数据 (α, β)"""

    def __init__(self, mu, omega, alpha, beta, error, positions):
        self.mu = mu
        self.omega = omega
        self.alpha = alpha
        self.beta = beta
        self.error = error
        self.positions = list(positions)

    @property
    def normalization(self):
        """|α|² − |β|²"""
        return abs(self.alpha) ** 2 - abs(self.beta) ** 2

    def to_dict(self):
        return {
            "mu": self.mu,
            "omega": self.omega,
            "alpha": self.alpha,
            "beta": self.beta,
            "error": self.error,
            "normalization": self.normalization,
        }


def _frequency(mu, v_limit):
    omega2 = mu + v_limit
    if omega2 <= 0:
        raise NegativeFrequency(f"μ + V± = {omega2:.6g} ≤ 0，需要红外截断")
    return math.sqrt(omega2)


def _extrapolate_scattering(mu, omega, states, tolerance):
    pairs = [bogoliubov_coefficients(s.psi, s.dpsi, omega, s.tau) for s in states]
    alpha, err_a = aitken_extrapolate([p[0] for p in pairs])
    beta, err_b = aitken_extrapolate([p[1] for p in pairs])
    error = max(err_a / (1.0 + abs(alpha)), err_b / (1.0 + abs(beta)))
    if error > tolerance:
        raise NoConvergence(f"μ={mu}: 散射数据不收敛（相对误差 {error:.3e}）")
    return ScatteringResult(mu, omega, alpha, beta, error, [s.tau for s in states])


def scattering_data(potential, mu, state, v_limit, side=Side.FUTURE, settings=None,
                    tolerance=SCATTERING_TOL):
    """
    向 side 端积分并计算 (α, β)

    无穷端：在视界序列上求值（超出坐标可表示范围时截到极限并告警）；
    有限端：在距离探针序列上求值。两者都做 Aitken 外推。
    """
    settings = settings or SolverSettings()
    omega = _frequency(mu, v_limit)
    if potential.is_finite(side):
        _, states = _probe_states(potential, mu, state, side, settings.probes, settings)
        return _extrapolate_scattering(mu, omega, states, tolerance)

    sign = 1.0 if side == Side.FUTURE else -1.0
    limit = abs(potential.tau_limit(side))
    horizons = []
    for h in settings.horizons:
        if h >= limit:
            clipped = limit * (1.0 - 1e-9)
            logger.warning(f"视界 {h:g} 超出 {side} 端可表示范围，截为 {clipped:.6g}")
            h = clipped
        if not horizons or h > horizons[-1]:
            horizons.append(h)
    if len(horizons) < 2:
        raise NoConvergence(f"{side} 端可用视界不足两个")
    trajectory = sample_mode(potential, mu, state, [sign * h for h in horizons], settings)
    return _extrapolate_scattering(mu, omega, trajectory.states[-len(horizons):], tolerance)


def scattering_data_infinite_tau(chart, coupling, mu, state, V_limit, side=Side.FUTURE, settings=None):
    """无穷 τ 端相对自由动力学 ω = √(μ + V±) 的散射数据"""
    if chart.is_finite(side):
        raise PreconditionViolated(f"{side} 端 τ 有限")
    return scattering_data(ChartPotential(chart, coupling), mu, state, V_limit, side, settings)


class DecayReport:
    """衰减定理检验结果"""

    def __init__(self, K, modes, q, q_exact):
        self.K = K
        self.modes = modes
        self.q = q
        self.q_exact = q_exact

    @property
    def all_decay(self):
        return all(m["decays"] for m in self.modes)

    def to_dict(self):
        return {"K": self.K, "q": self.q, "q_exact": self.q_exact,
                "all_decay": self.all_decay, "modes": self.modes}


def verify_decay_theorem(chart, coupling, spectrum, epsilon=0.1, settings=None, side=Side.FUTURE,
                         tau0=0.0, probes=None, threads=1):
    """
    C⁰ Big Crunch / Big Rip 在 q > 1/4 下的衰减检验

    对每个 μ 与两个单位种子 (1/√μ, 0)、(0, 1)，计算
    sup (√μ|ψ| + Δ^{1−ε}|ψ′|)/(√μ|ψ₀| + |ψ₁|)，并检查 ψ → 0：
    包络 √(ν²|ψ|² + |ψ/2 − Δ∂_Δψ|²)（ν² = q_exact − 1/4）在最后三个探针上单调减小，
    且最后的 |ψ| 不超过起点的 1e−3。
    """
    settings = settings or SolverSettings()
    params = chart.side(side).params
    if params is None or params.eta0 in (0.0, 1.0) or params.eta0 >= 1.0:
        raise PreconditionViolated(f"{side} 端不是 C⁰ Big Crunch 或 Big Rip")
    q = q_coefficient(params.eta0, coupling, coupling.d)
    if not q > 0.25:
        raise PreconditionViolated(f"q = {q:.6g} ≤ 1/4，定理条件不成立")
    q_exact = exact_singular_coefficient(chart.model, coupling, side)
    nu2 = q_exact - 0.25

    pot = ChartPotential(chart, coupling)
    probes = probes or geometric_probes(1e-2, 1e-10, 1)
    mus = list(spectrum.mus) if hasattr(spectrum, "mus") else list(spectrum)
    sign = 1.0 if side == Side.PAST else -1.0  # ∂_Δψ = sign·∂_τψ

    def run(mu):
        records = []
        root = math.sqrt(mu)
        for psi0, dpsi0 in ((1.0 / root, 0.0), (0.0, 1.0)):
            start = ModeState(mu, tau0, psi0, dpsi0)
            distances, states = _probe_states(pot, mu, start, side, probes, settings)
            norm = root * abs(psi0) + abs(dpsi0)
            delta0 = _start_distance(pot, start, side)
            weighted = [(root * abs(psi0) + delta0 ** (1.0 - epsilon) * abs(dpsi0)) / norm]
            envelope = []
            for d, s in zip(distances, states):
                weighted.append((root * abs(s.psi) + d ** (1.0 - epsilon) * abs(s.dpsi)) / norm)
                if nu2 > 0:
                    envelope.append(math.sqrt(nu2 * abs(s.psi) ** 2
                                              + abs(0.5 * s.psi - d * sign * s.dpsi) ** 2))
                else:
                    envelope.append(abs(s.psi))
            last = abs(states[-1].psi)
            monotone = envelope[-1] < envelope[-2] < envelope[-3]
            small = last <= DECAY_TOL * (abs(psi0) + abs(dpsi0) / root)
            records.append({"mu": mu, "seed": [psi0, dpsi0], "sup": max(weighted),
                            "last_abs_psi": last, "decays": bool(monotone and small)})
        return records

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            nested = list(executor.map(run, mus))
    else:
        nested = [run(mu) for mu in mus]
    modes = [r for group in nested for r in group]
    K = max(r["sup"] for r in modes)
    logger.info(f"衰减检验: {len(modes)} 个模式/种子, K={K:.6g}")
    return DecayReport(K, modes, q, q_exact)


def picard_from_endpoint(V, mu, tau_plus, phi0, phi1, tau, iterations=30, n_grid=4000, grading=2.0):
    """
    从奇点 τ₊ 出发的反向Cauchy问题（Volterra形式）的Picard迭代

    ψ(Δ) = φ₀ − φ₁Δ − ∫₀^Δ (Δ − Δ′)(μ + V(Δ′))ψ(Δ′)dΔ′，V 以距离 Δ 为自变量；
    在 Δ = r^g 上求积，使可积奇性 Δ^{−β}（β ≤ 1 − 1/g）下被积函数有界。
    返回 τ 处的 (ψ, ∂_τψ)。
    """
    span = tau_plus - tau
    if span <= 0:
        raise ValueError("需要 tau < tau_plus")
    r = np.linspace(0.0, span ** (1.0 / grading), n_grid + 1)
    delta = r ** grading
    jacobian = grading * r ** (grading - 1.0)
    weight = np.empty_like(r)
    weight[1:] = (mu + np.array([V(float(x)) for x in delta[1:]])) * jacobian[1:]
    # r = 0 处线性外推
    weight[0] = 2.0 * weight[1] - weight[2]

    psi = phi0 - phi1 * delta + 0j
    for _ in range(iterations):
        g = weight * psi
        first = cumulative_trapezoid(g, r, initial=0.0)
        second = cumulative_trapezoid(g * delta, r, initial=0.0)
        psi = phi0 - phi1 * delta - (delta * first - second)
    g = weight * psi
    dpsi = phi1 + cumulative_trapezoid(g, r, initial=0.0)[-1]
    return complex(psi[-1]), complex(dpsi)


def exploratory_power_fit(chart, coupling, mu, state, side=Side.FUTURE, settings=None):
    """
    ξ = 0、d = 3 时 u ~ A(t₊−t)^{1−3η₀} + B 的探索性拟合（仅报告，不作判据）
    """
    settings = settings or SolverSettings()
    params = chart.side(side).params
    exponent = 1.0 - 3.0 * params.eta0
    distances, states = _probe_states(ChartPotential(chart, coupling), mu, state, side,
                                      settings.probes, settings)
    half = 0.5 * (coupling.d - 1)
    s_values, u_values = [], []
    for d, st in zip(distances, states):
        s = chart.s_at_distance(side, d)
        a = chart.model.evaluate(s, side, 0)[0]
        s_values.append(s)
        u_values.append(st.psi / a ** half)
    s_values = np.array(s_values)
    design = np.column_stack([s_values ** exponent, np.ones_like(s_values)]).astype(complex)
    coefficients, residual = _lstsq_residual(design, np.array(u_values, dtype=complex))
    return {"exponent": exponent, "A": complex(coefficients[0]), "B": complex(coefficients[1]),
            "residual": residual}
