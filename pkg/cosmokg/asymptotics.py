"""
渐近估计模块 (Asymptotic Estimates Module)

把奇点附近的几个解析估计做成可执行、可检验的对象。
主要功能：
- Riccati方程 A′ − A² = ±V 的Picard迭代求解，τ₀ 由二分选取，结果满足夹逼不等式
- 修正能量 𝓔 = (B^{2(1−θ)}|ψ|² + B^{−2θ}|ψ′+Aψ|²)^{1/2} 及其Gronwall上界检验
- 奇异振子 ψ″ + λ²ψ + q(τ₊−τ)^{−2}ψ = 0 的Riemann函数 R₀、R₁（高精度直接积分）
- R_k 关于 λ 一致的界的数值检验

网格在 τ₊ 附近按 Δ_i = L(1 − i/N)^g 加密，不含 τ₊ 本身。
"""

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.integrate import quad, cumulative_trapezoid, trapezoid
from scipy.optimize import brentq

from .common import (
    MAX_PICARD_ITERATIONS, QUAD_RTOL, RICCATI_TOL, Side, SolverSettings,
    NoAdmissibleTau0, NonConvergence, BoundViolated, PreconditionViolated, get_logger,
)
from .dynamics import ExplicitPotential, ModeState, Probe, sample_mode, wronskian
from .utils import loglog_slope

logger = get_logger("asymptotics")

ENERGY_SLACK = 1.05
RIEMANN_RATIO = 3.0


class RiccatiSign:
    """Riccati方程右端的符号"""
    POSITIVE = "PositiveRHS"
    NEGATIVE = "NegativeRHS"

    ALL = (POSITIVE, NEGATIVE)


def power_profile(gamma, coefficient=1.0):
    """V(Δ) = coefficient·Δ^γ，Δ = τ₊ − τ"""
    if not gamma > -2.0:
        raise ValueError(f"需要 γ > −2 才能保证 ∬V 有限: {gamma}")
    return lambda delta: coefficient * delta ** gamma


class RiccatiSolution:
    """A′ − A² = ±V 在 [τ₀, τ₊) 网格上的解，A(τ₀) = 0"""

    def __init__(self, tau0, tau_plus, distance, A, F, sign, M, iterations_used,
                 residual, double_integral, iterates=None):
        self.tau0 = tau0
        self.tau_plus = tau_plus
        self.distance = distance
        self.A = A
        self.F = F
        self.sign = sign
        self.M = M
        self.iterations_used = iterations_used
        self.residual = residual
        self.double_integral = double_integral
        self.iterates = iterates

    @property
    def tau(self):
        return self.tau_plus - self.distance

    @property
    def grid(self):
        return list(zip(self.tau.tolist(), self.A.tolist()))

    @property
    def integral_abs_A(self):
        return float(trapezoid(np.abs(self.A), -self.distance))

    def sandwich_bounds(self):
        """逐点的 (下界, 上界)"""
        if self.sign == RiccatiSign.POSITIVE:
            return self.F, 2.0 * self.M * self.F
        return -self.F, -(1.0 - 0.5 / self.M) * self.F

    def sandwich_holds(self, tol=1e-12):
        lower, upper = self.sandwich_bounds()
        slack = tol * (1.0 + np.abs(self.F))
        return bool(np.all(lower - slack <= self.A) and np.all(self.A <= upper + slack))

    def at_distance(self, delta):
        """在到 τ₊ 的距离 delta 处线性插值 A"""
        return np.interp(delta, self.distance[::-1], self.A[::-1])

    def to_dict(self):
        return {
            "tau0": self.tau0,
            "tau_plus": self.tau_plus,
            "sign": self.sign,
            "M": self.M,
            "iterations_used": self.iterations_used,
            "residual": self.residual,
            "double_integral": self.double_integral,
            "integral_abs_A": self.integral_abs_A,
            "sandwich_holds": self.sandwich_holds(),
            "points": len(self.distance),
        }


def _graded_distances(span, n_grid, grading):
    i = np.arange(n_grid)
    return span * (1.0 - i / n_grid) ** grading


def _cumulative_potential(V, distance):
    """F(τ_i) = ∫_{τ₀}^{τ_i} V，逐区间求积"""
    pieces = [quad(V, b, a, epsrel=QUAD_RTOL, limit=200)[0]
              for a, b in zip(distance[:-1], distance[1:])]
    return np.concatenate([[0.0], np.cumsum(pieces)])


def _double_integral(V, span):
    """∫_{τ₀}^{τ₊}∫_{τ₀}^{τ}V = ∫₀^L Δ·V(Δ)dΔ"""
    if span <= 0:
        return 0.0
    return quad(lambda delta: delta * V(delta), 0.0, span, epsrel=QUAD_RTOL, limit=200)[0]


def _select_span(V, max_span, target, tau_plus):
    if _double_integral(V, max_span) <= target:
        return max_span
    span = brentq(lambda L: _double_integral(V, L) - target, 0.0, max_span,
                  xtol=1e-15 * max_span, rtol=4 * np.finfo(float).eps)
    if span <= 1e-14 * (1.0 + abs(tau_plus)):
        raise NoAdmissibleTau0(f"满足 ∬V ≤ {target:.3e} 的 τ₀ 距 τ₊ 不足 {span:.3e}")
    return span


def solve_riccati(V, tau_plus, tau_one, M, sign=RiccatiSign.POSITIVE, n_grid=4000, grading=3.0,
                  tol=RICCATI_TOL, max_iterations=MAX_PICARD_ITERATIONS, keep_iterates=False):
    """
    求解 A′ − A² = ±V，A(τ₀) = 0

    V 为到 τ₊ 距离 Δ 的非负函数；sign 取 NEGATIVE 时右端为 −V。
    τ₀ ∈ [τ₁, τ₊) 由二分选取，使 ∬V 不超过正号情形 1/(4M²)、负号情形 1/(2M) 的 0.9 倍；
    离散网格上的 ∬V 若仍超界则目标减半重选（至多5次）。
    迭代 A_{n+1} = ±F + ∫A_n²，F = ∫V，直到 sup 变化 ≤ tol·(1 + sup|A|)。
    """
    if not M > 1:
        raise PreconditionViolated(f"需要 M > 1: {M}", module="asymptotics")
    if sign not in RiccatiSign.ALL:
        raise ValueError(f"未知符号: {sign}")
    if not tau_one < tau_plus:
        raise ValueError("需要 τ₁ < τ₊")
    bound = 1.0 / (4.0 * M * M) if sign == RiccatiSign.POSITIVE else 0.5 / M
    max_span = tau_plus - tau_one

    target = 0.9 * bound
    for attempt in range(6):
        span = _select_span(V, max_span, target, tau_plus)
        distance = _graded_distances(span, n_grid, grading)
        tau = tau_plus - distance
        F = _cumulative_potential(V, distance)
        discrete = float(trapezoid(F, tau))
        if discrete <= bound:
            break
        logger.debug(f"离散 ∬V = {discrete:.6e} 超过 {bound:.6e}，目标减半")
        target *= 0.5
    else:
        raise NoAdmissibleTau0(f"重选5次后离散 ∬V 仍超过 {bound:.3e}")

    sign_factor = 1.0 if sign == RiccatiSign.POSITIVE else -1.0
    base = sign_factor * F
    A = base.copy()
    iterates = [A.copy()] if keep_iterates else None
    for iteration in range(1, max_iterations + 1):
        updated = base + cumulative_trapezoid(A * A, tau, initial=0.0)
        change = float(np.max(np.abs(updated - A)))
        A = updated
        if keep_iterates:
            iterates.append(A.copy())
        if change <= tol * (1.0 + float(np.max(np.abs(A)))):
            break
    else:
        raise NonConvergence(f"Riccati迭代 {max_iterations} 次未收敛（最后变化 {change:.3e}）")

    residual = float(np.max(np.abs(A - base - cumulative_trapezoid(A * A, tau, initial=0.0))))
    residual /= 1.0 + float(np.max(np.abs(A)))
    solution = RiccatiSolution(tau_plus - span, tau_plus, distance, A, F, sign, M, iteration,
                               residual, discrete, iterates)
    logger.debug(f"Riccati({sign}): τ₀={solution.tau0:.10g}, 迭代 {iteration} 次, 残差 {residual:.3e}")
    return solution


class ModifiedEnergy:
    """沿轨迹的修正能量 𝓔(τ) 与Gronwall上界"""

    def __init__(self, theta, B_squared, riccati, distance, energy, bound):
        self.theta = theta
        self.B_squared = B_squared
        self.riccati = riccati
        self.distance = distance
        self.energy = energy
        self.bound = bound

    @property
    def ratio(self):
        return self.energy / self.bound

    @property
    def drift(self):
        """相对初值的最大偏离"""
        return float(np.max(np.abs(self.energy - self.energy[0])) / self.energy[0])

    def to_dict(self):
        return {
            "theta": self.theta,
            "B_squared": self.B_squared,
            "points": len(self.energy),
            "min_distance": float(self.distance[-1]),
            "max_ratio": float(np.max(self.ratio)),
            "drift": self.drift,
        }


def modified_energy(psi, dpsi, A, B_squared, theta):
    """𝓔 = (B^{2(1−θ)}|ψ|² + B^{−2θ}|ψ′+Aψ|²)^{1/2}"""
    return np.sqrt(B_squared ** (1.0 - theta) * np.abs(psi) ** 2
                   + B_squared ** (-theta) * np.abs(dpsi + A * psi) ** 2)


def energy_trajectory(potential, riccati, mu, psi0, dpsi0, min_distance, settings=None):
    """
    从 τ₀ 出发沿 Riccati 网格采样模式方程 ψ″ + (μ + V)ψ = 0

    potential 须与求解 Riccati 方程时的 ±V 一致；采样到距 τ₊ 为 min_distance 为止。
    """
    settings = settings or SolverSettings(rtol=1e-11, atol=1e-13)
    points = [riccati.tau0] + [Probe(Side.FUTURE, d) for d in riccati.distance[1:] if d >= min_distance]
    start = ModeState(mu, riccati.tau0, psi0, dpsi0)
    return sample_mode(potential, mu, start, points, settings)


def modified_energy_check(trajectory, riccati, B_squared, theta, G_bound, slack=ENERGY_SLACK):
    """
    检验 𝓔(τ) ≤ 𝓔(τ₀)·exp∫_{τ₀}^{τ}(|A| + G)

    轨迹须满足 ψ″ + B²ψ + (A′ − A²)ψ = Gψ，|G| ≤ G_bound。
    """
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"θ 必须在 [0, 1]: {theta}")
    if B_squared < 1.0:
        raise ValueError(f"需要 B² ≥ 1: {B_squared}")
    distance = np.array([s.distance if s.distance is not None else riccati.tau_plus - s.tau
                         for s in trajectory.states])
    A = riccati.at_distance(distance)
    energy = modified_energy(trajectory.psi, trajectory.dpsi, A, B_squared, theta)
    exponent = cumulative_trapezoid(np.abs(A) + G_bound, -distance, initial=0.0)
    bound = energy[0] * np.exp(exponent)
    report = ModifiedEnergy(theta, B_squared, riccati, distance, energy, bound)
    worst = int(np.argmax(report.ratio))
    if report.ratio[worst] > slack:
        raise BoundViolated(f"Δ={distance[worst]:.3e} 处 𝓔/上界 = {report.ratio[worst]:.4f}")
    return report


def _riemann_potential(q, tau_plus):
    return ExplicitPotential(lambda delta: q / (delta * delta), tau_plus=tau_plus,
                             variable="distance", name="riemann")


def _riemann_settings(settings):
    return settings or SolverSettings(rtol=1e-12, atol=1e-14, method="DOP853")


def riemann_trajectories(lam, q, points, tau_plus=1.0, settings=None):
    """R₀、R₁ 在 points（τ 值或 Probe，沿 τ 递增）处的轨迹"""
    if not q > 0.25:
        raise PreconditionViolated(f"需要 q > 1/4: {q}", module="asymptotics")
    settings = _riemann_settings(settings)
    pot = _riemann_potential(q, tau_plus)
    mu = lam * lam
    return tuple(sample_mode(pot, mu, ModeState(mu, 0.0, p0, p1), points, settings)
                 for p0, p1 in ((1.0, 0.0), (0.0, 1.0)))


def riemann_functions(lam, q, tau, tau_plus=1.0, settings=None):
    """ψ″ + λ²ψ + q(τ₊−τ)^{−2}ψ = 0 的 (R₀, R₁, R₀′, R₁′)，R₀(0)=1, R₁′(0)=1"""
    r0, r1 = riemann_trajectories(lam, q, [tau], tau_plus, settings)
    s0, s1 = r0.states[-1], r1.states[-1]
    return s0.psi.real, s1.psi.real, s0.dpsi.real, s1.dpsi.real


def _riemann_constants(lam, q, M, tau_plus, settings, outer_points):
    """单个 λ 的经验常数：内区 (|R_k| + |R_k′|/λ)λ^k，外区 (|R_k| + Δ|R_k′|)/(λ^{1/2−k}Δ^{1/2})"""
    delta_lam = M * tau_plus / lam
    tau_lam = tau_plus - delta_lam
    # 每个波长约20个采样点
    n_inner = max(200, int(20 * lam * tau_lam / (2.0 * math.pi))) + 1
    inner = np.linspace(0.0, tau_lam, n_inner)
    outer = np.geomspace(0.9 * delta_lam, 1e-8 * tau_plus, outer_points)
    points = inner.tolist() + [Probe(Side.FUTURE, d) for d in outer]
    trajectories = riemann_trajectories(lam, q, points, tau_plus, settings)

    record = {"lambda": lam, "tau_lambda": tau_lam}
    c_in, c_out = 0.0, 0.0
    for k, traj in enumerate(trajectories):
        psi = np.abs(traj.psi)
        dpsi = np.abs(traj.dpsi)
        inside = slice(0, n_inner)
        outside = slice(n_inner, None)
        inner_value = (psi[inside] + dpsi[inside] / lam) * lam ** k
        delta = outer
        outer_value = (psi[outside] + delta * dpsi[outside]) / (lam ** (0.5 - k) * np.sqrt(delta))
        c_in = max(c_in, float(np.max(inner_value)))
        c_out = max(c_out, float(np.max(outer_value)))
        record[f"sup_R{k}_inner"] = float(np.max(psi[inside]))
        record[f"R{k}_scaled_tail"] = float(psi[-1] / math.sqrt(delta[-1]))
    r0, r1 = trajectories
    w = wronskian(r0.psi, r0.dpsi, r1.psi, r1.dpsi)
    wronskian_drift = float(np.max(np.abs(w - 1.0)))
    record.update({"C_inner": c_in, "C_outer": c_out, "C": max(c_in, c_out),
                   "wronskian_drift": wronskian_drift})
    return record


def verify_riemann_bounds(q, M=2.0, lambdas=(10.0, 30.0, 100.0, 300.0), tau_plus=1.0,
                          settings=None, threads=1, outer_points=60, ratio_limit=RIEMANN_RATIO):
    """
    检验 R_k 的 λ 一致界：逐 λ 给出经验常数 C，要求 max C / min C ≤ ratio_limit；
    同时在内区拟合 sup|R₁| 关于 λ 的对数斜率（应接近 −1）。
    """
    if not q > 0.25:
        raise PreconditionViolated(f"需要 q > 1/4: {q}", module="asymptotics")
    lambdas = sorted(float(l) for l in lambdas)
    if lambdas[0] < M:
        raise PreconditionViolated(f"λ 网格须位于 [M, ∞): {lambdas[0]} < {M}", module="asymptotics")
    settings = _riemann_settings(settings)

    def run(lam):
        return _riemann_constants(lam, q, M, tau_plus, settings, outer_points)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            records = list(executor.map(run, lambdas))
    else:
        records = [run(lam) for lam in lambdas]

    constants = [r["C"] for r in records]
    ratio = max(constants) / min(constants)
    slope = None
    if len(lambdas) >= 2:
        slope, _ = loglog_slope(lambdas, [r["sup_R1_inner"] for r in records])
    report = {"q": q, "M": M, "records": records, "C_max": max(constants),
              "C_ratio": ratio, "R1_slope": slope}
    logger.info(f"Riemann界: C ∈ [{min(constants):.4g}, {max(constants):.4g}], 比值 {ratio:.3f}")
    if ratio > ratio_limit:
        raise BoundViolated(f"经验常数 C 的比值 {ratio:.3f} 超过 {ratio_limit}")
    return report
