"""
宇宙学模块 (Cosmology Module)

该模块表示带奇异渐近行为的尺度因子 a(t)，构建共形时间坐标 τ(t)，
并计算 α(τ) = a(t(τ)) 及其导数和端点处的闭式渐近形式。
主要功能：
- 尺度因子模型：单端幂律、双端乘积、三个显式Big Rip模型，导数全部为闭式
- 共形坐标：τ(t) 的自适应求积（端点主幂项解析扣除），以及括号求根反演
- α(τ)、α′、α″ 的链式法则计算
- 端点渐近形式（η₀<1、η₀=0、η₀=1、η₀>1 四种情形），含 η₀=1 的常数 k₀

端点附近的计算统一以"到端点的距离 s"为自变量，并在 u = ln s 中求积和求根，
避免形成 t₊ − 极小量 带来的精度损失。
"""

import math

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .common import (
    ENDPOINT_MARGIN, QUAD_RTOL, ModelKind, Side, NonIntegrableEndpoint, OutOfChart, get_logger,
)

logger = get_logger("cosmology")

# 显式Big Rip模型 a = A (t₊−t)^{−n}
_EXPLICIT_AMPLITUDES = {
    ModelKind.EXPLICIT_BIG_RIP_1: (2.0, 1),
    ModelKind.EXPLICIT_BIG_RIP_2: (9.0, 2),
    ModelKind.EXPLICIT_BIG_RIP_3: (64.0, 3),
}

_TABLE_POINTS = 24
_EXPONENT_RANGE = 250.0


def _falling(eta, k):
    """下降阶乘 η(η−1)…(η−k+1)"""
    result = 1.0
    for j in range(k):
        result *= eta - j
    return result


def _power_derivatives(c, eta, x, order, sign):
    """c·x^η 对 t 的各阶导数；sign=−1 表示 x = t₊ − t"""
    if c == 0:
        return [0.0] * (order + 1)
    values = []
    for k in range(order + 1):
        coefficient = _falling(eta, k)
        if coefficient == 0:
            values.append(0.0)
        else:
            values.append(c * coefficient * x ** (eta - k) * sign ** k)
    return values


class SideParameters:
    """端点处的 (c₀, η₀, c₁, η₁)：a ≈ c₀s^{η₀} + c₁s^{η₁}"""

    def __init__(self, c0, eta0, c1=0.0, eta1=None):
        self.c0 = float(c0)
        self.eta0 = float(eta0)
        self.c1 = float(c1)
        self.eta1 = float(eta1) if eta1 is not None else self.eta0 + 1.0

    @property
    def finite_tau(self):
        return self.eta0 < 1.0

    def to_dict(self):
        return {"c0": self.c0, "eta0": self.eta0, "c1": self.c1, "eta1": self.eta1}

    def __eq__(self, other):
        if not isinstance(other, SideParameters):
            return False
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(tuple(self.to_dict().items()))


class ScaleFactorModel:
    """
    尺度因子模型，在 (t₋, t₊) 上有全局闭式表达式

    SingleEndedFuture: a = c₀⁺(t₊−t)^{η₀⁺} + c₁⁺(t₊−t)^{η₁⁺}，过去端正则
    SingleEndedPast:   a = c₀⁻(t−t₋)^{η₀⁻} + c₁⁻(t−t₋)^{η₁⁻}，未来端正则
    TwoSidedProduct:   a = c₀⁻(t−t₋)^{η₀⁻} · c₀⁺(t₊−t)^{η₀⁺}
    ExplicitBigRipN:   a = A(t₊−t)^{−N}，A = 2, 9, 64
    """

    def __init__(self, kind, t_minus, t_plus, c0_minus=None, eta0_minus=None, c1_minus=0.0,
                 eta1_minus=None, c0_plus=None, eta0_plus=None, c1_plus=0.0, eta1_plus=None):
        if kind not in ModelKind.ALL:
            raise ValueError(f"未知模型种类: {kind}")
        if not t_minus < t_plus:
            raise ValueError("需要 t_minus < t_plus")
        self.kind = kind
        self.t_minus = float(t_minus)
        self.t_plus = float(t_plus)

        if kind in ModelKind.EXPLICIT:
            amplitude, n = _EXPLICIT_AMPLITUDES[kind]
            c0_plus, eta0_plus, c1_plus, eta1_plus = amplitude, -float(n), 0.0, None
            c0_minus = eta0_minus = None

        self.c0_minus = None if c0_minus is None else float(c0_minus)
        self.eta0_minus = None if eta0_minus is None else float(eta0_minus)
        self.c1_minus = float(c1_minus or 0.0)
        self.eta1_minus = None if eta1_minus is None else float(eta1_minus)
        self.c0_plus = None if c0_plus is None else float(c0_plus)
        self.eta0_plus = None if eta0_plus is None else float(eta0_plus)
        self.c1_plus = float(c1_plus or 0.0)
        self.eta1_plus = None if eta1_plus is None else float(eta1_plus)

        self._validate()

    # 构造辅助
    @classmethod
    def single_ended_future(cls, t_minus, t_plus, c0, eta0, c1=0.0, eta1=None):
        return cls(ModelKind.SINGLE_ENDED_FUTURE, t_minus, t_plus,
                   c0_plus=c0, eta0_plus=eta0, c1_plus=c1, eta1_plus=eta1)

    @classmethod
    def single_ended_past(cls, t_minus, t_plus, c0, eta0, c1=0.0, eta1=None):
        return cls(ModelKind.SINGLE_ENDED_PAST, t_minus, t_plus,
                   c0_minus=c0, eta0_minus=eta0, c1_minus=c1, eta1_minus=eta1)

    @classmethod
    def two_sided(cls, t_minus, t_plus, c0_minus, eta0_minus, c0_plus, eta0_plus):
        return cls(ModelKind.TWO_SIDED_PRODUCT, t_minus, t_plus,
                   c0_minus=c0_minus, eta0_minus=eta0_minus, c0_plus=c0_plus, eta0_plus=eta0_plus)

    @classmethod
    def explicit_big_rip(cls, n, t_minus=0.0, t_plus=1.0):
        kind = {1: ModelKind.EXPLICIT_BIG_RIP_1, 2: ModelKind.EXPLICIT_BIG_RIP_2,
                3: ModelKind.EXPLICIT_BIG_RIP_3}[n]
        return cls(kind, t_minus, t_plus)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)

    def _validate(self):
        needs_plus = self.kind in (ModelKind.SINGLE_ENDED_FUTURE, ModelKind.TWO_SIDED_PRODUCT) \
            or self.kind in ModelKind.EXPLICIT
        needs_minus = self.kind in (ModelKind.SINGLE_ENDED_PAST, ModelKind.TWO_SIDED_PRODUCT)
        for flag, c0, eta0, c1, eta1, label in (
                (needs_plus, self.c0_plus, self.eta0_plus, self.c1_plus, self.eta1_plus, "plus"),
                (needs_minus, self.c0_minus, self.eta0_minus, self.c1_minus, self.eta1_minus, "minus")):
            if not flag:
                continue
            if c0 is None or eta0 is None:
                raise ValueError(f"缺少 c0_{label} 或 eta0_{label}")
            if c0 <= 0:
                raise ValueError(f"c0_{label} 必须为正")
            if c1 != 0:
                if self.kind == ModelKind.TWO_SIDED_PRODUCT:
                    raise ValueError("TwoSidedProduct 不接受 c1 项")
                if eta1 is None or eta1 <= eta0:
                    raise ValueError(f"需要 eta1_{label} > eta0_{label}")

        # a(t) > 0 的抽样检查
        span = self.span
        s_grid = span * np.geomspace(1e-12, 1.0 - 1e-12, 200)
        side = Side.PAST if self.kind == ModelKind.SINGLE_ENDED_PAST else Side.FUTURE
        for s in s_grid:
            value = self.evaluate(float(s), side, 0)[0]
            if not value > 0:
                raise ValueError(f"尺度因子在 s={s:.3e} 处非正")

    @property
    def span(self):
        return self.t_plus - self.t_minus

    def endpoint(self, side):
        return self.t_plus if side == Side.FUTURE else self.t_minus

    def side_parameters(self, side):
        """
        端点处控制渐近行为的参数；正则端点返回 None

        TwoSidedProduct 在 t₊ 附近：(T−s)^{η₀⁻} = T^{η₀⁻}(1 − η₀⁻s/T + …)，T = t₊ − t₋，
        故 c₀ = c₀⁻c₀⁺T^{η₀⁻}，η₁ = η₀⁺ + 1，c₁ = −η₀⁻c₀⁻c₀⁺T^{η₀⁻−1}；t₋ 端对称。
        """
        T = self.span
        if self.kind in ModelKind.EXPLICIT or self.kind == ModelKind.SINGLE_ENDED_FUTURE:
            if side == Side.PAST:
                return None
            return SideParameters(self.c0_plus, self.eta0_plus, self.c1_plus, self.eta1_plus)
        if self.kind == ModelKind.SINGLE_ENDED_PAST:
            if side == Side.FUTURE:
                return None
            return SideParameters(self.c0_minus, self.eta0_minus, self.c1_minus, self.eta1_minus)
        product = self.c0_minus * self.c0_plus
        if side == Side.FUTURE:
            return SideParameters(product * T ** self.eta0_minus, self.eta0_plus,
                                  -self.eta0_minus * product * T ** (self.eta0_minus - 1.0),
                                  self.eta0_plus + 1.0)
        return SideParameters(product * T ** self.eta0_plus, self.eta0_minus,
                              -self.eta0_plus * product * T ** (self.eta0_plus - 1.0),
                              self.eta0_minus + 1.0)

    def is_singular(self, side):
        return self.side_parameters(side) is not None

    def is_pure_power(self, side):
        """端点侧 1/a 恰为单一幂次（无需余项求积）"""
        if self.kind in ModelKind.EXPLICIT:
            return side == Side.FUTURE
        if self.kind == ModelKind.TWO_SIDED_PRODUCT:
            other = self.eta0_minus if side == Side.FUTURE else self.eta0_plus
            return other == 0
        params = self.side_parameters(side)
        return params is not None and params.c1 == 0

    def evaluate(self, s, side, order=2):
        """以到 side 端点的距离 s 为自变量，返回 [a, ȧ, ä, …]（对 t 的导数）"""
        T = self.span
        if side == Side.FUTURE:
            s_plus, s_minus = s, T - s
        else:
            s_minus, s_plus = s, T - s

        if self.kind == ModelKind.TWO_SIDED_PRODUCT:
            past = _power_derivatives(self.c0_minus, self.eta0_minus, s_minus, order, 1.0)
            future = _power_derivatives(self.c0_plus, self.eta0_plus, s_plus, order, -1.0)
            # Leibniz
            return [sum(math.comb(k, j) * past[j] * future[k - j] for j in range(k + 1))
                    for k in range(order + 1)]

        if self.kind == ModelKind.SINGLE_ENDED_PAST:
            lead = _power_derivatives(self.c0_minus, self.eta0_minus, s_minus, order, 1.0)
            corr = _power_derivatives(self.c1_minus, self.eta1_minus, s_minus, order, 1.0) \
                if self.c1_minus else [0.0] * (order + 1)
        else:
            lead = _power_derivatives(self.c0_plus, self.eta0_plus, s_plus, order, -1.0)
            corr = _power_derivatives(self.c1_plus, self.eta1_plus, s_plus, order, -1.0) \
                if self.c1_plus else [0.0] * (order + 1)
        return [x + y for x, y in zip(lead, corr)]

    def derivatives(self, t, order=2):
        """d^k a/dt^k，k ≤ order（闭式，不用差分）"""
        if order > 4:
            raise ValueError("导数阶数不超过4")
        if not self.t_minus < t < self.t_plus:
            raise OutOfChart(f"t={t} 不在 (t₋, t₊) 内")
        if t >= 0.5 * (self.t_minus + self.t_plus):
            return self.evaluate(self.t_plus - t, Side.FUTURE, order)
        return self.evaluate(t - self.t_minus, Side.PAST, order)

    def scale_factor(self, t):
        return self.derivatives(t, 0)[0]

    def inverse_remainder(self, s, side):
        """1/a − s^{−η₀}/c₀，解析形式以避免相消"""
        params = self.side_parameters(side)
        if self.kind in ModelKind.EXPLICIT:
            return 0.0
        if self.kind == ModelKind.TWO_SIDED_PRODUCT:
            T = self.span
            other = self.eta0_minus if side == Side.FUTURE else self.eta0_plus
            leading = 1.0 / (params.c0 * s ** params.eta0)
            return leading * math.expm1(-other * math.log1p(-s / T))
        x = params.c1 / params.c0 * s ** (params.eta1 - params.eta0)
        return -x / ((1.0 + x) * params.c0 * s ** params.eta0)

    def to_dict(self):
        data = {"kind": self.kind, "t_minus": self.t_minus, "t_plus": self.t_plus}
        for key in ("c0_minus", "eta0_minus", "c1_minus", "eta1_minus",
                    "c0_plus", "eta0_plus", "c1_plus", "eta1_plus"):
            value = getattr(self, key)
            if value is not None and not (key.startswith("c1") and value == 0.0):
                data[key] = value
        return data

    def __eq__(self, other):
        return isinstance(other, ScaleFactorModel) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(tuple(sorted(self.to_dict().items())))


def scale_factor_derivatives(model, t, order=2):
    return model.derivatives(t, order)


def effective_side_parameters(model, side):
    """端点的 (c₀, η₀, c₁, η₁)；正则端点报 ValueError"""
    params = model.side_parameters(side)
    if params is None:
        raise ValueError(f"{side} 端为正则端点")
    return params.c0, params.eta0, params.c1, params.eta1


def reverse_model(model):
    """时间反演 t → −t 后的模型（用于时间对称性检验）"""
    if model.kind == ModelKind.TWO_SIDED_PRODUCT:
        return ScaleFactorModel.two_sided(-model.t_plus, -model.t_minus,
                                          model.c0_plus, model.eta0_plus,
                                          model.c0_minus, model.eta0_minus)
    if model.kind == ModelKind.SINGLE_ENDED_FUTURE:
        return ScaleFactorModel.single_ended_past(-model.t_plus, -model.t_minus, model.c0_plus,
                                                  model.eta0_plus, model.c1_plus, model.eta1_plus)
    if model.kind == ModelKind.SINGLE_ENDED_PAST:
        return ScaleFactorModel.single_ended_future(-model.t_plus, -model.t_minus, model.c0_minus,
                                                    model.eta0_minus, model.c1_minus, model.eta1_minus)
    raise ValueError(f"{model.kind} 没有对应的时间反演模型")


class _ChartSide:
    """共形坐标的一侧：t0 与某个端点之间"""

    def __init__(self, model, side, s0):
        self.model = model
        self.side = side
        self.s0 = s0
        self.params = model.side_parameters(side)
        self.regular = self.params is None
        self.pure_power = model.is_pure_power(side)
        if self.regular:
            self.finite = True
            self.s_floor = 1e-300 * model.span
        else:
            eta0 = self.params.eta0
            self.finite = eta0 < 1.0
            self.K = 1.0 / self.params.c0
            self.p = -eta0
            scale = max(abs(eta0), abs(eta0 - 2.0), 1.0)
            self.s_floor = model.span * 10.0 ** (-_EXPONENT_RANGE / scale)

        if self.finite:
            self.tau_end = self.gap(s0)
        else:
            self.tau_end = math.inf
        self.depth_limit = None if self.finite else self.depth(self.s_floor)
        self.gap_floor = self.gap(self.s_floor) if self.finite else None
        self.table = self._build_table()

    # 被积函数
    def inverse_scale(self, s):
        return 1.0 / self.model.evaluate(s, self.side, 0)[0]

    def _remainder_integral(self, u_lo, u_hi):
        if self.pure_power or u_hi <= u_lo:
            return 0.0

        def integrand(u):
            s = math.exp(u)
            try:
                return self.model.inverse_remainder(s, self.side) * s
            except (OverflowError, ZeroDivisionError):
                return 0.0

        # s_floor 以下的尾部相对于任何可表示的共形距离都可忽略
        u_lo = max(u_lo, math.log(self.s_floor))
        value, _ = quad(integrand, u_lo, u_hi, epsabs=0.0, epsrel=QUAD_RTOL, limit=400)
        return value

    def _leading(self, s):
        if self.p == -1.0:
            return self.K * math.log(s)
        return self.K * s ** (self.p + 1.0) / (self.p + 1.0)

    def gap(self, s):
        """到端点的共形距离 ∫_0^s ds′/a（有限侧）"""
        if self.regular:
            value, _ = quad(self.inverse_scale, 0.0, s, epsabs=0.0, epsrel=QUAD_RTOL, limit=200)
            return value
        return self._leading(s) + self._remainder_integral(-math.inf, math.log(s))

    def depth(self, s):
        """从 t0 出发的共形深度 ∫_s^{s0} ds′/a（无穷侧）"""
        if s >= self.s0:
            return 0.0
        if self.p == -1.0:
            leading = self.K * (math.log(self.s0) - math.log(s))
        else:
            leading = self.K * (self.s0 ** (self.p + 1.0) - s ** (self.p + 1.0)) / (self.p + 1.0)
        return leading + self._remainder_integral(math.log(s), math.log(self.s0))

    def span_integral(self, s):
        """∫_s^{s0} ds′/a，t0 附近直接求积"""
        value, _ = quad(self.inverse_scale, s, self.s0, epsabs=0.0, epsrel=QUAD_RTOL, limit=200)
        return value

    def k0(self):
        """η₀ = 1 时 lim(τ + c₀^{−1} ln s) 的精确值（未来侧符号约定）"""
        return self.K * math.log(self.s0) + self._remainder_integral(-math.inf, math.log(self.s0))

    def _build_table(self):
        u_hi = math.log(self.s0)
        u_lo = math.log(self.s_floor)
        us = np.linspace(u_hi, u_lo, _TABLE_POINTS)
        values = [self.gap(math.exp(u)) if self.finite else self.depth(math.exp(u)) for u in us]
        return list(zip(us.tolist(), values))

    # 反演
    def _closed_form(self, target):
        c0, eta0 = self.params.c0, self.params.eta0
        if self.finite:
            return ((1.0 - eta0) * c0 * target) ** (1.0 / (1.0 - eta0))
        if eta0 == 1.0:
            return self.s0 * math.exp(-c0 * target)
        # s^{1−η₀} = s0^{1−η₀} + (η₀−1)c₀τ
        return (self.s0 ** (1.0 - eta0) + (eta0 - 1.0) * c0 * target) ** (1.0 / (1.0 - eta0))

    def solve(self, target):
        """给定共形距离（有限侧）或深度（无穷侧）求 s"""
        if not self.regular and self.pure_power:
            return self._closed_form(target)
        f = (lambda u: self.gap(math.exp(u)) - target) if self.finite \
            else (lambda u: self.depth(math.exp(u)) - target)

        # gap 随 u 增，depth 随 u 减；用前向表找括号
        increasing = self.finite
        u_a, u_b = None, None
        for (u0, v0), (u1, v1) in zip(self.table[:-1], self.table[1:]):
            lo, hi = (v1, v0) if increasing else (v0, v1)
            if lo <= target <= hi:
                u_a, u_b = u1, u0
                break
        if u_a is None:
            u_b = self.table[-1][0]
            u_a = u_b - 1.0
            while f(u_a) * f(u_b) > 0:
                u_a -= 5.0
                if u_a < -745.0:
                    raise OutOfChart("共形距离低于可表示范围")
        root = brentq(f, u_a, u_b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        return math.exp(root)


class ConformalChart:
    """
    共形坐标 t ↔ τ，τ(t0) = 0

    以 t0 为分界，两侧分别以到各自端点的距离 s 参数化；
    构造后不可变，可被多个工作线程并发读取。
    """

    def __init__(self, model, t0=None):
        if t0 is None:
            t0 = 0.5 * (model.t_minus + model.t_plus)
        if not model.t_minus < t0 < model.t_plus:
            raise ValueError("t0 必须位于 (t₋, t₊) 内")
        self.model = model
        self.t0 = float(t0)
        self._sides = {
            Side.FUTURE: _ChartSide(model, Side.FUTURE, model.t_plus - self.t0),
            Side.PAST: _ChartSide(model, Side.PAST, self.t0 - model.t_minus),
        }
        future, past = self._sides[Side.FUTURE], self._sides[Side.PAST]
        self.tau_plus = future.tau_end
        self.tau_minus = -past.tau_end
        logger.debug(f"共形坐标已构建: {model.kind}, τ₋={self.tau_minus:.6g}, τ₊={self.tau_plus:.6g}")

    def side(self, side):
        return self._sides[side]

    def is_finite(self, side):
        return self._sides[side].finite

    @property
    def forward_table(self):
        """单调样本 (t_i, τ_i)"""
        rows = []
        for side, sign in ((Side.PAST, -1.0), (Side.FUTURE, 1.0)):
            chart_side = self._sides[side]
            for u, value in chart_side.table:
                s = math.exp(u)
                if s < ENDPOINT_MARGIN * self.model.span:
                    continue
                t = self.model.endpoint(side) - sign * s
                tau = sign * (chart_side.tau_end - value) if chart_side.finite else sign * value
                rows.append((t, tau))
        rows.append((self.t0, 0.0))
        return sorted(set(rows))

    def tau_limit(self, side):
        """τ-API 可达的最远τ（有限侧为端点本身）"""
        chart_side = self._sides[side]
        sign = 1.0 if side == Side.FUTURE else -1.0
        if chart_side.finite:
            return sign * chart_side.tau_end
        return sign * chart_side.depth_limit

    def endpoint_tau(self, side):
        return self.tau_plus if side == Side.FUTURE else self.tau_minus

    # τ 与距离之间
    def distance_to_endpoint(self, tau, side):
        """有限端点的共形距离 τ₊−τ 或 τ−τ₋"""
        if not self.is_finite(side):
            raise NonIntegrableEndpoint(f"{side} 端 τ 为无穷")
        return self.tau_plus - tau if side == Side.FUTURE else tau - self.tau_minus

    def s_at_distance(self, side, delta):
        """共形距离 Δ 对应的时间距离 s"""
        chart_side = self._sides[side]
        if not chart_side.finite:
            raise NonIntegrableEndpoint(f"{side} 端 τ 为无穷，无有限距离")
        if not 0 < delta < chart_side.tau_end:
            raise OutOfChart(f"共形距离 {delta} 超出 (0, {chart_side.tau_end})")
        if delta < chart_side.gap_floor:
            raise OutOfChart(f"共形距离 {delta:.3e} 低于可表示范围")
        return chart_side.solve(delta)

    def s_at_depth(self, side, depth):
        """无穷侧：从 t0 起共形深度 |τ| 对应的 s"""
        chart_side = self._sides[side]
        if chart_side.finite:
            raise ValueError("有限侧请使用 s_at_distance")
        if depth > chart_side.depth_limit:
            raise OutOfChart(f"|τ|={depth:.6g} 超出可表示范围 {chart_side.depth_limit:.6g}")
        if depth <= 0:
            return chart_side.s0
        return chart_side.solve(depth)

    def locate(self, tau):
        """τ → (side, s)"""
        if not self.tau_minus < tau < self.tau_plus:
            raise OutOfChart(f"τ={tau} 不在 ({self.tau_minus}, {self.tau_plus}) 内")
        side = Side.FUTURE if tau >= 0 else Side.PAST
        chart_side = self._sides[side]
        if tau == 0:
            return side, chart_side.s0
        if chart_side.finite:
            return side, self.s_at_distance(side, chart_side.tau_end - abs(tau))
        return side, self.s_at_depth(side, abs(tau))

    def tau_of_distance(self, side, s):
        """到端点时间距离 s 处的 τ"""
        chart_side = self._sides[side]
        sign = 1.0 if side == Side.FUTURE else -1.0
        if s >= 0.5 * chart_side.s0:
            return sign * chart_side.span_integral(s)
        if chart_side.finite:
            return sign * (chart_side.tau_end - chart_side.gap(s))
        return sign * chart_side.depth(s)

    def k0(self, side):
        """η₀ = 1 端点的 k₀ = lim(|τ| + c₀⁻¹ln s)"""
        chart_side = self._sides[side]
        if chart_side.regular or chart_side.params.eta0 != 1.0:
            raise ValueError("k₀ 仅对 η₀ = 1 的端点定义")
        return chart_side.k0()

    def k0_probes(self, side, distances):
        """τ ± c₀⁻¹ ln s 在探针序列上的值，供检查收敛"""
        chart_side = self._sides[side]
        sign = 1.0 if side == Side.FUTURE else -1.0
        return [sign * self.tau_of_distance(side, s) + chart_side.K * math.log(s) for s in distances]

    def to_dict(self):
        return {"model": self.model.to_dict(), "t0": self.t0,
                "tau_minus": self.tau_minus, "tau_plus": self.tau_plus}


def build_chart(model, t0=None):
    return ConformalChart(model, t0)


def _check_margin(chart, t):
    model = chart.model
    margin = ENDPOINT_MARGIN * model.span
    if not model.t_minus + margin < t < model.t_plus - margin:
        raise OutOfChart(f"t={t} 位于端点禁区内或区间外")


def conformal_time(chart, t):
    """τ(t) = ∫_{t0}^{t} ds/a(s)"""
    _check_margin(chart, t)
    if t == chart.t0:
        return 0.0
    if t > chart.t0:
        return chart.tau_of_distance(Side.FUTURE, chart.model.t_plus - t)
    return chart.tau_of_distance(Side.PAST, t - chart.model.t_minus)


def endpoint_tau(chart, side):
    """τ± 的值；若 1/a 在该端不可积则报错（应当查询无穷标志）"""
    chart_side = chart.side(side)
    if not chart_side.finite:
        raise NonIntegrableEndpoint(f"η₀ = {chart_side.params.eta0} ≥ 1，{side} 端 τ 为无穷")
    return chart.endpoint_tau(side)


def distance_to_endpoint(chart, tau, side):
    return chart.distance_to_endpoint(tau, side)


def invert_chart(chart, tau):
    """t(τ)：u = ln s 中的括号求根（纯幂次侧用闭式）"""
    side, s = chart.locate(tau)
    if s < ENDPOINT_MARGIN * chart.model.span:
        raise OutOfChart(f"τ={tau} 对应的 t 位于端点禁区内")
    if tau == 0:
        return chart.t0
    if side == Side.FUTURE:
        return chart.model.t_plus - s
    return chart.model.t_minus + s


def _alpha_from_s(chart, side, s, order):
    a, a_t, a_tt = chart.model.evaluate(s, side, 2)
    values = [a, a_t * a, (a_tt * a + a_t * a_t) * a]
    return tuple(values[:order + 1])


def alpha_and_derivatives(chart, tau, order=2):
    """(α, α′, α″)，α′ = ȧa，α″ = (äa + ȧ²)a"""
    if order > 2:
        raise ValueError("order ≤ 2")
    side, s = chart.locate(tau)
    return _alpha_from_s(chart, side, s, order)


def alpha_at_distance(chart, side, delta, order=2):
    """在到有限端点的共形距离 Δ 处计算 α 及导数（不形成 τ₊ − Δ）"""
    s = chart.s_at_distance(side, delta)
    return _alpha_from_s(chart, side, s, order)


class AsymptoticForm:
    """
    端点处 α 的闭式主项

    variable: "distance"（有限端点，自变量 Δ），"tau"（|τ|，η₀ > 1），
    "exponential"（e^{∓c₀τ}，η₀ = 1）
    """

    def __init__(self, side, regime, variable, coefficient, exponent,
                 correction_exponent=None, correction_coefficient=None, k0=None):
        self.side = side
        self.regime = regime
        self.variable = variable
        self.coefficient = coefficient
        self.exponent = exponent
        self.correction_exponent = correction_exponent
        self.correction_coefficient = correction_coefficient
        self.k0 = k0

    def evaluate(self, x):
        """x 为距离 Δ（有限端点）或 |τ|（无穷端点）"""
        if self.variable == "exponential":
            return self.coefficient * math.exp(-self.exponent * abs(x))
        value = self.coefficient * abs(x) ** self.exponent
        if self.regime == "constant" and self.correction_coefficient:
            value += self.correction_coefficient * x ** self.correction_exponent
        return value

    def to_dict(self):
        return {
            "side": self.side,
            "regime": self.regime,
            "variable": self.variable,
            "coefficient": self.coefficient,
            "exponent": self.exponent,
            "correction_exponent": self.correction_exponent,
            "correction_coefficient": self.correction_coefficient,
            "k0": self.k0,
        }


def appendix_asymptotics(model, side, chart=None):
    """
    端点处 α 的主项

    η₀<1: α ~ [c₀(1−η₀)^{η₀}]^{1/(1−η₀)} Δ^{η₀/(1−η₀)}
    η₀=0: α ~ c₀ + c₁c₀^{η₁} Δ^{η₁}
    η₀=1: α ~ c₀e^{c₀k₀}e^{−c₀|τ|}
    η₀>1: α ~ c₀^{1/(1−η₀)}(η₀−1)^{η₀/(1−η₀)} |τ|^{η₀/(1−η₀)}
    """
    params = model.side_parameters(side)
    if params is None:
        raise ValueError(f"{side} 端为正则端点")
    c0, eta0, c1, eta1 = params.c0, params.eta0, params.c1, params.eta1
    correction = (eta1 - eta0) / (1.0 - eta0) if c1 != 0 and eta0 != 1.0 else None

    if eta0 == 0.0:
        return AsymptoticForm(side, "constant", "distance", c0, 0.0,
                              correction_exponent=eta1,
                              correction_coefficient=c1 * c0 ** eta1 if c1 else 0.0)
    if eta0 < 1.0:
        coefficient = (c0 * (1.0 - eta0) ** eta0) ** (1.0 / (1.0 - eta0))
        return AsymptoticForm(side, "power", "distance", coefficient, eta0 / (1.0 - eta0),
                              correction_exponent=correction)
    if eta0 == 1.0:
        if chart is None:
            chart = ConformalChart(model)
        k0 = chart.k0(side)
        return AsymptoticForm(side, "exponential", "exponential", c0 * math.exp(c0 * k0), c0, k0=k0)
    coefficient = c0 ** (1.0 / (1.0 - eta0)) * (eta0 - 1.0) ** (eta0 / (1.0 - eta0))
    return AsymptoticForm(side, "power", "tau", coefficient, eta0 / (1.0 - eta0),
                          correction_exponent=correction)
