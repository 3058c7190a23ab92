"""
势函数与奇点分类模块 (Potential Module)

该模块构造约化Klein-Gordon方程在共形标架下的势 V(τ) 与曲率项 Q(τ)，
计算时空Ricci标量，并按端点参数对奇点做表驱动的分类。
主要功能：
- 耦合常数 CouplingSpec：共形耦合以符号方式选择（字符串 "conformal" 或精确有理数）
- V = m²α² + (ξ − (d−1)/(4d))·Q，Q 由 t 导数闭式计算，不做差分
- q 系数（列表公式）与 (τ₊−τ)^{−2} 的精确主系数
- 分类表：奇点类别、红外截断、φ₀/φ₁ 是否存在，表格以数据行给出
- V 的端点渐近形式、数值指数拟合，以及散射极限 (V₋, V₊)
"""

import math
from dataclasses import dataclass, asdict
from fractions import Fraction

import numpy as np

from .common import (
    Side, SingularityClass, DegenerateExponent, UnclassifiedRegime, UnsupportedRegime,
    conformal_xi, get_logger,
)
from .cosmology import appendix_asymptotics
from .utils import loglog_slope

logger = get_logger("potential")


class CouplingSpec:
    """耦合参数 (ξ, d, m)"""

    CONFORMAL = "conformal"

    def __init__(self, xi, d, m=0.0):
        if int(d) != d or d < 3:
            raise ValueError(f"空间维数需为 ≥ 3 的整数: {d}")
        if m < 0:
            raise ValueError(f"质量必须非负: {m}")
        self.d = int(d)
        self.m = float(m)
        if isinstance(xi, str):
            if xi != self.CONFORMAL:
                raise ValueError(f"未知的耦合描述: {xi}")
            self.xi = conformal_xi(self.d)
        elif isinstance(xi, (Fraction, int)):
            self.xi = Fraction(xi)
        else:
            self.xi = float(xi)
        # 浮点ξ按其精确二进制值比较，不做容差比较
        self._offset = Fraction(self.xi) - conformal_xi(self.d)

    @classmethod
    def conformal(cls, d, m=0.0):
        return cls(cls.CONFORMAL, d, m)

    @property
    def is_conformal(self):
        return self._offset == 0

    @property
    def offset(self):
        """ξ − (d−1)/(4d)"""
        return float(self._offset)

    def to_dict(self):
        xi = self.CONFORMAL if self.is_conformal else float(self.xi)
        return {"xi": xi, "d": self.d, "m": self.m}

    def __eq__(self, other):
        return isinstance(other, CouplingSpec) and (self.xi, self.d, self.m) == (other.xi, other.d, other.m)

    def __hash__(self):
        return hash((Fraction(self.xi), self.d, self.m))


def _as_coupling(xi, d):
    return xi if isinstance(xi, CouplingSpec) else CouplingSpec(xi, d)


def curvature_term(alpha, d_alpha, dd_alpha, d):
    """Q = d(d−3)α′²/α² + 2dα″/α（τ 导数形式）"""
    return d * (d - 3) * d_alpha * d_alpha / (alpha * alpha) + 2.0 * d * dd_alpha / alpha


def _curvature_from_t(a, a_t, a_tt, d):
    # 与 curvature_term 相同：α′ = ȧa，α″ = (äa + ȧ²)a
    return d * (d - 1) * a_t * a_t + 2.0 * d * a * a_tt


def potential_and_scale(model, coupling, side, s):
    """(V, a)，以到端点的时间距离 s 为自变量"""
    a, a_t, a_tt = model.evaluate(s, side, 2)
    value = coupling.m ** 2 * a * a
    if not coupling.is_conformal:
        value += coupling.offset * _curvature_from_t(a, a_t, a_tt, coupling.d)
    return value, a


def potential_from_s(model, coupling, side, s):
    """以到端点的时间距离 s 计算 V"""
    return potential_and_scale(model, coupling, side, s)[0]


def potential(chart, coupling, tau):
    """V(τ) = m²α² + (ξ − (d−1)/(4d))·Q(τ)"""
    side, s = chart.locate(tau)
    return potential_from_s(chart.model, coupling, side, s)


def potential_at_distance(chart, coupling, side, delta):
    """有限端点附近以共形距离 Δ 计算 V"""
    s = chart.s_at_distance(side, delta)
    return potential_from_s(chart.model, coupling, side, s)


def ricci_scalar_from_derivatives(a, a_t, a_tt, d, R_gamma=0.0):
    """R_g = R_γ/a² + 2d·ä/a + d(d−1)·ȧ²/a²"""
    return R_gamma / (a * a) + 2.0 * d * a_tt / a + d * (d - 1) * a_t * a_t / (a * a)


def ricci_scalar(chart, d, tau, R_gamma=0.0):
    """时空Ricci标量 R_g 在 t(τ) 处的值"""
    side, s = chart.locate(tau)
    a, a_t, a_tt = chart.model.evaluate(s, side, 2)
    return ricci_scalar_from_derivatives(a, a_t, a_tt, d, R_gamma)


def _check_exponent(eta0):
    if eta0 == 0.0 or eta0 == 1.0:
        raise DegenerateExponent(f"η₀ = {eta0} 时 q 无定义")


def q_coefficient(eta0, xi, d):
    """q = (ξ − (d−1)/(4d))·(d+1−2/η₀)·d·η₀²/(1−η₀)"""
    _check_exponent(eta0)
    offset = _as_coupling(xi, d).offset
    return offset * (d + 1.0 - 2.0 / eta0) * d * eta0 * eta0 / (1.0 - eta0)


def condichi_holds(eta0, xi, d):
    return q_coefficient(eta0, xi, d) > 0.25


def _singular_geometry(eta0, d):
    # Q·Δ² 的极限：α ~ CΔ^β，β = η₀/(1−η₀)
    return d * eta0 * eta0 * (d + 1.0 - 2.0 / eta0) / (1.0 - eta0) ** 2


def exact_singular_coefficient(model, coupling, side):
    """
    V 中 (τ₊−τ)^{−2}（η₀ > 1 时为 τ^{−2}）项的精确系数

    与列表公式 q 相差一个因子 (1−η₀)：offset·dη₀²(d+1−2/η₀)/(1−η₀)²
    """
    params = _side_params(model, side)
    _check_exponent(params.eta0)
    return coupling.offset * _singular_geometry(params.eta0, coupling.d)


def _side_params(model, side):
    params = model.side_parameters(side)
    if params is None:
        raise ValueError(f"{side} 端为正则端点，无奇点参数")
    return params


def singularity_class(model, side):
    """按端点参数确定奇点类别（过去端使用 Bang 类名）"""
    params = _side_params(model, side)
    eta0 = params.eta0
    future = side == Side.FUTURE
    if eta0 >= 1.0:
        return SingularityClass.C1_BIG_CRUNCH if future else SingularityClass.C1_BIG_BANG
    if eta0 > 0.0:
        return SingularityClass.C0_BIG_CRUNCH if future else SingularityClass.C0_BIG_BANG
    if eta0 == 0.0:
        if params.c1 == 0.0 or float(params.eta1).is_integer():
            raise UnclassifiedRegime(f"η₀ = 0 且 η₁ = {params.eta1} ∈ ℕ（或 c₁ = 0），端点不是奇点")
        if future and params.c1 > 0 and params.eta1 > 1.0:
            return SingularityClass.BIG_BRAKE
        return SingularityClass.SUDDEN_SINGULARITY
    if eta0 > -1.0:
        return SingularityClass.SLOW_BIG_RIP
    return SingularityClass.STRONG_BIG_RIP


_C1 = (SingularityClass.C1_BIG_CRUNCH, SingularityClass.C1_BIG_BANG)
_C0 = (SingularityClass.C0_BIG_CRUNCH, SingularityClass.C0_BIG_BANG)
_SUDDEN = (SingularityClass.SUDDEN_SINGULARITY, SingularityClass.BIG_BRAKE)
_RIP = (SingularityClass.SLOW_BIG_RIP, SingularityClass.STRONG_BIG_RIP)


@dataclass(frozen=True)
class RegimeRow:
    """分类表中的一行"""
    label: str
    classes: tuple
    cutoff: bool
    phi0: bool
    phi1: bool
    phi0_zero: bool = False
    requires: str = None  # None | "condichi" | "eta1_below_one"


# 共形耦合
CONFORMAL_TABLE = (
    RegimeRow("C1 Big Crunch/Bang, η₀ ∈ [1,∞)", _C1, True, True, True),
    RegimeRow("C0 Big Crunch/Bang, η₀ ∈ (0,1)", _C0, False, True, True),
    RegimeRow("Sudden Singularity, η₀ = 0", _SUDDEN, False, True, True),
    RegimeRow("Slow Big Rip, η₀ ∈ (−1,0)", (SingularityClass.SLOW_BIG_RIP,), False, True, True),
    RegimeRow("Strong Big Rip, η₀ ∈ (−∞,−1]", (SingularityClass.STRONG_BIG_RIP,), False, True, False),
)

# 非共形耦合
NONCONFORMAL_TABLE = (
    RegimeRow("C1 Big Crunch/Bang, η₀ ∈ [1,∞), ξ ∈ ℝ", _C1, True, True, True),
    RegimeRow("C0 Big Crunch/Bang, η₀ ∈ (0,1), q > 1/4", _C0, False, True, False,
              phi0_zero=True, requires="condichi"),
    RegimeRow("Big Brake, η₀ = 0, η₁ ∈ (1,∞)", (SingularityClass.BIG_BRAKE,), False, True, True),
    RegimeRow("Sudden Singularity, η₀ = 0, η₁ ∈ (0,1)", (SingularityClass.SUDDEN_SINGULARITY,),
              False, True, False, requires="eta1_below_one"),
    RegimeRow("Big Rip, η₀ ∈ (−∞,0), q > 1/4", _RIP, False, True, False,
              phi0_zero=True, requires="condichi"),
)


def _row_applies(row, klass, params, condichi):
    if klass not in row.classes:
        return False
    if row.requires == "condichi":
        return bool(condichi)
    if row.requires == "eta1_below_one":
        return 0.0 < params.eta1 < 1.0
    return True


@dataclass
class RegimeReport:
    """某一端点的分类结果"""
    side: str
    singularity_class: str
    row: str
    needs_infrared_cutoff: bool
    phi0_exists: bool
    phi1_exists: bool
    phi0_vanishes: bool
    W_isomorphism: bool
    V_limit: float
    V_singular_exponent: float = None
    q_coefficient: float = None
    exact_singular_coefficient: float = None
    condichi_holds: bool = None

    def to_dict(self):
        return asdict(self)


class PotentialAsymptotics:
    """
    端点处 V 的预测形式：V ≈ limit + coefficient·x^exponent

    variable 为 "distance"（x = Δ）、"tau"（x = |τ|）或 "exponential"
    （V ≈ limit + coefficient·e^{−exponent·|τ|}）；coefficient 为 None 表示常数未给出。
    """

    def __init__(self, side, row, variable, limit, exponent, coefficient=None):
        self.side = side
        self.row = row
        self.variable = variable
        self.limit = limit
        self.exponent = exponent
        self.coefficient = coefficient

    @property
    def diverges(self):
        return (self.variable != "exponential" and self.exponent < 0
                and self.coefficient is not None and self.coefficient != 0)

    @property
    def limit_value(self):
        """V 在端点的极限（可为 ±inf）"""
        if self.diverges:
            return math.copysign(math.inf, self.coefficient)
        return self.limit

    @property
    def singular_exponent(self):
        return self.exponent if self.diverges else None

    def evaluate(self, x):
        if self.coefficient is None:
            raise ValueError("该渐近形式的常数未确定")
        if self.variable == "exponential":
            return self.limit + self.coefficient * math.exp(-self.exponent * abs(x))
        return self.limit + self.coefficient * abs(x) ** self.exponent

    def to_dict(self):
        return {
            "side": self.side,
            "row": self.row,
            "variable": self.variable,
            "limit": self.limit,
            "limit_value": self.limit_value,
            "exponent": self.exponent,
            "coefficient": self.coefficient,
        }


def predicted_V_asymptotics(model, coupling, side, chart=None):
    """按奇点类别给出 V 的端点渐近形式"""
    params = _side_params(model, side)
    klass = singularity_class(model, side)
    c0, eta0, c1, eta1 = params.c0, params.eta0, params.c1, params.eta1
    m2, d, offset = coupling.m ** 2, coupling.d, coupling.offset
    conformal = coupling.is_conformal

    if klass in _SUDDEN:
        limit = m2 * c0 * c0
        if conformal:
            # α ≈ c₀ + c₁c₀^{η₁}Δ^{η₁}
            return PotentialAsymptotics(side, "Sudden Singularity, conformal", "distance", limit,
                                        eta1, 2.0 * m2 * c0 * c1 * c0 ** eta1)
        coefficient = offset * 2.0 * d * eta1 * (eta1 - 1.0) * c0 ** (eta1 - 1.0) * c1
        return PotentialAsymptotics(side, "Sudden Singularity / Big Brake, non-conformal",
                                    "distance", limit, eta1 - 2.0, coefficient)

    if eta0 == 1.0:
        if chart is None:
            from .cosmology import ConformalChart
            chart = ConformalChart(model)
        alpha_form = appendix_asymptotics(model, side, chart)
        conformal_part = m2 * alpha_form.coefficient ** 2
        if conformal:
            return PotentialAsymptotics(side, "C1, η₀ = 1, conformal", "exponential", 0.0,
                                        2.0 * c0, conformal_part)
        limit = offset * c0 * c0 * d * (d - 1)
        if c1 != 0.0 and eta1 - 1.0 < 2.0:
            return PotentialAsymptotics(side, "C1, η₀ = 1", "exponential", limit, c0 * (eta1 - 1.0))
        return PotentialAsymptotics(side, "C1, η₀ = 1", "exponential", limit, 2.0 * c0, conformal_part)

    variable = "tau" if eta0 > 1.0 else "distance"
    alpha_form = appendix_asymptotics(model, side)
    conformal_exponent = 2.0 * eta0 / (1.0 - eta0)
    conformal_coefficient = m2 * alpha_form.coefficient ** 2
    if klass in _C1:
        label = "C1, η₀ > 1"
    elif klass in _C0:
        label = "C0 Big Crunch/Bang"
    else:
        label = "Big Rip"
    if conformal:
        return PotentialAsymptotics(side, label + ", conformal", variable, 0.0,
                                    conformal_exponent, conformal_coefficient)
    coefficient = offset * _singular_geometry(eta0, d)
    if coefficient == 0.0:
        # d+1 = 2/η₀：Q 的主项相消
        return PotentialAsymptotics(side, label + ", Q leading term cancels", variable, 0.0,
                                    conformal_exponent, conformal_coefficient)
    return PotentialAsymptotics(side, label, variable, 0.0, -2.0, coefficient)


def classify(model, coupling, side, chart=None):
    """查表给出 RegimeReport；落在表格之外时报 UnclassifiedRegime"""
    params = _side_params(model, side)
    klass = singularity_class(model, side)
    eta0 = params.eta0
    q = None
    condichi = None
    exact = None
    if eta0 not in (0.0, 1.0):
        q = q_coefficient(eta0, coupling, coupling.d)
        condichi = q > 0.25
        exact = exact_singular_coefficient(model, coupling, side)

    table = CONFORMAL_TABLE if coupling.is_conformal else NONCONFORMAL_TABLE
    row = next((r for r in table if _row_applies(r, klass, params, condichi)), None)
    if row is None:
        message = f"{klass} (η₀={eta0}, η₁={params.eta1}, ξ={float(coupling.xi)}) 不在分类表中"
        if klass in _C0 and not coupling.is_conformal:
            message += "；非共形 C0 且 q ≤ 1/4 的情形尚无结论，参见静默奇点 (silent singularities) 相关注记"
        logger.info(message)
        raise UnclassifiedRegime(message)

    asymptotics = predicted_V_asymptotics(model, coupling, side, chart)
    return RegimeReport(
        side=side,
        singularity_class=klass,
        row=row.label,
        needs_infrared_cutoff=row.cutoff,
        phi0_exists=row.phi0,
        phi1_exists=row.phi1,
        phi0_vanishes=row.phi0_zero,
        W_isomorphism=row.phi0 and row.phi1,
        V_limit=asymptotics.limit_value,
        V_singular_exponent=asymptotics.singular_exponent,
        q_coefficient=q,
        exact_singular_coefficient=exact,
        condichi_holds=condichi,
    )


class PotentialSamples:
    """端点附近 V 的采样：x 为共形距离 Δ（有限端）或深度 |τ|（无穷端）"""

    def __init__(self, side, predicted, x, tau, values):
        self.side = side
        self.predicted = predicted
        self.x = np.asarray(x, dtype=float)
        self.tau = np.asarray(tau, dtype=float)
        self.values = np.asarray(values, dtype=float)

    @property
    def variable(self):
        return self.predicted.variable

    def rows(self):
        """CSV 行 (side, variable, x, tau, V)"""
        return [(self.side, self.variable, x, t, v) for x, t, v in zip(self.x, self.tau, self.values)]


def sample_potential(chart, coupling, side, inner=1e-5, decades=2.0, points=9):
    """
    按端点的预测形式选取采样网格

    有限端点：Δ 从 inner·10^decades 到 inner；η₀ > 1：|τ| 从 10³/c₀ 起取 decades 个量级；
    η₀ = 1：|τ| 在 [1, 8]/c₀ 上等距。
    """
    model = chart.model
    predicted = predicted_V_asymptotics(model, coupling, side, chart)
    sign = 1.0 if side == Side.FUTURE else -1.0
    if predicted.variable == "distance":
        xs = np.geomspace(inner * 10.0 ** decades, inner, points)
        values = [potential_at_distance(chart, coupling, side, float(x)) for x in xs]
        taus = chart.endpoint_tau(side) - sign * xs
        return PotentialSamples(side, predicted, xs, taus, values)

    c0 = chart.side(side).params.c0
    if predicted.variable == "tau":
        xs = np.geomspace(1e3, 1e3 * 10.0 ** decades, points) / c0
    else:
        xs = np.linspace(1.0, 8.0, points) / c0
    values = [potential_from_s(model, coupling, side, chart.s_at_depth(side, float(x))) for x in xs]
    return PotentialSamples(side, predicted, xs, sign * xs, values)


def fit_potential_exponent(chart, coupling, side, inner=1e-5, decades=2.0, points=9):
    """
    数值拟合 V − V± 的指数：幂律形式拟合 log|V − V±| 的对数斜率，
    η₀ = 1 返回指数衰减率。返回 (拟合值, 预测值)。
    """
    samples = sample_potential(chart, coupling, side, inner, decades, points)
    predicted = samples.predicted
    deviation = samples.values - predicted.limit
    if predicted.variable == "exponential":
        rate, _ = np.polyfit(samples.x, np.log(np.abs(deviation)), 1)
        return -float(rate), predicted.exponent
    slope, _ = loglog_slope(samples.x, deviation)
    return slope, predicted.exponent


def scattering_table(model, coupling, chart=None):
    """
    (V₋, V₊)：散射问题所需的两端极限

    仅支持共形 C0/C1 Big Bang–Big Crunch、Sudden Singularity，以及非共形的
    C1（η₀ = 1 或 η₀ > 1）与 η₁ > 2 的 Big Brake；其余情形报 UnsupportedRegime。
    """
    limits = {}
    for side in Side.ALL:
        params = model.side_parameters(side)
        if params is None:
            raise UnsupportedRegime(f"{side} 端为正则端点，不构成散射问题")
        klass = singularity_class(model, side)
        m2, c0 = coupling.m ** 2, params.c0
        if coupling.is_conformal:
            if klass in _C0 or klass in _C1:
                limits[side] = 0.0
            elif klass in _SUDDEN:
                limits[side] = m2 * c0 * c0
            else:
                raise UnsupportedRegime(f"共形耦合下 {klass} 不在散射表中")
            continue
        if klass in _C1:
            if params.eta0 == 1.0:
                limits[side] = coupling.offset * c0 * c0 * coupling.d * (coupling.d - 1)
            else:
                limits[side] = 0.0
        elif klass == SingularityClass.BIG_BRAKE and params.eta1 > 2.0:
            limits[side] = m2 * c0 * c0
        else:
            raise UnsupportedRegime(f"非共形耦合下 {klass} (η₀={params.eta0}, η₁={params.eta1}) 不在散射表中")
    logger.debug(f"散射极限: V₋={limits[Side.PAST]:.6g}, V₊={limits[Side.FUTURE]:.6g}")
    return limits[Side.PAST], limits[Side.FUTURE]
