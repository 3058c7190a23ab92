"""
宇宙学Klein-Gordon公共模块 (CosmoKG Common Module)

该模块包含各计算模块共享的常量、默认容差、状态常量类、日志配置和异常层次。
内容：
- 数值容差与积分参数默认值（rtol、atol、端点边距、探针序列、视界序列）
- 模型种类、端点方向、奇点类别等常量定义
- 日志配置
- 统一的异常层次（每个异常记录出错的模块名）

作为所有计算模块的基础组件，确保各模块使用一致的默认值和错误约定。
"""

import logging
from fractions import Fraction

# 默认积分参数
RTOL = 1e-10  # ODE相对容差
ATOL = 1e-12  # ODE绝对容差
QUAD_RTOL = 1e-12  # 求积相对容差
ENDPOINT_MARGIN = 1e-13  # t端点禁区（相对t₊−t₋）
TAU_MARGIN = 1e-15  # τ端点禁区（相对1+|τ±|）
LIMIT_CAUCHY_TOL = 1e-7  # 极限提取的Cauchy判据
MIN_LIMIT_ORDER = 0.1  # 探针外推的主阶下限
MAX_LIMIT_ORDER = 4.0  # 探针外推的主阶上限
DECAY_TOL = 1e-3  # 衰减判据
DEFAULT_PROBES = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)  # 到端点距离的几何探针
DEFAULT_HORIZONS = (1e2, 1e3, 1e4)  # 无穷τ±的视界序列
SCATTERING_TOL = 1e-6  # 散射数据收敛判据
LADDER_BUDGET = 10 ** 6  # 谱阶梯的默认条目预算（计重数）
BESSEL_X_SWITCH = 12.0  # Bessel级数/渐近展开切换点
MAX_PICARD_ITERATIONS = 200
RICCATI_TOL = 1e-12

# 日志配置
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger("CosmoKG")


def get_logger(name):
    """获取模块子日志器，例如 CosmoKG.dynamics"""
    return logging.getLogger(f"CosmoKG.{name}")


def conformal_xi(d):
    """共形耦合常数 (d−1)/(4d)，以有理数精确表示"""
    return Fraction(d - 1, 4 * d)


class ModelKind:
    """尺度因子模型种类常量"""
    SINGLE_ENDED_FUTURE = "SingleEndedFuture"
    SINGLE_ENDED_PAST = "SingleEndedPast"
    TWO_SIDED_PRODUCT = "TwoSidedProduct"
    EXPLICIT_BIG_RIP_1 = "ExplicitBigRip1"
    EXPLICIT_BIG_RIP_2 = "ExplicitBigRip2"
    EXPLICIT_BIG_RIP_3 = "ExplicitBigRip3"

    ALL = (SINGLE_ENDED_FUTURE, SINGLE_ENDED_PAST, TWO_SIDED_PRODUCT,
           EXPLICIT_BIG_RIP_1, EXPLICIT_BIG_RIP_2, EXPLICIT_BIG_RIP_3)
    EXPLICIT = (EXPLICIT_BIG_RIP_1, EXPLICIT_BIG_RIP_2, EXPLICIT_BIG_RIP_3)


class Side:
    """端点方向常量"""
    PAST = "Past"
    FUTURE = "Future"

    ALL = (PAST, FUTURE)


class SingularityClass:
    """奇点类别常量（过去端使用Bang类名）"""
    C1_BIG_CRUNCH = "C1BigCrunch"
    C0_BIG_CRUNCH = "C0BigCrunch"
    C1_BIG_BANG = "C1BigBang"
    C0_BIG_BANG = "C0BigBang"
    SUDDEN_SINGULARITY = "SuddenSingularity"
    BIG_BRAKE = "BigBrake"
    SLOW_BIG_RIP = "SlowBigRip"
    STRONG_BIG_RIP = "StrongBigRip"
    REGULAR = "Regular"


class DivergenceKind:
    """导数发散模型常量"""
    NONE = "none"
    LOG = "log"
    POWER = "power"


class ManifoldKind:
    """空间流形种类常量"""
    SPHERE = "SphereSd"
    TORUS = "FlatTorusTd"


class Command:
    """命令行命令常量"""
    CLASSIFY = "classify"
    POTENTIAL = "potential"
    EVOLVE = "evolve"
    ASYMPTOTICS = "asymptotics"
    BOGOLIUBOV = "bogoliubov"
    WKB_COMPARE = "wkb-compare"
    RICCATI = "riccati"
    DUFFING = "duffing"

    ALL = (CLASSIFY, POTENTIAL, EVOLVE, ASYMPTOTICS, BOGOLIUBOV, WKB_COMPARE, RICCATI, DUFFING)


class CosmoKGError(Exception):
    """所有领域错误的基类，module 记录出错模块"""
    module = "cosmokg"

    def __init__(self, message="", module=None):
        super().__init__(message)
        if module is not None:
            self.module = module

    @property
    def name(self):
        return type(self).__name__

    def to_dict(self):
        return {"error": self.name, "module": self.module, "message": str(self)}


class ConfigError(CosmoKGError):
    """场景配置校验失败"""
    module = "config"

    def __init__(self, message="", field_path=None):
        if field_path:
            message = f"{field_path}: {message}"
        super().__init__(message)
        self.field_path = field_path


# cosmology
class NonIntegrableEndpoint(CosmoKGError):
    module = "cosmology"


class OutOfChart(CosmoKGError):
    module = "cosmology"


# spectrum
class CutoffTooLarge(CosmoKGError):
    module = "spectrum"


class EmptySpectrum(CosmoKGError):
    module = "spectrum"


class DivergentSeries(CosmoKGError):
    module = "spectrum"


# potential
class DegenerateExponent(CosmoKGError):
    module = "potential"


class UnclassifiedRegime(CosmoKGError):
    module = "potential"


class UnsupportedRegime(CosmoKGError):
    module = "potential"


# dynamics
class ToleranceFailure(CosmoKGError):
    module = "dynamics"


class EndpointReached(CosmoKGError):
    module = "dynamics"


class NoConvergence(CosmoKGError):
    module = "dynamics"


class ModelSelectionAmbiguous(CosmoKGError):
    module = "dynamics"


class NegativeFrequency(CosmoKGError):
    module = "dynamics"


class PreconditionViolated(CosmoKGError):
    module = "dynamics"


# asymptotics
class NoAdmissibleTau0(CosmoKGError):
    module = "asymptotics"


class NonConvergence(CosmoKGError):
    module = "asymptotics"


class BoundViolated(CosmoKGError):
    module = "asymptotics"


# wkb
class InsufficientSmoothness(CosmoKGError):
    module = "wkb"


# quantum
class InsufficientDecades(CosmoKGError):
    module = "quantum"


# specfun
class DomainError(CosmoKGError):
    module = "specfun"


# semilinear
class SupercriticalExponent(CosmoKGError):
    module = "semilinear"


class SolverSettings:
    """积分器设置，显式传给每个积分操作"""

    METHODS = ("RK45", "DOP853")

    def __init__(self, rtol=RTOL, atol=ATOL, method="RK45", endpoint_margin=TAU_MARGIN,
                 probes=DEFAULT_PROBES, horizons=DEFAULT_HORIZONS, cauchy_tol=LIMIT_CAUCHY_TOL):
        if method not in self.METHODS:
            raise ValueError(f"未知积分方法: {method}")
        if rtol <= 0 or atol <= 0:
            raise ValueError("容差必须为正")
        self.rtol = float(rtol)
        self.atol = float(atol)
        self.method = method
        self.endpoint_margin = float(endpoint_margin)
        self.probes = tuple(sorted((float(p) for p in probes), reverse=True))
        self.horizons = tuple(sorted(float(h) for h in horizons))
        self.cauchy_tol = float(cauchy_tol)

    def replace(self, **changes):
        """返回修改了部分字段的新设置"""
        values = self.to_dict()
        values.update(changes)
        return SolverSettings(**values)

    def to_dict(self):
        return {
            "rtol": self.rtol,
            "atol": self.atol,
            "method": self.method,
            "endpoint_margin": self.endpoint_margin,
            "probes": list(self.probes),
            "horizons": list(self.horizons),
            "cauchy_tol": self.cauchy_tol,
        }
