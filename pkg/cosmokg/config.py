"""
场景配置模块 (CosmoKG Config Module)

该模块负责读取和校验JSON格式的场景配置，并把各配置块转换为领域对象。
主要功能：
- 从文件读取场景配置
- 逐块校验 universe、coupling、manifold、modes、solver 以及各命令的配置块
- 校验失败时抛出带字段路径的 ConfigError（例如 "universe.eta0_plus: 必须为数值"）
- 为命令块补全默认值，并对规范化后的配置计算哈希

校验后的配置不可变，命令行各命令只从这里取参数。
"""

import copy
import json
import math

import numpy as np

from .common import (ConfigError, SolverSettings, ModelKind, ManifoldKind, Side, Command,
                     LADDER_BUDGET, get_logger)
from .cosmology import ScaleFactorModel, build_chart
from .potential import CouplingSpec
from .spectrum import SphereSd, FlatTorusTd, build_ladder, shift_and_cut
from .utils import compute_config_hash

logger = get_logger("config")

_MISSING = object()

_UNIVERSE_FIELDS = ("t_minus", "t_plus", "c0_minus", "eta0_minus", "c1_minus", "eta1_minus",
                    "c0_plus", "eta0_plus", "c1_plus", "eta1_plus")

_SOLVER_FIELDS = ("rtol", "atol", "method", "endpoint_margin", "probes", "horizons", "cauchy_tol")

# 命令块的默认值
COMMAND_DEFAULTS = {
    "potential": {"sides": None, "inner": 1e-5, "decades": 2.0, "points": 9},
    "evolve": {"side": Side.FUTURE, "tau0": 0.0, "psi0": [1.0, 0.0], "dpsi0": [0.0, 0.0],
               "distances": None, "taus": None},
    "asymptotics": {"side": Side.FUTURE, "tau0": 0.0, "psi0": [1.0, 0.0], "dpsi0": [0.0, 0.0]},
    "bogoliubov": {"channel": "pos", "fit_window": None, "partial_cutoffs": None},
    "wkb": {"profile": {"kind": "gaussian", "amplitude": 1.0, "width": 1.0, "center": 0.0},
            "order": 2, "mus": [1e3, 1e4, 1e5], "span": [-8.0, 8.0], "stride": 20},
    "riccati": {"gamma": -0.5, "coefficient": 1.0, "M": 2.0, "sign": "PositiveRHS",
                "tau_plus": 1.0, "tau_one": 0.0, "n_grid": 4000, "grading": 3.0, "riemann": None},
    "duffing": {"phi0": [float(x) for x in np.geomspace(1e-2, 1e2, 9)]},
}


# 不依赖宇宙模型的命令
STANDALONE_COMMANDS = (Command.WKB_COMPARE, Command.RICCATI, Command.DUFFING)


def _path(parent, key):
    return f"{parent}.{key}" if parent else str(key)


def _get(data, key, parent, default=_MISSING):
    if key in data:
        return data[key]
    if default is _MISSING:
        raise ConfigError("缺少必填字段", field_path=_path(parent, key))
    return default


def _number(value, path, positive=False, nonnegative=False, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"必须为数值: {value!r}", field_path=path)
    value = float(value)
    if math.isnan(value):
        raise ConfigError("不能为 NaN", field_path=path)
    if positive and not value > 0:
        raise ConfigError(f"必须为正: {value}", field_path=path)
    if nonnegative and value < 0:
        raise ConfigError(f"必须非负: {value}", field_path=path)
    return value


def _integer(value, path, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"必须为整数: {value!r}", field_path=path)
    if minimum is not None and value < minimum:
        raise ConfigError(f"必须 ≥ {minimum}: {value}", field_path=path)
    return value


def _number_list(value, path, positive=False, min_length=1):
    if not isinstance(value, list) or len(value) < min_length:
        raise ConfigError(f"必须为至少含 {min_length} 个数值的列表", field_path=path)
    return [_number(v, f"{path}[{i}]", positive=positive) for i, v in enumerate(value)]


def _complex(value, path):
    """[re, im] 或实数"""
    if isinstance(value, list):
        if len(value) != 2:
            raise ConfigError("复数需写为 [re, im]", field_path=path)
        return complex(_number(value[0], f"{path}[0]"), _number(value[1], f"{path}[1]"))
    return complex(_number(value, path))


def _choice(value, path, choices):
    if value not in choices:
        raise ConfigError(f"取值 {value!r} 不在 {list(choices)} 中", field_path=path)
    return value


def _reject_unknown(data, allowed, parent):
    for key in sorted(data):
        if key not in allowed:
            raise ConfigError("未知字段", field_path=_path(parent, key))


def _block(data, name):
    value = data[name]
    if not isinstance(value, dict):
        raise ConfigError("配置块必须为JSON对象", field_path=name)
    return value


def parse_universe(data):
    """universe 块 → (ScaleFactorModel, t0)"""
    kind = _choice(_get(data, "kind", "universe"), "universe.kind", ModelKind.ALL)
    _reject_unknown(data, ("kind", "t0") + _UNIVERSE_FIELDS, "universe")
    values = {}
    for key in _UNIVERSE_FIELDS:
        if key in data:
            values[key] = _number(data[key], f"universe.{key}", allow_none=True)
    values.setdefault("t_minus", 0.0)
    values.setdefault("t_plus", 1.0)
    if not values["t_minus"] < values["t_plus"]:
        raise ConfigError("需要 t_minus < t_plus", field_path="universe.t_plus")

    for label in ("minus", "plus"):
        c0 = values.get(f"c0_{label}")
        if c0 is not None and not c0 > 0:
            raise ConfigError(f"必须为正: {c0}", field_path=f"universe.c0_{label}")
        c1 = values.get(f"c1_{label}") or 0.0
        eta0, eta1 = values.get(f"eta0_{label}"), values.get(f"eta1_{label}")
        if c1 != 0.0 and eta0 is not None and (eta1 is None or eta1 <= eta0):
            raise ConfigError(f"需要 eta1_{label} > eta0_{label}", field_path=f"universe.eta1_{label}")

    try:
        model = ScaleFactorModel(kind, **values)
    except ValueError as e:
        raise ConfigError(str(e), field_path="universe") from e

    t0 = _number(data.get("t0"), "universe.t0", allow_none=True)
    if t0 is not None and not model.t_minus < t0 < model.t_plus:
        raise ConfigError("t0 必须位于 (t_minus, t_plus) 内", field_path="universe.t0")
    return model, t0


def parse_coupling(data):
    _reject_unknown(data, ("xi", "d", "m"), "coupling")
    xi = _get(data, "xi", "coupling")
    if isinstance(xi, str):
        _choice(xi, "coupling.xi", (CouplingSpec.CONFORMAL,))
    else:
        xi = _number(xi, "coupling.xi")
    d = _integer(_get(data, "d", "coupling"), "coupling.d", minimum=3)
    m = _number(data.get("m", 0.0), "coupling.m", nonnegative=True)
    return CouplingSpec(xi, d, m)


def parse_manifold(data, d):
    kind = _choice(_get(data, "kind", "manifold"), "manifold.kind",
                   (ManifoldKind.SPHERE, ManifoldKind.TORUS))
    if kind == ManifoldKind.SPHERE:
        _reject_unknown(data, ("kind", "d", "radius"), "manifold")
        dim = _integer(data.get("d", d), "manifold.d", minimum=3)
        radius = _number(data.get("radius", 1.0), "manifold.radius", positive=True)
        manifold = SphereSd(dim, radius)
    else:
        _reject_unknown(data, ("kind", "lengths"), "manifold")
        lengths = _number_list(_get(data, "lengths", "manifold"), "manifold.lengths",
                               positive=True, min_length=3)
        manifold = FlatTorusTd(lengths)
    if manifold.d != d:
        raise ConfigError(f"流形维数 {manifold.d} 与 coupling.d = {d} 不一致", field_path="manifold")
    return manifold


def parse_modes(data):
    _reject_unknown(data, ("eigenvalue_cutoff", "infrared_delta", "budget", "mus"), "modes")
    modes = {
        "eigenvalue_cutoff": _number(data.get("eigenvalue_cutoff"), "modes.eigenvalue_cutoff",
                                     positive=True, allow_none=True),
        "infrared_delta": _number(data.get("infrared_delta"), "modes.infrared_delta", allow_none=True),
        "budget": _integer(data.get("budget", LADDER_BUDGET), "modes.budget", minimum=1),
        "mus": None,
    }
    if data.get("mus") is not None:
        modes["mus"] = _number_list(data["mus"], "modes.mus")
    return modes


def parse_solver(data):
    _reject_unknown(data, _SOLVER_FIELDS, "solver")
    values = {}
    for key in ("rtol", "atol", "endpoint_margin", "cauchy_tol"):
        if key in data:
            values[key] = _number(data[key], f"solver.{key}", positive=True)
    if "method" in data:
        values["method"] = _choice(data["method"], "solver.method", SolverSettings.METHODS)
    for key in ("probes", "horizons"):
        if key in data:
            values[key] = _number_list(data[key], f"solver.{key}", positive=True)
    return SolverSettings(**values)


def _check_side(block, name):
    block["side"] = _choice(block["side"], f"{name}.side", Side.ALL)


def _validate_potential(block):
    if block["sides"] is not None:
        if not isinstance(block["sides"], list):
            raise ConfigError("必须为列表", field_path="potential.sides")
        for i, side in enumerate(block["sides"]):
            _choice(side, f"potential.sides[{i}]", Side.ALL)
    block["inner"] = _number(block["inner"], "potential.inner", positive=True)
    block["decades"] = _number(block["decades"], "potential.decades", positive=True)
    block["points"] = _integer(block["points"], "potential.points", minimum=3)


def _validate_cauchy(block, name):
    _check_side(block, name)
    block["tau0"] = _number(block["tau0"], f"{name}.tau0")
    for key in ("psi0", "dpsi0"):
        value = _complex(block[key], f"{name}.{key}")
        block[key] = [value.real, value.imag]


def _validate_evolve(block):
    _validate_cauchy(block, "evolve")
    for key in ("distances", "taus"):
        if block[key] is not None:
            block[key] = _number_list(block[key], f"evolve.{key}", positive=key == "distances")


def _validate_bogoliubov(block):
    block["channel"] = _choice(block["channel"], "bogoliubov.channel", ("pos", "neg"))
    if block["fit_window"] is not None:
        window = _number_list(block["fit_window"], "bogoliubov.fit_window", positive=True, min_length=2)
        if len(window) != 2 or not window[0] < window[1]:
            raise ConfigError("需要 [下限, 上限] 且下限 < 上限", field_path="bogoliubov.fit_window")
        block["fit_window"] = window
    if block["partial_cutoffs"] is not None:
        block["partial_cutoffs"] = _number_list(block["partial_cutoffs"], "bogoliubov.partial_cutoffs",
                                                positive=True)


_PROFILE_FIELDS = {
    "constant": {"value": 0.0},
    "gaussian": {"amplitude": 1.0, "width": 1.0, "center": 0.0},
    "chart": {},
}


def _validate_wkb(block):
    profile = block["profile"]
    if not isinstance(profile, dict):
        raise ConfigError("必须为JSON对象", field_path="wkb.profile")
    kind = _choice(profile.get("kind"), "wkb.profile.kind", tuple(_PROFILE_FIELDS))
    _reject_unknown(profile, ("kind",) + tuple(_PROFILE_FIELDS[kind]), "wkb.profile")
    normalized = {"kind": kind}
    for key, default in _PROFILE_FIELDS[kind].items():
        normalized[key] = _number(profile.get(key, default), f"wkb.profile.{key}",
                                  positive=key == "width")
    block["profile"] = normalized
    block["order"] = _integer(block["order"], "wkb.order", minimum=1)
    block["mus"] = _number_list(block["mus"], "wkb.mus", positive=True, min_length=2)
    span = _number_list(block["span"], "wkb.span", min_length=2)
    if len(span) != 2 or not span[0] < 0.0 < span[1]:
        raise ConfigError("需要 [左端, 右端] 且包含原点 0", field_path="wkb.span")
    block["span"] = span
    block["stride"] = _integer(block["stride"], "wkb.stride", minimum=1)


def _validate_riccati(block):
    block["gamma"] = _number(block["gamma"], "riccati.gamma")
    if not block["gamma"] > -2.0:
        raise ConfigError("需要 gamma > −2（∬V 有限）", field_path="riccati.gamma")
    block["coefficient"] = _number(block["coefficient"], "riccati.coefficient")
    block["M"] = _number(block["M"], "riccati.M")
    if not block["M"] > 1.0:
        raise ConfigError(f"需要 M > 1: {block['M']}", field_path="riccati.M")
    block["sign"] = _choice(block["sign"], "riccati.sign", ("PositiveRHS", "NegativeRHS"))
    block["tau_plus"] = _number(block["tau_plus"], "riccati.tau_plus")
    block["tau_one"] = _number(block["tau_one"], "riccati.tau_one")
    if not block["tau_one"] < block["tau_plus"]:
        raise ConfigError("需要 tau_one < tau_plus", field_path="riccati.tau_one")
    block["n_grid"] = _integer(block["n_grid"], "riccati.n_grid", minimum=10)
    block["grading"] = _number(block["grading"], "riccati.grading", positive=True)
    riemann = block["riemann"]
    if riemann is not None:
        if not isinstance(riemann, dict):
            raise ConfigError("必须为JSON对象", field_path="riccati.riemann")
        _reject_unknown(riemann, ("q", "lambdas"), "riccati.riemann")
        q = _number(_get(riemann, "q", "riccati.riemann"), "riccati.riemann.q")
        if not q > 0.25:
            raise ConfigError("需要 q > 1/4", field_path="riccati.riemann.q")
        lambdas = _number_list(riemann.get("lambdas", [10.0, 30.0, 100.0, 300.0]),
                               "riccati.riemann.lambdas", positive=True, min_length=2)
        if min(lambdas) < block["M"]:
            raise ConfigError("λ 必须 ≥ M", field_path="riccati.riemann.lambdas")
        block["riemann"] = {"q": q, "lambdas": lambdas}


def _validate_duffing(block):
    phi0s = _number_list(block["phi0"], "duffing.phi0")
    for i, phi0 in enumerate(phi0s):
        if phi0 == 0.0:
            raise ConfigError("φ₀ 不能为零", field_path=f"duffing.phi0[{i}]")
    block["phi0"] = phi0s


_VALIDATORS = {
    "potential": _validate_potential,
    "evolve": _validate_evolve,
    "asymptotics": lambda block: _validate_cauchy(block, "asymptotics"),
    "bogoliubov": _validate_bogoliubov,
    "wkb": _validate_wkb,
    "riccati": _validate_riccati,
    "duffing": _validate_duffing,
}


def parse_command_block(name, data):
    """补全默认值并校验命令块"""
    defaults = COMMAND_DEFAULTS[name]
    _reject_unknown(data, tuple(defaults), name)
    block = copy.deepcopy(defaults)
    block.update(data)
    _VALIDATORS[name](block)
    return block


class ScenarioConfig:
    """
    校验后的场景配置

    model、coupling、manifold、settings 为领域对象；blocks 保存补全默认值后的命令块。
    只含 wkb/riccati/duffing 块的配置可以省略 universe 与 coupling。
    """

    TOP_LEVEL = ("name", "universe", "coupling", "manifold", "modes", "solver") + tuple(COMMAND_DEFAULTS)

    def __init__(self, data):
        if not isinstance(data, dict):
            raise ConfigError("配置顶层必须为JSON对象")
        _reject_unknown(data, self.TOP_LEVEL, "")
        self.name = data.get("name", "scenario")
        if not isinstance(self.name, str):
            raise ConfigError("必须为字符串", field_path="name")

        self.model, self.t0 = (None, None)
        if "universe" in data:
            self.model, self.t0 = parse_universe(_block(data, "universe"))
        self.coupling = parse_coupling(_block(data, "coupling")) if "coupling" in data else None
        self.manifold = None
        if "manifold" in data:
            if self.coupling is None:
                raise ConfigError("manifold 需要同时给出 coupling", field_path="coupling")
            self.manifold = parse_manifold(_block(data, "manifold"), self.coupling.d)
        self.modes = parse_modes(_block(data, "modes") if "modes" in data else {})
        self.settings = parse_solver(_block(data, "solver") if "solver" in data else {})
        self.blocks = {name: parse_command_block(name, _block(data, name))
                       for name in COMMAND_DEFAULTS if name in data}
        self._hash = compute_config_hash(self.to_dict())

    @classmethod
    def from_file(cls, path):
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except OSError as e:
            raise ConfigError(f"无法读取配置文件 {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"配置文件 {path} 不是合法JSON: {e}") from e
        config = cls(data)
        logger.info(f"场景配置已加载: {config.name} ({path})")
        return config

    @property
    def config_hash(self):
        return self._hash

    def block(self, name):
        """命令块；配置中未出现时使用默认值"""
        if name in self.blocks:
            return self.blocks[name]
        return parse_command_block(name, {})

    def require_universe(self, command):
        if command in STANDALONE_COMMANDS:
            return
        if self.model is None:
            raise ConfigError(f"{command} 命令需要 universe 配置块", field_path="universe")
        if self.coupling is None:
            raise ConfigError(f"{command} 命令需要 coupling 配置块", field_path="coupling")

    def chart(self):
        return build_chart(self.model, self.t0)

    def spectrum(self, threads=1):
        """由 manifold 与 modes 构造 ShiftedSpectrum"""
        if self.manifold is None:
            raise ConfigError("需要 manifold 配置块", field_path="manifold")
        cutoff = self.modes["eigenvalue_cutoff"]
        if cutoff is None:
            raise ConfigError("缺少必填字段", field_path="modes.eigenvalue_cutoff")
        base = build_ladder(self.manifold, cutoff, self.modes["budget"], threads)
        delta = self.modes["infrared_delta"]
        return shift_and_cut(base, self.coupling, -math.inf if delta is None else delta)

    def mode_ladder(self, threads=1):
        """[(μ, 重数)]：优先使用 modes.mus（重数记为 1），否则由流形谱构造"""
        if self.modes["mus"] is not None:
            return [(mu, 1) for mu in self.modes["mus"]]
        return list(self.spectrum(threads).mu_ladder)

    def to_dict(self):
        data = {"name": self.name, "modes": dict(self.modes), "solver": self.settings.to_dict()}
        if self.model is not None:
            data["universe"] = self.model.to_dict()
            if self.t0 is not None:
                data["universe"]["t0"] = self.t0
        if self.coupling is not None:
            data["coupling"] = self.coupling.to_dict()
        if self.manifold is not None:
            data["manifold"] = self.manifold.to_dict()
        data.update(self.blocks)
        return data


def load_config(path):
    return ScenarioConfig.from_file(path)
