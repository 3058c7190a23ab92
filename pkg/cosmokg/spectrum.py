"""
谱模块 (Spectrum Module)

该模块提供紧致空间流形 K 上 −Δ_K 的特征值阶梯、标量曲率、移位算子
−Δ_K + ξR_γ 的谱、红外截断投影以及谱zeta函数的部分和。
主要功能：
- 球面 S^d（半径 r）与平坦环面 T^d（边长 L₁…L_d）
- 特征值阶梯 build_ladder：按截断值精确枚举，合并重数，条目预算保护
- 移位与截断 shift_and_cut：μ = λ + ξR_γ，去掉 μ < δ 的模
- zeta部分和与基于Weyl增长的尾部估计
- l(d) = max(2, ⌊d/2⌋)

环面枚举按第一个坐标分壳并行，边长可公度时用整数键精确合并特征值。
"""

import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

from .common import (
    LADDER_BUDGET, ManifoldKind, CutoffTooLarge, EmptySpectrum, DivergentSeries, get_logger,
)

logger = get_logger("spectrum")

_INCOMMENSURATE_TOL = 1e-12


class SphereSd:
    """半径为 r 的球面 S^d"""
    kind = ManifoldKind.SPHERE

    def __init__(self, d, radius=1.0):
        if int(d) != d or d < 3:
            raise ValueError(f"维数需为 ≥ 3 的整数: {d}")
        if radius <= 0:
            raise ValueError(f"半径必须为正: {radius}")
        self.d = int(d)
        self.radius = float(radius)

    @property
    def R_gamma(self):
        return self.d * (self.d - 1) / self.radius ** 2

    def eigenvalue(self, k):
        return k * (k + self.d - 1) / self.radius ** 2

    def multiplicity(self, k):
        """(2k+d−1)(k+d−2)! / (k!(d−1)!)"""
        d = self.d
        return (2 * k + d - 1) * math.factorial(k + d - 2) // (math.factorial(k) * math.factorial(d - 1))

    def to_dict(self):
        return {"kind": self.kind, "d": self.d, "radius": self.radius}


class FlatTorusTd:
    """边长为 L₁…L_d 的平坦环面"""
    kind = ManifoldKind.TORUS

    def __init__(self, lengths):
        lengths = [float(x) for x in lengths]
        if len(lengths) < 3:
            raise ValueError(f"环面维数需 ≥ 3: {len(lengths)}")
        if any(x <= 0 for x in lengths):
            raise ValueError("边长必须为正")
        self.lengths = lengths
        self.d = len(lengths)

    @property
    def R_gamma(self):
        return 0.0

    def integer_weights(self):
        """
        可公度时返回 (整数权重 W_i, 标度)，使 λ = 标度·Σ W_i n_i²；否则返回 None
        """
        base = self.lengths[0]
        ratios = []
        for length in self.lengths:
            ratio = Fraction(base / length).limit_denominator(10 ** 6)
            if abs(float(ratio) - base / length) > 1e-15 * (base / length):
                return None
            ratios.append(ratio * ratio)
        denominator = math.lcm(*(r.denominator for r in ratios))
        weights = [int(r * denominator) for r in ratios]
        scale = (2.0 * math.pi / base) ** 2 / denominator
        return weights, scale

    def to_dict(self):
        return {"kind": self.kind, "lengths": list(self.lengths)}


def manifold_from_dict(data):
    kind = data.get("kind")
    if kind == ManifoldKind.SPHERE:
        return SphereSd(data["d"], data.get("radius", 1.0))
    if kind == ManifoldKind.TORUS:
        return FlatTorusTd(data["lengths"])
    raise ValueError(f"未知流形种类: {kind}")


class ManifoldSpectrum:
    """流形及其升序、无重复的特征值阶梯 [(λ, 重数)]"""

    def __init__(self, manifold, cutoff, ladder):
        self.manifold = manifold
        self.cutoff = float(cutoff)
        self.ladder = list(ladder)

    @property
    def kind(self):
        return self.manifold.kind

    @property
    def d(self):
        return self.manifold.d

    @property
    def R_gamma(self):
        return self.manifold.R_gamma

    @property
    def eigenvalues(self):
        return np.array([lam for lam, _ in self.ladder], dtype=float)

    @property
    def multiplicities(self):
        return np.array([mult for _, mult in self.ladder], dtype=np.int64)

    @property
    def total_multiplicity(self):
        return int(sum(mult for _, mult in self.ladder))

    def counting_function(self, bound):
        """N(Λ)：λ ≤ Λ 的特征值个数（计重数）"""
        return int(sum(mult for lam, mult in self.ladder if lam <= bound))

    def to_dict(self):
        return {
            "manifold": self.manifold.to_dict(),
            "cutoff": self.cutoff,
            "R_gamma": self.R_gamma,
            "entries": len(self.ladder),
            "total_multiplicity": self.total_multiplicity,
        }


class ShiftedSpectrum:
    """−Δ_K + ξR_γ 的谱，已去掉 μ < δ 的模"""

    def __init__(self, base, xi, delta, mu_ladder):
        self.base = base
        self.xi = xi
        self.delta = delta
        self.mu_ladder = list(mu_ladder)

    @property
    def mus(self):
        return np.array([mu for mu, _ in self.mu_ladder], dtype=float)

    @property
    def multiplicities(self):
        return np.array([mult for _, mult in self.mu_ladder], dtype=np.int64)

    @property
    def shift(self):
        return _shift(self.base, self.xi)

    def zeta_tail_bound(self, s, bound):
        """
        移位阶梯上 Σ_{μ>M} mult·μ^{−s} 的估计

        μ 的计数函数为 N(μ − shift)；μ ≥ M 时 (μ − shift)^{d/2} ≤ (1 − shift/M)^{d/2}·μ^{d/2}
        """
        if not bound > 0:
            raise ValueError(f"尾部起点必须为正: {bound}")
        factor = max(1.0, 1.0 - self.shift / bound) ** (self.base.d / 2.0)
        return factor * zeta_tail_bound(self.base, s, bound)

    def rows(self):
        """CSV 行 (index, lambda, mult, mu)"""
        shift = self.shift
        return [(i, mu - shift, mult, mu) for i, (mu, mult) in enumerate(self.mu_ladder)]

    def to_dict(self):
        return {
            "base": self.base.to_dict(),
            "xi": float(self.xi),
            "delta": self.delta,
            "modes": len(self.mu_ladder),
        }


def _weyl_estimate(manifold, cutoff):
    # 单位球体积 × 环面体积 /(2π)^d
    d = manifold.d
    ball = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
    volume = math.prod(manifold.lengths)
    return ball * cutoff ** (d / 2) * volume / (2 * math.pi) ** d


def _sphere_ladder(manifold, cutoff, budget):
    ladder = []
    total = 0
    k = 0
    while manifold.eigenvalue(k) <= cutoff:
        mult = manifold.multiplicity(k)
        total += mult
        if total > budget:
            raise CutoffTooLarge(f"截断 {cutoff} 下阶梯条目超过预算 {budget}")
        ladder.append((manifold.eigenvalue(k), mult))
        k += 1
    return ladder


def _torus_shell(manifold, cutoff, n1, weights):
    """固定第一个坐标 n₁ 的格点壳：返回 {键: 计数}"""
    lengths = manifold.lengths
    first = (2.0 * math.pi * n1 / lengths[0]) ** 2
    remaining = cutoff - first
    bounds = [int(math.floor(L * math.sqrt(max(remaining, 0.0)) / (2.0 * math.pi))) for L in lengths[1:]]
    axes = [np.arange(-b, b + 1, dtype=np.int64) for b in bounds]
    grid = np.meshgrid(*axes, indexing="ij")

    if weights is not None:
        integer_weights, scale = weights
        keys = integer_weights[0] * n1 * n1
        for w, n in zip(integer_weights[1:], grid):
            keys = keys + w * n * n
        keys = keys.ravel()
        keys = keys[keys * scale <= cutoff * (1.0 + 1e-14)]
    else:
        keys = first
        for L, n in zip(lengths[1:], grid):
            keys = keys + (2.0 * math.pi * n / L) ** 2
        keys = keys.ravel()
        keys = keys[keys <= cutoff]
    values, counts = np.unique(keys, return_counts=True)
    return dict(zip(values.tolist(), counts.tolist()))


def _torus_ladder(manifold, cutoff, budget, threads):
    estimate = _weyl_estimate(manifold, cutoff)
    if estimate > 1.5 * budget:
        raise CutoffTooLarge(f"截断 {cutoff} 下预计约 {estimate:.3g} 个模，超过预算 {budget}")

    weights = manifold.integer_weights()
    n_max = int(math.floor(manifold.lengths[0] * math.sqrt(cutoff) / (2.0 * math.pi)))
    shells = list(range(-n_max, n_max + 1))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            results = list(executor.map(lambda n1: _torus_shell(manifold, cutoff, n1, weights), shells))
    else:
        results = [_torus_shell(manifold, cutoff, n1, weights) for n1 in shells]

    merged = {}
    for shell in results:
        for key, count in shell.items():
            merged[key] = merged.get(key, 0) + count
    total = sum(merged.values())
    if total > budget:
        raise CutoffTooLarge(f"截断 {cutoff} 下阶梯条目 {total} 超过预算 {budget}")

    if weights is not None:
        scale = weights[1]
        return [(key * scale, merged[key]) for key in sorted(merged)]

    # 不可公度：绝对容差合并
    ladder = []
    for lam in sorted(merged):
        if ladder and lam - ladder[-1][0] <= _INCOMMENSURATE_TOL:
            ladder[-1] = (ladder[-1][0], ladder[-1][1] + merged[lam])
        else:
            ladder.append((lam, merged[lam]))
    return ladder


def build_ladder(manifold, cutoff, budget=LADDER_BUDGET, threads=1):
    """枚举 λ ≤ cutoff 的全部特征值及重数"""
    if cutoff <= 0:
        raise ValueError(f"截断值必须为正: {cutoff}")
    if manifold.kind == ManifoldKind.SPHERE:
        ladder = _sphere_ladder(manifold, cutoff, budget)
    else:
        ladder = _torus_ladder(manifold, cutoff, budget, threads)
    spectrum = ManifoldSpectrum(manifold, cutoff, ladder)
    logger.info(f"特征值阶梯已构建: {manifold.kind}, 截断 {cutoff:g}, "
                f"{len(ladder)} 个不同特征值, 总重数 {spectrum.total_multiplicity}")
    return spectrum


def _shift(base, xi):
    if base.R_gamma == 0.0:
        return 0.0
    return float(Fraction(xi) * Fraction(base.R_gamma))


def shift_and_cut(base, xi, delta):
    """μ = λ + ξR_γ，去掉 μ < δ 的条目（δ 可取 −inf）"""
    xi = getattr(xi, "xi", xi)
    shift = _shift(base, xi)
    mu_ladder = [(lam + shift, mult) for lam, mult in base.ladder if lam + shift >= delta]
    if not mu_ladder:
        raise EmptySpectrum(f"δ = {delta} 截断后无剩余模")
    dropped = len(base.ladder) - len(mu_ladder)
    if dropped:
        logger.debug(f"红外截断去掉了 {dropped} 个特征值")
    return ShiftedSpectrum(base, xi, delta, mu_ladder)


def weyl_constant(base):
    """sup N(λ)/λ^{d/2}，取阶梯上半部分的正特征值"""
    half = base.d / 2.0
    positive = [(lam, mult) for lam, mult in base.ladder if lam > 0]
    if not positive:
        raise EmptySpectrum("没有正特征值")
    top = positive[-1][0]
    count = base.counting_function(0.0)
    best = 0.0
    for lam, mult in positive:
        count += mult
        if lam >= 0.5 * top:
            best = max(best, count / lam ** half)
    return best


def zeta_tail_bound(base, s, bound):
    """
    Σ_{λ>Λ} mult·λ^{−s} 的估计：由 N(λ) ≤ C λ^{d/2}，
    分部积分得 ≤ s·C·Λ^{d/2−s}/(s − d/2)
    """
    half = base.d / 2.0
    if s <= half:
        raise DivergentSeries(f"s = {s} ≤ d/2 = {half}，zeta级数发散")
    return s * weyl_constant(base) * bound ** (half - s) / (s - half)


def zeta_partial(base, s, n_terms=None):
    """前 n_terms 个正特征值的 Σ mult·λ^{−s} 与尾部估计"""
    half = base.d / 2.0
    if s <= half:
        raise DivergentSeries(f"s = {s} ≤ d/2 = {half}，zeta级数发散")
    positive = [(lam, mult) for lam, mult in base.ladder if lam > 0]
    if n_terms is not None:
        positive = positive[:n_terms]
    if not positive:
        raise EmptySpectrum("没有正特征值")
    lams = np.array([lam for lam, _ in positive])
    mults = np.array([mult for _, mult in positive], dtype=float)
    partial = float(np.sum(mults * lams ** (-s)))
    return partial, zeta_tail_bound(base, s, float(lams[-1]))


def l_of_d(d):
    """l(d) = max(2, ⌊d/2⌋)"""
    if d < 3:
        raise ValueError(f"需要 d ≥ 3: {d}")
    return max(2, d // 2)
