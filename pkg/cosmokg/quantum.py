"""
粒子产生模块 (Quantum Module)

计算初始奇点处的入真空与最终奇点处出基之间的逐模 Bogoliubov 系数、粒子对数目 𝒩，
以及 β 衰减的关键估计与 zeta 函数可和性证书。
主要功能：
- 入真空初值：有限 τ₋ 取端点数据，无穷 τ₋ 取远视界处的振荡形式并对视界外推
- 逐模 (α, β)：有限 τ₊ 由极限提取 (λ₀, λ₁)，无穷 τ₊ 由散射数据给出
- 正/负频两个通道（负频通道用共轭初值，|α|、|β| 应一致）
- 𝒩 = Σ mult·|β|²、衰减斜率、zeta 尾部估计与 Hilbert-Schmidt 证书
- tanh 斜坡势的闭式 |β|，作为有限宽度的预言机

约定：正频基 Φ_pos ∝ 2^{−1/2}(ω^{−1/2}, iω^{1/2})，对应 e^{+iωτ}；β 为 e^{−iωτ} 分量的系数。
"""

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .common import (
    DEFAULT_HORIZONS, SCATTERING_TOL, Side, SolverSettings, DivergentSeries, InsufficientDecades,
    NegativeFrequency, NoConvergence, get_logger,
)
from .dynamics import (
    ChartPotential, ModeState, bogoliubov_coefficients, limit_data, scattering_data,
)
from .potential import scattering_table
from .utils import aitken_extrapolate, loglog_slope, richardson_extrapolate

logger = get_logger("quantum")

# 有限 τ₋ 处Taylor起步的距离
SEED_OFFSET = 1e-8
NORMALIZATION_TOL = 1e-8


class Channel:
    POS = "pos"
    NEG = "neg"

    ALL = (POS, NEG)


class InOutBasis:
    """side 端的入/出基：频率 ω = √(μ + V±)"""

    def __init__(self, side, V_limit, endpoint):
        if side not in Side.ALL:
            raise ValueError(f"未知端点: {side}")
        self.side = side
        self.V_limit = float(V_limit)
        self.endpoint = float(endpoint)

    @property
    def finite(self):
        return math.isfinite(self.endpoint)

    @classmethod
    def for_chart(cls, chart, coupling, side):
        v_minus, v_plus = scattering_table(chart.model, coupling, chart)
        limit = v_plus if side == Side.FUTURE else v_minus
        endpoint = chart.tau_plus if side == Side.FUTURE else chart.tau_minus
        return cls(side, limit, endpoint)

    @classmethod
    def for_potential(cls, potential, side, V_limit):
        return cls(side, V_limit, potential.endpoint(side))

    def frequency(self, mu):
        omega2 = mu + self.V_limit
        if omega2 <= 0:
            raise NegativeFrequency(f"μ + V = {omega2:.6g} ≤ 0（{self.side} 端），需要红外截断")
        return math.sqrt(omega2)

    def to_dict(self):
        return {"side": self.side, "V_limit": self.V_limit, "endpoint": self.endpoint,
                "finite": self.finite}


def in_vacuum_data(omega, channel=Channel.POS):
    """(ψ, ψ′) = 2^{−1/2}(ω^{−1/2}, ±iω^{1/2})"""
    sign = 1.0 if channel == Channel.POS else -1.0
    return 2.0 ** -0.5 / math.sqrt(omega), sign * 1j * 2.0 ** -0.5 * math.sqrt(omega)


def in_vacuum_seed(basis, mu, channel=Channel.POS, horizon=DEFAULT_HORIZONS[0]):
    """
    入真空的初始状态

    有限 τ₋：从端点数据出发用Taylor展开前进 SEED_OFFSET；
    无穷 τ₋：在 τ = −horizon 处取 2^{−1/2}ω^{−1/2}e^{±iωτ}。
    """
    omega = basis.frequency(mu)
    psi0, dpsi0 = in_vacuum_data(omega, channel)
    if basis.finite:
        eps = SEED_OFFSET
        psi = psi0 + dpsi0 * eps
        dpsi = dpsi0 - omega * omega * psi0 * eps
        return ModeState(mu, basis.endpoint + eps, psi, dpsi, side=Side.PAST, distance=eps)
    tau = -float(horizon)
    sign = 1.0 if channel == Channel.POS else -1.0
    phase = np.exp(sign * 1j * omega * tau)
    return ModeState(mu, tau, psi0 * phase, dpsi0 * phase)


def _past_horizons(potential, settings):
    limit = abs(potential.tau_limit(Side.PAST))
    horizons = []
    for h in settings.horizons:
        if h >= limit:
            clipped = limit * (1.0 - 1e-9)
            logger.warning(f"入视界 {h:g} 超出 {Side.PAST} 端可表示范围，截为 {clipped:.6g}")
            h = clipped
        if not horizons or h > horizons[-1]:
            horizons.append(h)
    return horizons


def _out_coefficients(potential, mu, state, out_basis, settings):
    if out_basis.finite:
        record = limit_data(potential, mu, state, Side.FUTURE, settings)
        omega = out_basis.frequency(mu)
        return bogoliubov_coefficients(record.phi0, record.phi1, omega, 0.0)
    result = scattering_data(potential, mu, state, out_basis.V_limit, Side.FUTURE, settings)
    return result.alpha, result.beta


def _channel_pair(pair, channel):
    # 负频通道的解是正频解的共轭：e^{−iωτ} 分量对应 α
    if channel == Channel.POS:
        return pair
    return pair[1], pair[0]


def bogoliubov_explicit(potential, mu, in_basis, out_basis, settings=None, channel=Channel.POS,
                        tolerance=SCATTERING_TOL):
    """对任意势（ChartPotential 或 ExplicitPotential）计算 (α, β)"""
    settings = settings or SolverSettings()
    if in_basis.finite:
        seed = in_vacuum_seed(in_basis, mu, channel)
        return _channel_pair(_out_coefficients(potential, mu, seed, out_basis, settings), channel)

    pairs = []
    for h in _past_horizons(potential, settings):
        seed = in_vacuum_seed(in_basis, mu, channel, h)
        pairs.append(_channel_pair(_out_coefficients(potential, mu, seed, out_basis, settings), channel))
    if len(pairs) == 1:
        return pairs[0]
    # 入视界上的相位随 h 稳定后再外推
    alpha, err_a = aitken_extrapolate([p[0] for p in pairs])
    beta, err_b = aitken_extrapolate([p[1] for p in pairs])
    error = max(err_a / (1.0 + abs(alpha)), err_b / (1.0 + abs(beta)))
    if error > tolerance:
        raise NoConvergence(f"μ={mu}: 入视界序列上 (α, β) 不收敛（相对误差 {error:.3e}）",
                            module="quantum")
    return alpha, beta


def bogoliubov_mode(chart, coupling, mu, in_basis, out_basis, settings=None, channel=Channel.POS):
    """沿共形坐标从入真空积分到出端，返回 (α, β)"""
    return bogoliubov_explicit(ChartPotential(chart, coupling), mu, in_basis, out_basis,
                               settings, channel)


class BogoliubovRecord:
    def __init__(self, mu, mult, alpha, beta):
        self.mu = float(mu)
        self.mult = int(mult)
        self.alpha = complex(alpha)
        self.beta = complex(beta)

    @property
    def abs_beta_sq(self):
        return abs(self.beta) ** 2

    @property
    def wronskian_residual(self):
        """||α|² − |β|² − 1|"""
        return abs(abs(self.alpha) ** 2 - abs(self.beta) ** 2 - 1.0)

    def row(self):
        return (self.mu, self.mult, self.alpha.real, self.alpha.imag, self.beta.real,
                self.beta.imag, self.abs_beta_sq, self.wronskian_residual)

    def to_dict(self):
        return {"mu": self.mu, "mult": self.mult, "alpha": self.alpha, "beta": self.beta,
                "wronskian_residual": self.wronskian_residual}


class BogoliubovData:
    """逐模 Bogoliubov 数据"""

    CSV_HEADER = ["mu", "mult", "re_alpha", "im_alpha", "re_beta", "im_beta", "abs_beta_sq",
                  "wronskian_residual"]

    def __init__(self, records, V_minus, V_plus, channel=Channel.POS):
        self.records = list(records)
        self.V_minus = V_minus
        self.V_plus = V_plus
        self.channel = channel
        self.tail_bound = None

    @property
    def mus(self):
        return np.array([r.mu for r in self.records])

    @property
    def N_pairs(self):
        return float(sum(r.mult * r.abs_beta_sq for r in self.records))

    @property
    def max_wronskian_residual(self):
        return max((r.wronskian_residual for r in self.records), default=0.0)

    def rows(self):
        return [r.row() for r in self.records]

    def partial_sums(self, cutoffs):
        """按 μ 截断的 𝒩 部分和"""
        return [float(sum(r.mult * r.abs_beta_sq for r in self.records if r.mu <= c))
                for c in cutoffs]

    def to_dict(self):
        return {
            "channel": self.channel,
            "V_minus": self.V_minus,
            "V_plus": self.V_plus,
            "modes": len(self.records),
            "N_pairs": self.N_pairs,
            "tail_bound": self.tail_bound,
            "max_wronskian_residual": self.max_wronskian_residual,
        }


def bogoliubov_spectrum(chart, coupling, spectrum, settings=None, threads=1, channel=Channel.POS):
    """对 ShiftedSpectrum 的每个模式计算 (α, β)，结果按 μ 顺序排列"""
    settings = settings or SolverSettings()
    in_basis = InOutBasis.for_chart(chart, coupling, Side.PAST)
    out_basis = InOutBasis.for_chart(chart, coupling, Side.FUTURE)

    def run(entry):
        mu, mult = entry
        alpha, beta = bogoliubov_mode(chart, coupling, mu, in_basis, out_basis, settings, channel)
        record = BogoliubovRecord(mu, mult, alpha, beta)
        if record.wronskian_residual > NORMALIZATION_TOL:
            logger.warning(f"μ={mu:g}: |α|²−|β|²−1 = {record.wronskian_residual:.3e}")
        return record

    ladder = list(spectrum.mu_ladder)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            records = list(executor.map(run, ladder))
    else:
        records = [run(entry) for entry in ladder]
    data = BogoliubovData(records, in_basis.V_limit, out_basis.V_limit, channel)
    logger.info(f"已计算 {len(records)} 个模式的 Bogoliubov 系数, 𝒩 = {data.N_pairs:.6e}")
    return data


class PairCreation:
    """𝒩、β 衰减斜率与 zeta 尾部估计"""

    def __init__(self, N_pairs, decay_slope, zeta_tail, window, intercept=None):
        self.N_pairs = N_pairs
        self.decay_slope = decay_slope
        self.zeta_tail = zeta_tail
        self.window = window
        self.intercept = intercept

    def to_dict(self):
        return {"N_pairs": self.N_pairs, "decay_slope": self.decay_slope,
                "zeta_tail": self.zeta_tail, "fit_window": list(self.window)}


def default_fit_window(mus):
    """最大 μ 以下两个数量级，去掉最高的半个数量级"""
    top = float(np.max(mus))
    return top * 10.0 ** -2.5, top * 10.0 ** -0.5


def pair_creation_number(spectrum, bogo, fit_window=None):
    """
    𝒩 = Σ mult·|β|²；在 fit_window 内拟合 log|β| 对 log μ 的斜率，
    并假设 |β|² ≤ Cμ^{−s}（s = −2·斜率）用移位阶梯上的 zeta 尾部估计截断之外的贡献
    """
    mus = bogo.mus
    positive = mus[mus > 0]
    if positive.size == 0 or math.log10(positive.max() / positive.min()) < 2.0:
        raise InsufficientDecades("μ 数据不足两个数量级")
    N = bogo.N_pairs
    if all(r.abs_beta_sq == 0.0 for r in bogo.records):
        return PairCreation(0.0, -math.inf, 0.0, fit_window or default_fit_window(positive))

    window = fit_window or default_fit_window(positive)
    selected = [r for r in bogo.records if window[0] <= r.mu <= window[1] and r.abs_beta_sq > 0]
    if len(selected) < 2:
        raise InsufficientDecades(f"拟合窗口 [{window[0]:.3g}, {window[1]:.3g}] 内的模式不足两个")
    slope, intercept = loglog_slope([r.mu for r in selected], [abs(r.beta) for r in selected])

    s = -2.0 * slope
    try:
        tail = math.exp(2.0 * intercept) * spectrum.zeta_tail_bound(s, float(positive.max()))
    except DivergentSeries as e:
        logger.warning(f"zeta 尾部发散: {e}")
        tail = math.inf
    bogo.tail_bound = tail
    logger.info(f"𝒩 = {N:.6e}, β 衰减斜率 {slope:.3f}, 尾部估计 {tail:.3e}")
    return PairCreation(N, slope, tail, window, intercept)


class Certificate:
    def __init__(self, certified, exponent, threshold):
        self.certified = certified
        self.exponent = exponent
        self.threshold = threshold

    @property
    def margin(self):
        return self.exponent - self.threshold

    def to_dict(self):
        return {"certified": self.certified, "exponent": self.exponent,
                "threshold": self.threshold, "margin": self.margin}


def hilbert_schmidt_certificate(d, slope):
    """Σ mult·μ^{2·slope} < ∞ 当且仅当 −2·slope > d/2"""
    exponent = -2.0 * slope
    threshold = d / 2.0
    return Certificate(exponent > threshold, exponent, threshold)


def step_potential_beta(w, omega_minus, omega_plus):
    """
    V = V₋ + (V₊ − V₋)(1 + tanh(τ/w))/2 的闭式 |β|：
    |β|² = sinh²(πw(ω₊−ω₋)/2)/(sinh(πwω₋)·sinh(πwω₊))；w → 0 时为 (ω₊−ω₋)/(2√(ω₊ω₋))
    """
    if omega_minus <= 0 or omega_plus <= 0:
        raise ValueError("频率必须为正")
    if w == 0:
        return abs(omega_plus - omega_minus) / (2.0 * math.sqrt(omega_plus * omega_minus))
    x = math.pi * w
    beta2 = math.sinh(0.5 * x * (omega_plus - omega_minus)) ** 2 \
        / (math.sinh(x * omega_minus) * math.sinh(x * omega_plus))
    return math.sqrt(beta2)


def ramp_potential(v_minus, v_plus, width):
    """tanh 斜坡势 V(τ)"""
    return lambda tau: v_minus + 0.5 * (v_plus - v_minus) * (1.0 + math.tanh(tau / width))


def step_limit_beta(widths, betas):
    """对若干斜坡宽度上的 |β| 做 w → 0 的Richardson外推（误差为 w²）"""
    return richardson_extrapolate(widths, betas, 2)
