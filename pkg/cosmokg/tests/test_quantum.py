"""Bogoliubov系数、粒子对数目与可和性证书测试"""

import math

import pytest

from cosmokg.common import Side, SolverSettings, InsufficientDecades, NegativeFrequency, NoConvergence
from cosmokg.cosmology import ScaleFactorModel, build_chart
from cosmokg.dynamics import ExplicitPotential
from cosmokg.potential import CouplingSpec
from cosmokg.spectrum import FlatTorusTd, SphereSd, build_ladder, shift_and_cut, zeta_tail_bound
from cosmokg.quantum import (
    Channel, InOutBasis, in_vacuum_data, in_vacuum_seed, bogoliubov_explicit, bogoliubov_mode,
    bogoliubov_spectrum, BogoliubovRecord,
    BogoliubovData, pair_creation_number, hilbert_schmidt_certificate, step_potential_beta,
    ramp_potential, step_limit_beta,
)

TWO_PI = 2.0 * math.pi


def torus_spectrum(cutoff):
    return shift_and_cut(build_ladder(FlatTorusTd([TWO_PI] * 3), cutoff), 0.0, 0.5)


@pytest.mark.parametrize("omega", [0.3, 1.0, 7.0])
def test_in_vacuum_normalization(omega):
    for channel in Channel.ALL:
        psi, dpsi = in_vacuum_data(omega, channel)
        assert abs(psi) * abs(dpsi) == pytest.approx(0.5)
    psi, dpsi = in_vacuum_data(omega)
    assert (psi.conjugate() * dpsi).imag == pytest.approx(0.5)


def test_basis_frequency():
    basis = InOutBasis(Side.FUTURE, -2.0, math.inf)
    assert not basis.finite
    assert basis.frequency(6.0) == pytest.approx(2.0)
    with pytest.raises(NegativeFrequency):
        basis.frequency(1.0)


def ramp_coefficients(width, channel=Channel.POS):
    potential = ExplicitPotential(ramp_potential(0.0, 3.0, width))
    settings = SolverSettings(horizons=(20.0, 30.0, 40.0))
    in_basis = InOutBasis.for_potential(potential, Side.PAST, 0.0)
    out_basis = InOutBasis.for_potential(potential, Side.FUTURE, 3.0)
    return bogoliubov_explicit(potential, 1.0, in_basis, out_basis, settings, channel)


def test_tanh_ramp_matches_closed_form():
    alpha, beta = ramp_coefficients(0.5)
    assert abs(beta) == pytest.approx(step_potential_beta(0.5, 1.0, 2.0), abs=1e-6)
    assert abs(alpha) ** 2 - abs(beta) ** 2 == pytest.approx(1.0, abs=1e-6)


def test_negative_channel_gives_same_magnitudes():
    alpha_pos, beta_pos = ramp_coefficients(0.5)
    alpha_neg, beta_neg = ramp_coefficients(0.5, Channel.NEG)
    assert abs(beta_neg) == pytest.approx(abs(beta_pos), abs=1e-6)
    assert abs(alpha_neg) == pytest.approx(abs(alpha_pos), abs=1e-6)


def coulomb_tail(tau):
    # 过去端 V ~ 1/(2|τ|)：入视界上 α 的相位按 ln h 漂移
    return 0.5 / (1.0 - tau) if tau <= 0.0 else 0.5 * math.exp(-tau)


def test_unsettled_in_horizons_raise():
    potential = ExplicitPotential(coulomb_tail)
    settings = SolverSettings(horizons=(20.0, 40.0, 80.0, 160.0))
    in_basis = InOutBasis(Side.PAST, 0.0, -math.inf)
    out_basis = InOutBasis(Side.FUTURE, 0.0, math.inf)
    with pytest.raises(NoConvergence) as info:
        bogoliubov_explicit(potential, 1.0, in_basis, out_basis, settings)
    assert info.value.module == "quantum"


def test_step_limit():
    sudden = step_potential_beta(0.0, 1.0, 2.0)
    assert sudden == pytest.approx(1.0 / (2.0 * math.sqrt(2.0)))
    assert step_potential_beta(1e-4, 1.0, 2.0) == pytest.approx(sudden, rel=1e-6)
    assert step_potential_beta(0.5, 1.5, 1.5) == 0.0
    widths = [0.04, 0.02, 0.01]
    extrapolated = step_limit_beta(widths, [step_potential_beta(w, 1.0, 2.0) for w in widths])
    assert extrapolated == pytest.approx(sudden, rel=1e-6)
    with pytest.raises(ValueError):
        step_potential_beta(0.1, 0.0, 1.0)


def test_massless_conformal_field_creates_no_pairs():
    chart = build_chart(ScaleFactorModel.two_sided(0.0, 1.0, 1.0, 0.5, 1.0, 0.5))
    spectrum = torus_spectrum(5.0)
    data = bogoliubov_spectrum(chart, CouplingSpec.conformal(3), spectrum)
    assert data.N_pairs < 1e-10
    assert data.max_wronskian_residual < 1e-6
    assert [r.mu for r in data.records] == list(spectrum.mus)
    assert data.to_dict()["modes"] == len(spectrum.mu_ladder)


def test_single_mode_in_conformal_chart():
    chart = build_chart(ScaleFactorModel.two_sided(0.0, 1.0, 1.0, 0.5, 1.0, 0.5))
    coupling = CouplingSpec.conformal(3)
    in_basis = InOutBasis.for_chart(chart, coupling, Side.PAST)
    out_basis = InOutBasis.for_chart(chart, coupling, Side.FUTURE)
    assert in_basis.finite and out_basis.finite
    alpha, beta = bogoliubov_mode(chart, coupling, 4.0, in_basis, out_basis)
    assert abs(alpha) == pytest.approx(1.0, abs=1e-6)
    assert abs(beta) < 1e-6


def test_in_vacuum_seed_at_infinite_past():
    basis = InOutBasis(Side.PAST, 3.0, -math.inf)
    seed = in_vacuum_seed(basis, 1.0, horizon=10.0)
    phase = complex(math.cos(20.0), -math.sin(20.0))
    assert seed.tau == -10.0
    assert seed.psi == pytest.approx(0.5 * phase, abs=1e-14)
    assert seed.dpsi == pytest.approx(1j * phase, abs=1e-14)


def test_in_vacuum_seed_at_finite_past():
    basis = InOutBasis(Side.PAST, 0.0, -1.0)
    psi0, dpsi0 = in_vacuum_data(2.0)
    seed = in_vacuum_seed(basis, 4.0)
    offset = seed.tau + 1.0
    assert 0.0 < offset < 1e-3
    assert seed.psi == pytest.approx(psi0, abs=10.0 * offset)
    assert seed.dpsi == pytest.approx(dpsi0, abs=10.0 * offset)


def test_pair_creation_fit_recovers_power_law():
    spectrum = torus_spectrum(100.0)
    records = [BogoliubovRecord(mu, mult, math.sqrt(1.0 + mu ** -4), mu ** -2) for mu, mult in spectrum.mu_ladder]
    bogo = BogoliubovData(records, 0.0, 0.0)
    pairs = pair_creation_number(spectrum, bogo)
    assert pairs.decay_slope == pytest.approx(-2.0, abs=1e-10)
    assert pairs.N_pairs == pytest.approx(sum(mult * mu ** -4 for mu, mult in spectrum.mu_ladder))
    assert pairs.zeta_tail == pytest.approx(spectrum.zeta_tail_bound(4.0, 100.0), rel=1e-8)
    assert bogo.partial_sums([1.0])[0] == pytest.approx(6.0)
    assert hilbert_schmidt_certificate(3, pairs.decay_slope).certified


def test_pair_creation_tail_uses_shifted_ladder():
    # ξ = −1/2 在 S³ 上把阶梯整体下移 3
    spectrum = shift_and_cut(build_ladder(SphereSd(3), 10000.0), -0.5, 0.5)
    assert spectrum.shift == -3.0
    records = [BogoliubovRecord(mu, mult, math.sqrt(1.0 + mu ** -4), mu ** -2) for mu, mult in spectrum.mu_ladder]
    pairs = pair_creation_number(spectrum, BogoliubovData(records, 0.0, 0.0))
    top = float(spectrum.mus.max())
    assert pairs.zeta_tail == pytest.approx(spectrum.zeta_tail_bound(4.0, top), rel=1e-8)
    assert pairs.zeta_tail > zeta_tail_bound(spectrum.base, 4.0, top)


def test_vanishing_beta_short_circuits():
    spectrum = torus_spectrum(100.0)
    bogo = BogoliubovData([BogoliubovRecord(mu, mult, 1.0, 0.0) for mu, mult in spectrum.mu_ladder], 0.0, 0.0)
    pairs = pair_creation_number(spectrum, bogo)
    assert pairs.N_pairs == 0.0
    assert pairs.decay_slope == -math.inf


def test_insufficient_decades():
    spectrum = torus_spectrum(5.0)
    bogo = BogoliubovData([BogoliubovRecord(mu, mult, 1.0, 0.1) for mu, mult in spectrum.mu_ladder], 0.0, 0.0)
    with pytest.raises(InsufficientDecades):
        pair_creation_number(spectrum, bogo)


@pytest.mark.parametrize("d, certified", [(3, True), (5, True), (7, False)])
def test_hilbert_schmidt_certificate(d, certified):
    certificate = hilbert_schmidt_certificate(d, -1.5)
    assert certificate.exponent == pytest.approx(3.0)
    assert certificate.certified is certified
    assert certificate.margin == pytest.approx(3.0 - d / 2.0)
