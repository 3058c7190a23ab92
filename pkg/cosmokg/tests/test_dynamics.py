"""模式积分、极限提取与散射数据测试"""

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings, strategies as st
from scipy import special

from cosmokg.common import (
    Side, DivergenceKind, SolverSettings, EndpointReached, NegativeFrequency, NoConvergence,
    PreconditionViolated,
)
from cosmokg.cosmology import ScaleFactorModel, build_chart
from cosmokg.potential import CouplingSpec
from cosmokg.spectrum import FlatTorusTd, build_ladder, shift_and_cut
from cosmokg.dynamics import (
    liouville_forward, liouville_inverse, wronskian, conserved_charge, Probe, ModeState,
    ExplicitPotential, integrate_mode, evolve_modes, sample_mode, bogoliubov_coefficients,
    CauchyData, limit_data, extract_limit_data, fit_divergence, scattering_data,
    verify_decay_theorem, picard_from_endpoint, extract_divergence_rate, scattering_data_infinite_tau,
    exploratory_power_fit, fit_oscillating_divergence, oscillating_divergence_rate, asymptotic_record,
    DIVERGENT,
)
from cosmokg.utils import geometric_probes


def free_potential(**kwargs):
    return ExplicitPotential(lambda tau: 0.0, **kwargs)


@given(st.floats(0.1, 10.0), st.floats(-10.0, 10.0), st.integers(3, 7),
       st.floats(-10.0, 10.0), st.floats(-10.0, 10.0))
@hyp_settings(max_examples=50)
def test_liouville_inverse_undoes_forward(a, a_t, d, u0, u1):
    phi0, phi1 = liouville_forward(u0, u1, a, a_t, d)
    back0, back1 = liouville_inverse(phi0, phi1, a, a_t, d)
    assert back0 == pytest.approx(u0, rel=1e-9, abs=1e-9)
    assert back1 == pytest.approx(u1, rel=1e-9, abs=1e-9)


def test_conserved_charge_of_single_solution():
    psi, dpsi = 0.3 + 0.4j, -1.2 + 0.5j
    charge = conserved_charge(psi, dpsi, psi, dpsi)
    assert charge == pytest.approx(2j * (psi.conjugate() * dpsi).imag)


def test_probe_validation():
    with pytest.raises(ValueError):
        Probe("Sideways", 1.0)
    with pytest.raises(ValueError):
        Probe(Side.FUTURE, 0.0)


def test_explicit_potential_validation():
    with pytest.raises(PreconditionViolated):
        ExplicitPotential(lambda x: 0.0, variable="distance")
    with pytest.raises(ValueError):
        ExplicitPotential(lambda x: 0.0, tau_minus=1.0, tau_plus=0.0)
    with pytest.raises(ValueError):
        ExplicitPotential(lambda x: 0.0, variable="time")


def test_free_mode_matches_cosine():
    state = ModeState(4.0, 0.0, 1.0, 0.0)
    final = integrate_mode(free_potential(), 4.0, state, 1.0)
    assert final.psi == pytest.approx(math.cos(2.0), abs=1e-8)
    assert final.dpsi == pytest.approx(-2.0 * math.sin(2.0), abs=1e-8)


def test_integration_crosses_split_point():
    state = ModeState(1.0, -1.5, math.cos(-1.5), -math.sin(-1.5))
    final = integrate_mode(free_potential(), 1.0, state, 2.0)
    assert final.psi == pytest.approx(math.cos(2.0), abs=1e-8)


def test_wronskian_is_conserved():
    pot = ExplicitPotential(lambda tau: 1.0 / (1.0 + tau * tau))
    first = integrate_mode(pot, 2.0, ModeState(2.0, 0.0, 1.0, 0.0), 5.0)
    second = integrate_mode(pot, 2.0, ModeState(2.0, 0.0, 0.0, 1.0), 5.0)
    assert wronskian(first.psi, first.dpsi, second.psi, second.dpsi) == pytest.approx(1.0, abs=1e-8)


def test_sample_mode_records_requested_points():
    trajectory = sample_mode(free_potential(), 4.0, ModeState(4.0, 0.0, 1.0, 0.0), [0.5, 1.0, 1.5])
    assert list(trajectory.tau) == pytest.approx([0.5, 1.0, 1.5])
    assert list(trajectory.psi.real) == pytest.approx([math.cos(2 * p) for p in (0.5, 1.0, 1.5)],
                                                      abs=1e-8)
    assert len(trajectory.rows()[0]) == 5

    starting = sample_mode(free_potential(), 4.0, ModeState(4.0, 0.0, 1.0, 0.0), [0.0, 1.0])
    assert len(starting.states) == 2
    assert starting.states[0].psi == 1.0


def test_evolve_modes_is_thread_independent():
    pot = ExplicitPotential(lambda tau: math.exp(-tau * tau))
    states = [ModeState(mu, 0.0, 1.0, 0.5) for mu in (0.5, 1.0, 2.0, 4.0)]
    serial = evolve_modes(pot, states, 3.0)
    threaded = evolve_modes(pot, states, 3.0, threads=3)
    assert [s.psi for s in serial] == [s.psi for s in threaded]
    assert [s.mu for s in threaded] == [0.5, 1.0, 2.0, 4.0]


def test_target_beyond_endpoint_is_rejected():
    pot = free_potential(tau_plus=1.0)
    state = ModeState(1.0, 0.0, 1.0, 0.0)
    with pytest.raises(EndpointReached):
        integrate_mode(pot, 1.0, state, 1.5)
    with pytest.raises(EndpointReached):
        integrate_mode(pot, 1.0, state, Probe(Side.FUTURE, 1e-20))


def test_limit_data_for_free_mode():
    record = limit_data(free_potential(tau_plus=1.0), 4.0, ModeState(4.0, 0.0, 1.0, 0.0), Side.FUTURE)
    assert record.phi0 == pytest.approx(math.cos(2.0), abs=1e-7)
    assert record.phi1 == pytest.approx(-2.0 * math.sin(2.0), abs=1e-7)
    assert record.divergence_model == DivergenceKind.NONE


def test_picard_reproduces_free_mode():
    psi, dpsi = picard_from_endpoint(lambda delta: 0.0, 4.0, 1.0, math.cos(2.0), -2.0 * math.sin(2.0), 0.0)
    assert psi == pytest.approx(1.0, abs=1e-5)
    assert dpsi == pytest.approx(0.0, abs=1e-5)


def test_picard_and_limit_extraction_agree_for_singular_potential():
    V = lambda delta: delta ** -0.5
    pot = ExplicitPotential(V, tau_plus=1.0, variable="distance")
    phi0, phi1 = 0.7, -0.4
    psi, dpsi = picard_from_endpoint(V, 1.0, 1.0, phi0, phi1, 0.0, n_grid=8000)
    settings = SolverSettings(probes=geometric_probes(1e-4, 1e-10, 1), cauchy_tol=1e-5)
    record = limit_data(pot, 1.0, ModeState(1.0, 0.0, psi, dpsi), Side.FUTURE, settings)
    assert record.phi0 == pytest.approx(phi0, abs=1e-4)
    assert record.phi1 == pytest.approx(phi1, abs=1e-4)


def test_limit_data_for_inverse_root_potential():
    # V = Δ^{−1/2}, μ = 0：ψ = √Δ·J_{−2/3}(4Δ^{3/4}/3)，φ₀ = (3/2)^{2/3}/Γ(1/3)，φ₁ = 0
    pot = ExplicitPotential(lambda delta: delta ** -0.5, tau_plus=1.0, variable="distance")
    x = 4.0 / 3.0
    psi0 = special.jv(-2.0 / 3.0, x)
    dpsi0 = -(0.5 * psi0 + special.jvp(-2.0 / 3.0, x))
    settings = SolverSettings(rtol=1e-12, atol=1e-14, probes=geometric_probes(1e-2, 1e-8))
    record = limit_data(pot, 0.0, ModeState(0.0, 0.0, psi0, dpsi0), Side.FUTURE, settings)
    assert record.phi0 == pytest.approx(1.5 ** (2.0 / 3.0) / special.gamma(1.0 / 3.0), abs=1e-8)
    assert abs(record.phi1) < 1e-6
    assert record.phi0_error < settings.cauchy_tol
    assert record.phi1_error < settings.cauchy_tol * (1.0 + abs(record.phi1))


def test_limit_data_rejects_oscillating_endpoint():
    # V = 5/(4Δ²)：ψ = Δ^{1/2+i}，探针序列无极限
    pot = ExplicitPotential(lambda delta: 1.25 * delta ** -2, tau_plus=1.0, variable="distance")
    state = ModeState(0.0, 0.0, 1.0, -(0.5 + 1j))
    with pytest.raises(NoConvergence):
        limit_data(pot, 0.0, state, Side.FUTURE, SolverSettings(rtol=1e-12, atol=1e-14))


def test_chart_potential_vanishes_for_massless_conformal_field():
    model = ScaleFactorModel.two_sided(0.0, 1.0, 1.0, 0.5, 1.0, 0.5)
    chart = build_chart(model)
    coupling = CouplingSpec.conformal(3)
    record = extract_limit_data(chart, coupling, 4.0, ModeState(4.0, 0.0, 1.0, 0.0), Side.FUTURE)
    assert record.phi0 == pytest.approx(math.cos(2.0 * chart.tau_plus), abs=1e-6)
    assert record.phi1 == pytest.approx(-2.0 * math.sin(2.0 * chart.tau_plus), abs=1e-6)


def test_bogoliubov_coefficients_of_positive_frequency_mode():
    omega, tau = 3.0, 0.7
    psi = cmath.exp(1j * omega * tau) / math.sqrt(2.0 * omega)
    alpha, beta = bogoliubov_coefficients(psi, 1j * omega * psi, omega, tau)
    assert alpha == pytest.approx(1.0)
    assert abs(beta) < 1e-14


def test_free_scattering_is_trivial():
    settings = SolverSettings(horizons=(10.0, 20.0, 30.0, 40.0))
    seed = ModeState(1.0, 0.0, 1.0 / math.sqrt(2.0), 1j / math.sqrt(2.0))
    result = scattering_data(free_potential(), 1.0, seed, 0.0, Side.FUTURE, settings)
    assert result.alpha == pytest.approx(1.0, abs=1e-7)
    assert abs(result.beta) < 1e-7
    assert result.normalization == pytest.approx(1.0, abs=1e-6)


def test_negative_frequency():
    with pytest.raises(NegativeFrequency):
        scattering_data(free_potential(), 0.5, ModeState(0.5, 0.0, 1.0, 0.0), -1.0)


def test_fit_divergence_selects_log_model():
    distances = np.array(SolverSettings().probes)
    model = fit_divergence(distances, 3.0 * np.log(distances) + 1.0)
    assert model.kind == DivergenceKind.LOG
    assert model.coefficient == pytest.approx(3.0, abs=1e-8)
    assert model.offset == pytest.approx(1.0, abs=1e-7)


def test_fit_divergence_selects_power_model():
    distances = np.array(SolverSettings().probes)
    model = fit_divergence(distances, 2.0 * distances ** -0.5 + 1.0)
    assert model.kind == DivergenceKind.POWER
    assert model.rate == pytest.approx(0.5, abs=1e-4)
    assert model.coefficient == pytest.approx(2.0, rel=1e-3)


def test_cauchy_data_from_spectrum():
    base = build_ladder(FlatTorusTd([2.0 * math.pi] * 3), 3.0)
    spectrum = shift_and_cut(base, 0.0, 0.5)
    cauchy = CauchyData.from_spectrum(spectrum, 0.0, lambda mu: (1.0, 1j * math.sqrt(mu)))
    assert [mu for mu, *_ in cauchy.coefficients] == [1.0, 2.0, 3.0]
    assert [mult for _, mult, *_ in cauchy.coefficients] == [6, 12, 8]
    assert cauchy.states()[1].dpsi == pytest.approx(1j * math.sqrt(2.0))


def test_oscillating_divergence_rate_is_fitted():
    # V = 5/(4Δ²)：ψ = Δ^{1/2+i}，∂_τψ = −(1/2+i)Δ^{−1/2+i}
    pot = ExplicitPotential(lambda delta: 1.25 * delta ** -2, tau_plus=1.0, variable="distance")
    state = ModeState(0.0, 0.0, 1.0, -(0.5 + 1j))
    settings = SolverSettings(rtol=1e-12, atol=1e-14)
    model, last_psi = oscillating_divergence_rate(pot, 0.0, state, Side.FUTURE, 1.0, settings,
                                                  lambda delta, integral: math.sqrt(delta))
    assert model.kind == DivergenceKind.POWER
    assert model.rate == pytest.approx(0.5, abs=1e-6)
    assert model.predicted_rate == 0.5
    assert model.coefficient == pytest.approx(-(0.5 + 1j), abs=1e-5)
    assert abs(model.offset) < 1e-5
    assert model.weighted_bounded
    assert last_psi == pytest.approx(1e-3, rel=1e-6)


def test_oscillating_fit_departs_from_predicted_rate():
    distances = np.array(SolverSettings().probes)
    dpsis = distances ** -0.75 * np.exp(2j * np.log(distances))
    model = fit_oscillating_divergence(distances, dpsis, 2.0)
    assert model.rate == pytest.approx(0.75, abs=1e-6)
    assert model.predicted_rate == 0.5
    assert model.to_dict()["frequency"] == 2.0


def test_asymptotic_record_for_oscillating_crunch():
    chart = build_chart(ScaleFactorModel.single_ended_future(0.0, 1.0, 1.0, 2.0 / 3.0))
    record = asymptotic_record(chart, CouplingSpec(1.0, 3), 1.0, ModeState(1.0, 0.0, 1.0, 0.0),
                               Side.FUTURE)
    assert record.phi0 == 0.0
    assert record.phi1 == DIVERGENT
    # V·Δ² → 10，ν² = 10 − 1/4
    assert record.divergence.frequency == pytest.approx(math.sqrt(9.75))
    assert record.divergence.rate == pytest.approx(0.5, abs=0.1)
    assert record.divergence.predicted_rate == 0.5


def test_decay_theorem_preconditions():
    conformal = CouplingSpec.conformal(3)
    crunch = build_chart(ScaleFactorModel.two_sided(0.0, 1.0, 1.0, 0.5, 1.0, 0.5))
    # 共形耦合下 q = 0
    with pytest.raises(PreconditionViolated):
        verify_decay_theorem(crunch, conformal, [1.0])
    brake = build_chart(ScaleFactorModel.single_ended_future(0.0, 1.0, 1.0, 0.0, 1.0, 1.5))
    with pytest.raises(PreconditionViolated):
        verify_decay_theorem(brake, CouplingSpec(0.0, 3), [1.0])


def test_big_rip_derivative_diverges_logarithmically():
    # V = m²/Δ：∂_τψ ~ m²φ₀ ln Δ
    chart = build_chart(ScaleFactorModel.explicit_big_rip(1))
    coupling = CouplingSpec.conformal(3, 1.0)
    model = extract_divergence_rate(chart, coupling, 1.0, ModeState(1.0, 0.0, 1.0, 0.0), Side.FUTURE)
    assert model.kind == DivergenceKind.LOG
    assert model.coefficient.real > 0.0
    assert model.weighted_bounded


def test_infinite_tau_scattering_needs_infinite_side():
    crunch = build_chart(ScaleFactorModel.two_sided(0.0, 1.0, 1.0, 0.5, 1.0, 0.5))
    with pytest.raises(PreconditionViolated):
        scattering_data_infinite_tau(crunch, CouplingSpec.conformal(3), 1.0,
                                     ModeState(1.0, 0.0, 1.0, 0.0), 0.0)


def test_exploratory_power_fit_reports_without_gating():
    crunch = build_chart(ScaleFactorModel.two_sided(0.0, 1.0, 1.0, 0.5, 1.0, 0.5))
    fit = exploratory_power_fit(crunch, CouplingSpec(0.0, 3), 1.0, ModeState(1.0, 0.0, 1.0, 0.0))
    assert fit["exponent"] == pytest.approx(-0.5)
    assert set(fit) == {"exponent", "A", "B", "residual"}
    assert math.isfinite(abs(fit["A"])) and math.isfinite(abs(fit["B"]))
