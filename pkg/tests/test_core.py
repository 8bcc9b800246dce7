"""Abstract reduction framework: residuals, verdicts, composition."""
import math

import numpy as np
import pytest

from reductcheck import classical, quantum
from reductcheck.core import (
    BridgeMap, DynamicalModel, NormedState, ReductionSpec, SymmetryTransform,
    check_dsr, check_symmetry_commutation, check_transitivity, compose_bridges,
    dsr_differential_residual, dsr_residual, fixture_sampler, l2_norm,
    weighted_sup_norm,
)
from reductcheck.errors import CompositionError, ConfigurationError, DomainViolation


def rotation_model(omega: float, model_id: str, tag: str) -> DynamicalModel:
    """Analytic model: uniform rotation in the plane (exactly solvable)."""

    def dyn(t, x):
        c, s = math.cos(omega * t), math.sin(omega * t)
        a, b = x.coordinates
        return NormedState(np.array([c * a - s * b, s * a + c * b]), tag)

    return DynamicalModel(model_id=model_id, dimension=2, space_tag=tag,
                          norm=l2_norm, dynamics=dyn)


def identity_bridge(model: DynamicalModel, fixtures) -> BridgeMap:
    return BridgeMap(
        low_model_id=model.model_id,
        high_model_id=model.model_id,
        map=lambda x: x,
        domain_sampler=fixture_sampler(fixtures, jitter=0.3),
        domain_predicate=lambda x: True,
    )


@pytest.fixture
def rotation_pair():
    low = rotation_model(1.0, "rot", "plane")
    fixtures = [NormedState(np.array([1.0, 0.0]), "plane")]
    return low, identity_bridge(low, fixtures)


def test_identity_reduction_zero_residual(rotation_pair):
    low, bridge = rotation_pair
    x0 = NormedState(np.array([1.0, 0.0]), "plane")
    assert dsr_residual(low, low, bridge, x0, 1.0) <= 1e-12


def test_residual_vanishes_at_t_zero(rotation_pair):
    low, bridge = rotation_pair
    other = rotation_model(1.3, "rot2", "plane")
    x0 = NormedState(np.array([0.4, -0.2]), "plane")
    assert dsr_residual(low, other, bridge, x0, 0.0) <= 1e-12


def test_identity_check_dsr_passes(rotation_pair):
    low, bridge = rotation_pair
    spec = ReductionSpec.uniform(delta=1e-6, tau=10.0, n_times=51,
                                 n_domain_samples=4, rng_seed=1)
    report = check_dsr(low, low, bridge, spec)
    assert report.verdict
    assert report.max_residual <= 1e-12
    assert report.tau_max() == pytest.approx(10.0)


def test_domain_violation_rejected(rotation_pair):
    low, _ = rotation_pair
    bridge = BridgeMap(
        low_model_id="rot", high_model_id="rot",
        map=lambda x: x,
        domain_sampler=fixture_sampler([NormedState(np.array([1.0, 0.0]), "plane")]),
        domain_predicate=lambda x: bool(np.linalg.norm(x.coordinates) < 0.5),
    )
    with pytest.raises(DomainViolation):
        dsr_residual(low, low, bridge, NormedState(np.array([1.0, 0.0]), "plane"), 1.0)


def test_space_tag_mismatch_rejected(rotation_pair):
    low, _ = rotation_pair
    with pytest.raises(DomainViolation):
        low.evolve(0.1, NormedState(np.array([1.0, 0.0]), "elsewhere"))


@pytest.fixture
def detuned_report():
    # Slightly detuned rotations: residual grows from 0, so tau_max moves
    # with delta.
    low = rotation_model(1.0, "rot", "plane")
    high = rotation_model(1.05, "rot_detuned", "plane")
    bridge = identity_bridge(low, [NormedState(np.array([1.0, 0.0]), "plane")])
    spec = ReductionSpec.uniform(delta=0.05, tau=8.0, n_times=81,
                                 n_domain_samples=3, rng_seed=5)
    return check_dsr(low, high, bridge, spec)


def test_verdict_monotone_in_delta(detuned_report):
    report = detuned_report
    deltas = [0.01, 0.05, 0.1, 0.5, 1.0]
    verdicts = [report.verdict_at(d) for d in deltas]
    for earlier, later in zip(verdicts, verdicts[1:]):
        assert later or not earlier  # pass at delta implies pass at larger delta


def test_tau_max_nondecreasing_in_delta(detuned_report):
    report = detuned_report
    taus = [report.tau_max(d) for d in (0.01, 0.05, 0.1, 0.5)]
    assert all(a <= b + 1e-12 for a, b in zip(taus, taus[1:]))
    assert taus[0] < 8.0  # detuning actually breaks the small budget


def test_reports_deterministic_for_seed(detuned_report):
    low = rotation_model(1.0, "rot", "plane")
    high = rotation_model(1.05, "rot_detuned", "plane")
    bridge = identity_bridge(low, [NormedState(np.array([1.0, 0.0]), "plane")])
    spec = ReductionSpec.uniform(delta=0.05, tau=8.0, n_times=81,
                                 n_domain_samples=3, rng_seed=5)
    again = check_dsr(low, high, bridge, spec)
    assert np.array_equal(again.residual_traces, detuned_report.residual_traces)


def test_parallel_workers_give_identical_traces(detuned_report, monkeypatch):
    monkeypatch.setenv("REDUCTCHECK_THREADS", "3")
    low = rotation_model(1.0, "rot", "plane")
    high = rotation_model(1.05, "rot_detuned", "plane")
    bridge = identity_bridge(low, [NormedState(np.array([1.0, 0.0]), "plane")])
    spec = ReductionSpec.uniform(delta=0.05, tau=8.0, n_times=81,
                                 n_domain_samples=3, rng_seed=5)
    report = check_dsr(low, high, bridge, spec)
    assert np.array_equal(report.residual_traces, detuned_report.residual_traces)


def test_empty_sampler_is_config_error(rotation_pair):
    low, _ = rotation_pair
    bridge = BridgeMap(low_model_id="rot", high_model_id="rot", map=lambda x: x,
                       domain_sampler=lambda rng, n: [],
                       domain_predicate=lambda x: True)
    spec = ReductionSpec.uniform(delta=1e-3, tau=1.0, n_times=11)
    with pytest.raises(ConfigurationError):
        check_dsr(low, low, bridge, spec)


def test_spec_validation():
    with pytest.raises(ConfigurationError):
        ReductionSpec(delta=-1.0, tau=1.0, time_grid=np.array([0.0, 1.0]))
    with pytest.raises(ConfigurationError):
        ReductionSpec(delta=1.0, tau=1.0, time_grid=np.array([0.5, 1.0]))
    with pytest.raises(ConfigurationError):
        ReductionSpec(delta=1.0, tau=1.0, time_grid=np.array([0.0, 2.0]))


# ---------------------------------------------------------------------------
# Differential residual


def test_differential_residual_identity_classical_sho():
    cm = classical.sho_model()
    norm = weighted_sup_norm()
    model = classical.reduction_model(cm, 1e-4, "sho", norm=norm, n_coordinates=1)
    fixtures = [NormedState(np.array([1.0, 0.0]), model.space_tag)]
    bridge = BridgeMap(model.model_id, model.model_id, lambda x: x,
                       fixture_sampler(fixtures), lambda x: True)

    def field(x, t):
        q, p = x.coordinates
        return np.array([p, -q])

    fd = 1e-4
    res = dsr_differential_residual(model, model, bridge, fixtures[0], 0.7, fd, field)
    assert res <= 10 * fd ** 2


def test_differential_residual_default_field_from_map():
    cm = classical.sho_model()
    model = classical.reduction_model(cm, 1e-4, "sho", norm=weighted_sup_norm(),
                                      n_coordinates=1)
    fixtures = [NormedState(np.array([1.0, 0.0]), model.space_tag)]
    bridge = BridgeMap(model.model_id, model.model_id, lambda x: x,
                       fixture_sampler(fixtures), lambda x: True)
    res = dsr_differential_residual(model, model, bridge, fixtures[0], 0.7, 1e-4)
    assert res <= 1e-6


def test_differential_residual_quantum_sho_coherent():
    mass = omega = 1.0
    grid = quantum.GridSpec.line(-8, 8, 256)
    qm = quantum.QuantumModel.from_potential(grid, mass, lambda x: 0.5 * x ** 2)
    low = quantum.reduction_model(qm, 1e-4, "qsho")
    cm = classical.sho_model()
    high = classical.reduction_model(cm, 1e-4, "csho", norm=weighted_sup_norm(),
                                     n_coordinates=1)
    psi = quantum.make_gaussian(grid, 1.0, 0.0, 1.0 / math.sqrt(2), mass)
    state = quantum.wavefunction_to_normed(psi, low.space_tag)

    def mapping(x):
        ex, ep = quantum.expectation_xp(quantum.normed_to_wavefunction(x, qm))
        return NormedState(np.concatenate([ex, ep]), high.space_tag)

    bridge = BridgeMap(low.model_id, high.model_id, mapping,
                       lambda rng, n: [state], lambda x: True)

    def field(x, t):
        q, p = x.coordinates
        return np.array([p / mass, -mass * omega ** 2 * q])

    res = dsr_differential_residual(low, high, bridge, state, 0.5, 1e-4, field)
    assert res <= 1e-5


def test_differential_residual_free_broad_packet():
    grid = quantum.GridSpec.line(-40, 40, 512)
    qm = quantum.QuantumModel.from_potential(grid, 1.0, lambda x: 0.0 * x)
    low = quantum.reduction_model(qm, 5e-4, "free_q")
    high = classical.reduction_model(classical.free_model([1.0]), 1e-3, "free_c",
                                     norm=weighted_sup_norm(), n_coordinates=1)
    psi = quantum.make_gaussian(grid, 0.0, 0.5, 5.0, 1.0)
    state = quantum.wavefunction_to_normed(psi, low.space_tag)

    def mapping(x):
        ex, ep = quantum.expectation_xp(quantum.normed_to_wavefunction(x, qm))
        return NormedState(np.concatenate([ex, ep]), high.space_tag)

    bridge = BridgeMap(low.model_id, high.model_id, mapping,
                       lambda rng, n: [state], lambda x: True)

    def field(x, t):
        q, p = x.coordinates
        return np.array([p, 0.0])

    res = dsr_differential_residual(low, high, bridge, state, 0.4, 1e-4, field)
    assert res <= 1e-6  # both sides have dp/dt = 0 exactly


# ---------------------------------------------------------------------------
# Symmetry checks at framework level


def test_symmetry_all_samples_excluded_is_inconclusive(rotation_pair):
    low, bridge = rotation_pair
    bounded = BridgeMap(
        low_model_id="rot", high_model_id="rot", map=lambda x: x,
        domain_sampler=bridge.domain_sampler,
        domain_predicate=lambda x: bool(np.linalg.norm(x.coordinates) < 2.0),
    )
    # Transform throws every sample far outside the domain.
    throw = SymmetryTransform("throw", np.array([]), lambda x: NormedState(
        x.coordinates + 100.0, x.space_tag))
    samples = bounded.domain_sampler(np.random.default_rng(0), 3)
    result = check_symmetry_commutation(low, low, bounded, throw, throw, samples, 1e-9)
    assert result.status == "inconclusive"
    assert result.n_excluded == 3


def test_transformed_trajectory_reduces_when_2a_holds():
    # Once 2a holds, the transformed initial state satisfies the reduction
    # bound within a few times the untransformed residual (chain the
    # commutation of the transform through both dynamics).
    mass = omega = 1.0
    grid = quantum.GridSpec.line(-10, 10, 256)
    qm = quantum.QuantumModel.from_potential(grid, mass, lambda x: 0.5 * x ** 2)
    low = quantum.reduction_model(qm, 3e-4, "qsho")
    high = classical.reduction_model(classical.sho_model(), 2 * math.pi / 4000, "csho",
                                     norm=weighted_sup_norm(), n_coordinates=1)

    def mapping(x):
        ex, ep = quantum.expectation_xp(quantum.normed_to_wavefunction(x, qm))
        return NormedState(np.concatenate([ex, ep]), high.space_tag)

    psi = quantum.make_gaussian(grid, 1.0, 0.0, 1.0 / math.sqrt(2), mass)
    base = quantum.wavefunction_to_normed(psi, low.space_tag)
    shift = 1.5
    ft = np.fft.fft(psi.amplitudes)
    moved = np.fft.ifft(ft * np.exp(-1j * grid.k_axes[0] * shift))
    translated = NormedState(moved, low.space_tag)
    bridge = BridgeMap(low.model_id, high.model_id, mapping,
                       lambda rng, n: [base], lambda x: True)
    t = 2 * math.pi
    base_res = dsr_residual(low, high, bridge, base, t)
    translated_res = dsr_residual(low, high, bridge, translated, t)
    assert translated_res <= 3 * base_res + 1e-6


# ---------------------------------------------------------------------------
# Bridge composition


def _classical_state(q, p, tag):
    return NormedState(np.array(list(q) + list(p), dtype=float), tag)


def com_bridge(tag2, tag1):
    def mapping(x):
        c = x.coordinates
        return NormedState(np.array([(c[0] + c[1]) / 2, c[2] + c[3]]), tag1)

    return BridgeMap(
        low_model_id="pair", high_model_id="com", map=mapping,
        domain_sampler=fixture_sampler([_classical_state([1.0, 3.0], [0.0, 0.0], tag2)],
                                       jitter=0.1),
        domain_predicate=lambda x: bool(np.all(np.abs(x.coordinates[:2]) < 10)),
    )


def test_compose_identity_bridges(rotation_pair):
    low, bridge = rotation_pair
    bridge2 = BridgeMap(low_model_id="rot0", high_model_id="rot",
                        map=lambda x: x, domain_sampler=bridge.domain_sampler,
                        domain_predicate=lambda x: True)
    composed = compose_bridges(bridge, bridge2)
    x = NormedState(np.array([0.3, 0.4]), "plane")
    assert np.allclose(composed.map(x).coordinates, x.coordinates)


def test_compose_expectation_then_com_spot_value():
    # Equal masses, packets at <x1>=1 and <x2>=3: center of mass lands at 2.
    grid = quantum.GridSpec.square(-8, 8, 64)
    qm = quantum.QuantumModel.from_potential(grid, (1.0, 1.0),
                                             lambda x1, x2: 0.0 * x1)
    psi = quantum.make_gaussian(grid, [1.0, 3.0], [0.0, 0.0], 1.0, (1.0, 1.0))
    state = quantum.wavefunction_to_normed(psi, "hilbert:pair")

    def expectation(x):
        ex, ep = quantum.expectation_xp(quantum.normed_to_wavefunction(x, qm))
        return NormedState(np.concatenate([ex, ep]), "phase:pair")

    b32 = BridgeMap("pair_quantum", "pair", expectation,
                    lambda rng, n: [state], lambda x: True)
    b21 = com_bridge("phase:pair", "phase:com")
    composed = compose_bridges(b21, b32)
    out = composed.map(state)
    assert out.coordinates[0] == pytest.approx(2.0, abs=1e-9)


def test_compose_mismatched_models_rejected():
    b21 = com_bridge("phase:pair", "phase:com")
    other = BridgeMap("x", "not_pair", lambda x: x,
                      lambda rng, n: [], lambda x: True)
    with pytest.raises(CompositionError):
        compose_bridges(b21, other)


def test_composed_domain_is_conjunction():
    tag2, tag1 = "phase:pair", "phase:com"
    b21 = com_bridge(tag2, tag1)
    inner_fixture = _classical_state([20.0, 20.0], [0.0, 0.0], tag2)

    b32 = BridgeMap("pairlow", "pair", lambda x: x,
                    fixture_sampler([inner_fixture]),
                    domain_predicate=lambda x: True)
    composed = compose_bridges(b21, b32)
    # Image lies outside b21's domain (|q| < 10), so membership fails.
    assert not composed.domain_predicate(inner_fixture)
    with pytest.raises(ConfigurationError):
        composed.domain_sampler(np.random.default_rng(0), 2)


def test_check_transitivity_identity_chain(rotation_pair):
    low, bridge = rotation_pair
    bridge2 = BridgeMap(low_model_id="rot0", high_model_id="rot", map=lambda x: x,
                        domain_sampler=bridge.domain_sampler,
                        domain_predicate=lambda x: True)
    low0 = rotation_model(1.0, "rot0", "plane")
    spec = ReductionSpec.uniform(delta=1e-8, tau=5.0, n_times=26,
                                 n_domain_samples=2, rng_seed=3)
    result = check_transitivity(low, low, low0, bridge, bridge2, spec)
    assert result.report_21.verdict and result.report_32.verdict
    assert result.report_31.verdict
    assert result.composed_passes_combined


def test_weighted_sup_norm_scales():
    norm = weighted_sup_norm(q_scale=2.0, p_scale=10.0)
    a = NormedState(np.array([2.0, 0.0]), "s")
    b = NormedState(np.array([0.0, 5.0]), "s")
    assert norm(a, b) == pytest.approx(1.0)  # max(2/2, 5/10)


# ---------------------------------------------------------------------------
# Model contract invariants


def test_model_identity_at_time_zero():
    cm = classical.sho_model()
    model = classical.reduction_model(cm, 1e-3, "sho", norm=weighted_sup_norm(),
                                      n_coordinates=1)
    x = NormedState(np.array([0.7, -0.3]), model.space_tag)
    out = model.evolve(0.0, x)
    assert np.array_equal(out.coordinates, x.coordinates)
    assert model.norm(x, x) == 0.0


def test_model_round_trip_bijection():
    # Forward-backward round trip: dynamics(t, .) is invertible on the
    # represented domain for both the classical and quantum wrappers.
    cm = classical.quartic_model()
    cmodel = classical.reduction_model(cm, 1e-4, "quartic", norm=weighted_sup_norm(),
                                       n_coordinates=1)
    x = NormedState(np.array([1.0, 0.2]), cmodel.space_tag)
    back = cmodel.evolve(-0.8, cmodel.evolve(0.8, x))
    assert cmodel.norm(back, x) < 1e-8

    grid = quantum.GridSpec.line(-8, 8, 128)
    qm = quantum.QuantumModel.from_potential(grid, 1.0, lambda xs: 0.5 * xs ** 2)
    qmodel = quantum.reduction_model(qm, 2e-4, "qsho")
    psi = quantum.make_gaussian(grid, 1.0, 0.0, 1.0, 1.0)
    state = quantum.wavefunction_to_normed(psi, qmodel.space_tag)
    back = qmodel.evolve(-0.5, qmodel.evolve(0.5, state))
    assert qmodel.norm(back, state) < 1e-10
