"""Classical Hamiltonian evolution and symmetry actions."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from reductcheck import classical
from reductcheck.classical import (
    HamiltonianModel, PhaseState, apply_galilean_boost, apply_rotation,
    apply_translation, check_gradient, energy, evolve_classical,
)
from reductcheck.errors import NumericalBlowup

PERIOD = 2 * math.pi


def test_sho_closed_orbit():
    model = classical.sho_model()
    out = evolve_classical(model, PhaseState([1.0], [0.0]), PERIOD, PERIOD / 40000)
    assert abs(out.q[0] - 1.0) < 1e-8
    assert abs(out.p[0]) < 1e-8


def test_free_particle_drift_exact():
    model = classical.free_model([1.0])
    out = evolve_classical(model, PhaseState([0.0], [2.0]), 3.0, 1e-3)
    assert out.q[0] == pytest.approx(6.0, abs=1e-12)
    assert out.p[0] == pytest.approx(2.0, abs=1e-15)


def test_quartic_against_adaptive_oracle():
    model = classical.quartic_model()
    out = evolve_classical(model, PhaseState([1.0], [0.0]), 1.0, 5e-4)
    sol = solve_ivp(lambda t, y: [y[1], -y[0] ** 3], (0.0, 1.0), [1.0, 0.0],
                    rtol=1e-12, atol=1e-12)
    assert abs(out.q[0] - sol.y[0, -1]) < 1e-7
    assert abs(out.p[0] - sol.y[1, -1]) < 1e-7


def test_energy_drift_bounded_over_100_periods():
    model = classical.sho_model()
    state = PhaseState([1.0], [0.0])
    e0 = energy(model, state)
    out = evolve_classical(model, state, 100 * PERIOD, PERIOD / 200)
    assert abs(energy(model, out) - e0) / abs(e0) < 1e-6


def test_energy_values():
    assert energy(classical.sho_model(), PhaseState([1.0], [0.0])) == pytest.approx(0.5)
    assert energy(classical.free_model([1.0]), PhaseState([0.0], [2.0])) == pytest.approx(2.0)


def test_energy_conserved_along_quartic_run():
    model = classical.quartic_model()
    state = PhaseState([1.0], [0.0])
    e0 = energy(model, state)
    period = 7.4163
    out = evolve_classical(model, state, period, period / 2000)
    assert abs(energy(model, out) - e0) / abs(e0) < 1e-6


def test_time_reversal_round_trip():
    model = classical.quartic_model()
    fwd = evolve_classical(model, PhaseState([1.0], [0.0]), 1.0, 1e-4)
    back = evolve_classical(model, PhaseState(fwd.q, -fwd.p), 1.0, 1e-4)
    assert abs(back.q[0] - 1.0) < 1e-8
    assert abs(back.p[0]) < 1e-8


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_blowup_raises():
    model = HamiltonianModel(
        masses=np.array([1.0]),
        potential=lambda q: float(-np.sum(q ** 4)),
        grad_potential=lambda q: -4 * q ** 3,
    )
    with pytest.raises(NumericalBlowup):
        evolve_classical(model, PhaseState([2.0], [0.0]), 50.0, 1e-2)


# ---------------------------------------------------------------------------
# Symmetry actions


def test_rotation_identity_and_quarter_turn():
    state = PhaseState([1.0, 0.0], [0.0, 1.0])
    same = apply_rotation(state, None, 0.0, spatial_dim=2)
    assert np.allclose(same.q, state.q) and np.allclose(same.p, state.p)
    quarter = apply_rotation(state, None, math.pi / 2, spatial_dim=2)
    assert np.allclose(quarter.q, [0.0, 1.0], atol=1e-15)
    assert np.allclose(quarter.p, [-1.0, 0.0], atol=1e-15)


@given(st.floats(-3.0, 3.0))
@settings(max_examples=25, deadline=None)
def test_rotation_inverse(theta):
    state = PhaseState([0.3, -1.2], [0.7, 0.1])
    back = apply_rotation(apply_rotation(state, None, theta, 2), None, -theta, 2)
    assert np.allclose(back.q, state.q, atol=1e-12)
    assert np.allclose(back.p, state.p, atol=1e-12)


def test_rotation_unsupported_in_1d():
    with pytest.raises(ValueError):
        apply_rotation(PhaseState([1.0], [0.0]), None, 0.3, spatial_dim=1)


def test_boost_formula_and_identity():
    state = PhaseState([1.0], [3.0])
    same = apply_galilean_boost(state, 0.0, 2.0, np.array([2.0]))
    assert np.allclose(same.q, state.q) and np.allclose(same.p, state.p)
    out = apply_galilean_boost(state, 1.0, 2.0, np.array([2.0]))
    assert out.q[0] == pytest.approx(-1.0)
    assert out.p[0] == pytest.approx(1.0)


@given(st.floats(-2, 2), st.floats(-2, 2))
@settings(max_examples=25, deadline=None)
def test_boost_additivity(v1, v2):
    state = PhaseState([0.5, -0.5], [0.1, 0.2])
    masses = np.array([1.0, 3.0])
    once = apply_galilean_boost(state, v1 + v2, 1.5, masses)
    twice = apply_galilean_boost(apply_galilean_boost(state, v1, 1.5, masses),
                                 v2, 1.5, masses)
    assert np.allclose(once.q, twice.q, atol=1e-12)
    assert np.allclose(once.p, twice.p, atol=1e-12)


def test_translation():
    state = PhaseState([1.0], [0.3])
    assert np.allclose(apply_translation(state, 0.0).q, state.q)
    assert apply_translation(state, 2.0).q[0] == pytest.approx(3.0)
    back = apply_translation(apply_translation(state, 2.0), -2.0)
    assert np.allclose(back.q, state.q) and np.allclose(back.p, state.p)


def test_rotation_commutes_with_spherical_evolution():
    # Single particle in 2D with V(r) = r^2/2.
    model = HamiltonianModel(
        masses=np.array([1.0]),
        potential=lambda q: float(0.5 * np.sum(q ** 2)),
        grad_potential=lambda q: q,
        spatial_dim=2,
    )
    state = PhaseState([1.0, 0.2], [-0.1, 0.6])
    theta, t, dt = 0.83, 2.3, 1e-4
    path_a = apply_rotation(evolve_classical(model, state, t, dt), None, theta, 2)
    path_b = evolve_classical(model, apply_rotation(state, None, theta, 2), t, dt)
    assert np.max(np.abs(path_a.q - path_b.q)) < 1e-6
    assert np.max(np.abs(path_a.p - path_b.p)) < 1e-6


def test_boost_commutes_with_pair_evolution():
    # Two particles with V(|x1 - x2|): boost applied at matching times.
    model = classical.harmonic_pair_model(1.0, 2.0, 1.0)
    masses = np.array([1.0, 2.0])
    state = PhaseState([-1.0, 1.0], [0.2, -0.1])
    v, t, dt = 0.3, 1.7, 1e-4
    path_a = apply_galilean_boost(evolve_classical(model, state, t, dt), v, t, masses)
    path_b = evolve_classical(model, apply_galilean_boost(state, v, 0.0, masses), t, dt)
    assert np.max(np.abs(path_a.q - path_b.q)) < 1e-6
    assert np.max(np.abs(path_a.p - path_b.p)) < 1e-6


def test_gradient_check_catches_mismatch():
    good = classical.quartic_model()
    assert check_gradient(good, [np.array([0.7]), np.array([-1.3])]) < 1e-6
    bad = HamiltonianModel(
        masses=np.array([1.0]),
        potential=lambda q: float(np.sum(q ** 4) / 4),
        grad_potential=lambda q: q ** 2,  # wrong on purpose
    )
    with pytest.warns(UserWarning):
        worst = check_gradient(bad, [np.array([0.9])])
    assert worst > 1e-3


def test_registered_symmetry_commutes_with_wrapped_dynamics():
    # Registry contract: a registered transform satisfies
    # ||D(t, T(x)) - T_t(D(t, x))|| below tolerance; boosts carry their
    # explicit-time rule alongside the t = 0 action.
    from reductcheck.core import NormedState, SymmetryTransform, weighted_sup_norm
    from reductcheck.classical import (
        normed_to_phase_state, phase_state_to_normed, reduction_model,
    )

    model = classical.harmonic_pair_model(1.0, 2.0, 1.0)
    masses = np.array([1.0, 2.0])
    tag = "phase:pair"

    def boost_action(x, t=0.0):
        out = apply_galilean_boost(normed_to_phase_state(x), 0.3, t, masses)
        return phase_state_to_normed(out, tag)

    boost = SymmetryTransform(
        name="boost_0.3", params=np.array([0.3]),
        action=boost_action, may_depend_on_time=True,
        action_at_time=boost_action,
    )
    wrapped = reduction_model(model, 1e-4, "pair", norm=weighted_sup_norm(),
                              n_coordinates=2, symmetries=(boost,))
    assert wrapped.symmetry("boost_0.3") is boost
    x = NormedState(np.array([-1.0, 1.0, 0.2, -0.1]), tag)
    t = 1.3
    left = wrapped.evolve(t, boost.action(x))
    right = boost.action_at_time(wrapped.evolve(t, x), t)
    assert wrapped.norm(left, right) < 1e-6
