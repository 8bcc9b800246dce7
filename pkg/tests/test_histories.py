"""Decoherent-histories engine against brute-force matrix oracles."""
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from reductcheck.errors import ConfigurationError
from reductcheck.histories import (
    FiniteHilbert, HistoryIndex, HistorySpec, ProjectorFamily,
    all_history_indices, check_branching, coarse_grain,
    config_decoherence_functional, decoherence_functional, history_operator,
    history_probability, probability_sum, transition_weight, validate_family,
)
from reductcheck.scenarios import recording_environment_spec

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
P_UP = np.array([[1, 0], [0, 0]], dtype=complex)
P_DOWN = np.array([[0, 0], [0, 1]], dtype=complex)


def sigma_z_family():
    return ProjectorFamily(kind="PVM", operators=(P_UP, P_DOWN), labels=("u", "d"))


def make_spec(hamiltonian, chi0, n_slices=3, dt=0.4, family=None, basis=False):
    space = FiniteHilbert(
        dim=2, hamiltonian=hamiltonian,
        position_basis=(("0", "1"), np.eye(2, dtype=complex)) if basis else None)
    fam = family or sigma_z_family()
    return HistorySpec(space=space, n_slices=n_slices, dt=dt, families=(fam,),
                       initial_state=np.asarray(chi0, dtype=complex))


@pytest.fixture
def driven_spec():
    return make_spec(1.0 * SIGMA_X, np.array([1.0, 0.0]))


@pytest.fixture
def trivial_spec():
    return make_spec(np.zeros((2, 2)), np.array([1.0, 1.0]) / math.sqrt(2))


# ---------------------------------------------------------------------------
# Families


def test_sigma_z_family_is_valid_pvm():
    report = validate_family(sigma_z_family())
    assert report.valid_pvm and report.valid_povm
    assert report.completeness_residual < 1e-12


def test_identity_alone_is_valid_pvm():
    fam = ProjectorFamily(kind="PVM", operators=(np.eye(3, dtype=complex),))
    assert validate_family(fam).valid_pvm


def test_overcomplete_coherent_povm_on_truncated_oscillator():
    # Coherent-like states |alpha> truncated to d = 8; their normalized
    # resolution of identity is a POVM but nowhere near a PVM.
    d = 8
    alphas = [0.8 * np.exp(2j * np.pi * k / 12) for k in range(12)]
    vecs = []
    for a in alphas:
        v = np.array([a ** n / math.sqrt(math.factorial(n)) for n in range(d)],
                     dtype=complex)
        vecs.append(v / np.linalg.norm(v))
    gram = sum(np.outer(v, v.conj()) for v in vecs)
    inv_sqrt = np.linalg.inv(_sqrtm_hermitian(gram))
    ops = tuple(inv_sqrt @ np.outer(v, v.conj()) @ inv_sqrt for v in vecs)
    fam = ProjectorFamily(kind="POVM", operators=ops)
    report = validate_family(fam)
    assert report.valid_povm
    assert not report.valid_pvm
    assert report.idempotency_residual > 1e-3


def _sqrtm_hermitian(m):
    vals, vecs = np.linalg.eigh(m)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


# ---------------------------------------------------------------------------
# History operators


def test_single_slice_identity_family_gives_propagator(driven_spec):
    fam = ProjectorFamily(kind="PVM", operators=(np.eye(2, dtype=complex),))
    spec = make_spec(1.0 * SIGMA_X, np.array([1.0, 0.0]), n_slices=1, family=fam)
    op = history_operator(spec, HistoryIndex((0,)))
    assert np.allclose(op, expm(-1j * SIGMA_X * spec.dt), atol=1e-12)


def test_history_operators_sum_to_propagator(driven_spec):
    total = sum(history_operator(driven_spec, idx)
                for idx in all_history_indices(driven_spec))
    u_n = np.linalg.matrix_power(expm(-1j * SIGMA_X * driven_spec.dt),
                                 driven_spec.n_slices)
    assert np.max(np.abs(total - u_n)) < 1e-10


def test_orthogonal_consecutive_projectors_annihilate(trivial_spec):
    spec = make_spec(np.zeros((2, 2)), np.array([1.0, 0.0]), n_slices=2)
    op = history_operator(spec, HistoryIndex((0, 1)))
    assert np.max(np.abs(op)) < 1e-14


# ---------------------------------------------------------------------------
# Decoherence functional and probabilities


def test_diagonal_is_real_nonnegative(driven_spec):
    for idx in all_history_indices(driven_spec):
        d = decoherence_functional(driven_spec, idx, idx)
        assert abs(d.imag) < 1e-14
        assert d.real >= -1e-12
        assert d.real == pytest.approx(history_probability(driven_spec, idx), abs=1e-12)


def test_trivial_case_exact_decoherence(trivial_spec):
    idxs = all_history_indices(trivial_spec)
    for i, j in itertools.product(idxs, idxs):
        if i != j:
            assert abs(decoherence_functional(trivial_spec, i, j)) == 0.0
    assert history_probability(trivial_spec, HistoryIndex((0, 0, 0))) == pytest.approx(0.5)
    assert history_probability(trivial_spec, HistoryIndex((1, 1, 1))) == pytest.approx(0.5)


def test_driven_case_matches_dense_oracle(driven_spec):
    u = expm(-1j * SIGMA_X * driven_spec.dt)
    ops = (P_UP, P_DOWN)
    for i, j in itertools.product(all_history_indices(driven_spec), repeat=2):
        ci = np.eye(2, dtype=complex)
        cj = np.eye(2, dtype=complex)
        for k in range(driven_spec.n_slices):
            ci = ops[i.indices[k]] @ u @ ci
            cj = ops[j.indices[k]] @ u @ cj
        oracle = np.vdot(cj @ driven_spec.initial_state, ci @ driven_spec.initial_state)
        assert decoherence_functional(driven_spec, i, j) == pytest.approx(oracle, abs=1e-12)


def test_hermitian_symmetry(driven_spec):
    idxs = all_history_indices(driven_spec)
    for i, j in itertools.product(idxs[:4], idxs[:4]):
        dij = decoherence_functional(driven_spec, i, j)
        dji = decoherence_functional(driven_spec, j, i)
        assert dij == pytest.approx(np.conj(dji), abs=1e-14)


def test_probability_sum_is_one(driven_spec, trivial_spec):
    assert probability_sum(driven_spec) == pytest.approx(1.0, abs=1e-10)
    assert probability_sum(trivial_spec) == pytest.approx(1.0, abs=1e-10)


def test_probability_sum_with_distinct_per_slice_families():
    plus = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
    minus = np.eye(2) - plus
    fam_pm = ProjectorFamily(kind="PVM", operators=(plus, minus))
    space = FiniteHilbert(dim=2, hamiltonian=0.7 * SIGMA_X)
    spec = HistorySpec(space=space, n_slices=2, dt=0.3,
                       families=(sigma_z_family(), fam_pm),
                       initial_state=np.array([1.0, 0.0], dtype=complex))
    assert probability_sum(spec) == pytest.approx(1.0, abs=1e-10)


@given(st.integers(0, 10 ** 6))
@settings(max_examples=20, deadline=None)
def test_random_spec_invariants(seed):
    # Random Hermitian Hamiltonian and random rank-1 PVM: sum of history
    # operators telescopes to U^N and probabilities stay normalized.
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 5))
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    h = 0.5 * (a + a.conj().T)
    q, _ = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    fam = ProjectorFamily(kind="PVM", operators=tuple(
        np.outer(q[:, k], q[:, k].conj()) for k in range(d)))
    chi = rng.normal(size=d) + 1j * rng.normal(size=d)
    chi /= np.linalg.norm(chi)
    spec = HistorySpec(space=FiniteHilbert(dim=d, hamiltonian=h), n_slices=2,
                       dt=0.37, families=(fam,), initial_state=chi)
    total = sum(history_operator(spec, idx) for idx in all_history_indices(spec))
    u_n = np.linalg.matrix_power(spec.propagator(), 2)
    assert np.max(np.abs(total - u_n)) < 1e-10
    assert probability_sum(spec) == pytest.approx(1.0, abs=1e-10)


# ---------------------------------------------------------------------------
# Coarse graining


def test_singleton_partition_zero_defect(driven_spec):
    partition = {str(i.indices): [i] for i in all_history_indices(driven_spec)}
    for cell in coarse_grain(driven_spec, partition):
        assert cell.additivity_defect < 1e-14


def test_trivial_case_any_partition_zero_defect(trivial_spec):
    idxs = all_history_indices(trivial_spec)
    partition = {"first": idxs[:3], "rest": idxs[3:]}
    for cell in coarse_grain(trivial_spec, partition):
        assert cell.additivity_defect < 1e-12


def test_driven_defect_equals_cross_terms(driven_spec):
    idxs = all_history_indices(driven_spec)
    partition = {"a": idxs[:4], "b": idxs[4:]}
    for cell in coarse_grain(driven_spec, partition):
        cross = sum(
            decoherence_functional(driven_spec, i, j)
            for i in cell.members for j in cell.members if i != j
        )
        assert cell.additivity_defect == pytest.approx(abs(cross.real), abs=1e-12)
        assert cell.additivity_defect <= cell.cross_term_bound + 1e-12


def test_invalid_partitions_rejected(driven_spec):
    idxs = all_history_indices(driven_spec)
    with pytest.raises(ConfigurationError):
        coarse_grain(driven_spec, {"missing": idxs[:3]})
    with pytest.raises(ConfigurationError):
        coarse_grain(driven_spec, {"a": idxs, "b": [idxs[0]]})


def test_decoherent_cells_have_defect_below_cross_bound():
    spec = recording_environment_spec(3, 0.4)
    idxs = all_history_indices(spec)
    partition = {"a": idxs[: len(idxs) // 2], "b": idxs[len(idxs) // 2:]}
    eps = spec.epsilon
    for cell in coarse_grain(spec, partition):
        n_cross = len(cell.members) * (len(cell.members) - 1)
        assert cell.additivity_defect <= n_cross * eps + 1e-12


# ---------------------------------------------------------------------------
# Transition weights and branching


def test_transition_weight_conventions(trivial_spec):
    spec = make_spec(np.zeros((2, 2)), np.array([1.0, 0.0]), n_slices=2)
    # orthogonal pair: weight 0; matching pair: weight 1
    assert transition_weight(spec, P_UP, spec.dt, P_DOWN, 2 * spec.dt) == 0.0
    assert transition_weight(spec, P_UP, spec.dt, P_UP, 2 * spec.dt) == pytest.approx(1.0)
    # zero-weight early projector defines T = 0
    assert transition_weight(spec, P_DOWN, spec.dt, P_UP, 2 * spec.dt) == 0.0


def test_transition_weight_time_validation(driven_spec):
    with pytest.raises(ValueError):
        transition_weight(driven_spec, P_UP, 0.4, P_UP, 0.4)
    with pytest.raises(ValueError):
        transition_weight(driven_spec, P_UP, 0.13, P_UP, 0.4)


def test_branching_true_for_recording_environment():
    ok, witness = check_branching(recording_environment_spec(3, 0.4))
    assert ok and witness is None


def test_branching_fails_without_decoherence(driven_spec):
    ok, witness = check_branching(driven_spec)
    assert not ok
    assert witness is not None and len(witness["feeders"]) > 1


def test_branching_vacuous_for_single_slice():
    spec = make_spec(1.0 * SIGMA_X, np.array([1.0, 0.0]), n_slices=1)
    ok, witness = check_branching(spec)
    assert ok and witness is None


# ---------------------------------------------------------------------------
# Configuration-space decoherence


def test_disjoint_supports_give_zero():
    spec = make_spec(np.zeros((2, 2)), np.array([1.0, 1.0]) / math.sqrt(2),
                     n_slices=1, basis=True)
    d_x = config_decoherence_functional(spec, HistoryIndex((0,)), HistoryIndex((1,)))
    assert d_x < 1e-12


def test_plus_minus_witness():
    # Orthogonal branches |+>, |-> decohere (D = 0) yet overlap everywhere in
    # the configuration basis: D_X = 1/2.
    plus = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
    minus = np.eye(2) - plus
    fam = ProjectorFamily(kind="PVM", operators=(plus, minus))
    spec = make_spec(np.zeros((2, 2)), np.array([1.0, 0.0]), n_slices=1,
                     family=fam, basis=True)
    i0, i1 = HistoryIndex((0,)), HistoryIndex((1,))
    assert abs(decoherence_functional(spec, i0, i1)) < 1e-12
    assert config_decoherence_functional(spec, i0, i1) == pytest.approx(0.5, abs=1e-12)
    # diagonal: peak branch density of the normalized branch
    assert config_decoherence_functional(spec, i0, i0) == pytest.approx(0.5, abs=1e-12)


def test_missing_basis_rejected(driven_spec):
    with pytest.raises(ConfigurationError):
        config_decoherence_functional(driven_spec, HistoryIndex((0, 0, 0)),
                                      HistoryIndex((1, 1, 1)))


def test_config_vanishing_bounds_plain_functional():
    # Configuration-space decoherence entails medium decoherence within
    # d * tolerance; checked on the recording-environment chain.
    spec = recording_environment_spec(2, 0.4)
    idxs = all_history_indices(spec)
    realized = [i for i in idxs if history_probability(spec, i) > spec.epsilon]
    basis_spec = HistorySpec(
        space=FiniteHilbert(dim=4, hamiltonian=spec.space.hamiltonian,
                            position_basis=(tuple("abcd"), np.eye(4, dtype=complex))),
        n_slices=spec.n_slices, dt=spec.dt, families=spec.families,
        initial_state=spec.initial_state)
    d = spec.space.dim
    for i, j in itertools.combinations(realized, 2):
        d_x = config_decoherence_functional(basis_spec, i, j)
        plain = abs(decoherence_functional(basis_spec, i, j))
        assert plain <= d * d_x + 1e-12
