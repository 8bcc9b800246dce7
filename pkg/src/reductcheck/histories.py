"""Decoherent-histories engine on finite Hilbert spaces.

History operators are alternating products of projectors and short-time
propagators; the decoherence functional D(i, i') = <chi0| C_i'^dag C_i |chi0>
licenses additive probabilities when it vanishes off the diagonal. Everything
is dense (d <= 64) so brute-force enumeration stays an honest oracle.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError

Array = np.ndarray

MAX_HISTORIES = 4096


@dataclass(frozen=True)
class FiniteHilbert:
    """Finite Hilbert space with a Hermitian Hamiltonian.

    ``position_basis`` (labels, column-vectors matrix) names an orthonormal
    configuration basis for configuration-space decoherence diagnostics; the
    computational basis is used when omitted.
    """

    dim: int
    hamiltonian: Array
    position_basis: Optional[tuple[tuple[str, ...], Array]] = None

    def __post_init__(self):
        h = np.asarray(self.hamiltonian, dtype=complex)
        object.__setattr__(self, "hamiltonian", h)
        if not (1 <= self.dim <= 64):
            raise ValueError("dim must be between 1 and 64")
        if h.shape != (self.dim, self.dim):
            raise ValueError("hamiltonian shape must match dim")
        if np.max(np.abs(h - h.conj().T)) > 1e-12:
            raise ValueError("hamiltonian must be Hermitian (within 1e-12)")
        if self.position_basis is not None:
            labels, vecs = self.position_basis
            vecs = np.asarray(vecs, dtype=complex)
            object.__setattr__(self, "position_basis", (tuple(labels), vecs))
            if vecs.shape != (self.dim, self.dim) or len(labels) != self.dim:
                raise ValueError("position basis must supply dim labeled columns")
            if np.max(np.abs(vecs.conj().T @ vecs - np.eye(self.dim))) > 1e-10:
                raise ValueError("position basis must be orthonormal")

    def propagator(self, dt: float) -> Array:
        """U = exp(-i H dt) by spectral decomposition."""
        vals, vecs = np.linalg.eigh(self.hamiltonian)
        return (vecs * np.exp(-1j * vals * dt)) @ vecs.conj().T

    def basis_vectors(self) -> Array:
        if self.position_basis is None:
            return np.eye(self.dim, dtype=complex)
        return self.position_basis[1]


@dataclass(frozen=True)
class ProjectorFamily:
    """PVM or POVM: positive operators summing to the identity."""

    kind: str  # "PVM" | "POVM"
    operators: tuple[Array, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        ops = tuple(np.asarray(op, dtype=complex) for op in self.operators)
        object.__setattr__(self, "operators", ops)
        if self.kind not in ("PVM", "POVM"):
            raise ValueError("kind must be 'PVM' or 'POVM'")
        if not ops:
            raise ValueError("family needs at least one operator")
        d = ops[0].shape[0]
        for op in ops:
            if op.shape != (d, d):
                raise ValueError("family operators must be square with equal dims")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(i) for i in range(len(ops))))

    @property
    def size(self) -> int:
        return len(self.operators)

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]


@dataclass(frozen=True)
class FamilyValidation:
    completeness_residual: float
    idempotency_residual: float
    orthogonality_residual: float
    min_eigenvalue: float
    valid_pvm: bool
    valid_povm: bool


def validate_family(family: ProjectorFamily) -> FamilyValidation:
    """Report completeness, PVM idempotency/orthogonality and positivity."""
    d = family.dim
    total = sum(family.operators)
    completeness = float(np.max(np.abs(total - np.eye(d))))
    idem = max(
        float(np.max(np.abs(op @ op - op))) for op in family.operators
    )
    ortho = 0.0
    for i, a in enumerate(family.operators):
        for b in family.operators[i + 1:]:
            ortho = max(ortho, float(np.max(np.abs(a @ b))))
    min_eig = min(
        float(np.min(np.linalg.eigvalsh(0.5 * (op + op.conj().T))))
        for op in family.operators
    )
    hermitian = max(float(np.max(np.abs(op - op.conj().T))) for op in family.operators)
    valid_povm = completeness < 1e-10 and min_eig > -1e-10 and hermitian < 1e-10
    valid_pvm = valid_povm and idem < 1e-10 and ortho < 1e-10
    return FamilyValidation(
        completeness_residual=completeness,
        idempotency_residual=idem,
        orthogonality_residual=ortho,
        min_eigenvalue=min_eig,
        valid_pvm=valid_pvm,
        valid_povm=valid_povm,
    )


@dataclass(frozen=True)
class HistoryIndex:
    indices: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))


@dataclass(frozen=True)
class HistorySpec:
    """A history space: N slices of step dt with a projector family per slice."""

    space: FiniteHilbert
    n_slices: int
    dt: float
    families: tuple[ProjectorFamily, ...]
    initial_state: Array
    epsilon: float = 1e-8

    def __post_init__(self):
        chi = np.asarray(self.initial_state, dtype=complex)
        object.__setattr__(self, "initial_state", chi)
        fams = self.families
        if isinstance(fams, ProjectorFamily):
            fams = (fams,)
        fams = tuple(fams)
        if len(fams) == 1 and self.n_slices > 1:
            fams = fams * self.n_slices
        object.__setattr__(self, "families", fams)
        if self.n_slices < 1:
            raise ValueError("need at least one time slice")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if len(self.families) != self.n_slices:
            raise ValueError("need one projector family per slice")
        if chi.shape != (self.space.dim,):
            raise ValueError("initial state dimension mismatch")
        if abs(np.linalg.norm(chi) - 1.0) > 1e-10:
            raise ValueError("initial state must be normalized")
        for fam in self.families:
            if fam.dim != self.space.dim:
                raise ValueError("family dimension mismatch")
        n_hist = int(np.prod([f.size for f in self.families]))
        if n_hist > MAX_HISTORIES:
            raise ConfigurationError(
                f"history space of {n_hist} exceeds the enumeration cap {MAX_HISTORIES}"
            )

    def propagator(self) -> Array:
        return self.space.propagator(self.dt)

    def check_index(self, idx: HistoryIndex) -> None:
        if len(idx.indices) != self.n_slices:
            raise ValueError("history index length must equal n_slices")
        for i, fam in zip(idx.indices, self.families):
            if not 0 <= i < fam.size:
                raise ValueError("history index out of family range")


def all_history_indices(spec: HistorySpec) -> list[HistoryIndex]:
    ranges = [range(f.size) for f in spec.families]
    return [HistoryIndex(t) for t in itertools.product(*ranges)]


def history_operator(spec: HistorySpec, idx: HistoryIndex) -> Array:
    """C_i = P_{i_N} U ... U P_{i_1} U with U = exp(-i H dt)."""
    spec.check_index(idx)
    u = spec.propagator()
    op = np.eye(spec.space.dim, dtype=complex)
    for slice_k, fam in zip(idx.indices, spec.families):
        op = fam.operators[slice_k] @ u @ op
    return op


def branch_vector(spec: HistorySpec, idx: HistoryIndex) -> Array:
    """C_i |chi0> built by sequential application (cheaper than the matrix)."""
    spec.check_index(idx)
    u = spec.propagator()
    vec = spec.initial_state
    for slice_k, fam in zip(idx.indices, spec.families):
        vec = fam.operators[slice_k] @ (u @ vec)
    return vec


def decoherence_functional(spec: HistorySpec, i: HistoryIndex, i_prime: HistoryIndex) -> complex:
    """D(i, i') = <chi0| C_{i'}^dag C_i |chi0>."""
    ci = history_operator(spec, i) @ spec.initial_state
    cip = history_operator(spec, i_prime) @ spec.initial_state
    return complex(np.vdot(cip, ci))


def history_probability(spec: HistorySpec, idx: HistoryIndex) -> float:
    """Pr(i) = D(i, i) = ||C_i chi0||^2."""
    return float(np.linalg.norm(branch_vector(spec, idx)) ** 2)


def probability_sum(spec: HistorySpec) -> float:
    """Sum of Pr over the whole history space; 1 by unitarity and HistorySum."""
    return float(sum(history_probability(spec, idx) for idx in all_history_indices(spec)))


@dataclass
class CoarseGrainCell:
    label: str
    members: list[HistoryIndex]
    operator: Array
    probability: float
    member_probability_sum: float
    additivity_defect: float
    cross_term_bound: float


def coarse_grain(spec: HistorySpec, partition: dict[str, Sequence[HistoryIndex]]) -> list[CoarseGrainCell]:
    """Coarse-grained history operators C_cell = sum of member C_i.

    The partition must cover the full index space exactly once. Each cell's
    additivity defect |Pr(cell) - sum Pr(members)| is reported with its bound,
    the summed magnitude of cross decoherence-functional terms.
    """
    everything = all_history_indices(spec)
    seen: set[tuple[int, ...]] = set()
    for members in partition.values():
        for idx in members:
            key = tuple(idx.indices)
            if key in seen:
                raise ConfigurationError(f"history {key} appears in two cells")
            seen.add(key)
    if seen != {tuple(i.indices) for i in everything}:
        raise ConfigurationError("partition must cover the history space exactly once")

    cells = []
    for label, members in partition.items():
        members = list(members)
        op = sum(history_operator(spec, idx) for idx in members)
        vec = op @ spec.initial_state
        prob = float(np.linalg.norm(vec) ** 2)
        member_sum = sum(history_probability(spec, idx) for idx in members)
        branch_vecs = [branch_vector(spec, idx) for idx in members]
        cross = 0.0
        for a in range(len(members)):
            for b in range(len(members)):
                if a != b:
                    cross += abs(complex(np.vdot(branch_vecs[b], branch_vecs[a])))
        cells.append(CoarseGrainCell(
            label=label,
            members=members,
            operator=op,
            probability=prob,
            member_probability_sum=float(member_sum),
            additivity_defect=float(abs(prob - member_sum)),
            cross_term_bound=float(cross),
        ))
    return cells


def transition_weight(spec: HistorySpec, p_early: Array, t: float, p_late: Array,
                      t_prime: float) -> float:
    """T = ||P' U^{(t'-t)/dt} P U^{t/dt} chi0||^2 / ||P U^{t/dt} chi0||^2.

    Zero by convention when the early weight falls below epsilon^2. Both times
    must be multiples of the slice step.
    """
    if t_prime <= t:
        raise ValueError("t_prime must exceed t")
    for value in (t, t_prime):
        steps = value / spec.dt
        if abs(steps - round(steps)) > 1e-9:
            raise ValueError("times must be multiples of the slice step dt")
    u = spec.propagator()
    early = np.asarray(p_early, dtype=complex) @ np.linalg.matrix_power(u, round(t / spec.dt)) \
        @ spec.initial_state
    denom = float(np.linalg.norm(early) ** 2)
    if denom < spec.epsilon ** 2:
        return 0.0
    late = np.asarray(p_late, dtype=complex) @ np.linalg.matrix_power(
        u, round((t_prime - t) / spec.dt)) @ early
    return float(np.linalg.norm(late) ** 2 / denom)


def _nested_projectors(spec: HistorySpec, k: int) -> list[tuple[tuple[int, ...], Array]]:
    """Normalized branch projectors C_{i1..ik}|chi0><chi0|C^dag at slice k."""
    out = []
    ranges = [range(f.size) for f in spec.families[:k]]
    u = spec.propagator()
    for prefix in itertools.product(*ranges):
        vec = spec.initial_state
        for slice_j, fam in zip(prefix, spec.families[:k]):
            vec = fam.operators[slice_j] @ (u @ vec)
        norm = np.linalg.norm(vec)
        if norm <= spec.epsilon:
            continue
        unit = vec / norm
        out.append((prefix, np.outer(unit, unit.conj())))
    return out


def check_branching(spec: HistorySpec) -> tuple[bool, Optional[dict]]:
    """Branching condition over the nested-projector construction.

    For every realized later projector, exactly one earlier projector may have
    transition weight above epsilon; returns the first violating triple
    otherwise.
    """
    for k in range(1, spec.n_slices):
        early = _nested_projectors(spec, k)
        for k_late in range(k + 1, spec.n_slices + 1):
            late = _nested_projectors(spec, k_late)
            for late_prefix, p_late in late:
                feeders = []
                for early_prefix, p_early in early:
                    w = transition_weight(spec, p_early, k * spec.dt, p_late,
                                          k_late * spec.dt)
                    if w > spec.epsilon:
                        feeders.append(early_prefix)
                if len(feeders) > 1:
                    return False, {
                        "late_slice": k_late,
                        "late_prefix": late_prefix,
                        "early_slice": k,
                        "feeders": feeders,
                    }
    return True, None


def config_decoherence_functional(spec: HistorySpec, i: HistoryIndex,
                                  i_prime: HistoryIndex) -> float:
    """Configuration-space decoherence diagnostic.

    Maximum over configuration-basis states |X> of the overlap density of the
    two normalized branches, max_X |<c_i'|X><X|c_i>| with c = C|chi0>/||.||;
    vanishing for all pairs certifies disjoint supports (Bohmian effective
    collapse), which is strictly stronger than D(i, i') = 0.
    """
    if spec.space.position_basis is None:
        raise ConfigurationError("configuration diagnostics need a position basis")
    basis = spec.space.basis_vectors()
    vi = branch_vector(spec, i)
    vip = branch_vector(spec, i_prime)
    ni, nip = np.linalg.norm(vi), np.linalg.norm(vip)
    if ni <= spec.epsilon or nip <= spec.epsilon:
        return 0.0
    amp_i = basis.conj().T @ (vi / ni)
    amp_ip = basis.conj().T @ (vip / nip)
    return float(np.max(np.abs(np.conj(amp_ip) * amp_i)))
