"""Classical Hamiltonian models with symplectic (velocity Verlet) evolution."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .core import DynamicalModel, NormedState, SymmetryTransform
from .errors import NumericalBlowup

log = logging.getLogger(__name__)

Array = np.ndarray
Vector = Union[float, Sequence[float], Array]


@dataclass(frozen=True)
class PhaseState:
    """Positions and momenta, length D*N each (natural units)."""

    q: Array
    p: Array

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=float))
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        if q.shape != p.shape:
            raise ValueError("q and p must have matching shapes")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise NumericalBlowup("non-finite phase-space state")


@dataclass(frozen=True)
class HamiltonianModel:
    """H = sum p^2/2m + V(q) for N particles in ``spatial_dim`` dimensions."""

    masses: Array
    potential: Callable[[Array], float]
    grad_potential: Callable[[Array], Array]
    spatial_dim: int = 1

    def __post_init__(self):
        m = np.atleast_1d(np.asarray(self.masses, dtype=float))
        object.__setattr__(self, "masses", m)
        if np.any(m <= 0):
            raise ValueError("masses must be positive")

    @property
    def mass_per_coordinate(self) -> Array:
        return np.repeat(self.masses, self.spatial_dim)


def check_gradient(model: HamiltonianModel, points: Sequence[Array],
                   h: float = 1e-5, rtol: float = 1e-6) -> float:
    """Worst relative error of grad_potential vs central differences."""
    worst = 0.0
    for q in points:
        q = np.asarray(q, dtype=float)
        g = np.asarray(model.grad_potential(q), dtype=float)
        fd = np.empty_like(g)
        for i in range(q.size):
            e = np.zeros_like(q)
            e[i] = h
            fd[i] = (model.potential(q + e) - model.potential(q - e)) / (2 * h)
        scale = max(np.max(np.abs(g)), 1e-12)
        worst = max(worst, float(np.max(np.abs(g - fd)) / scale))
    if worst > rtol:
        warnings.warn(f"grad_potential disagrees with central differences ({worst:.2e})")
    return worst


def energy(model: HamiltonianModel, state: PhaseState) -> float:
    """Total energy sum p^2/2m + V(q)."""
    m = model.mass_per_coordinate
    return float(np.sum(state.p ** 2 / (2 * m)) + model.potential(state.q))


def _heuristic_period(model: HamiltonianModel, q: Array) -> Optional[float]:
    # Quadratic-potential heuristic only: local curvature via central difference.
    try:
        h = 1e-4
        g = np.asarray(model.grad_potential(q), dtype=float)
        gp = np.asarray(model.grad_potential(q + h), dtype=float)
        curvature = np.max(np.abs(gp - g)) / h
    except Exception:
        return None
    if curvature <= 0:
        return None
    omega = np.sqrt(curvature / np.min(model.masses))
    return 2 * np.pi / omega


def evolve_classical(model: HamiltonianModel, state: PhaseState, t: float, dt: float) -> PhaseState:
    """Velocity-Verlet endpoint after time t (dt rounded to divide t evenly).

    Negative t integrates backwards (Verlet is time reversible). The energy
    drift across the run is logged at DEBUG level.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t == 0:
        return state
    period = _heuristic_period(model, state.q)
    if period is not None and dt > period / 20:
        warnings.warn(f"dt={dt:.3g} exceeds 1/20 of the local oscillation period {period:.3g}")
    n = max(1, int(round(abs(t) / dt)))
    h = t / n
    m = model.mass_per_coordinate
    q = state.q.copy()
    p = state.p.copy()
    e0 = energy(model, state)
    f = -np.asarray(model.grad_potential(q), dtype=float)
    if not np.all(np.isfinite(f)):
        raise NumericalBlowup("non-finite force at the initial state")
    for _ in range(n):
        p += 0.5 * h * f
        q += h * p / m
        f = -np.asarray(model.grad_potential(q), dtype=float)
        if not np.all(np.isfinite(f)):
            raise NumericalBlowup("non-finite force during classical evolution")
        p += 0.5 * h * f
    out = PhaseState(q, p)
    e1 = energy(model, out)
    log.debug("evolve_classical: relative energy drift %.3e over t=%s", abs(e1 - e0) / max(abs(e0), 1e-12), t)
    return out


def apply_translation(state: PhaseState, a: Vector) -> PhaseState:
    """Shift every position by a (per spatial component); momenta unchanged."""
    shift = np.resize(np.asarray(a, dtype=float), state.q.shape) if np.ndim(a) else a
    return PhaseState(state.q + shift, state.p.copy())


def apply_galilean_boost(state: PhaseState, v: Vector, t: float, masses: Array,
                         spatial_dim: int = 1) -> PhaseState:
    """Boost by velocity v at explicit time t: q -> q - v t, p -> p - m v."""
    m = np.repeat(np.atleast_1d(np.asarray(masses, dtype=float)), spatial_dim)
    vel = np.asarray(v, dtype=float)
    if vel.ndim == 0:
        vel = np.full(state.q.shape, float(vel))
    else:
        vel = np.tile(vel, state.q.size // vel.size)
    return PhaseState(state.q - vel * t, state.p - m * vel)


def _rotation_matrix(axis: Optional[Vector], angle: float, dim: int) -> Array:
    if dim == 2:
        c, s = np.cos(angle), np.sin(angle)
        return np.array([[c, -s], [s, c]])
    if dim == 3:
        n = np.asarray(axis, dtype=float)
        n = n / np.linalg.norm(n)
        c, s = np.cos(angle), np.sin(angle)
        cross = np.array([[0, -n[2], n[1]], [n[2], 0, -n[0]], [-n[1], n[0], 0]])
        return c * np.eye(3) + s * cross + (1 - c) * np.outer(n, n)
    raise ValueError("rotations need spatial_dim 2 or 3")


def apply_rotation(state: PhaseState, axis: Optional[Vector], angle: float,
                   spatial_dim: int = 2) -> PhaseState:
    """Rigidly rotate all positions and momenta about the origin."""
    rot = _rotation_matrix(axis, angle, spatial_dim)
    q = state.q.reshape(-1, spatial_dim) @ rot.T
    p = state.p.reshape(-1, spatial_dim) @ rot.T
    return PhaseState(q.ravel(), p.ravel())


# ---------------------------------------------------------------------------
# Adapters into the abstract reduction framework


def phase_state_to_normed(state: PhaseState, space_tag: str) -> NormedState:
    return NormedState(np.concatenate([state.q, state.p]), space_tag)


def normed_to_phase_state(x: NormedState) -> PhaseState:
    half = x.coordinates.size // 2
    coords = np.asarray(x.coordinates, dtype=float)
    return PhaseState(coords[:half], coords[half:])


def reduction_model(
    model: HamiltonianModel,
    dt: float,
    model_id: str,
    norm: Callable[[NormedState, NormedState], float],
    n_coordinates: int,
    symmetries: tuple[SymmetryTransform, ...] = (),
) -> DynamicalModel:
    """Wrap a Hamiltonian model as a DynamicalModel over (q, p) vectors."""
    tag = f"phase:{model_id}"

    def dyn(t: float, x: NormedState) -> NormedState:
        out = evolve_classical(model, normed_to_phase_state(x), t, dt)
        return phase_state_to_normed(out, tag)

    return DynamicalModel(
        model_id=model_id,
        dimension=2 * n_coordinates,
        space_tag=tag,
        norm=norm,
        dynamics=dyn,
        symmetries=symmetries,
    )


def sho_model(mass: float = 1.0, omega: float = 1.0) -> HamiltonianModel:
    k = mass * omega ** 2
    return HamiltonianModel(
        masses=np.array([mass]),
        potential=lambda q: float(0.5 * k * np.sum(q ** 2)),
        grad_potential=lambda q: k * q,
    )


def quartic_model(mass: float = 1.0, strength: float = 0.25) -> HamiltonianModel:
    return HamiltonianModel(
        masses=np.array([mass]),
        potential=lambda q: float(strength * np.sum(q ** 4)),
        grad_potential=lambda q: 4 * strength * q ** 3,
    )


def free_model(masses: Vector) -> HamiltonianModel:
    m = np.atleast_1d(np.asarray(masses, dtype=float))
    return HamiltonianModel(
        masses=m,
        potential=lambda q: 0.0,
        grad_potential=lambda q: np.zeros_like(q),
    )


def harmonic_pair_model(m1: float, m2: float, spring_k: float) -> HamiltonianModel:
    """Two particles on a line with interaction V = k/2 (x1 - x2)^2."""

    def pot(q: Array) -> float:
        return float(0.5 * spring_k * (q[0] - q[1]) ** 2)

    def grad(q: Array) -> Array:
        g = spring_k * (q[0] - q[1])
        return np.array([g, -g])

    return HamiltonianModel(masses=np.array([m1, m2]), potential=pot, grad_potential=grad)
