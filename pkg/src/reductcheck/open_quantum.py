"""Open-system density-matrix evolution on a 1D grid.

Caldeira-Leggett and pure-decoherence master equations integrated with RK4
on the dense position-space matrix rho(x, x'). X is the diagonal position
operator; P the spectral derivative matrix, so [X, P] differs from i*I near
the band edge and trace-identity tolerances are 1e-6 rather than machine
epsilon.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import NumericalBlowup
from .quantum import GridSpec

log = logging.getLogger(__name__)

Array = np.ndarray


@dataclass(frozen=True)
class DensityMatrixGrid:
    """Position-space density matrix rho(x, x') on a 1D grid (trace dx = 1)."""

    grid: GridSpec
    rho: Array
    mass: float

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        object.__setattr__(self, "rho", rho)
        if self.grid.dim != 1 or self.grid.n_points[0] > 256:
            raise ValueError("density matrices live on 1D grids with n <= 256")
        n = self.grid.n_points[0]
        if rho.shape != (n, n):
            raise ValueError("rho must be n x n for the grid")
        herm = np.max(np.abs(rho - rho.conj().T))
        if herm > 1e-10:
            raise ValueError(f"rho not Hermitian (defect {herm:.2e})")
        diag = np.diagonal(rho).real
        if np.min(diag) < -1e-10:
            raise ValueError("rho has negative diagonal entries")

    @property
    def trace(self) -> float:
        return float(np.trace(self.rho).real * self.grid.dx[0])

    def purity(self) -> float:
        dx = self.grid.dx[0]
        return float(np.trace(self.rho @ self.rho).real * dx * dx)

    @classmethod
    def from_pure(cls, grid: GridSpec, amplitudes: Array, mass: float) -> "DensityMatrixGrid":
        psi = np.asarray(amplitudes, dtype=complex)
        return cls(grid=grid, rho=np.outer(psi, psi.conj()), mass=mass)


@dataclass(frozen=True)
class OpenModel:
    """Caldeira-Leggett coefficients over a 1D grid Hamiltonian.

    ``mass`` may be math.inf to drop the kinetic term (the frozen-system limit
    used for the analytic pure-decoherence law).
    """

    grid: GridSpec
    mass: float
    potential: Array
    Lambda: float = 0.0
    eta: float = 0.0
    Omega: float = 0.0
    kT: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.potential, dtype=float)
        object.__setattr__(self, "potential", v)
        if self.grid.dim != 1:
            raise ValueError("open models are 1D")
        if v.shape != self.grid.n_points:
            raise ValueError("potential sample does not match the grid")
        for name in ("Lambda", "eta", "Omega", "kT"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and nonnegative")

    @classmethod
    def from_potential(cls, grid: GridSpec, mass: float, fn: Callable, **coeffs) -> "OpenModel":
        return cls(grid=grid, mass=mass, potential=np.asarray(fn(grid.axes[0]), dtype=float),
                   **coeffs)


def momentum_matrix(grid: GridSpec) -> Array:
    """Spectral derivative matrix P = F^dag diag(k) F (Hermitian)."""
    n = grid.n_points[0]
    f = np.fft.fft(np.eye(n), axis=0) / np.sqrt(n)
    return f.conj().T @ (grid.k_axes[0][:, None] * f)


def hamiltonian_matrix(model: OpenModel, include_renormalization: bool = False) -> Array:
    """System Hamiltonian H_S, optionally plus the renormalization M Omega^2 X^2 / 2."""
    n = model.grid.n_points[0]
    x = model.grid.axes[0]
    h = np.diag(model.potential.astype(complex))
    if include_renormalization and model.Omega:
        if not math.isfinite(model.mass):
            raise ValueError("renormalization term needs a finite mass")
        h = h + np.diag(0.5 * model.mass * model.Omega ** 2 * x ** 2)
    if math.isfinite(model.mass):
        f = np.fft.fft(np.eye(n), axis=0) / np.sqrt(n)
        h = h + f.conj().T @ ((model.grid.k_axes[0] ** 2 / (2 * model.mass))[:, None] * f)
    return h


def _rk4(rho: Array, rhs: Callable[[Array], Array], t: float, dt: float) -> tuple[Array, float]:
    """RK4 with per-step re-Hermitization; returns (rho, max Hermiticity drift)."""
    n_steps = max(1, int(round(abs(t) / dt)))
    h = t / n_steps
    worst = 0.0
    for _ in range(n_steps):
        k1 = rhs(rho)
        k2 = rhs(rho + 0.5 * h * k1)
        k3 = rhs(rho + 0.5 * h * k2)
        k4 = rhs(rho + h * k3)
        rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        drift = np.max(np.abs(rho - rho.conj().T))
        worst = max(worst, float(drift))
        rho = 0.5 * (rho + rho.conj().T)
    if not np.all(np.isfinite(rho)):
        raise NumericalBlowup("non-finite density matrix during master-equation integration")
    return rho, worst


def _finish(model: OpenModel, state: DensityMatrixGrid, rho: Array, drift: float,
            label: str) -> DensityMatrixGrid:
    # Physical rho obeys |rho(x,x')| <= max diag (Cauchy-Schwarz); a runaway
    # integrator first shows up in the off-diagonals, which the trace misses.
    diag_peak = float(np.max(np.diagonal(rho).real))
    if not np.isfinite(diag_peak) or np.max(np.abs(rho)) > 1.5 * diag_peak + 1e-9:
        raise NumericalBlowup(f"off-diagonal blowup during {label} integration")
    out = DensityMatrixGrid(grid=state.grid, rho=rho, mass=state.mass)
    trace_drift = abs(out.trace - state.trace)
    log.debug("%s: hermiticity drift %.2e, trace drift %.2e", label, drift, trace_drift)
    if trace_drift > 1e-6:
        raise NumericalBlowup(f"trace drift {trace_drift:.2e} in {label}")
    return out


def evolve_pure_decoherence(model: OpenModel, state: DensityMatrixGrid, t: float,
                            dt: float) -> DensityMatrixGrid:
    """i d rho/dt = [H_S, rho] - i Lambda [X, [X, rho]].

    The double commutator is diagonal in position: ([X,[X,rho]])(x,x') =
    (x - x')^2 rho(x,x'), so with H_S = 0 the off-diagonals decay exactly as
    e^{-Lambda (x-x')^2 t}.
    """
    if state.grid != model.grid:
        raise ValueError("state grid does not match the model")
    x = model.grid.axes[0]
    gap_sq = (x[:, None] - x[None, :]) ** 2
    h = hamiltonian_matrix(model)
    unitary = bool(np.any(h))
    lam = model.Lambda

    def rhs(rho: Array) -> Array:
        out = -lam * gap_sq * rho if lam else np.zeros_like(rho)
        if unitary:
            out = out - 1j * (h @ rho - rho @ h)
        return out

    rho, drift = _rk4(state.rho.copy(), rhs, t, dt)
    return _finish(model, state, rho, drift, "pure decoherence")


def evolve_caldeira_leggett(model: OpenModel, state: DensityMatrixGrid, t: float,
                            dt: float) -> DensityMatrixGrid:
    """Full Caldeira-Leggett form:

    i d rho/dt = [H_S + M Omega^2 X^2 / 2, rho]
                 - i Lambda eta kT [X, [X, rho]] + (eta / 2M) [X, {P, rho}].
    """
    if state.grid != model.grid:
        raise ValueError("state grid does not match the model")
    x = model.grid.axes[0]
    gap_sq = (x[:, None] - x[None, :]) ** 2
    h = hamiltonian_matrix(model, include_renormalization=True)
    unitary = bool(np.any(h))
    dec = model.Lambda * model.eta * model.kT
    dissip = model.eta / (2 * model.mass) if (model.eta and math.isfinite(model.mass)) else 0.0
    p_mat = momentum_matrix(model.grid) if dissip else None
    xcol = x[:, None]

    def rhs(rho: Array) -> Array:
        out = -dec * gap_sq * rho if dec else np.zeros_like(rho)
        if unitary:
            out = out - 1j * (h @ rho - rho @ h)
        if dissip:
            anti = p_mat @ rho + rho @ p_mat
            out = out - 1j * dissip * (xcol * anti - anti * x[None, :])
        return out

    rho, drift = _rk4(state.rho.copy(), rhs, t, dt)
    return _finish(model, state, rho, drift, "Caldeira-Leggett")


def widths(state: DensityMatrixGrid) -> tuple[float, float]:
    """(coherence_length, ensemble_width).

    ensemble_width: stdev of the diagonal rho(x, x). coherence_length: stdev
    of |rho| along the off-diagonal coordinate u = x - x', mass-averaged over
    x + x' (diagonal-sum weights).
    """
    x = state.grid.axes[0]
    n = x.size
    dx = state.grid.dx[0]
    diag = np.diagonal(state.rho).real.clip(min=0.0)
    total = diag.sum()
    mu = np.sum(x * diag) / total
    ensemble = float(np.sqrt(np.sum((x - mu) ** 2 * diag) / total))

    offsets = np.arange(-(n - 1), n)
    weights = np.array([np.sum(np.abs(np.diagonal(state.rho, offset=d))) for d in offsets])
    u = offsets * dx
    wt = weights.sum()
    mu_u = np.sum(u * weights) / wt
    coherence = float(np.sqrt(np.sum((u - mu_u) ** 2 * weights) / wt))
    return coherence, ensemble


def open_ehrenfest_residual(model: OpenModel, state: DensityMatrixGrid,
                            fd_dt: float = 1e-4) -> tuple[float, float]:
    """(trace_identity_residual, newton_residual) for the open Ehrenfest theorem.

    trace identity: |Tr{[X,[X,rho]] P}| dx, exactly zero in the continuum.
    newton: |d<P>/dt + <V'(X)>| with the derivative from one centred RK4 step
    of the pure-decoherence equation.
    """
    x = model.grid.axes[0]
    dx = model.grid.dx[0]
    gap_sq = (x[:, None] - x[None, :]) ** 2
    p_mat = momentum_matrix(model.grid)
    trace_identity = float(abs(np.trace((gap_sq * state.rho) @ p_mat)) * dx)

    def exp_p(rho: Array) -> float:
        return float(np.trace(rho @ p_mat).real * dx)

    plus = evolve_pure_decoherence(model, state, fd_dt, fd_dt)
    minus = evolve_pure_decoherence(model, state, -fd_dt, fd_dt)
    dp_dt = (exp_p(plus.rho) - exp_p(minus.rho)) / (2 * fd_dt)

    from .quantum import grid_gradient
    grad_v = grid_gradient(model.potential, model.grid, axis=0)
    mean_grad = float(np.sum(grad_v * np.diagonal(state.rho).real) * dx)
    return trace_identity, float(abs(dp_dt + mean_grad))


def fit_decay_rate(times: Array, magnitudes: Array,
                   separation: Optional[float] = None) -> dict:
    """Log-linear decay fit of an off-diagonal magnitude series.

    Returns the raw rate (Gamma-regime reading) and, when the packet
    separation is given, the rate divided by separation^2 (Lambda-regime
    reading). No crossover criterion is applied.
    """
    t = np.asarray(times, dtype=float)
    m = np.asarray(magnitudes, dtype=float)
    if np.any(m <= 0):
        raise ValueError("magnitudes must be positive for a log-linear fit")
    slope, _ = np.polyfit(t, np.log(m), 1)
    out = {"gamma_rate": float(-slope)}
    if separation is not None:
        out["lambda_rate"] = float(-slope / separation ** 2)
    return out
