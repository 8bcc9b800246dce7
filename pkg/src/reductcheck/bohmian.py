"""Bohmian trajectory machinery over grid wavefunctions.

Velocities come from the guidance equation v = Im(psi* grad psi) / (m |psi|^2)
with spectral gradients; the field is singular at nodes, so nodal cells are
masked and clamped to the nearest unmasked value rather than trusted.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, DomainViolation
from .quantum import GridSpec, GridWavefunction, QuantumModel, evolve_schrodinger

log = logging.getLogger(__name__)

Array = np.ndarray

TRAJECTORY_LOG_CAP = 200


@dataclass(frozen=True)
class BohmianEnsemble:
    """Uniformly weighted configurations on a 1D or 2D grid."""

    positions: Array  # shape (n,) in 1D or (n, 2) in 2D
    rng_seed: Optional[int] = None

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        object.__setattr__(self, "positions", pos)
        if pos.ndim not in (1, 2):
            raise ValueError("positions must be (n,) or (n, dim)")

    @property
    def size(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class VelocityField:
    grid: GridSpec
    values: tuple[Array, ...]  # one array per axis
    nodal_mask: Array


@dataclass
class TrajectoryLog:
    times: Array
    positions: Array  # (n_steps+1, n_logged) or (n_steps+1, n_logged, 2)
    near_node_flags: Array  # per logged trajectory: ever inside the nodal mask


def velocity_field(psi: GridWavefunction, mass=None, eps_node: float = 1e-12) -> VelocityField:
    """Guidance-equation velocity per axis, nodal cells clamped.

    Nodes are cells with |psi|^2 below eps_node times the peak density; their
    velocities are replaced by the nearest unmasked cell's value.
    """
    from scipy import ndimage

    masses = psi.mass if mass is None else np.atleast_1d(np.asarray(mass, dtype=float))
    if np.size(masses) == 1:
        masses = tuple(float(np.ravel(masses)[0]) for _ in range(psi.grid.dim))
    dens = psi.density()
    floor = eps_node * dens.max()
    mask = dens < floor
    ft = np.fft.fftn(psi.amplitudes)
    ks = psi.grid.k_meshes()
    values = []
    safe = np.maximum(dens, floor)
    if np.all(mask):
        raise ConfigurationError("wavefunction is numerically zero everywhere")
    if mask.any():
        _, nearest = ndimage.distance_transform_edt(mask, return_indices=True)
    for axis, (k, m) in enumerate(zip(ks, masses)):
        grad = np.fft.ifftn(1j * k * ft)
        v = (np.conj(psi.amplitudes) * grad).imag / (m * safe)
        if mask.any():
            v = v[tuple(nearest)]
        values.append(v)
    return VelocityField(grid=psi.grid, values=tuple(values), nodal_mask=mask)


def _interpolate(field: Array, grid: GridSpec, pos: Array) -> Array:
    """Linear (1D) or bilinear (2D) interpolation, edge-clamped."""
    if grid.dim == 1:
        return np.interp(pos, grid.axes[0], field)
    xg, yg = grid.axes
    dx, dy = grid.dx
    ix = np.clip((pos[:, 0] - xg[0]) / dx, 0, xg.size - 1 - 1e-9)
    iy = np.clip((pos[:, 1] - yg[0]) / dy, 0, yg.size - 1 - 1e-9)
    i0 = ix.astype(int)
    j0 = iy.astype(int)
    fx = ix - i0
    fy = iy - j0
    return (field[i0, j0] * (1 - fx) * (1 - fy)
            + field[i0 + 1, j0] * fx * (1 - fy)
            + field[i0, j0 + 1] * (1 - fx) * fy
            + field[i0 + 1, j0 + 1] * fx * fy)


def _velocity_at(field: VelocityField, pos: Array) -> Array:
    if field.grid.dim == 1:
        return _interpolate(field.values[0], field.grid, pos)
    vx = _interpolate(field.values[0], field.grid, pos)
    vy = _interpolate(field.values[1], field.grid, pos)
    return np.stack([vx, vy], axis=1)


def _check_inside(grid: GridSpec, pos: Array) -> None:
    flat = pos if pos.ndim == 2 else pos[:, None]
    for axis, (lo, hi) in enumerate(grid.extents):
        coords = flat[:, axis]
        bad = np.nonzero((coords < lo) | (coords > hi))[0]
        if bad.size:
            raise DomainViolation(f"trajectory {int(bad[0])} left the grid on axis {axis}")


def advance_trajectories(
    model: QuantumModel,
    psi0: GridWavefunction,
    ensemble: BohmianEnsemble,
    t: float,
    dt: float,
    eps_node: float = 1e-12,
) -> tuple[BohmianEnsemble, GridWavefunction, TrajectoryLog]:
    """March trajectories in lockstep with the evolving wavefunction.

    RK2 midpoint steps through time-interpolated velocity fields: the midpoint
    velocity averages the fields at t_k and t_{k+1}. Returns the final
    ensemble, the evolved wavefunction, and a per-step log capped at
    TRAJECTORY_LOG_CAP trajectories.
    """
    n_steps = max(1, int(round(t / dt)))
    h = t / n_steps
    pos = ensemble.positions.copy()
    _check_inside(model.grid, pos)
    n_logged = min(ensemble.size, TRAJECTORY_LOG_CAP)
    logged = np.empty((n_steps + 1,) + pos[:n_logged].shape)
    logged[0] = pos[:n_logged]
    near_node = np.zeros(n_logged, dtype=bool)
    psi = psi0
    field = velocity_field(psi, eps_node=eps_node)
    for step in range(n_steps):
        psi_next = evolve_schrodinger(model, psi, h, h)
        field_next = velocity_field(psi_next, eps_node=eps_node)
        v1 = _velocity_at(field, pos)
        mid = pos + 0.5 * h * v1
        v_mid = 0.5 * (_velocity_at(field, mid) + _velocity_at(field_next, mid))
        pos = pos + h * v_mid
        _check_inside(model.grid, pos)
        if field.nodal_mask.any():
            sample = pos[:n_logged]
            idx = np.round(
                (np.atleast_2d(sample.T).T - [lo for lo, _ in model.grid.extents])
                / model.grid.dx).astype(int)
            idx = np.clip(idx, 0, np.array(model.grid.n_points) - 1)
            near_node |= field.nodal_mask[tuple(idx.T)] if model.grid.dim == 2 \
                else field.nodal_mask[idx[:, 0]]
        logged[step + 1] = pos[:n_logged]
        psi = psi_next
        field = field_next
    out = BohmianEnsemble(positions=pos, rng_seed=ensemble.rng_seed)
    times = np.linspace(0.0, t, n_steps + 1)
    return out, psi, TrajectoryLog(times=times, positions=logged, near_node_flags=near_node)


def sample_born(psi: GridWavefunction, n: int, seed: int) -> BohmianEnsemble:
    """Draw n configurations from |psi|^2: inverse-CDF in 1D, rejection in 2D."""
    if n < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    dens = psi.density()
    if psi.grid.dim == 1:
        x = psi.grid.axes[0]
        cdf = _midpoint_cdf(dens)
        pos = np.interp(rng.uniform(size=n), cdf, x)
        return BohmianEnsemble(positions=pos, rng_seed=seed)
    peak = dens.max()
    (x0, x1), (y0, y1) = psi.grid.extents
    out = np.empty((n, 2))
    filled = 0
    while filled < n:
        batch = max(2 * (n - filled), 64)
        cand = np.column_stack([
            rng.uniform(x0, x1, size=batch),
            rng.uniform(y0, y1, size=batch),
        ])
        accept = rng.uniform(0, peak, size=batch) < _interpolate(dens, psi.grid, cand)
        take = cand[accept][: n - filled]
        out[filled: filled + take.shape[0]] = take
        filled += take.shape[0]
    return BohmianEnsemble(positions=out, rng_seed=seed)


def _midpoint_cdf(density: Array) -> Array:
    """Cell-midpoint CDF for inverse sampling (right-edge cumsum is dx/2 biased)."""
    cdf = np.cumsum(density) - 0.5 * density
    return cdf / (np.sum(density))


def quantile_ensemble(psi: GridWavefunction, n: int) -> BohmianEnsemble:
    """Deterministic stratified 1D ensemble (inverse CDF at bin midpoints)."""
    if psi.grid.dim != 1:
        raise ValueError("quantile ensembles are 1D")
    u = (np.arange(n) + 0.5) / n
    pos = np.interp(u, _midpoint_cdf(psi.density()), psi.grid.axes[0])
    return BohmianEnsemble(positions=pos)


def equivariance_distance(ensemble: BohmianEnsemble, psi: GridWavefunction) -> float:
    """Kolmogorov-Smirnov distance between the ensemble and |psi|^2.

    In 2D both marginals are tested and the larger distance returned.
    """
    def ks_1d(samples: Array, axis_values: Array, density: Array) -> float:
        cdf = _midpoint_cdf(density)
        s = np.sort(samples)
        empirical = (np.arange(s.size) + 1) / s.size
        theory = np.interp(s, axis_values, cdf)
        return float(np.max(np.abs(empirical - theory)))

    dens = psi.density()
    if psi.grid.dim == 1:
        return ks_1d(ensemble.positions, psi.grid.axes[0], dens)
    dx, dy = psi.grid.dx
    marg_x = dens.sum(axis=1) * dy
    marg_y = dens.sum(axis=0) * dx
    return max(
        ks_1d(ensemble.positions[:, 0], psi.grid.axes[0], marg_x),
        ks_1d(ensemble.positions[:, 1], psi.grid.axes[1], marg_y),
    )


def quantum_potential(psi: GridWavefunction, mass=None, eps_node: float = 1e-12) -> Array:
    """Q = -(1/2m) laplacian(R)/R with R = |psi|, nan on the nodal mask.

    With per-axis masses the kinetic weighting follows each axis.
    """
    masses = psi.mass if mass is None else np.atleast_1d(np.asarray(mass, dtype=float))
    if np.size(masses) == 1:
        masses = tuple(float(np.ravel(masses)[0]) for _ in range(psi.grid.dim))
    r = np.abs(psi.amplitudes)
    mask = psi.density() < eps_node * psi.density().max()
    ft = np.fft.fftn(r)
    ks = psi.grid.k_meshes()
    q = np.zeros_like(r)
    for k, m in zip(ks, masses):
        q = q - np.fft.ifftn(-(k ** 2) * ft).real / (2 * m)
    q = q / np.where(mask, 1.0, r)
    q[mask] = np.nan
    return q


def no_crossing_check(log_: TrajectoryLog, dx: float) -> tuple[bool, Optional[dict]]:
    """1D trajectories must preserve their ordering at every logged step.

    Ties within dx/2 are tolerated. Returns the first violating step and pair
    otherwise.
    """
    pos = log_.positions
    if pos.ndim != 2:
        raise ValueError("no-crossing check applies to 1D trajectory logs")
    order = np.argsort(pos[0])
    sorted_pos = pos[:, order]
    gaps = np.diff(sorted_pos, axis=1)
    bad = np.nonzero(gaps < -dx / 2)
    if bad[0].size == 0:
        return True, None
    step, pair = int(bad[0][0]), int(bad[1][0])
    return False, {"step": step, "time": float(log_.times[step]), "pair": pair}


def epsilon_support(psi: GridWavefunction, eps: float) -> Array:
    """Boolean mask of grid cells with |psi| above eps."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return np.abs(psi.amplitudes) > eps


def support_components(mask: Array) -> int:
    """Number of connected components of a support mask."""
    from scipy import ndimage

    _, count = ndimage.label(mask)
    return int(count)


@dataclass
class TwoPacketReport:
    collide_with_environment: bool
    n_trajectories: int
    fraction_reversed: float
    fraction_passed_through: float
    no_crossings: Optional[bool]
    environment_migrations: Optional[int]
    final_time: float


def two_packet_scenario(collide_with_environment: bool, params: Optional[dict] = None,
                        ) -> TwoPacketReport:
    """Two counter-propagating packets, with or without an environment coordinate.

    Without environment (1D): psi = (|q1, p> + |q2, -p>)/sqrt(2); trajectories
    reverse at the collision and never cross. With environment (2D, system x
    environment y, disjoint y supports): the x-components pass through. The
    packets must be disjoint at the configured support threshold.
    """
    p = {
        "p0": 3.0 if not collide_with_environment else 4.0,
        "separation": 8.0 if not collide_with_environment else 10.0,
        "packet_width": 1.0 if not collide_with_environment else 1.5,
        "mass": 1.0,
        "env_mass": 100.0,
        "env_width": 0.5,
        "env_separation_widths": 10.0,
        "x_max": 14.0,
        "y_max": 6.0,
        "nx": 512 if not collide_with_environment else 256,
        "ny": 128,
        "t_end": 2.6 if not collide_with_environment else 2.4,
        "n_trajectories": 200,
        "seed": 7,
        "support_eps_rel": 0.05,
        "identical_environment": False,
    }
    p.update(params or {})
    m = float(p["mass"])
    half = float(p["separation"]) / 2.0
    width = float(p["packet_width"])
    p0 = float(p["p0"])

    if not collide_with_environment:
        grid = GridSpec.line(-p["x_max"], p["x_max"], p["nx"])
        x = grid.axes[0]
        amp = (np.exp(1j * p0 * x) * np.exp(-((x + half) ** 2) / (2 * width ** 2))
               + np.exp(-1j * p0 * x) * np.exp(-((x - half) ** 2) / (2 * width ** 2)))
        amp /= np.sqrt(np.sum(np.abs(amp) ** 2) * grid.cell_volume)
        psi = GridWavefunction(grid=grid, amplitudes=amp, mass=m)
        _require_disjoint_1d(psi, half, float(p["support_eps_rel"]))
        model = QuantumModel(grid=grid, mass=m, potential=np.zeros(grid.n_points))
        dt = 0.8 * 0.5 / model.max_kinetic_phase()
        ens = sample_born(psi, int(p["n_trajectories"]), int(p["seed"]))
        start = ens.positions.copy()
        final, _, traj_log = advance_trajectories(model, psi, ens, float(p["t_end"]), dt)
        left = start < 0
        reversed_frac = float(np.mean(final.positions[left] < 0)
                              + np.mean(final.positions[~left] > 0)) / 2.0
        ok, _ = no_crossing_check(traj_log, grid.dx[0])
        return TwoPacketReport(
            collide_with_environment=False,
            n_trajectories=int(p["n_trajectories"]),
            fraction_reversed=reversed_frac,
            fraction_passed_through=1.0 - reversed_frac,
            no_crossings=ok,
            environment_migrations=None,
            final_time=float(p["t_end"]),
        )

    my = float(p["env_mass"])
    w = float(p["env_width"])
    y0 = float(p["env_separation_widths"]) * w / 2.0
    grid = GridSpec.square(-p["x_max"], p["x_max"], p["nx"], -p["y_max"], p["y_max"], p["ny"])
    xm, ym = grid.meshes()
    ya, yb = (0.0, 0.0) if p["identical_environment"] else (-y0, y0)
    amp = (np.exp(1j * p0 * xm) * np.exp(-((xm + half) ** 2) / (2 * width ** 2))
           * np.exp(-((ym - ya) ** 2) / (2 * w ** 2))
           + np.exp(-1j * p0 * xm) * np.exp(-((xm - half) ** 2) / (2 * width ** 2))
           * np.exp(-((ym - yb) ** 2) / (2 * w ** 2)))
    amp /= np.sqrt(np.sum(np.abs(amp) ** 2) * grid.cell_volume)
    psi = GridWavefunction(grid=grid, amplitudes=amp, mass=(m, my))
    if not p["identical_environment"]:
        _require_disjoint_env(psi, float(p["support_eps_rel"]))
    model = QuantumModel(grid=grid, mass=(m, my), potential=np.zeros(grid.n_points))
    dt = 0.8 * 0.5 / model.max_kinetic_phase()
    ens = sample_born(psi, int(p["n_trajectories"]), int(p["seed"]))
    start = ens.positions.copy()
    final, _, _ = advance_trajectories(model, psi, ens, float(p["t_end"]), dt)
    left = start[:, 0] < 0
    through = float(np.mean(final.positions[left, 0] > 0)
                    + np.mean(final.positions[~left, 0] < 0)) / 2.0
    migrations = int(np.sum(np.sign(final.positions[:, 1]) != np.sign(start[:, 1]))) \
        if not p["identical_environment"] else None
    return TwoPacketReport(
        collide_with_environment=True,
        n_trajectories=int(p["n_trajectories"]),
        fraction_reversed=1.0 - through,
        fraction_passed_through=through,
        no_crossings=None,
        environment_migrations=migrations,
        final_time=float(p["t_end"]),
    )


def _require_disjoint_1d(psi: GridWavefunction, half: float, eps_rel: float) -> None:
    x = psi.grid.axes[0]
    gap = np.abs(x) < half / 4
    peak = np.abs(psi.amplitudes).max()
    if np.max(np.abs(psi.amplitudes)[gap]) > eps_rel * peak:
        raise ConfigurationError("packets are not initially disjoint at the support threshold")


def _require_disjoint_env(psi: GridWavefunction, eps_rel: float) -> None:
    marg = psi.density().sum(axis=0)
    y = psi.grid.axes[1]
    gap = np.abs(y) < 0.5
    if np.max(marg[gap]) > (eps_rel ** 2) * marg.max():
        raise ConfigurationError("environment supports are not disjoint at the threshold")
