"""Grid-based nonrelativistic Schrodinger mechanics (hbar = 1).

States live on uniform periodic grids (1D, or 2D for two-particle / planar
problems); evolution is Strang split-operator with spectral kinetic steps.
Scenarios are sized so packets never reach the boundary.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .core import DynamicalModel, NormedState
from .errors import DomainViolation, NumericalBlowup

log = logging.getLogger(__name__)

Array = np.ndarray
Scalar = Union[float, int]


def _per_axis(value, dim: int, name: str) -> tuple[float, ...]:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        return tuple(float(arr[0]) for _ in range(dim))
    if arr.size != dim:
        raise ValueError(f"{name} must be scalar or length {dim}")
    return tuple(float(v) for v in arr)


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid, 1 or 2 axes, n points per axis (power of two)."""

    extents: tuple[tuple[float, float], ...]
    n_points: tuple[int, ...]

    def __post_init__(self):
        ext = tuple((float(a), float(b)) for a, b in self.extents)
        npts = tuple(int(n) for n in np.atleast_1d(self.n_points))
        object.__setattr__(self, "extents", ext)
        object.__setattr__(self, "n_points", npts)
        if len(ext) not in (1, 2) or len(npts) != len(ext):
            raise ValueError("grid must have 1 or 2 axes with matching n_points")
        for (a, b), n in zip(ext, npts):
            if b <= a:
                raise ValueError("extent upper bound must exceed lower bound")
            if n < 64 or (n & (n - 1)) != 0:
                raise ValueError("n_points must be a power of two, at least 64")

    @classmethod
    def line(cls, x_min: float, x_max: float, n: int) -> "GridSpec":
        return cls(extents=((x_min, x_max),), n_points=(n,))

    @classmethod
    def square(cls, x_min: float, x_max: float, n: int,
               y_min: Optional[float] = None, y_max: Optional[float] = None,
               ny: Optional[int] = None) -> "GridSpec":
        y0 = x_min if y_min is None else y_min
        y1 = x_max if y_max is None else y_max
        return cls(extents=((x_min, x_max), (y0, y1)), n_points=(n, ny or n))

    @property
    def dim(self) -> int:
        return len(self.n_points)

    @property
    def axes(self) -> tuple[Array, ...]:
        return tuple(
            np.linspace(a, b, n, endpoint=False)
            for (a, b), n in zip(self.extents, self.n_points)
        )

    @property
    def dx(self) -> tuple[float, ...]:
        return tuple((b - a) / n for (a, b), n in zip(self.extents, self.n_points))

    @property
    def k_axes(self) -> tuple[Array, ...]:
        return tuple(
            2 * np.pi * np.fft.fftfreq(n, d) for n, d in zip(self.n_points, self.dx)
        )

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.dx))

    def meshes(self) -> tuple[Array, ...]:
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    def k_meshes(self) -> tuple[Array, ...]:
        return tuple(np.meshgrid(*self.k_axes, indexing="ij"))


@dataclass(frozen=True)
class GridWavefunction:
    """Complex amplitudes on a grid, with the owning mass context.

    ``mass`` may be per-axis (e.g. a two-particle state on a 2D grid). The
    norm is tracked, never silently repaired.
    """

    grid: GridSpec
    amplitudes: Array
    mass: Union[float, tuple[float, ...]]

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "mass", _per_axis(self.mass, self.grid.dim, "mass"))
        if amps.shape != self.grid.n_points:
            raise ValueError("amplitude array does not match the grid")
        if not np.all(np.isfinite(amps)):
            raise NumericalBlowup("non-finite wavefunction amplitudes")

    @property
    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.cell_volume)

    def density(self) -> Array:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class QuantumModel:
    """Hamiltonian H = p^2/2m + V(x) with V sampled on the grid."""

    grid: GridSpec
    mass: Union[float, tuple[float, ...]]
    potential: Array
    potential_fn: Optional[Callable] = None  # kept when built from a callable

    def __post_init__(self):
        object.__setattr__(self, "mass", _per_axis(self.mass, self.grid.dim, "mass"))
        v = np.asarray(self.potential, dtype=float)
        object.__setattr__(self, "potential", v)
        if v.shape != self.grid.n_points:
            raise ValueError("potential sample does not match the grid")
        if not np.all(np.isfinite(v)):
            raise ValueError("potential must be finite")

    @classmethod
    def from_potential(cls, grid: GridSpec, mass, fn: Callable) -> "QuantumModel":
        sampled = fn(*grid.meshes()) if grid.dim > 1 else fn(grid.axes[0])
        return cls(grid=grid, mass=mass, potential=np.broadcast_to(
            np.asarray(sampled, dtype=float), grid.n_points).copy(), potential_fn=fn)

    def kinetic_phase(self) -> Array:
        ks = self.grid.k_meshes()
        return sum(k ** 2 / (2 * m) for k, m in zip(ks, self.mass))

    def max_kinetic_phase(self) -> float:
        return float(np.max(self.kinetic_phase()))


def containment_ratio(psi: GridWavefunction) -> float:
    """Peak-relative boundary probability density (should stay below 1e-8)."""
    dens = psi.density()
    peak = dens.max()
    if psi.grid.dim == 1:
        edge = max(dens[0], dens[-1])
    else:
        edge = max(dens[0, :].max(), dens[-1, :].max(), dens[:, 0].max(), dens[:, -1].max())
    return float(edge / peak)


def make_gaussian(grid: GridSpec, x0, p0, L, mass) -> GridWavefunction:
    """Normalized packet psi ~ e^{i p0 x} e^{-(x-x0)^2 / 2 L^2} per axis.

    Minimum-uncertainty by construction (dx_rms * dp_rms = 1/2). Positions
    must sit at least 5L from the boundary and L at least 3 grid spacings.
    """
    dim = grid.dim
    x0 = _per_axis(x0, dim, "x0")
    p0 = _per_axis(p0, dim, "p0")
    L = _per_axis(L, dim, "L")
    for (lo, hi), c, width, d in zip(grid.extents, x0, L, grid.dx):
        if width < 3 * d:
            raise DomainViolation(f"packet width {width} under-resolved (dx={d})")
        if c - lo < 5 * width or hi - c < 5 * width:
            raise DomainViolation("packet closer than 5L to the grid boundary")
    meshes = grid.meshes()
    amp = np.ones(grid.n_points, dtype=complex)
    for mesh, c, mom, width in zip(meshes, x0, p0, L):
        amp = amp * np.exp(1j * mom * mesh) * np.exp(-((mesh - c) ** 2) / (2 * width ** 2))
    amp /= np.sqrt(np.sum(np.abs(amp) ** 2) * grid.cell_volume)
    psi = GridWavefunction(grid=grid, amplitudes=amp, mass=mass)
    if containment_ratio(psi) > 1e-8:
        raise DomainViolation("packet tails reach the boundary (containment violated)")
    return psi


def evolve_schrodinger(model: QuantumModel, psi: GridWavefunction, t: float,
                       dt: float) -> GridWavefunction:
    """Strang split-operator endpoint at time t (dt rounded to divide t).

    Precondition: dt * k_max^2 / 2m < 0.5. Norm drift above 1e-8 warns, above
    1e-6 raises. Negative t runs the inverse evolution.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if psi.grid != model.grid:
        raise ValueError("wavefunction grid does not match the model")
    if dt * model.max_kinetic_phase() >= 0.5:
        raise ValueError("dt too large: dt * k_max^2 / 2m must stay below 0.5")
    if t == 0:
        return psi
    n = max(1, int(round(abs(t) / dt)))
    h = t / n
    half_v = np.exp(-0.5j * h * model.potential)
    kinetic = np.exp(-1j * h * model.kinetic_phase())
    amp = psi.amplitudes
    norm0 = psi.norm_squared
    if model.grid.dim == 1:
        fft, ifft = np.fft.fft, np.fft.ifft
    else:
        fft, ifft = np.fft.fft2, np.fft.ifft2
    for _ in range(n):
        amp = half_v * ifft(kinetic * fft(half_v * amp))
    out = GridWavefunction(grid=psi.grid, amplitudes=amp, mass=psi.mass)
    drift = abs(out.norm_squared - norm0)
    if drift > 1e-6:
        raise NumericalBlowup(f"norm drift {drift:.2e} during Schrodinger evolution")
    if drift > 1e-8:
        log.warning("norm drift %.2e during Schrodinger evolution", drift)
    return out


def expectation_xp(psi: GridWavefunction) -> tuple[Array, Array]:
    """(<x>, <p>) per axis; positions by quadrature, momenta spectrally."""
    dens = psi.density()
    total = np.sum(dens)
    meshes = psi.grid.meshes()
    ex = np.array([np.sum(mesh * dens) / total for mesh in meshes])
    ft = np.fft.fftn(psi.amplitudes)
    w = np.abs(ft) ** 2
    wt = np.sum(w)
    ks = psi.grid.k_meshes()
    ep = np.array([np.sum(k * w) / wt for k in ks])
    return ex, ep


def position_widths(psi: GridWavefunction) -> Array:
    """Per-axis position standard deviations of |psi|^2."""
    dens = psi.density()
    total = np.sum(dens)
    out = []
    for mesh in psi.grid.meshes():
        mu = np.sum(mesh * dens) / total
        out.append(np.sqrt(np.sum((mesh - mu) ** 2 * dens) / total))
    return np.array(out)


def grid_gradient(values: Array, grid: GridSpec, axis: int = 0) -> Array:
    """Fourth-order periodic central difference (exact through quartics)."""
    d = grid.dx[axis]
    vp1 = np.roll(values, -1, axis=axis)
    vm1 = np.roll(values, 1, axis=axis)
    vp2 = np.roll(values, -2, axis=axis)
    vm2 = np.roll(values, 2, axis=axis)
    return (-vp2 + 8 * vp1 - 8 * vm1 + vm2) / (12 * d)


def _point_gradient(model: QuantumModel, point: Array) -> Array:
    # V'(<x>): five-point stencil on the callable when available, otherwise
    # linear interpolation of the sampled gradient.
    out = np.empty(model.grid.dim)
    for ax in range(model.grid.dim):
        d = model.grid.dx[ax]
        if model.potential_fn is not None:
            def v_at(shift):
                coords = list(point)
                coords[ax] = point[ax] + shift
                return float(model.potential_fn(*coords)) if model.grid.dim > 1 \
                    else float(model.potential_fn(coords[0]))
            out[ax] = (-v_at(2 * d) + 8 * v_at(d) - 8 * v_at(-d) + v_at(-2 * d)) / (12 * d)
        else:
            grad = grid_gradient(model.potential, model.grid, axis=ax)
            if model.grid.dim == 1:
                out[ax] = np.interp(point[0], model.grid.axes[0], grad)
            else:
                ix = np.searchsorted(model.grid.axes[ax], point[ax])
                out[ax] = np.take(grad, min(ix, model.grid.n_points[ax] - 1), axis=ax).mean()
    return out


def ehrenfest_residuals(model: QuantumModel, psi: GridWavefunction,
                        fd_dt: float = 1e-4) -> tuple[float, float]:
    """(exact, strong) Ehrenfest residuals.

    exact: |d<p>/dt + <V'(x)>| with the derivative from one centred split
    step; holds for every state. strong: |<V'(x)> - V'(<x>)|, the
    narrow-packet condition actually needed for classical behavior.
    """
    dens = psi.density()
    total = np.sum(dens)
    grad_means = np.array([
        np.sum(grid_gradient(model.potential, model.grid, axis=ax) * dens) / total
        for ax in range(model.grid.dim)
    ])
    fd_dt = min(fd_dt, 0.4 / model.max_kinetic_phase())
    plus = evolve_schrodinger(model, psi, fd_dt, fd_dt)
    minus = evolve_schrodinger(model, psi, -fd_dt, fd_dt)
    _, p_plus = expectation_xp(plus)
    _, p_minus = expectation_xp(minus)
    dp_dt = (p_plus - p_minus) / (2 * fd_dt)
    exact = float(np.max(np.abs(dp_dt + grad_means)))
    ex, _ = expectation_xp(psi)
    strong = float(np.max(np.abs(grad_means - _point_gradient(model, ex))))
    return exact, strong


def boost_wavefunction(psi: GridWavefunction, v, t: float) -> GridWavefunction:
    """Galilean boost: shift by v t (spectrally) and multiply the boost phase.

    Per axis with mass m: psi'(x) = e^{-i(m v x + m v^2 t / 2)} psi(x + v t);
    expectations move as <x> -> <x> - v t, <p> -> <p> - m v.
    """
    dim = psi.grid.dim
    vel = _per_axis(v, dim, "v")
    amp = psi.amplitudes
    ks = psi.grid.k_meshes()
    if t != 0.0:
        ft = np.fft.fftn(amp)
        shift = sum(k * vv * t for k, vv in zip(ks, vel))
        amp = np.fft.ifftn(ft * np.exp(1j * shift))
    meshes = psi.grid.meshes()
    phase = sum(m * vv * mesh for m, vv, mesh in zip(psi.mass, vel, meshes))
    phase = phase + 0.5 * sum(m * vv ** 2 for m, vv in zip(psi.mass, vel)) * t
    out = GridWavefunction(grid=psi.grid, amplitudes=amp * np.exp(-1j * phase), mass=psi.mass)
    if containment_ratio(out) > 1e-6:
        raise DomainViolation("boosted packet reaches the boundary")
    return out


def rotate_wavefunction_2d(psi: GridWavefunction, theta: float) -> GridWavefunction:
    """Bilinear-interpolated rigid rotation about the grid center, renormalized."""
    from scipy import ndimage

    if psi.grid.dim != 2:
        raise ValueError("rotation needs a 2D grid")
    (nx, ny) = psi.grid.n_points
    if nx != ny or psi.grid.extents[0] != psi.grid.extents[1]:
        raise ValueError("rotation needs a square grid with equal extents")
    lo, _ = psi.grid.extents[0]
    d = psi.grid.dx[0]
    center = -lo / d  # index of x = 0
    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    cos, sin = np.cos(theta), np.sin(theta)
    src_i = cos * (ii - center) + sin * (jj - center) + center
    src_j = -sin * (ii - center) + cos * (jj - center) + center
    # Sources outside the square read as zero: the packet is contained, and
    # wrapping would alias the packet into the rotated corners.
    re = ndimage.map_coordinates(psi.amplitudes.real, [src_i, src_j], order=1,
                                 mode="constant", cval=0.0)
    im = ndimage.map_coordinates(psi.amplitudes.imag, [src_i, src_j], order=1,
                                 mode="constant", cval=0.0)
    amp = re + 1j * im
    norm = np.sqrt(np.sum(np.abs(amp) ** 2) * psi.grid.cell_volume)
    log.debug("rotate_wavefunction_2d: interpolation norm defect %.2e", abs(norm - 1.0))
    out = GridWavefunction(grid=psi.grid, amplitudes=amp / norm, mass=psi.mass)
    if containment_ratio(out) > 1e-6:
        raise DomainViolation("rotated packet reaches the boundary")
    return out


def energy_expectation(model: QuantumModel, psi: GridWavefunction) -> float:
    ft = np.fft.fftn(psi.amplitudes)
    w = np.abs(ft) ** 2
    kin = np.sum(model.kinetic_phase() * w) / np.sum(w)
    dens = psi.density()
    pot = np.sum(model.potential * dens) / np.sum(dens)
    return float(kin + pot)


def free_spreading_width(a0: float, mass: float, t: float) -> float:
    """Free-packet width a(t) = sqrt(a0^2 + 4 t^2 / (m^2 a0^2)), a = 2 sigma."""
    if a0 <= 0:
        raise ValueError("a0 must be positive")
    return float(np.sqrt(a0 ** 2 + 4.0 * t ** 2 / (mass ** 2 * a0 ** 2)))


def persistence_estimate(a0: float, a_max: float, mass: float, speed: float,
                         hbar: float = 1.0) -> tuple[float, float]:
    """Time for a free packet to spread from a0 to a_max, and distance covered.

    t = (m a0 / 2 hbar) sqrt(a_max^2 - a0^2); distance = speed * t. Pass SI
    values with the SI hbar for laboratory estimates.
    """
    if a_max < a0:
        raise ValueError("a_max must be at least a0")
    t = mass * a0 / (2.0 * hbar) * np.sqrt(a_max ** 2 - a0 ** 2)
    return float(t), float(speed * t)


# ---------------------------------------------------------------------------
# Adapters into the abstract reduction framework


def wavefunction_to_normed(psi: GridWavefunction, space_tag: str) -> NormedState:
    return NormedState(psi.amplitudes, space_tag)


def normed_to_wavefunction(x: NormedState, model: QuantumModel) -> GridWavefunction:
    return GridWavefunction(grid=model.grid, amplitudes=x.coordinates, mass=model.mass)


def reduction_model(model: QuantumModel, dt: float, model_id: str) -> DynamicalModel:
    """Wrap a grid Schrodinger model as a DynamicalModel over amplitudes."""
    tag = f"hilbert:{model_id}"

    def dyn(t: float, x: NormedState) -> NormedState:
        psi = normed_to_wavefunction(x, model)
        return wavefunction_to_normed(evolve_schrodinger(model, psi, t, dt), tag)

    def hilbert_norm(a: NormedState, b: NormedState) -> float:
        return float(np.sqrt(np.sum(np.abs(a.coordinates - b.coordinates) ** 2)
                             * model.grid.cell_volume))

    return DynamicalModel(
        model_id=model_id,
        dimension=int(np.prod(model.grid.n_points)),
        space_tag=tag,
        norm=hilbert_norm,
        dynamics=dyn,
    )


def expectation_bridge_map(model: QuantumModel, x: NormedState) -> tuple[Array, Array]:
    psi = normed_to_wavefunction(x, model)
    return expectation_xp(psi)
