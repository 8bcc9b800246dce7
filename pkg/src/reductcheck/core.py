"""Abstract reduction framework: models, bridge maps, residual checks.

A low-level model reduces a high-level model over timescale tau within error
budget delta when the bridge map commutes with both dynamical maps to within
delta (in the high-level norm) on a declared domain of low-level states, and
is compatible with the registered dynamical symmetries of the two models.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import CompositionError, ConfigurationError, DomainViolation, NumericalBlowup

Array = np.ndarray


def worker_count() -> int:
    """Per-sample parallelism, capped by REDUCTCHECK_THREADS (default serial)."""
    raw = os.environ.get("REDUCTCHECK_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return max(1, n) if n else 1


@dataclass(frozen=True)
class NormedState:
    """A point in some model's state space, tagged with the space it lives in."""

    coordinates: Array
    space_tag: str

    def __post_init__(self):
        coords = np.asarray(self.coordinates)
        object.__setattr__(self, "coordinates", coords)
        if not np.all(np.isfinite(coords)):
            raise NumericalBlowup(f"non-finite coordinates in state of space '{self.space_tag}'")


@dataclass(frozen=True)
class SymmetryTransform:
    """A state-space automorphism expected to commute with the dynamics.

    ``action`` is the t=0 action. Transforms with explicit time dependence
    (e.g. Galilean boosts) also carry ``action_at_time`` giving the rule for
    general t; checks in this module use the t=0 action.
    """

    name: str
    params: Array
    action: Callable[[NormedState], NormedState]
    may_depend_on_time: bool = False
    action_at_time: Optional[Callable[[NormedState, float], NormedState]] = None


@dataclass(frozen=True)
class DynamicalModel:
    """A state space plus deterministic dynamical map D(t, x).

    ``dynamics`` must be the identity at t=0 (up to integrator tolerance) and
    a bijection on the represented domain; both are exercised by round-trip
    tests rather than enforced per call.
    """

    model_id: str
    dimension: int
    space_tag: str
    norm: Callable[[NormedState, NormedState], float]
    dynamics: Callable[[float, NormedState], NormedState]
    symmetries: tuple[SymmetryTransform, ...] = ()

    def check_state(self, x: NormedState) -> None:
        if x.space_tag != self.space_tag:
            raise DomainViolation(
                f"state of space '{x.space_tag}' passed to model '{self.model_id}' "
                f"(expects '{self.space_tag}')"
            )

    def evolve(self, t: float, x: NormedState) -> NormedState:
        """Run the dynamical map with tag and finiteness checks."""
        self.check_state(x)
        try:
            out = self.dynamics(t, x)
        except NumericalBlowup as exc:
            raise NumericalBlowup(f"model '{self.model_id}' at t={t}: {exc}") from exc
        if not np.all(np.isfinite(out.coordinates)):
            raise NumericalBlowup(f"model '{self.model_id}' produced non-finite state at t={t}")
        return out

    def symmetry(self, name: str) -> SymmetryTransform:
        for sym in self.symmetries:
            if sym.name == name:
                return sym
        raise KeyError(f"model '{self.model_id}' has no registered symmetry '{name}'")


@dataclass(frozen=True)
class BridgeMap:
    """Time-independent map from a low-level state space into a high-level one.

    Time independence is structural: ``map`` takes no time argument. The
    validity domain d is represented by a membership predicate plus a sampler
    producing states inside d (fixtures with seeded perturbations).
    """

    low_model_id: str
    high_model_id: str
    map: Callable[[NormedState], NormedState]
    domain_sampler: Callable[[np.random.Generator, int], list[NormedState]]
    domain_predicate: Callable[[NormedState], bool]


@dataclass(frozen=True)
class ReductionSpec:
    """Error budget delta, timescale tau and sampling plan for check_dsr."""

    delta: float
    tau: float
    time_grid: Array
    n_domain_samples: int = 8
    rng_seed: int = 0

    def __post_init__(self):
        grid = np.asarray(self.time_grid, dtype=float)
        object.__setattr__(self, "time_grid", grid)
        if self.delta <= 0:
            raise ConfigurationError("delta must be positive")
        if self.tau <= 0:
            raise ConfigurationError("tau must be positive")
        if grid.ndim != 1 or grid.size < 1 or grid[0] != 0.0:
            raise ConfigurationError("time_grid must be 1-D and start at 0")
        if np.any(np.diff(grid) <= 0):
            raise ConfigurationError("time_grid must be strictly increasing")
        if grid[-1] > self.tau * (1 + 1e-12):
            raise ConfigurationError("time_grid extends past tau")
        if self.n_domain_samples < 1:
            raise ConfigurationError("need at least one domain sample")

    @classmethod
    def uniform(cls, delta: float, tau: float, n_times: int = 101, **kw) -> "ReductionSpec":
        return cls(delta=delta, tau=tau, time_grid=np.linspace(0.0, tau, n_times), **kw)


@dataclass(frozen=True)
class SymmetryResult:
    """Outcome of one symmetry-compatibility check (condition 2a or 2b)."""

    name: str
    max_residual: float
    tol: float
    n_evaluated: int
    n_excluded: int
    status: str  # "pass" | "fail" | "inconclusive"

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def _tau_max(times: Array, residuals: Array, delta: float) -> float:
    """Largest prefix time with every residual below delta (grid resolution)."""
    bad = np.nonzero(residuals >= delta)[0]
    if bad.size == 0:
        return float(times[-1])
    if bad[0] == 0:
        return 0.0
    return float(times[bad[0] - 1])


@dataclass
class ReductionReport:
    """Residual traces and verdicts for one DSR check."""

    low_model_id: str
    high_model_id: str
    delta: float
    tau: float
    times: Array
    residual_traces: Array  # shape (n_samples, n_times)
    symmetry_results: list[SymmetryResult] = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residual_traces))

    @property
    def verdict(self) -> bool:
        return self.max_residual < self.delta

    def tau_max(self, delta: Optional[float] = None) -> float:
        """Global tau_max(delta): min over samples of the per-sample value."""
        d = self.delta if delta is None else delta
        return min(_tau_max(self.times, trace, d) for trace in self.residual_traces)

    def tau_max_per_sample(self, delta: Optional[float] = None) -> list[float]:
        d = self.delta if delta is None else delta
        return [_tau_max(self.times, trace, d) for trace in self.residual_traces]

    def verdict_at(self, delta: float) -> bool:
        return self.max_residual < delta


@dataclass
class TransitivityReport:
    """check_dsr results for both component reductions and their composition."""

    report_21: ReductionReport  # M1 <- M2
    report_32: ReductionReport  # M2 <- M3
    report_31: ReductionReport  # M1 <- M3 via composed bridge
    lipschitz_k: float
    delta_combined: float
    tau_combined: float

    @property
    def composed_passes_combined(self) -> bool:
        """Composed residuals stay below delta1 + K*delta2 up to min(tau1, tau2)."""
        mask = self.report_31.times <= self.tau_combined + 1e-12
        return bool(np.all(self.report_31.residual_traces[:, mask] < self.delta_combined))

    @property
    def verdict(self) -> bool:
        return self.report_31.verdict


def dsr_residual(
    low: DynamicalModel,
    high: DynamicalModel,
    bridge: BridgeMap,
    x0_low: NormedState,
    t: float,
) -> float:
    """High-level-norm distance between the induced and genuine dynamics at t.

    Returns ||B(D_l(t; x0)) - D_h(t; B(x0))||_h. The state must lie in the
    bridge's declared domain.
    """
    if t < 0:
        raise ConfigurationError("dsr_residual requires t >= 0")
    if not bridge.domain_predicate(x0_low):
        raise DomainViolation("initial state outside the bridge domain")
    xl_t = low.evolve(t, x0_low)
    xh_0 = bridge.map(x0_low)
    xh_t = high.evolve(t, xh_0)
    return float(high.norm(bridge.map(xl_t), xh_t))


def _residual_trace(
    low: DynamicalModel,
    high: DynamicalModel,
    bridge: BridgeMap,
    x0: NormedState,
    times: Array,
) -> Array:
    # Incremental evolution down the time grid; valid because all dynamics
    # here are autonomous (D(t1+t2) = D(t2) o D(t1)).
    xl = x0
    xh = bridge.map(x0)
    out = np.empty(times.size)
    out[0] = float(high.norm(bridge.map(xl), xh))
    t_prev = times[0]
    for j, t in enumerate(times[1:], start=1):
        seg = float(t - t_prev)
        xl = low.evolve(seg, xl)
        xh = high.evolve(seg, xh)
        t_prev = t
        out[j] = float(high.norm(bridge.map(xl), xh))
    return out


def check_dsr(
    low: DynamicalModel,
    high: DynamicalModel,
    bridge: BridgeMap,
    spec: ReductionSpec,
) -> ReductionReport:
    """Evaluate the DSR residual over the sampled domain and time grid."""
    rng = np.random.default_rng(spec.rng_seed)
    samples = bridge.domain_sampler(rng, spec.n_domain_samples)
    if not samples:
        raise ConfigurationError("bridge domain sampler produced no states")
    for s in samples:
        if not bridge.domain_predicate(s):
            raise DomainViolation("sampler produced a state outside the bridge domain")

    def one(x0: NormedState) -> Array:
        return _residual_trace(low, high, bridge, x0, spec.time_grid)

    workers = worker_count()
    if workers > 1 and len(samples) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(one, samples))
    else:
        traces = [one(s) for s in samples]

    return ReductionReport(
        low_model_id=low.model_id,
        high_model_id=high.model_id,
        delta=spec.delta,
        tau=spec.tau,
        times=spec.time_grid.copy(),
        residual_traces=np.vstack(traces),
    )


def dsr_differential_residual(
    low: DynamicalModel,
    high: DynamicalModel,
    bridge: BridgeMap,
    x0_low: NormedState,
    t: float,
    fd_step: float,
    high_vector_field: Optional[Callable[[NormedState, float], Array]] = None,
) -> float:
    """Differential form of the DSR condition at time t.

    Compares d/dt B(x_l(t)) (central finite difference of step fd_step) with
    the high-level vector field at B(x_l(t)). When no analytic field is
    supplied it is taken from the dynamical map, f_h = d/ds D_h(s; x)|_0 by
    the same central difference. Sufficient, not necessary, for the
    state-space condition.
    """
    if fd_step <= 0:
        raise ConfigurationError("fd_step must be positive")
    if not bridge.domain_predicate(x0_low):
        raise DomainViolation("initial state outside the bridge domain")
    xl_t = low.evolve(t, x0_low)
    xl_p = low.evolve(fd_step, xl_t)
    xl_m = low.evolve(-fd_step, xl_t)
    b_p = bridge.map(xl_p).coordinates.astype(float)
    b_m = bridge.map(xl_m).coordinates.astype(float)
    deriv = (b_p - b_m) / (2.0 * fd_step)
    b_t = bridge.map(xl_t)
    if high_vector_field is not None:
        f_h = np.asarray(high_vector_field(b_t, t), dtype=float)
    else:
        h_p = high.evolve(fd_step, b_t).coordinates.astype(float)
        h_m = high.evolve(-fd_step, b_t).coordinates.astype(float)
        f_h = (h_p - h_m) / (2.0 * fd_step)
    diff = deriv - f_h
    zero = NormedState(np.zeros_like(diff), high.space_tag)
    return float(high.norm(NormedState(diff, high.space_tag), zero))


def check_symmetry_commutation(
    low: DynamicalModel,
    high: DynamicalModel,
    bridge: BridgeMap,
    t_high: SymmetryTransform,
    t_low: SymmetryTransform,
    samples: Sequence[NormedState],
    tol: float,
) -> SymmetryResult:
    """Condition 2a: T_h(B(x)) ~ B(T_l(x)) over the given domain samples.

    Samples whose transform leaves the bridge domain are excluded (transformed
    trajectories outside B(d) are not required to reduce); if every sample is
    excluded the verdict is inconclusive rather than pass/fail.
    """
    residuals = []
    excluded = 0
    for x in samples:
        tx = t_low.action(x)
        if not bridge.domain_predicate(tx):
            excluded += 1
            continue
        lhs = t_high.action(bridge.map(x))
        rhs = bridge.map(tx)
        residuals.append(float(high.norm(lhs, rhs)))
    if not residuals:
        return SymmetryResult(
            name=f"2a:{t_high.name}", max_residual=float("nan"), tol=tol,
            n_evaluated=0, n_excluded=excluded, status="inconclusive",
        )
    worst = max(residuals)
    return SymmetryResult(
        name=f"2a:{t_high.name}", max_residual=worst, tol=tol,
        n_evaluated=len(residuals), n_excluded=excluded,
        status="pass" if worst < tol else "fail",
    )


def check_symmetry_group(
    low: DynamicalModel,
    high: DynamicalModel,
    bridge: BridgeMap,
    pair1: tuple[SymmetryTransform, SymmetryTransform],
    pair2: tuple[SymmetryTransform, SymmetryTransform],
    samples: Sequence[NormedState],
    tol: float,
) -> SymmetryResult:
    """Condition 2b: composition of two 2a-passing pairs also commutes with B."""
    th1, tl1 = pair1
    th2, tl2 = pair2
    residuals = []
    excluded = 0
    for x in samples:
        t2x = tl2.action(x)
        if not bridge.domain_predicate(t2x):
            excluded += 1
            continue
        t12x = tl1.action(t2x)
        if not bridge.domain_predicate(t12x):
            excluded += 1
            continue
        lhs = th1.action(th2.action(bridge.map(x)))
        rhs = bridge.map(t12x)
        residuals.append(float(high.norm(lhs, rhs)))
    name = f"2b:{th1.name}*{th2.name}"
    if not residuals:
        return SymmetryResult(name=name, max_residual=float("nan"), tol=tol,
                              n_evaluated=0, n_excluded=excluded, status="inconclusive")
    worst = max(residuals)
    return SymmetryResult(name=name, max_residual=worst, tol=tol,
                          n_evaluated=len(residuals), n_excluded=excluded,
                          status="pass" if worst < tol else "fail")


def compose_bridges(b21: BridgeMap, b32: BridgeMap) -> BridgeMap:
    """B31 = B21 o B32 with domain d2 intersected with the preimage of d1."""
    if b21.low_model_id != b32.high_model_id:
        raise CompositionError(
            f"cannot compose: B21 maps from '{b21.low_model_id}' but B32 maps "
            f"into '{b32.high_model_id}'"
        )

    def mapped(x: NormedState) -> NormedState:
        return b21.map(b32.map(x))

    def predicate(x: NormedState) -> bool:
        return bool(b32.domain_predicate(x)) and bool(b21.domain_predicate(b32.map(x)))

    def sampler(rng: np.random.Generator, n: int) -> list[NormedState]:
        # Rejection-filter d2 samples through the preimage condition; bounded
        # retries so an empty composed domain surfaces as a config error.
        kept: list[NormedState] = []
        for _ in range(50):
            for s in b32.domain_sampler(rng, n):
                if predicate(s):
                    kept.append(s)
                if len(kept) >= n:
                    return kept
        if not kept:
            raise ConfigurationError("composed bridge domain is empty (inconclusive)")
        return kept

    return BridgeMap(
        low_model_id=b32.low_model_id,
        high_model_id=b21.high_model_id,
        map=mapped,
        domain_sampler=sampler,
        domain_predicate=predicate,
    )


def estimate_lipschitz(
    bridge: BridgeMap,
    low_norm: Callable[[NormedState, NormedState], float],
    high_norm: Callable[[NormedState, NormedState], float],
    rng: np.random.Generator,
    n_pairs: int = 64,
) -> float:
    """Empirical Lipschitz bound of a bridge map over sampled domain pairs."""
    states = bridge.domain_sampler(rng, 2 * n_pairs)
    best = 0.0
    for a, b in zip(states[0::2], states[1::2]):
        denom = low_norm(a, b)
        if denom < 1e-12:
            continue
        best = max(best, high_norm(bridge.map(a), bridge.map(b)) / denom)
    return best


def check_transitivity(
    m1: DynamicalModel,
    m2: DynamicalModel,
    m3: DynamicalModel,
    b21: BridgeMap,
    b32: BridgeMap,
    spec: ReductionSpec,
    spec_21: Optional[ReductionSpec] = None,
    spec_32: Optional[ReductionSpec] = None,
) -> TransitivityReport:
    """Run both component DSR checks and the composed one.

    The composed reduction is certified against delta = delta1 + K*delta2 and
    tau = min of the component tau_max values, with K an empirical Lipschitz
    bound of B21 on its domain.
    """
    spec_21 = spec_21 or spec
    spec_32 = spec_32 or spec
    rep21 = check_dsr(m2, m1, b21, spec_21)
    rep32 = check_dsr(m3, m2, b32, spec_32)
    b31 = compose_bridges(b21, b32)
    rep31 = check_dsr(m3, m1, b31, spec)
    k = estimate_lipschitz(
        b21, low_norm=m2.norm, high_norm=m1.norm,
        rng=np.random.default_rng(spec.rng_seed + 1),
    )
    return TransitivityReport(
        report_21=rep21,
        report_32=rep32,
        report_31=rep31,
        lipschitz_k=k,
        delta_combined=spec_21.delta + k * spec_32.delta,
        tau_combined=min(rep21.tau_max(), rep32.tau_max()),
    )


def weighted_sup_norm(q_scale: float = 1.0, p_scale: float = 1.0, split: Optional[int] = None):
    """Phase-space norm max(|dq|/q_scale, |dp|/p_scale).

    ``split`` is the index separating positions from momenta in the coordinate
    vector; default is the midpoint.
    """

    def norm(a: NormedState, b: NormedState) -> float:
        d = np.asarray(a.coordinates, dtype=float) - np.asarray(b.coordinates, dtype=float)
        cut = d.size // 2 if split is None else split
        dq = np.max(np.abs(d[:cut])) if cut else 0.0
        dp = np.max(np.abs(d[cut:])) if cut < d.size else 0.0
        return max(dq / q_scale, dp / p_scale)

    return norm


def l2_norm(a: NormedState, b: NormedState) -> float:
    return float(np.linalg.norm(np.ravel(a.coordinates) - np.ravel(b.coordinates)))


def fixture_sampler(
    fixtures: Sequence[NormedState],
    jitter: float = 0.0,
    jitter_mask: Optional[Array] = None,
):
    """Domain sampler cycling fixture states with seeded additive jitter."""
    fixtures = list(fixtures)
    if not fixtures:
        raise ConfigurationError("fixture_sampler needs at least one fixture")

    def sampler(rng: np.random.Generator, n: int) -> list[NormedState]:
        out = []
        for i in range(n):
            base = fixtures[i % len(fixtures)]
            coords = np.array(base.coordinates, copy=True)
            if jitter and i >= len(fixtures):
                bump = rng.normal(scale=jitter, size=coords.shape)
                if jitter_mask is not None:
                    bump = bump * jitter_mask
                coords = coords + bump
            out.append(NormedState(coords, base.space_tag))
        return out

    return sampler
