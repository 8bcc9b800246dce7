"""1+1-dimensional Lorentz vs Galilean transformation comparator.

Demonstrates the limit-based-reduction counterexamples: the Lorentz time
transform keeps a residual x-dependence t' ~ t - v x / c^2 at any nonzero
v/c, so convergence to the Galilean transform is non-uniform in x.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DomainViolation

Array = np.ndarray


@dataclass(frozen=True)
class Event:
    t: float
    x: float

    def __post_init__(self):
        if not (np.isfinite(self.t) and np.isfinite(self.x)):
            raise ValueError("event coordinates must be finite")


@dataclass(frozen=True)
class BoostParams:
    v: float
    c: float = 1.0

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("c must be positive")
        if abs(self.v) >= self.c:
            raise DomainViolation(f"|v|={abs(self.v)} must stay below c={self.c}")

    @property
    def gamma(self) -> float:
        return 1.0 / np.sqrt(1.0 - (self.v / self.c) ** 2)


def lorentz_boost(e: Event, b: BoostParams) -> Event:
    """t' = gamma (t - v x / c^2), x' = gamma (x - v t)."""
    g = b.gamma
    return Event(t=g * (e.t - b.v * e.x / b.c ** 2), x=g * (e.x - b.v * e.t))


def galilean_boost(e: Event, v: float) -> Event:
    """t' = t, x' = x - v t."""
    return Event(t=e.t, x=e.x - v * e.t)


def boost_matrix(b: BoostParams) -> Array:
    """Matrix acting on (c t, x)."""
    g = b.gamma
    beta = b.v / b.c
    return np.array([[g, -g * beta], [-g * beta, g]])


def interval(e: Event, c: float) -> float:
    return c ** 2 * e.t ** 2 - e.x ** 2


def simultaneity_residual(b: BoostParams, x: float, t: float) -> float:
    """|t'_Lorentz - t'_Galilean| = |gamma (t - v x / c^2) - t| at the event."""
    return abs(b.gamma * (t - b.v * x / b.c ** 2) - t)


def nonuniform_convergence_table(
    v_over_c: Sequence[float],
    threshold: float,
    t: float,
    c: float = 1.0,
    x_cap: float = 1e12,
) -> list[dict]:
    """Smallest x per v where the relative simultaneity residual hits threshold.

    Found by bracketing and bisection on the exact formula; x* grows like
    c^2 t / v, so halving v/c doubles x*.
    """
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    if t == 0:
        raise ValueError("t must be nonzero for a relative residual")
    rows = []
    for ratio in v_over_c:
        b = BoostParams(v=ratio * c, c=c)

        def rel(x: float) -> float:
            return simultaneity_residual(b, x, t) / abs(t)

        lo, hi = 0.0, abs(c * t)
        while rel(hi) < threshold:
            hi *= 2.0
            if hi > x_cap:
                raise ValueError("threshold crossing exceeds the search cap")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if rel(mid) >= threshold:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-12 * max(1.0, hi):
                break
        rows.append({"v_over_c": float(ratio), "x_star": float(hi),
                     "residual": float(rel(hi))})
    return rows


def boost_composition_check(v1: float, v2: float, c: float = 1.0) -> dict:
    """Relativistic vs Galilean composition of two collinear boosts."""
    for v in (v1, v2):
        if abs(v) >= c:
            raise DomainViolation("component boost must stay below c")
    relativistic = (v1 + v2) / (1.0 + v1 * v2 / c ** 2)
    galilean = v1 + v2
    return {
        "relativistic_sum": float(relativistic),
        "galilean_sum": float(galilean),
        "discrepancy": float(abs(relativistic - galilean)),
        "galilean_unphysical": bool(abs(galilean) >= c),
    }


@dataclass(frozen=True)
class DomainConditionReport:
    frame_velocity_ok: bool
    simultaneity_ok: Optional[bool]  # None when t = 0 (condition undefined)
    body_velocity_ok: bool

    @property
    def all_pass(self) -> bool:
        return bool(self.frame_velocity_ok and self.body_velocity_ok
                    and self.simultaneity_ok is not False)


def domain_conditions(v: float, v_prime: float, x: float, t: float, c: float,
                      thresholds: tuple[float, float, float] = (0.1, 0.1, 0.1),
                      ) -> DomainConditionReport:
    """The three smallness conditions for Galilean adequacy.

    (1) v/c << 1 for the frame velocity, (2) (v/c^2) x / t << 1 against the
    residual simultaneity shift, (3) v'/c << 1 for the fastest body. The
    second is undefined at t = 0.
    """
    t1, t2, t3 = thresholds
    frame_ok = abs(v) / c < t1
    sim_ok = None if t == 0 else bool(abs(v * x / (c ** 2 * t)) < t2)
    body_ok = abs(v_prime) / c < t3
    return DomainConditionReport(frame_velocity_ok=bool(frame_ok),
                                 simultaneity_ok=sim_ok,
                                 body_velocity_ok=bool(body_ok))
