"""Statistical backbone: path configuration, empirical laws, distances.

The Kolmogorov-Smirnov distance against a Measure is exact: both the
empirical CDF and the target CDF are piecewise monotone between the union
of sample points and atom locations, so the supremum is attained at one of
those event points (from the left or from the right).  The Wasserstein-1
distance integrates |ECDF - CDF| on a refined event grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measures import Measure


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PathConfig:
    """Discretization and sampling plan for one embedding run."""

    dt: float = 1e-4
    max_steps: int = 10_000_000
    n_samples: int = 100_000
    master_seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.dt <= 1e-2):
            raise ConfigError(f"dt must lie in (0, 1e-2], got {self.dt}")
        if self.n_samples < 1:
            raise ConfigError("n_samples must be >= 1")
        if self.max_steps < 1:
            raise ConfigError("max_steps must be >= 1")
        if not (0 <= int(self.master_seed) < 2 ** 64):
            raise ConfigError("master_seed must fit in 64 bits")


@dataclass(frozen=True)
class EmpiricalLaw:
    values: np.ndarray  # sorted

    @staticmethod
    def from_samples(samples) -> "EmpiricalLaw":
        v = np.sort(np.asarray(samples, dtype=float))
        if v.size == 0 or not np.all(np.isfinite(v)):
            raise ConfigError("empirical law needs a non-empty finite sample")
        return EmpiricalLaw(v)

    @property
    def n(self) -> int:
        return self.values.size

    def cdf(self, x):
        return np.searchsorted(self.values, x, side="right") / self.n

    def cdf_left(self, x):
        return np.searchsorted(self.values, x, side="left") / self.n


def ks_distance(emp: EmpiricalLaw, m: Measure) -> float:
    """sup_x |ECDF(x) - CDF(x)| with one-sided limits handled exactly."""
    events = np.unique(np.concatenate([
        emp.values,
        np.array([loc for loc, _ in m.atoms], dtype=float),
    ]))
    F = np.asarray(m.cdf(events))
    F_left = 1.0 - np.asarray(m.tail_mass(events))
    E = emp.cdf(events)
    E_left = emp.cdf_left(events)
    return float(max(np.abs(F - E).max(), np.abs(F_left - E_left).max()))


def w1_distance(emp: EmpiricalLaw, m: Measure, refine: int = 4) -> float:
    """Integral of |ECDF - CDF| over a window spanning both supports.

    Each elementary interval is integrated with right limits at its left
    endpoint and left limits at its right endpoint, so jumps of either CDF
    cost nothing: the result is exact for purely atomic laws and
    second-order accurate across density segments.
    """
    pts = [emp.values, [loc for loc, _ in m.atoms]]
    for s in m.segments:
        pts.append(np.asarray(s.xs))
    events = np.unique(np.concatenate([np.asarray(p, dtype=float) for p in pts if len(p)]))
    if events.size == 1:
        return 0.0
    if refine > 1:
        fill = np.linspace(events[:-1], events[1:], refine + 1, axis=1).ravel()
        events = np.unique(fill)
    d_right = np.abs(np.asarray(m.cdf(events)) - emp.cdf(events))
    d_left = np.abs((1.0 - np.asarray(m.tail_mass(events))) - emp.cdf_left(events))
    gaps = np.diff(events)
    return float(np.sum(gaps * (d_right[:-1] + d_left[1:]) / 2.0))


def bridge_max_step(b_prev: float, b_next: float, dt: float, u: float) -> float:
    """Sample the maximum of a Brownian bridge between two grid values.

    Uses the exponential inversion of the reflection law:
    M = (b0 + b1 + sqrt((b1-b0)^2 - 2 dt log u)) / 2 for u uniform in (0,1).
    """
    if not 0.0 < u < 1.0:
        raise ConfigError("bridge draw must lie strictly inside (0,1)")
    if dt <= 0.0:
        raise ConfigError("dt must be positive")
    d = b_next - b_prev
    return 0.5 * (b_prev + b_next + math.sqrt(d * d - 2.0 * dt * math.log(u)))


def bridge_max_cdf(m: float, b_prev: float, b_next: float, dt: float) -> float:
    """Closed-form CDF of the bridge maximum (reflection formula)."""
    top = max(b_prev, b_next)
    if m < top:
        return 0.0
    return 1.0 - math.exp(-2.0 * (m - b_prev) * (m - b_next) / dt)


def mean_and_stderr(x) -> tuple[float, float]:
    v = np.asarray(x, dtype=float)
    if v.size == 0:
        raise ConfigError("empty sample")
    if v.size == 1:
        return float(v[0]), 0.0
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))
