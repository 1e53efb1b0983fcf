"""Integrable probability measures on the real line.

A measure is a finite list of atoms plus piecewise-linear density segments.
Every functional used downstream (mean, survival tails, integrated survival
function, Hardy-Littlewood function, support bounds) is evaluated in closed
form per atom / per linear piece; quadrature only enters through the optional
convolution transform, which produces a gridded density.

Conventions
-----------
* tails are closed on the left: ``tail_mass(x)`` is mu([x, +inf)), so an atom
  located exactly at x is included.  This makes the Hardy-Littlewood function
  left-continuous and fixes all tie-breaking.
* atoms closer than 1e-12 are merged; total mass must be 1 within 1e-12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

MASS_TOL = 1e-12
MERGE_TOL = 1e-12


class MeasureError(ValueError):
    """Raised when a measure or piecewise function fails validation."""


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Segment:
    """Piecewise-linear density on [left, right].

    ``density`` holds the values at ``len(density)`` equally spaced
    breakpoints from ``left`` to ``right``.
    """

    left: float
    right: float
    density: tuple[float, ...]

    def __post_init__(self):
        if not (self.right > self.left):
            raise MeasureError(f"segment needs right > left, got [{self.left}, {self.right}]")
        if len(self.density) < 2:
            raise MeasureError("segment needs at least two density values")
        if any((not math.isfinite(v)) or v < 0.0 for v in self.density):
            raise MeasureError("segment density values must be finite and >= 0")

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.left, self.right, len(self.density))

    def mass(self) -> float:
        xs = self.xs
        return float(np.trapezoid(np.asarray(self.density), xs))


@dataclass(frozen=True)
class Measure:
    """Probability measure: atoms + piecewise-linear density segments."""

    atoms: tuple[tuple[float, float], ...] = ()
    segments: tuple[Segment, ...] = ()
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    # -- constructors -------------------------------------------------------

    @staticmethod
    def make(atoms: Iterable[tuple[float, float]] = (),
             segments: Iterable[Segment | dict] = (),
             renormalize: bool = False) -> "Measure":
        """Validate, sort, merge coincident atoms and build a Measure."""
        segs = []
        for s in segments:
            if isinstance(s, dict):
                s = Segment(float(s["left"]), float(s["right"]),
                            tuple(float(v) for v in s["density"]))
            segs.append(s)
        segs.sort(key=lambda s: s.left)
        for a, b in zip(segs, segs[1:]):
            if b.left < a.right - 1e-15:
                raise MeasureError(f"overlapping segments at [{a.left},{a.right}] / [{b.left},{b.right}]")

        merged: list[list[float]] = []
        for loc, w in sorted((float(l), float(w)) for l, w in atoms):
            if not (math.isfinite(loc) and math.isfinite(w)):
                raise MeasureError("atom location/weight must be finite")
            if w < -1e-15:
                raise MeasureError(f"negative atom weight {w}")
            if w <= 0.0:
                continue
            if merged and loc - merged[-1][0] <= MERGE_TOL:
                merged[-1][1] += w
            else:
                merged.append([loc, w])

        total = sum(w for _, w in merged) + sum(s.mass() for s in segs)
        if renormalize:
            if total <= 0.0:
                raise MeasureError("cannot renormalize a zero-mass measure")
            merged = [[l, w / total] for l, w in merged]
            segs = [Segment(s.left, s.right, tuple(v / total for v in s.density)) for s in segs]
        elif abs(total - 1.0) > 1e-9:
            raise MeasureError(f"total mass {total!r} differs from 1")
        m = Measure(tuple((l, w) for l, w in merged), tuple(segs))
        if abs(m.mass() - 1.0) > 1e-9:
            raise MeasureError("mass normalization failed")
        return m

    @staticmethod
    def dirac(loc: float) -> "Measure":
        return Measure.make(atoms=[(loc, 1.0)])

    @staticmethod
    def from_atoms(pairs: Iterable[tuple[float, float]]) -> "Measure":
        return Measure.make(atoms=pairs)

    @staticmethod
    def uniform(a: float, b: float) -> "Measure":
        h = 1.0 / (b - a)
        return Measure.make(segments=[Segment(a, b, (h, h))])

    # -- JSON wire format ----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "atoms": [[loc, w] for loc, w in self.atoms],
            "segments": [{"left": s.left, "right": s.right, "density": list(s.density)}
                         for s in self.segments],
        }

    @staticmethod
    def from_json(obj: dict) -> "Measure":
        unknown = set(obj) - {"atoms", "segments"}
        if unknown:
            raise MeasureError(f"unknown measure keys: {sorted(unknown)}")
        return Measure.make(atoms=[tuple(a) for a in obj.get("atoms", [])],
                            segments=obj.get("segments", []))

    # -- flattened arrays (cached) -------------------------------------------

    def _arrays(self):
        arr = self._cache.get("arrays")
        if arr is not None:
            return arr
        locs = np.array([l for l, _ in self.atoms], dtype=float)
        wts = np.array([w for _, w in self.atoms], dtype=float)
        x0, x1, y0, y1 = [], [], [], []
        for s in self.segments:
            xs = s.xs
            for k in range(len(xs) - 1):
                x0.append(xs[k]); x1.append(xs[k + 1])
                y0.append(s.density[k]); y1.append(s.density[k + 1])
        px0 = np.asarray(x0, dtype=float)
        px1 = np.asarray(x1, dtype=float)
        py0 = np.asarray(y0, dtype=float)
        py1 = np.asarray(y1, dtype=float)
        pm = (py0 + py1) * (px1 - px0) / 2.0
        pm1 = (px1 - px0) * (px0 * (2 * py0 + py1) + px1 * (py0 + 2 * py1)) / 6.0
        # suffix sums over atoms / pieces; index i -> sum over [i:]
        asw = np.concatenate([np.cumsum(wts[::-1])[::-1], [0.0]]) if wts.size else np.zeros(1)
        asm = np.concatenate([np.cumsum((wts * locs)[::-1])[::-1], [0.0]]) if wts.size else np.zeros(1)
        psw = np.concatenate([np.cumsum(pm[::-1])[::-1], [0.0]]) if pm.size else np.zeros(1)
        psm = np.concatenate([np.cumsum(pm1[::-1])[::-1], [0.0]]) if pm.size else np.zeros(1)
        arr = dict(locs=locs, wts=wts, px0=px0, px1=px1, py0=py0, py1=py1,
                   pmass=pm, pmom=pm1, asw=asw, asm=asm, psw=psw, psm=psm)
        self._cache["arrays"] = arr
        return arr

    # -- scalar/vector functionals --------------------------------------------

    def mass(self) -> float:
        a = self._arrays()
        return float(a["asw"][0] + a["psw"][0])

    def mean(self) -> float:
        a = self._arrays()
        return float(a["asm"][0] + a["psm"][0])

    def abs_mean(self) -> float:
        """Integral of |y| against the measure (exact per piece)."""
        a = self._arrays()
        out = float(np.sum(a["wts"] * np.abs(a["locs"])))
        for x0, x1, y0, y1 in zip(a["px0"], a["px1"], a["py0"], a["py1"]):
            if x0 >= 0.0:
                out += _piece_moment(x0, x1, y0, y1)
            elif x1 <= 0.0:
                out -= _piece_moment(x0, x1, y0, y1)
            else:
                ym = y0 + (y1 - y0) * (0.0 - x0) / (x1 - x0)
                out -= _piece_moment(x0, 0.0, y0, ym)
                out += _piece_moment(0.0, x1, ym, y1)
        return out

    def _tail_parts(self, x, inclusive=True):
        """(mass, first moment) of the restriction to [x, inf) (or (x, inf))."""
        a = self._arrays()
        x = np.asarray(x, dtype=float)
        side = "left" if inclusive else "right"
        ia = np.searchsorted(a["locs"], x, side=side)
        m = a["asw"][ia]
        mom = a["asm"][ia]
        n = a["px0"].size
        if n:
            # first piece whose right end lies strictly above x
            ip = np.searchsorted(a["px1"], x, side="right")
            ipc = np.minimum(ip, n - 1)
            inside = (ip < n) & (x > a["px0"][ipc])
            base = np.where(inside, ip + 1, ip)
            m = m + a["psw"][base]
            mom = mom + a["psm"][base]
            if np.any(inside):
                x0, x1 = a["px0"][ipc], a["px1"][ipc]
                y0, y1 = a["py0"][ipc], a["py1"][ipc]
                xa = np.clip(x, x0, x1)
                ya = y0 + (y1 - y0) * (xa - x0) / (x1 - x0)
                pm = (ya + y1) * (x1 - xa) / 2.0
                pmom = (x1 - xa) * (xa * (2 * ya + y1) + x1 * (ya + 2 * y1)) / 6.0
                m = m + np.where(inside, pm, 0.0)
                mom = mom + np.where(inside, pmom, 0.0)
        return m, mom

    def tail_mass(self, x) -> float | np.ndarray:
        """mu([x, +inf)) -- closed at x."""
        m, _ = self._tail_parts(x, inclusive=True)
        return m if np.ndim(x) else float(m)

    def tail_mass_excl(self, x) -> float | np.ndarray:
        """mu((x, +inf)) -- open at x."""
        m, _ = self._tail_parts(x, inclusive=False)
        return m if np.ndim(x) else float(m)

    def cdf(self, x) -> float | np.ndarray:
        m, _ = self._tail_parts(x, inclusive=False)
        out = 1.0 - m
        return out if np.ndim(x) else float(out)

    def integrated_survival(self, x) -> float | np.ndarray:
        """C(x) = integral of (y - x)+ against the measure."""
        m, mom = self._tail_parts(x, inclusive=True)
        out = np.maximum(mom - np.asarray(x, dtype=float) * m, 0.0)
        return out if np.ndim(x) else float(out)

    def hardy_littlewood(self, x) -> float | np.ndarray:
        """Conditional mean above x; equals x beyond the support bound."""
        r = self.upper_support()
        xv = np.asarray(x, dtype=float)
        m, mom = self._tail_parts(xv, inclusive=True)
        below = xv < r
        safe = np.where(below & (m > 0.0), m, 1.0)
        out = np.where(below, mom / safe, xv)
        out = np.maximum(out, xv)
        return out if np.ndim(x) else float(out)

    def upper_support(self) -> float:
        r = self._cache.get("upper")
        if r is None:
            r = -math.inf
            if self.atoms:
                r = self.atoms[-1][0]
            for s in self.segments:
                xs = s.xs
                for k in range(len(xs) - 1, 0, -1):
                    if s.density[k] > 0.0 or s.density[k - 1] > 0.0:
                        r = max(r, float(xs[k]))
                        break
            self._cache["upper"] = r
        return r

    def lower_support(self) -> float:
        r = math.inf
        if self.atoms:
            r = self.atoms[0][0]
        for s in self.segments:
            xs = s.xs
            for k in range(len(xs) - 1):
                if s.density[k] > 0.0 or s.density[k + 1] > 0.0:
                    r = min(r, float(xs[k]))
                    break
        return r

    def quantile(self, u) -> float | np.ndarray:
        """Generalized inverse CDF: inf{x : F(x) >= u}."""
        events = self._cache.get("quantile")
        if events is None:
            events = _quantile_events(self)
            self._cache["quantile"] = events
        cum, kinds, p0, p1, q0, q1 = events
        uv = np.atleast_1d(np.asarray(u, dtype=float))
        if np.any((uv <= 0.0) | (uv > 1.0)):
            raise MeasureError("quantile needs u in (0, 1]")
        idx = np.searchsorted(cum, uv, side="left")
        idx = np.minimum(idx, len(kinds) - 1)
        out = np.empty_like(uv)
        for k, ui in enumerate(uv):
            i = idx[k]
            if kinds[i] == 0:  # atom
                out[k] = p0[i]
            else:  # linear density piece: solve quadratic for the offset
                need = ui - (cum[i - 1] if i else 0.0)
                x0, x1, y0, y1 = p0[i], p1[i], q0[i], q1[i]
                s = (y1 - y0) / (x1 - x0)
                disc = y0 * y0 + 2.0 * s * need
                denom = y0 + math.sqrt(max(disc, 0.0))
                h = (x1 - x0) if denom <= 0.0 else min(2.0 * need / denom, x1 - x0)
                out[k] = x0 + h
        return out if np.ndim(u) else float(out[0])

    # -- transforms ------------------------------------------------------------

    def affine(self, scale: float, shift: float) -> "Measure":
        """Pushforward under y -> scale*y + shift (scale != 0)."""
        if scale == 0.0:
            raise MeasureError("affine pushforward needs scale != 0")
        atoms = [(scale * l + shift, w) for l, w in self.atoms]
        segs = []
        for s in self.segments:
            a, b = scale * s.left + shift, scale * s.right + shift
            dens = tuple(v / abs(scale) for v in s.density)
            if scale < 0:
                a, b = b, a
                dens = dens[::-1]
            segs.append(Segment(a, b, dens))
        return Measure.make(atoms=atoms, segments=segs)


def _piece_moment(x0, x1, y0, y1):
    return (x1 - x0) * (x0 * (2 * y0 + y1) + x1 * (y0 + 2 * y1)) / 6.0


def _quantile_events(m: Measure):
    """Flatten the measure into an ordered list of cdf events."""
    a = m._arrays()
    events = []  # (location key, kind, x0, x1, y0, y1, mass)
    for l, w in zip(a["locs"], a["wts"]):
        events.append((l, 0, l, l, 0.0, 0.0, w))
    for x0, x1, y0, y1, pm in zip(a["px0"], a["px1"], a["py0"], a["py1"], a["pmass"]):
        events.append((x0, 1, x0, x1, y0, y1, pm))
    events.sort(key=lambda e: (e[0], e[1]))
    cum = np.cumsum([e[6] for e in events])
    kinds = np.array([e[1] for e in events])
    p0 = np.array([e[2] for e in events])
    p1 = np.array([e[3] for e in events])
    q0 = np.array([e[4] for e in events])
    q1 = np.array([e[5] for e in events])
    return cum, kinds, p0, p1, q0, q1


# ---------------------------------------------------------------------------
# module-level operations (the public API mirrors these names)
# ---------------------------------------------------------------------------

def mean(m: Measure) -> float:
    return m.mean()


def integrated_survival(m: Measure, x) -> float | np.ndarray:
    return m.integrated_survival(x)


def hardy_littlewood(m: Measure, x) -> float | np.ndarray:
    return m.hardy_littlewood(x)


def upper_support(m: Measure) -> float:
    return m.upper_support()


def affine_pushforward(m: Measure, scale: float, shift: float) -> Measure:
    return m.affine(scale, shift)


def convex_combine(weights: Sequence[float], ms: Sequence[Measure]) -> Measure:
    """Mixture sum(w_i * m_i); weights must sum to 1 within 1e-12."""
    if len(weights) != len(ms):
        raise MeasureError("weights and measures must have equal length")
    if any(w < -1e-15 for w in weights):
        raise MeasureError("weights must be >= 0")
    if abs(sum(weights) - 1.0) > MASS_TOL:
        raise MeasureError(f"weights sum to {sum(weights)!r}, expected 1")
    atoms, segs = [], []
    for w, m in zip(weights, ms):
        if w <= 0.0:
            continue
        atoms.extend((l, w * wt) for l, wt in m.atoms)
        segs.extend((s, w) for s in m.segments)
    return Measure.make(atoms=atoms, segments=_overlay_segments(segs))


def _overlay_segments(weighted: list[tuple[Segment, float]]) -> list[Segment]:
    """Sum weighted piecewise-linear densities into disjoint segments."""
    pieces = []  # (x0, x1, y0, y1) with weights applied
    for s, w in weighted:
        xs = s.xs
        for k in range(len(xs) - 1):
            pieces.append((float(xs[k]), float(xs[k + 1]),
                           w * s.density[k], w * s.density[k + 1]))
    if not pieces:
        return []
    cuts = np.array(sorted({p[0] for p in pieces} | {p[1] for p in pieces}))
    lo = np.array([p[0] for p in pieces])
    hi = np.array([p[1] for p in pieces])
    v0 = np.array([p[2] for p in pieces])
    v1 = np.array([p[3] for p in pieces])

    def total_density(x, piece_mask):
        t = (x - lo[piece_mask]) / (hi[piece_mask] - lo[piece_mask])
        return float(np.sum(v0[piece_mask] * (1 - t) + v1[piece_mask] * t))

    out: list[Segment] = []
    run_x: list[float] = []
    run_y: list[float] = []

    def flush():
        if len(run_x) >= 2:
            out.append(_resample_linear(run_x, run_y))

    for a, b in zip(cuts[:-1], cuts[1:]):
        mask = (lo <= a + 1e-15) & (hi >= b - 1e-15)
        if not np.any(mask):
            flush()
            run_x, run_y = [], []
            continue
        da, db = total_density(a, mask), total_density(b, mask)
        if run_x and (abs(run_x[-1] - a) > 1e-15 or abs(run_y[-1] - da) > 1e-12):
            flush()
            run_x, run_y = [], []
        if not run_x:
            run_x, run_y = [float(a)], [da]
        run_x.append(float(b))
        run_y.append(db)
    flush()
    return out


def convolve(m: Measure, kernel: "DensityKernel", grid_points: int = 2001) -> tuple[Measure, float]:
    """Convolve with a log-concave density; returns (measure, renorm factor).

    The output is segments-only, sampled on ``grid_points`` nodes over a
    window that carries all but ~1e-8 of the mass; the density at each node
    is the exact atom part plus composite-Simpson quadrature of the
    absolutely continuous part.
    """
    a = m._arrays()
    L = kernel.window
    lo = m.lower_support() - L
    hi = m.upper_support() + L
    ys = np.linspace(lo, hi, grid_points)
    dens = np.zeros_like(ys)
    for loc, w in zip(a["locs"], a["wts"]):
        dens += w * kernel.pdf(ys - loc)
    for x0, x1, y0, y1 in zip(a["px0"], a["px1"], a["py0"], a["py1"]):
        n = 129  # composite Simpson nodes per linear piece
        zs = np.linspace(x0, x1, n)
        rho = y0 + (y1 - y0) * (zs - x0) / (x1 - x0)
        wts = np.ones(n)
        wts[1:-1:2] = 4.0
        wts[2:-1:2] = 2.0
        wts *= (x1 - x0) / (n - 1) / 3.0
        dens += (kernel.pdf(ys[:, None] - zs[None, :]) * (rho * wts)[None, :]).sum(axis=1)
    total = float(np.trapezoid(dens, ys))
    if abs(total - 1.0) > 1e-6:
        raise MeasureError(f"convolution mass {total!r} deviates from 1 beyond 1e-6")
    out = Measure.make(segments=[Segment(lo, hi, tuple(dens / total))])
    return out, total


@dataclass(frozen=True)
class DensityKernel:
    """Log-concave convolution kernel with a finite truncation window."""

    name: str
    pdf: Callable[[np.ndarray], np.ndarray]
    window: float
    mean: float = 0.0

    @staticmethod
    def gaussian(sigma: float) -> "DensityKernel":
        c = 1.0 / (sigma * math.sqrt(2.0 * math.pi))
        # window with tail mass < 1e-8: ~5.8 sigma; use 6.5 for slack
        return DensityKernel("gaussian", lambda x: c * np.exp(-0.5 * (x / sigma) ** 2), 6.5 * sigma)

    @staticmethod
    def laplace(b: float) -> "DensityKernel":
        return DensityKernel("laplace", lambda x: np.exp(-np.abs(x) / b) / (2 * b), 20.0 * b)

    @staticmethod
    def logistic(s: float) -> "DensityKernel":
        def pdf(x):
            e = np.exp(-np.abs(x) / s)
            return e / (s * (1 + e) ** 2)
        return DensityKernel("logistic", pdf, 20.0 * s)

    @staticmethod
    def from_grid(xs: Sequence[float], log_density: Sequence[float]) -> "DensityKernel":
        xs = np.asarray(xs, dtype=float)
        ld = np.asarray(log_density, dtype=float)
        if xs.ndim != 1 or xs.size < 3 or np.any(np.diff(xs) <= 0):
            raise MeasureError("kernel grid must be sorted with >= 3 points")
        d2 = np.diff(ld, 2)
        if np.any(d2 > 1e-9):
            raise MeasureError("kernel log-density grid is not concave")
        dens = np.exp(ld)
        total = float(np.trapezoid(dens, xs))
        dens = dens / total

        def pdf(x):
            return np.interp(x, xs, dens, left=0.0, right=0.0)

        return DensityKernel("user_grid", pdf, float(max(abs(xs[0]), abs(xs[-1]))))


# ---------------------------------------------------------------------------
# piecewise functions and the integrated-survival characterization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PiecewiseFn:
    """Piecewise function with explicit extrapolation rules.

    Between breakpoints the function interpolates linearly; step parts
    (left-continuous jumps, as in Hardy-Littlewood functions of atomic
    measures) are expressed by supplying ``left_limits``: the value
    approached from the left at each breakpoint, with the flat left limit
    carried across the preceding gap.  ``left``/``right`` are either
    ``("constant", value)`` or ``("linear", slope)`` (linear continues from
    the nearest breakpoint).
    """

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]
    left: tuple[str, float] = ("linear", -1.0)
    right: tuple[str, float] = ("constant", 0.0)
    left_limits: tuple[float, ...] | None = None
    monotone: str | None = None  # "nondecreasing" | "nonincreasing"

    def __post_init__(self):
        if len(self.breakpoints) != len(self.values) or len(self.breakpoints) < 1:
            raise MeasureError("breakpoints/values mismatch")
        if self.left_limits is not None and len(self.left_limits) != len(self.values):
            raise MeasureError("left_limits/values mismatch")
        if any(b2 <= b1 for b1, b2 in zip(self.breakpoints, self.breakpoints[1:])):
            raise MeasureError("breakpoints must be strictly increasing")
        if self.monotone == "nondecreasing":
            if any(v2 < v1 - 1e-12 for v1, v2 in zip(self.values, self.values[1:])):
                raise MeasureError("declared non-decreasing but values decrease")
        if self.monotone == "nonincreasing":
            if any(v2 > v1 + 1e-12 for v1, v2 in zip(self.values, self.values[1:])):
                raise MeasureError("declared non-increasing but values increase")

    def __call__(self, x) -> float | np.ndarray:
        xs = np.asarray(self.breakpoints, dtype=float)
        vs = np.asarray(self.values, dtype=float)
        xv = np.asarray(x, dtype=float)
        if self.left_limits is None:
            out = np.interp(xv, xs, vs)
        else:
            # step evaluation: value at the breakpoint, left limit before it
            ll = np.asarray(self.left_limits, dtype=float)
            idx = np.searchsorted(xs, xv, side="left")
            idx = np.clip(idx, 0, xs.size - 1)
            at_bp = xs[idx] == xv
            out = np.where(at_bp, vs[idx], ll[idx])
        kind, p = self.left
        mask = xv < xs[0]
        if np.any(mask):
            out = np.where(mask, p if kind == "constant" else vs[0] + p * (xv - xs[0]), out)
        kind, p = self.right
        mask = xv > xs[-1]
        if np.any(mask):
            out = np.where(mask, p if kind == "constant" else vs[-1] + p * (xv - xs[-1]), out)
        return out if np.ndim(x) else float(out)


def validate_integrated_survival(C: PiecewiseFn) -> dict:
    """Check the four structural conditions an integrated survival fn obeys.

    Returns a report dict with one boolean per condition plus the implied
    mean when all pass.
    """
    vs = np.asarray(C.values, dtype=float)
    xs = np.asarray(C.breakpoints, dtype=float)
    report = {}
    slopes = np.diff(vs) / np.diff(xs) if len(xs) > 1 else np.array([])
    all_slopes = []
    if C.left[0] == "linear":
        all_slopes.append(C.left[1])
    all_slopes.extend(slopes.tolist())
    if C.right[0] == "linear":
        all_slopes.append(C.right[1])
    elif C.right[0] == "constant":
        all_slopes.append(0.0)
    report["convex"] = bool(np.all(np.diff(all_slopes) >= -1e-12))
    report["nonnegative"] = bool(np.all(vs >= -1e-12)) and not (
        C.right[0] == "constant" and C.right[1] < -1e-12)
    report["vanishes_at_plus_inf"] = (C.right == ("constant", 0.0)) and abs(vs[-1]) <= 1e-12
    report["left_slope_is_minus_one"] = C.left[0] == "linear" and abs(C.left[1] + 1.0) <= 1e-12
    report["passes"] = all(report[k] for k in
                           ("convex", "nonnegative", "vanishes_at_plus_inf", "left_slope_is_minus_one"))
    if report["passes"]:
        # C(x) + x is constant left of the first breakpoint; that constant is the mean
        report["mean"] = float(vs[0] + xs[0])
    return report


def measure_from_integrated_survival(C: PiecewiseFn) -> Measure:
    """Invert a piecewise-linear integrated survival function.

    The second distributional derivative of a piecewise-linear convex C is a
    sum of atoms at its kinks, with weight equal to the slope jump.  Each
    slope divides a value difference by the breakpoint gap, so breakpoints
    closer than ~1e-8 recover their weights with correspondingly fewer
    digits.
    """
    report = validate_integrated_survival(C)
    if not report["passes"]:
        bad = [k for k, v in report.items() if k != "passes" and v is False]
        raise MeasureError(f"not an integrated survival function: fails {bad}")
    xs = list(C.breakpoints)
    vs = list(C.values)
    slopes = [C.left[1]] + [(v2 - v1) / (x2 - x1) for (x1, v1), (x2, v2)
                            in zip(zip(xs, vs), zip(xs[1:], vs[1:]))] + [0.0]
    atoms = []
    for i, x in enumerate(xs):
        jump = slopes[i + 1] - slopes[i]
        if jump > 1e-14:
            atoms.append((x, jump))
    return Measure.make(atoms=atoms)


def integrated_survival_fn(m: Measure, per_piece: int = 9) -> PiecewiseFn:
    """Sample C_m into a PiecewiseFn.

    Exact for purely atomic measures (kinks at the atoms); density segments
    are subdivided ``per_piece`` times, giving a piecewise-linear upper
    approximation of the quadratic arcs.
    """
    pts = {l for l, _ in m.atoms}
    for s in m.segments:
        xs = s.xs
        for a, b in zip(xs, xs[1:]):
            pts.update(np.linspace(a, b, per_piece).tolist())
    if not pts:
        raise MeasureError("empty measure")
    xs = np.array(sorted(pts))
    vs = m.integrated_survival(xs)
    return PiecewiseFn(tuple(xs.tolist()), tuple(np.asarray(vs).tolist()),
                       left=("linear", -1.0), right=("constant", 0.0))


# -- restriction helpers (used by the censoring families) ---------------------

def restrict_raw(m: Measure, lo: float | None, hi: float | None,
                 lo_open: bool = True, hi_open: bool = True):
    """Raw (atoms, segments) of m restricted to an interval; mass may be < 1.

    ``lo``/``hi`` of None mean unbounded.  Openness flags state whether the
    endpoint itself is EXCLUDED from the restriction.
    """
    atoms = []
    for l, w in m.atoms:
        if lo is not None and (l < lo or (lo_open and l == lo)):
            continue
        if hi is not None and (l > hi or (hi_open and l == hi)):
            continue
        atoms.append((l, w))
    segs = []
    for s in m.segments:
        a = s.left if lo is None else max(s.left, lo)
        b = s.right if hi is None else min(s.right, hi)
        if b - a <= 1e-15:
            continue
        xs = s.xs
        keep_x = [a] + [float(x) for x in xs if a < x < b] + [b]
        keep_y = [float(np.interp(x, xs, s.density)) for x in keep_x]
        # re-encode on an even grid fine enough to keep the kinks
        segs.append(_resample_linear(keep_x, keep_y))
    return atoms, segs


def _resample_linear(xv: list[float], yv: list[float]) -> Segment:
    """Encode a continuous piecewise-linear density as an even-grid Segment."""
    xv = np.asarray(xv)
    yv = np.asarray(yv)
    gaps = np.diff(xv)
    if np.allclose(gaps, gaps[0], rtol=1e-9, atol=1e-15):
        return Segment(float(xv[0]), float(xv[-1]), tuple(yv.tolist()))
    step = gaps.min()
    n = int(math.ceil((xv[-1] - xv[0]) / step))
    # snap the grid so every original kink lands on a node
    n = min(max(n, 2), 2048)
    for mult in range(1, 9):
        grid = np.linspace(xv[0], xv[-1], mult * n + 1)
        if all(np.min(np.abs(grid - x)) < 1e-9 * max(1.0, abs(x)) for x in xv):
            return Segment(float(xv[0]), float(xv[-1]),
                           tuple(np.interp(grid, xv, yv).tolist()))
    grid = np.linspace(xv[0], xv[-1], 8 * n + 1)
    return Segment(float(xv[0]), float(xv[-1]), tuple(np.interp(grid, xv, yv).tolist()))
