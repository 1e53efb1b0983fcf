"""Stochastic-order and total-positivity checks on gridded fields.

All checks share one report format: the signed margin of the worst 2x2
product (or pointwise difference), the lexicographically smallest witness
when the check fails, and the tolerance that was applied.  A check *fails*
exactly when the worst margin drops below minus the tolerance, so loosening
the tolerance can never flip a holds verdict into fails.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .measures import Measure

PAIR_NAMES = ("t,x", "tprime,x", "t,tprime")


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class GridFunction2:
    axis1: np.ndarray
    axis2: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        a1 = np.asarray(self.axis1, dtype=float)
        a2 = np.asarray(self.axis2, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if np.any(np.diff(a1) <= 0) or np.any(np.diff(a2) <= 0):
            raise GridError("axes must be strictly increasing")
        if v.shape != (a1.size, a2.size):
            raise GridError(f"values shape {v.shape} vs axes ({a1.size},{a2.size})")
        object.__setattr__(self, "axis1", a1)
        object.__setattr__(self, "axis2", a2)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class GridFunction3:
    """Scalar field sampled on a t x t' x x grid (nonnegative values)."""

    tgrid: np.ndarray
    tpgrid: np.ndarray
    xgrid: np.ndarray
    values: np.ndarray
    clamped: int = 0

    def __post_init__(self):
        t = np.asarray(self.tgrid, dtype=float)
        tp = np.asarray(self.tpgrid, dtype=float)
        x = np.asarray(self.xgrid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        for g in (t, tp, x):
            if g.ndim != 1 or g.size < 1 or np.any(np.diff(g) <= 0):
                raise GridError("grids must be 1-d, non-empty, strictly increasing")
        if v.shape != (t.size, tp.size, x.size):
            raise GridError(f"values shape {v.shape} vs grids ({t.size},{tp.size},{x.size})")
        # negative rounding noise is clamped at zero; the count is kept
        neg = int(np.sum(v < 0.0))
        v = np.maximum(v, 0.0)
        object.__setattr__(self, "tgrid", t)
        object.__setattr__(self, "tpgrid", tp)
        object.__setattr__(self, "xgrid", x)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "clamped", neg)


@dataclass(frozen=True)
class OrderReport:
    check: str
    holds: bool
    worst: float                 # most negative margin seen (>= 0 when clean)
    tol: float
    witness: tuple | None = None          # index tuple, lexicographically smallest
    witness_points: tuple | None = None   # same witness in grid coordinates
    n_checked: int = 0
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.holds

    def to_json(self) -> dict:
        return {
            "check": self.check,
            "verdict": "holds" if self.holds else "fails",
            "worst_violation": self.worst,
            "tolerance": self.tol,
            "witness_indices": list(self.witness) if self.witness else None,
            "witness_points": list(self.witness_points) if self.witness_points else None,
            "n_checked": self.n_checked,
            "details": self.details,
        }


def default_tol(scale: float) -> float:
    """Absolute slack for products of closed-form reals: 1e-12 * (1 + scale^2)."""
    return 1e-12 * (1.0 + scale * scale)


def _report(check, worst, tol, witness, points, n, **details):
    holds = not (worst < -tol)
    return OrderReport(check, holds, float(worst), float(tol),
                       witness if not holds else None,
                       points if not holds else None, n, dict(details))


# ---------------------------------------------------------------------------
# pointwise comparisons
# ---------------------------------------------------------------------------

def mrl_compare(m1: Measure, m2: Measure, grid: Sequence[float],
                tol: float = 1e-10) -> OrderReport:
    """Does m2 dominate m1 in the mean-residual-life order on the grid?"""
    xs = np.asarray(grid, dtype=float)
    if xs.size == 0:
        raise GridError("empty grid")
    diff = np.asarray(m2.hardy_littlewood(xs)) - np.asarray(m1.hardy_littlewood(xs))
    k = int(np.argmin(diff))
    return _report("mrl", float(diff.min()), tol, (k,), (float(xs[k]),), xs.size)


def icx_compare(m1: Measure, m2: Measure, grid: Sequence[float],
                tol: float = 1e-10) -> OrderReport:
    """Increasing convex dominance via pointwise integrated survival functions."""
    xs = np.asarray(grid, dtype=float)
    if xs.size == 0:
        raise GridError("empty grid")
    diff = np.asarray(m2.integrated_survival(xs)) - np.asarray(m1.integrated_survival(xs))
    k = int(np.argmin(diff))
    return _report("icx", float(diff.min()), tol, (k,), (float(xs[k]),), xs.size)


# ---------------------------------------------------------------------------
# determinant / lattice checks
# ---------------------------------------------------------------------------

def det2_criterion(C: GridFunction3, tol: float | None = None) -> OrderReport:
    """2x2 determinant criterion over componentwise-ordered (t,t') pairs.

    Checks det [[C(t1,x1), C(t1,x2)], [C(t2,x1), C(t2,x2)]] >= -tol for all
    t1 <= t2 (both coordinates) and x1 <= x2.
    """
    v = C.values
    if tol is None:
        tol = default_tol(float(v.max(initial=0.0)))
    nt, ntp, nx = v.shape
    worst = np.inf
    witness = points = None
    n = 0
    iu = np.triu_indices(nx, k=0)
    for i1 in range(nt):
        for j1 in range(ntp):
            A = v[i1, j1]
            for i2 in range(i1, nt):
                for j2 in range(j1, ntp):
                    B = v[i2, j2]
                    M = np.outer(A, B)
                    dets = M - M.T
                    tri = dets[iu]
                    n += tri.size
                    k = int(np.argmin(tri))
                    if tri[k] < worst:
                        worst = float(tri[k])
                        x1, x2 = int(iu[0][k]), int(iu[1][k])
                        witness = (i1, j1, i2, j2, x1, x2)
                        points = (float(C.tgrid[i1]), float(C.tpgrid[j1]),
                                  float(C.tgrid[i2]), float(C.tpgrid[j2]),
                                  float(C.xgrid[x1]), float(C.xgrid[x2]))
    if worst < -tol:
        witness, points = _lex_smallest_det2(C, tol)
    return _report("det2", worst, tol, witness, points, n)


def _lex_smallest_det2(C, tol):
    v = C.values
    nt, ntp, nx = v.shape
    for i1 in range(nt):
        for j1 in range(ntp):
            for i2 in range(i1, nt):
                for j2 in range(j1, ntp):
                    for x1 in range(nx):
                        for x2 in range(x1, nx):
                            d = v[i1, j1, x1] * v[i2, j2, x2] - v[i1, j1, x2] * v[i2, j2, x1]
                            if d < -tol:
                                return ((i1, j1, i2, j2, x1, x2),
                                        (float(C.tgrid[i1]), float(C.tpgrid[j1]),
                                         float(C.tgrid[i2]), float(C.tpgrid[j2]),
                                         float(C.xgrid[x1]), float(C.xgrid[x2])))
    return None, None


def tp2_grid2(values: np.ndarray, tol: float) -> tuple[float, tuple | None, int]:
    """Worst 2x2 determinant margin of a nonnegative matrix (TP2 check)."""
    F = np.asarray(values, dtype=float)
    n, m = F.shape
    # dets[i1,i2,j1,j2] = F[i1,j1]F[i2,j2] - F[i1,j2]F[i2,j1]
    dets = (F[:, None, :, None] * F[None, :, None, :]
            - F[:, None, None, :] * F[None, :, :, None])
    ii1, ii2 = np.triu_indices(n, k=1)
    jj1, jj2 = np.triu_indices(m, k=1)
    sub = dets[ii1[:, None], ii2[:, None], jj1[None, :], jj2[None, :]]
    if sub.size == 0:
        return 0.0, None, 0
    worst = float(sub.min())
    witness = None
    if worst < -tol:
        viol = np.argwhere(sub < -tol)
        a, b = viol[0]  # argwhere is row-major, hence lexicographic
        witness = (int(ii1[a]), int(ii2[a]), int(jj1[b]), int(jj2[b]))
    return worst, witness, sub.size


def tp2_pair_check(C: GridFunction3, pair: str, tol: float | None = None) -> OrderReport:
    """TP2 in one pair of variables with the remaining variable fixed.

    ``pair`` is one of "t,x", "tprime,x", "t,tprime".
    """
    if pair not in PAIR_NAMES:
        raise GridError(f"pair must be one of {PAIR_NAMES}, got {pair!r}")
    v = C.values
    if tol is None:
        tol = default_tol(float(v.max(initial=0.0)))
    if pair == "t,x":
        slices = np.moveaxis(v, 1, 0)   # fix t'
        g1, g2, gf = C.tgrid, C.xgrid, C.tpgrid
    elif pair == "tprime,x":
        slices = v                      # fix t -> (t', x) slices
        g1, g2, gf = C.tpgrid, C.xgrid, C.tgrid
    else:
        slices = np.moveaxis(v, 2, 0)   # fix x -> (t, t') slices
        g1, g2, gf = C.tgrid, C.tpgrid, C.xgrid
    worst = np.inf
    witness = points = None
    n = 0
    for k in range(slices.shape[0]):
        w, wit, cnt = tp2_grid2(slices[k], tol)
        n += cnt
        if w < worst:
            worst = w
            if wit is not None:
                i1, i2, j1, j2 = wit
                witness = (k, i1, i2, j1, j2)
                points = (float(gf[k]), float(g1[i1]), float(g1[i2]),
                          float(g2[j1]), float(g2[j2]))
    return _report(f"tp2:{pair}", worst, tol, witness, points, n, pair=pair)


def mtp2_check(C: GridFunction3, tol: float | None = None,
               max_points: int = 12) -> OrderReport:
    """Exhaustive lattice check f(p^q) f(pvq) >= f(p) f(q) on the 3-d grid.

    O(N^6) over an N-per-axis grid; refuses grids beyond ``max_points`` per
    axis.
    """
    v = C.values
    nt, ntp, nx = v.shape
    if max(nt, ntp, nx) > max_points:
        raise GridError(f"grid too large for the exhaustive lattice scan "
                        f"(limit {max_points} per axis)")
    if tol is None:
        tol = default_tol(float(v.max(initial=0.0)))
    it = np.arange(nt)
    jt = np.arange(ntp)
    kt = np.arange(nx)
    i1, j1, k1, i2, j2, k2 = np.ix_(it, jt, kt, it, jt, kt)
    lo = v[np.minimum(i1, i2), np.minimum(j1, j2), np.minimum(k1, k2)]
    hi = v[np.maximum(i1, i2), np.maximum(j1, j2), np.maximum(k1, k2)]
    margin = lo * hi - v[i1, j1, k1] * v[i2, j2, k2]
    worst = float(margin.min())
    witness = points = None
    if worst < -tol:
        viol = np.argwhere(margin < -tol)
        w = tuple(int(z) for z in viol[0])
        witness = w
        points = (float(C.tgrid[w[0]]), float(C.tpgrid[w[1]]), float(C.xgrid[w[2]]),
                  float(C.tgrid[w[3]]), float(C.tpgrid[w[4]]), float(C.xgrid[w[5]]))
    return _report("mtp2", worst, tol, witness, points, margin.size)


def pairwise_implies_mtp2_crosscheck(family, tgrid, tpgrid, xgrid,
                                     tol: float | None = None) -> dict:
    """Run the three pair checks and the lattice check on a family's C field.

    For integrated survival fields, pairwise TP2 implies the full lattice
    inequality; the implication is asserted and both verdicts returned.
    """
    from .families import c_field  # local import to avoid a cycle
    C = c_field(family, tgrid, tpgrid, xgrid)
    pair_reports = {p: tp2_pair_check(C, p, tol) for p in PAIR_NAMES}
    lattice = mtp2_check(C, tol)
    pairwise_ok = all(r.holds for r in pair_reports.values())
    implication_ok = (not pairwise_ok) or lattice.holds
    if not implication_ok:
        raise AssertionError(
            f"pairwise TP2 held but the lattice check failed for {family.name}: "
            f"worst={lattice.worst!r} at {lattice.witness_points}")
    return {
        "family": family.name,
        "pairwise": pair_reports,
        "pairwise_holds": pairwise_ok,
        "lattice": lattice,
        "implication_holds": implication_ok,
    }


def compose_mtp2(f: GridFunction2, g: GridFunction2,
                 weights: Sequence[float]) -> GridFunction2:
    """h(x,z) = sum_y f(x,y) g(y,z) w(y); preserves MTP2 of the factors."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise GridError("weights must be >= 0")
    if f.axis2.size != g.axis1.size or w.size != f.axis2.size:
        raise GridError("shared axis mismatch")
    if not np.allclose(f.axis2, g.axis1, rtol=0, atol=1e-12):
        raise GridError("f.axis2 and g.axis1 must be the same grid")
    h = (f.values * w[None, :]) @ g.values
    return GridFunction2(f.axis1, g.axis2, h)
