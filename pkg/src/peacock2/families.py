"""Two-parameter process families over the closed first quadrant.

Each family maps a grid point (t, t') to a Measure, optionally carrying
closed-form evaluators for its Hardy-Littlewood function and integrated
survival function.  Where a closed form is installed it reproduces the
printed formula exactly, branch by branch, so the generic measure-side
evaluators can be validated against it.

Family metadata carries ordering claims (``is_mrl``, ``is_mtp2``, ...);
those claims are the test expectations, not trusted facts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .measures import Measure, MeasureError, convex_combine, restrict_raw
from .ordering import GridFunction3, OrderReport, _report, tp2_grid2


class FamilyError(ValueError):
    pass


@dataclass(frozen=True)
class ProcessFamily:
    """Lazy map (t, t') -> Measure with optional closed-form oracles."""

    name: str
    params: dict
    measure_fn: Callable[[float, float], Measure]
    psi_oracle: Callable[[float, float, float], float] | None = None
    c_oracle: Callable[[float, float, float], float] | None = None
    claims: dict = field(default_factory=dict)

    def measure_at(self, t: float, tp: float) -> Measure:
        if t < 0 or tp < 0:
            raise FamilyError(f"quadrant parameters must be >= 0, got ({t}, {tp})")
        return self.measure_fn(float(t), float(tp))

    def cached(self) -> "ProcessFamily":
        return ProcessFamily(self.name, self.params, lru_cache(maxsize=4096)(self.measure_fn),
                             self.psi_oracle, self.c_oracle, self.claims)


# ---------------------------------------------------------------------------
# censoring helper: cut the tail above ``lo`` and re-hang it on two atoms
# ---------------------------------------------------------------------------

def censored_parts(nu: Measure, lo: float, hi_weights: float, hi_place: float | None = None):
    """Atoms/segments of  1_(-inf,lo) nu + alpha d_lo + beta d_hi_place.

    beta carries the first-moment balance computed against ``hi_weights``
    (the two weights solve  alpha+beta = nu([lo, r]),
    lo*alpha + hi_weights*beta = int_[lo,r] y nu(dy)); the upper atom may be
    *placed* further right at ``hi_place`` which raises the mean.
    """
    if hi_place is None:
        hi_place = hi_weights
    if not hi_weights > lo:
        raise FamilyError(f"censoring needs hi > lo, got ({lo}, {hi_weights})")
    beta = nu.integrated_survival(lo) / (hi_weights - lo)
    alpha = nu.tail_mass(lo) - beta
    atoms, segs = restrict_raw(nu, None, lo, hi_open=True)
    if alpha > 1e-15:
        atoms.append((lo, alpha))
    if beta > 1e-15:
        atoms.append((hi_place, beta))
    return Measure.make(atoms=atoms, segments=segs)


# ---------------------------------------------------------------------------
# diatomic family and the MRL-but-not-MTP2 counterexample
# ---------------------------------------------------------------------------

def diatomic(eps: float, r: float) -> ProcessFamily:
    """Two-atom family: boundary d_r, interior atoms at r-(1-eps)t and r+t'."""
    if not 0.0 < eps < 1.0:
        raise FamilyError(f"eps must lie in (0,1), got {eps}")

    def measure(t, tp):
        if t == 0.0 or tp == 0.0:
            return Measure.dirac(r)
        return Measure.from_atoms([(r - (1 - eps) * t, tp / (t + tp)),
                                   (r + tp, t / (t + tp))])

    def psi(t, tp, x):
        if t == 0.0 or tp == 0.0:
            return max(x, r)
        if x <= r - (1 - eps) * t:
            return r + eps * t * tp / (t + tp)
        if x <= r + tp:
            return r + tp
        return x

    def c(t, tp, x):
        if t == 0.0 or tp == 0.0:
            return max(r - x, 0.0)
        if x < r - (1 - eps) * t:
            return r - x + eps * t * tp / (t + tp)
        if x < r + tp:
            return t * (tp + r - x) / (t + tp)
        return 0.0

    return ProcessFamily("diatomic", {"eps": eps, "r": r}, measure, psi, c,
                         {"is_mrl": True, "is_mtp2": True})


def counterexample_mrl_not_mtp2() -> ProcessFamily:
    """MRL family whose C field is not TP2 in (t, t')."""

    def measure(t, tp):
        if t == 0.0 or tp == 0.0:
            return Measure.dirac(0.0)
        return Measure.from_atoms([(-t, (t + tp) / (2 * t + tp)),
                                   (t + tp, t / (2 * t + tp))])

    def psi(t, tp, x):
        if t == 0.0 or tp == 0.0:
            return max(x, 0.0)
        if x <= -t:
            return 0.0
        if x <= t + tp:
            return t + tp
        return x

    def c(t, tp, x):
        if t == 0.0 or tp == 0.0:
            return max(-x, 0.0)
        if x < -t:
            return -x
        if x < t + tp:
            return t * (t + tp - x) / (2 * t + tp)
        return 0.0

    return ProcessFamily("example33", {}, measure, psi, c,
                         {"is_mrl": True, "is_mtp2": False})


# ---------------------------------------------------------------------------
# censoring transforms
# ---------------------------------------------------------------------------

class OneParamBase:
    """One-parameter measure path t -> nu_t with finite upper support."""

    def __init__(self, name, fn):
        self.name = name
        self.fn = fn

    def measure_at(self, t: float) -> Measure:
        return self.fn(float(t))


def constant_base(nu: Measure) -> OneParamBase:
    return OneParamBase("constant", lambda t: nu)


def dirac_base() -> OneParamBase:
    """nu_t = d_t (an MRL path: the Hardy-Littlewood functions increase in t)."""
    return OneParamBase("dirac_t", lambda t: Measure.dirac(t))


def translation_base(nu: Measure) -> OneParamBase:
    """nu_t = nu shifted by +t.

    MRL only when nu has non-increasing mean residual life (e.g. uniform);
    callers are expected to verify the claim on a probe grid.
    """
    return OneParamBase("translate", lambda t: nu.affine(1.0, t))


def censor(base: OneParamBase, phi: Callable[[float, float], float],
           psi_map: Callable[[float, float], float],
           probe: Sequence[float] = (0.0, 0.5, 1.0, 2.0, 4.0)) -> ProcessFamily:
    """Censor a one-parameter path between a falling and a rising level.

    mu_t = 1_(-inf, phi(t)) nu_t + alpha d_phi(t) + beta d_psi(t), with the
    weights solving the mass/first-moment balance over [phi(t), r_t].
    """
    r0 = base.measure_at(0.0).upper_support()
    if abs(phi(0.0, 0.0) - r0) > 1e-9 or abs(psi_map(0.0, 0.0) - r0) > 1e-9:
        raise FamilyError("phi(0,0) and psi(0,0) must both equal r_0")
    vals_phi = np.array([[phi(a, b) for b in probe] for a in probe])
    vals_psi = np.array([[psi_map(a, b) for b in probe] for a in probe])
    if np.any(np.diff(vals_phi, axis=0) > 1e-12) or np.any(np.diff(vals_phi, axis=1) > 1e-12):
        raise FamilyError("phi must be non-increasing in both parameters")
    if np.any(np.diff(vals_psi, axis=0) < -1e-12) or np.any(np.diff(vals_psi, axis=1) < -1e-12):
        raise FamilyError("psi must be non-decreasing in both parameters")

    def measure(t, tp):
        if t == 0.0 and tp == 0.0:
            return base.measure_at(0.0)
        nu_t = base.measure_at(t)
        r_t = nu_t.upper_support()
        if not math.isfinite(r_t):
            raise FamilyError("censoring base must have finite upper support")
        lo, hi = phi(t, tp), psi_map(t, tp)
        if hi < r_t - 1e-12 or not hi > lo:
            raise FamilyError(f"need psi >= r_t and psi > phi at ({t},{tp})")
        return censored_parts(nu_t, lo, hi)

    def psi_fn(t, tp, x):
        if t == 0.0 and tp == 0.0:
            return base.measure_at(0.0).hardy_littlewood(x)
        lo, hi = phi(t, tp), psi_map(t, tp)
        if x <= lo:
            return base.measure_at(t).hardy_littlewood(x)
        if x <= hi:
            return hi
        return x

    return ProcessFamily("censor", {"base": base.name}, measure, psi_fn, None,
                         {"is_mrl": True})


def censor_mzero(nu: Measure) -> ProcessFamily:
    """Constant-mean censoring: cut at r-t, upper atom at r+t'."""
    return censor_eps(nu, 0.0)


def censor_eps(nu: Measure, eps: float, level: float | None = None) -> ProcessFamily:
    """Censor at r-t and push the upper atom out to r+(1+eps)t'.

    The atom weights stay those of the constant-mean transform (balance
    against r+t'), so the mean grows by eps*t'*C_nu(r-t)/(t+t').  ``level``
    overrides the reference point r (must be >= the support bound); the
    default is the support bound itself.
    """
    if eps < 0.0:
        raise FamilyError(f"eps must be >= 0, got {eps}")
    r_nu = nu.upper_support()
    if not math.isfinite(r_nu):
        raise FamilyError("censor_eps needs a finite upper support bound")
    r = r_nu if level is None else float(level)
    if r < r_nu - 1e-12:
        raise FamilyError(f"level {r} lies below the support bound {r_nu}")

    def beta_tilde(t):
        return nu.integrated_survival(r - t)

    def measure(t, tp):
        if t == 0.0:
            return nu
        return censored_parts(nu, r - t, r + tp, r + (1 + eps) * tp)

    def psi_fn(t, tp, x):
        if t == 0.0:
            return nu.hardy_littlewood(x)
        hi = r + (1 + eps) * tp
        if x <= r - t:
            bt = beta_tilde(t)
            if bt <= 0.0:
                return nu.hardy_littlewood(x)
            return nu.hardy_littlewood(x) + eps * tp * bt / ((t + tp) * nu.tail_mass(x))
        if x <= hi:
            return hi
        return x

    def c_fn(t, tp, x):
        if t == 0.0:
            return nu.integrated_survival(x)
        hi = r + (1 + eps) * tp
        if x < r - t:
            return nu.integrated_survival(x) + eps * tp * beta_tilde(t) / (t + tp)
        if x < hi:
            return beta_tilde(t) * (hi - x) / (t + tp)
        return 0.0

    name = "censor_mzero" if eps == 0.0 else "censor_eps"
    return ProcessFamily(name, {"eps": eps, "r": r, "nu": nu.to_json()},
                         measure, psi_fn, c_fn, {"is_mrl": True, "is_mtp2": True})


# ---------------------------------------------------------------------------
# discrete mixing kernels (TP2 row families on the naturals)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Kernel:
    """TP2 mixing kernel: row n is a probability vector over the naturals."""

    name: str
    params: dict
    row_fn: Callable[[int], tuple[np.ndarray, np.ndarray, float]]
    kind: str = "discrete"

    def row(self, n: int) -> tuple[np.ndarray, np.ndarray, float]:
        """(support indices, probabilities, truncated tail mass) for row n."""
        if n < 0 or n != int(n):
            raise FamilyError(f"kernel rows are indexed by naturals, got {n}")
        idx, probs, tail = self.row_fn(int(n))
        return idx, probs, tail


def _kernel_probe_check(kernel: Kernel, n_rows: int = 6):
    """Row sums ~ 1 and 2x2 TP2 minors >= 0 on the leading block."""
    width = 0
    rows = []
    for n in range(n_rows):
        idx, probs, _ = kernel.row(n)
        s = float(probs.sum())
        if abs(s - 1.0) > 1e-10:
            raise FamilyError(f"kernel {kernel.name} row {n} sums to {s!r}")
        width = max(width, int(idx.max()) + 1 if idx.size else 1)
        rows.append((idx, probs))
    P = np.zeros((n_rows, width))
    for n, (idx, probs) in enumerate(rows):
        P[n, idx] = probs
    worst, _, _ = tp2_grid2(P, 1e-12)
    if worst < -1e-12:
        raise FamilyError(f"kernel {kernel.name} failed the TP2 probe ({worst!r})")


def kernel_binomial(a: float) -> Kernel:
    if not 0.0 < a < 1.0:
        raise FamilyError(f"a must lie in (0,1), got {a}")

    def row(n):
        i = np.arange(n + 1)
        probs = np.array([math.comb(n, k) * a ** k * (1 - a) ** (n - k)
                          for k in range(n + 1)])
        return i, probs, 0.0

    k = Kernel("binomial", {"a": a}, row)
    _kernel_probe_check(k)
    return k


def kernel_negbinomial(a: float, tail_cut: float = 1e-10) -> Kernel:
    """p(n,i) = C(n+i-1, i) a^n (1-a)^i, truncated at tail mass < tail_cut."""
    if not 0.0 < a < 1.0:
        raise FamilyError(f"a must lie in (0,1), got {a}")

    def row(n):
        if n == 0:
            return np.array([0]), np.array([1.0]), 0.0
        probs = [a ** n]
        while sum(probs) < 1.0 - tail_cut:
            i = len(probs) - 1
            probs.append(probs[-1] * (n + i) / (i + 1) * (1 - a))
        probs = np.asarray(probs)
        tail = max(1.0 - float(probs.sum()), 0.0)
        return np.arange(probs.size), probs / probs.sum(), tail

    k = Kernel("negbinomial", {"a": a}, row)
    _kernel_probe_check(k)
    return k


def kernel_qbinomial(a: float) -> Kernel:
    """Gaussian-binomial rows q(n,i) = [n;i]_a a^{(i^2+i)/2} / prod(1+a^l)."""
    if not 0.0 < a < 1.0:
        raise FamilyError(f"a must lie in (0,1), got {a}")

    def gauss_binom(n, i):
        out = 1.0
        for j in range(1, i + 1):
            out *= (1.0 - a ** (n - i + j)) / (1.0 - a ** j)
        return out

    def row(n):
        denom = 1.0
        for l in range(1, n + 1):
            denom *= 1.0 + a ** l
        i = np.arange(n + 1)
        probs = np.array([gauss_binom(n, k) * a ** ((k * k + k) / 2.0) / denom
                          for k in range(n + 1)])
        s = float(probs.sum())
        if abs(s - 1.0) > 1e-10:
            raise FamilyError(f"q-binomial row {n} sums to {s!r}")
        return i, probs / s, 0.0

    k = Kernel("qbinomial", {"a": a}, row)
    _kernel_probe_check(k)
    return k


def kernel_identity() -> Kernel:
    def row(n):
        return np.array([n]), np.array([1.0]), 0.0
    return Kernel("identity", {}, row)


def kernel_from_rows(rows: Sequence[Sequence[float]], name: str = "user_rows") -> Kernel:
    """User-supplied gridded rows; checked for TP2 at construction."""
    mat = [np.asarray(r, dtype=float) for r in rows]

    def row(n):
        if n >= len(mat):
            raise FamilyError(f"kernel has {len(mat)} rows, asked for {n}")
        probs = mat[n]
        return np.arange(probs.size), probs / probs.sum(), 0.0

    k = Kernel(name, {"n_rows": len(mat)}, row)
    _kernel_probe_check(k, n_rows=min(len(mat), 6))
    return k


def kernel_from_continuous_rows(lambdas: Sequence[float],
                                rows: Sequence[Sequence[float]],
                                name: str = "user_density") -> Kernel:
    """Continuous kernel from user-gridded density rows p_n(0, lambda).

    Each row is a density sampled on the shared ``lambdas`` grid; it is
    turned into trapezoid quadrature weights and renormalized (within
    1e-10 of unit mass before renormalization is enforced).  Row index n
    picks the n-th supplied row; the returned support holds the real
    lambda values, so subordination mixes the base family at those points.
    """
    lam = np.asarray(lambdas, dtype=float)
    if lam.ndim != 1 or lam.size < 2 or np.any(np.diff(lam) <= 0):
        raise FamilyError("lambda grid must be 1-d, sorted, with >= 2 points")
    wq = np.zeros(lam.size)
    gaps = np.diff(lam)
    wq[:-1] += gaps / 2.0
    wq[1:] += gaps / 2.0
    mat = []
    for r in rows:
        dens = np.asarray(r, dtype=float)
        if dens.shape != lam.shape or np.any(dens < 0):
            raise FamilyError("each density row must be nonnegative on the grid")
        w = dens * wq
        total = float(w.sum())
        if abs(total - 1.0) > 1e-10:
            raise FamilyError(f"density row mass {total!r} deviates beyond 1e-10")
        mat.append(w / total)
    P = np.vstack(mat)
    worst, _, _ = tp2_grid2(P, 1e-12)
    if worst < -1e-12:
        raise FamilyError(f"continuous kernel rows failed the TP2 probe ({worst!r})")

    def row(n):
        if n >= len(mat):
            raise FamilyError(f"kernel has {len(mat)} rows, asked for {n}")
        return lam, mat[n], 0.0

    return Kernel(name, {"n_rows": len(mat), "grid": len(lam)}, row,
                  kind="continuous")


# ---------------------------------------------------------------------------
# subordination
# ---------------------------------------------------------------------------

def fitted_moment_bound(family: ProcessFamily, grid: Sequence[float] = (0, 1, 2, 3, 4)) -> float:
    """Least K with int|y| d mu_(l,l') <= K (1+l)(1+l') on the probe grid."""
    best = 0.0
    for lam in grid:
        for lam2 in grid:
            m = family.measure_at(lam, lam2)
            best = max(best, m.abs_mean() / ((1.0 + lam) * (1.0 + lam2)))
    return best


def subordinate(base: ProcessFamily, kt: Kernel, ktp: Kernel,
                moment_grid: Sequence[float] = (0, 1, 2, 3, 4)) -> ProcessFamily:
    """Mix the base family against two TP2 kernel row families.

    The output measure at integer (n, m) is the double mixture
    sum_i sum_j p(n,i) q(m,j) mu_(i,j); its integrated survival function is
    the same mixture of the base C values.
    """
    K = fitted_moment_bound(base, moment_grid)
    cached = base.cached()

    def measure(t, tp):
        n, m = int(t), int(tp)
        if n != t or m != tp:
            raise FamilyError("discrete subordination is defined on integer grid points")
        ii, pp, tail_p = kt.row(n)
        jj, qq, tail_q = ktp.row(m)
        weights, measures = [], []
        for i, p in zip(ii, pp):
            for j, q in zip(jj, qq):
                w = float(p * q)
                if w <= 1e-15:
                    continue
                weights.append(w)
                measures.append(cached.measure_at(float(i), float(j)))
        total = sum(weights)
        weights = [w / total for w in weights]
        return convex_combine(weights, measures)

    claims = {"is_mrl": base.claims.get("is_mtp2", False),
              "is_mtp2": base.claims.get("is_mtp2", False)}
    return ProcessFamily(f"subordinate({base.name};{kt.name},{ktp.name})",
                         {"moment_bound": K}, measure, None, None, claims)


# ---------------------------------------------------------------------------
# the section-4 non-MRL construction and its submartingale split
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NonMrlSplit:
    full: ProcessFamily
    eta: ProcessFamily
    sigma: ProcessFamily
    weight: float


def nonmrl_eps(nu: Measure, r: float, eps: float) -> NonMrlSplit:
    """Censor nu on both sides of r; the result is icx-ordered but not MRL.

    Splits into the convex combination  full = w*eta + (1-w)*sigma  with
    w = nu((-inf, r]): eta censors the renormalized lower part (an MRL
    family), sigma rearranges the upper part (constant mean; its reflection
    is MRL).
    """
    if eps < 0.0:
        raise FamilyError(f"eps must be >= 0, got {eps}")
    w = 1.0 - nu.tail_mass_excl(r)
    if not (w > 0.0 and w < 1.0):
        raise FamilyError("nu must put positive mass on both sides of r")

    atoms_m, segs_m = restrict_raw(nu, None, r, hi_open=False)
    nu_minus = Measure.make(atoms=atoms_m, segments=segs_m, renormalize=True)
    atoms_p, segs_p = restrict_raw(nu, r, None, lo_open=True)
    nu_plus = Measure.make(atoms=atoms_p, segments=segs_p, renormalize=True)

    eta = censor_eps(nu_minus, eps, level=r)
    eta = ProcessFamily("nonmrl_eta", {"eps": eps, "r": r}, eta.measure_fn,
                        eta.psi_oracle, eta.c_oracle,
                        {"is_mrl": True, "is_mtp2": True})

    def sigma_measure(t, tp):
        if tp == 0.0:
            return nu_plus
        mass_hi, mom_hi = nu_plus._tail_parts(r + tp, inclusive=False)
        mass_mid = 1.0 - float(mass_hi)
        mom_mid = nu_plus.mean() - float(mom_hi)
        alpha = ((r + tp) * mass_mid - mom_mid) / (t + tp)
        beta = (mom_mid - (r - t) * mass_mid) / (t + tp)
        atoms, segs = restrict_raw(nu_plus, r + tp, None, lo_open=True)
        if alpha > 1e-15:
            atoms.append((r - t, alpha))
        if beta > 1e-15:
            atoms.append((r + tp, beta))
        return Measure.make(atoms=atoms, segments=segs)

    sigma = ProcessFamily("nonmrl_sigma", {"r": r}, sigma_measure, None, None,
                          {"constant_mean": True, "reflected_is_mrl": True})

    def full_measure(t, tp):
        if t == 0.0 and tp == 0.0:
            return nu
        lo, hi = r - t, r + tp
        m_lo, mom_lo = nu._tail_parts(lo, inclusive=True)
        m_r, mom_r = nu._tail_parts(r, inclusive=False)
        m_hi, mom_hi = nu._tail_parts(hi, inclusive=False)
        mass1, mom1 = float(m_lo - m_r), float(mom_lo - mom_r)     # [r-t, r]
        mass2, mom2 = float(m_r - m_hi), float(mom_r - mom_hi)     # (r, r+t']
        beta_minus = (mom1 - lo * mass1) / (t + tp)
        beta_plus = (mom2 - lo * mass2) / (t + tp)
        alpha = (hi * (mass1 + mass2) - mom1 - mom2) / (t + tp)
        atoms, segs = restrict_raw(nu, None, lo, hi_open=True)
        atoms_hi, segs_hi = restrict_raw(nu, hi, None, lo_open=True)
        atoms += atoms_hi
        segs += segs_hi
        if alpha > 1e-15:
            atoms.append((lo, alpha))
        if beta_plus > 1e-15:
            atoms.append((hi, beta_plus))
        if beta_minus > 1e-15:
            atoms.append((r + (1 + eps) * tp, beta_minus))
        return Measure.make(atoms=atoms, segments=segs)

    psi_full = None
    if eps == 0.0 and r == 0.0:
        def psi_full(t, tp, x):
            if (t == 0.0 and tp == 0.0) or not (-t < x <= tp):
                return nu.hardy_littlewood(x)
            cm, cp = nu.integrated_survival(-t), nu.integrated_survival(tp)
            return (tp * cm + t * cp) / (cm - cp)

    full = ProcessFamily("nonmrl_full", {"eps": eps, "r": r}, full_measure,
                         psi_full, None, {"is_icx": True})
    return NonMrlSplit(full, eta, sigma, w)


def reflected_family(family: ProcessFamily) -> ProcessFamily:
    """Image family under x -> -x (the parameter grid is untouched)."""
    return ProcessFamily(f"reflect({family.name})", family.params,
                         lambda t, tp: family.measure_at(t, tp).affine(-1.0, 0.0),
                         None, None,
                         {"is_mrl": family.claims.get("reflected_is_mrl", False)})


# ---------------------------------------------------------------------------
# the Kemperman three-box field (pairwise TP2 but not MTP2)
# ---------------------------------------------------------------------------

def kemperman_phi(u: float, v: float,
                  tgrid: Sequence[float] = (0.5, 1.0, 1.5, 2.0),
                  tpgrid: Sequence[float] = (0.5, 1.0, 1.5, 2.0),
                  xgrid: Sequence[float] = (0.5, 1.0, 1.5, 2.0)) -> GridFunction3:
    """Indicator field: u on [0,1]^2 x (1,2], v on (1,2]^2 x [0,1], else 0."""
    if u <= 0 or v <= 0:
        raise FamilyError("u and v must be positive")
    t = np.asarray(tgrid, dtype=float)
    tp = np.asarray(tpgrid, dtype=float)
    x = np.asarray(xgrid, dtype=float)
    in01 = lambda g: (g >= 0) & (g <= 1)
    in12 = lambda g: (g > 1) & (g <= 2)
    vals = (u * (in01(t)[:, None, None] & in01(tp)[None, :, None] & in12(x)[None, None, :])
            + v * (in12(t)[:, None, None] & in12(tp)[None, :, None] & in01(x)[None, None, :]))
    return GridFunction3(t, tp, x, vals.astype(float))


# ---------------------------------------------------------------------------
# grid plumbing shared by the checks and the CLI
# ---------------------------------------------------------------------------

DEFAULT_TGRID = (0.0, 0.25, 0.5, 1.0, 2.0, 4.0)


def default_xgrid(family: ProcessFamily, tgrid: Sequence[float],
                  tpgrid: Sequence[float], n: int = 17) -> np.ndarray:
    lo, hi = math.inf, -math.inf
    for t in tgrid:
        for tp in tpgrid:
            m = family.measure_at(t, tp)
            lo = min(lo, m.lower_support())
            hi = max(hi, m.upper_support())
    if not 9 <= n <= 33:
        raise FamilyError("x grids use 9 to 33 points")
    return np.linspace(lo - 1.0, hi + 1.0, n)


def c_field(family: ProcessFamily, tgrid, tpgrid, xgrid) -> GridFunction3:
    """Sample the family's integrated survival function on the grid product."""
    t = np.asarray(tgrid, dtype=float)
    tp = np.asarray(tpgrid, dtype=float)
    x = np.asarray(xgrid, dtype=float)
    vals = np.empty((t.size, tp.size, x.size))
    for i, a in enumerate(t):
        for j, b in enumerate(tp):
            vals[i, j] = family.measure_at(a, b).integrated_survival(x)
    return GridFunction3(t, tp, x, vals)


def family_mrl_report(family: ProcessFamily, tgrid, tpgrid, xgrid,
                      tol: float = 1e-10) -> OrderReport:
    """Pointwise MRL comparison over every componentwise-ordered grid pair."""
    from .ordering import mrl_compare
    pts = [(t, tp) for t in tgrid for tp in tpgrid]
    worst = math.inf
    witness = points = None
    n = 0
    for a in pts:
        for b in pts:
            if a == b or not (a[0] <= b[0] and a[1] <= b[1]):
                continue
            rep = mrl_compare(family.measure_at(*a), family.measure_at(*b), xgrid, tol)
            n += rep.n_checked
            if rep.worst < worst:
                worst = rep.worst
                witness = (a, b, rep.witness[0] if rep.witness else None)
                points = (a, b, rep.witness_points[0] if rep.witness_points else None)
    return _report("mrl_family", worst, tol, witness, points, n)


# ---------------------------------------------------------------------------
# JSON family specs (strict)
# ---------------------------------------------------------------------------

def family_from_spec(spec: dict) -> ProcessFamily:
    """Build a family from its JSON spec; unknown keys are rejected."""
    if "family" not in spec:
        raise FamilyError("spec needs a 'family' key")
    kind = spec["family"]
    rest = {k: v for k, v in spec.items() if k != "family"}

    def take(required, optional=()):
        unknown = set(rest) - set(required) - set(optional)
        if unknown:
            raise FamilyError(f"unknown keys for family {kind!r}: {sorted(unknown)}")
        missing = set(required) - set(rest)
        if missing:
            raise FamilyError(f"missing keys for family {kind!r}: {sorted(missing)}")

    if kind == "diatomic":
        take({"eps", "r"})
        return diatomic(float(rest["eps"]), float(rest["r"]))
    if kind == "example33":
        take(set())
        return counterexample_mrl_not_mtp2()
    if kind == "censor_mzero":
        take({"nu"})
        return censor_mzero(Measure.from_json(rest["nu"]))
    if kind == "censor_eps":
        take({"nu", "eps"}, {"level"})
        return censor_eps(Measure.from_json(rest["nu"]), float(rest["eps"]),
                          rest.get("level"))
    if kind == "nonmrl":
        take({"nu", "r", "eps"}, {"part"})
        split = nonmrl_eps(Measure.from_json(rest["nu"]), float(rest["r"]),
                           float(rest["eps"]))
        part = rest.get("part", "full")
        if part not in ("full", "eta", "sigma"):
            raise FamilyError(f"nonmrl part must be full|eta|sigma, got {part!r}")
        return getattr(split, part)
    if kind == "subordinate":
        take({"base", "kernel_t", "kernel_tprime"})
        return subordinate(family_from_spec(rest["base"]),
                           kernel_from_spec(rest["kernel_t"]),
                           kernel_from_spec(rest["kernel_tprime"]))
    raise FamilyError(f"unknown family kind {kind!r}")


def kernel_from_spec(spec: dict) -> Kernel:
    kind = spec.get("kind")
    rest = {k: v for k, v in spec.items() if k != "kind"}
    if kind == "binomial":
        if set(rest) != {"a"}:
            raise FamilyError("binomial kernel takes exactly {'a'}")
        return kernel_binomial(float(rest["a"]))
    if kind == "negbinomial":
        if set(rest) != {"a"}:
            raise FamilyError("negbinomial kernel takes exactly {'a'}")
        return kernel_negbinomial(float(rest["a"]))
    if kind == "qbinomial":
        if set(rest) != {"a"}:
            raise FamilyError("qbinomial kernel takes exactly {'a'}")
        return kernel_qbinomial(float(rest["a"]))
    if kind == "identity":
        if rest:
            raise FamilyError("identity kernel takes no parameters")
        return kernel_identity()
    if kind == "rows":
        if set(rest) != {"rows"}:
            raise FamilyError("rows kernel takes exactly {'rows'}")
        return kernel_from_rows(rest["rows"])
    if kind == "continuous_rows":
        if set(rest) != {"lambdas", "rows"}:
            raise FamilyError("continuous_rows kernel takes exactly {'lambdas','rows'}")
        return kernel_from_continuous_rows(rest["lambdas"], rest["rows"])
    raise FamilyError(f"unknown kernel kind {kind!r}")
