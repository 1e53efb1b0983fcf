"""Brownian embedding of measure families via the running-maximum barrier.

A positive-mean target nu is embedded by stopping a standard Brownian
motion the first time the pair (B, S) -- value and running maximum -- hits
the epigraph of nu's Hardy-Littlewood function Psi.  Equivalently, with
b(s) = sup{x : Psi(x) <= s} the stop fires when B falls to b(S); at that
instant B equals b(S) exactly, so the kernels record the barrier point
rather than the overshot grid value (for atomic targets this recovers the
atoms exactly, which the law-match tolerances require).

Targets whose mean is not positive are handled by starting the path at
m0 < mean instead of 0 (the shifted construction expressed in the target's
own coordinates); along a family chain a single m0 chosen at the minimal
point keeps the coupling intact.

Coupled chains reuse one path per sample: barrier k+1 dominates barrier k
pointwise for MRL-ordered families, so the stop against barrier k+1 simply
continues the same trajectory.  Per-path stopping steps are therefore
non-decreasing by construction; barrier domination is verified on a probe
grid up front and violations are a hard error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .families import ProcessFamily, reflected_family
from .measures import Measure
from .montecarlo import PathConfig, mean_and_stderr
from . import pathsim


class EmbedError(RuntimeError):
    pass


DEFAULT_MARGIN = 1e-3
NESTING_TOL = 1e-9


# ---------------------------------------------------------------------------
# the convex tangent machinery
# ---------------------------------------------------------------------------

def pi_function(m: Measure, x) -> float | np.ndarray:
    """pi(x) = integral of |y - x| + mean: the convex potential whose
    tangent lines parameterize the embedding barrier."""
    xv = np.asarray(x, dtype=float)
    mass_hi, mom_hi = m._tail_parts(xv, inclusive=True)
    # |y-x| integral = (mom_hi - x mass_hi) + (x (1-mass_hi) - (mean-mom_hi));
    # adding the mean back cancels it
    out = 2.0 * (mom_hi - xv * mass_hi) + xv
    return out if np.ndim(x) else float(out)


def tangent_params(m: Measure, theta: float) -> tuple[float, float]:
    """Tangent touch point u(theta) and intercept parameter z(theta).

    u is the generalized inverse of the left-derivative x -> 1 - 2 mu([x,
    +inf)); z(theta) = (pi(u) - theta u)/(1 - theta).  At theta = -1 the
    tangent touches at -inf and z is the mean; at theta = 1 it touches at
    the support bound and z degenerates.
    """
    if not -1.0 <= theta <= 1.0:
        raise EmbedError(f"theta must lie in [-1, 1], got {theta}")
    if theta == 1.0:
        return m.upper_support(), math.inf
    if theta == -1.0:
        return -math.inf, m.mean()
    u = m.quantile((1.0 + theta) / 2.0)
    z = (pi_function(m, u) - theta * u) / (1.0 - theta)
    return float(u), float(z)


def psi_via_tangents(m: Measure, x: float) -> float:
    """z(u^{-1}(x)): must coincide with the Hardy-Littlewood function."""
    theta = 1.0 - 2.0 * m.tail_mass(x)
    if theta <= -1.0:
        return m.mean()
    if theta >= 1.0:
        return float(x)
    return tangent_params(m, theta)[1]


# ---------------------------------------------------------------------------
# barriers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoxHobsonBarrier:
    """Target + Brownian start + the inverse-barrier lookup table b(s).

    The simulation runs in the target's own coordinates: the path starts at
    m0 (strictly below the target mean; 0 for positive-mean targets, which
    recovers the plain construction) and stops when the running maximum
    reaches Psi of the current value.  This is the shifted construction
    expressed without shifting, so recorded stop values land bit-exactly on
    the target's atoms.
    """

    target: Measure
    m0: float
    s_knots: np.ndarray
    x_knots: np.ndarray
    top: float
    note: str = ""

    def psi(self, x):
        return self.target.hardy_littlewood(x)

    def lookup(self, s):
        return pathsim.barrier_lookup(self.s_knots, self.x_knots, s)


def make_barrier(m: Measure, m0: float | None = None, refine: int = 128,
                 note: str = "") -> CoxHobsonBarrier:
    mean = m.mean()
    if m0 is None:
        if mean <= 0.0:
            raise EmbedError("target mean is not positive: supply m0 < mean")
        m0 = 0.0
    if not m0 < mean:
        raise EmbedError(f"m0 must be strictly below the mean ({m0} >= {mean})")
    s_knots, x_knots, top = _barrier_table(m, refine)
    return CoxHobsonBarrier(m, float(m0), s_knots, x_knots, top, note)


def _barrier_table(m: Measure, refine: int = 128):
    """Knots of b(s) = sup{x : Psi(x) <= s}.

    Flat stretches of Psi (support gaps) become jumps of b encoded as
    duplicate s-knots; atoms of the target make Psi jump, encoded as
    duplicate x-knots so b sits exactly on the atom for a whole band of s.
    """
    arr = m._arrays()
    xs = set(float(l) for l in arr["locs"])
    for x0, x1 in zip(arr["px0"], arr["px1"]):
        xs.update(np.linspace(x0, x1, refine + 1).tolist())
    xs = np.array(sorted(xs))
    top = m.upper_support()
    xs = xs[xs <= top]
    sk: list[float] = []
    xk: list[float] = []

    def push(s, x):
        if sk and s < sk[-1] - 1e-12:
            raise EmbedError("barrier values must be non-decreasing")
        if sk and s <= sk[-1] and x <= xk[-1]:
            return
        sk.append(max(s, sk[-1] if sk else s))
        xk.append(x)

    for x in xs:
        x = float(x)
        v1 = float(m.hardy_littlewood(x))
        push(v1, x)
        if x < top:
            tail_ex = float(m.tail_mass_excl(x))
            has_atom = float(m.tail_mass(x)) - tail_ex > 1e-15
            if has_atom and tail_ex > 0.0:
                v2 = float(x + m.integrated_survival(x) / tail_ex)
                push(v2, x)
    push(float(top), float(top))
    s_knots = np.asarray(sk)
    x_knots = np.asarray(xk)
    # collapse runs of equal s to their first/last knots
    keep = np.ones(len(sk), dtype=bool)
    for i in range(1, len(sk) - 1):
        if s_knots[i] == s_knots[i - 1] == s_knots[i + 1]:
            keep[i] = False
    return s_knots[keep], x_knots[keep], float(top)


# ---------------------------------------------------------------------------
# embedding runs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EmbedResult:
    """Samples of one embedding: per path the stopped value, the stopping
    step, the running maximum at the stop and whether the step budget ran
    out first.  All values live in the target's own coordinates."""

    values: np.ndarray
    steps: np.ndarray
    running_max: np.ndarray
    exhausted: np.ndarray
    m0: float

    @property
    def n_exhausted(self) -> int:
        return int(self.exhausted.sum())


@dataclass(frozen=True)
class ChainEmbedResult:
    """Coupled samples along a chain: arrays of shape (n_samples, len(chain)).

    ``running_max`` is the Brownian running maximum at each stop; it is None
    for constructions where the raw path maximum is not meaningful for the
    reported values (the negated leg of a mixture, interval exits).
    """

    chain: tuple
    values: np.ndarray
    steps: np.ndarray
    exhausted: np.ndarray
    m0: float
    running_max: np.ndarray | None = None

    @property
    def n_exhausted(self) -> int:
        return int(self.exhausted.any(axis=1).sum())

    def point(self, k: int) -> np.ndarray:
        return self.values[:, k]


def _check_exhaustion(n_exhausted: int, n: int, max_frac: float):
    if n_exhausted > max_frac * n:
        raise EmbedError(
            f"{n_exhausted}/{n} paths exhausted the step budget "
            f"(limit fraction {max_frac}); raise max_steps or adjust m0")


def embed(barrier: CoxHobsonBarrier, cfg: PathConfig, use_bridge: bool = True,
          workers: int | None = None, max_exhausted_frac: float = 1e-4) -> EmbedResult:
    """Simulate cfg.n_samples independent embeddings of one target."""
    n = cfg.n_samples
    w = pathsim.resolve_workers(workers)
    keys = pathsim.sample_keys(cfg.master_seed, 0, n)
    j = np.zeros(n, dtype=np.uint64)
    b = np.full(n, barrier.m0)
    s = np.full(n, barrier.m0)
    steps = np.zeros(n, dtype=np.int64)
    values, stop_steps, exhausted = pathsim.run_barrier_stage(
        keys, j, b, s, steps, barrier.s_knots, barrier.x_knots, barrier.top,
        cfg.dt, cfg.max_steps, use_bridge, w)
    _check_exhaustion(int(exhausted.sum()), n, max_exhausted_frac)
    return EmbedResult(values, stop_steps, s.copy(), exhausted, barrier.m0)


def _validate_chain(chain) -> list[tuple[float, float]]:
    pts = [(float(t), float(tp)) for t, tp in chain]
    if not pts:
        raise EmbedError("empty chain")
    for a, b in zip(pts, pts[1:]):
        if not (a[0] <= b[0] and a[1] <= b[1]):
            raise EmbedError(f"chain must be componentwise non-decreasing: {a} then {b}")
    return pts


def _check_nesting(barriers: list[CoxHobsonBarrier]):
    """Epigraph domination: each barrier's Psi must dominate its predecessor."""
    for k in range(len(barriers) - 1):
        a, b = barriers[k], barriers[k + 1]
        probe = np.unique(np.concatenate([a.x_knots, b.x_knots]))
        pa = np.asarray(a.psi(probe))
        pb = np.asarray(b.psi(probe))
        gap = float((pb - pa).min())
        if gap < -NESTING_TOL:
            raise EmbedError(
                f"barriers are not nested between chain points {k} and {k + 1} "
                f"(worst gap {gap:.3e}); the family is not MRL along this chain")


def chain_barriers(measures: Sequence[Measure], m0: float | None,
                   margin: float = DEFAULT_MARGIN) -> list[CoxHobsonBarrier]:
    if m0 is None:
        m0 = measures[0].mean() - margin
    barriers = [make_barrier(m, m0) for m in measures]
    _check_nesting(barriers)
    return barriers


def embed_family(family: ProcessFamily, chain, cfg: PathConfig,
                 m0: float | None = None, margin: float = DEFAULT_MARGIN,
                 use_bridge: bool = True, workers: int | None = None,
                 max_exhausted_frac: float = 1e-4) -> ChainEmbedResult:
    """Coupled embedding along a componentwise-ordered chain.

    One Brownian path per sample is stopped successively at the nested
    barriers; stopping steps are non-decreasing per path (exact, by
    construction).  A single shift m0 (default: mean at the chain minimum
    minus ``margin``) applies to every chain point.
    """
    pts = _validate_chain(chain)
    measures = [family.measure_at(t, tp) for t, tp in pts]
    barriers = chain_barriers(measures, m0, margin)
    n = cfg.n_samples
    w = pathsim.resolve_workers(workers)
    keys = pathsim.sample_keys(cfg.master_seed, 0, n)
    start = barriers[0].m0
    state = (keys, np.zeros(n, dtype=np.uint64), np.full(n, start),
             np.full(n, start), np.zeros(n, dtype=np.int64))
    return _run_chain(barriers, pts, state, cfg, use_bridge, w,
                      max_exhausted_frac, sign=1.0)


def _run_chain(barriers, pts, state, cfg, use_bridge, workers,
               max_exhausted_frac, sign=1.0) -> ChainEmbedResult:
    keys, j, b, s, steps = state
    n = keys.size
    L = len(barriers)
    values = np.zeros((n, L))
    stop_steps = np.zeros((n, L), dtype=np.int64)
    exhausted = np.zeros((n, L), dtype=bool)
    running_max = np.zeros((n, L))
    for k, bar in enumerate(barriers):
        v, st, ex = pathsim.run_barrier_stage(
            keys, j, b, s, steps, bar.s_knots, bar.x_knots, bar.top,
            cfg.dt, cfg.max_steps, use_bridge, workers)
        values[:, k] = sign * v
        stop_steps[:, k] = st
        exhausted[:, k] = ex
        running_max[:, k] = s
    if n:
        _check_exhaustion(int(exhausted.any(axis=1).sum()), n, max_exhausted_frac)
        if np.any(np.diff(stop_steps, axis=1) < 0):
            raise EmbedError("internal error: stopping steps decreased along the chain")
    return ChainEmbedResult(tuple(pts), values, stop_steps, exhausted,
                            barriers[0].m0 if barriers else 0.0,
                            running_max if sign > 0 else None)


# ---------------------------------------------------------------------------
# submartingale statistics
# ---------------------------------------------------------------------------

def _phi_one(h):
    return np.ones(h.shape[0])


def _phi_clip_linear(h):
    return np.clip(h[:, -1], -3.0, 3.0)


def _phi_clip_quad(h):
    return np.clip(h[:, -1] ** 2, 0.0, 9.0)


def _phi_tanh_sum(h):
    return np.tanh(h.mean(axis=1))


def _phi_smooth_ind(h):
    return 1.0 / (1.0 + np.exp(-4.0 * h[:, -1]))


PHI_LIBRARY: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "one": _phi_one,
    "clip_linear": _phi_clip_linear,
    "clip_quad": _phi_clip_quad,
    "tanh_sum": _phi_tanh_sum,
    "smooth_ind": _phi_smooth_ind,
}


@dataclass(frozen=True)
class SubmartingaleStat:
    phi: str
    estimate: float
    stderr: float
    n: int

    @property
    def significantly_negative(self) -> bool:
        return self.estimate < -3.0 * self.stderr


def submartingale_statistic(samples: ChainEmbedResult | np.ndarray,
                            phi: str | Callable = "one",
                            include_exhausted: bool = True) -> SubmartingaleStat:
    """Monte Carlo estimate of E[Phi(X_{s_1},...,X_s)(X_t - X_s)].

    The chain's last two points play (s, t); every earlier point feeds the
    history argument of Phi.  With ``include_exhausted`` the horizon value
    stands in for unstopped paths (optional stopping keeps the truncated
    process a submartingale); excluding them instead matches the stopped
    law but biases long-stoppers away.
    """
    if isinstance(samples, ChainEmbedResult):
        vals = samples.values
        mask = None if include_exhausted else ~samples.exhausted.any(axis=1)
    else:
        vals = np.asarray(samples)
        mask = None
    if vals.ndim != 2 or vals.shape[1] < 2:
        raise EmbedError("submartingale statistic needs a chain of length >= 2")
    if mask is not None:
        vals = vals[mask]
    name = phi if isinstance(phi, str) else getattr(phi, "__name__", "custom")
    fn = PHI_LIBRARY[phi] if isinstance(phi, str) else phi
    y = fn(vals[:, :-1]) * (vals[:, -1] - vals[:, -2])
    est, se = mean_and_stderr(y)
    return SubmartingaleStat(name, est, se, int(y.size))


# ---------------------------------------------------------------------------
# the section-4 constructions
# ---------------------------------------------------------------------------

def mixture_submartingale(eta_family: ProcessFamily, sigma_family: ProcessFamily,
                          weight: float, chain, cfg: PathConfig,
                          margin: float = DEFAULT_MARGIN,
                          workers: int | None = None,
                          max_exhausted_frac: float = 1e-4) -> ChainEmbedResult:
    """Bernoulli mixture of the eta embedding and the reflected-sigma one.

    Each sample flips an independent coin with P(eta) = weight; heads run
    the eta family's coupled embedding, tails run the reflection of the
    sigma family (an MRL family) and negate the outputs.  The marginal law
    at every chain point is weight*eta + (1-weight)*sigma.
    """
    if not 0.0 <= weight <= 1.0:
        raise EmbedError(f"weight must lie in [0,1], got {weight}")
    pts = _validate_chain(chain)
    n = cfg.n_samples
    w = pathsim.resolve_workers(workers)
    keys = pathsim.sample_keys(cfg.master_seed, 0, n)
    coin = pathsim.stream_uniform(keys, np.zeros(n, dtype=np.uint64))
    take_eta = coin < weight

    values = np.zeros((n, len(pts)))
    steps = np.zeros((n, len(pts)), dtype=np.int64)
    exhausted = np.zeros((n, len(pts)), dtype=bool)

    legs = ((take_eta, eta_family, 1.0),
            (~take_eta, reflected_family(sigma_family), -1.0))
    m0 = 0.0
    for mask, fam, sign in legs:
        idx = np.flatnonzero(mask)
        if idx.size == 0:
            continue
        measures = [fam.measure_at(t, tp) for t, tp in pts]
        barriers = chain_barriers(measures, None, margin)
        start = barriers[0].m0
        state = (keys[idx], np.ones(idx.size, dtype=np.uint64),
                 np.full(idx.size, start), np.full(idx.size, start),
                 np.zeros(idx.size, dtype=np.int64))
        sub_cfg = PathConfig(cfg.dt, cfg.max_steps, idx.size, cfg.master_seed)
        out = _run_chain(barriers, pts, state, sub_cfg, True, w,
                         max_exhausted_frac=1.0, sign=sign)
        values[idx] = out.values
        steps[idx] = out.steps
        exhausted[idx] = out.exhausted
        if sign > 0:
            m0 = out.m0
    _check_exhaustion(int(exhausted.any(axis=1).sum()), n, max_exhausted_frac)
    return ChainEmbedResult(tuple(pts), values, steps, exhausted, m0)


def double_barrier_martingale(nu: Measure, chain, cfg: PathConfig,
                              workers: int | None = None,
                              max_exhausted_frac: float = 1e-4) -> ChainEmbedResult:
    """Brownian motion started from nu, stopped at exits of (-t, t').

    The intervals are nested along a componentwise-ordered chain, so one
    path serves every chain point; exits are recorded exactly at the
    barrier (starts already outside stop immediately at their own value).
    """
    pts = _validate_chain(chain)
    n = cfg.n_samples
    w = pathsim.resolve_workers(workers)
    keys = pathsim.sample_keys(cfg.master_seed, 0, n)
    u0 = pathsim.stream_uniform(keys, np.zeros(n, dtype=np.uint64))
    b = np.asarray(nu.quantile(u0), dtype=float)
    j = np.ones(n, dtype=np.uint64)
    steps = np.zeros(n, dtype=np.int64)
    L = len(pts)
    values = np.zeros((n, L))
    stop_steps = np.zeros((n, L), dtype=np.int64)
    exhausted = np.zeros((n, L), dtype=bool)
    for k, (t, tp) in enumerate(pts):
        v, st, ex = pathsim.run_interval_stage(keys, j, b, steps, -t, tp,
                                               cfg.dt, cfg.max_steps, w)
        values[:, k] = v
        stop_steps[:, k] = st
        exhausted[:, k] = ex
    _check_exhaustion(int(exhausted.any(axis=1).sum()), n, max_exhausted_frac)
    if np.any(np.diff(stop_steps, axis=1) < 0):
        raise EmbedError("internal error: stopping steps decreased along the chain")
    return ChainEmbedResult(tuple(pts), values, stop_steps, exhausted, 0.0)
