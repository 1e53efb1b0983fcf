"""Pure-python (numpy) path-simulation kernels.

This module is the reference semantics for the compiled twin in
``_pathsim.pyx``: identical counter-based RNG, identical portable log and
inverse-normal-CDF approximations, identical update order.  Both backends
produce bit-identical outputs for equal (master seed, sample index) pairs,
which the parity tests enforce.

RNG: splitmix64-style counter stream.  Draw j of sample i is
``mix64(key_i + (j+1)*GOLDEN)`` where ``key_i = mix64(mix64(master) +
(i+1)*SALT)``.  Uniforms are ``((x >> 11) + 0.5) * 2^-53`` (never 0 or 1).
Normals use the Acklam rational approximation of the inverse normal CDF
(abs error ~1.15e-9) with the portable log below; the log itself is an
atanh-series after frexp reduction (abs error < 1e-14), chosen so both
backends evaluate the exact same float operations in the same order.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
SALT = np.uint64(0xD1B54A32D192ED03)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
U53 = 1.0 / 9007199254740992.0  # 2^-53
LN2 = 0.6931471805599453
SQRT_HALF = 0.7071067811865476
NEVER = -1.0e308

_LOG_C = (1.0, 1.0 / 3.0, 1.0 / 5.0, 1.0 / 7.0, 1.0 / 9.0, 1.0 / 11.0,
          1.0 / 13.0, 1.0 / 15.0, 1.0 / 17.0)

# Acklam inverse-normal coefficients
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def mix64(z):
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = z ^ (z >> np.uint64(30))
        z = z * MIX1
        z = z ^ (z >> np.uint64(27))
        z = z * MIX2
        z = z ^ (z >> np.uint64(31))
    return z


def sample_keys(master_seed: int, start: int, n: int) -> np.ndarray:
    """Per-sample stream keys for samples start..start+n-1."""
    idx = np.arange(start + 1, start + n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        base = mix64(np.uint64(master_seed & 0xFFFFFFFFFFFFFFFF))
        return mix64(base + idx * SALT)


def stream_raw(keys, j):
    with np.errstate(over="ignore"):
        return mix64(keys + (np.asarray(j, dtype=np.uint64) + np.uint64(1)) * GOLDEN)


def u01(raw) -> np.ndarray:
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * U53


def stream_uniform(keys, j) -> np.ndarray:
    return u01(stream_raw(keys, j))


def plog(x):
    """Portable natural log for x in (0, 1]; matches the compiled kernel."""
    m, e = np.frexp(np.asarray(x, dtype=np.float64))
    small = m < SQRT_HALF
    m = np.where(small, m + m, m)
    e = np.where(small, e - 1, e).astype(np.float64)
    z = (m - 1.0) / (m + 1.0)
    z2 = z * z
    p = np.full_like(z, _LOG_C[8])
    for k in range(7, -1, -1):
        p = p * z2 + _LOG_C[k]
    return e * LN2 + 2.0 * z * p


def inv_norm_cdf(u):
    """Acklam's rational approximation; u strictly inside (0, 1)."""
    u = np.asarray(u, dtype=np.float64)
    q = u - 0.5
    r = q * q
    num = ((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]
    den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    central = num * q / den

    with np.errstate(invalid="ignore"):
        ql = np.sqrt(-2.0 * plog(np.where(u < 0.5, u, 0.5)))
        low = ((((((_C[0] * ql + _C[1]) * ql + _C[2]) * ql + _C[3]) * ql + _C[4]) * ql + _C[5])
               / ((((_D[0] * ql + _D[1]) * ql + _D[2]) * ql + _D[3]) * ql + 1.0))
        qh = np.sqrt(-2.0 * plog(np.where(u > 0.5, 1.0 - u, 0.5)))
        high = -(((((( _C[0] * qh + _C[1]) * qh + _C[2]) * qh + _C[3]) * qh + _C[4]) * qh + _C[5])
                 / ((((_D[0] * qh + _D[1]) * qh + _D[2]) * qh + _D[3]) * qh + 1.0))
    out = np.where(u < _P_LOW, low, np.where(u > 1.0 - _P_LOW, high, central))
    return out


def stream_normal(keys, j) -> np.ndarray:
    return inv_norm_cdf(stream_uniform(keys, j))


def barrier_lookup(s_knots, x_knots, s):
    """b(s) = sup{x : barrier(x) <= s}: piecewise-linear with duplicate-knot
    jumps; -1e308 below the first knot, the identity above the last."""
    s = np.asarray(s, dtype=np.float64)
    out = np.where(s >= s_knots[-1], s, NEVER)
    inside = (s >= s_knots[0]) & (s < s_knots[-1])
    if np.any(inside):
        k = np.searchsorted(s_knots, s, side="right") - 1
        k = np.clip(k, 0, len(s_knots) - 2)
        ds = s_knots[k + 1] - s_knots[k]
        safe = np.where(ds > 0.0, ds, 1.0)
        val = x_knots[k] + (x_knots[k + 1] - x_knots[k]) * (s - s_knots[k]) / safe
        val = np.where(ds > 0.0, val, x_knots[k + 1])
        out = np.where(inside, val, out)
    return out


def _bridge_max(b0, b1, dt, u):
    d = b1 - b0
    return 0.5 * (b0 + b1 + np.sqrt(d * d - 2.0 * dt * plog(u)))


def _bridge_min(b0, b1, dt, u):
    d = b1 - b0
    return 0.5 * (b0 + b1 - np.sqrt(d * d - 2.0 * dt * plog(u)))


def barrier_stage(keys, j, b, s, steps, s_knots, x_knots, top, dt, max_steps,
                  use_bridge=True):
    """Advance every path to its stop against one barrier (or the budget).

    Mutates j, b, s, steps in place; returns (values, stop_steps, exhausted).
    Each step consumes three draws: the Gaussian increment, the bridge
    maximum (running-max refinement) and the bridge minimum (in-segment dip
    detection against the barrier).  The recorded value is the barrier
    point b(S) at the stop, the continuum limit of the stopped value; with
    ``use_bridge`` off, the raw post-step Brownian value is recorded
    instead and no bridge refinement happens (draw consumption stays
    identical so increments pair up across the two modes).
    """
    n = keys.size
    sdt = np.sqrt(dt)
    values = np.zeros(n)
    stop_steps = np.zeros(n, dtype=np.int64)
    exhausted = np.zeros(n, dtype=bool)
    beta = barrier_lookup(s_knots, x_knots, s)

    act = np.arange(n)
    # pre-check: the prior state may already sit on / inside the epigraph
    hit = b[act] <= beta[act]
    if np.any(hit):
        stopped = act[hit]
        values[stopped] = beta[stopped] if use_bridge else b[stopped]
        stop_steps[stopped] = steps[stopped]
        act = act[~hit]
    act = _drop_exhausted(act, steps, max_steps, b, values, stop_steps, exhausted)

    while act.size:
        raw_z = stream_uniform(keys[act], j[act])
        raw_u = stream_uniform(keys[act], j[act] + np.uint64(1))
        raw_v = stream_uniform(keys[act], j[act] + np.uint64(2))
        j[act] += np.uint64(3)
        steps[act] += 1
        z = inv_norm_cdf(raw_z)
        bn = b[act] + sdt * z
        if use_bridge:
            m = _bridge_max(b[act], bn, dt, raw_u)
        else:
            m = np.maximum(b[act], bn)

        bloc = beta[act]
        stop_a = bn <= bloc
        stop_b = (~stop_a) & (m >= top)
        rest = ~(stop_a | stop_b)
        if np.any(rest):
            ridx = act[rest]
            grew = m[rest] > s[ridx]
            if np.any(grew):
                gidx = ridx[grew]
                s[gidx] = m[rest][grew]
                nb = barrier_lookup(s_knots, x_knots, s[gidx])
                beta[gidx] = nb
                bloc = beta[act]
        stop_c = rest & (bn <= bloc)
        if use_bridge:
            # dips that recover inside the segment: bridge minimum
            open_ = rest & (~stop_c) & (bloc > NEVER)
            if np.any(open_):
                mn = _bridge_min(b[act], bn, dt, raw_v)
                stop_c = stop_c | (open_ & (mn <= bloc))

        any_stop = stop_a | stop_b | stop_c
        if np.any(any_stop):
            sidx = act[any_stop]
            vfull = np.where(stop_a, bloc, np.where(stop_b, top, bloc))
            values[sidx] = vfull[any_stop] if use_bridge else bn[any_stop]
            stop_steps[sidx] = steps[sidx]
            # the state continues from the recorded stop point (the exact
            # continuum position): top-stops also pin S to the top, while
            # dip-stops keep the pre-segment S since the segment max may
            # postdate the dip
            if use_bridge:
                bn = np.where(any_stop, vfull, bn)
            if np.any(stop_b):
                s[act[stop_b]] = top if use_bridge else m[stop_b]
        b[act] = bn
        act = act[~any_stop]
        act = _drop_exhausted(act, steps, max_steps, b, values, stop_steps, exhausted)
    return values, stop_steps, exhausted


def _drop_exhausted(act, steps, max_steps, b, values, stop_steps, exhausted):
    if not act.size:
        return act
    over = steps[act] >= max_steps
    if np.any(over):
        done = act[over]
        values[done] = b[done]
        stop_steps[done] = steps[done]
        exhausted[done] = True
        act = act[~over]
    return act


def interval_stage(keys, j, b, steps, lo, hi, dt, max_steps):
    """First exit from the open interval (lo, hi), bridge-corrected.

    Crossings detected inside a step are recorded exactly at the barrier.
    Mutates j, b, steps in place; returns (values, stop_steps, exhausted).
    """
    n = keys.size
    sdt = np.sqrt(dt)
    values = np.zeros(n)
    stop_steps = np.zeros(n, dtype=np.int64)
    exhausted = np.zeros(n, dtype=bool)

    act = np.arange(n)
    outside = (b[act] <= lo) | (b[act] >= hi)
    if np.any(outside):
        done = act[outside]
        values[done] = b[done]
        stop_steps[done] = steps[done]
        act = act[~outside]
    act = _drop_exhausted(act, steps, max_steps, b, values, stop_steps, exhausted)

    while act.size:
        raw_z = stream_uniform(keys[act], j[act])
        raw_u1 = stream_uniform(keys[act], j[act] + np.uint64(1))
        raw_u2 = stream_uniform(keys[act], j[act] + np.uint64(2))
        j[act] += np.uint64(3)
        steps[act] += 1
        z = inv_norm_cdf(raw_z)
        bn = b[act] + sdt * z
        up = bn >= hi
        down = (~up) & (bn <= lo)
        mid = ~(up | down)
        if np.any(mid):
            m = _bridge_max(b[act], bn, dt, raw_u1)
            up |= mid & (m >= hi)
            mid = ~(up | down)
        if np.any(mid):
            mn = _bridge_min(b[act], bn, dt, raw_u2)
            down |= mid & (mn <= lo)

        stop = up | down
        if np.any(stop):
            sidx = act[stop]
            values[sidx] = np.where(up, hi, lo)[stop]
            stop_steps[sidx] = steps[sidx]
            # continue from the barrier itself, the exact continuum position
            bn = np.where(stop, np.where(up, hi, lo), bn)
        b[act] = bn
        act = act[~stop]
        act = _drop_exhausted(act, steps, max_steps, b, values, stop_steps, exhausted)
    return values, stop_steps, exhausted
