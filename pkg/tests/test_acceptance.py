"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s``.  The Monte Carlo
criteria are sized for the compiled backend; with the pure-python fallback
the statistical assertions still hold but the wall-clock budgets are not
enforced.

Criterion 8 is implemented exactly as stated and is expected to fail: at
t' = 1 the upper censoring level sits at the support bound of
uniform[-1,1], where the closed-form plateau of the Hardy-Littlewood
function is constant in t (its t-derivative carries a factor C_nu(t') = 0),
so the family is MRL-ordered between (1,1) and (2,1) and no probe x in
(-1,1) can witness a failure.  The companion test demonstrates the intended
non-MRL witness at t' = 0.5, where the derivative argument applies.
"""

import time

import numpy as np
import pytest

from peacock2 import (
    EmpiricalLaw, Measure, PathConfig, PHI_LIBRARY, censor_eps, censor_mzero,
    counterexample_mrl_not_mtp2, c_field, diatomic, double_barrier_martingale,
    embed, embed_family, icx_compare, kemperman_phi, kernel_binomial,
    ks_distance, make_barrier, mixture_submartingale, mrl_compare, mtp2_check,
    nonmrl_eps, reflected_family, submartingale_statistic, subordinate,
    tp2_pair_check, w1_distance,
)
from peacock2.ordering import det2_criterion
from peacock2 import pathsim

COMPILED = pathsim.backend_name() == "compiled"


def report(num: int, ok: bool, elapsed: float, budget: float, desc: str,
           detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    extra = f" [{detail}]" if detail else ""
    print(f"ACCEPTANCE {num}: {status}  ({elapsed:.1f}s / budget {budget:.0f}s)"
          f" {desc}{extra}")


def check_budget(elapsed: float, budget: float):
    if COMPILED:
        assert elapsed < budget, f"runtime {elapsed:.1f}s exceeded budget {budget}s"


# ---------------------------------------------------------------------------
# 1. closed-form oracle agreement
# ---------------------------------------------------------------------------

def test_criterion_1_oracle_agreement():
    t0 = time.perf_counter()
    tgrid = (0.0, 0.5, 1.0, 2.0, 4.0)
    families = [
        diatomic(0.5, 0.0),
        counterexample_mrl_not_mtp2(),
        censor_eps(Measure.uniform(-1.0, 0.0), 0.3),
        nonmrl_eps(Measure.uniform(-1.0, 1.0), 0.0, 0.0).full,
    ]
    worst = 0.0
    for fam in families:
        xs = np.linspace(-4.0, 7.0, 9)
        for t in tgrid:
            for tp in tgrid:
                m = fam.measure_at(t, tp)
                for x in xs:
                    if fam.psi_oracle is not None:
                        err = abs(m.hardy_littlewood(float(x))
                                  - fam.psi_oracle(t, tp, float(x)))
                        worst = max(worst, err)
                    if fam.c_oracle is not None:
                        err = abs(m.integrated_survival(float(x))
                                  - fam.c_oracle(t, tp, float(x)))
                        worst = max(worst, err)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-10
    report(1, ok, elapsed, 1.0, "closed-form oracles match generic evaluators "
           "on 5x5x9 grids", f"worst |err| = {worst:.2e}")
    assert ok
    check_budget(elapsed, 1.0)


# ---------------------------------------------------------------------------
# 2. Theorem-2 equivalence: det2 <=> pairwise TP2 in (t,x) and (t',x)
# ---------------------------------------------------------------------------

def _mrl_family_zoo():
    half = Measure.from_atoms([(-1.0, 0.5), (0.0, 0.5)])
    split = nonmrl_eps(Measure.uniform(-1, 1), 0.0, 0.5)
    return [
        ("diatomic(0.5,0)", diatomic(0.5, 0.0), (0, 0.5, 1, 2)),
        ("diatomic(0.3,1)", diatomic(0.3, 1.0), (0, 0.5, 1, 2)),
        ("example33", counterexample_mrl_not_mtp2(), (0.5, 1, 2)),
        ("censor_mzero(unif)", censor_mzero(Measure.uniform(-1.0, 0.0)), (0, 0.5, 1, 2)),
        ("censor_eps(unif,0.2)", censor_eps(Measure.uniform(-1.0, 0.0), 0.2), (0, 0.5, 1, 2)),
        ("censor_eps(atoms,1.0)", censor_eps(half, 1.0), (0, 0.5, 1, 2)),
        ("subordinated", subordinate(censor_eps(half, 0.2), kernel_binomial(0.5),
                                     kernel_binomial(0.5)), (0, 1, 2, 3)),
        ("nonmrl_eta", split.eta, (0, 0.5, 1, 2)),
        ("reflected_sigma", reflected_family(split.sigma), (0, 0.5, 1, 2)),
    ]


def test_criterion_2_theorem2_equivalence():
    t0 = time.perf_counter()
    from peacock2.families import default_xgrid
    mismatches = []
    for name, fam, tg in _mrl_family_zoo():
        xg = default_xgrid(fam, tg, tg, 9)
        C = c_field(fam, tg, tg, xg)
        det2 = det2_criterion(C).holds
        pair = (tp2_pair_check(C, "t,x").holds
                and tp2_pair_check(C, "tprime,x").holds)
        if det2 != pair:
            mismatches.append((name, det2, pair))
    elapsed = time.perf_counter() - t0
    ok = not mismatches
    report(2, ok, elapsed, 5.0, "det2 criterion <=> TP2 in (t,x) and (t',x) "
           "on all shipped MRL families", f"{len(mismatches)} discrepancies")
    assert ok, mismatches
    check_budget(elapsed, 5.0)


# ---------------------------------------------------------------------------
# 3. Theorem 3: pairwise TP2 => MTP2 on the lattice, plus the two witnesses
# ---------------------------------------------------------------------------

def test_criterion_3_pairwise_implies_mtp2():
    t0 = time.perf_counter()
    from peacock2.families import default_xgrid
    half = Measure.from_atoms([(-1.0, 0.5), (0.0, 0.5)])
    tg6 = (0.0, 0.4, 0.8, 1.5, 2.5, 4.0)
    families = [
        ("diatomic", diatomic(0.5, 0.0), tg6),
        ("censor_mzero", censor_mzero(Measure.uniform(-1.0, 0.0)), tg6),
        ("censor_eps", censor_eps(Measure.uniform(-1.0, 0.0), 0.2), tg6),
        ("subordinated", subordinate(censor_eps(half, 0.2), kernel_binomial(0.5),
                                     kernel_binomial(0.5)), (0, 1, 2, 3, 4, 5)),
    ]
    failures = []
    for name, fam, tg in families:
        xg = default_xgrid(fam, tg, tg, 9)[::2][:6]
        C = c_field(fam, tg, tg, xg)
        pair_ok = all(tp2_pair_check(C, p).holds
                      for p in ("t,x", "tprime,x", "t,tprime"))
        lattice_ok = mtp2_check(C).holds
        if not (pair_ok and lattice_ok):
            failures.append(name)

    # Kemperman: both x-pairs pass, the lattice fails with the box witness
    phi = kemperman_phi(1.0, 1.0)
    kem_pairs = (tp2_pair_check(phi, "t,x").holds
                 and tp2_pair_check(phi, "tprime,x").holds)
    kem_lattice = mtp2_check(phi)
    wit = kem_lattice.witness_points
    kem_ok = kem_pairs and not kem_lattice.holds and wit is not None
    if kem_ok:
        (ta, tpa, xa, tb, tpb, xb) = wit
        lowbox = (ta <= 1 and tpa <= 1 and xa > 1) or (tb <= 1 and tpb <= 1 and xb > 1)
        highbox = (ta > 1 and tpa > 1 and xa <= 1) or (tb > 1 and tpb > 1 and xb <= 1)
        kem_ok = lowbox and highbox
    if not kem_ok:
        failures.append("kemperman")

    # Example 3.3 fails the (t,t') pair with the printed determinant
    ex = counterexample_mrl_not_mtp2()
    Cx = c_field(ex, (1.0, 2.0), (1.0, 2.0), (0.0,))
    rep33 = tp2_pair_check(Cx, "t,tprime")
    want = 8.0 / 9.0 - 9.0 / 10.0
    ex_ok = (not rep33.holds) and abs(rep33.worst - want) < 1e-12
    if not ex_ok:
        failures.append("example33")

    elapsed = time.perf_counter() - t0
    ok = not failures
    report(3, ok, elapsed, 30.0, "pairwise TP2 + exhaustive lattice check on 6^3 "
           "grids; Kemperman and the (t,t') counterexample behave as printed",
           f"failures: {failures}" if failures else "")
    assert ok, failures
    check_budget(elapsed, 30.0)


# ---------------------------------------------------------------------------
# 4. embedding law match: KS < 0.015 at N = 1e5, dt = 1e-4, bridge on
# ---------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_4_embedding_law_match():
    t0 = time.perf_counter()
    N = 100_000
    fam = diatomic(0.5, 1.0)
    cm = censor_mzero(Measure.uniform(-1.0, 0.0))
    targets = [("dirac(1)", Measure.dirac(1.0)),
               ("twopoint", Measure.from_atoms([(-1.0, 0.5), (1.0, 0.5)]))]
    targets += [(f"diatomic{pt}", fam.measure_at(*pt))
                for pt in ((1, 1), (2, 1), (2, 2))]
    targets += [("censor(0.7,1)", cm.measure_at(0.7, 1.0))]
    rows = []
    for k, (name, m) in enumerate(targets):
        cfg = PathConfig(dt=1e-4, max_steps=10_000_000, n_samples=N,
                         master_seed=2024 + k)
        res = embed(make_barrier(m, m0=m.mean() - 1e-3), cfg)
        vals = res.values[~res.exhausted]
        ks = ks_distance(EmpiricalLaw.from_samples(vals), m)
        rows.append((name, ks, res.n_exhausted))
    elapsed = time.perf_counter() - t0
    worst = max(r[1] for r in rows)
    ok = worst < 0.015
    report(4, ok, elapsed, 300.0, "embedded law matches the target for 6 "
           "measures (KS < 0.015, N=1e5, dt=1e-4, bridge corrected)",
           "; ".join(f"{n}: KS={k:.4f}" for n, k, _ in rows))
    assert ok, rows
    check_budget(elapsed, 300.0)


# ---------------------------------------------------------------------------
# 5. coupled monotonicity along a chain (exact, per path)
# ---------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_5_coupled_monotonicity():
    t0 = time.perf_counter()
    fam = diatomic(0.5, 0.0)
    cfg = PathConfig(dt=1e-3, max_steps=200_000, n_samples=10_000, master_seed=55)
    out = embed_family(fam, [(1, 1), (2, 1), (2, 2)], cfg, max_exhausted_frac=0.05)
    frac = float(np.mean(np.all(np.diff(out.steps, axis=1) >= 0, axis=1)))
    elapsed = time.perf_counter() - t0
    ok = frac == 1.0
    report(5, ok, elapsed, 60.0, "per-path stopping steps are non-decreasing "
           "along the 3-chain for 100% of 1e4 paths",
           f"fraction monotone = {frac:.6f}, exhausted = {out.n_exhausted}")
    assert ok
    check_budget(elapsed, 60.0)


# ---------------------------------------------------------------------------
# 6. submartingale inequality for the mixture; martingale case for mu0
# ---------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_6_submartingale_statistics():
    t0 = time.perf_counter()
    split = nonmrl_eps(Measure.uniform(-1, 1), 0.0, 0.5)
    chain = [(1.0, 0.5), (1.25, 0.75), (1.5, 1.0)]
    cfg = PathConfig(dt=1e-3, max_steps=400_000, n_samples=100_000, master_seed=66)
    mix = mixture_submartingale(split.eta, split.sigma, split.weight, chain, cfg,
                                max_exhausted_frac=0.02)
    rows = []
    ok = True
    for phi in PHI_LIBRARY:
        st = submartingale_statistic(mix, phi)
        good = st.estimate >= -3.0 * st.stderr
        ok = ok and good
        rows.append(f"{phi}: {st.estimate:+.4f} (3se {3 * st.stderr:.4f})")

    out = double_barrier_martingale(
        Measure.uniform(-1, 1), [(0.5, 0.5), (1.0, 1.0), (1.5, 1.5)],
        PathConfig(dt=1e-3, max_steps=400_000, n_samples=100_000, master_seed=67))
    st0 = submartingale_statistic(out, "one")
    mart_ok = abs(st0.estimate) <= 3.0 * st0.stderr
    ok = ok and mart_ok
    rows.append(f"mu0 martingale: {st0.estimate:+.5f} (3se {3 * st0.stderr:.5f})")

    elapsed = time.perf_counter() - t0
    report(6, ok, elapsed, 600.0, "mixture submartingale statistic >= -3se for "
           "all 5 test functions; constant-mean family within +-3se of 0",
           "; ".join(rows))
    assert ok, rows
    check_budget(elapsed, 600.0)


# ---------------------------------------------------------------------------
# 7. double-barrier exit law matches the censored family (W1 < 0.01)
# ---------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_7_double_barrier_marginal():
    t0 = time.perf_counter()
    nu = Measure.uniform(-1.0, 1.0)
    split = nonmrl_eps(nu, 0.0, 0.0)
    out = double_barrier_martingale(nu, [(1.0, 1.0), (2.0, 1.0)],
                                    PathConfig(dt=1e-3, max_steps=400_000,
                                               n_samples=100_000, master_seed=77))
    rows = []
    worst = 0.0
    for k, (t, tp) in enumerate(out.chain):
        tgt = split.full.measure_at(t, tp)
        okm = ~out.exhausted[:, k]
        w1 = w1_distance(EmpiricalLaw.from_samples(out.values[okm, k]), tgt)
        worst = max(worst, w1)
        rows.append(f"({t},{tp}): W1={w1:.5f}")
    elapsed = time.perf_counter() - t0
    ok = worst < 0.01
    report(7, ok, elapsed, 120.0, "double-barrier exit laws match the "
           "closed-form family (W1 < 0.01, N=1e5)", "; ".join(rows))
    assert ok, rows
    check_budget(elapsed, 120.0)


# ---------------------------------------------------------------------------
# 8. the non-MRL witness (as stated: expected to fail -- see module docstring)
# ---------------------------------------------------------------------------

@pytest.mark.xfail(strict=True, reason=(
    "spec defect: at t'=1 the plateau of the Hardy-Littlewood function is "
    "(t' C(-t) + t C(t'))/(C(-t) - C(t')) with C(t') = C_nu(1) = 0 for "
    "nu = uniform[-1,1], hence equal to 1 for every t; the family is "
    "MRL-ordered between (1,1) and (2,1), so no probe x in (-1,1) can "
    "witness a failure (see the decisions ledger)"))
def test_criterion_8_nonmrl_witness_as_stated():
    t0 = time.perf_counter()
    split = nonmrl_eps(Measure.uniform(-1.0, 1.0), 0.0, 0.0)
    grid = np.linspace(-1.0 + 1e-6, 1.0 - 1e-6, 41)
    mrl = mrl_compare(split.full.measure_at(1, 1), split.full.measure_at(2, 1), grid)
    icx = icx_compare(split.full.measure_at(1, 1), split.full.measure_at(2, 1),
                      np.linspace(-3, 3, 41))
    elapsed = time.perf_counter() - t0
    ok = (not mrl.holds) and icx.holds
    report(8, ok, elapsed, 1.0, "nonmrl(uniform[-1,1],0,0) fails MRL between "
           "(1,1) and (2,1) at probe x in (-1,1) while icx holds",
           f"mrl holds={mrl.holds} (unattainable as stated), icx holds={icx.holds}")
    assert ok
    check_budget(elapsed, 1.0)


def test_criterion_8_companion_witness_inside_support():
    # the paper's derivative argument needs the upper level strictly inside
    # the support: at t' = 0.5 the plateau decreases in t and the witness
    # appears, while increasing convex dominance still holds along the chain
    t0 = time.perf_counter()
    split = nonmrl_eps(Measure.uniform(-1.0, 1.0), 0.0, 0.0)
    grid = np.linspace(-1.0 + 1e-6, 1.0 - 1e-6, 41)
    m1 = split.full.measure_at(1, 0.5)
    m2 = split.full.measure_at(2, 0.5)
    mrl = mrl_compare(m1, m2, grid)
    icx = icx_compare(m1, m2, np.linspace(-3, 3, 41))
    elapsed = time.perf_counter() - t0
    ok = (not mrl.holds) and icx.holds and -1 < mrl.witness_points[0] < 1
    report(8, ok, elapsed, 1.0, "companion witness at t'=0.5: MRL fails inside "
           "(-1,1), icx holds",
           f"witness x = {mrl.witness_points[0]:.3f}, gap = {mrl.worst:.3e}")
    assert ok
    check_budget(elapsed, 1.0)


# ---------------------------------------------------------------------------
# 9. byte-identical reruns independent of worker count
# ---------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_9_determinism(tmp_path):
    import json
    from peacock2.cli import main
    t0 = time.perf_counter()
    spec = tmp_path / "fam.json"
    spec.write_text(json.dumps({"family": "diatomic", "eps": 0.5, "r": 0.0}))
    chain = tmp_path / "chain.json"
    chain.write_text(json.dumps({"points": [[1, 1], [2, 2]]}))
    blobs = []
    for run, workers in enumerate(("1", "2", "2")):
        out = tmp_path / f"run{run}.csv"
        code = main(["embed", "--family", str(spec), "--chain", str(chain),
                     "--n", "2000", "--dt", "1e-3", "--seed", "42",
                     "--max-steps", "200000", "--max-exhausted-frac", "0.05",
                     "--workers", workers, "--out", str(out)])
        assert code == 0
        blobs.append(out.read_bytes())
    elapsed = time.perf_counter() - t0
    ok = blobs[0] == blobs[1] == blobs[2]
    report(9, ok, elapsed, 60.0, "embed CSV bytes identical across reruns and "
           "worker counts", f"{len(blobs[0])} bytes")
    assert ok
    check_budget(elapsed, 60.0)
