"""Command-line entry point.

Subcommands wire JSON family/grid/chain specs to the library operations and
emit machine-readable CSV/JSON.  Exit codes: 0 = pass, 1 = a property or
tolerance check failed (the report still lands on disk/stdout), 2 = usage
or configuration error.  All CSV numbers use 17 significant digits so equal
runs diff byte-identically.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from .coxhobson import (EmbedError, PHI_LIBRARY, double_barrier_martingale,
                        embed_family, submartingale_statistic)
from .families import (FamilyError, c_field, default_xgrid, family_from_spec,
                       family_mrl_report)
from .measures import MeasureError
from .montecarlo import ConfigError, EmpiricalLaw, PathConfig, ks_distance, w1_distance
from .ordering import (GridError, PAIR_NAMES, det2_criterion, mtp2_check,
                       tp2_pair_check)
from . import pathsim

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

USER_ERRORS = (FamilyError, MeasureError, GridError, ConfigError, EmbedError,
               ValueError, KeyError, OSError, json.JSONDecodeError)


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _load_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _hash_file(path: str) -> str:
    return hashlib.sha256(open(path, "rb").read()).hexdigest()


def _manifest(args, inputs: list[str], outputs: list[str], t0: float) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    return {
        "command": args.command,
        "config": cfg,
        "seed": cfg.get("seed"),
        "input_hashes": {p: _hash_file(p) for p in inputs if p and os.path.exists(p)},
        "outputs": outputs,
        "wall_clock_s": round(time.time() - t0, 6),
        "backend": pathsim.backend_name(),
    }


def _emit(args, payload: dict, inputs: list[str], outputs: list[str], t0: float):
    payload["manifest"] = _manifest(args, inputs, outputs, t0)
    text = json.dumps(payload, indent=2, default=_jsonable)
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "to_json"):
        return obj.to_json()
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def _grid_from_spec(path: str | None, family, nx: int = 17):
    if path:
        spec = _load_json(path)
        unknown = set(spec) - {"t", "tprime", "x"}
        if unknown:
            raise GridError(f"unknown grid keys: {sorted(unknown)}")
        t = np.asarray(spec.get("t", (0.0, 0.25, 0.5, 1.0, 2.0, 4.0)), dtype=float)
        tp = np.asarray(spec.get("tprime", t), dtype=float)
        if "x" in spec:
            x = np.asarray(spec["x"], dtype=float)
        else:
            x = default_xgrid(family, t, tp, nx)
        return t, tp, x
    t = np.asarray((0.0, 0.25, 0.5, 1.0, 2.0, 4.0))
    return t, t, default_xgrid(family, t, t, nx)


def _chain_from_spec(path: str) -> list[tuple[float, float]]:
    spec = _load_json(path)
    if isinstance(spec, dict):
        unknown = set(spec) - {"points"}
        if unknown:
            raise GridError(f"unknown chain keys: {sorted(unknown)}")
        spec = spec["points"]
    return [(float(a), float(b)) for a, b in spec]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_family(args) -> int:
    t0 = time.time()
    fam = family_from_spec(_load_json(args.family))
    if args.at is not None:
        t, tp = (float(v) for v in args.at.split(","))
        m = fam.measure_at(t, tp)
        if args.curve:
            # single-measure functional as CSV rows (x, value)
            lo, hi, n = args.xrange.split(":") if args.xrange else (None,) * 3
            if lo is None:
                xs = np.linspace(m.lower_support() - 1, m.upper_support() + 1, 33)
            else:
                xs = np.linspace(float(lo), float(hi), int(n))
            fn = {"c": m.integrated_survival, "psi": m.hardy_littlewood,
                  "cdf": m.cdf}.get(args.curve)
            if fn is None:
                raise FamilyError(f"unknown curve {args.curve!r}; use c|psi|cdf")
            text = "x,value\n" + "\n".join(
                f"{fmt(x)},{fmt(fn(float(x)))}" for x in xs) + "\n"
            if args.out:
                with open(args.out, "w") as fh:
                    fh.write(text)
                with open(args.out + ".manifest.json", "w") as fh:
                    json.dump(_manifest(args, [args.family], [args.out], t0),
                              fh, indent=2)
            else:
                sys.stdout.write(text)
            return EXIT_PASS
        payload = {"family": fam.name, "at": [t, tp], "measure": m.to_json(),
                   "mean": m.mean(), "upper_support": m.upper_support()}
        _emit(args, payload, [args.family], [args.out] if args.out else [], t0)
        return EXIT_PASS
    # grid dump: CSV rows t, tprime, x, C
    tg, tpg, xg = _grid_from_spec(args.grid, fam)
    field = c_field(fam, tg, tpg, xg)
    lines = ["t,tprime,x,C"]
    for i, t in enumerate(tg):
        for j, tp in enumerate(tpg):
            for k, x in enumerate(xg):
                lines.append(",".join(fmt(v) for v in
                                      (t, tp, x, field.values[i, j, k])))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        manifest_path = args.out + ".manifest.json"
        with open(manifest_path, "w") as fh:
            json.dump(_manifest(args, [args.family, args.grid or ""],
                                [args.out], t0), fh, indent=2)
    else:
        sys.stdout.write(text)
    return EXIT_PASS


def cmd_check(args) -> int:
    t0 = time.time()
    spec = _load_json(args.family)
    tol = args.tol
    if spec.get("family") == "kemperman":
        unknown = set(spec) - {"family", "u", "v"}
        if unknown:
            raise FamilyError(f"unknown keys for kemperman: {sorted(unknown)}")
        from .families import kemperman_phi
        field = kemperman_phi(float(spec["u"]), float(spec["v"]))
        fam_name = "kemperman"
        fam = None
    else:
        fam = family_from_spec(spec)
        fam_name = fam.name
        field = None

    # the exhaustive lattice scan caps each axis at 12 points, so lattice
    # tests default to a 9-point x grid
    nx = 9 if args.test in ("mtp2", "crosscheck") else 17

    def get_field():
        nonlocal field
        if field is None:
            tg, tpg, xg = _grid_from_spec(args.grid, fam, nx)
            field = c_field(fam, tg, tpg, xg)
        return field

    test = args.test
    if test == "mrl":
        if fam is None:
            raise FamilyError("mrl check needs a measure family")
        tg, tpg, xg = _grid_from_spec(args.grid, fam)
        report = family_mrl_report(fam, tg, tpg, xg,
                                   tol if tol is not None else 1e-10)
    elif test == "det2":
        report = det2_criterion(get_field(), tol)
    elif test.startswith("tp2:"):
        pair = test[4:].replace("'", "prime")
        report = tp2_pair_check(get_field(), pair, tol)
    elif test == "mtp2":
        report = mtp2_check(get_field(), tol)
    elif test == "crosscheck":
        if fam is None:
            raise FamilyError("crosscheck needs a measure family")
        from .ordering import pairwise_implies_mtp2_crosscheck
        tg, tpg, xg = _grid_from_spec(args.grid, fam, nx)
        out = pairwise_implies_mtp2_crosscheck(fam, tg, tpg, xg, tol)
        payload = {
            "family": fam_name, "test": test,
            "pairwise": {k: r.to_json() for k, r in out["pairwise"].items()},
            "lattice": out["lattice"].to_json(),
            "implication_holds": out["implication_holds"],
        }
        ok = out["pairwise_holds"] and out["lattice"].holds
        _emit(args, payload, [args.family, args.grid or ""],
              [args.out] if args.out else [], t0)
        return EXIT_PASS if ok else EXIT_FAIL
    else:
        raise FamilyError(f"unknown test {test!r}; use "
                          f"mrl|det2|tp2:t,x|tp2:tprime,x|tp2:t,tprime|mtp2|crosscheck")
    payload = {"family": fam_name, "test": test, "report": report.to_json()}
    _emit(args, payload, [args.family, args.grid or ""],
          [args.out] if args.out else [], t0)
    if not report.holds and args.witness_csv and report.witness_points:
        with open(args.witness_csv, "w") as fh:
            fh.write("coordinate,value\n")
            for k, v in enumerate(report.witness_points):
                fh.write(f"w{k},{fmt(v)}\n")
    return EXIT_PASS if report.holds else EXIT_FAIL


def _write_samples_csv(path: str, result, manifest: dict):
    lines = ["sample_id,t,tprime,stopped_value,steps,running_max"]
    chain = result.chain
    n = result.values.shape[0]
    for i in range(n):
        for k, (t, tp) in enumerate(chain):
            lines.append(",".join([str(i), fmt(t), fmt(tp),
                                   fmt(result.values[i, k]),
                                   str(int(result.steps[i, k])),
                                   fmt(result.running_max[i, k])]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    with open(path + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)


def cmd_embed(args) -> int:
    t0 = time.time()
    fam = family_from_spec(_load_json(args.family))
    chain = _chain_from_spec(args.chain)
    cfg = PathConfig(dt=args.dt, max_steps=args.max_steps,
                     n_samples=args.n, master_seed=args.seed)
    workers = args.workers
    if fam.name == "nonmrl_full":
        raise FamilyError("the two-sided censored family is not MRL: embed its "
                          "eta/sigma parts or use the mixture construction")
    out = embed_family(fam, chain, cfg, m0=args.m0, margin=args.margin,
                       use_bridge=not args.no_bridge, workers=workers,
                       max_exhausted_frac=args.max_exhausted_frac)
    _write_samples_csv(args.out, out,
                       _manifest(args, [args.family, args.chain], [args.out], t0))
    return EXIT_PASS


def _read_samples_csv(path: str):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        want = ["sample_id", "t", "tprime", "stopped_value", "steps", "running_max"]
        if header != want:
            raise ConfigError(f"unexpected CSV header {header}")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    ids = np.array([int(r[0]) for r in rows])
    pts = [(float(r[1]), float(r[2])) for r in rows]
    vals = np.array([float(r[3]) for r in rows])
    steps = np.array([int(r[4]) for r in rows])
    chain = sorted(set(pts))
    n = ids.max() + 1 if ids.size else 0
    values = np.full((n, len(chain)), np.nan)
    stepm = np.zeros((n, len(chain)), dtype=np.int64)
    index = {p: k for k, p in enumerate(chain)}
    for i, p, v, st in zip(ids, pts, vals, steps):
        values[i, index[p]] = v
        stepm[i, index[p]] = st
    return chain, values, stepm


def cmd_verify(args) -> int:
    t0 = time.time()
    fam = family_from_spec(_load_json(args.family))
    chain, values, _ = _read_samples_csv(args.samples)
    per_point = []
    worst_ks = worst_w1 = 0.0
    for k, (t, tp) in enumerate(chain):
        target = fam.measure_at(t, tp)
        emp = EmpiricalLaw.from_samples(values[:, k][~np.isnan(values[:, k])])
        ks = ks_distance(emp, target)
        w1 = w1_distance(emp, target)
        per_point.append({"t": t, "tprime": tp, "n": emp.n, "ks": ks, "w1": w1,
                          "mean_err": float(emp.values.mean() - target.mean())})
        worst_ks, worst_w1 = max(worst_ks, ks), max(worst_w1, w1)
    stats = []
    if len(chain) >= 2 and values.shape[0]:
        for phi in PHI_LIBRARY:
            st = submartingale_statistic(values[~np.isnan(values).any(axis=1)], phi)
            stats.append({"phi": phi, "estimate": st.estimate, "stderr": st.stderr,
                          "ok": not st.significantly_negative})
    ok = True
    if args.ks_tol is not None and worst_ks > args.ks_tol:
        ok = False
    if args.w1_tol is not None and worst_w1 > args.w1_tol:
        ok = False
    if any(not s["ok"] for s in stats):
        ok = False
    payload = {"family": fam.name, "points": per_point,
               "submartingale": stats, "pass": ok}
    _emit(args, payload, [args.family, args.samples],
          [args.out] if args.out else [], t0)
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_stats(args) -> int:
    t0 = time.time()
    fam = family_from_spec(_load_json(args.family))
    chain, values, _ = _read_samples_csv(args.samples)
    rows = []
    for k, (t, tp) in enumerate(chain):
        target = fam.measure_at(t, tp)
        emp = EmpiricalLaw.from_samples(values[:, k][~np.isnan(values[:, k])])
        rows.append({"t": t, "tprime": tp, "n": emp.n,
                     "ks": ks_distance(emp, target),
                     "w1": w1_distance(emp, target)})
    _emit(args, {"family": fam.name, "points": rows},
          [args.family, args.samples], [args.out] if args.out else [], t0)
    return EXIT_PASS


def cmd_report(args) -> int:
    t0 = time.time()
    fam = family_from_spec(_load_json(args.family))
    tg, tpg, xg = _grid_from_spec(args.grid, fam)
    field = c_field(fam, tg, tpg, xg)
    small = tuple(tg[:6]), tuple(tpg[:6]), tuple(xg[:: max(len(xg) // 8, 1)])
    small_field = c_field(fam, *small)
    dossier = {
        "family": fam.name,
        "params": {k: v for k, v in fam.params.items() if k != "nu"},
        "claims": fam.claims,
        "mrl": family_mrl_report(fam, tg, tpg, xg).to_json(),
        "det2": det2_criterion(field).to_json(),
        "tp2": {p: tp2_pair_check(field, p).to_json() for p in PAIR_NAMES},
        "mtp2": mtp2_check(small_field).to_json(),
    }
    if args.n > 0:
        cfg = PathConfig(dt=args.dt, max_steps=args.max_steps, n_samples=args.n,
                         master_seed=args.seed)
        chain = [(float(tg[1]), float(tpg[1])), (float(tg[-1]), float(tpg[-1]))]
        out = embed_family(fam, chain, cfg, margin=args.margin,
                           max_exhausted_frac=1.0)
        emb = []
        for k, (t, tp) in enumerate(out.chain):
            emp = EmpiricalLaw.from_samples(out.values[~out.exhausted[:, k], k])
            emb.append({"t": t, "tprime": tp,
                        "ks": ks_distance(emp, fam.measure_at(t, tp)),
                        "exhausted": int(out.exhausted[:, k].sum())})
        dossier["embedding"] = emb
    # claimed properties are the pass criteria for the dossier
    ok = True
    if fam.claims.get("is_mrl") and dossier["mrl"]["verdict"] != "holds":
        ok = False
    if fam.claims.get("is_mtp2") and dossier["mtp2"]["verdict"] != "holds":
        ok = False
    dossier["pass"] = ok
    _emit(args, dossier, [args.family, args.grid or ""],
          [args.out] if args.out else [], t0)
    return EXIT_PASS if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="peacock2",
        description="Two-parameter MRL process families: total-positivity "
                    "checks and Brownian embedding simulation.")
    sub = p.add_subparsers(dest="command", required=True)

    fam = sub.add_parser("family", help="evaluate a family or dump its C field")
    fam.add_argument("--family", required=True, help="family spec JSON")
    fam.add_argument("--at", help="evaluate the measure at 't,tprime'")
    fam.add_argument("--curve", help="with --at: dump (x,value) CSV of c|psi|cdf")
    fam.add_argument("--xrange", help="with --curve: evaluation grid 'lo:hi:n'")
    fam.add_argument("--grid", help="grid spec JSON for the C-field dump")
    fam.add_argument("--out", help="output path (JSON for --at, CSV otherwise)")
    fam.set_defaults(func=cmd_family)

    chk = sub.add_parser("check", help="run an ordering / total-positivity test")
    chk.add_argument("--family", required=True)
    chk.add_argument("--test", required=True,
                     help="mrl|det2|tp2:t,x|tp2:tprime,x|tp2:t,tprime|mtp2|crosscheck")
    chk.add_argument("--grid", help="grid spec JSON")
    chk.add_argument("--tol", type=float, default=None)
    chk.add_argument("--out", help="JSON report path")
    chk.add_argument("--witness-csv", help="CSV dump of the failing witness")
    chk.set_defaults(func=cmd_check)

    emb = sub.add_parser("embed", help="coupled Monte Carlo embedding of a chain")
    emb.add_argument("--family", required=True)
    emb.add_argument("--chain", required=True, help="chain spec JSON")
    emb.add_argument("--n", type=int, default=100_000)
    emb.add_argument("--dt", type=float, default=1e-4)
    emb.add_argument("--seed", type=int, default=42)
    emb.add_argument("--max-steps", type=int, default=10_000_000)
    emb.add_argument("--m0", type=float, default=None)
    emb.add_argument("--margin", type=float, default=1e-3)
    emb.add_argument("--max-exhausted-frac", type=float, default=1e-4)
    emb.add_argument("--no-bridge", action="store_true",
                     help="disable the bridge-maximum correction (naive stepping)")
    emb.add_argument("--workers", type=int, default=None,
                     help="worker threads (default: PEACOCK_WORKERS or cpu count)")
    emb.add_argument("--out", required=True, help="samples CSV path")
    emb.set_defaults(func=cmd_embed)

    ver = sub.add_parser("verify", help="distances + submartingale stats for samples")
    ver.add_argument("--samples", required=True)
    ver.add_argument("--family", required=True)
    ver.add_argument("--ks-tol", type=float, default=None)
    ver.add_argument("--w1-tol", type=float, default=None)
    ver.add_argument("--out")
    ver.set_defaults(func=cmd_verify)

    st = sub.add_parser("stats", help="KS/W1 distances from a samples CSV")
    st.add_argument("--samples", required=True)
    st.add_argument("--family", required=True)
    st.add_argument("--out")
    st.set_defaults(func=cmd_stats)

    rep = sub.add_parser("report", help="full dossier: ordering verdicts (+ embedding)")
    rep.add_argument("--family", required=True)
    rep.add_argument("--grid")
    rep.add_argument("--n", type=int, default=0, help="embedding sample count (0 = skip)")
    rep.add_argument("--dt", type=float, default=1e-3)
    rep.add_argument("--seed", type=int, default=42)
    rep.add_argument("--max-steps", type=int, default=1_000_000)
    rep.add_argument("--margin", type=float, default=1e-3)
    rep.add_argument("--out")
    rep.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses its own exit codes
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
