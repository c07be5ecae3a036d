"""Command-line front end.

Every subcommand reads a JSON parameter file, runs one module operation and
writes a deterministic JSON report (sorted keys, no timestamps).  Timestamps
and paths go to a separate manifest so reports stay byte-identical across
runs with the same config and seed.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .cantor import BudgetExceeded as CantorBudget
from .cantor import CantorAddress
from .carleson import BudgetExceeded as SeriesBudget
from .carleson import SeriesError
from .exact import as_fraction, mirror
from .params import ConstructionError, ParamsError, load_params, params_hash, params_to_dict, validate_params

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return mirror(obj)
    if isinstance(obj, CantorAddress):
        return list(obj.path)
    if isinstance(obj, tuple):
        return [_jsonable(x) for x in obj]
    if hasattr(obj, "as_dict"):
        return obj.as_dict()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(report) -> str:
    return json.dumps(report, sort_keys=True, indent=2, default=_jsonable) + "\n"


def _path_arg(text: str) -> CantorAddress:
    text = text.strip()
    if not text:
        return CantorAddress(())
    return CantorAddress(tuple(int(x) for x in text.split(",")))


def _rational_arg(text: str) -> Fraction:
    try:
        return as_fraction(text)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not an exact rational: {text!r}") from exc


def _construction(args):
    from .construction import Construction

    p = load_params(args.config)
    return Construction(p, use_cache=not args.no_cache, C_override=getattr(args, "C", None))


# subcommands -------------------------------------------------------------------


def cmd_validate(args):
    p = load_params(args.config)
    rep = validate_params(p)
    report = {"params": params_to_dict(p), "params_hash": params_hash(p)} | rep.as_dict()
    return report, EXIT_OK if rep.ok else EXIT_CHECK


def cmd_build(args):
    c = _construction(args)
    s = c.series
    v = s.verify(c.system)
    ok = v["I"] and v["II"] and v["III"]
    return {
        "params_hash": c.hash,
        "depth": s.depth,
        "C": s.C,
        "cells": s.ncells,
        "cell_level": s.cell_level,
        "invariants": {k: v[k] for k in ("I", "II", "III", "taus_in_unit_interval")},
    }, EXIT_OK if ok else EXIT_CHECK


def cmd_measure(args):
    from .ternary import TernaryAddress

    c = _construction(args)
    mu = c.measure
    if args.action == "eval":
        if args.a is not None:
            a, b = args.a, args.b
            if b is None:
                raise ParamsError("measure eval needs --b with --a")
            return {"a": str(a), "b": str(b), "mu": mu.mu_interval(a, b)}, EXIT_OK
        addr = TernaryAddress.parse(args.address)
        mv = mu.mu_ternary(addr)
        return {"address": addr.text(), "theta": mv.theta, "mu": mv.value, "log3": mv.log3}, EXIT_OK
    return {"t": str(args.t), "f": mu.f(args.t)}, EXIT_OK


def cmd_carleson(args):
    c = _construction(args)
    if args.action == "verify":
        from .analysis import check_G2

        line = check_G2(c, samples=args.samples, seed=args.seed)
        return line.as_dict(), EXIT_OK if line.passed else EXIT_CHECK
    depth = args.depth if args.depth is not None else c.system.depth
    series = c.system.build_series(depth, args.C) if depth != c.system.depth else c.series
    v = series.verify(c.system)
    ok = v["I"] and v["II"] and v["III"]
    report = {
        "params_hash": c.hash,
        "depth": series.depth,
        "C": series.C,
        "invariants": v,
        "taus": {f"{k}:{j}": t for (k, j), t in sorted(series.taus.items())[: args.max_taus]},
    }
    return report, EXIT_OK if ok else EXIT_CHECK


def cmd_embed(args):
    from .analysis import sample_bounds
    from .embedding import EmbeddingPoint

    c = _construction(args)
    e = c.embedding
    if args.action == "eval":
        ys = tuple(_path_arg(p) for p in args.y_path)
        pt = EmbeddingPoint(args.x, ys)
        vals = e.F(pt, args.K)
        return {
            "x": str(pt.x),
            "y": [list(y.path) for y in ys],
            "point": e.coordinates(pt),
            "F": [v.as_dict() for v in vals],
        }, EXIT_OK
    upper, lower, vertical = sample_bounds(c, args.samples, args.seed)
    lines = [upper, lower, vertical]
    ok = all(ln.passed for ln in lines)
    return {"seed": args.seed, "checks": [ln.as_dict() for ln in lines]}, EXIT_OK if ok else EXIT_CHECK


def cmd_verify(args):
    from .analysis import run_suite

    c = _construction(args)
    suite = run_suite(c, samples=args.samples, seed=args.seed)
    for ln in suite.lines:
        print(ln.line(), file=sys.stderr)
    report = {"params_hash": c.hash, "seed": args.seed, "samples": args.samples} | suite.as_dict()
    if args.out:
        _write_csv(
            Path(args.out) / "verify_all.csv",
            ["name", "passed", "kind"],
            [[ln.name, ln.passed, ln.kind] for ln in suite.lines],
        )
    return report, EXIT_CHECK if suite.exact_failures or not suite.ok else EXIT_OK


def cmd_dimension(args):
    from . import dimension as dm

    c = _construction(args)
    p = c.params
    if args.action == "distribution":
        n = args.n
        dist = dm.density_distribution(c.index, p.exponents, n, p.alpha)
        report = {"n": n, "e": dist.e, "J_count": dist.J_count, "rows": dist.as_rows()}
        if 3**dist.e <= dm.ENUMERATION_LIMIT:
            report["enumeration_agrees"] = dm.enumerated_counts(c.index, dist.e) == dist.counts
        if args.out:
            _write_csv(
                Path(args.out) / f"distribution_n{n}.csv",
                ["k", "count", "lebesgue_mass"],
                [[k, dist.counts[k], float(dist.masses[k])] for k in range(dist.J_count + 1)],
            )
        ok = report.get("enumeration_agrees", True)
        return report, EXIT_OK if ok else EXIT_CHECK
    if args.action == "certify":
        M = args.M if args.M is not None else p.M
        eps = args.eps if args.eps is not None else p.epsilon
        n_range = range(args.n_min, (args.n_max if args.n_max is not None else p.depth) + 1)
        cert = dm.covering_certificate(
            c.index, p.exponents, c.levels, p.alpha, p.s.value, n_range, M, eps, p.d, c_mu=args.c_mu
        )
        if args.out:
            _write_csv(
                Path(args.out) / "covering.csv",
                ["n", "count", "coefficient", "power_of_3", "log3_sum"],
                [[r.n, r.good, r.coefficient, str(r.exponent), r.log3] for r in cert.rows],
            )
        return cert.as_dict(), EXIT_OK if cert.passed else EXIT_CHECK
    q2 = _path_arg(args.q2_path)
    depth = args.depth if args.depth is not None else c.levels.depth
    rep = dm.product_measure_ratio(c.levels, p.s.value, (args.q1_left, args.q1_right), q2, depth)
    rep["rows"] = [r.as_dict() for r in rep["rows"]]
    return rep, EXIT_OK if rep["bounded_by_4"] else EXIT_CHECK


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


# parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON parameter file")
    common.add_argument("--out", help="directory for the JSON/CSV reports and the run manifest")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1, help="worker cap (recorded; evaluation is sequential)")
    common.add_argument("--no-cache", action="store_true", help="rebuild the Carleson series instead of reading the cache")

    ap = argparse.ArgumentParser(prog="qsembed", description="Exact finite checks for a quasisymmetric embedding construction.")
    ap.add_argument("--version", action="version", version=f"qsembed {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", parents=[common], help="check the construction constraints")
    b = sub.add_parser("build", parents=[common], help="build (or load) the Carleson series")
    b.add_argument("--C", type=_rational_arg, default=None)

    m = sub.add_parser("measure", help="evaluate the Riesz-product measure")
    msub = m.add_subparsers(dest="action", required=True)
    me = msub.add_parser("eval", parents=[common])
    me.add_argument("--address", default="0.", help='ternary address such as "0.12"')
    me.add_argument("--a", type=_rational_arg)
    me.add_argument("--b", type=_rational_arg)
    mf = msub.add_parser("f", parents=[common])
    mf.add_argument("--t", type=_rational_arg, required=True)

    cb = sub.add_parser("carleson", help="Carleson coefficients and series")
    csub = cb.add_subparsers(dest="action", required=True)
    cbb = csub.add_parser("build", parents=[common])
    cbb.add_argument("--depth", type=int)
    cbb.add_argument("--C", type=_rational_arg, default=None)
    cbb.add_argument("--max-taus", type=int, default=50)
    cbv = csub.add_parser("verify", parents=[common])
    cbv.add_argument("--samples", type=int, default=10**4)

    em = sub.add_parser("embed", help="evaluate F and the comparison bounds")
    esub = em.add_subparsers(dest="action", required=True)
    ee = esub.add_parser("eval", parents=[common])
    ee.add_argument("--x", type=_rational_arg, required=True)
    ee.add_argument("--y-path", action="append", required=True, help="comma-separated Cantor path; repeat for d > 2")
    ee.add_argument("--K", type=int, default=None, help="truncation level (default: address depth)")
    eb = esub.add_parser("bounds", parents=[common])
    eb.add_argument("--samples", type=int, default=1000)

    vf = sub.add_parser("verify", help="consolidated check suite")
    vsub = vf.add_subparsers(dest="action", required=True)
    va = vsub.add_parser("all", parents=[common])
    va.add_argument("--samples", type=int, default=10**4)
    va.add_argument("--depth", type=int, default=None, help="accepted for symmetry; the config depth is used")

    dm = sub.add_parser("dimension", help="density distribution, covering sums, product ratio")
    dsub = dm.add_subparsers(dest="action", required=True)
    dd = dsub.add_parser("distribution", parents=[common])
    dd.add_argument("--n", type=int, required=True)
    dc = dsub.add_parser("certify", parents=[common])
    dc.add_argument("--eps", type=_rational_arg)
    dc.add_argument("--M", type=int)
    dc.add_argument("--n-min", type=int, default=1)
    dc.add_argument("--n-max", type=int)
    dc.add_argument("--c-mu", type=_rational_arg, default=Fraction(1))
    da = dsub.add_parser("appendix-a", parents=[common])
    da.add_argument("--q1-left", type=_rational_arg, default=Fraction(0))
    da.add_argument("--q1-right", type=_rational_arg, default=Fraction(1))
    da.add_argument("--q2-path", default="")
    da.add_argument("--depth", type=int)
    return ap


HANDLERS = {
    "validate": cmd_validate,
    "build": cmd_build,
    "measure": cmd_measure,
    "carleson": cmd_carleson,
    "embed": cmd_embed,
    "verify": cmd_verify,
    "dimension": cmd_dimension,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    try:
        report, code = HANDLERS[args.command](args)
    except (ParamsError, ConstructionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CantorBudget, SeriesBudget) as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except SeriesError as exc:
        print(f"series construction failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except (FileNotFoundError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = dumps(report)
    name = args.command + (f"_{args.action}" if getattr(args, "action", None) else "")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        report_path = out / f"{name}.json"
        report_path.write_text(text, encoding="utf-8")
        manifest = {
            "command": " ".join(sys.argv[1:]) if argv is None else " ".join(argv),
            "config": str(Path(args.config).resolve()),
            "params_hash": params_hash(load_params(args.config)),
            "seed": args.seed,
            "threads": args.threads,
            "outputs": sorted(str(p) for p in out.iterdir() if p.name != "manifest.json"),
            "started": started,
            "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "version": __version__,
            "exit_code": code,
        }
        (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
