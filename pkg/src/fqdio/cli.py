"""Command-line front end: ``fqdio <subcommand> [flags]``.

Exit codes: 0 success, 2 configuration error, 3 precision or budget error.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import sys

from .algebra import LaurentNum
from .diophantine import (count_solutions, count_solutions_directional, expected_count,
                          measure_E, measure_E_directional, measure_F, precision_needed)
from .errors import (BudgetExceeded, ConfigError, FqdioError, InsufficientPrecision,
                     InvalidWeights)
from .experiments import (ExperimentConfig, MPoly, exhaustive_average, good_function_check,
                          grid_measure_oracle, run_count_experiment, run_orbit_experiment)
from .regions import Cylinder, RegionSpec
from .report import emit_aggregate, emit_report, format_exact
from .weights import Weights

_KEYS = {
    "q": int, "weights": str, "r": int, "t": int, "t_range": str, "n": int, "n0": int,
    "trials": int, "depth": int, "seed": int, "master_seed": int, "observable": str,
    "region": str, "cylinders": str, "budget": int, "out": str, "format": str,
    "workers": int, "kind": str, "force_zero": str,
}


def parse_range(text: str) -> tuple:
    """``4..12`` or ``1,2,5``."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..")
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(x) for x in text.split(",") if x.strip())


def parse_cylinders(texts, w: Weights) -> tuple:
    out = []
    for t in texts:
        side = "alpha" if "side=alpha" in t else "beta"
        out.append(Cylinder.parse(t, w.m if side == "alpha" else w.n))
    return tuple(out)


def _raw_items(text: str) -> dict:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    body = text if text.lstrip().startswith("[") else "[experiment]\n" + text
    try:
        cp.read_string(body)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    items = {}
    for sec in cp.sections():
        items.update(cp.items(sec))
    return items


def build_config(items: dict) -> ExperimentConfig:
    """Validated config from a key -> string mapping (keys are case-insensitive)."""
    vals = {}
    for key, raw in items.items():
        k = key.strip().lower()
        if k not in _KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        if raw is None:
            continue
        try:
            vals[k] = _KEYS[k](raw) if _KEYS[k] is not str else str(raw).strip()
        except ValueError:
            raise ConfigError(f"bad value {raw!r} for {key!r}") from None
    for req in ("q", "weights"):
        if req not in vals:
            raise ConfigError(f"missing required key {req!r}")
    w = Weights.parse(vals["weights"])
    kw = dict(q=vals["q"], weights=w)
    simple = {"r": "R", "t": "T", "n": "N", "n0": "N0", "trials": "trials", "depth": "depth",
              "observable": "observable", "region": "region", "budget": "budget", "out": "out",
              "format": "format", "workers": "workers", "kind": "kind"}
    for k, name in simple.items():
        if k in vals:
            kw[name] = vals[k]
    if "seed" in vals or "master_seed" in vals:
        kw["master_seed"] = vals.get("seed", vals.get("master_seed"))
    if "t_range" in vals:
        kw["T_values"] = parse_range(vals["t_range"])
    if "cylinders" in vals:
        kw["cylinders"] = parse_cylinders([c for c in vals["cylinders"].split("|") if c.strip()], w)
    if "force_zero" in vals:
        kw["force_zero"] = vals["force_zero"].lower() in ("1", "true", "yes")
    cfg = ExperimentConfig(**kw)
    if cfg.kind == "count" and cfg.T is None and not cfg.T_values:
        raise ConfigError("count experiments need T or t_range")
    if cfg.kind == "orbit" and cfg.T is None and cfg.observable.startswith("siegel:") \
            and cfg.observable.split(":")[1].lower() in ("e", "f", "edir"):
        raise ConfigError("this observable needs T")
    return cfg.validate()


def parse_config(text: str) -> ExperimentConfig:
    """Parse the ``key = value`` schema (optional ``[experiment]`` header)."""
    return build_config(_raw_items(text))


# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser):
    p.add_argument("--q", type=int)
    p.add_argument("--weights", help="m:n:a1,...,ad or a1,..;b1,..")
    p.add_argument("--R", type=int)
    p.add_argument("--T", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--depth", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--region")
    p.add_argument("--cylinder", action="append", default=[])
    p.add_argument("--budget", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fqdio", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("volume", help="measure_E / measure_F / directional with an oracle cross-check")
    _common(p)

    p = sub.add_parser("count", help="N_R(T, A) for one matrix or sampled trials")
    _common(p)
    p.add_argument("--A", help="matrix rows separated by '|', entries by ';'")
    p.add_argument("--method", choices=("kernel", "enumerate"), default="kernel")

    p = sub.add_parser("orbit", help="Birkhoff partial averages")
    _common(p)
    p.add_argument("--A")
    p.add_argument("--observable", default="siegel:E")

    p = sub.add_parser("experiment", help="seeded sweep from a config file")
    _common(p)
    p.add_argument("--config")
    p.add_argument("--kind", choices=("count", "orbit"))
    p.add_argument("--observable")
    p.add_argument("--t-range", dest="t_range")
    p.add_argument("--force-zero", dest="force_zero", action="store_true", default=None)

    p = sub.add_parser("goodcheck", help="sublevel-set ratios of a polynomial on a ball")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--poly", required=True, help="e.g. 'x1^2+t^-1*x2'")
    p.add_argument("--vars", type=int)
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--epsilons", help="comma-separated exponents e (eps = q^e)")
    p.add_argument("--center", help="entries separated by ';'")
    p.add_argument("--radius", type=int, default=0, help="ball radius exponent")
    p.add_argument("--non-strict", dest="strict", action="store_false")
    p.add_argument("--budget", type=int, default=1 << 22)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")

    p = sub.add_parser("oracle", help="grid measure or exhaustive average")
    _common(p)
    p.add_argument("--kind", choices=("grid", "exhaustive"), default="grid")
    p.add_argument("--method", choices=("batch", "literal"), default="batch")
    return ap


def _weights(args) -> Weights:
    if not args.weights:
        raise ConfigError("--weights is required")
    return Weights.parse(args.weights)


def _need(args, *names):
    for n in names:
        if getattr(args, n, None) is None:
            raise ConfigError(f"--{n} is required")


def _write(args, data: bytes):
    if getattr(args, "out", None):
        with open(args.out, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.write(data.decode("utf-8"))


def _emit_table(args, rows: list[dict]):
    if (args.format or "csv") == "json":
        doc = [{k: format_exact(v) for k, v in r.items()} for r in rows]
        _write(args, (json.dumps(doc, sort_keys=True, indent=1) + "\n").encode())
        return
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    if rows:
        wr.writerow(list(rows[0]))
    for r in rows:
        wr.writerow([format_exact(v) for v in r.values()])
    _write(args, buf.getvalue().encode())


def _matrix(text: str, w: Weights, q: int):
    rows = [r for r in text.split("|") if r.strip()]
    A = [[LaurentNum.parse(e, q) for e in r.split(";")] for r in rows]
    if len(A) != w.m or any(len(r) != w.n for r in A):
        raise ConfigError(f"A must be {w.m} x {w.n}")
    return A


def _cyls(args, w):
    cyl = parse_cylinders(args.cylinder, w)
    c1 = next((c for c in cyl if c.side == "alpha"), Cylinder.full("alpha"))
    c2 = next((c for c in cyl if c.side == "beta"), Cylinder.full("beta"))
    return cyl, c1, c2


def cmd_volume(args):
    _need(args, "q", "R", "T")
    w = _weights(args)
    cyl, c1, c2 = _cyls(args, w)
    q, R, T = args.q, args.R, args.T
    row = {"q": q, "weights": str(w), "R": R, "T": T,
           "measure_E": measure_E(q, w, R, T), "measure_F": measure_F(q, w, R, T)}
    region = RegionSpec.parse(f"E:T={T},R={R}", w)
    if cyl:
        row["measure_E_directional"] = measure_E_directional(q, w, R, T, c1, c2)
        region = RegionSpec.parse(f"EDir:T={T},R={R}", w, cylinders=cyl)
    try:
        g = grid_measure_oracle(region, args.depth or 12, q, args.budget or (1 << 22))
        row["oracle"] = g
        row["oracle_agrees"] = g == row.get("measure_E_directional", row["measure_E"])
    except (BudgetExceeded, InsufficientPrecision) as exc:
        row["oracle"] = f"skipped ({type(exc).__name__})"
    _emit_table(args, [row])


def cmd_count(args):
    _need(args, "q", "R", "T")
    w = _weights(args)
    cyl, c1, c2 = _cyls(args, w)
    if args.A:
        A = _matrix(args.A, w, args.q)
        if cyl:
            res = count_solutions_directional(A, w, args.R, args.T, c1, c2, args.depth,
                                              args.budget or (1 << 20))
        else:
            res = count_solutions(A, w, args.R, args.T, args.depth, method=args.method,
                                  budget=args.budget or (1 << 20))
        _emit_table(args, [{"count": res.count, "degenerate": res.degenerate,
                            "expected": expected_count(args.q, w, args.R, args.T),
                            "depth_used": res.depth_used}])
        return
    cfg = ExperimentConfig(q=args.q, weights=w, R=args.R, T=args.T, trials=args.trials or 1,
                           depth=args.depth, master_seed=args.seed or 0, cylinders=cyl,
                           budget=args.budget or (1 << 20), workers=args.workers or 1,
                           format=args.format or "csv")
    recs = run_count_experiment(cfg)
    _write(args, emit_report(recs, cfg.format, recs.aggregate if cfg.format == "json" else None))


def cmd_orbit(args):
    _need(args, "q", "N")
    w = _weights(args)
    cyl, _, _ = _cyls(args, w)
    cfg = ExperimentConfig(q=args.q, weights=w, R=args.R if args.R is not None else 0, T=args.T,
                           N=args.N, trials=args.trials or 1, depth=args.depth,
                           master_seed=args.seed or 0, observable=args.observable, cylinders=cyl,
                           budget=args.budget or (1 << 20), kind="orbit", format=args.format or "csv",
                           workers=args.workers or 1)
    if args.A:
        from .dynamics import birkhoff_series, parse_observable
        A = _matrix(args.A, w, args.q)
        obs = parse_observable(cfg.observable, w, cfg.T, cfg.R, cyl, cfg.budget)
        series = birkhoff_series(obs, A, w, cfg.N, args.depth)
        _emit_table(args, [{"N": k + 1, "average": v} for k, v in enumerate(series)])
        return
    recs = run_orbit_experiment(cfg)
    _write(args, emit_report(recs, cfg.format, recs.aggregate if cfg.format == "json" else None))


def cmd_experiment(args):
    items = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            items = _raw_items(fh.read())
    items = {k.lower(): v for k, v in items.items()}
    flags = {"q": args.q, "weights": args.weights, "r": args.R, "t": args.T, "n": args.N,
             "trials": args.trials, "depth": args.depth, "seed": args.seed, "region": args.region,
             "budget": args.budget, "workers": args.workers, "format": args.format, "out": args.out,
             "kind": args.kind, "observable": args.observable, "t_range": args.t_range,
             "force_zero": None if args.force_zero is None else "true"}
    if args.cylinder:
        flags["cylinders"] = "|".join(args.cylinder)
    for k, v in flags.items():
        if v is not None:
            items[k] = str(v)
    if "seed" in items and "master_seed" in items:
        items.pop("master_seed")
    cfg = build_config(items)
    run = run_orbit_experiment if cfg.kind == "orbit" else run_count_experiment
    recs = run(cfg)
    if cfg.format == "json":
        data = emit_report(recs, "json", recs.aggregate)
    else:
        data = emit_report(recs, "csv")
    if cfg.out:
        with open(cfg.out, "wb") as fh:
            fh.write(data)
        if cfg.format == "csv":
            with open(cfg.out + ".aggregate.json", "wb") as fh:
                fh.write(emit_aggregate(recs.aggregate))
    else:
        sys.stdout.write(data.decode("utf-8"))
        if cfg.format == "csv":
            sys.stderr.write(emit_aggregate(recs.aggregate).decode("utf-8"))


def cmd_goodcheck(args):
    f = MPoly.parse(args.poly, args.q, args.vars)
    ball = None
    if args.center is not None or args.radius:
        center = tuple(LaurentNum.parse(c, args.q) for c in args.center.split(";")) if args.center \
            else (LaurentNum.zero(args.q),) * f.r
        if len(center) != f.r:
            raise ConfigError(f"center needs {f.r} entries")
        ball = (center, args.radius)
    eps = [int(e) for e in args.epsilons.split(",")] if args.epsilons else None
    tab = good_function_check(f, ball, eps, args.depth, args.strict, args.budget)
    rows = [{"eps_exponent": r.eps_exponent, "ratio": r.ratio, "bound": r.bound, "ratio_over_bound": r.quotient}
            for r in tab.rows]
    _emit_table(args, rows)
    sys.stderr.write(f"sup_exponent={tab.sup_exponent} r={tab.r} s={tab.s} C={tab.C} slope={tab.slope}\n")


def cmd_oracle(args):
    _need(args, "q")
    w = _weights(args)
    if args.kind == "exhaustive":
        _need(args, "R", "T")
        avg = exhaustive_average(args.q, w, args.R, args.T, args.method, args.budget or (1 << 21))
        exp = expected_count(args.q, w, args.R, args.T)
        _emit_table(args, [{"average": avg, "expected_count": exp, "agrees": avg == exp,
                            "precision": precision_needed(w, args.R, args.T)}])
        return
    cyl, _, _ = _cyls(args, w)
    if args.region:
        region = RegionSpec.parse(args.region, w, cylinders=cyl)
    else:
        _need(args, "R", "T")
        region = RegionSpec.parse(f"E:T={args.T},R={args.R}", w)
    val = grid_measure_oracle(region, args.depth or 12, args.q, args.budget or (1 << 22))
    _emit_table(args, [{"region": str(region), "measure": val}])


COMMANDS = {"volume": cmd_volume, "count": cmd_count, "orbit": cmd_orbit,
            "experiment": cmd_experiment, "goodcheck": cmd_goodcheck, "oracle": cmd_oracle}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except (InsufficientPrecision, BudgetExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, InvalidWeights, ValueError, FqdioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
