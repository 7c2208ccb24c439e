"""Command-line front end: reproducible runs with machine-readable reports.

Every subcommand emits one JSON report (stdout, or ``--out FILE``) whose
numeric results carry provenance ("exact", "quadrature(tol)", or
"mc(samples, seed)").  Series-shaped results additionally export CSV plot
data with ``--csv FILE``.  Exit codes: 0 all checks of the invocation hold
(warnings allowed), 2 some assertion failed, 1 usage or configuration error.

``--stamp off`` removes the timestamp so identical configurations and seeds
produce byte-identical reports.  A relative ``--out`` path is resolved under
``$OUTPUT_DIR`` when that variable is set (the only environment knob).
"""

import argparse
import configparser
import csv
import io
import json
import math
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .checks import (exhaustion_estimate, exhaustion_residual,
                     majorant_violations, non_integrability_table,
                     pointwise_unboundedness_probe, witness_unboundedness)
from .errors import SingridError
from .fields import BumpField, BumpSum
from .gamma import (check_growth_conditions, check_sequence_conditions,
                    model_family, sandwich_violation_search)
from .geometry import (Domain, domain_measure, enumerate_nodes, load_domain,
                       minimal_grid_index, rational, unit_ball_constants,
                       unit_cube)
from .integrals import field_integral, open_cube, sum_field_integral
from .mc import DEFAULT_SEED, mc_integrate
from .profiles import builtin_profile, log_power_transform, loglog_profile, power_transform
from .verify import VerifyConfig, run_battery

BASE_INDEX_NOTE = ("base index is the least m certifying admissible nodes on "
                   "every finer grid; stacked fields depend on this choice")


# ---------------------------------------------------------------------------
# provenance-tagged numbers


def exact(value):
    return {"value": float(value), "provenance": "exact"}


def quad(value, tol):
    return {"value": float(value), "provenance": f"quadrature(tol={tol:g})"}


def mc(est):
    return {"value": est.value, "provenance":
            f"mc(samples={est.samples}, seed={est.seed})",
            "half_width": est.half_width}


# ---------------------------------------------------------------------------
# config files: flat key = value pairs under a [singrid] section


CONFIG_SECTION = "singrid"
CONFIG_KEYS = ("domain", "sigma", "n", "t", "t_max", "s_max", "k", "c", "lam",
               "p", "samples", "x_samples", "seed", "tol", "stamp", "out_dir")


def parse_config(text: str) -> dict:
    parser = configparser.ConfigParser()
    parser.read_string(text)
    if CONFIG_SECTION not in parser:
        raise ValueError(f"config needs a [{CONFIG_SECTION}] section")
    out = {}
    for key, value in parser[CONFIG_SECTION].items():
        if key not in CONFIG_KEYS:
            raise ValueError(f"unknown config key {key!r}")
        out[key] = value
    return out


def format_config(cfg: dict) -> str:
    parser = configparser.ConfigParser()
    parser[CONFIG_SECTION] = {k: str(v) for k, v in cfg.items()}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# shared plumbing


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="config file with [singrid] defaults")
    p.add_argument("--domain", help="domain file (default: unit cube of --n)")
    p.add_argument("--n", type=int, default=2, help="dimension (default 2)")
    p.add_argument("--sigma", default="sigma1",
                   help="profile: sigma1 | loglog | file:PATH")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--csv", help="write CSV plot data here, when applicable")
    p.add_argument("--stamp", choices=("on", "off"), default="on",
                   help="off drops the timestamp for byte-identical reports")


def _resolve(args):
    dom = load_domain(args.domain) if args.domain else unit_cube(args.n)
    if dom.dim != args.n and args.domain:
        args.n = dom.dim
    profile = builtin_profile(args.sigma, args.n)
    m = minimal_grid_index(dom)
    return dom, profile, m


def _out_path(path):
    if path and not os.path.isabs(path) and os.environ.get("OUTPUT_DIR"):
        return os.path.join(os.environ["OUTPUT_DIR"], path)
    return path


def _emit(args, command, results, passed=None, warnings=(), series=None):
    report = {
        "command": command,
        "artifact": {"name": "singrid", "version": __version__},
        "config": {k: v for k, v in sorted(vars(args).items())
                   if k not in ("func", "config") and v is not None},
        "provenance": {
            "seed": args.seed,
            "profile": args.sigma,
            "base_index_policy": BASE_INDEX_NOTE,
        },
        "results": results,
    }
    if passed is not None:
        report["passed"] = passed
    if warnings:
        report["warnings"] = list(warnings)
    if args.stamp == "on":
        report["timestamp"] = datetime.now(timezone.utc).isoformat()
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    out = _out_path(args.out)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.csv and series:
        with open(_out_path(args.csv), "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            for row in series:
                writer.writerow(row)
    if passed is False:
        return 2
    return 0


def _parse_points(spec):
    if spec.startswith("@"):
        with open(spec[1:], "r", encoding="utf-8") as fh:
            rows = [line.strip() for line in fh if line.strip()]
    else:
        rows = [r for r in spec.split(";") if r.strip()]
    return [tuple(rational(tok) for tok in row.replace(",", " ").split())
            for row in rows]


# ---------------------------------------------------------------------------
# subcommands


def cmd_nodes(args):
    dom, _, m = _resolve(args)
    nodes = enumerate_nodes(dom, args.t)
    results = {
        "t": args.t,
        "count": nodes.count,
        "base_index": m,
        "measure": exact(domain_measure(dom)),
    }
    if nodes.count <= args.list_limit:
        results["nodes"] = [[str(c) for c in node.coords]
                            for node in nodes.nodes]
    return _emit(args, "nodes", results)


def cmd_constants(args):
    c = unit_ball_constants(args.n)
    return _emit(args, "constants", {
        "n": args.n,
        "ball_volume": exact(c.volume),
        "sphere_surface": exact(c.surface),
        "cube_fraction": exact(c.cube_fraction),
    })


def _build_field(args, dom, profile, m):
    if args.field == "nu":
        return BumpField(profile, dom, args.t, m=m)
    if args.field == "mu":
        return BumpSum(profile, dom, args.t, m=m)
    raise ValueError("field must be nu or mu")


def cmd_eval(args):
    dom, profile, m = _resolve(args)
    field = _build_field(args, dom, profile, m)
    points = _parse_points(args.points)
    rows = [tuple([float(c) for c in pt]) for pt in points]
    values = [field.value_at(pt) for pt in points]
    series = [[*(f"{c!r}" for c in row), v.value, "singular" if v.singular else ""]
              for row, v in zip(rows, values)]
    writer = csv.writer(sys.stdout)
    header = [f"x{i}" for i in range(dom.dim)] + ["value", "flags"]
    writer.writerow(header)
    for row in series:
        writer.writerow(row)
    if args.out:
        return _emit(args, "eval", {
            "field": args.field, "t": args.t, "base_index": m,
            "points": [{"x": list(map(float, r)), "value": v.value,
                        "singular": v.singular}
                       for r, v in zip(rows, values)],
        }, series=[header] + series)
    return 0


def cmd_integrate(args):
    dom, profile, m = _resolve(args)
    field = _build_field(args, dom, profile, m)
    results = {"field": args.field, "t": args.t, "base_index": m}
    if args.method in ("exact", "both"):
        if args.field == "nu":
            results["exact"] = quad(field_integral(field, tol=args.tol), args.tol)
        else:
            results["exact"] = quad(sum_field_integral(field, tol=args.tol), args.tol)
    if args.method in ("mc", "both"):
        est = mc_integrate(field, dom, args.samples, seed=args.seed)
        results["mc"] = mc(est)
    passed = None
    if args.method == "both":
        passed = bool(abs(results["mc"]["value"] - results["exact"]["value"])
                      <= results["mc"]["half_width"])
        results["oracle_contains_exact"] = passed
    return _emit(args, "integrate", results, passed=passed)


def cmd_witness(args):
    dom, profile, m = _resolve(args)
    center = tuple(rational(tok) for tok in args.center.replace(",", " ").split())
    rep = witness_unboundedness(profile, dom, center, rational(args.radius),
                                args.c, samples=args.samples, seed=args.seed,
                                m=m)
    return _emit(args, "witness", {
        "c": rep.target_c,
        "l": rep.l,
        "node": [str(c) for c in rep.node.coords],
        "delta": rep.delta,
        "region_radius": rep.region_radius,
        "sampled_min": mc_like(rep.sampled_min, rep.samples, rep.seed),
        "verified": rep.verified,
    }, passed=rep.verified)


def mc_like(value, samples, seed):
    return {"value": value, "provenance": f"mc(samples={samples}, seed={seed})"}


def cmd_exhaustion(args):
    dom, _, m = _resolve(args)
    rep = exhaustion_estimate(dom, args.k, range(1, args.t_max + 1),
                              samples=args.samples, seed=args.seed, m=m,
                              slack=args.slack)
    series = [["t", "estimate", "half_width"]]
    series += [[t, e.value, e.half_width]
               for t, e in zip(rep.t_values, rep.estimates)]
    return _emit(args, "exhaustion", {
        "k": args.k,
        "bound": exact(rep.bound),
        "slack": rep.slack,
        "satisfied_from": rep.satisfied_from,
        "estimates": [mc(e) for e in rep.estimates],
    }, series=series)


def cmd_residual(args):
    dom, _, m = _resolve(args)
    rep = exhaustion_residual(dom, args.k, args.t_max, samples=args.samples,
                              seed=args.seed, m=m,
                              decay_at=range(1, args.t_max + 1))
    series = [["t_max", "residual"]] + [[t, r] for t, r in rep.decay]
    return _emit(args, "residual", {
        "k": args.k,
        "t_max": args.t_max,
        "final": mc(rep.final),
        "decay": [[t, r] for t, r in rep.decay],
    }, series=series)


def cmd_probe(args):
    dom, profile, m = _resolve(args)
    rungs = [float(r) for r in args.rungs.split(",")]
    rep = pointwise_unboundedness_probe(profile, dom, args.x_samples,
                                        args.t_max, rungs, seed=args.seed, m=m)
    series = [["T"] + [f"rung_{r:g}" for r in rep.rungs]]
    for i, t in enumerate(rep.t_values):
        series.append([t] + [rep.fractions[r][i] for r in rep.rungs])
    monotone = all(
        all(a <= b for a, b in zip(rep.fractions[r], rep.fractions[r][1:]))
        for r in rep.rungs)
    return _emit(args, "probe", {
        "rungs": list(rep.rungs),
        "final_fractions": {f"{r:g}": rep.fractions[r][-1] for r in rep.rungs},
        "monotone": monotone,
        "samples": rep.samples,
        "note": "fractions are finite-horizon evidence of pointwise blow-up",
    }, passed=monotone, series=series)


def cmd_majorant(args):
    dom, profile, m = _resolve(args)
    if args.psi.startswith("const:"):
        level = float(args.psi[6:])
        psi = lambda pts: np.full(len(pts), level)  # noqa: E731
    elif args.psi.startswith("max:"):
        horizon = int(args.psi[4:])
        fields = [BumpField(profile, dom, m + t, m=m)
                  for t in range(1, horizon + 1)]

        def psi(pts):
            best = np.zeros(len(pts))
            for f in fields:
                vals, _ = f.batch(pts)
                best = np.maximum(best, vals)
            return best
    else:
        raise ValueError("psi must be const:VALUE or max:HORIZON")
    rep = majorant_violations(profile, dom, psi, args.x_samples, args.t_max,
                              seed=args.seed, m=m)
    series = [["t", "violation_fraction"]]
    series += [[t + 1, fr] for t, fr in enumerate(rep.per_t_fraction)]
    return _emit(args, "majorant", {
        "candidate": args.psi,
        "first_t": rep.first_t,
        "total_fraction": rep.total_fraction,
        "examples": [list(e) for e in rep.examples],
        "note": ("no violations at this horizon" if rep.first_t is None
                 else "candidate pierced; no fixed ceiling survives"),
    }, series=series)


def cmd_nonllambda(args):
    dom, profile, m = _resolve(args)
    transform = (log_power_transform(args.lam) if args.form == "log"
                 else power_transform(args.lam))
    ladder = [2.0 ** -j for j in range(10, args.depth + 1, 10)]
    rep = non_integrability_table(profile, transform, args.n, m, ladder,
                                  dom=dom, domination_lam=max(args.lam, 2.0),
                                  seed=args.seed)
    series = [["eps", "shell_integral"]]
    series += [[e, v] for e, v in zip(rep.eps_ladder, rep.shell_values)]
    return _emit(args, "nonllambda", {
        "transform": rep.transform,
        "ladder": [[e, v] for e, v in zip(rep.eps_ladder, rep.shell_values)],
        "increments": list(rep.increments),
        "radial_verdict": rep.radial_verdict,
        "domination_fraction": rep.domination_fraction,
    }, series=series)


def cmd_gamma_check(args):
    dom, profile, m = _resolve(args)
    family = model_family(profile, dom, p=args.p, m=m)
    lams = [float(v) for v in args.lambda_ladder.split(",")]
    growth = check_growth_conditions(family, range(1, 6), 1024, 4096,
                                     seed=args.seed)
    if args.cubes:
        cubes = []
        for spec in args.cubes.split(";"):
            center_part, side = spec.rsplit("@", 1)
            center = [rational(tok) for tok in center_part.replace(",", " ").split()]
            cubes.append(open_cube(center, rational(side)))
    else:
        widest = max(dom.boxes, key=lambda b: min(b.sides))
        center = tuple((a + b) / 2 for a, b in zip(widest.lo, widest.hi))
        cubes = [open_cube(center, min(widest.sides) / 2)]
    seq = check_sequence_conditions(profile, dom, cubes, args.s_max, m=m,
                                    seed=args.seed)
    probes = sandwich_violation_search(family, lams, range(1, args.s_max + 1),
                                       seed=args.seed)
    passed = growth.ok and seq.ok
    return _emit(args, "gamma-check", {
        "p": args.p,
        "growth": {
            "measurability": growth.measurability_note,
            "convexity_violations": growth.convexity_violations,
            "bound_violations": growth.bound_violations,
        },
        "sequence": {
            "nonnegativity": seq.nonnegativity,
            "l1_bounds_ok": seq.l1_bounds_ok,
            "cubes": list(seq.cube_results),
        },
        "pinching": [{
            "lam": p.lam, "bound": p.derived_bound, "first_s": p.first_s,
            "hits": len(p.hits),
            "note": ("witness found" if p.first_s is not None
                     else "not found at this horizon"),
        } for p in probes],
    }, passed=passed)


def cmd_verify_all(args):
    dom, profile, m = _resolve(args)
    cfg = VerifyConfig(domain=dom, profile=profile, n=args.n,
                       t_max=args.t_max, s_max=args.s_max,
                       samples=args.samples, x_samples=args.x_samples,
                       seed=args.seed, tol=args.tol,
                       bound_scale=args.debug_bound_scale)
    battery = run_battery(cfg)
    warnings = [f"check {i} reported insufficient horizon"
                for i in battery["warnings"]]
    return _emit(args, "verify-all", battery, passed=battery["passed"],
                 warnings=warnings)


# ---------------------------------------------------------------------------
# parser


def build_parser(defaults: dict | None = None) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="singrid",
        description="construct grid-singular fields and verify their properties")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    subparsers = []

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        _add_common(p)
        p.set_defaults(func=fn)
        subparsers.append(p)
        return p

    p = add("nodes", cmd_nodes, help="enumerate admissible grid nodes")
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--list-limit", type=int, default=64)

    add("constants", cmd_constants, help="unit-ball constants for --n")

    p = add("eval", cmd_eval, help="evaluate a field at points (CSV rows)")
    p.add_argument("--field", choices=("nu", "mu"), required=True)
    p.add_argument("--t", type=int, required=True,
                   help="grid index for nu; stack length for mu")
    p.add_argument("--points", required=True,
                   help="inline 'x,y;x,y' or @FILE with one point per line")

    p = add("integrate", cmd_integrate, help="field integrals, exact and MC")
    p.add_argument("--field", choices=("nu", "mu"), default="nu")
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--method", choices=("exact", "mc", "both"), default="both")
    p.add_argument("--samples", type=int, default=1_000_000)

    p = add("witness", cmd_witness, help="constructive local blow-up witness")
    p.add_argument("--center", required=True, help="ball center, e.g. 1/2,1/2")
    p.add_argument("--radius", required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--samples", type=int, default=10_000)

    p = add("exhaustion", cmd_exhaustion, help="shrunk-ball coverage per grid")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--t-max", type=int, default=20)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--slack", type=float, default=0.02)

    p = add("residual", cmd_residual, help="uncovered-set decay over grids")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--t-max", type=int, default=50)
    p.add_argument("--samples", type=int, default=1_000_000)

    p = add("probe", cmd_probe, help="running-max pointwise growth fractions")
    p.add_argument("--t-max", type=int, default=50)
    p.add_argument("--x-samples", type=int, default=10_000)
    p.add_argument("--rungs", default="2,5,10,1000")

    p = add("majorant", cmd_majorant, help="search candidate-ceiling violations")
    p.add_argument("--psi", required=True, help="const:VALUE or max:HORIZON")
    p.add_argument("--t-max", type=int, default=50)
    p.add_argument("--x-samples", type=int, default=10_000)

    p = add("nonllambda", cmd_nonllambda, help="integrability-failure ladder")
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--form", choices=("log", "power"), default="log")
    p.add_argument("--depth", type=int, default=40)

    p = add("gamma-check", cmd_gamma_check, help="growth/majorization checks")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--lambda-ladder", default="1,10")
    p.add_argument("--s-max", type=int, default=40)
    p.add_argument("--cubes", help="cube list 'cx,cy@side;...' (default: central)")

    p = add("verify-all", cmd_verify_all, help="run the whole check battery")
    p.add_argument("--t-max", type=int, default=20)
    p.add_argument("--s-max", type=int, default=20)
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--x-samples", type=int, default=10_000)
    p.add_argument("--debug-bound-scale", type=float, default=1.0,
                   help=argparse.SUPPRESS)

    if defaults:
        for p in subparsers:
            dests = {a.dest for a in p._actions}
            p.set_defaults(**{k: v for k, v in defaults.items() if k in dests})
    return parser


_CONFIG_CASTS = {"n": int, "t": int, "t_max": int, "s_max": int, "k": int,
                 "samples": int, "x_samples": int, "seed": int,
                 "c": float, "lam": float, "p": float, "tol": float}


def _load_config_defaults(argv) -> dict:
    """Pull --config FILE out of argv (left in place for the echo) and turn
    its keys into parser defaults; explicit flags still win."""
    if "--config" not in argv:
        return {}
    path = argv[argv.index("--config") + 1]
    with open(path, "r", encoding="utf-8") as fh:
        cfg = parse_config(fh.read())
    out = {}
    for key, value in cfg.items():
        dest = {"out_dir": "out"}.get(key, key)
        out[dest] = _CONFIG_CASTS.get(key, str)(value)
    return out


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        defaults = _load_config_defaults(argv)
    except (OSError, ValueError, IndexError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    parser = build_parser(defaults)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except SingridError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
