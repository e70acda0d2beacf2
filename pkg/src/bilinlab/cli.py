"""Command-line experiment harness.

Usage::

    bilinlab [--config cfg.json] [--seed N] [--out DIR] [--format csv|json] <command> [options]

Commands: ``exponents``, ``bnorm``, ``wnorm``, ``apply``, ``scaling``,
``counterexample``, ``appendix``, ``verify``.  Tables go out as CSV
(RFC 4180, LF line endings, run metadata in a leading ``#`` comment line),
reports as JSON.  Every record embeds the build identifier and the echoed
configuration.  ``BILINLAB_THREADS`` caps the worker count.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import pathlib
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__, appendix, engine, exponents, grid, lattice, verify
from ._util import as_exponent, worker_count

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def build_id() -> str:
    """``git describe``-style identifier, or the package version outside a checkout."""
    here = pathlib.Path(__file__).resolve().parent
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=here,
                             capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"bilinlab-{__version__}-g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return f"bilinlab-{__version__}"


# ---------------------------------------------------------------------------
# formatting


def _num(v):
    if isinstance(v, Fraction):
        return exponents.format_exponent(v)
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return repr(v)
    if isinstance(v, (np.floating,)):
        return _num(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return "inf" if math.isinf(v) else v
    if isinstance(obj, Fraction):
        return exponents.format_exponent(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def render_csv(header: list, rows: list, meta: dict) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(_jsonable(meta), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_num(v) for v in r])
    return buf.getvalue()


def render_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def emit(args, name: str, record: dict, table=None):
    """Write ``record`` (JSON) or ``table`` (CSV) to stdout or ``--out``."""
    if args.format == "csv" and table is not None:
        header, rows = table
        meta = {"experiment": name, "build": record["build"], "config": record["config"]}
        if "wall_time" in record:
            meta["wall_time"] = record["wall_time"]
        text = render_csv(header, rows, meta)
        ext = "csv"
    else:
        text = render_json(record)
        ext = "json"
    if args.out:
        out = pathlib.Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.{ext}").write_text(text, newline="\n")
    else:
        sys.stdout.write(text)


def _record(args, name: str, config: dict, results: dict, passed=None, tolerance=None, t0=None) -> dict:
    rec = {"experiment": name, "build": build_id(), "config": config, "seed": args.seed, "results": results}
    if passed is not None:
        rec["pass"] = bool(passed)
        rec["tolerance"] = tolerance
    if t0 is not None:
        rec["wall_time"] = round(time.perf_counter() - t0, 3)
    return rec


# ---------------------------------------------------------------------------
# parsing helpers


def parse_list(text, conv=float):
    if isinstance(text, (list, tuple)):
        return [conv(v) for v in text]
    return [conv(v) for v in str(text).split(",") if v.strip()]


def parse_fraction(text) -> Fraction:
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"malformed number {text!r}") from exc


def weight_from_spec(spec: str, seed: int) -> lattice.LatticeWeight:
    """``point``, ``hilbert:R``, ``hormander:m:R``, ``l2:R[:decay]`` or a JSON file path."""
    parts = spec.split(":")
    kind = parts[0]
    if kind == "point":
        return lattice.LatticeWeight.delta([0], [0])
    if kind == "hilbert":
        return lattice.weight_hilbert(1, int(parts[1]))
    if kind == "hormander":
        return lattice.weight_hormander(float(Fraction(parts[1])), 1, int(parts[2]))
    if kind == "l2":
        decay = float(parts[2]) if len(parts) > 2 else 1.5
        return lattice.random_l2_weight(seed, int(parts[1]), 1, decay)
    path = pathlib.Path(spec)
    if path.exists():
        return lattice.LatticeWeight.from_json(path.read_text())
    raise ValueError(f"unknown weight spec {spec!r}")


# ---------------------------------------------------------------------------
# commands


def cmd_exponents(args) -> int:
    t0 = time.perf_counter()
    lo, hi, step = parse_fraction(args.lo), parse_fraction(args.hi), parse_fraction(args.step)
    if step <= 0 or not (0 <= lo <= hi <= 1):
        raise ValueError("malformed range: need 0 <= lo <= hi <= 1 and step > 0")
    count = (hi - lo) / step
    if count.denominator != 1:
        raise ValueError("malformed range: step must divide hi - lo")
    axis = [lo + i * step for i in range(int(count) + 1)]
    rows = []
    for a in axis:
        for b in axis:
            t = exponents.triple_from_reciprocals(a, b, a + b)
            res = exponents.sharp_q(t)
            m = exponents.critical_order(t, args.dim)
            rows.append([a, b, res.q, res.case_label, str(res.weak_type).lower(), m])
    header = ["inv_p1", "inv_p2", "q", "case", "weak_type", "m"]
    config = {"lo": str(lo), "hi": str(hi), "step": str(step), "dim": args.dim}
    results = {"rows": [dict(zip(header, [_num(v) for v in r])) for r in rows]}
    emit(args, "exponents", _record(args, "exponents", config, results, t0=t0), (header, rows))
    return EXIT_OK


def cmd_bnorm(args) -> int:
    t0 = time.perf_counter()
    q1, q2, q = as_exponent(args.q1), as_exponent(args.q2), as_exponent(args.q)
    specs = [args.weight]
    if args.truncations:
        base = args.weight.split(":")
        specs = [":".join([base[0]] + ([base[1]] if base[0] == "hormander" else []) + [str(R)]
                          + (base[3:] if base[0] == "hormander" else base[2:]))
                 for R in parse_list(args.truncations, int)]
    rows, results = [], []
    for spec in specs:
        V = weight_from_spec(spec, args.seed)
        if args.form:
            est = lattice.bform_norm(V, q1, q2, q, max_iters=args.max_iters, restarts=args.restarts, seed=args.seed)
        else:
            est = lattice.b_norm_lower_altmax(V, q1, q2, q, max_iters=args.max_iters, restarts=args.restarts,
                                              seed=args.seed)
        upper = est.upper if est.upper is not None else math.inf
        rows.append([spec, len(V), est.lower, upper, est.iterations, str(bool(est.converged)).lower()])
        results.append({"weight": spec, "support": len(V), "lower": est.lower, "upper": upper,
                        "iterations": est.iterations, "converged": bool(est.converged),
                        "l2_norm": V.norm(2)})
    changes = [abs(b["lower"] - a["lower"]) / a["lower"] for a, b in zip(results, results[1:])]
    plateau = bool(changes) and all(c < args.plateau_tol for c in changes)
    config = {"weight": args.weight, "q1": args.q1, "q2": args.q2, "q": args.q, "form": args.form,
              "truncations": args.truncations, "restarts": args.restarts, "max_iters": args.max_iters}
    rec = _record(args, "bnorm", config, {"estimates": results, "relative_changes": changes,
                                          "plateau": plateau}, t0=t0)
    if changes:
        rec["pass"] = plateau
        rec["tolerance"] = {"plateau_relative_change": args.plateau_tol}
    header = ["weight", "support", "lower", "upper", "iterations", "converged"]
    emit(args, "bnorm", rec, (header, rows))
    return EXIT_OK


def _builtin_function(name: str, g: grid.TorusGrid, seed: int) -> grid.GridFunction:
    if name == "gaussian":
        return grid.GridFunction.from_function(g, lambda *xs: np.exp(-sum(x * x for x in xs) / 2))
    if name == "modulated":
        A = lattice.LatticeVector(1, [[-1], [0], [2]], [1.0, 0.5, 2.0])
        return engine.modulated_bump_pair(A, A, 1.0, g)[0]
    if name == "random":
        rng = np.random.default_rng(seed)
        c = np.zeros(g.shape, dtype=complex)
        m = np.max(np.abs(np.stack(g.freq_mesh())), axis=0) < 3
        c[m] = rng.normal(size=m.sum()) + 1j * rng.normal(size=m.sum())
        return grid.GridFunction.from_coefficients(g, c)
    path = pathlib.Path(name)
    if path.exists():
        return grid.GridFunction.load(path)
    raise ValueError(f"unknown function {name!r}")


def _grid_from_args(args) -> grid.TorusGrid:
    return grid.TorusGrid.with_resolution(args.dim, args.per_unit, args.samples)


def cmd_wnorm(args) -> int:
    t0 = time.perf_counter()
    g = _grid_from_args(args)
    f = _builtin_function(args.function, g, args.seed)
    kappa = grid.make_square_partition_window(args.window_order)
    rows = []
    for p in parse_list(args.p, str):
        for q in parse_list(args.q, str):
            rows.append([p, q, grid.wiener_amalgam_norm(f, p, q, kappa)])
    results = {"function": args.function, "L2": grid.lp_norm(f, 2),
               "norms": [{"p": r[0], "q": r[1], "value": r[2]} for r in rows]}
    config = {"function": args.function, "p": args.p, "q": args.q, "dim": args.dim, "per_unit": args.per_unit,
              "samples": args.samples, "window_order": args.window_order}
    emit(args, "wnorm", _record(args, "wnorm", config, results, t0=t0), (["p", "q", "wnorm"], rows))
    return EXIT_OK


def cmd_apply(args) -> int:
    t0 = time.perf_counter()
    g = _grid_from_args(args)
    f1 = _builtin_function(args.f1, g, args.seed)
    f2 = _builtin_function(args.f2, g, args.seed + 1)
    if args.symbol == "one":
        sigma = engine.Multiplier.constant(1.0, g.n)
    elif args.symbol == "lattice-bump":
        E = np.array(json.loads(args.E), dtype=np.int64)
        sigma = engine.lattice_bump_symbol(E)
    elif args.symbol == "weight":
        sigma = engine.weight_symbol(weight_from_spec(args.weight, args.seed))
    else:
        raise ValueError(f"unknown symbol {args.symbol!r}")
    T = engine.apply(sigma, f1, f2)
    results = {"L2": grid.lp_norm(T, 2), "Linf": grid.lp_norm(T, math.inf), "L1": grid.lp_norm(T, 1)}
    if args.out:
        pathlib.Path(args.out).mkdir(parents=True, exist_ok=True)
        saved = T.save(pathlib.Path(args.out) / "apply_output.json")
        results["output_file"] = saved.name
    config = {"symbol": args.symbol, "f1": args.f1, "f2": args.f2, "E": args.E, "weight": args.weight,
              "dim": args.dim, "per_unit": args.per_unit, "samples": args.samples}
    rows = [[k, v] for k, v in results.items() if k != "output_file"]
    emit(args, "apply", _record(args, "apply", config, results, t0=t0), (["quantity", "value"], rows))
    return EXIT_OK


def cmd_scaling(args) -> int:
    t0 = time.perf_counter()
    sizes = parse_list(args.sizes, int)
    res = engine.card_e_scaling(args.p1, args.p2, args.p, sizes, args.profile, args.seed, args.trials)
    ok_target = res.slope <= res.target + args.upper_tol
    rows = [[N, c, lo] for N, c, lo in zip(res.sizes, res.cards, res.lowers)]
    results = {"sizes": res.sizes, "cards": res.cards, "lowers": res.lowers, "slope": res.slope,
               "target_inv_q": res.target, "upper_consistent": bool(ok_target)}
    config = {"p1": args.p1, "p2": args.p2, "p": args.p, "sizes": sizes, "profile": args.profile,
              "trials": args.trials}
    rec = _record(args, "scaling", config, results, passed=ok_target,
                  tolerance={"slope_minus_target_max": args.upper_tol}, t0=t0)
    emit(args, "scaling", rec, (["N", "card_E", "lower"], rows))
    return EXIT_OK


def cmd_counterexample(args) -> int:
    t0 = time.perf_counter()
    radii = parse_list(args.radii, int)
    prof = lattice.counterexample_profile(args.p1, args.p2, radii)
    forms = [r["form_value"] for r in prof]
    monotone = all(b > a for a, b in zip(forms, forms[1:]))
    growth = forms[-1] / forms[0] if forms[0] > 0 else math.inf
    drift = max(abs(prof[-1][k] - prof[0][k]) / prof[0][k] for k in ("normA", "normB", "normC"))
    results = {"profile": prof, "monotone": monotone, "growth": growth, "max_norm_change": drift,
               "parameters": lattice.counterexample_parameters(args.p1, args.p2)}
    header = ["R", "form_value", "normA", "normB", "normC"]
    rows = [[r[k] for k in header] for r in prof]
    config = {"p1": args.p1, "p2": args.p2, "radii": radii}
    emit(args, "counterexample", _record(args, "counterexample", config, results, t0=t0), (header, rows))
    return EXIT_OK


def cmd_appendix(args) -> int:
    t0 = time.perf_counter()
    op = args.op
    if op in ("vandermonde", "tensor"):
        lam = parse_fraction(args.lam) if args.exact else float(Fraction(args.lam))
        zs = [parse_fraction(v) if args.exact else float(Fraction(v)) for v in parse_list(args.z, str)]
        tab = (appendix.vandermonde_coeffs(args.N, lam, zs[0]) if op == "vandermonde"
               else appendix.tensor_coeffs(args.N, lam, tuple(zs)))
        P = np.asarray(tab.P, dtype=object if tab.exact else float)
        body = {"operation": f"{op}_coeffs", "params": {"N": args.N, "lam": str(args.lam), "z": args.z,
                                                        "exact": tab.exact},
                "residuals": {"identity": tab.residual},
                "ratios": {"size_bound": tab.bound_ratio / tab.bound_constant},
                "table": [[_num(v) if tab.exact else float(v) for v in row]
                          for row in P.reshape(args.N ** tab.d, -1)],
                "pass": tab.residual <= 1e-9 and tab.bound_ratio <= tab.bound_constant}
    elif op == "gn":
        fam = appendix.gaussian_family(seed=args.seed)
        grids = appendix.gn_grids(args.levels)
        ratios = [[appendix.gn_interpolation_check(f, gr, args.K, args.q, args.qt, as_exponent(args.r)).ratio
                   for gr in grids] for f in fam]
        drift = max(abs(r[-1] - r[0]) / r[0] for r in ratios)
        worst = max(max(r) for r in ratios)
        body = {"operation": "gn_interpolation_check",
                "params": {"K": args.K, "q": args.q, "qt": args.qt, "r": args.r, "levels": args.levels,
                           "c_max": appendix.GN_C_MAX},
                "residuals": {"refinement_drift": drift}, "ratios": {"per_function": ratios, "max": worst},
                "pass": worst <= appendix.GN_C_MAX and drift < 0.1}
    elif op == "tradeoff":
        g = appendix.tradeoff_grid()
        reps = [appendix.lambda_tradeoff_check(f, g, (args.gamma,), args.N, eps=args.eps)
                for f in appendix.gaussian_family(seed=args.seed, n=0, d=1)]
        body = {"operation": "lambda_tradeoff", "params": reps[0]["params"], "residuals": {},
                "ratios": {"max": max(r["max_ratio"] for r in reps)}, "pass": all(r["pass"] for r in reps)}
    else:
        raise ValueError(f"unknown appendix operation {op!r}")
    config = {k: getattr(args, k) for k in ("op", "N", "lam", "z", "exact", "K", "q", "qt", "r", "levels",
                                            "gamma", "eps")}
    rec = _record(args, "appendix", config, body, passed=body["pass"], tolerance="see results.params", t0=t0)
    emit(args, "appendix", rec)
    return EXIT_OK if body["pass"] else EXIT_FAIL


def cmd_verify(args) -> int:
    try:
        invs = verify.run_suite(args.suite, args.seed, args.tolerances)
    except KeyError:
        sys.stderr.write(f"unknown suite {args.suite!r}; choose from {', '.join(verify.SUITES + ('all',))}\n")
        return EXIT_USAGE
    failed = [i.key for i in invs if not i.passed]
    summary = {"suite": args.suite, "seed": args.seed, "build": build_id(),
               "invariants": [i.to_json_obj() for i in invs], "failed": failed, "pass": not failed}
    if args.format == "csv":
        rows = [[i.key, i.measured, i.tolerance, str(i.passed).lower()] for i in invs]
        text = render_csv(["invariant", "measured", "tolerance", "pass"], rows,
                          {"experiment": "verify", "build": summary["build"], "suite": args.suite, "seed": args.seed})
        name = "verify.csv"
    else:
        text = render_json(summary)
        name = "verify.json"
    if args.out:
        out = pathlib.Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text, newline="\n")
    else:
        sys.stdout.write(text)
    for key in failed:
        sys.stderr.write(f"FAILED {key}\n")
    return EXIT_OK if not failed else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser


def _global_options(parser, suppress: bool):
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    parser.add_argument("--config", metavar="PATH.json", help="JSON file with option values", **kw)
    parser.add_argument("--seed", type=int, metavar="U64", help="master seed (default 0)",
                        **(kw or {"default": 0}))
    parser.add_argument("--out", metavar="DIR", help="write results into DIR instead of stdout", **kw)
    parser.add_argument("--format", choices=("csv", "json"), help="output format (default json)",
                        **(kw or {"default": "json"}))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bilinlab", description=__doc__.split("\n\n")[0])
    _global_options(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exponents", parents=[common], help="sharp exponent table on the Hoelder line")
    p.add_argument("--lo", default="0")
    p.add_argument("--hi", default="1")
    p.add_argument("--step", default="1/4")
    p.add_argument("--dim", type=int, default=1)
    p.set_defaults(func=cmd_exponents)

    p = sub.add_parser("bnorm", parents=[common], help="lattice weight norm estimates")
    p.add_argument("--weight", default="point", help="point | hilbert:R | hormander:m:R | l2:R[:decay] | file.json")
    p.add_argument("--q1", default="2")
    p.add_argument("--q2", default="2")
    p.add_argument("--q", default="2", help="output exponent (third form exponent with --form)")
    p.add_argument("--form", action="store_true", help="estimate the trilinear form norm")
    p.add_argument("--truncations", default=None, help="comma-separated radii for plateau records")
    p.add_argument("--plateau-tol", type=float, default=0.10)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--max-iters", type=int, default=500)
    p.set_defaults(func=cmd_bnorm)

    for name, func, helptext in (("wnorm", cmd_wnorm, "Wiener amalgam norms"),
                                 ("apply", cmd_apply, "apply a bilinear multiplier")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--dim", type=int, default=1)
        p.add_argument("--per-unit", type=int, default=10, help="grid period / 2 pi")
        p.add_argument("--samples", type=int, default=1024, help="samples per axis")
        p.set_defaults(func=func)
        if name == "wnorm":
            p.add_argument("--function", default="gaussian", help="gaussian | modulated | random | file.json")
            p.add_argument("--p", default="1,2,inf")
            p.add_argument("--q", default="1,2,inf")
            p.add_argument("--window-order", type=int, default=3)
        else:
            p.add_argument("--symbol", default="one", choices=("one", "lattice-bump", "weight"))
            p.add_argument("--E", default="[[0, 0]]", help="JSON list of (nu1, nu2) for lattice-bump")
            p.add_argument("--weight", default="point")
            p.add_argument("--f1", default="random")
            p.add_argument("--f2", default="random")

    p = sub.add_parser("scaling", parents=[common], help="card E scaling of lattice-bump multipliers")
    p.add_argument("--p1", type=float, default=2.0)
    p.add_argument("--p2", type=float, default=2.0)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--sizes", default="2,4,8,16")
    p.add_argument("--profile", default="full", choices=engine.CARD_E_PROFILES)
    p.add_argument("--trials", type=int, default=2)
    p.add_argument("--upper-tol", type=float, default=0.05)
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("counterexample", parents=[common], help="divergent trilinear configuration")
    p.add_argument("--p1", type=float, default=1.0)
    p.add_argument("--p2", type=float, default=1.0)
    p.add_argument("--radii", default="100,1000,10000")
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("appendix", parents=[common], help="derivative reconstruction and interpolation checks")
    p.add_argument("--op", default="vandermonde", choices=("vandermonde", "tensor", "gn", "tradeoff"))
    p.add_argument("--N", type=int, default=3)
    p.add_argument("--lam", default="1")
    p.add_argument("--z", default="0", help="comma-separated components")
    p.add_argument("--exact", action="store_true", help="rational arithmetic")
    p.add_argument("--K", type=int, default=1)
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--qt", type=float, default=1.0)
    p.add_argument("--r", default="inf")
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--gamma", type=int, default=1)
    p.add_argument("--eps", type=float, default=1.0)
    p.set_defaults(func=cmd_appendix)

    p = sub.add_parser("verify", parents=[common], help="run invariant suites")
    p.add_argument("suite", help="exponents | lattice | grid | engine | appendix | all")
    p.set_defaults(func=cmd_verify)
    return parser


def _apply_config(parser, args, argv):
    """Fill options from ``--config`` unless they were given on the command line."""
    args.tolerances = {}
    if not getattr(args, "config", None):
        return args
    cfg = json.loads(pathlib.Path(args.config).read_text())
    args.tolerances = cfg.pop("tolerances", {})
    given = {a.split("=")[0].lstrip("-").replace("-", "_") for a in argv if a.startswith("--")}
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest in given:
            continue
        if not hasattr(args, dest):
            parser.error(f"unknown config key {key!r}")
        setattr(args, dest, value)
    return args


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args = _apply_config(parser, args, argv)
    if args.seed < 0 or args.seed >= 1 << 64:
        parser.error("--seed must be an unsigned 64-bit integer")
    args.threads = worker_count()
    try:
        return args.func(args)
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
