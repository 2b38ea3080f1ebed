"""Command-line entry point: ``tanlab <subcommand> [flags]``."""

from __future__ import annotations

import argparse
import logging
import math
import sys

from . import experiments as ex
from .bounds import BoundParams, bound_report, nu_bound_quad, smooth_width_terms
from .manifold import FAMILIES, generate_embedding
from .svg import line_chart


def parse_grid(text: str, cast=float) -> tuple:
    """``a:b:c`` (inclusive, step c), ``x,y,z`` or a single value."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid {text!r} must look like start:stop:step")
        a, b, c = (float(p) for p in parts)
        if c <= 0 or b < a:
            raise ValueError(f"grid {text!r} needs step > 0 and stop >= start")
        count = int(math.floor((b - a) / c + 1e-9)) + 1
        return tuple(cast(round(a + i * c, 12)) for i in range(count))
    return tuple(cast(v) for v in text.split(",") if v.strip())


def _grid(cast):
    def conv(text):
        try:
            return parse_grid(text, cast)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return conv


def _common(p: argparse.ArgumentParser, *, grids: bool = True) -> None:
    p.add_argument("--family", default="quadratic", choices=FAMILIES)
    p.add_argument("--m", type=_grid(int), default=(5,))
    p.add_argument("--n", type=_grid(int), default=(100,))
    p.add_argument("--kmax", type=_grid(float), default=(10.0,))
    p.add_argument("--structure", default="dense", choices=("dense", "diagonal"))
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", help="CSV path (default: standard output)")
    if grids:
        p.add_argument("--trials", type=int, default=25)
        p.add_argument("--svg", help="optional SVG chart path")
        p.add_argument("--median", action="store_true", help="aggregate trials by median instead of mean")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tanlab", description="Local PCA tangent-space experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("angle-vs-k", help="mean angle against sample count")
    _common(p)
    p.add_argument("--gamma", type=_grid(float), default=ex.DEFAULT_GAMMAS)
    p.add_argument("--k", type=_grid(int), default=tuple(range(100, 2001, 100)))

    p = sub.add_parser("theory-vs-empirical", help="bound curves next to measured curves")
    _common(p)
    p.add_argument("--c", type=_grid(float), default=None, help="scale parameters (family default)")
    p.add_argument("--tau", type=_grid(float), default=ex.TAU_GRID)
    p.add_argument("--k", type=_grid(int), default=tuple(range(100, 2001, 100)))

    p = sub.add_parser("max-nu", help="largest width meeting an angle threshold")
    _common(p)
    p.add_argument("--k", type=int, default=2000, help="fixed sample count")
    p.add_argument("--theta-bound", type=_grid(float), default=(5.0,))
    p.add_argument("--decay", type=float, default=0.95)
    p.add_argument("--max-steps", type=int, default=200)

    p = sub.add_parser("min-k", help="smallest sample count meeting an angle threshold")
    _common(p)
    p.add_argument("--k-cap", type=int, default=10_000)
    p.add_argument("--theta-bound", type=_grid(float), default=(5.0,))

    p = sub.add_parser("validate-bounds", help="Monte-Carlo check of the tail bounds")
    _common(p, grids=False)
    p.add_argument("--kind", type=_grid(str), default=ex.KINDS)
    p.add_argument("--gamma", type=_grid(float), default=(1.0,))
    p.add_argument("--k", type=int, default=2000)
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--s3", type=float, default=None, help="default: the value giving a Bernstein bound of 0.05")

    p = sub.add_parser("bounds", help="evaluate every closed-form bound at one point")
    p.add_argument("--m", type=int, default=5)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--kmax", type=float, default=10.0)
    p.add_argument("--structure", default="dense", choices=("dense", "diagonal"))
    p.add_argument("--nu", type=float, default=None)
    p.add_argument("--cs", type=float, default=0.0)
    p.add_argument("--s1", type=float, default=ex.S1)
    p.add_argument("--s2", type=float, default=ex.S2)
    p.add_argument("--s3", type=float, default=None)
    p.add_argument("--p", type=float, default=ex.P_FAIL, help="p1 = p2 = p3")
    p.add_argument("--tau", type=float, default=0.1)
    p.add_argument("--json", action="store_true", help="JSON instead of a CSV row")
    p.add_argument("--out")

    p = sub.add_parser("spec-dump", help="print a random embedding as JSON")
    p.add_argument("--family", default="quadratic", choices=FAMILIES)
    p.add_argument("--m", type=int, default=5)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--kmax", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--rotations", action="store_true")
    p.add_argument("--out")
    return parser


def _config(args) -> ex.ExperimentConfig:
    agg = "median" if getattr(args, "median", False) else "mean"
    common = dict(family=args.family, m=args.m, n=args.n, kmax=args.kmax, structure=args.structure,
                  seed=args.seed, out=args.out)
    cmd = args.command
    if cmd == "angle-vs-k":
        return ex.ExperimentConfig("angle_vs_k", gamma=args.gamma, k_grid=args.k, trials=args.trials,
                                   aggregate=agg, svg=args.svg, **common)
    if cmd == "theory-vs-empirical":
        return ex.ExperimentConfig("theory_vs_empirical", c_grid=args.c, tau_grid=args.tau, k_grid=args.k,
                                   trials=args.trials, aggregate=agg, svg=args.svg, **common)
    if cmd == "max-nu":
        exp = "max_nu_vs_kmax" if len(args.kmax) > 1 else "max_nu_vs_n"
        return ex.ExperimentConfig(exp, k_fixed=args.k, theta_bound_deg=args.theta_bound, trials=args.trials,
                                   nu_decay=args.decay, max_steps=args.max_steps, aggregate=agg,
                                   svg=args.svg, **common)
    if cmd == "min-k":
        exp = "min_k_vs_kmax" if len(args.kmax) > 1 else "min_k_vs_n"
        return ex.ExperimentConfig(exp, k_cap=args.k_cap, theta_bound_deg=args.theta_bound,
                                   trials=args.trials, aggregate=agg, svg=args.svg, **common)
    return ex.ExperimentConfig("validate_bounds", kinds=args.kind, gamma=args.gamma, k_fixed=args.k,
                               reps=args.reps, s3=args.s3, **common)


def chart(cfg: ex.ExperimentConfig, rows) -> str:
    e = cfg.experiment
    if e in ("angle_vs_k", "theory_vs_empirical"):
        series = []
        keys = sorted({(r["n"], r["kmax"], r["gamma"], r.get("c")) for r in rows}, key=str)
        for n, kmax, gamma, c in keys:
            tag = f"n={n} k={kmax:g} g={gamma:.3g}"
            sel = [r for r in rows if (r["n"], r["kmax"], r["gamma"], r.get("c")) == (n, kmax, gamma, c)]
            agg = sorted((r for r in sel if r["trial"] == ex.AGGREGATE), key=lambda r: r["K"])
            series.append((tag, [r["K"] for r in agg], [r["angle_deg"] for r in agg]))
            theory = sorted((r for r in sel if r["trial"] == ex.BOUND), key=lambda r: r["k_bound"])
            if theory:
                series.append((tag + " bound", [r["k_bound"] for r in theory], [r["angle_deg"] for r in theory]))
        return line_chart(series, e.replace("_", " "), "K", "angle (deg)", logx=e == "theory_vs_empirical")
    xkey = "kmax" if e.endswith("kmax") else "n"
    ykey = "max_nu" if e.startswith("max_nu") else "min_k"
    other = "n" if xkey == "kmax" else "kmax"
    series = []
    for m in cfg.m:
        for o in sorted({r[other] for r in rows}):
            for theta in cfg.theta_bound_deg:
                sel = sorted((r for r in rows if r["m"] == m and r[other] == o and r["theta_bound_deg"] == theta),
                             key=lambda r: r[xkey])
                series.append((f"m={m} {other}={o:g} th={theta:g}", [r[xkey] for r in sel], [r[ykey] for r in sel]))
    return line_chart(series, e.replace("_", " "), xkey, ykey, logx=True, logy=True)


def _bounds_output(args) -> str:
    nu = args.nu
    if nu is None:
        probe = BoundParams(args.m, args.n, args.kmax, 1.0, cs=args.cs, s1=args.s1, s2=args.s2,
                            structure=args.structure)
        limit = min(math.sqrt(args.s1 / args.s2) * nu_bound_quad(args.m, args.n, args.kmax, args.structure),
                    smooth_width_terms(probe)[4])
        nu = 0.5 * limit
    p = BoundParams(args.m, args.n, args.kmax, nu, cs=args.cs, s1=args.s1, s2=args.s2, s3=args.s3,
                    p1=args.p, p2=args.p, p3=args.p, tau=args.tau, structure=args.structure)
    report = bound_report(p)
    if args.json:
        return report.to_json(indent=2) + "\n"
    return report.csv_header() + "\n" + report.csv_row() + "\n"


def _open_out(path):
    return sys.stdout if path is None else open(path, "w", encoding="utf-8", newline="")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        if args.command == "bounds":
            text = _bounds_output(args)
        elif args.command == "spec-dump":
            spec = generate_embedding(args.family, args.m, args.n, args.kmax, args.seed,
                                      random_rotations=args.rotations)
            text = spec.to_json() + "\n"
        else:
            cfg = _config(args)
            out = _open_out(cfg.out)  # fail early on an unwritable path
            try:
                columns, rows = ex.run(cfg)
                out.write(ex.rows_to_csv(columns, rows))
            finally:
                if out is not sys.stdout:
                    out.close()
            if getattr(cfg, "svg", None) and cfg.experiment != "validate_bounds":
                with open(cfg.svg, "w", encoding="utf-8") as fh:
                    fh.write(chart(cfg, rows))
            return 0
        if args.out is None:
            sys.stdout.write(text)
        else:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return 0
    except OSError as exc:
        print(f"tanlab: cannot write output: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"tanlab: configuration error: {exc}", file=sys.stderr)
        return 2


cli_main = main

if __name__ == "__main__":
    sys.exit(main())
