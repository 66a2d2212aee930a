"""Command-line front end: generators, analyses, certificates, recipes.

Exit codes: 0 success (certify: homogeneous), 2 certify: not homogeneous,
1 analysis failure, 64 usage error, 74 I/O failure.  All randomness flows
from --seed (PACKDIM_SEED overrides); artifacts embed the effective
configuration and the toolkit version.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from . import analysis as an
from . import apollonian as ap
from . import carpets as cp
from . import geometry as geo
from . import homogeneity as hg
from . import julia as jl

BOYD_APOLLONIAN_TARGET = 1.305688
CARPET3_TARGET = math.log(8.0) / math.log(3.0)
CARPET5_TARGET = math.log(24.0) / math.log(5.0)
# block sequence realizing the counting oscillation between the 3- and
# 5-carpet rates within 40 levels (derived from the exact count table)
OSCILLATION_BLOCKS = [(3, 6), (5, 20), (3, None)]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _log_grid(text: str) -> np.ndarray:
    """Parse 'log:a,b,n' into n log-spaced values in [a, b]."""
    if not text.startswith("log:"):
        raise UsageError(f"expected log:a,b,n, got {text!r}")
    try:
        a, b, n = text[4:].split(",")
        return np.geomspace(float(a), float(b), int(n))
    except ValueError as exc:
        raise UsageError(f"bad grid spec {text!r}: {exc}")


def _load_input(path):
    """Geometric dump -> (packing, dist); count dump -> (None, dist)."""
    with open(path) as f:
        head = f.readline()
    if head.startswith("# packdim-counts-v1"):
        table = cp.load_count_table(path)
        return None, an.CurvatureDistribution.from_count_table(table)
    packing = geo.load_packing(path)
    return packing, an.CurvatureDistribution.from_packing(packing)


def _write_json(path, payload, args):
    payload = dict(payload)
    payload["version"] = __version__
    payload["config"] = {k: v for k, v in vars(args).items() if k != "func" and not callable(v)}
    text = json.dumps(payload, indent=2, default=_json_default)
    if path:
        with open(path, "w") as f:
            f.write(text + "\n")
    else:
        print(text)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    return str(o)


# ---------------------------------------------------------------------------
# generate


def cmd_generate_apollonian(args):
    ks = [float(t) for t in args.root.split(",")]
    if len(ks) != 4:
        raise UsageError("--root needs four comma-separated curvatures")
    root = ap.root_quadruple(*ks)
    packing = ap.generate_apollonian(root, args.max_curvature)
    geo.dump_packing(packing, args.output)
    print(f"{len(packing.elements)} circles (curvature <= {args.max_curvature:g}) -> {args.output}")
    return 0


def cmd_generate_carpet(args):
    spec = cp.SigmaSpec([(args.p, None)])
    return _emit_carpet(args, spec, args.depth)


def cmd_generate_sigma(args):
    spec = cp.SigmaSpec.parse(args.blocks)
    return _emit_carpet(args, spec, args.max_level)


def _emit_carpet(args, spec, depth):
    if args.symbolic:
        table = cp.sigma_count_table(spec, max_levels=args.levels or depth)
        cp.dump_count_table(table, args.output)
        print(f"{len(table.rows)} count rows -> {args.output}")
        return 0
    packing = cp.generate_sigma_carpet(spec, depth)
    geo.dump_packing(packing, args.output)
    print(f"{len(packing.elements)} holes -> {args.output}")
    return 0


def cmd_generate_gasket(args):
    if args.symbolic:
        table = cp.gasket_count_table(args.levels or args.depth)
        cp.dump_count_table(table, args.output)
        print(f"{len(table.rows)} count rows -> {args.output}")
        return 0
    packing = cp.generate_gasket(args.depth)
    geo.dump_packing(packing, args.output)
    print(f"{len(packing.elements)} holes -> {args.output}")
    return 0


def cmd_generate_julia(args):
    rmap, box, grid = jl.load_config(args.config)
    fcs = jl.classify_grid(rmap, box, grid, jobs=args.jobs)
    if args.pgm:
        jl.write_pgm(fcs, args.pgm)
    packing = jl.components_to_packing(fcs)
    geo.dump_packing(packing, args.output)
    print(
        f"{len(packing.elements)} components (grid {grid}, julia fraction "
        f"{fcs.julia_fraction():.4f}) -> {args.output}"
    )
    return 0


# ---------------------------------------------------------------------------
# analyze


def cmd_analyze_ndist(args):
    xs = _log_grid(args.xs)  # validate parameters before touching files
    _, dist = _load_input(args.input)
    lines = ["x,N"]
    for x in xs:
        lines.append(f"{x:.17g},{dist.count(float(x))}")
    _write_lines(args.output, lines)
    return 0


def cmd_analyze_exponent(args):
    _, dist = _load_input(args.input)
    fit = an.exponent_estimate(dist)
    _write_json(args.output, {"fit": fit.to_dict()}, args)
    print(f"exponent slope: {fit.slope:.6f} over x in [{fit.window[0]:.6g}, {fit.window[1]:.6g}]")
    return 0


def cmd_analyze_boyd(args):
    xs = _log_grid(args.xs)  # validate parameters before touching files
    _, dist = _load_input(args.input)
    table = an.boyd_table(dist, xs)
    lines = ["x,N,ratio,slope10"]
    for row in table.rows:
        ratio = "" if row.ratio is None else f"{row.ratio:.17g}"
        slope = "" if row.slope10 is None else f"{row.slope10:.17g}"
        lines.append(f"{row.x:.17g},{row.n},{ratio},{slope}")
    _write_lines(args.output, lines)
    try:
        print(f"terminal slope estimate: {table.terminal_slope():.6f}")
    except an.InsufficientDataError:
        print("terminal slope estimate: (not available)")
    return 0


def cmd_analyze_boxdim(args):
    packing, _ = _load_input(args.input)
    if packing is None:
        raise UsageError("box dimension needs a geometric dump, not a count table")
    sample = _sample_for(packing, args.pitch)
    eps = _log_grid(args.eps) if args.eps else None
    if eps is None:
        lo = 2.0 * sample.resolution
        hi = geo.diameter(packing.outer) / 4.0
        eps = np.geomspace(hi, lo, 9)
    counts = [(float(e), an.box_count(sample, float(e))) for e in eps]
    fit = an.dimension_fit(counts)
    if args.output and args.output.endswith(".csv"):
        _write_lines(args.output, ["eps,count"] + [f"{e:.17g},{c}" for e, c in counts])
    else:
        _write_json(args.output, {"fit": fit.to_dict(), "counts": counts}, args)
    print(f"box-counting slope: {fit.slope:.6f} (upper {fit.upper:.4f} / lower {fit.lower:.4f})")
    return 0


def _sample_for(packing: geo.Packing, pitch: float | None) -> geo.ResidualSample:
    if pitch is None:
        diams = packing.diameters()
        pitch = float(diams.min()) / 2.0 if len(diams) else 0.01
    return geo.residual_boundary_sample(packing, pitch)


def cmd_analyze_duality(args):
    packing, dist = _load_input(args.input)
    if packing is None:
        raise UsageError("duality needs a geometric dump")
    sample = _sample_for(packing, args.pitch)
    rep = an.duality_check(dist, sample, seed=args.seed)
    _write_json(
        args.output,
        {
            "gap": rep.gap,
            "n_slope": rep.n_fit.slope,
            "box_slope": rep.box_fit.slope,
            "n_fit": rep.n_fit.to_dict(),
            "box_fit": rep.box_fit.to_dict(),
            "eps": rep.eps_values,
            "counts": rep.counts,
            "gamma1_hat": rep.gamma1_hat,
            "gamma2_hat": rep.gamma2_hat,
        },
        args,
    )
    print(f"slope gap: {rep.gap:.4f} (N {rep.n_fit.slope:.4f} vs box {rep.box_fit.slope:.4f})")
    return 0


def cmd_analyze_flatness(args):
    _, dist = _load_input(args.input)
    x0, x1 = (float(t) for t in args.window.split(","))
    rep = an.flatness_probe(dist, args.exponent, (x0, x1))
    _write_json(
        args.output,
        {"cv": rep.cv, "exponent": rep.exponent, "xs": rep.xs, "values": rep.values},
        args,
    )
    print(f"coefficient of variation of N(x)/x^E: {rep.cv:.4f}")
    return 0


def _write_lines(path, lines):
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# certify


def cmd_certify(args):
    packing, _ = _load_input(args.input)
    if packing is None:
        raise UsageError("certify needs a geometric dump")
    sample = _sample_for(packing, args.sample_pitch)
    refined = None
    if args.refined:
        rp, _ = _load_input(args.refined)
        refined = (rp, _sample_for(rp, args.sample_pitch))
    config = hg.CertifyConfig(seed=args.seed)
    report = hg.certify(packing, sample, config, refined=refined)
    if args.output:
        with open(args.output, "w") as f:
            f.write(report.to_json() + "\n")
    print(report.verdict_line())
    return 0 if report.homogeneous else 2


# ---------------------------------------------------------------------------
# reproduce


def cmd_reproduce(args):
    outdir = args.output or "."
    os.makedirs(outdir, exist_ok=True)
    name = args.recipe
    if name == "boyd-apollonian":
        return _reproduce_boyd_apollonian(outdir, args)
    if name == "carpet-3":
        return _reproduce_carpet(outdir, args, 3, 20, CARPET3_TARGET)
    if name == "carpet-5":
        return _reproduce_carpet(outdir, args, 5, 15, CARPET5_TARGET)
    if name == "sigma-oscillation":
        return _reproduce_sigma_oscillation(outdir, args)
    if name == "julia-carpet":
        return _reproduce_julia(outdir, args)
    raise UsageError(f"unknown recipe {name!r}")


def _reproduce_boyd_apollonian(outdir, args):
    root = ap.root_quadruple(-1.0, 2.0, 2.0, 3.0)
    packing = ap.generate_apollonian(root, 1e4)
    path = os.path.join(outdir, "apollonian-1223.csv")
    geo.dump_packing(packing, path)
    dist = an.CurvatureDistribution.from_packing(packing)
    xs = np.geomspace(10.0, 1e4, 25)
    table = an.boyd_table(dist, xs)
    tpath = os.path.join(outdir, "boyd-apollonian.csv")
    _write_lines(tpath, _boyd_lines(table))
    slope = table.terminal_slope()
    fit = an.exponent_estimate(dist)
    print(f"{len(packing.elements)} circles to curvature 1e4 -> {path}")
    print(f"window slope at x = 1e4:   {slope:.6f}")
    print(f"exponent fit slope:        {fit.slope:.6f}")
    print(f"reference value:           {BOYD_APOLLONIAN_TARGET}")
    print(f"deviation: {abs(slope - BOYD_APOLLONIAN_TARGET):.4f} (slope), "
          f"{abs(fit.slope - BOYD_APOLLONIAN_TARGET):.4f} (fit)")
    return 0


def _boyd_lines(table):
    lines = ["x,N,ratio,slope10"]
    for row in table.rows:
        ratio = "" if row.ratio is None else f"{row.ratio:.17g}"
        slope = "" if row.slope10 is None else f"{row.slope10:.17g}"
        lines.append(f"{row.x:.17g},{row.n},{ratio},{slope}")
    return lines


def _reproduce_carpet(outdir, args, p, levels, target):
    table = cp.sigma_count_table(cp.SigmaSpec([(p, None)]), max_levels=levels)
    path = os.path.join(outdir, f"carpet-{p}-counts.csv")
    cp.dump_count_table(table, path)
    dist = an.CurvatureDistribution.from_count_table(table)
    fit = an.exponent_estimate(dist)
    print(f"exact count table to level {levels} -> {path}")
    print(f"exponent fit slope: {fit.slope:.6f}   reference: {target:.6f}")
    print(f"deviation: {abs(fit.slope - target):.6f}")
    return 0


def _reproduce_sigma_oscillation(outdir, args):
    spec = cp.SigmaSpec(OSCILLATION_BLOCKS)
    table = cp.sigma_count_table(spec, max_levels=40)
    path = os.path.join(outdir, "sigma-oscillation-counts.csv")
    cp.dump_count_table(table, path)
    dist = an.CurvatureDistribution.from_count_table(table)
    xs = [1.0 / d for d, _ in table.rows]
    # window slope at the end of each block run, where the rate plateaus
    n1 = OSCILLATION_BLOCKS[0][1]
    n2 = n1 + OSCILLATION_BLOCKS[1][1]
    slope_3 = dist.window_slope(xs[n1 - 1])
    slope_5 = dist.window_slope(xs[n2 - 1])
    slopes = [(x, s) for x, s in ((x, dist.window_slope(x)) for x in xs) if s is not None]
    x_low = next(x for x, s in slopes if s <= 1.90)
    x_high = next(x for x, s in slopes if x > x_low and s >= 1.96)
    print(f"exact count table for blocks {OSCILLATION_BLOCKS} -> {path}")
    print(f"window slope at the end of the base-3 run: {slope_3:.4f} (rate {CARPET3_TARGET:.4f})")
    print(f"window slope at the end of the base-5 run: {slope_5:.4f} (rate {CARPET5_TARGET:.4f})")
    print(f"oscillation: slope <= 1.90 at x = {x_low:.4g}, then >= 1.96 at x = {x_high:.4g}")
    return 0


def _reproduce_julia(outdir, args):
    grid = args.grid or 2048
    rmap = jl.shipped_map(grid)
    fcs = jl.classify_grid(rmap, jl.SHIPPED_BOX, grid, jobs=args.jobs)
    packing = jl.components_to_packing(fcs)
    path = os.path.join(outdir, "julia-carpet.csv")
    geo.dump_packing(packing, path)
    pgm = os.path.join(outdir, "julia-carpet.pgm")
    jl.write_pgm(fcs, pgm)
    dist = an.CurvatureDistribution.from_packing(packing)
    sample = jl.julia_residual_sample(fcs)
    rep = an.duality_check(dist, sample, seed=args.seed)
    print(f"{len(packing.elements)} components at grid {grid} -> {path} (+ {pgm})")
    print(f"counting slope {rep.n_fit.slope:.4f} vs box-counting {rep.box_fit.slope:.4f}: "
          f"gap {rep.gap:.4f}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    p = _Parser(prog="packdim", description=__doc__)
    p.add_argument("--version", action="version", version=f"packdim {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="construct packings and count tables")
    gsub = g.add_subparsers(dest="generator", required=True)

    ga = gsub.add_parser("apollonian")
    ga.add_argument("--root", default="-1,2,2,3", help="four curvatures, comma-separated")
    ga.add_argument("--max-curvature", type=float, required=True)
    ga.add_argument("-o", "--output", required=True)
    ga.set_defaults(func=cmd_generate_apollonian)

    gc = gsub.add_parser("carpet")
    gc.add_argument("--p", type=int, default=3)
    gc.add_argument("--depth", type=int, default=4)
    gc.add_argument("--symbolic", action="store_true", help="emit the exact count table")
    gc.add_argument("--levels", type=int, default=None)
    gc.add_argument("-o", "--output", required=True)
    gc.set_defaults(func=cmd_generate_carpet)

    gs = gsub.add_parser("sigma")
    gs.add_argument("--blocks", required=True, help="e.g. 3:6,5:20,3:inf")
    gs.add_argument("--max-level", type=int, default=8)
    gs.add_argument("--symbolic", action="store_true")
    gs.add_argument("--levels", type=int, default=None)
    gs.add_argument("-o", "--output", required=True)
    gs.set_defaults(func=cmd_generate_sigma)

    gg = gsub.add_parser("gasket")
    gg.add_argument("--depth", type=int, default=6)
    gg.add_argument("--symbolic", action="store_true")
    gg.add_argument("--levels", type=int, default=None)
    gg.add_argument("-o", "--output", required=True)
    gg.set_defaults(func=cmd_generate_gasket)

    gj = gsub.add_parser("julia")
    gj.add_argument("--config", required=True, help="JSON map configuration")
    gj.add_argument("--pgm", default=None, help="also write a PGM classification image")
    gj.add_argument("-o", "--output", required=True)
    gj.set_defaults(func=cmd_generate_julia)

    a = sub.add_parser("analyze", help="counting and dimension analyses")
    asub = a.add_subparsers(dest="analysis", required=True)

    an_specs = {
        "ndist": (cmd_analyze_ndist, [("--xs", dict(required=True))]),
        "exponent": (cmd_analyze_exponent, []),
        "boyd": (cmd_analyze_boyd, [("--xs", dict(required=True))]),
        "boxdim": (cmd_analyze_boxdim, [("--eps", dict(default=None)), ("--pitch", dict(type=float, default=None))]),
        "duality": (cmd_analyze_duality, [("--pitch", dict(type=float, default=None))]),
        "flatness": (cmd_analyze_flatness, [("--exponent", dict(type=float, required=True)), ("--window", dict(required=True))]),
    }
    for name, (func, extra) in an_specs.items():
        ap_ = asub.add_parser(name)
        ap_.add_argument("input")
        for flag, kw in extra:
            ap_.add_argument(flag, **kw)
        ap_.add_argument("-o", "--output", default=None)
        ap_.set_defaults(func=func)

    c = sub.add_parser("certify", help="homogeneity certificate (exit 0/2)")
    c.add_argument("input")
    c.add_argument("--refined", default=None, help="refined dump for stability checks")
    c.add_argument("--sample-pitch", type=float, default=None)
    c.add_argument("-o", "--output", default=None)
    c.set_defaults(func=cmd_certify)

    r = sub.add_parser("reproduce", help="built-in end-to-end recipes")
    r.add_argument(
        "recipe",
        choices=["boyd-apollonian", "carpet-3", "carpet-5", "sigma-oscillation", "julia-carpet"],
    )
    r.add_argument("--grid", type=int, default=None, help="julia recipe grid override")
    r.add_argument("-o", "--output", default=None, help="output directory")
    r.set_defaults(func=cmd_reproduce)

    for sp in (ga, gc, gs, gg, gj, c, r, *[asub.choices[k] for k in an_specs]):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--jobs", type=int, default=1)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if "PACKDIM_SEED" in os.environ and hasattr(args, "seed"):
            args.seed = int(os.environ["PACKDIM_SEED"])
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 64
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 74
    except (an.AnalysisError, geo.GeometryError, ap.ApollonianError, cp.CarpetError,
            jl.JuliaError, hg.HomogeneityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
