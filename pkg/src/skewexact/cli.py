"""Command-line interface: ``skewexact <command> [options]``."""
from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

OUTPUT_ENV = "SKEWEXACT_OUTPUT_DIR"
VALUE_FLAGS = {"--y-grid", "--theta", "--beta", "--x", "--x2", "--x0", "--mu", "--horizons"}


def _pair(text: str):
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected two comma-separated numbers")
    return tuple(parts)


def _grid(text: str):
    try:
        lo, hi, step = (float(p) for p in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("expected lo:hi:step")
    if step <= 0 or hi < lo:
        raise argparse.ArgumentTypeError("need lo <= hi and step > 0")
    return np.arange(lo, hi + 0.5 * step, step)


def _floats(text: str):
    return [float(p) for p in text.split(",")]


def _global_flags() -> argparse.ArgumentParser:
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--drift", default="b1", help="built-in drift: b1, b2 or constant")
    g.add_argument("--drift-config", help="INI file describing the drift (overrides --drift)")
    g.add_argument("--mu", type=float, default=0.0, help="value of the constant drift")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--T", type=float, default=1.0, help="time horizon")
    g.add_argument("--T-el", type=float, default=0.55, help="split length of the split sampler")
    g.add_argument("--delta", type=float, default=0.75, help="endpoint proposal parameter in (0,1)")
    g.add_argument("--tol", type=float, default=1e-10, help="series tolerance")
    g.add_argument("-o", "--output", help=f"output file (default: under ${OUTPUT_ENV} or .)")
    return g


def build_parser() -> argparse.ArgumentParser:
    g = _global_flags()
    p = argparse.ArgumentParser(prog="skewexact", description="Exact simulation of diffusions with "
                                "discontinuous drift and two-barrier skew density series.")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("density", parents=[g], help="evaluate density series on a grid")
    d.add_argument("--theta", type=_pair, help="theta1,theta2 (limit series)")
    d.add_argument("--beta", type=_pair, help="beta1,beta2 (pre-limit series, needs --mu)")
    d.add_argument("--z", type=float, default=1.0, help="barrier gap")
    d.add_argument("--a-shift", type=float, help="contour abscissa")
    d.add_argument("--t", type=float, required=True)
    d.add_argument("--x", type=float, required=True)
    d.add_argument("--y-grid", type=_grid, required=True, help="lo:hi:step")
    d.add_argument("--bridge-T", type=float, help="emit the bridge density q with this end time")
    d.add_argument("--x2", type=float, help="bridge end point")

    s = sub.add_parser("sample", parents=[g], help="terminal samples")
    s.add_argument("--method", choices=["srrs", "rrs", "euler"], default="srrs")
    s.add_argument("--step", type=float, default=1e-2, help="Euler step")
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--x0", type=float, default=0.5)
    s.add_argument("--progressive", action="store_true", help="draw Poisson points one at a time")
    s.add_argument("--ceiling-mb", action="store_true", help="use the sup-norm ceiling for M_B")
    s.add_argument("--kde", help="also write a KDE (bandwidth 0.1) to this CSV")
    s.add_argument("--bandwidth", type=float, default=0.1)

    a = sub.add_parser("path", parents=[g], help="exact skeleton plus bridge refinement")
    a.add_argument("--x0", type=float, default=0.5)
    a.add_argument("--fill-step", type=float, default=1e-3, help="refinement step (0 for none)")

    b = sub.add_parser("benchmark", parents=[g], help="per-sample timing over horizons")
    b.add_argument("--methods", default="rrs,srrs,euler:0.01", help="comma list; euler:<step>")
    b.add_argument("--horizons", type=_floats, default=[1.0, 2.0, 4.0])
    b.add_argument("--n", type=int, default=200)
    b.add_argument("--x0", type=float, default=0.5)

    v = sub.add_parser("verify", parents=[g], help="run the numerical self-checks")
    v.add_argument("--suite", action="append", help="suite name (repeatable); default all")
    return p


def _out_path(args, default_name: str) -> Path:
    if args.output:
        return Path(args.output)
    return Path(os.environ.get(OUTPUT_ENV, ".")) / default_name


def _drift(args):
    from .drift import builtin_drift, load_drift
    if args.drift_config:
        return load_drift(args.drift_config)
    return builtin_drift(args.drift, args.mu)


def _config(args, spec):
    from .sim import SimConfig
    return SimConfig(T=args.T, T_el=args.T_el, delta=args.delta, seed=args.seed, tol=args.tol,
                     tighten_mb=not getattr(args, "ceiling_mb", False),
                     progressive=getattr(args, "progressive", False))


def cmd_density(args) -> int:
    from .density import BetaParams, ThetaParams, bridge_density_q, write_density_csv
    from .analysis import write_rows_csv
    out = _out_path(args, "density.csv")
    if args.beta is not None:
        prm = BetaParams(args.beta[0], args.beta[1], args.mu, args.z, args.a_shift)
    else:
        th = args.theta if args.theta is not None else (0.0, 0.0)
        prm = ThetaParams(th[0], th[1], args.z, args.a_shift)
    if args.bridge_T is not None:
        if not isinstance(prm, ThetaParams) or args.x2 is None:
            raise ValueError("bridge density needs --theta and --x2")
        q = bridge_density_q(args.t, args.bridge_T, args.x, args.x2, args.y_grid, prm, tol=args.tol)
        write_rows_csv(out, ["t", "T", "x1", "x2", "y", "q"],
                       [(args.t, args.bridge_T, args.x, args.x2, float(y), float(v))
                        for y, v in zip(args.y_grid, q)])
    else:
        write_density_csv(out, args.t, args.x, args.y_grid, prm, tol=args.tol)
    print(out)
    return 0


def cmd_sample(args) -> int:
    from .analysis import SampleBatch, kde, write_rows_csv
    from .sim import Skeleton, batch_metadata, euler_maruyama, simulate, write_json, write_skeletons_csv
    spec = _drift(args)
    cfg = _config(args, spec)
    out = _out_path(args, "samples.csv")
    t0 = time.perf_counter()
    if args.method == "euler":
        vals = euler_maruyama(spec, args.x0, args.T, args.step, np.random.default_rng(args.seed), n=args.n)
        sk = [Skeleton([0.0, args.T], [args.x0, v], [True, True]) for v in vals]
    else:
        sk = simulate(spec, args.x0, cfg, args.n, args.method)
    wall = time.perf_counter() - t0
    write_skeletons_csv(out, sk, terminal_only=True)
    meta = batch_metadata(cfg, sk, args.method, {"drift": spec.name, "x0": args.x0, "wall_seconds": wall,
                                                  "seconds_per_sample": wall / args.n})
    if args.method == "euler":
        meta["euler_step"] = args.step
    write_json(out.with_suffix(".json"), meta)
    if args.kde:
        est = kde(SampleBatch([s.terminal for s in sk], args.method), args.bandwidth)
        write_rows_csv(args.kde, ["x", "density"], est.tolist())
    print(out)
    return 0


def cmd_path(args) -> int:
    from .grs import theta_from_drift
    from .sim import batch_metadata, fill_path, simulate, spawn_streams, write_json, write_skeletons_csv
    spec = _drift(args)
    cfg = _config(args, spec)
    sk = simulate(spec, args.x0, cfg, 1, "srrs")[0]
    if args.fill_step > 0:
        grid = np.arange(args.fill_step, args.T, args.fill_step)
        rng = spawn_streams(args.seed + 1, 1)[0]
        sk = fill_path(sk, grid, theta_from_drift(spec), rng, shift=spec.z1)
    out = _out_path(args, "path.csv")
    write_skeletons_csv(out, [sk])
    write_json(out.with_suffix(".json"), batch_metadata(cfg, [sk], "srrs", {"fill_step": args.fill_step}))
    print(out)
    return 0


def cmd_benchmark(args) -> int:
    from .analysis import benchmark, write_rows_csv
    spec = _drift(args)
    cfg = _config(args, spec)
    rows = []
    for m in args.methods.split(","):
        rows.extend(benchmark(spec, m.strip(), args.horizons, args.n, cfg, x0=args.x0, seed=args.seed))
    out = _out_path(args, "benchmark.csv")
    write_rows_csv(out, ["method", "T", "mean_seconds", "sd", "seconds_per_unit_time"], rows)
    for r in rows:
        print(f"{r[0]:>12s} T={r[1]:<5g} {r[2]:.3e} s/sample  ratio {r[4]:.3e}")
    print(out)
    return 0


def cmd_verify(args) -> int:
    from . import verify
    tol = args.tol if args.tol != 1e-10 else None
    checks = verify.run(args.suite, tol)
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 0 if failed == 0 else 1


COMMANDS = {"density": cmd_density, "sample": cmd_sample, "path": cmd_path,
            "benchmark": cmd_benchmark, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    # values such as "-2:3:0.05" or "-0.5,0.5" would otherwise look like flags
    for i in range(len(argv) - 2, -1, -1):
        if argv[i] in VALUE_FLAGS and argv[i + 1].startswith("-") and argv[i + 1][1:2].isdigit():
            argv[i:i + 2] = [f"{argv[i]}={argv[i + 1]}"]
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"skewexact {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
