"""Command-line entry point: ``fiberalloc {solve,pareto,sweep,dual,check}``."""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .checks import run_checks
from .config import ConfigError, ExperimentConfig, load_config
from .dual import (
    DualSystem,
    brute_force_optimum,
    cooperative_energy_optimum,
    cooperative_multiplier,
    ray_limit,
)
from .fiber import BidirectionalBox, Unidirectional, fiber_of
from .reports import ResultBundle, dual_bundle, run_experiment, run_sweep, write_bundle
from .solvers import max_promptness, min_energy

OUT_ENV = "FIBERALLOC_OUT"

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

SCHEMA_HELP = """\
config files are TOML:
  [vehicle]    kind = "hexarotor" (mass_kg, arm_radius_m, k_f, k_m, angle_offset_rad,
               spins, energy_weights) or kind = "matrix" (A, energy_weights, mass_kg)
  [[regimes]]  kind = "unidirectional" | kind = "box" with bound = 5.0
  [task]       kind = "wrench" (wrench = [...]) | "wrenches" (wrenches = [[...], ...])
               | "sweep" (component, start, stop, step = 0.05, base = hover)
  [solver]     seed, kkt_tol, n_random_seeds, n_points
  [output]     directory, formats = ["csv", "json", "svg"]
output directory: --out, else $FIBERALLOC_OUT, else [output].directory
exit codes: 0 success, 1 solver failure or infeasible task, 2 config error"""


class _Printer:
    def __init__(self, quiet: bool):
        self.quiet = quiet

    def __call__(self, *args):
        if not self.quiet:
            print(*args)


def _vec(u) -> str:
    return "[" + ", ".join(f"{x:.6f}" for x in np.asarray(u)) + "]"


def _kappa(k) -> str:
    return "undefined" if k is None else f"{k:+.6f}"


def _load(args) -> ExperimentConfig:
    config = load_config(args.config)
    if args.seed is not None:
        config = replace(config, solver=replace(config.solver, seed=args.seed))
    return config


def _out_dir(args, config: ExperimentConfig | None) -> Path | None:
    if args.out:
        return Path(args.out)
    if os.environ.get(OUT_ENV):
        return Path(os.environ[OUT_ENV])
    return Path(config.output.directory) if config is not None else None


def _formats(args, config: ExperimentConfig | None) -> list[str]:
    base = list(config.output.formats) if config is not None else ["csv", "svg"]
    if args.format == "csv":
        return [f for f in base if f != "json"] or ["csv"]
    if args.format == "json":
        return ["json"]
    return base


def _write(bundle: ResultBundle, out: Path, formats, plots, say) -> None:
    from .plotting import emit_plotdata  # matplotlib import is deferred to the writing path

    paths = write_bundle(bundle, out, formats)
    for kind in plots:
        paths += emit_plotdata(bundle, kind, out)
    for p in paths:
        say(f"wrote {p}")


def _print_cells(bundle: ResultBundle, say) -> None:
    labels = bundle.regime_labels()
    n_w = len(bundle.wrenches)
    for k, cell in enumerate(bundle.cells):
        say(f"[{labels[k // n_w]}] w = {_vec(cell.wrench)}")
        if cell.error:
            say(f"  FAILED: {cell.error}")
            continue
        for rep, kappa in ((cell.energy, cell.kappa_energy), (cell.promptness, cell.kappa_promptness)):
            j2 = "singular" if rep.objective.j2 is None else f"{rep.objective.j2:.9f}"
            say(f"  {rep.kind:10s} u* = {_vec(rep.u_star)}")
            say(f"  {'':10s} J1 = {rep.objective.j1:.9f}  J2 = {j2}  kappa = {_kappa(kappa)}")
            say(f"  {'':10s} kkt = {rep.kkt_scaled:.2e}  active = {list(rep.active_set)}  "
                f"converged = {rep.converged}")


def cmd_solve(args, say) -> int:
    config = _load(args)
    bundle = run_experiment(config)
    _print_cells(bundle, say)
    out = Path(args.out) if args.out else (Path(os.environ[OUT_ENV]) if os.environ.get(OUT_ENV) else None)
    if out is not None:
        _write(bundle, out, _formats(args, config), [], say)
    return EXIT_FAIL if bundle.failed else EXIT_OK


def cmd_pareto(args, say) -> int:
    config = _load(args)
    bundle = run_experiment(config, with_fronts=True)
    labels = bundle.regime_labels()
    for fr in bundle.fronts:
        say(f"[{labels[fr.regime_index]}] w = {_vec(fr.wrench)}")
        if fr.front is None:
            print(f"  infeasible: {fr.error}")
            if fr.certificate is not None:
                print(f"  certificate (least-violating allocation): {_vec(fr.certificate)}")
            continue
        say(f"  extent = {fr.front.extent:.6g}  points = {len(fr.front.points)}  failed = {len(fr.front.failed)}")
        for p in fr.front.points:
            say(f"    J1 = {p.j1:.9f}  J2 = {p.j2:.9f}  {p.status}")
    formats = _formats(args, config)
    plots = ["pareto-front"] if "svg" in formats and any(f.front is not None for f in bundle.fronts) else []
    _write(bundle, _out_dir(args, config), formats, plots, say)
    return EXIT_FAIL if bundle.failed else EXIT_OK


def cmd_sweep(args, say) -> int:
    config = _load(args)
    if config.task.kind != "sweep":
        print("sweep needs a [task] with kind = \"sweep\"", file=sys.stderr)
        return EXIT_CONFIG
    bundle = run_sweep(config)
    n_bad = sum(not c.ok for c in bundle.cells)
    say(f"{len(bundle.cells)} cells solved in {bundle.wall_clock_s:.2f} s, {n_bad} failed")
    for c in bundle.cells:
        if not c.ok:
            print(f"  failed cell w = {_vec(c.wrench)} ({c.regime.describe()}): "
                  f"{c.error or (c.energy.message + ' ' + c.promptness.message)}")
    formats = _formats(args, config)
    plots = ["allocation-vs-sweep", "cost-vs-sweep"] if "svg" in formats else []
    _write(bundle, _out_dir(args, config), formats, plots, say)
    return EXIT_FAIL if bundle.failed else EXIT_OK


def cmd_dual(args, say) -> int:
    ds = DualSystem(args.a1, args.a2, args.c1, args.c2, args.w)
    sys_ = ds.as_actuation_system()
    failed = False

    say("energy optimum (cooperative segment)")
    closed = cooperative_energy_optimum(ds)
    rep = min_energy(fiber_of(sys_, [ds.w], Unidirectional()))
    brute = brute_force_optimum(ds, "energy", grid_n=args.grid_n)
    say(f"  {'source':12s} {'u1':>14s} {'u2':>14s}")
    for name, u in (("closed form", closed), ("solver", rep.u_star), ("grid search", brute[:2])):
        say(f"  {name:12s} {u[0]:14.9f} {u[1]:14.9f}")
    say(f"  multiplier closed form {cooperative_multiplier(ds):.9f}, solver {rep.multipliers[0]:.9f}")
    failed |= not rep.converged

    if args.box is not None:
        say(f"promptness optimum in the box |u_i| <= {args.box}")
        fiber = fiber_of(sys_, [ds.w], BidirectionalBox(args.box))
        pr = max_promptness(fiber)
        say(f"  solver       u = {_vec(pr.u_star)}  J2 = {pr.objective.j2:.9f}")
        if ds.w > 0:
            g = brute_force_optimum(ds, "promptness", piece="antagonistic", grid_n=args.grid_n, box=args.box)
            say(f"  grid (ray)   u = {_vec(g[:2])}  J2 = {g[2]:.9f}  ray limit t = {ray_limit(ds, args.box):.6f}")
        failed |= not pr.converged

    bundle = dual_bundle(ds, box=args.box, t_max=args.t_max)
    out = _out_dir(args, None)
    if out is not None and ds.w > 0:
        from .plotting import emit_plotdata

        for kind in ("dual-fields", "dual-profiles"):
            for p in emit_plotdata(bundle, kind, out):
                say(f"wrote {p}")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_check(args, say) -> int:
    results = run_checks(args.seed or 0)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:{width}s}  {r.seconds:6.2f}s  {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="random seed for multi-start and checks")
    common.add_argument("--format", choices=("csv", "json"), help="restrict written outputs")
    common.add_argument("--quiet", action="store_true", help="print only failures")

    with_config = argparse.ArgumentParser(add_help=False, parents=[common])
    with_config.add_argument("--config", required=True, help="TOML experiment file")

    parser = argparse.ArgumentParser(
        prog="fiberalloc",
        description="Energy versus promptness allocation on multirotor wrench fibers.",
        epilog=SCHEMA_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    kw = dict(epilog=SCHEMA_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub.add_parser("solve", parents=[with_config], help="both optima for each task wrench", **kw)
    sub.add_parser("pareto", parents=[with_config], help="Pareto front for each task wrench", **kw)
    sub.add_parser("sweep", parents=[with_config], help="wrench-component sweep with tables and figures", **kw)
    dual = sub.add_parser("dual", parents=[common], help="two-actuator reference tables and figures")
    dual.add_argument("--a1", type=float, default=1.0)
    dual.add_argument("--a2", type=float, default=1.0)
    dual.add_argument("--c1", type=float, default=1.0)
    dual.add_argument("--c2", type=float, default=1.0)
    dual.add_argument("--w", type=float, default=1.0)
    dual.add_argument("--box", type=float, default=None, help="symmetric effort bound for the promptness table")
    dual.add_argument("--t-max", type=float, default=4.0, help="antagonistic profile length without a box")
    dual.add_argument("--grid-n", type=int, default=100_000)
    sub.add_parser("check", parents=[common], help="run the invariant suite")
    return parser


COMMANDS = {"solve": cmd_solve, "pareto": cmd_pareto, "sweep": cmd_sweep, "dual": cmd_dual, "check": cmd_check}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    say = _Printer(args.quiet)
    try:
        return COMMANDS[args.command](args, say)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        if isinstance(exc, OSError) and getattr(args, "config", None) and not Path(args.config).exists():
            print(f"cannot read config: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
