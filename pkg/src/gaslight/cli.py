"""Command-line front end.

    gaslight run --system case.sys --scenarios scen.csv --policy stoch-coup --out out/
    gaslight compare --system case.sys --scenarios scen.csv --grid full --out grid/
    gaslight replay out/manifest.json

Exit status: 0 optimal, 1 other solver failure, 2 infeasible, 3 gap limit,
64 bad usage, 66 unreadable or invalid input file.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import lp
from .experiments import linepack_ratio, ordering_checks, run_experiment_suite
from .models import ModelError
from .policies import StageError, run_policy
from .reports import read_manifest, write_matrix, write_run, manifest
from .system import SystemFileError, ValidationError, load_scenarios, load_system

EX_OK = 0
EX_FAIL = 1
EX_INFEASIBLE = 2
EX_GAP = 3
EX_USAGE = 64
EX_NOINPUT = 66

POLICIES = ("seq-dec", "seq-dec-up", "seq-dec-down", "seq-coup", "stoch-coup")

log = logging.getLogger("gaslight")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


def _positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gaslight", description="Clear coupled electricity and gas markets.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--system", required=True, type=Path)
        sp.add_argument("--scenarios", required=True, type=Path)
        sp.add_argument("--out", type=Path, default=Path("gaslight-out"))
        sp.add_argument("--gap", type=_positive, help="relative MIP gap")
        sp.add_argument("--oa-points", type=int, help="pressure points per flow direction")

    run = sub.add_parser("run", help="clear one design and write its reports")
    common(run)
    run.add_argument("--policy", required=True, choices=POLICIES)
    run.add_argument("--steady-state", action="store_true")
    run.add_argument("--mis-factor", type=_positive)
    run.add_argument("--linepack-scale", type=_positive)

    cmp_ = sub.add_parser("compare", help="run the experiment grid")
    common(cmp_)
    cmp_.add_argument("--grid", choices=("full", "paper"), default="full")

    rep = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    rep.add_argument("manifest", type=Path)
    rep.add_argument("--out", type=Path, help="write to another directory")
    return p


def _overrides(args) -> dict:
    cfg = {}
    if args.gap is not None:
        cfg["mip_gap"] = args.gap
    if args.oa_points is not None:
        if args.oa_points < 2:
            raise UsageError("--oa-points must be >= 2")
        cfg["oa_points"] = args.oa_points
    if getattr(args, "steady_state", False):
        cfg["steady_state"] = True
    if getattr(args, "mis_factor", None) is not None:
        cfg["mis_factor"] = args.mis_factor
    if getattr(args, "linepack_scale", None) is not None:
        cfg["linepack_scale"] = args.linepack_scale
    return cfg


def _load(args, cfg: dict):
    system = load_system(args.system)
    if cfg:
        system = system.with_config(**cfg)
    return system, load_scenarios(args.scenarios, system)


def cmd_run(args, argv) -> int:
    cfg = _overrides(args)
    system, scenarios = _load(args, cfg)
    run = run_policy(system, scenarios, args.policy)
    meta = manifest("run", argv, system=str(args.system), scenarios=str(args.scenarios), policy=run.label,
                    overrides=cfg, out=str(args.out), big_m=list(run.big_m) if run.big_m else None,
                    flagged=run.flagged)
    write_run(args.out, run, system, scenarios, meta)
    rep = run.report
    print(f"{run.label}: total {rep.total:.2f}  day-ahead {rep.day_ahead:.2f}  balancing {rep.balancing:.2f}")
    if run.flagged:
        print(f"curtailment loop did not settle in scenarios {', '.join(run.flagged)}", file=sys.stderr)
    return EX_OK


def cmd_compare(args, argv) -> int:
    cfg = _overrides(args)
    system, scenarios = _load(args, cfg)
    cells = run_experiment_suite(system, scenarios, args.grid)
    checks = ordering_checks(cells)
    ratio = linepack_ratio(cells)
    meta = manifest("compare", argv, system=str(args.system), scenarios=str(args.scenarios), grid=args.grid,
                    overrides=cfg, out=str(args.out))
    write_matrix(args.out, cells, checks, ratio, meta)
    for c in cells:
        shown = f"{c.report.total:14.2f}" if c.ok else f"failed: {c.error}"
        print(f"{c.policy:12s} {c.variant:22s} {shown}")
    for ch in checks:
        print(f"{ch.name}: {'PASS' if ch.passed else 'FAIL' if ch.passed is False else 'SKIP'}")
    return EX_OK if any(c.ok for c in cells) else EX_FAIL


def cmd_replay(args, argv) -> int:
    try:
        data = read_manifest(args.manifest)
        old = list(data["argv"])
    except (OSError, ValueError, KeyError) as exc:
        print(f"gaslight: cannot read manifest {args.manifest}: {exc}", file=sys.stderr)
        return EX_NOINPUT
    if args.out is not None:
        if "--out" in old:
            i = old.index("--out")
            old[i + 1] = str(args.out)
        else:
            old += ["--out", str(args.out)]
    return main(old)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": cmd_run, "compare": cmd_compare, "replay": cmd_replay}[args.command]
    try:
        return handler(args, argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"gaslight: error: {exc}", file=sys.stderr)
        return EX_USAGE
    except (SystemFileError, ValidationError, OSError) as exc:
        print(f"gaslight: {exc}", file=sys.stderr)
        return EX_NOINPUT
    except StageError as exc:
        print(f"gaslight: {exc}", file=sys.stderr)
        return {lp.INFEASIBLE: EX_INFEASIBLE, lp.GAP_LIMIT: EX_GAP}.get(exc.status, EX_FAIL)
    except (lp.SolverError, ModelError) as exc:
        print(f"gaslight: {exc}", file=sys.stderr)
        return EX_FAIL


if __name__ == "__main__":
    sys.exit(main())
