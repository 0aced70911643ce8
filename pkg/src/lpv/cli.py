"""Command-line entry point: ``lpv check --workload FILE --mode MODE ...``."""

from __future__ import annotations

import argparse
import random
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .checker import analyze
from .engine import REDUCTIONS, StopExploration, Workload, random_execution, run_exhaustive
from .machine import MUTATIONS, Livelock
from .report import RunResults, emit_report, exit_code, report_json, schedule_result

MODES = ("exhaustive", "random", "stress")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    workload: Path
    mode: str
    seed: int | None = None
    count: int | None = None
    cross_check: bool = False
    out: Path | None = None
    fail_fast: bool = False
    mutation: str | None = None
    truncate_after: int | None = None
    duration: float = 1.0
    reduction: str | None = None

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise UsageError(f"unknown mode {self.mode!r}")
        if self.mode == "exhaustive" and (self.seed is not None or self.count is not None):
            raise UsageError("--mode exhaustive takes neither --seed nor --count")
        if self.mode == "random" and (self.seed is None or self.count is None):
            raise UsageError("--mode random needs both --seed and --count")
        if self.seed is not None and not 0 <= self.seed < 2**64:
            raise UsageError("--seed must be an unsigned 64-bit integer")
        if self.count is not None and self.count < 0:
            raise UsageError("--count must be non-negative")
        if self.truncate_after is not None and self.truncate_after < 0:
            raise UsageError("--truncate-after must be non-negative")
        if self.duration <= 0:
            raise UsageError("--duration must be positive")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lpv", description="LP-based linearizability checking of concurrent list sets.")
    p.add_argument("--version", action="version", version=f"lpv {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    c = sub.add_parser("check", help="run a workload and check every produced execution")
    c.add_argument("--workload", required=True, type=Path)
    c.add_argument("--mode", required=True, choices=MODES)
    c.add_argument("--seed", type=int)
    c.add_argument("--count", type=int)
    c.add_argument("--cross-check", action="store_true", help="also run the brute-force oracle")
    c.add_argument("--mutation", choices=MUTATIONS)
    c.add_argument("--truncate-after", type=int)
    c.add_argument("--out", type=Path, help="report path (default: stdout)")
    c.add_argument("--fail-fast", action="store_true")
    c.add_argument("--duration", type=float, default=1.0, help="seconds per stress run")
    c.add_argument("--reduction", choices=REDUCTIONS, help="exhaustive search reduction")
    return p


def load_workload(cfg: RunConfig) -> Workload:
    try:
        wl = Workload.load(cfg.workload)
    except OSError as exc:
        raise UsageError(f"cannot read workload: {exc}") from exc
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"bad workload {cfg.workload}: {exc}") from exc
    changes: dict = {}
    if cfg.mutation is not None:
        changes["mutation"] = cfg.mutation
    if cfg.truncate_after is not None:
        changes["truncate_after"] = cfg.truncate_after
    if cfg.reduction is not None:
        changes["reduction"] = cfg.reduction
    return wl.replace(**changes) if changes else wl


def run(cfg: RunConfig, wl: Workload) -> RunResults:
    name = wl.name or cfg.workload.stem
    run = RunResults(name, cfg.mode, cross_check=cfg.cross_check)

    def record(ex) -> bool:
        res = schedule_result(len(run.results), analyze(ex), cfg.cross_check)
        run.results.append(res)
        return res.status != "pass" or (cfg.cross_check and res.oracle is False)

    if cfg.mode == "exhaustive":
        def visit(ex) -> None:
            if record(ex) and cfg.fail_fast:
                raise StopExploration

        stats = run_exhaustive(wl, visit)
        run.stats = stats.to_json()
    elif cfg.mode == "random":
        rng = random.Random(cfg.seed)
        for _ in range(cfg.count):
            try:
                ex = random_execution(wl, rng)
            except Livelock as exc:
                run.errors.append(f"schedule {len(run.results)}: {exc}")
                break
            if record(ex) and cfg.fail_fast:
                break
    else:
        from .native import run_native_stress

        seed = cfg.seed if cfg.seed is not None else 0
        for i in range(cfg.count if cfg.count is not None else 1):
            try:
                ex = run_native_stress(wl, seed + i, cfg.duration)
            except Livelock as exc:
                run.errors.append(f"stress run {i}: {exc}")
                break
            if record(ex) and cfg.fail_fast:
                break
    return run


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        cfg = RunConfig(ns.workload, ns.mode, ns.seed, ns.count, ns.cross_check, ns.out, ns.fail_fast,
                        ns.mutation, ns.truncate_after, ns.duration, ns.reduction)
        wl = load_workload(cfg)
    except UsageError as exc:
        print(f"lpv: error: {exc}", file=sys.stderr)
        return 2
    results = run(cfg, wl)
    report = report_json(results)
    try:
        if cfg.out is None:
            emit_report(results, sys.stdout)
        else:
            with open(cfg.out, "w") as fp:
                emit_report(results, fp)
    except OSError as exc:
        print(f"lpv: error: cannot write report: {exc}", file=sys.stderr)
        return 2
    s = report["summary"]
    print(f"{report['workload']}: {s['schedules']} schedules, {s['failures']} failing"
          + (f", {s['disagreements']} oracle disagreements" if cfg.cross_check else ""), file=sys.stderr)
    return exit_code(report)


if __name__ == "__main__":
    sys.exit(main())
