"""Run results and their JSON report."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO

from .checker import Analysis
from .oracle import CapExceeded, is_linearizable
from .model import derive_history


@dataclass
class ScheduleResult:
    schedule_id: int
    status: str
    detail: dict = field(default_factory=dict)
    schedule: tuple[int, ...] | None = None
    lp_order: list[str] | None = None
    dummies: list[dict] = field(default_factory=list)
    oracle: bool | None = None  # None: not cross-checked or over the method cap

    def to_json(self, verbose: bool) -> dict:
        out: dict = {"schedule_id": self.schedule_id, "status": self.status}
        if self.detail:
            out["detail"] = self.detail
        if self.oracle is not None:
            out["oracle_linearizable"] = self.oracle
        if self.dummies:
            out["dummy_anchors"] = self.dummies
        if verbose or self.status != "pass":
            if self.lp_order is not None:
                out["lp_order"] = self.lp_order
            if self.schedule is not None:
                out["schedule"] = list(self.schedule)
        return out


@dataclass
class RunResults:
    workload: str
    mode: str
    results: list[ScheduleResult] = field(default_factory=list)
    stats: dict | None = None
    cross_check: bool = False
    errors: list[str] = field(default_factory=list)

    @property
    def failures(self) -> int:
        return sum(r.status != "pass" for r in self.results)

    @property
    def disagreements(self) -> int:
        """Schedules where the oracle and the LP checker disagree."""
        return sum(r.oracle is not None and r.oracle != (r.status == "pass") for r in self.results)

    @property
    def non_linearizable(self) -> int:
        return sum(r.oracle is False for r in self.results)

    @property
    def ok(self) -> bool:
        if self.errors or self.failures:
            return False
        return not (self.cross_check and self.non_linearizable)

    def summary(self) -> dict:
        by_status: dict[str, int] = {}
        for r in self.results:
            by_status[r.status] = by_status.get(r.status, 0) + 1
        out: dict = {
            "schedules": len(self.results),
            "pass": by_status.get("pass", 0),
            "failures": self.failures,
            "by_status": dict(sorted(by_status.items())),
        }
        if self.cross_check:
            out["oracle_checked"] = sum(r.oracle is not None for r in self.results)
            out["oracle_non_linearizable"] = self.non_linearizable
            out["disagreements"] = self.disagreements
        if self.stats is not None:
            out["engine"] = self.stats
        if self.errors:
            out["errors"] = self.errors
        out["ok"] = self.ok
        return out


def schedule_result(schedule_id: int, analysis: Analysis, cross_check: bool = False) -> ScheduleResult:
    ex = analysis.execution
    a = analysis.assignment
    res = ScheduleResult(schedule_id, analysis.verdict.status, analysis.verdict.detail, ex.schedule)
    if a is not None:
        res.lp_order = [a.methods[m].label() for m in a.order() if m in a.methods]
        if a.dummy_anchor:
            by_seq = {e.seq: e for e in ex.events}
            res.dummies = [{"method": m, "anchor_seq": s, "anchor_method": by_seq[s].method}
                           for m, s in sorted(a.dummy_anchor.items())]
    if cross_check:
        try:
            res.oracle = is_linearizable(derive_history(ex), ex.initial).linearizable
        except CapExceeded:
            res.oracle = None
    return res


def report_json(run: RunResults, verbose: bool = True) -> dict:
    results = sorted(run.results, key=lambda r: r.schedule_id)
    return {
        "workload": run.workload,
        "mode": run.mode,
        "schedules_checked": len(results),
        "verdicts": [r.to_json(verbose) for r in results],
        "summary": run.summary(),
    }


def emit_report(run: RunResults, fp: IO[str], verbose: bool = True) -> None:
    json.dump(report_json(run, verbose), fp, indent=1)
    fp.write("\n")


def exit_code(report: dict) -> int:
    """0 when the report records a clean run, 1 otherwise."""
    return 0 if report["summary"]["ok"] else 1
