from __future__ import annotations

from pathlib import Path

import pytest

from lpv.engine import Workload
from lpv.seqspec import SeqOp

WORKLOADS = Path(__file__).resolve().parent.parent / "workloads"

# the 2 threads x 2 ops fixtures over keys {1, 2}
GRID = ("add-remove", "churn", "stale-contains", "remove-race", "double-add", "double-remove", "readers", "full")


def load(name: str) -> Workload:
    return Workload.load(WORKLOADS / f"{name}.json")


def grid(family: str) -> list[Workload]:
    return [load(f"{family}-{name}") for name in GRID]


def make(family: str, *programs, initial=(), **kw) -> Workload:
    """``make("lazy", [("add", 1)], [("contains", 1)])``"""
    threads = tuple(tuple(SeqOp(op, key) for op, key in prog) for prog in programs)
    return Workload(family=family, threads=threads, initial=tuple(initial), **kw)


@pytest.fixture
def lpcase() -> Workload:
    return load("fig-lpcase")


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, msg = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {msg}")
