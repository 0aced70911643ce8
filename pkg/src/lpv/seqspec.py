"""Sequential set semantics shared by both list families."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .model import OPS, check_key


@dataclass(frozen=True, slots=True)
class SeqOp:
    kind: str
    key: int

    def __post_init__(self) -> None:
        if self.kind not in OPS:
            raise ValueError(f"unknown op {self.kind!r}")
        check_key(self.key)

    def __str__(self) -> str:
        return f"{self.kind}({self.key})"


@dataclass(frozen=True, slots=True)
class SeqStep:
    op: SeqOp
    result: bool
    pre: frozenset[int]
    post: frozenset[int]


def apply(state: Iterable[int], op: SeqOp) -> SeqStep:
    pre = frozenset(state)
    present = op.key in pre
    if op.kind == "add":
        return SeqStep(op, not present, pre, pre | {op.key})
    if op.kind == "remove":
        return SeqStep(op, present, pre, pre - {op.key})
    return SeqStep(op, present, pre, pre)


def replay(initial: Iterable[int], ops: Iterable[SeqOp]) -> list[SeqStep]:
    steps = []
    state = frozenset(initial)
    for op in ops:
        step = apply(state, op)
        steps.append(step)
        state = step.post
    return steps


def expected_result(state: frozenset[int], kind: str, key: int) -> bool:
    """Result the sequential set returns for ``kind(key)`` from ``state``."""
    present = key in state
    return not present if kind == "add" else present
