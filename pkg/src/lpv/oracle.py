"""Brute-force linearizability decision for small complete histories.

Depth-first search over method orders that extend the real-time order,
replaying each candidate prefix on the sequential set.  A (done-set, state)
pair that failed once is never expanded again.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import kernels
from .model import History

DEFAULT_METHOD_CAP = 8

_OPCODE = {"add": 0, "remove": 1, "contains": 2}


class CapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    linearizable: bool
    witness: tuple[int, ...] | None
    explored: int


def is_linearizable(history: History, initial=(), cap: int = DEFAULT_METHOD_CAP) -> OracleResult:
    methods = sorted(history.methods, key=lambda m: m.inv_seq)
    if any(not m.complete for m in methods):
        raise ValueError("history has pending methods; complete the execution first")
    n = len(methods)
    if n > cap:
        raise CapExceeded(f"{n} methods exceeds the oracle cap of {cap}")
    if n == 0:
        return OracleResult(True, (), 0)
    # keys mapped to bit positions so states are plain ints
    keys = sorted({m.key for m in methods} | set(initial))
    bit = {k: i for i, k in enumerate(keys)}
    state = 0
    for k in initial:
        state |= 1 << bit[k]
    ops = [_OPCODE[m.kind] for m in methods]
    kbits = [bit[m.key] for m in methods]
    results = [bool(m.result) for m in methods]
    preds = [0] * n
    for i, x in enumerate(methods):
        for j, y in enumerate(methods):
            if i != j and y.resp_seq < x.inv_seq:
                preds[i] |= 1 << j
    found, order, explored = kernels.linearize(ops, kbits, results, preds, state)
    if not found:
        return OracleResult(False, None, explored)
    return OracleResult(True, tuple(methods[i].id for i in order), explored)
