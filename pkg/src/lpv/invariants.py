"""Per-event structural invariants of both list families, checked by trace replay.

Only writes and lock operations change the heap, so the state predicates are
re-evaluated after those events alone.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import hoh, lazy
from .model import HEAD, CorruptHeap, Execution, Heap, abds_of


@dataclass(frozen=True)
class Violation:
    check: str
    seq: int
    detail: str


CHECKS = (
    "sorted",
    "unmarked-reachable",
    "unique-keys",
    "marked-monotone",
    "marked-next-frozen",
    "lock-coupling",
    "abds-change-lines",
    "chain",
)


def _chain_checks(heap: Heap, family: str, seq: int, out: list[Violation]) -> None:
    try:
        chain = heap.chain()
    except CorruptHeap as exc:
        out.append(Violation("chain", seq, str(exc)))
        return
    val, nxt, marked = heap.val, heap.nxt, heap.marked
    for n in range(len(val)):
        m = nxt[n]
        if m is not None and not val[n] < val[m]:
            out.append(Violation("sorted", seq, f"node {n} ({val[n]}) -> {m} ({val[m]})"))
    keys = [val[n] for n in chain[1:-1] if family == "hoh" or not marked[n]]
    if len(keys) != len(set(keys)):
        out.append(Violation("unique-keys", seq, f"keys {keys}"))
    if family == "lazy":
        on_chain = set(chain)
        public = {HEAD} | {m for m in nxt if m is not None}
        for n in public:
            if not marked[n] and n not in on_chain:
                out.append(Violation("unmarked-reachable", seq, f"unmarked public node {n} ({val[n]}) unreachable"))


def check_structure(execution: Execution) -> list[Violation]:
    """Every violated invariant, in event order."""
    family = execution.family
    abds_lines = lazy.ABDS_LINES if family == "lazy" else hoh.ABDS_LINES
    heap = Heap.initial(execution.initial)
    held: dict[int, list[int]] = {}
    out: list[Violation] = []
    current = abds_of(heap, family)
    _chain_checks(heap, family, -1, out)
    for e in execution.events:
        k = e.kind
        if k == "write":
            fld = e.field
            if fld == "marked" and heap.marked[e.node] and not e.value:
                out.append(Violation("marked-monotone", e.seq, f"node {e.node} unmarked"))
            if fld == "next" and e.node < len(heap.marked) and heap.marked[e.node] and heap.nxt[e.node] != e.value:
                out.append(Violation("marked-next-frozen", e.seq, f"next of marked node {e.node} changed"))
            heap.apply_write(e.node, fld, e.value)
            _chain_checks(heap, family, e.seq, out)
            try:
                after = abds_of(heap, family)
            except CorruptHeap:
                continue
            if after != current and e.line not in abds_lines:
                out.append(Violation("abds-change-lines", e.seq, f"line {e.line} changed {sorted(current)} -> {sorted(after)}"))
            current = after
        elif k == "lock":
            mine = held.setdefault(e.thread, [])
            if family == "hoh":
                if len(mine) > 1:
                    out.append(Violation("lock-coupling", e.seq, f"thread {e.thread} takes a third lock"))
                elif mine:
                    a = mine[0]
                    if heap.nxt[a] != e.node or not heap.val[a] < heap.val[e.node]:
                        out.append(Violation("lock-coupling", e.seq, f"locks {a} and {e.node} not adjacent"))
            mine.append(e.node)
            heap.owner[e.node] = e.thread
        elif k == "unlock":
            held.get(e.thread, []).remove(e.node)
            heap.owner[e.node] = None
    return out
