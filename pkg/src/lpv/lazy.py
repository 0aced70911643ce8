"""Lazy list: optimistic traversal, lock-and-validate updates, marked deletion.

Each pseudocode line is one atomic event.  The compound conditions of
Validate and of the final Contains test are split into separate reads in
textual order and short-circuit like ``&&``/``||``.  Reading the ``Head``
reference itself is not an event: the sentinel is immutable.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

from .machine import Action, HeapFault, Livelock, Machine
from .model import HEAD, Execution

(INV, LOC_NEXT, LOC_VAL, LOC_ADV, LOCK1, LOCK2, VAL1, VAL2, VAL3, RETRY1, RETRY2,
 ADD3, ADD4, ADD5, ADD6, ADD7, ADD8, ADD7_EARLY,
 REM3, REM4, REM5, REM6, REM7,
 CON3, CON4, CON6V, CON6M, RESP) = range(28)

LP_LINES = frozenset({"add3", "add6", "rem3", "rem4", "con6v", "con6m"})
PRIVATE_LINES = frozenset({"add4", "add5"})
# the only lines allowed to change the abstract set
ABDS_LINES = frozenset({"add6", "rem4"})


class LazyMachine(Machine):
    __slots__ = ()

    family = "lazy"
    lp_lines = LP_LINES
    private_lines = PRIVATE_LINES

    def next_action(self) -> Action:
        pc = self.pc
        if pc == LOC_VAL:
            return Action("read", self.n2, "val", line="loc5")
        if pc == LOC_ADV:
            return Action("read", self.n2, "next", line="loc7")
        if pc == CON3:
            return Action("read", self.n, "val", line="con3")
        if pc == CON4:
            return Action("read", self.n, "next", line="con4")
        if pc == INV:
            return Action("inv")
        if pc == LOC_NEXT:
            return Action("read", self.n1, "next", line="loc4")
        if pc == LOCK1:
            return Action("lock", self.n1, line="loc9")
        if pc == LOCK2:
            return Action("lock", self.n2, line="loc10")
        if pc == VAL1:
            return Action("read", self.n1, "marked", line="validate1")
        if pc == VAL2:
            return Action("read", self.n2, "marked", line="validate2")
        if pc == VAL3:
            return Action("read", self.n1, "next", line="validate3")
        if pc == RETRY1:
            return Action("unlock", self.n1, line="locrel1")
        if pc == RETRY2:
            return Action("unlock", self.n2, line="locrel2")
        if pc == ADD3:
            return Action("read", self.n2, "val", line="add3")
        if pc == ADD4:
            return Action("write", None, "val", self.key, line="add4")
        if pc == ADD5:
            return Action("write", self.n3, "next", self.n2, line="add5")
        if pc == ADD6:
            return Action("write", self.n1, "next", self.n3, line="add6")
        if pc == ADD7 or pc == ADD7_EARLY:
            return Action("unlock", self.n1, line="add7")
        if pc == ADD8:
            return Action("unlock", self.n2, line="add8")
        if pc == REM3:
            return Action("read", self.n2, "val", line="rem3")
        if pc == REM4:
            return Action("write", self.n2, "marked", True, line="rem4")
        if pc == REM5:
            return Action("write", self.n1, "next", src=self.n2, line="rem5")
        if pc == REM6:
            return Action("unlock", self.n1, line="rem6")
        if pc == REM7:
            return Action("unlock", self.n2, line="rem7")
        if pc == CON6V:
            return Action("read", self.n, "val", line="con6v")
        if pc == CON6M:
            return Action("read", self.n, "marked", line="con6m")
        if pc == RESP:
            return Action("resp")
        raise RuntimeError(f"machine {self.mid} has no next action (pc={pc})")

    def _after_locate(self) -> None:
        self.pc = ADD3 if self.op == "add" else REM3

    def _retry(self) -> None:
        self.pc = RETRY1

    def advance(self, value, node) -> None:
        pc = self.pc
        key = self.key
        if pc == INV:
            if self.op == "contains":
                self.n = HEAD
                self.pc = CON3
            else:
                self.n1 = HEAD
                self.pc = LOC_NEXT
        elif pc == LOC_NEXT:
            self.n2 = value
            self.pc = LOC_VAL
        elif pc == LOC_VAL:
            if value < key:
                self.n1 = self.n2
                self.pc = LOC_ADV
            else:
                self.pc = LOCK1
        elif pc == LOC_ADV:
            if value is None:
                raise HeapFault(f"method {self.mid} followed a null next")
            self.n2 = value
            self.pc = LOC_VAL
        elif pc == LOCK1:
            self.pc = LOCK2
        elif pc == LOCK2:
            self.pc = VAL1
        elif pc == VAL1:
            self.pc = VAL2 if value is False else RETRY1
        elif pc == VAL2:
            self.pc = VAL3 if value is False else RETRY1
        elif pc == VAL3:
            if value == self.n2:
                self._after_locate()
            else:
                self.pc = RETRY1
        elif pc == RETRY1:
            self.pc = RETRY2
        elif pc == RETRY2:
            self.retries += 1
            if self.retries > self.retry_cap:
                raise Livelock(f"method {self.mid} exceeded {self.retry_cap} Locate retries")
            self.n1 = HEAD
            self.pc = LOC_NEXT
        elif pc == ADD3:
            if value != key:
                self.pc = ADD4
            else:
                self.result = False
                self.pc = ADD7
        elif pc == ADD4:
            self.n3 = node
            self.pc = ADD5
        elif pc == ADD5:
            self.pc = ADD7_EARLY if self.mutation == "add-unlock-early" else ADD6
        elif pc == ADD6:
            self.result = True
            self.pc = ADD8 if self.mutation == "add-unlock-early" else ADD7
        elif pc == ADD7:
            self.pc = ADD8
        elif pc == ADD7_EARLY:
            self.pc = ADD6
        elif pc == ADD8:
            self.pc = RESP
        elif pc == REM3:
            if value == key:
                self.pc = REM5 if self.mutation == "remove-skip-mark" else REM4
            else:
                self.result = False
                self.pc = REM6
        elif pc == REM4:
            self.pc = REM5
        elif pc == REM5:
            self.result = True
            self.pc = REM6
        elif pc == REM6:
            self.pc = REM7
        elif pc == REM7:
            self.pc = RESP
        elif pc == CON3:
            self.pc = CON4 if value < key else CON6V
        elif pc == CON4:
            if value is None:
                raise HeapFault(f"method {self.mid} followed a null next")
            self.n = value
            self.pc = CON3
        elif pc == CON6V:
            if value != key:
                self.result = False
                self.pc = RESP
            else:
                self.pc = CON6M
        elif pc == CON6M:
            self.result = not value
            self.pc = RESP
        elif pc == RESP:
            self.pc = self.DONE
        else:
            raise RuntimeError(f"bad pc {pc}")


@dataclass(frozen=True)
class LpCandidate:
    """A syntactic LP match.  For ``dummy`` candidates ``seq`` is the anchor write."""

    rule: str
    seq: int
    dummy: bool = False


def candidate_lp_markers(execution: Execution) -> dict[int, list[LpCandidate]]:
    """Every event of each completed method that matches an LP rule pattern.

    Contains(k, false) additionally gets one dummy candidate per concurrent
    Add(k, true) whose ``add6`` write falls between the Contains invocation
    and its failing read.
    """
    methods = execution.methods()
    done = {m.id: m for m in methods.values() if m.complete and m.id not in execution.dropped}
    out: dict[int, list[LpCandidate]] = {mid: [] for mid in done}
    add_writes: dict[int, list[tuple[int, int]]] = {}
    final_read: dict[int, tuple[int, str]] = {}
    for e in execution.events:
        m = done.get(e.method)
        if m is None:
            continue
        line = e.line
        if line == "add6" and m.result:
            out[m.id].append(LpCandidate("add-true", e.seq))
            add_writes.setdefault(m.key, []).append((e.seq, m.id))
        elif line == "add3" and m.result is False:
            out[m.id].append(LpCandidate("add-false", e.seq))
        elif line == "rem4" and m.result:
            out[m.id].append(LpCandidate("remove-true", e.seq))
        elif line == "rem3" and m.result is False:
            out[m.id].append(LpCandidate("remove-false", e.seq))
        elif line == "con6m":
            if m.result:
                out[m.id].append(LpCandidate("contains-true", e.seq))
            elif e.value:
                final_read[m.id] = (e.seq, "contains-false-marked")
        elif line == "con6v" and m.result is False and e.value != m.key:
            final_read[m.id] = (e.seq, "contains-false-val")
    for mid, (seq, rule) in final_read.items():
        m = done[mid]
        out[mid].append(LpCandidate(rule, seq))
        writes = add_writes.get(m.key, [])
        lo = bisect.bisect_right(writes, (m.inv_seq, 1 << 62))
        for wseq, amid in writes[lo:]:
            if wseq >= seq:
                break
            if done[amid].thread != m.thread:
                out[mid].append(LpCandidate("contains-false-dummy", wseq, dummy=True))
    return out
