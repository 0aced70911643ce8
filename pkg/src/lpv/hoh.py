"""Hand-over-hand (lock coupling) list.

HoHLocate never restarts: it holds the predecessor's lock while acquiring the
successor's, so the pair it returns is adjacent and both are locked.
"""

from __future__ import annotations

from .lazy import LpCandidate
from .machine import Action, HeapFault, Machine
from .model import HEAD, Execution

(INV, LOCK_HEAD, READ_FIRST, LOCK_FIRST, LOOP_VAL, REL_PRED, ADVANCE, LOCK_NEXT,
 ADD3, ADD4, ADD5, ADD6, ADD_R1, ADD_R2, ADD_R1_EARLY,
 REM3, REM5, REM_R1, REM_R2,
 CON3, CON_R1, CON_R2, RESP) = range(23)

LP_LINES = frozenset({"hadd3", "hadd6", "hrem3", "hrem5", "hcon3"})
PRIVATE_LINES = frozenset({"hadd4", "hadd5"})
ABDS_LINES = frozenset({"hadd6", "hrem5"})

_BODY = {"add": ADD3, "remove": REM3, "contains": CON3}


class HoHMachine(Machine):
    __slots__ = ()

    family = "hoh"
    lp_lines = LP_LINES
    private_lines = PRIVATE_LINES

    def next_action(self) -> Action:
        pc = self.pc
        if pc == LOOP_VAL:
            return Action("read", self.n2, "val", line="hloc6")
        if pc == REL_PRED:
            return Action("unlock", self.n1, line="hloc7")
        if pc == ADVANCE:
            return Action("read", self.n2, "next", line="hloc9")
        if pc == LOCK_NEXT:
            return Action("lock", self.n2, line="hloc10")
        if pc == INV:
            return Action("inv")
        if pc == LOCK_HEAD:
            return Action("lock", HEAD, line="hloc2")
        if pc == READ_FIRST:
            return Action("read", HEAD, "next", line="hloc4")
        if pc == LOCK_FIRST:
            return Action("lock", self.n2, line="hloc5")
        if pc == ADD3:
            return Action("read", self.n2, "val", line="hadd3")
        if pc == ADD4:
            return Action("write", None, "val", self.key, line="hadd4")
        if pc == ADD5:
            return Action("write", self.n3, "next", self.n2, line="hadd5")
        if pc == ADD6:
            return Action("write", self.n1, "next", self.n3, line="hadd6")
        if pc == ADD_R1 or pc == ADD_R1_EARLY:
            return Action("unlock", self.n1, line="hadd7")
        if pc == ADD_R2:
            return Action("unlock", self.n2, line="hadd8")
        if pc == REM3:
            return Action("read", self.n2, "val", line="hrem3")
        if pc == REM5:
            return Action("write", self.n1, "next", src=self.n2, line="hrem5")
        if pc == REM_R1:
            return Action("unlock", self.n1, line="hrem6")
        if pc == REM_R2:
            return Action("unlock", self.n2, line="hrem7")
        if pc == CON3:
            return Action("read", self.n2, "val", line="hcon3")
        if pc == CON_R1:
            return Action("unlock", self.n1, line="hcon6")
        if pc == CON_R2:
            return Action("unlock", self.n2, line="hcon7")
        if pc == RESP:
            return Action("resp")
        raise RuntimeError(f"machine {self.mid} has no next action (pc={pc})")

    def advance(self, value, node) -> None:
        pc = self.pc
        key = self.key
        if pc == INV:
            self.pc = LOCK_HEAD
        elif pc == LOCK_HEAD:
            self.n1 = HEAD
            self.pc = READ_FIRST
        elif pc == READ_FIRST:
            self.n2 = value
            self.pc = LOCK_FIRST
        elif pc == LOCK_FIRST or pc == LOCK_NEXT:
            self.pc = LOOP_VAL
        elif pc == LOOP_VAL:
            self.pc = REL_PRED if value < key else _BODY[self.op]
        elif pc == REL_PRED:
            self.n1 = self.n2
            self.pc = ADVANCE
        elif pc == ADVANCE:
            if value is None:
                raise HeapFault(f"method {self.mid} followed a null next")
            self.n2 = value
            self.pc = LOCK_NEXT
        elif pc == ADD3:
            if value != key:
                self.pc = ADD4
            else:
                self.result = False
                self.pc = ADD_R1
        elif pc == ADD4:
            self.n3 = node
            self.pc = ADD5
        elif pc == ADD5:
            self.pc = ADD_R1_EARLY if self.mutation == "add-unlock-early" else ADD6
        elif pc == ADD6:
            self.result = True
            self.pc = ADD_R2 if self.mutation == "add-unlock-early" else ADD_R1
        elif pc == ADD_R1:
            self.pc = ADD_R2
        elif pc == ADD_R1_EARLY:
            self.pc = ADD6
        elif pc == ADD_R2:
            self.pc = RESP
        elif pc == REM3:
            if value == key:
                self.pc = REM5
            else:
                self.result = False
                self.pc = REM_R1
        elif pc == REM5:
            self.result = True
            self.pc = REM_R1
        elif pc == REM_R1:
            self.pc = REM_R2
        elif pc == REM_R2:
            self.pc = RESP
        elif pc == CON3:
            self.result = value == key
            self.pc = CON_R1
        elif pc == CON_R1:
            self.pc = CON_R2
        elif pc == CON_R2:
            self.pc = RESP
        elif pc == RESP:
            self.pc = self.DONE
        else:
            raise RuntimeError(f"bad pc {pc}")


_RULES = {
    ("hadd6", True): "add-true",
    ("hadd3", False): "add-false",
    ("hrem5", True): "remove-true",
    ("hrem3", False): "remove-false",
    ("hcon3", True): "contains-true",
    ("hcon3", False): "contains-false",
}


def candidate_lp_markers(execution: Execution) -> dict[int, list[LpCandidate]]:
    """The single LP match of each completed method; all HoH LPs are in-method."""
    methods = execution.methods()
    done = {m.id: m for m in methods.values() if m.complete and m.id not in execution.dropped}
    out: dict[int, list[LpCandidate]] = {mid: [] for mid in done}
    for e in execution.events:
        m = done.get(e.method)
        if m is None or e.line is None:
            continue
        rule = _RULES.get((e.line, m.result))
        if rule is not None:
            out[m.id].append(LpCandidate(rule, e.seq))
    return out
