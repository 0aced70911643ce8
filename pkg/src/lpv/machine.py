"""Resumable method machines over the simulated heap.

A machine exposes its next atomic action without performing it
(:meth:`Machine.next_action`), which is what the scheduler needs to decide
enabledness and independence.  :func:`execute` performs the action against a
:class:`~lpv.model.Heap` and returns the emitted event.
"""

from __future__ import annotations

import os

from .model import Event, Heap

DEFAULT_RETRY_CAP = 1000

MUTATIONS = ("contains-lp-naive", "remove-skip-mark", "add-unlock-early")

# cell ids: node * 4 + field code; allocation counter is its own cell
F_VAL, F_NEXT, F_MARKED, F_LOCK = 0, 1, 2, 3
ALLOC_CELL = -1
FIELD_CODE = {"val": F_VAL, "next": F_NEXT, "marked": F_MARKED}

# footprint flags
INV, RESP, LP, SHARED_WRITE = 1, 2, 4, 8


class Livelock(RuntimeError):
    """A lazy Locate retried more often than the configured cap."""


class HeapFault(RuntimeError):
    """Traversal followed a null next pointer."""


def retry_cap_from_env(default: int = DEFAULT_RETRY_CAP) -> int:
    raw = os.environ.get("LPV_RETRY_CAP")
    return int(raw) if raw else default


def check_mutation(name: str | None) -> str | None:
    if name is not None and name not in MUTATIONS:
        raise ValueError(f"unknown mutation {name!r}; expected one of {MUTATIONS}")
    return name


class Action:
    """Description of a machine's next atomic step.

    ``src`` is set for ``write(n1.next, n2.next)``: the written value is read
    from ``src.next`` at execution time.  ``node`` is ``None`` for allocations.
    """

    __slots__ = ("kind", "node", "field", "value", "src", "line")

    def __init__(self, kind, node=None, field=None, value=None, src=None, line=None):
        self.kind = kind
        self.node = node
        self.field = field
        self.value = value
        self.src = src
        self.line = line

    def __repr__(self) -> str:
        return f"Action({self.kind}, node={self.node}, field={self.field}, line={self.line})"


class Machine:
    """Base for one method instance.  Subclasses define the program counter."""

    __slots__ = ("mid", "thread", "op", "key", "pc", "n1", "n2", "n3", "n", "result", "retries",
                 "mutation", "retry_cap")

    family = ""
    lp_lines: frozenset[str] = frozenset()
    private_lines: frozenset[str] = frozenset()
    DONE = -1

    def __init__(self, mid: int, thread: int, op: str, key: int,
                 mutation: str | None = None, retry_cap: int = DEFAULT_RETRY_CAP) -> None:
        self.mid = mid
        self.thread = thread
        self.op = op
        self.key = key
        self.pc = 0
        self.n1 = self.n2 = self.n3 = self.n = None
        self.result: bool | None = None
        self.retries = 0
        self.mutation = mutation
        self.retry_cap = retry_cap

    def copy(self) -> "Machine":
        m = object.__new__(type(self))
        for name in Machine.__slots__:
            setattr(m, name, getattr(self, name))
        return m

    @property
    def done(self) -> bool:
        return self.pc == self.DONE

    def next_action(self) -> Action:
        raise NotImplementedError

    def advance(self, value, node) -> None:
        """Move past the action just executed; ``value`` is what it read or wrote."""
        raise NotImplementedError

    def blocked(self, heap: Heap) -> bool:
        a = self.next_action()
        if a.kind != "lock":
            return False
        owner = heap.owner[a.node]
        return owner is not None and owner != self.thread

    def footprint(self) -> tuple[tuple[int, ...], tuple[int, ...], int]:
        """(cells read, cells written, flags) of the next action."""
        return footprint_of(self.next_action(), self.lp_lines, self.private_lines)


def footprint_of(a: Action, lp_lines, private_lines) -> tuple[tuple[int, ...], tuple[int, ...], int]:
    k = a.kind
    if k == "read":
        flags = LP if a.line in lp_lines else 0
        return (a.node * 4 + FIELD_CODE[a.field],), (), flags
    if k == "write":
        if a.node is None:
            return (), (ALLOC_CELL,), 0
        flags = 0 if a.line in private_lines else SHARED_WRITE
        if a.line in lp_lines:
            flags |= LP
        reads = (a.src * 4 + F_NEXT,) if a.src is not None else ()
        return reads, (a.node * 4 + FIELD_CODE[a.field],), flags
    if k in ("lock", "unlock"):
        return (), (a.node * 4 + F_LOCK,), 0
    if k == "inv":
        return (), (), INV
    return (), (), RESP


def dependent(fa, fb) -> bool:
    """Whether two steps of different threads must keep their relative order.

    Memory conflicts (same cell, at least one write) are always dependent.  On
    top of that, the orders the LP checker and the brute-force oracle observe
    are pinned: ABDS-relevant writes against each other, against LP-candidate
    events and against invocations; responses against invocations.
    """
    ra, wa, xa = fa
    rb, wb, xb = fb
    for c in wa:
        if c in wb or c in rb:
            return True
    for c in wb:
        if c in ra:
            return True
    if xa & SHARED_WRITE:
        if xb & (SHARED_WRITE | LP | INV):
            return True
    if xb & SHARED_WRITE and xa & (LP | INV):
        return True
    if (xa & RESP and xb & INV) or (xa & INV and xb & RESP):
        return True
    return False


def invisible(fp) -> bool:
    """A read of the immutable ``val`` field that no LP rule looks at.

    Such a step commutes with every step of every other thread, so the
    scheduler may take it without branching.
    """
    reads, writes, flags = fp
    return not flags and not writes and len(reads) == 1 and reads[0] % 4 == F_VAL


def execute(machine: Machine, heap: Heap, seq: int) -> Event | None:
    """Perform the machine's next action; ``None`` if it blocks on a lock."""
    a = machine.next_action()
    k = a.kind
    t = machine.thread
    if k == "read":
        fld = a.field
        if fld == "val":
            value = heap.val[a.node]
        elif fld == "next":
            value = heap.nxt[a.node]
        else:
            value = heap.marked[a.node]
        ev = Event(seq, t, machine.mid, "read", a.node, fld, value, a.line)
        machine.advance(value, a.node)
        return ev
    if k == "write":
        fld = a.field
        if a.node is None:
            node = heap.alloc(a.value)
            ev = Event(seq, t, machine.mid, "write", node, "val", a.value, a.line)
            machine.advance(a.value, node)
            return ev
        value = heap.nxt[a.src] if a.src is not None else a.value
        if fld == "next":
            heap.nxt[a.node] = value
        elif fld == "marked":
            heap.marked[a.node] = value
        else:
            raise HeapFault(f"write to immutable field {fld!r}")
        ev = Event(seq, t, machine.mid, "write", a.node, fld, value, a.line)
        machine.advance(value, a.node)
        return ev
    if k == "lock":
        owner = heap.owner[a.node]
        if owner is not None:
            if owner == t:
                raise RuntimeError(f"thread {t} re-acquires lock on node {a.node}")
            return None
        heap.owner[a.node] = t
        ev = Event(seq, t, machine.mid, "lock", a.node, line=a.line)
        machine.advance(None, a.node)
        return ev
    if k == "unlock":
        if heap.owner[a.node] != t:
            raise RuntimeError(f"thread {t} releases node {a.node} it does not hold")
        heap.owner[a.node] = None
        ev = Event(seq, t, machine.mid, "unlock", a.node, line=a.line)
        machine.advance(None, a.node)
        return ev
    if k == "inv":
        ev = Event(seq, t, machine.mid, "inv", op=machine.op, key=machine.key)
        machine.advance(None, None)
        return ev
    ev = Event(seq, t, machine.mid, "resp", op=machine.op, key=machine.key, result=machine.result)
    machine.advance(None, None)
    return ev
