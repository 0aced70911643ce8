"""Shared vocabulary: keys, events, executions, histories and the simulated heap.

Everything a checker needs is reconstructible from an :class:`Execution`:
the initial keys fix the starting heap and the ``write`` events replay every
later mutation.  Node ids are allocation ordered; ``HEAD`` is 0, ``TAIL`` is 1
and preloaded keys occupy ids ``2..`` in ascending key order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import IO, Iterable, Iterator, Sequence

KEY_MIN = -(2**63)
KEY_MAX = 2**63 - 1

HEAD = 0
TAIL = 1

FAMILIES = ("lazy", "hoh")
OPS = ("add", "remove", "contains")
FIELDS = ("val", "next", "marked")
KINDS = ("inv", "resp", "read", "write", "lock", "unlock", "dummy")

TRACE_VERSION = 1


class MalformedExecution(ValueError):
    """The event sequence violates per-thread well-formedness."""


class CorruptHeap(RuntimeError):
    """Traversal from head did not terminate at the tail sentinel."""


class InvalidKey(ValueError):
    pass


def check_key(key: int) -> int:
    if isinstance(key, bool) or not isinstance(key, int):
        raise InvalidKey(f"key must be an integer, got {key!r}")
    if not KEY_MIN < key < KEY_MAX:
        raise InvalidKey(f"key {key} collides with a sentinel or is out of range")
    return key


def check_family(family: str) -> str:
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    return family


@dataclass(frozen=True, slots=True)
class Event:
    """One atomic step of an execution.

    ``line`` is the pseudocode label of the step (``add6``, ``con6m`` ...); the
    LP rulebook matches on it.  Dummy events carry ``anchor``, the seq of the
    write they are ordered immediately before.
    """

    seq: int
    thread: int
    method: int
    kind: str
    node: int | None = None
    field: str | None = None
    value: int | bool | None = None
    line: str | None = None
    op: str | None = None
    key: int | None = None
    result: bool | None = None
    anchor: int | None = None

    def to_json(self) -> dict:
        out: dict = {"seq": self.seq, "thread": self.thread, "method": self.method, "kind": self.kind}
        for name in ("node", "field", "value", "line", "op", "key", "result", "anchor"):
            v = getattr(self, name)
            if v is not None:
                out[name] = v
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Event":
        if obj.get("kind") not in KINDS:
            raise MalformedExecution(f"unknown event kind in {obj!r}")
        if obj.get("field") is not None and obj["field"] not in FIELDS:
            raise MalformedExecution(f"unknown field in {obj!r}")
        return cls(**obj)

    def resequenced(self, seq: int, anchor: int | None = None) -> "Event":
        return Event(
            seq, self.thread, self.method, self.kind, self.node, self.field, self.value,
            self.line, self.op, self.key, self.result, anchor if anchor is not None else self.anchor,
        )


@dataclass(slots=True)
class MethodRecord:
    id: int
    thread: int
    kind: str
    key: int
    inv_seq: int
    resp_seq: int | None = None
    result: bool | None = None
    lp_seq: int | None = None

    @property
    def complete(self) -> bool:
        return self.resp_seq is not None

    def label(self) -> str:
        res = "" if self.result is None else f",{str(self.result).lower()}"
        return f"T{self.thread}.{self.kind}({self.key}{res})#{self.id}"


@dataclass
class Execution:
    """A totally ordered event list plus what is needed to rebuild it.

    ``workload`` and ``schedule`` (the scheduler's thread choices) are present
    for engine-produced executions and let :func:`lpv.engine.complete_execution`
    resume pending methods.  ``dropped`` lists pending methods that completion
    chose to ignore.
    """

    family: str
    initial: tuple[int, ...]
    events: list[Event]
    workload: object | None = None
    schedule: tuple[int, ...] | None = None
    dropped: frozenset[int] = frozenset()

    def __len__(self) -> int:
        return len(self.events)

    def methods(self) -> dict[int, MethodRecord]:
        """Method records keyed by id, in invocation order."""
        return _method_records(self.events, dense=True)

    def pending(self) -> list[int]:
        return [m.id for m in self.methods().values() if not m.complete and m.id not in self.dropped]

    @property
    def complete(self) -> bool:
        return not self.pending()


def _method_records(events: Sequence[Event], dense: bool) -> dict[int, MethodRecord]:
    out: dict[int, MethodRecord] = {}
    open_by_thread: dict[int, int] = {}
    last = -1
    for i, e in enumerate(events):
        if dense and e.seq != i:
            raise MalformedExecution(f"event at position {i} has seq {e.seq}")
        if e.seq <= last:
            raise MalformedExecution(f"event seq {e.seq} out of order")
        last = e.seq
        if e.kind == "inv":
            if e.thread in open_by_thread:
                raise MalformedExecution(f"thread {e.thread} invoked method {e.method} with one already open")
            if e.method in out:
                raise MalformedExecution(f"method id {e.method} invoked twice")
            open_by_thread[e.thread] = e.method
            out[e.method] = MethodRecord(e.method, e.thread, e.op, e.key, e.seq)
        elif e.kind == "resp":
            if open_by_thread.get(e.thread) != e.method:
                raise MalformedExecution(f"response for method {e.method} without matching invocation")
            del open_by_thread[e.thread]
            rec = out[e.method]
            rec.resp_seq = e.seq
            rec.result = e.result
        elif e.kind != "dummy" and open_by_thread.get(e.thread) != e.method:
            raise MalformedExecution(f"event {e.seq} of method {e.method} outside its invocation")
    return out


@dataclass
class History:
    """The inv/resp projection of an execution."""

    events: list[Event]
    methods: list[MethodRecord] = field(default_factory=list)

    @cached_property
    def rt_order(self) -> frozenset[tuple[int, int]]:
        """Pairs ``(x, y)`` with ``resp(x)`` before ``inv(y)``."""
        done = [m for m in self.methods if m.complete]
        return frozenset(
            (x.id, y.id) for x in done for y in self.methods if x.id != y.id and x.resp_seq < y.inv_seq
        )

    def by_id(self) -> dict[int, MethodRecord]:
        return {m.id: m for m in self.methods}


def derive_history(execution: Execution | History) -> History:
    """Project an execution onto its invocation and response events.

    Methods dropped by completion are excluded.  A History maps to an equal
    History.
    """
    if isinstance(execution, History):
        records = _method_records(execution.events, dense=False)
        return History(list(execution.events), list(records.values()))
    records = execution.methods()
    dropped = execution.dropped
    events = [e for e in execution.events if e.kind in ("inv", "resp") and e.method not in dropped]
    methods = [m for m in records.values() if m.id not in dropped]
    return History(events, methods)


# ---------------------------------------------------------------------------
# simulated heap
# ---------------------------------------------------------------------------


class Heap:
    """Mutable simulated heap, one parallel list per node field.

    ``owner`` holds the thread id owning each node's lock or ``None``.
    """

    __slots__ = ("val", "nxt", "marked", "owner")

    def __init__(self, val: list, nxt: list, marked: list, owner: list) -> None:
        self.val = val
        self.nxt = nxt
        self.marked = marked
        self.owner = owner

    @classmethod
    def initial(cls, keys: Iterable[int] = ()) -> "Heap":
        ks = sorted(set(check_key(k) for k in keys))
        n = len(ks)
        val = [KEY_MIN, KEY_MAX] + ks
        # head -> 2 -> 3 -> ... -> tail
        nxt: list = [2 if n else TAIL, None] + [i + 3 if i + 1 < n else TAIL for i in range(n)]
        return cls(val, nxt, [False] * (n + 2), [None] * (n + 2))

    def copy(self) -> "Heap":
        return Heap(self.val[:], self.nxt[:], self.marked[:], self.owner[:])

    def alloc(self, key: int) -> int:
        self.val.append(key)
        self.nxt.append(None)
        self.marked.append(False)
        self.owner.append(None)
        return len(self.val) - 1

    def apply_write(self, node: int, fld: str, value) -> None:
        """Replay a recorded write; a ``val`` write to a fresh id allocates it."""
        if fld == "val":
            if node != len(self.val):
                raise MalformedExecution(f"allocation of node {node} out of order")
            self.alloc(value)
        elif fld == "next":
            self.nxt[node] = value
        elif fld == "marked":
            self.marked[node] = value
        else:
            raise MalformedExecution(f"unknown field {fld!r}")

    def __len__(self) -> int:
        return len(self.val)

    def chain(self) -> list[int]:
        """Node ids on the head -> tail chain, sentinels included."""
        limit = len(self.val)
        out = [HEAD]
        n = self.nxt[HEAD]
        while n is not None:
            out.append(n)
            if len(out) > limit:
                raise CorruptHeap("cycle on the head chain")
            if n == TAIL:
                return out
            n = self.nxt[n]
        raise CorruptHeap("head chain ends in a null next before the tail")

    def snapshot(self) -> "HeapSnapshot":
        return HeapSnapshot(tuple(self.val), tuple(self.nxt), tuple(self.marked), tuple(self.owner))


@dataclass(frozen=True)
class HeapSnapshot:
    val: tuple
    nxt: tuple
    marked: tuple
    owner: tuple
    head: int = HEAD
    tail: int = TAIL

    def chain(self) -> list[int]:
        return Heap.chain(self)  # type: ignore[arg-type]

    def __len__(self) -> int:
        return len(self.val)


def abds_of(heap: Heap | HeapSnapshot, family: str) -> frozenset[int]:
    """Abstract set of a heap state.

    lazy: keys of unmarked nodes reachable from head; hoh: keys of every node
    reachable from head.  Sentinels are excluded.
    """
    chain = heap.chain()[1:-1]
    if family == "lazy":
        marked = heap.marked
        return frozenset(heap.val[n] for n in chain if not marked[n])
    if family == "hoh":
        return frozenset(heap.val[n] for n in chain)
    raise ValueError(f"unknown family {family!r}")


def replay_heaps(execution: Execution) -> Iterator[tuple[Event, Heap]]:
    """Yield each event with the heap as it stands right after it.

    The same heap object is mutated in place; copy it to keep a state.
    """
    heap = Heap.initial(execution.initial)
    for e in execution.events:
        if e.kind == "write":
            heap.apply_write(e.node, e.field, e.value)
        elif e.kind == "lock":
            heap.owner[e.node] = e.thread
        elif e.kind == "unlock":
            heap.owner[e.node] = None
        yield e, heap


# ---------------------------------------------------------------------------
# trace files
# ---------------------------------------------------------------------------


def write_trace(execution: Execution, fp: IO[str]) -> None:
    header: dict = {"trace_version": TRACE_VERSION, "family": execution.family, "initial": list(execution.initial)}
    if execution.schedule is not None:
        header["schedule"] = list(execution.schedule)
    if execution.workload is not None and hasattr(execution.workload, "to_json"):
        header["workload"] = execution.workload.to_json()
    if execution.dropped:
        header["dropped"] = sorted(execution.dropped)
    fp.write(json.dumps(header, sort_keys=True) + "\n")
    for e in execution.events:
        fp.write(json.dumps(e.to_json(), sort_keys=True) + "\n")


def read_trace(fp: IO[str]) -> Execution:
    lines = [ln for ln in fp if ln.strip()]
    if not lines:
        raise MalformedExecution("empty trace file")
    header = json.loads(lines[0])
    if header.get("trace_version") != TRACE_VERSION:
        raise MalformedExecution(f"unsupported trace version {header.get('trace_version')!r}")
    family = check_family(header["family"])
    events = [Event.from_json(json.loads(ln)) for ln in lines[1:]]
    workload = None
    if "workload" in header:
        from .engine import Workload

        workload = Workload.from_json(header["workload"])
    schedule = tuple(header["schedule"]) if "schedule" in header else None
    return Execution(
        family, tuple(header.get("initial", ())), events, workload, schedule, frozenset(header.get("dropped", ()))
    )


def events_of_method(events: Sequence[Event], method: int) -> list[Event]:
    return [e for e in events if e.method == method]
