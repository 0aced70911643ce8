"""Drive method machines to produce executions.

Three simulated modes share one state model: exhaustive DFS over the
scheduler's choice points, seeded random scheduling, and scripted replay of a
fixed choice sequence.  A choice point sits before every event.

Exhaustive search has two reductions:

``none``
    every maximal interleaving is visited exactly once.
``sleep``
    sleep sets plus eager execution of invisible ``val`` reads.  Two steps of
    different threads are treated as independent only when swapping them
    changes neither the heap nor anything the LP checker or the brute-force
    oracle observes (see :func:`lpv.machine.dependent`), so each visited
    execution stands for a class of interleavings that share a verdict.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from . import hoh, lazy
from .machine import (DEFAULT_RETRY_CAP, Livelock, Machine, check_mutation, dependent, execute,
                      invisible, retry_cap_from_env)
from .model import Event, Execution, Heap, abds_of, check_family, replay_heaps
from .seqspec import SeqOp

REDUCTIONS = ("sleep", "none")

MACHINES: dict[str, type[Machine]] = {"lazy": lazy.LazyMachine, "hoh": hoh.HoHMachine}


class AllBlocked(RuntimeError):
    """No thread can move but some have not finished."""


class ScheduleError(ValueError):
    """A scripted choice names a thread that cannot move."""


class StopExploration(Exception):
    """Raised by a visitor to end an exhaustive run early."""


@dataclass(frozen=True)
class Workload:
    family: str
    threads: tuple[tuple[SeqOp, ...], ...]
    initial: tuple[int, ...] = ()
    mutation: str | None = None
    retry_cap: int | None = None
    truncate_after: int | None = None
    reduction: str = "sleep"
    name: str | None = None
    script: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self) -> None:
        check_family(self.family)
        check_mutation(self.mutation)
        if self.reduction not in REDUCTIONS:
            raise ValueError(f"unknown reduction {self.reduction!r}")
        object.__setattr__(self, "initial", tuple(sorted(set(self.initial))))
        for k in self.initial:
            SeqOp("contains", k)

    @property
    def cap(self) -> int:
        return self.retry_cap if self.retry_cap is not None else retry_cap_from_env()

    def method_ids(self) -> list[list[int]]:
        """Method instance ids, numbered thread-major."""
        out, nxt = [], 0
        for prog in self.threads:
            out.append(list(range(nxt, nxt + len(prog))))
            nxt += len(prog)
        return out

    def replace(self, **changes) -> "Workload":
        data = {f: getattr(self, f) for f in self.__dataclass_fields__}
        data.update(changes)
        return Workload(**data)

    def to_json(self) -> dict:
        out: dict = {
            "family": self.family,
            "initial": list(self.initial),
            "threads": [[{"op": o.kind, "key": o.key} for o in prog] for prog in self.threads],
        }
        for name in ("mutation", "retry_cap", "truncate_after", "name"):
            v = getattr(self, name)
            if v is not None:
                out[name] = v
        if self.reduction != "sleep":
            out["reduction"] = self.reduction
        if self.script is not None:
            out["script"] = [list(r) for r in self.script]
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Workload":
        unknown = set(obj) - {"family", "initial", "threads", "mutation", "retry_cap", "truncate_after",
                              "reduction", "name", "script", "description"}
        if unknown:
            raise ValueError(f"unknown workload fields: {sorted(unknown)}")
        threads = tuple(tuple(SeqOp(o["op"], o["key"]) for o in prog) for prog in obj["threads"])
        script = obj.get("script")
        return cls(
            family=obj["family"],
            threads=threads,
            initial=tuple(obj.get("initial", ())),
            mutation=obj.get("mutation"),
            retry_cap=obj.get("retry_cap"),
            truncate_after=obj.get("truncate_after"),
            reduction=obj.get("reduction", "sleep"),
            name=obj.get("name"),
            script=tuple((int(t), int(n)) for t, n in script) if script is not None else None,
        )

    @classmethod
    def load(cls, path) -> "Workload":
        with open(path) as fp:
            return cls.from_json(json.load(fp))


class SimState:
    """Heap plus one current machine per thread."""

    __slots__ = ("heap", "machines", "op_index", "workload", "ids")

    def __init__(self, workload: Workload, heap=None, machines=None, op_index=None, ids=None) -> None:
        self.workload = workload
        if heap is None:
            self.ids = workload.method_ids()
            self.heap = Heap.initial(workload.initial)
            self.op_index = [0] * len(workload.threads)
            self.machines = [self._machine(t, 0) for t in range(len(workload.threads))]
        else:
            self.heap, self.machines, self.op_index, self.ids = heap, machines, op_index, ids

    def _machine(self, t: int, i: int) -> Machine | None:
        prog = self.workload.threads[t]
        if i >= len(prog):
            return None
        cls = MACHINES[self.workload.family]
        return cls(self.ids[t][i], t, prog[i].kind, prog[i].key, self.workload.mutation, self.workload.cap)

    def clone(self) -> "SimState":
        return SimState(self.workload, self.heap.copy(), [m.copy() if m is not None else None for m in self.machines],
                        self.op_index[:], self.ids)

    def enabled(self) -> list[int]:
        heap = self.heap
        return [t for t, m in enumerate(self.machines) if m is not None and not m.blocked(heap)]

    def finished(self) -> bool:
        return all(m is None for m in self.machines)

    def step(self, t: int, seq: int) -> Event:
        m = self.machines[t]
        ev = execute(m, self.heap, seq)
        if ev is None:
            raise ScheduleError(f"thread {t} is blocked")
        if m.done:
            self.op_index[t] += 1
            self.machines[t] = self._machine(t, self.op_index[t])
        return ev


@dataclass
class Stats:
    schedules: int = 0
    events_total: int = 0
    livelock_pruned: int = 0
    sleep_blocked: int = 0
    nodes: int = 0
    reduction: str = "none"

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _execution(workload: Workload, events: list[Event], schedule: list[int]) -> Execution:
    return Execution(workload.family, workload.initial, list(events), workload, tuple(schedule))


def run_exhaustive(workload: Workload, visitor: Callable[[Execution], object]) -> Stats:
    """Call ``visitor`` once per explored maximal execution.

    Truncated exploration (``truncate_after``) always uses ``none``: the set
    of length-N prefixes is not closed under reordering independent steps.
    """
    limit = workload.truncate_after
    reduction = "none" if limit is not None else workload.reduction
    stats = Stats(reduction=reduction)
    events: list[Event] = []
    schedule: list[int] = []

    def leaf() -> None:
        stats.schedules += 1
        stats.events_total += len(events)
        visitor(_execution(workload, events, schedule))

    def raw(state: SimState) -> None:
        stats.nodes += 1
        if limit is not None and len(events) >= limit:
            leaf()
            return
        enabled = state.enabled()
        if not enabled:
            if not state.finished():
                raise AllBlocked(f"no runnable thread after {len(events)} events")
            leaf()
            return
        last = len(enabled) - 1
        for i, t in enumerate(enabled):
            child = state if i == last else state.clone()
            try:
                events.append(child.step(t, len(events)))
            except Livelock:
                stats.livelock_pruned += 1
                continue
            schedule.append(t)
            raw(child)
            events.pop()
            schedule.pop()

    def sleepy(state: SimState, sleep: dict[int, tuple]) -> None:
        stats.nodes += 1
        machines = state.machines
        pushed = 0
        try:
            # invisible val reads commute with everything: take them without branching
            while True:
                enabled = state.enabled()
                if not enabled:
                    if not state.finished():
                        raise AllBlocked(f"no runnable thread after {len(events)} events")
                    leaf()
                    return
                fps = {t: machines[t].footprint() for t in enabled}
                lone = next((t for t in enabled if invisible(fps[t])), None)
                if lone is None:
                    break
                if lone in sleep:
                    stats.sleep_blocked += 1
                    return
                events.append(state.step(lone, len(events)))
                schedule.append(lone)
                pushed += 1
            todo = [t for t in enabled if t not in sleep]
            if not todo:
                stats.sleep_blocked += 1
                return
            explored: dict[int, tuple] = dict(sleep)
            last = len(todo) - 1
            for i, t in enumerate(todo):
                fp = fps[t]
                child_sleep = {q: fq for q, fq in explored.items() if q != t and not dependent(fq, fp)}
                child = state if i == last else state.clone()
                try:
                    events.append(child.step(t, len(events)))
                except Livelock:
                    stats.livelock_pruned += 1
                    explored[t] = fp
                    continue
                schedule.append(t)
                sleepy(child, child_sleep)
                events.pop()
                schedule.pop()
                explored[t] = fp
        finally:
            if pushed:
                del events[-pushed:]
                del schedule[-pushed:]

    try:
        if reduction == "none":
            raw(SimState(workload))
        else:
            sleepy(SimState(workload), {})
    except StopExploration:
        pass
    return stats


def run_random(workload: Workload, seed: int, count: int) -> list[Execution]:
    """``count`` executions, each step choosing uniformly among runnable threads."""
    rng = random.Random(seed)
    return [random_execution(workload, rng) for _ in range(count)]


def random_execution(workload: Workload, rng: random.Random, truncate_after: int | None = None) -> Execution:
    limit = truncate_after if truncate_after is not None else workload.truncate_after
    state = SimState(workload)
    events: list[Event] = []
    schedule: list[int] = []
    while limit is None or len(events) < limit:
        enabled = state.enabled()
        if not enabled:
            if not state.finished():
                raise AllBlocked(f"no runnable thread after {len(events)} events")
            break
        t = enabled[0] if len(enabled) == 1 else rng.choice(enabled)
        events.append(state.step(t, len(events)))
        schedule.append(t)
    return _execution(workload, events, schedule)


def expand_script(script: Iterable[tuple[int, int]]) -> list[int]:
    return [t for t, n in script for _ in range(n)]


def run_schedule(workload: Workload, choices: Sequence[int], finish: bool = False) -> Execution:
    """Replay a choice sequence exactly.

    With ``finish`` the run continues after the script, always picking the
    lowest-numbered runnable thread.
    """
    state, events, schedule = _replay(workload, choices)
    if finish:
        while True:
            enabled = state.enabled()
            if not enabled:
                if not state.finished():
                    raise AllBlocked(f"no runnable thread after {len(events)} events")
                break
            events.append(state.step(enabled[0], len(events)))
            schedule.append(enabled[0])
    return _execution(workload, events, schedule)


def run_scripted(workload: Workload) -> Execution:
    if workload.script is None:
        raise ScheduleError("workload has no script")
    return run_schedule(workload, expand_script(workload.script), finish=True)


def _replay(workload: Workload, choices: Sequence[int]) -> tuple[SimState, list[Event], list[int]]:
    state = SimState(workload)
    events: list[Event] = []
    for t in choices:
        if not 0 <= t < len(state.machines) or state.machines[t] is None:
            raise ScheduleError(f"choice {len(events)}: thread {t} has nothing left to run")
        if state.machines[t].blocked(state.heap):
            raise ScheduleError(f"choice {len(events)}: thread {t} is blocked")
        events.append(state.step(t, len(events)))
    return state, events, list(choices)


def abds_changing_events(execution: Execution) -> dict[int, list[int]]:
    """Seqs of events that changed the abstract set, grouped by method."""
    out: dict[int, list[int]] = {}
    family = execution.family
    current = frozenset(execution.initial)
    for e, heap in replay_heaps(execution):
        if e.kind != "write":
            continue
        after = abds_of(heap, family)
        if after != current:
            out.setdefault(e.method, []).append(e.seq)
            current = after
    return out


def complete_execution(truncated: Execution) -> Execution:
    """Resolve pending methods.

    Pending methods that executed no abstract-set-changing event are dropped.
    The rest are resumed one at a time, ordered by that event, and run solo to
    their response.
    """
    if truncated.complete:
        return truncated
    if truncated.workload is None or truncated.schedule is None:
        raise ValueError("completion needs the workload and schedule that produced the execution")
    workload: Workload = truncated.workload  # type: ignore[assignment]
    state, events, schedule = _replay(workload, truncated.schedule)
    if [e.to_json() for e in events] != [e.to_json() for e in truncated.events]:
        raise ValueError("schedule does not reproduce the recorded events")
    pending = truncated.pending()
    changed = abds_changing_events(truncated)
    pset = sorted((changed[m][0], m) for m in pending if m in changed)
    dropped = set(pending) - {m for _, m in pset}
    thread_of = {m.id: m.thread for m in truncated.methods().values()}
    for _, mid in pset:
        t = thread_of[mid]
        machine = state.machines[t]
        while machine.mid == mid and not machine.done:
            if machine.blocked(state.heap):
                raise AllBlocked(f"pending method {mid} blocks during completion")
            ev = execute(machine, state.heap, len(events))
            events.append(ev)
            schedule.append(t)
        if machine.op in ("add", "remove") and machine.result is not True:
            raise RuntimeError(f"method {mid} changed the abstract set but returned {machine.result}")
        state.machines[t] = None
    return Execution(truncated.family, truncated.initial, events, workload, tuple(schedule),
                     frozenset(dropped) | truncated.dropped)
