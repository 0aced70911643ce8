"""Assign linearization points, build the LP-ordered sequential history and compare.

The checker reads traces only: ``read``/``write`` events, their pseudocode
line labels and abstract-set snapshots rebuilt from the writes.  The pipeline
is :func:`analyze`:

1. complete the execution (pending methods),
2. :func:`assign_lps` using the family's rulebook,
3. :func:`check_assumption_abds`: only LP events may change the abstract set,
4. :func:`construct_cs`: replay the methods in LP order on the sequential set,
5. :func:`check_equivalence`: responses, post-LP states and real-time order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import hoh, lazy
from .engine import complete_execution
from .model import Event, Execution, MethodRecord, abds_of, replay_heaps
from .seqspec import SeqOp, SeqStep, replay


class NoLpFound(RuntimeError):
    def __init__(self, method: int) -> None:
        super().__init__(f"no LP event for method {method}")
        self.method = method


class MultipleAbdsChanges(RuntimeError):
    def __init__(self, method: int, seqs: list[int]) -> None:
        super().__init__(f"method {method} changed the abstract set at {seqs}")
        self.method = method
        self.seqs = seqs


PASS = "pass"
RESPONSE_MISMATCH = "response-mismatch"
ABDS_MISMATCH = "abds-mismatch"
ASSUMPTION_VIOLATION = "assumption-violation"
RT_VIOLATION = "rt-violation"


@dataclass(frozen=True)
class Verdict:
    status: str
    detail: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == PASS

    def to_json(self) -> dict:
        out: dict = {"status": self.status}
        if self.detail:
            out["detail"] = self.detail
        return out


def _set(s) -> list[int]:
    return sorted(s)


@dataclass
class LpAssignment:
    """LP per completed method, positions refer to ``execution`` (dummies inserted)."""

    execution: Execution
    lp_seq: dict[int, int]
    rule: dict[int, str]
    methods: dict[int, MethodRecord]
    missing: list[int] = field(default_factory=list)
    # contains method -> original seq of the Add write its dummy precedes
    dummy_anchor: dict[int, int] = field(default_factory=dict)

    def order(self) -> list[int]:
        return sorted(self.lp_seq, key=self.lp_seq.__getitem__)


def _markers(execution: Execution):
    if execution.family == "lazy":
        return lazy.candidate_lp_markers(execution)
    return hoh.candidate_lp_markers(execution)


def assign_lps(execution: Execution, family: str | None = None, naive: bool = False,
               strict: bool = True) -> LpAssignment:
    """Pick one LP per completed method.

    For lazy Contains(k, false) the dummy placed just before the latest
    qualifying concurrent Add(k, true) write wins over the method's own
    failing read; ``naive`` suppresses the dummy rule.  Dummies anchored at
    the same write are ordered by the invocation order of their methods.
    """
    family = family or execution.family
    if family != execution.family:
        raise ValueError(f"execution is {execution.family}, not {family}")
    markers = _markers(execution)
    chosen: dict[int, tuple[str, int, bool]] = {}
    missing = []
    for mid, cands in markers.items():
        real = [c for c in cands if not c.dummy]
        dummies = [c for c in cands if c.dummy]
        if dummies and not naive:
            c = max(dummies, key=lambda c: c.seq)
        elif real:
            c = real[-1]
        else:
            if strict:
                raise NoLpFound(mid)
            missing.append(mid)
            continue
        chosen[mid] = (c.rule, c.seq, c.dummy)

    old_methods = execution.methods()
    by_anchor: dict[int, list[int]] = {}
    for mid, (_, seq, dummy) in chosen.items():
        if dummy:
            by_anchor.setdefault(seq, []).append(mid)
    if by_anchor:
        events: list[Event] = []
        remap: dict[int, int] = {}
        dummy_pos: dict[int, int] = {}
        for e in execution.events:
            for mid in sorted(by_anchor.get(e.seq, ()), key=lambda m: old_methods[m].inv_seq):
                rec = old_methods[mid]
                dummy_pos[mid] = len(events)
                events.append(Event(len(events), rec.thread, mid, "dummy", line="dummy"))
            remap[e.seq] = len(events)
            events.append(e.resequenced(len(events)))
        events = [ev.resequenced(ev.seq, anchor=remap[chosen[ev.method][1]]) if ev.kind == "dummy" else ev
                  for ev in events]
        reseq = Execution(execution.family, execution.initial, events, execution.workload, None, execution.dropped)
        lp_seq = {mid: (dummy_pos[mid] if d else remap[s]) for mid, (_, s, d) in chosen.items()}
    else:
        reseq = execution
        lp_seq = {mid: s for mid, (_, s, _) in chosen.items()}
    return LpAssignment(
        reseq,
        lp_seq,
        {mid: r for mid, (r, _, _) in chosen.items()},
        {mid: m for mid, m in reseq.methods().items() if m.complete and mid not in execution.dropped},
        missing,
        {mid: s for mid, (_, s, d) in chosen.items() if d},
    )


def abds_trace(execution: Execution) -> list[frozenset[int]]:
    """Abstract set right after each event; unchanged states share one object."""
    family = execution.family
    current = frozenset(execution.initial)
    out = []
    for e, heap in replay_heaps(execution):
        if e.kind == "write":
            after = abds_of(heap, family)
            if after != current:
                current = after
        out.append(current)
    return out


def _before(abds: list[frozenset[int]], initial: frozenset[int], seq: int) -> frozenset[int]:
    return abds[seq - 1] if seq > 0 else initial


def check_assumption_abds(execution: Execution, assignment: LpAssignment,
                          family: str | None = None, abds: list | None = None) -> Verdict | None:
    """``None`` when only LP events change the abstract set and every LP is in range.

    Otherwise an assumption-violation verdict naming the first offending event.
    """
    ex = assignment.execution
    if abds is None:
        abds = abds_trace(ex)
    initial = frozenset(ex.initial)
    lp_events = set(assignment.lp_seq.values())
    changes: dict[int, list[int]] = {}
    prev = initial
    for e in ex.events:
        cur = abds[e.seq]
        if cur is not prev and cur != prev:
            changes.setdefault(e.method, []).append(e.seq)
            if e.seq not in lp_events:
                return Verdict(ASSUMPTION_VIOLATION, {
                    "event_seq": e.seq,
                    "line": e.line,
                    "method": e.method,
                    "reason": "event changes the abstract set but is not an LP",
                    "abds_before": _set(prev),
                    "abds_after": _set(cur),
                })
        prev = cur
    for mid, seqs in changes.items():
        if len(seqs) > 1:
            return Verdict(ASSUMPTION_VIOLATION, {
                "event_seq": seqs[1], "method": mid,
                "reason": "more than one abstract-set-changing event in one method",
            })
    for mid in assignment.missing:
        m = ex.methods()[mid]
        return Verdict(ASSUMPTION_VIOLATION, {
            "event_seq": m.inv_seq, "method": mid, "reason": f"no LP event for {m.label()}",
        })
    for mid, lp in assignment.lp_seq.items():
        m = assignment.methods[mid]
        if not m.inv_seq < lp < m.resp_seq:
            return Verdict(ASSUMPTION_VIOLATION, {
                "event_seq": lp, "method": mid, "reason": f"LP of {m.label()} outside its interval",
            })
    return None


@dataclass
class CsReplay:
    order: list[int]
    steps: list[SeqStep]
    methods: dict[int, MethodRecord]
    pre_lp_abds: dict[int, frozenset[int]]
    post_lp_abds: dict[int, frozenset[int]]
    lp_seq: dict[int, int]

    def results(self) -> list[bool]:
        return [s.result for s in self.steps]

    def labels(self) -> list[str]:
        return [self.methods[m].label() for m in self.order]


def construct_cs(execution: Execution, assignment: LpAssignment, abds: list | None = None) -> CsReplay:
    ex = assignment.execution
    if abds is None:
        abds = abds_trace(ex)
    initial = frozenset(ex.initial)
    order = assignment.order()
    methods = assignment.methods
    steps = replay(initial, [SeqOp(methods[m].kind, methods[m].key) for m in order])
    lp = assignment.lp_seq
    return CsReplay(
        order,
        steps,
        methods,
        {m: _before(abds, initial, lp[m]) for m in order},
        {m: abds[lp[m]] for m in order},
        dict(lp),
    )


def check_equivalence(execution: Execution, cs: CsReplay) -> Verdict:
    """Pass iff responses, post-LP abstract states and real-time order all agree."""
    for m, step in zip(cs.order, cs.steps):
        rec = cs.methods[m]
        if rec.result != step.result:
            return Verdict(RESPONSE_MISMATCH, {
                "method": m,
                "label": rec.label(),
                "concurrent_result": rec.result,
                "sequential_result": step.result,
                "pre_lp_abds": _set(cs.pre_lp_abds[m]),
                "sequential_pre": _set(step.pre),
                "lp_order": cs.labels(),
            })
        if cs.post_lp_abds[m] != step.post:
            return Verdict(ABDS_MISMATCH, {
                "method": m,
                "label": rec.label(),
                "post_lp_abds": _set(cs.post_lp_abds[m]),
                "sequential_post": _set(step.post),
                "lp_order": cs.labels(),
            })
    # sweep in LP order: y earlier in LP order with inv(y) > resp(x) breaks rt order
    latest_inv, latest = -1, None
    for m in cs.order:
        rec = cs.methods[m]
        if rec.resp_seq < latest_inv:
            return Verdict(RT_VIOLATION, {"pair": [m, latest],
                                          "labels": [rec.label(), cs.methods[latest].label()]})
        if rec.inv_seq > latest_inv:
            latest_inv, latest = rec.inv_seq, m
    return Verdict(PASS)


@dataclass
class Analysis:
    execution: Execution
    assignment: LpAssignment | None
    cs: CsReplay | None
    verdict: Verdict


def analyze(execution: Execution, naive: bool | None = None) -> Analysis:
    """Full pipeline; ``naive`` defaults to the workload's contains-lp-naive switch."""
    if naive is None:
        naive = getattr(execution.workload, "mutation", None) == "contains-lp-naive"
    ex = complete_execution(execution) if not execution.complete else execution
    assignment = assign_lps(ex, naive=naive, strict=False)
    abds = abds_trace(assignment.execution)
    bad = check_assumption_abds(ex, assignment, abds=abds)
    if bad is not None:
        return Analysis(ex, assignment, None, bad)
    cs = construct_cs(ex, assignment, abds=abds)
    return Analysis(ex, assignment, cs, check_equivalence(ex, cs))


def check(execution: Execution, naive: bool | None = None) -> Verdict:
    return analyze(execution, naive).verdict
