"""Native stress mode: method bodies on real threads with real per-node locks.

Each shared-memory access happens under the recorder's lock together with
stamping its sequence number, so the recorded order is a total order
consistent with what the threads actually did.  Lock acquisition blocks on
the node's own ``threading.Lock`` and is stamped after it succeeds; release
is stamped before the lock is let go.
"""

from __future__ import annotations

import random
import sys
import threading
import time

from .machine import Livelock, check_mutation
from .model import HEAD, Event, Execution, Heap

DEFAULT_MAX_EVENTS = 200_000


class _Recorder:
    def __init__(self, heap: Heap, yield_rate: float) -> None:
        self.heap = heap
        self.mutex = threading.Lock()
        self.locks = [threading.Lock() for _ in range(len(heap))]
        self.events: list[Event] = []
        self.next_mid = 0
        self.yield_rate = yield_rate

    def _jitter(self, rng: random.Random) -> None:
        if self.yield_rate and rng.random() < self.yield_rate:
            time.sleep(0)

    def inv(self, t: int, op: str, key: int) -> int:
        with self.mutex:
            mid = self.next_mid
            self.next_mid += 1
            self.events.append(Event(len(self.events), t, mid, "inv", op=op, key=key))
            return mid

    def resp(self, t: int, mid: int, op: str, key: int, result: bool) -> None:
        with self.mutex:
            self.events.append(Event(len(self.events), t, mid, "resp", op=op, key=key, result=result))

    def read(self, t, mid, node, fld, line):
        heap = self.heap
        with self.mutex:
            if fld == "val":
                v = heap.val[node]
            elif fld == "next":
                v = heap.nxt[node]
            else:
                v = heap.marked[node]
            self.events.append(Event(len(self.events), t, mid, "read", node, fld, v, line))
            return v

    def write(self, t, mid, node, fld, value, line):
        with self.mutex:
            if fld == "next":
                self.heap.nxt[node] = value
            else:
                self.heap.marked[node] = value
            self.events.append(Event(len(self.events), t, mid, "write", node, fld, value, line))

    def unlink(self, t, mid, n1, n2, line):
        """``write(n1.next, n2.next)`` as one atomic step."""
        with self.mutex:
            v = self.heap.nxt[n2]
            self.heap.nxt[n1] = v
            self.events.append(Event(len(self.events), t, mid, "write", n1, "next", v, line))

    def alloc(self, t, mid, key, line) -> int:
        with self.mutex:
            node = self.heap.alloc(key)
            self.locks.append(threading.Lock())
            self.events.append(Event(len(self.events), t, mid, "write", node, "val", key, line))
            return node

    def acquire(self, t, mid, node, line) -> None:
        self.locks[node].acquire()
        with self.mutex:
            self.heap.owner[node] = t
            self.events.append(Event(len(self.events), t, mid, "lock", node, line=line))

    def release(self, t, mid, node, line) -> None:
        with self.mutex:
            self.heap.owner[node] = None
            self.events.append(Event(len(self.events), t, mid, "unlock", node, line=line))
        self.locks[node].release()


class _LazyBodies:
    def __init__(self, rec: _Recorder, mutation: str | None, retry_cap: int) -> None:
        self.r = rec
        self.mutation = mutation
        self.retry_cap = retry_cap

    def _locate(self, t, mid, key, rng):
        r = self.r
        for _ in range(self.retry_cap + 1):
            n1 = HEAD
            n2 = r.read(t, mid, n1, "next", "loc4")
            r._jitter(rng)
            while r.read(t, mid, n2, "val", "loc5") < key:
                n1 = n2
                n2 = r.read(t, mid, n2, "next", "loc7")
                r._jitter(rng)
            r.acquire(t, mid, n1, "loc9")
            r.acquire(t, mid, n2, "loc10")
            if (r.read(t, mid, n1, "marked", "validate1") is False
                    and r.read(t, mid, n2, "marked", "validate2") is False
                    and r.read(t, mid, n1, "next", "validate3") == n2):
                return n1, n2
            r.release(t, mid, n1, "locrel1")
            r.release(t, mid, n2, "locrel2")
            r._jitter(rng)
        raise Livelock(f"method {mid} exceeded {self.retry_cap} Locate retries")

    def add(self, t, mid, key, rng):
        r = self.r
        n1, n2 = self._locate(t, mid, key, rng)
        if r.read(t, mid, n2, "val", "add3") != key:
            n3 = r.alloc(t, mid, key, "add4")
            r.write(t, mid, n3, "next", n2, "add5")
            if self.mutation == "add-unlock-early":
                r.release(t, mid, n1, "add7")
                r._jitter(rng)
                r.write(t, mid, n1, "next", n3, "add6")
                r.release(t, mid, n2, "add8")
                return True
            r.write(t, mid, n1, "next", n3, "add6")
            flag = True
        else:
            flag = False
        r.release(t, mid, n1, "add7")
        r.release(t, mid, n2, "add8")
        return flag

    def remove(self, t, mid, key, rng):
        r = self.r
        n1, n2 = self._locate(t, mid, key, rng)
        if r.read(t, mid, n2, "val", "rem3") == key:
            if self.mutation != "remove-skip-mark":
                r.write(t, mid, n2, "marked", True, "rem4")
            r.unlink(t, mid, n1, n2, "rem5")
            flag = True
        else:
            flag = False
        r.release(t, mid, n1, "rem6")
        r.release(t, mid, n2, "rem7")
        return flag

    def contains(self, t, mid, key, rng):
        r = self.r
        n = HEAD
        while r.read(t, mid, n, "val", "con3") < key:
            n = r.read(t, mid, n, "next", "con4")
            r._jitter(rng)
        if r.read(t, mid, n, "val", "con6v") != key:
            return False
        return not r.read(t, mid, n, "marked", "con6m")


class _HoHBodies:
    def __init__(self, rec: _Recorder, mutation: str | None, retry_cap: int) -> None:
        self.r = rec
        self.mutation = mutation

    def _locate(self, t, mid, key, rng):
        r = self.r
        r.acquire(t, mid, HEAD, "hloc2")
        n1 = HEAD
        n2 = r.read(t, mid, n1, "next", "hloc4")
        r.acquire(t, mid, n2, "hloc5")
        while r.read(t, mid, n2, "val", "hloc6") < key:
            r.release(t, mid, n1, "hloc7")
            n1 = n2
            n2 = r.read(t, mid, n2, "next", "hloc9")
            r._jitter(rng)
            r.acquire(t, mid, n2, "hloc10")
        return n1, n2

    def add(self, t, mid, key, rng):
        r = self.r
        n1, n2 = self._locate(t, mid, key, rng)
        if r.read(t, mid, n2, "val", "hadd3") != key:
            n3 = r.alloc(t, mid, key, "hadd4")
            r.write(t, mid, n3, "next", n2, "hadd5")
            if self.mutation == "add-unlock-early":
                r.release(t, mid, n1, "hadd7")
                r._jitter(rng)
                r.write(t, mid, n1, "next", n3, "hadd6")
                r.release(t, mid, n2, "hadd8")
                return True
            r.write(t, mid, n1, "next", n3, "hadd6")
            flag = True
        else:
            flag = False
        r.release(t, mid, n1, "hadd7")
        r.release(t, mid, n2, "hadd8")
        return flag

    def remove(self, t, mid, key, rng):
        r = self.r
        n1, n2 = self._locate(t, mid, key, rng)
        if r.read(t, mid, n2, "val", "hrem3") == key:
            r.unlink(t, mid, n1, n2, "hrem5")
            flag = True
        else:
            flag = False
        r.release(t, mid, n1, "hrem6")
        r.release(t, mid, n2, "hrem7")
        return flag

    def contains(self, t, mid, key, rng):
        r = self.r
        n1, n2 = self._locate(t, mid, key, rng)
        flag = r.read(t, mid, n2, "val", "hcon3") == key
        r.release(t, mid, n1, "hcon6")
        r.release(t, mid, n2, "hcon7")
        return flag


def run_native_stress(workload, seed: int = 0, duration: float | None = None,
                      max_events: int = DEFAULT_MAX_EVENTS, yield_rate: float = 0.05) -> Execution:
    """Run each thread's program on its own OS thread.

    Without ``duration`` every program runs once.  With it, programs repeat
    until the deadline; a thread finishes the method it is in before stopping,
    so the trace is complete.
    """
    check_mutation(workload.mutation)
    heap = Heap.initial(workload.initial)
    rec = _Recorder(heap, yield_rate)
    bodies_cls = _LazyBodies if workload.family == "lazy" else _HoHBodies
    bodies = bodies_cls(rec, workload.mutation, workload.cap)
    deadline = time.monotonic() + duration if duration is not None else None
    start = threading.Barrier(len(workload.threads)) if workload.threads else None
    errors: list[BaseException] = []

    def worker(t: int) -> None:
        rng = random.Random(seed * 1_000_003 + t)
        prog = workload.threads[t]
        try:
            start.wait()
            while True:
                for op in prog:
                    mid = rec.inv(t, op.kind, op.key)
                    result = getattr(bodies, op.kind)(t, mid, op.key, rng)
                    rec.resp(t, mid, op.kind, op.key, result)
                    r_len = len(rec.events)
                    if r_len >= max_events or (deadline is not None and time.monotonic() >= deadline):
                        return
                if deadline is None:
                    return
        except BaseException as exc:  # surfaced to the caller after join
            errors.append(exc)

    old = sys.getswitchinterval()
    sys.setswitchinterval(1e-5)
    try:
        threads = [threading.Thread(target=worker, args=(t,), daemon=True) for t in range(len(workload.threads))]
        for th in threads:
            th.start()
        for th in threads:
            th.join()
    finally:
        sys.setswitchinterval(old)
    if errors:
        raise errors[0]
    return Execution(workload.family, workload.initial, rec.events, None, None)
