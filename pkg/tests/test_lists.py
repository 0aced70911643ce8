import pytest

from lpv import hoh, lazy
from lpv.checker import abds_trace
from lpv.engine import run_exhaustive, run_schedule, run_scripted
from lpv.model import abds_of, replay_heaps
from conftest import make


def solo(family, op, key=5, initial=(), mutation=None):
    return run_schedule(make(family, [(op, key)], initial=initial, mutation=mutation), [], finish=True)


def lines(ex):
    return [e.line for e in ex.events if e.line]


def final_abds(ex):
    return abds_trace(ex)[-1]


def markers(ex):
    mod = lazy if ex.family == "lazy" else hoh
    return mod.candidate_lp_markers(ex)


class TestLazySolo:
    def test_add_fresh(self):
        ex = solo("lazy", "add")
        writes = [e for e in ex.events if e.kind == "write"]
        assert writes[-1].line == "add6" and writes[-1].field == "next"
        assert ex.events[-1].kind == "resp" and ex.events[-1].result is True
        assert final_abds(ex) == {5}
        assert [c.rule for c in markers(ex)[0]] == ["add-true"]
        assert markers(ex)[0][0].seq == writes[-1].seq

    def test_contains_fresh_reaches_tail(self):
        ex = solo("lazy", "contains")
        reads = [e for e in ex.events if e.kind == "read"]
        assert reads[-1].line == "con6v" and reads[-1].node == 1  # tail
        assert ex.events[-1].result is False
        (c,) = markers(ex)[0]
        assert c.rule == "contains-false-val" and c.seq == reads[-1].seq

    def test_remove_fresh_writes_nothing(self):
        ex = solo("lazy", "remove")
        assert ex.events[-1].result is False
        assert not [e for e in ex.events if e.kind == "write"]

    def test_locks_in_list_order_and_released(self):
        for op, init in (("add", ()), ("remove", (5,)), ("add", (5,)), ("remove", ())):
            ex = solo("lazy", op, initial=init)
            locks = [e.node for e in ex.events if e.kind == "lock"]
            unlocks = [e.node for e in ex.events if e.kind == "unlock"]
            assert sorted(locks) == sorted(unlocks)
            heap = None
            for e, h in replay_heaps(ex):
                heap = h
            assert all(o is None for o in heap.owner)

    def test_remove_marks_then_unlinks(self):
        ex = solo("lazy", "remove", initial=(5,))
        assert lines(ex)[-4:] == ["rem4", "rem5", "rem6", "rem7"]
        assert final_abds(ex) == frozenset()

    def test_contains_true(self):
        ex = solo("lazy", "contains", initial=(5,))
        assert lines(ex)[-2:] == ["con6v", "con6m"]
        assert [c.rule for c in markers(ex)[0]] == ["contains-true"]

    def test_remove_skip_mark(self):
        ex = solo("lazy", "remove", initial=(5,), mutation="remove-skip-mark")
        assert "rem4" not in lines(ex) and "rem5" in lines(ex)
        assert ex.events[-1].result is True

    def test_add_unlock_early_order(self):
        ex = solo("lazy", "add", mutation="add-unlock-early")
        assert lines(ex)[-3:] == ["add7", "add6", "add8"]


class TestHoHSolo:
    def test_add_fresh(self):
        ex = solo("hoh", "add")
        locks = [e.node for e in ex.events if e.kind == "lock"]
        assert locks == [0, 1]  # head then tail
        assert lines(ex)[-3:] == ["hadd6", "hadd7", "hadd8"]
        assert final_abds(ex) == {5}
        (c,) = markers(ex)[0]
        assert c.rule == "add-true" and ex.events[c.seq].line == "hadd6"

    def test_contains_fresh(self):
        ex = solo("hoh", "contains")
        (c,) = markers(ex)[0]
        assert c.rule == "contains-false" and ex.events[c.seq].line == "hcon3"
        assert ex.events[-1].result is False

    def test_remove_false_marker(self):
        ex = solo("hoh", "remove")
        (c,) = markers(ex)[0]
        assert c.rule == "remove-false" and ex.events[c.seq].line == "hrem3"

    def test_every_method_one_marker(self):
        for op in ("add", "remove", "contains"):
            for init in ((), (5,), (3, 5, 9)):
                ex = solo("hoh", op, initial=init)
                assert len(markers(ex)[0]) == 1

    def test_coupling_walk(self):
        ex = solo("hoh", "contains", key=9, initial=(3, 5, 9))
        held = []
        for e in ex.events:
            if e.kind == "lock":
                held.append(e.node)
                assert len(held) <= 2
            elif e.kind == "unlock":
                held.remove(e.node)
        assert held == []


def test_hoh_distinct_adds_commute():
    wl = make("hoh", [("add", 3)], [("add", 5)])
    seen = []

    def visit(ex):
        assert [e.result for e in ex.events if e.kind == "resp"] == [True, True]
        seen.append(final_abds(ex))

    for red in ("none", "sleep"):
        seen.clear()
        st = run_exhaustive(wl.replace(reduction=red), visit)
        assert st.schedules == len(seen) > 1
        assert set(seen) == {frozenset({3, 5})}


def test_lpcase_contains_gets_dummy(lpcase):
    ex = run_scripted(lpcase)
    cands = markers(ex)[2]
    dummies = [c for c in cands if c.dummy]
    assert len(dummies) == 1
    anchor = ex.events[dummies[0].seq]
    assert anchor.line == "add6" and anchor.method == 0


def test_lazy_heap_fault_on_broken_heap():
    from lpv.machine import HeapFault, execute
    from lpv.model import Heap

    heap = Heap.initial([3])
    heap.nxt[heap.chain()[1]] = None  # sever the chain
    m = lazy.LazyMachine(0, 0, "contains", 9)
    with pytest.raises(HeapFault):
        while not m.done:
            execute(m, heap, 0)


def test_abds_of_matches_trace():
    ex = solo("lazy", "add", key=4, initial=(1, 9))
    for (e, heap), s in zip(replay_heaps(ex), abds_trace(ex)):
        assert abds_of(heap, "lazy") == s
