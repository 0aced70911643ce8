"""Pure-Python kernels.  ``_ckernels`` implements the same functions in Cython."""

from __future__ import annotations


def linearize(ops, kbits, results, preds, state):
    """Search for an order of methods that extends ``preds`` and reproduces ``results``.

    ops: 0 add, 1 remove, 2 contains; kbits: key bit per method; preds: bitmask
    of methods that must come earlier.  Returns ``(found, order, explored)``.
    """
    n = len(ops)
    full = (1 << n) - 1
    failed = set()
    order = []
    explored = 0

    def dfs(done, st):
        nonlocal explored
        if done == full:
            return True
        if (done, st) in failed:
            return False
        explored += 1
        for i in range(n):
            b = 1 << i
            if done & b or preds[i] & ~done:
                continue
            kb = 1 << kbits[i]
            present = (st & kb) != 0
            op = ops[i]
            if op == 0:
                res, nst = not present, st | kb
            elif op == 1:
                res, nst = present, st & ~kb
            else:
                res, nst = present, st
            if res != results[i]:
                continue
            order.append(i)
            if dfs(done | b, nst):
                return True
            order.pop()
        failed.add((done, st))
        return False

    found = dfs(0, state)
    return found, list(order), explored

