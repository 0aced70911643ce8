# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled twin of ``_pykernels``; same signatures, same search order."""

from libc.stdint cimport uint64_t

cdef enum:
    MAXN = 31


cdef struct Search:
    int n
    uint64_t full
    int ops[MAXN]
    int kbits[MAXN]
    int results[MAXN]
    uint64_t preds[MAXN]
    int order[MAXN]
    int depth
    long explored


cdef bint _dfs(Search* s, uint64_t done, uint64_t st, set failed) except -1:
    cdef int i, op
    cdef uint64_t b, kb, nst
    cdef bint present, res
    if done == s.full:
        return True
    key = (done, st)
    if key in failed:
        return False
    s.explored += 1
    for i in range(s.n):
        b = (<uint64_t>1) << i
        if done & b or s.preds[i] & ~done:
            continue
        kb = (<uint64_t>1) << s.kbits[i]
        present = (st & kb) != 0
        op = s.ops[i]
        if op == 0:
            res = not present
            nst = st | kb
        elif op == 1:
            res = present
            nst = st & ~kb
        else:
            res = present
            nst = st
        if res != s.results[i]:
            continue
        s.order[s.depth] = i
        s.depth += 1
        if _dfs(s, done | b, nst, failed):
            return True
        s.depth -= 1
    failed.add(key)
    return False


def linearize(ops, kbits, results, preds, state):
    """Search for an order of methods that extends ``preds`` and reproduces ``results``.

    Returns ``(found, order, explored)``.  Falls back to the Python search
    for more than 31 methods or more than 64 keys.
    """
    cdef Search s
    cdef int i
    n = len(ops)
    if n > MAXN or (n and max(kbits) >= 64) or state >= 2**64:
        from ._pykernels import linearize as slow
        return slow(ops, kbits, results, preds, state)
    s.n = n
    s.full = ((<uint64_t>1) << n) - 1
    s.depth = 0
    s.explored = 0
    for i in range(n):
        s.ops[i] = ops[i]
        s.kbits[i] = kbits[i]
        s.results[i] = 1 if results[i] else 0
        s.preds[i] = preds[i]
    found = _dfs(&s, 0, state, set())
    return bool(found), [s.order[i] for i in range(s.depth)], s.explored
