# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled versions of the hot loops in ``_pykernels``."""

from math import gcd
from libc.stdlib cimport malloc, free


def mul_terms(dict a, dict b, tuple odd, tuple jetw, tuple negw,
              long jmax, long nmax, long cap):
    cdef dict out = {}
    cdef Py_ssize_t n = len(odd)
    cdef Py_ssize_t na = len(a), nb = len(b)
    if na == 0 or nb == 0:
        return out
    cdef long *A = <long *> malloc(na * n * sizeof(long))
    cdef long *B = <long *> malloc(nb * n * sizeof(long))
    cdef long *ja = <long *> malloc(na * sizeof(long))
    cdef long *ga = <long *> malloc(na * sizeof(long))
    cdef long *jb = <long *> malloc(nb * sizeof(long))
    cdef long *gb = <long *> malloc(nb * sizeof(long))
    cdef int *od = <int *> malloc((n + 1) * sizeof(int))
    cdef long *jw = <long *> malloc((n + 1) * sizeof(long))
    cdef long *nw = <long *> malloc((n + 1) * sizeof(long))
    cdef Py_ssize_t i, p, q
    cdef long j, g, x, y
    cdef int sign, seen, dead
    cdef list ca = [None] * na
    cdef list cb = [None] * nb
    try:
        for i in range(n):
            od[i] = 1 if odd[i] else 0
            jw[i] = jetw[i]
            nw[i] = negw[i]
        p = 0
        for e, c in a.items():
            ca[p] = c
            j = 0
            g = 0
            for i in range(n):
                x = e[i]
                A[p * n + i] = x
                j += jw[i] * x
                g += nw[i] * x
            ja[p] = j
            ga[p] = g
            p += 1
        q = 0
        for e, c in b.items():
            cb[q] = c
            j = 0
            g = 0
            for i in range(n):
                x = e[i]
                B[q * n + i] = x
                j += jw[i] * x
                g += nw[i] * x
            jb[q] = j
            gb[q] = g
            q += 1
        for p in range(na):
            for q in range(nb):
                j = ja[p] + jb[q]
                if j > jmax:
                    continue
                g = ga[p] + gb[q]
                if g > nmax:
                    continue
                if j + g > cap:
                    continue
                sign = 0
                seen = 0
                dead = 0
                i = n - 1
                while i >= 0:
                    if od[i]:
                        x = A[p * n + i]
                        y = B[q * n + i]
                        if x and y:
                            dead = 1
                            break
                        if y:
                            sign ^= seen
                        if x:
                            seen ^= 1
                    i -= 1
                if dead:
                    continue
                key = tuple([A[p * n + i] + B[q * n + i] for i in range(n)])
                c = ca[p] * cb[q]
                if sign:
                    c = -c
                v = out.get(key)
                if v is None:
                    out[key] = c
                else:
                    v = v + c
                    if v:
                        out[key] = v
                    else:
                        del out[key]
    finally:
        free(A)
        free(B)
        free(ja)
        free(ga)
        free(jb)
        free(gb)
        free(od)
        free(jw)
        free(nw)
    return out


def left_partial(dict f, Py_ssize_t k, tuple odd):
    cdef dict out = {}
    cdef bint odd_k = odd[k]
    cdef Py_ssize_t i
    cdef long p
    cdef int s
    for e, c in f.items():
        p = e[k]
        if p == 0:
            continue
        if odd_k:
            s = 0
            for i in range(k):
                if odd[i] and e[i]:
                    s ^= 1
            if s:
                c = -c
        else:
            c = c * p
        lst = list(e)
        lst[k] = p - 1
        t = tuple(lst)
        v = out.get(t)
        out[t] = c if v is None else v + c
    return {t: c for t, c in out.items() if c}


cdef object _content(dict row):
    g = 0
    for v in row.values():
        g = gcd(g, v)
        if g == 1:
            return 1
    return g


cdef dict _combine(dict row, dict prow, object mp, object ma):
    cdef dict new = {}
    for c, v in row.items():
        new[c] = v * mp
    for c, v in prow.items():
        w = new.get(c, 0) - v * ma
        if w:
            new[c] = w
        else:
            new.pop(c, None)
    return new


def rref_int(list rows, Py_ssize_t ncols, order=None):
    if order is None:
        order = range(ncols)
    cdef dict rank = {c: i for i, c in enumerate(order)}
    cdef dict piv = {}
    cdef dict row, prow, new
    for r in rows:
        row = {c: v for c, v in r.items() if v}
        while row:
            col = min(row, key=rank.__getitem__)
            if col not in piv:
                break
            prow = piv[col]
            p = prow[col]
            a = row[col]
            g = gcd(p, a)
            new = _combine(row, prow, p // g, a // g)
            if new:
                g = _content(new)
                if g > 1:
                    new = {c: v // g for c, v in new.items()}
            row = new
        if not row:
            continue
        col = min(row, key=rank.__getitem__)
        if row[col] < 0:
            row = {c: -v for c, v in row.items()}
        g = _content(row)
        if g > 1:
            row = {c: v // g for c, v in row.items()}
        piv[col] = row
    cols = sorted(piv, key=rank.__getitem__)
    cdef Py_ssize_t ii
    for ii in range(len(cols) - 1, -1, -1):
        ci = cols[ii]
        ri = piv[ci]
        pi = ri[ci]
        for cj in cols[:ii]:
            rj = piv[cj]
            a = rj.get(ci)
            if not a:
                continue
            g = gcd(pi, a)
            new = _combine(rj, ri, pi // g, a // g)
            g = _content(new)
            if g > 1:
                new = {c: v // g for c, v in new.items()}
            piv[cj] = new
    return [piv[c] for c in cols], cols
