"""Pure-Python versions of the hot loops.

The compiled module ``_kernels`` exposes the same three functions; ``_backend``
picks one at import time.
"""

from math import gcd


def mul_terms(a, b, odd, jetw, negw, jmax, nmax, cap):
    """Product of two term dicts {exponent tuple: coefficient}.

    Monomials whose base jet exceeds ``jmax``, whose negative degree exceeds
    ``nmax`` or whose jet + negative degree exceeds ``cap``
    are dropped.  Signs follow the Koszul rule for the odd positions.
    """
    out = {}
    n = len(odd)
    if not a or not b:
        return out
    pre_a = []
    for ea, ca in a.items():
        j = 0
        g = 0
        for i in range(n):
            e = ea[i]
            if e:
                j += jetw[i] * e
                g += negw[i] * e
        pre_a.append((ea, ca, j, g))
    pre_b = []
    for eb, cb in b.items():
        j = 0
        g = 0
        for i in range(n):
            e = eb[i]
            if e:
                j += jetw[i] * e
                g += negw[i] * e
        pre_b.append((eb, cb, j, g))
    for ea, ca, ja, ga in pre_a:
        for eb, cb, jb, gb in pre_b:
            j = ja + jb
            if j > jmax:
                continue
            g = ga + gb
            if g > nmax:
                continue
            if j + g > cap:
                continue
            # walk from the right keeping the parity of odd factors of ea seen so far
            sign = 0
            seen = 0
            dead = False
            for i in range(n - 1, -1, -1):
                if odd[i]:
                    x = ea[i]
                    y = eb[i]
                    if x and y:
                        dead = True
                        break
                    if y:
                        sign ^= seen
                    if x:
                        seen ^= 1
            if dead:
                continue
            e = tuple([ea[i] + eb[i] for i in range(n)])
            c = ca * cb
            if sign:
                c = -c
            v = out.get(e)
            if v is None:
                out[e] = c
            else:
                v = v + c
                if v:
                    out[e] = v
                else:
                    del out[e]
    return out


def left_partial(f, k, odd):
    """Left derivative of a term dict with respect to variable ``k``."""
    out = {}
    odd_k = odd[k]
    for e, c in f.items():
        p = e[k]
        if not p:
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


def _content(row):
    g = 0
    for v in row.values():
        g = gcd(g, v)
        if g == 1:
            return 1
    return g


def rref_int(rows, ncols, order=None):
    """Fraction-free sparse row reduction.

    ``rows`` is a list of dicts {column: int}.  ``order`` is the pivot column
    preference (defaults to 0..ncols-1).  Returns (pivot rows, pivot columns)
    with every pivot row primitive, positive at its pivot, and zero in every
    other pivot column.
    """
    if order is None:
        order = range(ncols)
    rank = {c: i for i, c in enumerate(order)}
    piv = {}
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
            mp = p // g
            ma = a // g
            new = {}
            for c, v in row.items():
                new[c] = v * mp
            for c, v in prow.items():
                w = new.get(c, 0) - v * ma
                if w:
                    new[c] = w
                else:
                    new.pop(c, None)
            g = _content(new) if new else 1
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
    # back substitution so pivot columns are cleared everywhere
    cols = sorted(piv, key=rank.__getitem__)
    for i in range(len(cols) - 1, -1, -1):
        ci = cols[i]
        ri = piv[ci]
        pi = ri[ci]
        for cj in cols[:i]:
            rj = piv[cj]
            a = rj.get(ci)
            if not a:
                continue
            g = gcd(pi, a)
            mp = pi // g
            ma = a // g
            new = {c: v * mp for c, v in rj.items()}
            for c, v in ri.items():
                w = new.get(c, 0) - v * ma
                if w:
                    new[c] = w
                else:
                    new.pop(c, None)
            g = _content(new)
            if g > 1:
                new = {c: v // g for c, v in new.items()}
            piv[cj] = new
    return [piv[c] for c in cols], cols
