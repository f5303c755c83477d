"""Exact sparse linear algebra over the rationals.

Vectors are dicts {coordinate: Fraction}; coordinates are any hashable keys.
Row reduction runs fraction-free on integer rows through the kernel backend.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm

from ._backend import rref_int


class LinearSolveError(ArithmeticError):
    """The linear system has no solution."""


def _int_row(vec, colindex):
    den = 1
    for v in vec.values():
        den = lcm(den, Fraction(v).denominator)
    out = {}
    for k, v in vec.items():
        if v:
            v = Fraction(v) * den
            out[colindex[k]] = v.numerator
    return out


def transpose(columns):
    """Images of basis vectors (list of vectors) -> rows keyed by coordinate."""
    rows = {}
    for j, col in enumerate(columns):
        for k, v in col.items():
            if v:
                rows.setdefault(k, {})[j] = v
    return rows


def rref(vectors, order=None):
    """Row reduce a list of vectors.

    ``order`` lists coordinates by pivot preference; coordinates not listed
    come afterwards in first-seen order.  Returns (rows, pivots) with rows as
    Fraction vectors normalised to 1 at their pivot.
    """
    keys = list(order) if order is not None else []
    seen = set(keys)
    for v in vectors:
        for k in v:
            if k not in seen:
                seen.add(k)
                keys.append(k)
    colindex = {k: i for i, k in enumerate(keys)}
    irows = [_int_row(v, colindex) for v in vectors]
    prow, pcols = rref_int(irows, len(keys))
    out = []
    for r, c in zip(prow, pcols):
        p = r[c]
        out.append({keys[k]: Fraction(v, p) for k, v in r.items()})
    return out, [keys[c] for c in pcols]


def rank(vectors) -> int:
    return len(rref(vectors)[1])


def nullspace(columns, order=None):
    """Basis of {a : sum_j a_j columns[j] = 0} as vectors {j: Fraction}.

    ``order`` is the pivot preference among the unknowns 0..m-1; changing it
    changes which unknowns end up free.
    """
    m = len(columns)
    rows = list(transpose(columns).values())
    rows_r, piv = rref(rows, order if order is not None else range(m))
    pivset = set(piv)
    basis = []
    for f in range(m):
        if f in pivset:
            continue
        vec = {f: Fraction(1)}
        for r, p in zip(rows_r, piv):
            a = r.get(f)
            if a:
                vec[p] = -a
        basis.append(vec)
    return basis


def solve(columns, target, order=None):
    """One solution a of sum_j a_j columns[j] = target (free unknowns set to 0)."""
    m = len(columns)
    rows = transpose(columns)
    for k, v in target.items():
        if v:
            rows.setdefault(k, {})["rhs"] = v
    ordr = list(order) if order is not None else list(range(m))
    rows_r, piv = rref(list(rows.values()), ordr + ["rhs"])
    if "rhs" in piv:
        raise LinearSolveError("inconsistent linear system")
    sol = {}
    for r, p in zip(rows_r, piv):
        v = r.get("rhs")
        if v:
            sol[p] = v
    return sol


class Echelon:
    """Incrementally maintained reduced basis of a subspace."""

    def __init__(self):
        self.rows = {}  # pivot -> row normalised to 1 at pivot
        self.order = []

    def __len__(self):
        return len(self.rows)

    def reduce(self, vec):
        v = {k: Fraction(c) for k, c in vec.items() if c}
        for p in self.order:
            a = v.get(p)
            if a:
                for k, c in self.rows[p].items():
                    w = v.get(k, 0) - a * c
                    if w:
                        v[k] = w
                    else:
                        v.pop(k, None)
        return v

    def add(self, vec, key=None):
        """Insert ``vec``; returns the reduced vector or None if dependent."""
        v = self.reduce(vec)
        if not v:
            return None
        p = min(v, key=key) if key is not None else next(iter(v))
        a = v[p]
        v = {k: c / a for k, c in v.items()}
        for q in self.order:
            r = self.rows[q]
            b = r.get(p)
            if b:
                for k, c in v.items():
                    w = r.get(k, 0) - b * c
                    if w:
                        r[k] = w
                    else:
                        r.pop(k, None)
        self.rows[p] = v
        self.order.append(p)
        return v

    def contains(self, vec) -> bool:
        return not self.reduce(vec)
