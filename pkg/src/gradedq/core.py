"""Graded-commutative polynomials with exact rational coefficients.

A :class:`GradedContext` fixes the coordinates of one chart (base variables of
degree 0 and graded generators of nonzero degree) together with a truncation:
base jets of order at most ``jet_order`` and negative degree strictly below
``filtration_order``.  Working contexts used inside the algorithms may instead
be bounded by a cap on jet + negative degree.

Monomials are exponent tuples in declaration order; odd variables carry
exponent 0 or 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from ._backend import left_partial, mul_terms


class GradingError(ValueError):
    """Raised on inconsistent degrees, unknown variables or bad contexts."""


NO_CAP = 1 << 40

GRADINGS = ("total", "negative", "positive", "arity", "jet")


def to_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, str)):
        return Fraction(c)
    raise GradingError(f"coefficient must be rational, got {c!r}")


class GradedContext:
    """Variables of one chart plus truncation orders."""

    def __init__(self, variables: Iterable, jet_order: int = 3,
                 filtration_order: int = 4, cap: int | None = None):
        names, degrees = [], []
        for item in variables:
            name, deg = item
            if not isinstance(deg, int):
                raise GradingError(f"degree of {name} must be an integer")
            if name in names:
                raise GradingError(f"duplicate variable {name}")
            names.append(str(name))
            degrees.append(deg)
        if jet_order < 0:
            raise GradingError("jet_order must be >= 0")
        if filtration_order < 1:
            raise GradingError("filtration_order must be >= 1")
        self.names = tuple(names)
        self.degrees = tuple(degrees)
        self.jet_order = jet_order
        self.filtration_order = filtration_order
        self.cap = cap
        self.index = {n: i for i, n in enumerate(names)}
        self.odd = tuple(bool(d % 2) for d in degrees)
        self.jetw = tuple(1 if d == 0 else 0 for d in degrees)
        self.negw = tuple(-d if d < 0 else 0 for d in degrees)
        self.posw = tuple(d if d > 0 else 0 for d in degrees)
        self.arityw = tuple(0 if d == 0 else 1 for d in degrees)
        self.nvars = len(names)
        self.zero_exp = (0,) * self.nvars

    # -- identity -----------------------------------------------------------
    def key(self):
        return (self.names, self.degrees, self.jet_order,
                self.filtration_order, self.cap)

    def __eq__(self, other):
        return isinstance(other, GradedContext) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def same_chart(self, other: GradedContext) -> bool:
        return self.names == other.names and self.degrees == other.degrees

    def __repr__(self):
        vs = ", ".join(f"{n}:{d}" for n, d in zip(self.names, self.degrees))
        cap = "" if self.cap is None else f", cap={self.cap}"
        return (f"GradedContext([{vs}], jet={self.jet_order}, "
                f"filt={self.filtration_order}{cap})")

    # -- derived contexts ---------------------------------------------------
    def with_truncation(self, jet_order=None, filtration_order=None, cap="keep"):
        return GradedContext(
            zip(self.names, self.degrees),
            self.jet_order if jet_order is None else jet_order,
            self.filtration_order if filtration_order is None else filtration_order,
            self.cap if cap == "keep" else cap,
        )

    def working(self, margin: int = 2) -> GradedContext:
        """Context bounded only by jet + negative degree, containing this one.

        Every monomial visible in ``self`` has jet + negative degree at most
        jet_order + filtration_order - 1, so a cap ``margin`` above that keeps
        one-step truncation losses out of the visible region.
        """
        c = self.jet_order + self.filtration_order - 1 + margin
        if self.cap is not None:
            c = min(c, self.cap + margin)
        return GradedContext(zip(self.names, self.degrees), c, c + 1, c)

    def extend(self, variables: Iterable) -> GradedContext:
        return GradedContext(list(zip(self.names, self.degrees)) + list(variables),
                             self.jet_order, self.filtration_order, self.cap)

    def restrict(self, names: Iterable[str]) -> GradedContext:
        keep = set(names)
        return GradedContext([(n, d) for n, d in zip(self.names, self.degrees) if n in keep],
                             self.jet_order, self.filtration_order, self.cap)

    # -- variables ----------------------------------------------------------
    def idx(self, name) -> int:
        if isinstance(name, int):
            return name
        try:
            return self.index[name]
        except KeyError:
            raise GradingError(f"unknown variable {name!r}") from None

    def degree_of(self, name) -> int:
        return self.degrees[self.idx(name)]

    def base_indices(self):
        return [i for i, d in enumerate(self.degrees) if d == 0]

    def indices_of_degree(self, deg):
        return [i for i, d in enumerate(self.degrees) if d == deg]

    def var(self, name) -> GradedPolynomial:
        i = self.idx(name)
        e = [0] * self.nvars
        e[i] = 1
        return GradedPolynomial(self, {tuple(e): Fraction(1)})

    def const(self, c) -> GradedPolynomial:
        return GradedPolynomial(self, {self.zero_exp: to_fraction(c)})

    def zero(self) -> GradedPolynomial:
        return GradedPolynomial(self, {}, check=False)

    # -- truncation ---------------------------------------------------------
    def bounds(self, shift_jet: int = 0, shift_neg: int = 0):
        cap = NO_CAP if self.cap is None else self.cap + shift_jet + shift_neg
        return (self.jet_order + shift_jet,
                self.filtration_order - 1 + shift_neg, cap)

    def shift_for(self, i: int):
        """Extra room for the coefficient of d/d(variable i) in a derivation."""
        return self.jetw[i], self.negw[i]

    def jet_of(self, e) -> int:
        return sum(w * x for w, x in zip(self.jetw, e))

    def neg_of(self, e) -> int:
        return sum(w * x for w, x in zip(self.negw, e))

    def keeps(self, e, shift_jet=0, shift_neg=0) -> bool:
        jmax, nmax, cap = self.bounds(shift_jet, shift_neg)
        j = self.jet_of(e)
        g = self.neg_of(e)
        return j <= jmax and g <= nmax and j + g <= cap

    def grade(self, e, grading: str) -> int:
        if grading == "total":
            return sum(d * x for d, x in zip(self.degrees, e))
        if grading == "negative":
            return self.neg_of(e)
        if grading == "positive":
            return sum(w * x for w, x in zip(self.posw, e))
        if grading == "arity":
            return sum(w * x for w, x in zip(self.arityw, e))
        if grading == "jet":
            return self.jet_of(e)
        raise GradingError(f"unknown grading {grading!r}")

    # -- monomial bases -----------------------------------------------------
    def monomials(self, total=None, pos_cap=None, shift_jet=0, shift_neg=0):
        """All monomials kept by the truncation, optionally of fixed total degree.

        Even positive variables are unbounded in general; their contribution
        is limited by ``pos_cap`` (positive degree) or by the total degree.
        """
        jmax, nmax, cap = self.bounds(shift_jet, shift_neg)
        if total is not None:
            pmax = total + nmax
            if pos_cap is not None:
                pmax = min(pmax, pos_cap)
        else:
            pmax = pos_cap if pos_cap is not None else (
                sum(self.posw) if not any(p and not o for p, o in zip(self.posw, self.odd)) else None)
            if pmax is None:
                raise GradingError("pos_cap needed with even positive variables")
        out = []
        n = self.nvars

        def rec(i, e, j, g, p, t):
            if i == n:
                if total is None or t == total:
                    out.append(tuple(e))
                return
            d = self.degrees[i]
            k = 0
            while True:
                jj = j + self.jetw[i] * k
                gg = g + self.negw[i] * k
                pp = p + self.posw[i] * k
                if jj > jmax or gg > nmax or pp > pmax or jj + gg > cap:
                    break
                e.append(k)
                rec(i + 1, e, jj, gg, pp, t + d * k)
                e.pop()
                if self.odd[i] and k == 1:
                    break
                k += 1

        rec(0, [], 0, 0, 0, 0)
        return out

    def format_monomial(self, e) -> str:
        parts = []
        for name, x in zip(self.names, e):
            if x == 1:
                parts.append(name)
            elif x > 1:
                parts.append(f"{name}^{x}")
        return "*".join(parts)


def canonicalize(ctx: GradedContext, factors: Iterable):
    """Sort a product of variables into declaration order.

    ``factors`` is a sequence of names or (name, exponent) pairs.  Returns
    ``(exponents, sign)``; sign is 0 when an odd variable is repeated.
    """
    seq = []
    for f in factors:
        if isinstance(f, tuple):
            name, k = f
        else:
            name, k = f, 1
        i = ctx.idx(name)
        if k < 0:
            raise GradingError("negative exponent")
        if ctx.odd[i] and k > 1:
            return ctx.zero_exp, 0
        seq.extend([i] * k)
    sign = 1
    # bubble sort counting swaps of odd pairs
    arr = list(seq)
    for a in range(len(arr)):
        for b in range(len(arr) - 1 - a):
            if arr[b] > arr[b + 1]:
                if ctx.odd[arr[b]] and ctx.odd[arr[b + 1]]:
                    sign = -sign
                arr[b], arr[b + 1] = arr[b + 1], arr[b]
    e = [0] * ctx.nvars
    for i in arr:
        e[i] += 1
        if ctx.odd[i] and e[i] > 1:
            return ctx.zero_exp, 0
    return tuple(e), sign


@dataclass(frozen=True)
class DegreeReport:
    total: int
    positive: int
    negative: int
    arity: int


def degree_report(ctx, e=None) -> DegreeReport:
    """Four degrees of a monomial, or of a polynomial whose terms all share them.

    ``degree_report(ctx, exponents)`` or ``degree_report(polynomial)``.
    """
    if isinstance(ctx, GradedPolynomial):
        return ctx.degree_report()
    return DegreeReport(ctx.grade(e, "total"), ctx.grade(e, "positive"),
                        ctx.grade(e, "negative"), ctx.grade(e, "arity"))


class GradedPolynomial:
    """Finite sum of monomials with Fraction coefficients, truncated by ``ctx``."""

    __slots__ = ("ctx", "terms")

    def __init__(self, ctx: GradedContext, terms: Mapping | None = None,
                 check: bool = True, shift=(0, 0)):
        self.ctx = ctx
        if not terms:
            self.terms = {}
            return
        if check:
            out = {}
            for e, c in terms.items():
                e = tuple(e)
                if len(e) != ctx.nvars:
                    raise GradingError("exponent tuple has wrong length")
                if any(x < 0 for x in e) or any(o and x > 1 for o, x in zip(ctx.odd, e)):
                    raise GradingError(f"invalid exponents {e}")
                c = to_fraction(c)
                if c and ctx.keeps(e, *shift):
                    out[e] = out.get(e, 0) + c
            self.terms = {e: c for e, c in out.items() if c}
        else:
            self.terms = dict(terms)

    # -- construction -------------------------------------------------------
    @classmethod
    def from_factors(cls, ctx, coeff, factors):
        e, s = canonicalize(ctx, factors)
        if s == 0:
            return ctx.zero()
        return cls(ctx, {e: to_fraction(coeff) * s})

    # -- basic protocol -----------------------------------------------------
    def __bool__(self):
        return bool(self.terms)

    def is_zero(self):
        return not self.terms

    def __len__(self):
        return len(self.terms)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.ctx.const(other)
        if not isinstance(other, GradedPolynomial):
            return NotImplemented
        return self.ctx.same_chart(other.ctx) and self.terms == other.terms

    __hash__ = None

    def _coerce(self, other):
        if isinstance(other, GradedPolynomial):
            if not self.ctx.same_chart(other.ctx):
                raise GradingError("polynomials live on different charts")
            return other
        return self.ctx.const(other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            v = out.get(e, 0) + c
            if v:
                out[e] = v
            else:
                out.pop(e, None)
        return GradedPolynomial(self.ctx, out, check=False)

    __radd__ = __add__

    def __neg__(self):
        return GradedPolynomial(self.ctx, {e: -c for e, c in self.terms.items()}, check=False)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def scale(self, c):
        c = to_fraction(c)
        if not c:
            return self.ctx.zero()
        return GradedPolynomial(self.ctx, {e: v * c for e, v in self.terms.items()}, check=False)

    def mul(self, other, shift=(0, 0)):
        other = self._coerce(other)
        jmax, nmax, cap = self.ctx.bounds(*shift)
        t = mul_terms(self.terms, other.terms, self.ctx.odd, self.ctx.jetw,
                      self.ctx.negw, jmax, nmax, cap)
        return GradedPolynomial(self.ctx, t, check=False)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return self.mul(other)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return self._coerce(other).mul(self)

    def __pow__(self, k: int):
        if k < 0:
            raise GradingError("negative power")
        out = self.ctx.const(1)
        for _ in range(k):
            out = out * self
        return out

    # -- gradings -----------------------------------------------------------
    def degrees(self, grading="total"):
        return {self.ctx.grade(e, grading) for e in self.terms}

    @property
    def degree(self):
        """Total degree, or None for zero or inhomogeneous polynomials."""
        ds = self.degrees("total")
        return ds.pop() if len(ds) == 1 else None

    def degree_report(self) -> DegreeReport:
        reports = {degree_report(self.ctx, e) for e in self.terms}
        if len(reports) != 1:
            raise GradingError("no single degree report: terms differ in degree"
                               if reports else "zero has no degree report")
        return reports.pop()

    def is_homogeneous(self, grading="total"):
        return len(self.degrees(grading)) <= 1

    def homogeneous_component(self, grading, n):
        g = self.ctx.grade
        return GradedPolynomial(self.ctx, {e: c for e, c in self.terms.items()
                                           if g(e, grading) == n}, check=False)

    def components(self, grading):
        out = {}
        for e, c in self.terms.items():
            out.setdefault(self.ctx.grade(e, grading), {})[e] = c
        return {k: GradedPolynomial(self.ctx, v, check=False) for k, v in sorted(out.items())}

    # -- structure ----------------------------------------------------------
    def constant_term(self) -> Fraction:
        return self.terms.get(self.ctx.zero_exp, Fraction(0))

    def base_projection(self):
        """Set every nonzero-degree variable to zero."""
        ctx = self.ctx
        keep = [i for i, d in enumerate(ctx.degrees) if d != 0]
        return GradedPolynomial(ctx, {e: c for e, c in self.terms.items()
                                      if not any(e[i] for i in keep)}, check=False)

    def set_zero(self, names):
        idx = [self.ctx.idx(n) for n in names]
        return GradedPolynomial(self.ctx, {e: c for e, c in self.terms.items()
                                           if not any(e[i] for i in idx)}, check=False)

    def involves(self, name) -> bool:
        i = self.ctx.idx(name)
        return any(e[i] for e in self.terms)

    def left_partial(self, name):
        i = self.ctx.idx(name)
        return GradedPolynomial(self.ctx, left_partial(self.terms, i, self.ctx.odd), check=False)

    def truncate(self, shift=(0, 0)):
        keeps = self.ctx.keeps
        return GradedPolynomial(self.ctx, {e: c for e, c in self.terms.items()
                                           if keeps(e, *shift)}, check=False)

    def to(self, ctx: GradedContext, shift=(0, 0)):
        """Reinterpret on a context of the same chart, truncating as needed."""
        if ctx is self.ctx or ctx == self.ctx and shift == (0, 0):
            return self if ctx is self.ctx else GradedPolynomial(ctx, self.terms, check=False)
        if not ctx.same_chart(self.ctx):
            raise GradingError("different charts")
        keeps = ctx.keeps
        return GradedPolynomial(ctx, {e: c for e, c in self.terms.items()
                                      if keeps(e, *shift)}, check=False)

    def embed(self, ctx: GradedContext, shift=(0, 0)):
        """Move onto a context whose variables contain ours (matched by name)."""
        pos = [ctx.idx(n) for n in self.ctx.names]
        for n, d in zip(self.ctx.names, self.ctx.degrees):
            if ctx.degree_of(n) != d:
                raise GradingError(f"degree of {n} differs")
        out = {}
        for e, c in self.terms.items():
            new = [0] * ctx.nvars
            for i, x in zip(pos, e):
                new[i] = x
            out[tuple(new)] = c
        return GradedPolynomial(ctx, out, check=False).truncate(shift)

    def restrict_to(self, ctx: GradedContext, shift=(0, 0)):
        """Drop terms involving variables absent from ``ctx`` and reindex."""
        pos = [ctx.index.get(n) for n in self.ctx.names]
        out = {}
        for e, c in self.terms.items():
            new = [0] * ctx.nvars
            ok = True
            for i, x in zip(pos, e):
                if x:
                    if i is None:
                        ok = False
                        break
                    new[i] = x
            if ok:
                out[tuple(new)] = c
        return GradedPolynomial(ctx, out, check=False).truncate(shift)

    def substitute(self, images: Mapping, shift=(0, 0), cache=None):
        """Apply the algebra map sending variable i to ``images[i]``.

        Variables missing from ``images`` are fixed.  Images must preserve
        degrees so no extra signs arise.
        """
        ctx = self.ctx
        if cache is None:
            cache = {}
        out = ctx.zero()
        for e, c in self.terms.items():
            term = ctx.const(c)
            for i, x in enumerate(e):
                if not x:
                    continue
                img = images.get(i)
                if img is None:
                    img = ctx.var(i)
                key = (i, x)
                p = cache.get(key)
                if p is None:
                    p = img
                    for _ in range(x - 1):
                        p = p.mul(img, shift)
                    cache[key] = p
                term = term.mul(p, shift)
                if not term:
                    break
            out = out + term
        return out

    # -- display ------------------------------------------------------------
    def sorted_terms(self):
        ctx = self.ctx
        return sorted(self.terms.items(),
                      key=lambda t: (ctx.jet_of(t[0]) + ctx.neg_of(t[0]), sum(t[0]),
                                     tuple(-x for x in t[0])))

    def __str__(self):
        if not self.terms:
            return "0"
        out = []
        for e, c in self.sorted_terms():
            m = self.ctx.format_monomial(e)
            neg = c < 0
            a = -c if neg else c
            if not m:
                body = str(a)
            elif a == 1:
                body = m
            elif a.denominator == 1:
                body = f"{a}*{m}"
            else:
                body = f"({a})*{m}"
            if not out:
                out.append(("-" if neg else "") + body)
            else:
                out.append((" - " if neg else " + ") + body)
        return "".join(out)

    def __repr__(self):
        return f"GradedPolynomial({self})"


def multiply(p: GradedPolynomial, q: GradedPolynomial) -> GradedPolynomial:
    return p * q


def homogeneous_component(p: GradedPolynomial, grading: str, n: int) -> GradedPolynomial:
    return p.homogeneous_component(grading, n)
