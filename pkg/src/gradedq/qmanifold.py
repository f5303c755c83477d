"""Q-structures: verification, curvature, negative part, zero locus, anchor."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction

from .core import GradedContext, GradedPolynomial, GradingError
from .derivations import Derivation
from .linalg import Echelon, rank


class QStructureError(ArithmeticError):
    """A Q-structure failed a required check."""


@dataclass
class QStructure:
    ctx: GradedContext
    Q: Derivation
    status: str = "unchecked"  # unchecked | verified | failed
    witness: tuple | None = None  # (variable, residual) on failure
    work: Derivation | None = field(default=None, repr=False)  # same field at working precision

    @property
    def verified(self):
        return self.status == "verified"

    def require(self):
        if self.status == "unchecked":
            checked = check_q(self.Q)
            self.status, self.witness = checked.status, checked.witness
        if self.status != "verified":
            var, res = self.witness
            raise QStructureError(f"[Q,Q]({var}) = {res} is not zero")
        return self


def as_q(Q) -> QStructure:
    if isinstance(Q, QStructure):
        return Q
    return QStructure(Q.ctx, Q)


def truncation_loss(X: Derivation):
    """Jet and filtration orders a bracket with X can corrupt at the top."""
    jl = X.min_grade("jet")
    nl = X.min_grade("negative")
    return (max(0, -jl) if jl is not None else 0,
            max(0, -nl) if nl is not None else 0)


def residual_at_truncation(R: Derivation, loss=(0, 0)):
    """Values of R restricted to the layers a lossy computation still controls."""
    ctx = R.ctx
    out = {}
    for i, v in R.values.items():
        sj, sn = ctx.shift_for(i)
        w = v.truncate((sj - loss[0], sn - loss[1]))
        if w:
            out[i] = w
    return out


def check_q(Q: Derivation, reliable_only: bool = False) -> QStructure:
    """Verify [Q,Q] = 0 at truncation.

    Values are treated as exact polynomials.  With ``reliable_only`` the
    values are treated as truncations of an unknown series: layers of [Q,Q]
    that depend on the discarded part are not checked.
    """
    if isinstance(Q, QStructure):
        Q = Q.Q
    if Q.values and Q.degree != 1:
        raise GradingError(f"a Q-structure has degree +1, got {Q.degree}")
    R = Q.commutator(Q)
    loss = truncation_loss(Q) if reliable_only else (0, 0)
    res = residual_at_truncation(R, loss)
    if res:
        i = min(res)
        return QStructure(Q.ctx, Q, "failed", (Q.ctx.names[i], res[i]))
    return QStructure(Q.ctx, Q, "verified")


def curvature(Q) -> dict:
    """Base projection of Q(eta) for every degree -1 variable eta."""
    q = as_q(Q)
    ctx = q.ctx
    return {ctx.names[i]: q.Q.values.get(i, ctx.zero()).base_projection()
            for i in ctx.indices_of_degree(-1)}


def negative_part(Q) -> QStructure:
    q = as_q(Q)
    ctx = q.ctx
    sub = ctx.restrict([n for n, d in zip(ctx.names, ctx.degrees) if d <= 0])
    pos = [n for n, d in zip(ctx.names, ctx.degrees) if d > 0]
    vals = {}
    for i, v in q.Q.values.items():
        name = ctx.names[i]
        if name in sub.index:
            j = sub.index[name]
            w = v.set_zero(pos).restrict_to(sub, sub.shift_for(j))
            if w:
                vals[j] = w
    D = Derivation(sub, vals, 1, check=False)
    status = "verified" if q.status == "verified" else "unchecked"
    return QStructure(sub, D, status)


class JetIdeal:
    """Ideal generated by base jets, truncated at a jet order.

    Membership and normal forms come from a reduced echelon basis of the
    truncated multiples ``m * f``.  Polynomials in further (graded)
    variables are reduced coefficientwise.
    """

    def __init__(self, ctx: GradedContext, generators):
        self.ctx = ctx
        self.base = ctx.restrict([ctx.names[i] for i in ctx.base_indices()])
        self.generators = [g.restrict_to(self.base, (99, 0)) if g.ctx != self.base else g
                           for g in generators]
        for g, h in zip(generators, self.generators):
            if g.base_projection() != g:
                raise GradingError("ideal generators must be base jets")
        self._echelons = {}

    def _key(self, e):
        return (sum(e), tuple(-x for x in e))

    def echelon(self, jet: int) -> Echelon:
        ech = self._echelons.get(jet)
        if ech is None:
            b = self.base.with_truncation(jet, 1, None)
            ech = Echelon()
            gens = [g.to(b) for g in self.generators]
            for m in b.monomials():
                mp = GradedPolynomial(b, {m: Fraction(1)}, check=False)
                for g in gens:
                    ech.add((mp * g).terms, key=self._key)
            self._echelons[jet] = ech
        return ech

    def contains_unit(self, jet=None):
        jet = self.ctx.jet_order if jet is None else jet
        return self.echelon(jet).contains({self.base.zero_exp: 1})

    def reduce(self, p: GradedPolynomial, shift=(0, 0)) -> GradedPolynomial:
        """Normal form of p, reducing each base coefficient."""
        ctx = p.ctx
        base_idx = ctx.base_indices()
        bpos = [self.base.index[ctx.names[i]] for i in base_idx]
        groups = {}
        for e, c in p.terms.items():
            rest = tuple(0 if ctx.degrees[i] == 0 else x for i, x in enumerate(e))
            b = [0] * self.base.nvars
            for i, j in zip(base_idx, bpos):
                b[j] = e[i]
            groups.setdefault(rest, {})[tuple(b)] = c
        out = {}
        for rest, coeff in groups.items():
            # the graded part fixes the room left for the base jet
            jmax = ctx.bounds(*shift)[0]
            if ctx.cap is not None:
                jmax = min(jmax, ctx.bounds(*shift)[2] - ctx.neg_of(rest))
            red = self.echelon(max(jmax, 0)).reduce(coeff)
            for b, c in red.items():
                e = list(rest)
                for i, j in zip(base_idx, bpos):
                    e[i] = b[j]
                out[tuple(e)] = c
        return GradedPolynomial(ctx, out, check=False).truncate(shift)

    def contains(self, p: GradedPolynomial, shift=(0, 0)) -> bool:
        return not self.reduce(p, shift)


@dataclass
class ZeroLocusDGA:
    ideal_generators: list
    ctx: GradedContext  # base and positive variables
    Q_plus: Derivation
    ideal: JetIdeal = field(repr=False)

    def reduce_derivation(self, X: Derivation) -> Derivation:
        vals = {}
        for i, v in X.values.items():
            w = self.ideal.reduce(v, X.ctx.shift_for(i))
            if w:
                vals[i] = w
        return Derivation(X.ctx, vals, X.degree, check=False)

    def squares_to_zero(self, reliable_only=True) -> bool:
        R = self.reduce_derivation(self.Q_plus.commutator(self.Q_plus))
        loss = truncation_loss(self.Q_plus) if reliable_only else (0, 0)
        return not residual_at_truncation(R, loss)

    def same_as(self, other: ZeroLocusDGA) -> bool:
        """Equal ideals and equal Q_plus modulo the ideal."""
        if self.ctx.names != other.ctx.names:
            return False
        a = self.ideal.echelon(self.ctx.jet_order + 1)
        b = other.ideal.echelon(self.ctx.jet_order + 1)
        if len(a) != len(b) or any(not a.contains(r) for r in b.rows.values()):
            return False
        X = other.Q_plus
        if X.ctx != self.ctx:
            X = X.to(self.ctx)
        return self.reduce_derivation(self.Q_plus - X).is_zero()


def zero_locus_dga(Q) -> ZeroLocusDGA:
    q = as_q(Q)
    ctx = q.ctx
    kappa = curvature(q)
    sub = ctx.restrict([n for n, d in zip(ctx.names, ctx.degrees) if d >= 0])
    neg = [n for n, d in zip(ctx.names, ctx.degrees) if d < 0]
    gens = [k.restrict_to(sub, (1, 0)) for k in kappa.values()]
    ideal = JetIdeal(sub, [g for g in gens if g])
    vals = {}
    for i, v in q.Q.values.items():
        name = ctx.names[i]
        if name in sub.index:
            j = sub.index[name]
            sh = sub.shift_for(j)
            w = ideal.reduce(v.set_zero(neg).restrict_to(sub, sh), sh)
            if w:
                vals[j] = w
    Qp = Derivation(sub, vals, 1, check=False)
    return ZeroLocusDGA(list(kappa.values()), sub, Qp, ideal)


@dataclass
class Anchor:
    rows: list  # base variable names
    cols: list  # degree +1 variable names
    matrix: list  # list of lists of Fraction
    rank: int
    at_zero_locus: bool


def anchor(Q) -> Anchor:
    q = as_q(Q)
    ctx = q.ctx
    rows = ctx.base_indices()
    cols = ctx.indices_of_degree(1)
    mat = []
    for i in rows:
        v = q.Q.values.get(i, ctx.zero())
        line = []
        for j in cols:
            e = [0] * ctx.nvars
            e[j] = 1
            line.append(v.terms.get(tuple(e), Fraction(0)))
        mat.append(line)
    r = rank([{k: c for k, c in enumerate(line) if c} for line in mat])
    at_zero = all(k.constant_term() == 0 for k in curvature(q).values())
    if not at_zero:
        warnings.warn("curvature does not vanish at the origin: the anchor "
                      "depends on the chosen splitting", stacklevel=2)
    return Anchor([ctx.names[i] for i in rows], [ctx.names[j] for j in cols], mat, r, at_zero)
