"""Q-structures from a Koszul-Tate differential plus a zero-locus differential.

``construct_q`` builds Q = delta + q0 + q1 + ... with q_i of negative
degree i, one linear solve per degree; ``intertwine`` finds degree-0 flows
carrying one such Q to another with the same data.

Both run on the working context of the target box.  The layer of a term
m d/dz is jet + negative degree of m minus that of z; brackets add layers
and every term of a degree +1 field has layer >= -1.  A stage that leaves
its equation unsolved above some layer spoils the next stage one layer
lower, while the caller's box needs negative degree i up to layer J + i.
Stage i (negative degree i of [Q, Q], or of Q' - Q) is therefore imposed on
layers <= J + 2N - 2 - i, which is exactly what the last stage N - 1 needs;
higher layers are left alone, since a truncated resolution may carry
cohomology there.  The working context needs margin >= N (the default).
Inputs given on a smaller context are read as exact polynomials.
"""

from __future__ import annotations

from fractions import Fraction

from .core import GradedContext, GradingError
from .derivations import Derivation, FlowLog, FlowStep
from .koszul_tate import _basis_field, _devec, _dvec, derivation_basis
from .linalg import LinearSolveError, solve
from .qmanifold import (QStructure, ZeroLocusDGA, as_q, check_q,
                        negative_part, zero_locus_dga)


class PerturbationError(ArithmeticError):
    """Inputs inconsistent, or a degree could not be solved at truncation."""


def _layer(ctx, i, e):
    return ctx.jet_of(e) + ctx.neg_of(e) - ctx.jetw[i] - ctx.negw[i]


def _below(vec, ctx, top):
    return {k: c for k, c in vec.items() if _layer(ctx, k[0], k[1]) <= top}


def _pivot_order(n, order):
    if order is None or order == "first":
        return list(range(n))
    if order == "last":
        return list(range(n - 1, -1, -1))
    return list(order)


def solve_ad(delta: Derivation, target: Derivation, total: int, neg: int,
             only=None, order=None, top=None) -> Derivation:
    """X of the given degrees with [delta, X] = target on layers <= ``top``."""
    W = delta.ctx
    top = W.cap - 1 if top is None else top
    basis = derivation_basis(W, total, neg, only)
    cols = [_below(_dvec(delta.commutator(_basis_field(W, i, m, total))), W, top)
            for i, m in basis]
    sol = solve(cols, _below(_dvec(target), W, top), _pivot_order(len(basis), order))
    return _devec(W, {basis[j]: c for j, c in sol.items()}, total)


def _working(user, margin):
    if margin is None:
        margin = user.filtration_order
    if margin < user.filtration_order:
        raise PerturbationError(f"margin must be at least the filtration order "
                                f"{user.filtration_order}")
    return user.working(margin)


def _stage_top(user, i):
    """Highest layer on which stage i is imposed."""
    return user.jet_order + 2 * user.filtration_order - 2 - i


def _field(X, W):
    """Bring exact data onto W (same chart or a subset of its variables)."""
    if isinstance(X, QStructure):
        X = X.work if X.work is not None else X.Q
    if X.ctx.same_chart(W):
        return X.to(W)
    return X.embed(W)


def _plus_on(Qplus, ctx: GradedContext) -> Derivation:
    if isinstance(Qplus, Derivation):
        return Qplus.embed(ctx) if not Qplus.ctx.same_chart(ctx) else Qplus.to(ctx)
    vals = {n: p.embed(ctx) for n, p in Qplus.items()}
    return Derivation(ctx, vals, 1)


def construct_q(dt, Qplus, ctx: GradedContext | None = None, order=None,
                margin: int | None = None) -> QStructure:
    """Q with negative part delta~ and zero-locus differential Qplus.

    ``dt`` is the assembled differential (QStructure or Derivation),
    ``Qplus`` a degree +1 derivation of the base and positive variables
    (or a dict name -> polynomial).  ``order`` picks the pivot preference of
    the linear solves ("first", "last" or an explicit permutation).
    """
    dq = as_q(dt)
    F = dq.ctx
    user = ctx or F
    W = _working(user, margin)
    delta = _field(dq.Q, W)
    if not check_q(delta).verified:
        raise PerturbationError("delta~ does not square to zero")
    if any(v.involves(n) for v in delta.values.values()
           for n, d in zip(W.names, W.degrees) if d > 0):
        raise PerturbationError("delta~ must not involve positive generators")

    base_loc = zero_locus_dga(QStructure(W, delta))
    K = base_loc.ctx
    qp_K = _plus_on(Qplus, K)
    if qp_K.values and qp_K.degree != 1:
        raise GradingError("Qplus must have degree +1")
    I = base_loc.ideal
    zl = ZeroLocusDGA(base_loc.ideal_generators, K, qp_K, I)
    for f in I.generators:
        img = qp_K(f.embed(K))
        if I.reduce(img, (1, 0)):
            raise PerturbationError(f"Qplus does not preserve the ideal: Qplus({f}) = {img}")
    R = zl.reduce_derivation(qp_K.commutator(qp_K))
    R = R.filter_terms(lambda i, e: _layer(K, i, e) <= _stage_top(user, 0))
    if R:
        raise PerturbationError(f"Qplus does not square to zero modulo the ideal: [Qplus, Qplus] = {R}")

    Qp = qp_K.embed(W)
    negs = {i for i, d in enumerate(W.degrees) if d < 0}
    transcript = []
    try:
        u = solve_ad(delta, -delta.commutator(Qp), 1, 0, negs, order, _stage_top(user, -1))
    except LinearSolveError:
        raise PerturbationError("no degree-0 lift of Qplus at truncation "
                                "(negative degree 0)") from None
    Q = delta + Qp + u
    transcript.append((0, str(u)))
    for i in range(0, user.filtration_order):
        top = _stage_top(user, i)
        D = Q.commutator(Q).component("negative", i)
        D = D.filter_terms(lambda k, e: _layer(W, k, e) <= top)
        if not D:
            continue
        # solvability witness: D is an ad_delta cocycle on the layers solved
        w = delta.commutator(D).filter_terms(lambda k, e: _layer(W, k, e) <= top)
        if w:
            raise PerturbationError(f"defect of negative degree {i} is not a cocycle: {w}")
        try:
            q = solve_ad(delta, D.scale(Fraction(-1, 2)), 1, i + 1, None, order, top)
        except LinearSolveError:
            raise PerturbationError(f"no correction in negative degree {i + 1}: "
                                    "inconsistent inputs or truncation too small") from None
        Q = Q + q
        transcript.append((i + 1, str(q)))

    out = Q.to(user)
    if Q.commutator(Q).to(user):
        raise PerturbationError("[Q, Q] != 0 at truncation")
    res = QStructure(user, out, "verified", work=Q)
    if negative_part(res).Q != negative_part(QStructure(user, delta.to(user))).Q:
        raise PerturbationError("negative part changed")
    mine = zero_locus_dga(res)
    target = ZeroLocusDGA(mine.ideal_generators, mine.ctx, _plus_on(qp_K, mine.ctx), mine.ideal)
    if not mine.same_as(target):
        raise PerturbationError("zero-locus differential changed")
    res.transcript = transcript
    return res


def intertwine(Q, Qprime, ctx: GradedContext | None = None, order=None,
               margin: int | None = None) -> FlowLog:
    """Flows of degree-0 fields u_i (negative degree i) carrying Q to Qprime."""
    q1, q2 = as_q(Q), as_q(Qprime)
    if not q1.ctx.same_chart(q2.ctx):
        raise PerturbationError("Q and Q' live on different charts")
    user = ctx or q1.ctx
    W = _working(user, margin)
    A = _field(q1, W)
    B = _field(q2, W)
    a_user = QStructure(user, A.to(user))
    b_user = QStructure(user, B.to(user))
    if negative_part(a_user).Q != negative_part(b_user).Q:
        raise PerturbationError("negative parts differ")
    if not zero_locus_dga(a_user).same_as(zero_locus_dga(b_user)):
        raise PerturbationError("zero-locus differentials differ")
    delta = A.component("negative", -1)
    if delta != B.component("negative", -1):
        raise PerturbationError("negative parts differ")
    log = FlowLog(W)
    cur = A
    for i in range(0, user.filtration_order):
        top = _stage_top(user, i)
        diff = (B - cur).component("negative", i)
        diff = diff.filter_terms(lambda k, e: _layer(W, k, e) <= top)
        if not diff:
            continue
        try:
            u = solve_ad(delta, diff, 0, i + 1, None, order, top)
        except LinearSolveError:
            raise PerturbationError(f"not gauge equivalent in negative degree {i}: "
                                    f"obstruction {diff}") from None
        _check_trivial(u)
        step = FlowStep(u, "intertwine", i + 1)
        cur = step.push(cur)
        log.append(step)
    if (cur - B).to(user):
        raise PerturbationError("push-forward does not reach Q' at truncation")
    return log


def _check_trivial(u: Derivation):
    """u vanishes on negative generators mod positive ones and elsewhere mod negative ones."""
    ctx = u.ctx
    pos = [n for n, d in zip(ctx.names, ctx.degrees) if d > 0]
    neg = [n for n, d in zip(ctx.names, ctx.degrees) if d < 0]
    for i, v in u.values.items():
        w = v.set_zero(pos) if ctx.degrees[i] < 0 else v.set_zero(neg)
        if w:
            raise PerturbationError(f"gauge field acts on {ctx.names[i]}: {w}")
