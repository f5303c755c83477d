"""Seeded random generators shared by the test modules."""

import random
from fractions import Fraction

import oracles
from gradedq import Derivation, FlowLog, FlowStep, GradedContext, GradedPolynomial, push_forward


def coeff(rng):
    return Fraction(rng.choice([-3, -2, -1, 1, 2, 3]), rng.choice([1, 1, 2, 3]))


def rand_poly(rng, ctx, degree, nterms=3, shift=(0, 0), pos_cap=None):
    basis = ctx.monomials(total=degree, shift_jet=shift[0], shift_neg=shift[1], pos_cap=pos_cap)
    if not basis:
        return ctx.zero()
    picks = rng.sample(basis, min(nterms, len(basis)))
    return GradedPolynomial(ctx, {e: coeff(rng) for e in picks}, check=False)


def rand_derivation(rng, ctx, degree, nterms=2, pred=None):
    """Random degree-``degree`` field; ``pred(i, e)`` filters allowed terms."""
    vals = {}
    for i in range(ctx.nvars):
        sj, sn = ctx.shift_for(i)
        basis = ctx.monomials(total=ctx.degrees[i] + degree, shift_jet=sj, shift_neg=sn,
                              pos_cap=6)
        if pred is not None:
            basis = [e for e in basis if pred(i, e)]
        if not basis or rng.random() < 0.3:
            continue
        picks = rng.sample(basis, min(nterms, len(basis)))
        vals[i] = GradedPolynomial(ctx, {e: coeff(rng) for e in picks}, check=False)
    return Derivation(ctx, vals, degree, check=False)


def gaining(ctx):
    """Predicate for degree-0 terms that strictly raise jet + negative degree."""
    def pred(i, e):
        return ctx.jet_of(e) + ctx.neg_of(e) - ctx.jetw[i] - ctx.negw[i] >= 1
    return pred


def random_gauge(rng, W, steps=2, nterms=2):
    log = FlowLog(W)
    for k in range(steps):
        v = rand_derivation(rng, W, 0, nterms, gaining(W))
        log.append(FlowStep(v, "random", 0))
    return log


UNIT_TEMPLATES = [
    [("x", 0), ("eta", -1), ("theta", 1)],
    [("x", 0), ("y", 0), ("eta", -1), ("theta", 1)],
    [("x", 0), ("eta", -1), ("theta", 1), ("zeta", -2)],
    [("x", 0), ("y", 0), ("eta", -1), ("theta", 1), ("b", 2)],
    [("x", 0), ("eta1", -1), ("eta2", -1), ("theta", 1)],
]


def unit_curvature_q(rng, jet=None, filt=None):
    """A verified Q with unit curvature: a random gauge transform of i_kappa.

    Returns (user context, Q on the user's working context).
    """
    variables = rng.choice(UNIT_TEMPLATES)
    jet = jet if jet is not None else rng.randint(1, 3)
    filt = filt if filt is not None else rng.randint(2, 4)
    user = GradedContext(variables, jet, filt)
    W = user.working(2)
    base = [n for n, d in variables if d == 0]
    vals = {}
    etas = [n for n, d in variables if d == -1]
    for k, n in enumerate(etas):
        kap = W.const(1 if k == 0 else 0)
        for b in base:
            kap = kap + W.var(b).scale(coeff(rng)) * (W.var(b) if rng.random() < 0.5 else W.const(1))
        vals[n] = kap
    Q0 = Derivation(W, vals, 1)
    Q = random_gauge(rng, W, 2).push_forward(Q0)
    return user, Q


IDEALS = [
    lambda x, y: [x],
    lambda x, y: [x * y],
    lambda x, y: [x * x, x * y],
    lambda x, y: [x, y * y],
]

POSITIVE = [
    [("theta", 1)],
    [("theta1", 1), ("theta2", 1)],
    [("theta1", 1), ("theta2", 1), ("b", 2)],
]


def perturbation_input(rng, jet=2, filt=3, depth=None):
    """Random (user context, delta~, Qplus) with Qplus^2 = 0 and Qplus(I) in I.

    Qplus = theta1 V1 + theta2 V2 with commuting monomial-preserving fields
    V1 = x p(x) d/dx, V2 = y r(y) d/dy; a degree 2 generator b gets theta1 b.
    The resolution goes down to degree -filt: (x^2, xy) is not a complete
    intersection and stopping earlier leaves cohomology the theory excludes.
    """
    from gradedq import assemble_tilde_delta, kt_build
    base = GradedContext([("x", 0), ("y", 0)], jet, 1)
    x, y = base.var("x"), base.var("y")
    kt = kt_build(rng.choice(IDEALS)(x, y), depth or filt)
    pos = rng.choice(POSITIVE)
    dt = assemble_tilde_delta(kt, pos)
    F = dt.ctx
    user = F.with_truncation(jet, filt)
    K = F.restrict([n for n, d in zip(F.names, F.degrees) if d >= 0])
    thetas = [n for n, d in pos if d == 1]

    def poly(v):
        return sum((K.var(v) ** (k + 1)).scale(coeff(rng)) for k in range(rng.randint(0, 2)))

    vals = {}
    if rng.random() < 0.8:
        vals["x"] = K.var(thetas[0]) * poly("x")
    if rng.random() < 0.8:
        vals["y"] = K.var(thetas[-1]) * poly("y")
    if "b" in K.index and rng.random() < 0.7:
        vals["b"] = (K.var(thetas[0]) * K.var("b")).scale(coeff(rng))
    vals = {k: v for k, v in vals.items() if v}
    return user, dt, Derivation(K, vals, 1)


def independent_square(Q):
    """Terms of [Q,Q] inside the user box, computed by the word oracle."""
    W = Q.work.ctx
    g = oracles.Grassmann(W.degrees)
    vals = {i: g.from_poly(v) for i, v in Q.work.values.items()}
    B = g.bracket(vals, 1, vals, 1, W.nvars)
    user = Q.ctx
    out = []
    for i, v in B.items():
        name = W.names[i]
        p = type(Q.Q.value(name))(W, g.to_terms(v), check=False)
        j = user.idx(name)
        r = p.to(user).truncate(user.shift_for(j)) if p.terms else p
        if p.terms and r:
            out.append((name, r))
    return out


def push(log, X):
    return log.push_forward(X)


__all__ = ["coeff", "rand_poly", "rand_derivation", "gaining", "random_gauge",
           "unit_curvature_q", "perturbation_input", "independent_square", "push", "random", "push_forward"]
