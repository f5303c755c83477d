"""Koszul-Tate resolutions of jet ideals and the cohomology around them.

Cohomology is computed with exact images: a differential is applied to the
truncated monomial basis without truncating the result, cocycles are the
exact kernel, and coboundaries are images (from a basis one jet order
larger) that land back inside the truncation.  This avoids the spurious
top-order cocycles a truncated differential would create.  Reported
dimensions are marked stable when they agree at jet orders d and d+1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .core import GradedContext, GradedPolynomial, GradingError
from .derivations import Derivation
from .linalg import Echelon, LinearSolveError, nullspace, rref, solve
from .qmanifold import JetIdeal, QStructure, check_q

BIG = 1 << 20


class KoszulTateError(ArithmeticError):
    """A resolution, lift or solve could not be completed at this truncation."""


def exact_context(ctx: GradedContext) -> GradedContext:
    return ctx.with_truncation(BIG, BIG, None)


def _pvec(p: GradedPolynomial):
    return dict(p.terms)


def _dvec(X: Derivation):
    out = {}
    for i, v in X.values.items():
        for e, c in v.terms.items():
            out[(i, e)] = c
    return out


def _devec(ctx, vec, degree):
    vals = {}
    for (i, e), c in vec.items():
        vals.setdefault(i, {})[e] = c
    return Derivation(ctx, {i: GradedPolynomial(ctx, t, check=False) for i, t in vals.items()},
                      degree, check=False)


@dataclass
class DegreeCohomology:
    degree: object
    kernel: int
    image: int
    dim: int
    representatives: list
    status: str = "unchecked"  # stable | truncation-sensitive | unchecked
    caveat: str | None = None  # set when the filtration cuts the degree window


@dataclass
class CohomologyReport:
    degrees: dict = field(default_factory=dict)

    def dim(self, d):
        return self.degrees[d].dim

    def __getitem__(self, d):
        return self.degrees[d]


def _quotient(images, inside, prev_images):
    """Kernel of ``images`` modulo the part of span(prev_images) inside ``inside``.

    ``images[j]`` is the exact image of basis element j, ``inside`` the list of
    coordinates of the domain, ``prev_images`` exact images of the previous
    space expressed in domain coordinates (possibly leaving the truncation).
    Returns (kernel dim, image dim, representatives as coordinate vectors).
    """
    ker = nullspace(images)
    kvecs = [{inside[j]: c for j, c in v.items()} for v in ker]
    inset = set(inside)
    outside = []
    seen = set()
    for v in prev_images:
        for k in v:
            if k not in inset and k not in seen:
                seen.add(k)
                outside.append(k)
    rows, piv = rref(prev_images, outside + list(inside))
    bdry = [r for r, p in zip(rows, piv) if p in inset]
    ech = Echelon()
    for r in bdry:
        ech.add(r)
    reps = []
    for v in kvecs:
        r = ech.add(v)
        if r is not None:
            reps.append(v)
    return len(kvecs), len(bdry), reps


def _function_cohomology(D, ctx, d, slack):
    E = exact_context(ctx)
    DE = D.to(E) if D.ctx.same_chart(ctx) else D
    basis = ctx.monomials(total=d)
    images = [_pvec(DE(GradedPolynomial(E, {m: Fraction(1)}, check=False))) for m in basis]
    prev = ctx.with_truncation(ctx.jet_order + slack, ctx.filtration_order + slack).monomials(total=d - 1)
    prev_images = [_pvec(DE(GradedPolynomial(E, {m: Fraction(1)}, check=False))) for m in prev]
    k, b, reps = _quotient(images, basis, prev_images)
    reps = [GradedPolynomial(ctx, v, check=False) for v in reps]
    for r in reps:
        if DE(r.to(E)):
            raise KoszulTateError("representative is not a cocycle")
    h = DegreeCohomology(d, k, b, k - b, reps)
    wider = ctx.with_truncation(filtration_order=ctx.filtration_order + 1)
    if len(wider.monomials(total=d)) != len(basis):
        h.caveat = "filtration-limited"
    return h


def complex_cohomology(D: Derivation, degrees, ctx: GradedContext | None = None,
                       slack: int = 1, stability: bool = True) -> CohomologyReport:
    """Cohomology of a differential on functions, per total degree."""
    ctx = ctx or D.ctx
    report = CohomologyReport()
    for d in degrees:
        h = _function_cohomology(D, ctx, d, slack)
        if stability:
            h2 = _function_cohomology(D, ctx.with_truncation(ctx.jet_order + 1), d, slack)
            h.status = "stable" if h2.dim == h.dim else "truncation-sensitive"
        report.degrees[d] = h
    return report


# -- derivation spaces -----------------------------------------------------------

def derivation_basis(ctx: GradedContext, total: int, neg=None, only=None, extra_jet=0):
    """Basis m * d/dz of derivations with the given total (and negative) degree.

    ``only`` restricts the variables z.  Coefficients obey the derivation
    truncation of ``ctx`` widened by ``extra_jet``.
    """
    out = []
    for i in range(ctx.nvars):
        if only is not None and i not in only:
            continue
        sj, sn = ctx.shift_for(i)
        ms = ctx.monomials(total=ctx.degrees[i] + total, shift_jet=sj + extra_jet, shift_neg=sn)
        for m in ms:
            if neg is not None and ctx.neg_of(m) - ctx.negw[i] != neg:
                continue
            out.append((i, m))
    return out


def _basis_field(ctx, i, m, degree):
    return Derivation(ctx, {i: GradedPolynomial(ctx, {m: Fraction(1)}, check=False)},
                      degree, check=False)


def neg_homogeneity(D: Derivation):
    g = D.term_grades("negative")
    return g.pop() if len(g) == 1 else None


def _advf(D, ctx, total, neg, slack):
    E = exact_context(ctx)
    DE = D.to(E)
    basis = derivation_basis(ctx, total, neg)
    images = [_dvec(DE.commutator(_basis_field(E, i, m, total))) for i, m in basis]
    g = neg_homogeneity(D)
    if neg is not None and g is None:
        raise GradingError("negative degree selection needs a differential homogeneous in it")
    prev_neg = None if neg is None else neg - g
    prev = derivation_basis(ctx, total - 1, prev_neg, extra_jet=slack)
    prev_images = [_dvec(DE.commutator(_basis_field(E, i, m, total - 1))) for i, m in prev]
    k, b, reps = _quotient(images, basis, prev_images)
    reps = [_devec(ctx, v, total) for v in reps]
    for r in reps:
        if DE.commutator(r.to(E)):
            raise KoszulTateError("representative is not a cocycle")
    h = DegreeCohomology((neg, total), k, b, k - b, reps)
    wider = ctx.with_truncation(filtration_order=ctx.filtration_order + 1)
    if len(derivation_basis(wider, total, neg)) != len(basis):
        h.caveat = "filtration-limited"
    return h


def advf_cohomology(D, degrees, ctx: GradedContext | None = None, slack: int = 1,
                    stability: bool = True, ideal=None) -> CohomologyReport:
    """Cohomology of ad_D on derivations.

    ``degrees`` lists (negative degree or None, total degree) pairs.  For
    total degree 0 and an ``ideal`` the induced derivations of base/I are
    attached to each representative as ``h.induced``.
    """
    if isinstance(D, KTResolution):
        ideal = ideal if ideal is not None else D.jet_ideal()
        D = D.delta
    if isinstance(D, QStructure):
        D = D.Q
    ctx = ctx or D.ctx
    report = CohomologyReport()
    for neg, total in degrees:
        h = _advf(D, ctx, total, neg, slack)
        if stability:
            h2 = _advf(D, ctx.with_truncation(ctx.jet_order + 1), total, neg, slack)
            h.status = "stable" if h2.dim == h.dim else "truncation-sensitive"
        if total == 0 and ideal is not None:
            h.induced = [induced_derivation(r, ideal) for r in h.representatives]
        report.degrees[(neg, total)] = h
    return report


def induced_derivation(q: Derivation, ideal: JetIdeal) -> dict:
    """Images of the base variables modulo I (nonzero-degree variables set to 0)."""
    ctx = q.ctx
    out = {}
    graded = [n for n, d in zip(ctx.names, ctx.degrees) if d != 0]
    for i in ctx.base_indices():
        v = q.values.get(i)
        if v is None:
            continue
        b = v.set_zero(graded).restrict_to(ideal.ctx, ctx.shift_for(i))
        r = ideal.reduce(b, (1, 0))
        if r:
            out[ctx.names[i]] = r
    return out


# -- Tate construction -------------------------------------------------------------

@dataclass
class KTResolution:
    ctx: GradedContext
    delta: Derivation
    ideal: list
    depth: int
    levels: dict  # k -> list of generator names of degree -k
    statuses: dict = field(default_factory=dict)

    def jet_ideal(self) -> JetIdeal:
        base = self.ctx.restrict([self.ctx.names[i] for i in self.ctx.base_indices()])
        return JetIdeal(base, [g.restrict_to(base, (BIG, 0)) for g in self.ideal])

    @property
    def base_names(self):
        return [self.ctx.names[i] for i in self.ctx.base_indices()]


def _gen_name(k, a, taken):
    stem = {1: "xi", 2: "zeta"}.get(k, f"g{k}_")
    name = f"{stem}{a}"
    while name in taken:
        name += "_"
    return name


def kt_build(ideal, depth: int, ctx: GradedContext | None = None) -> KTResolution:
    """Tate adjunction of negative generators up to degree -depth.

    ``ideal`` is a list of base jets (all on the same base context, or on
    ``ctx``).  Degree -(k+1) generators are adjoined one at a time, each
    killing the lowest remaining class of H^{-k}, until H^{-k} vanishes at
    the truncation.
    """
    if not ideal:
        raise KoszulTateError("the ideal needs at least one generator")
    base = ctx or ideal[0].ctx
    if any(d != 0 for d in base.degrees):
        raise GradingError("ideal generators must live on a base-only context")
    gens = [g.to(base) if g.ctx.same_chart(base) else g.restrict_to(base) for g in ideal]
    if any(not g for g in gens):
        raise KoszulTateError("ideal generators must be nonzero at truncation")
    filt = max(base.filtration_order, depth + 2)
    names = list(zip(base.names, base.degrees))
    taken = set(base.names)
    levels = {1: []}
    for a in range(len(gens)):
        n = _gen_name(1, a + 1, taken)
        taken.add(n)
        names.append((n, -1))
        levels[1].append(n)
    C = GradedContext(names, base.jet_order, filt)
    delta = Derivation(C, {n: g.embed(C) for n, g in zip(levels[1], gens)}, 1)
    statuses = {}
    for k in range(1, depth):
        h = complex_cohomology(delta, [-k], C, stability=False)[-k]
        if h.dim == 0:
            statuses[k] = "zero"
            if k == 1 and len(levels) == 1:
                # H^{-1} = 0 for a Koszul complex: regular sequence, exact throughout
                statuses["complete-intersection"] = True
                break
            continue
        levels[k + 1] = []
        while h.dim:
            rep = min(h.representatives,
                      key=lambda r: min(C.jet_of(e) for e in r.terms))
            n = _gen_name(k + 1, len(levels[k + 1]) + 1, taken)
            taken.add(n)
            levels[k + 1].append(n)
            C2 = GradedContext(list(zip(C.names, C.degrees)) + [(n, -(k + 1))],
                               C.jet_order, C.filtration_order)
            vals = {C.names[i]: v.embed(C2) for i, v in delta.values.items()}
            vals[n] = rep.embed(C2)
            C = C2
            delta = Derivation(C, vals, 1)
            if len(levels[k + 1]) > 4 * C.nvars * (C.jet_order + 2):
                raise KoszulTateError(f"too many generators in degree {-(k + 1)}")
            h = complex_cohomology(delta, [-k], C, stability=False)[-k]
        statuses[k] = "killed"
    res = KTResolution(C, delta, gens, depth, levels, statuses)
    if check_q(delta).status != "verified":
        raise KoszulTateError("[delta, delta] != 0")
    return res


def kt_verify(kt: KTResolution, stability=False) -> CohomologyReport:
    """[delta, delta] = 0 and the cohomology in degrees 0, -1, ..., 1-depth."""
    if check_q(kt.delta).status != "verified":
        raise KoszulTateError("[delta, delta] != 0")
    return complex_cohomology(kt.delta, [-k for k in range(0, kt.depth)], kt.ctx,
                              stability=stability)


# -- linearization ---------------------------------------------------------------

def linearization(kt: KTResolution, slack: int = 1):
    """Matrices of the linearised complex over base/I and its cohomology dims.

    Level 0 is the tangent space (one slot per base variable), level k the
    degree -k generators.  The first map is the Jacobian of the ideal
    generators, the next ones the linear part of delta between levels.
    """
    C = kt.ctx
    I = kt.jet_ideal()
    B = I.ctx
    slots = {0: kt.base_names}
    for k in sorted(kt.levels):
        slots[k] = kt.levels[k]
    maps = {}
    # level 0 -> 1: Jacobian
    E = exact_context(B)
    J0 = []
    for g in kt.levels[1]:
        f = kt.delta.value(g).restrict_to(E)
        J0.append([f.left_partial(x) for x in kt.base_names])
    maps[0] = J0
    for k in sorted(kt.levels):
        if k + 1 not in kt.levels:
            break
        rows = []
        for z in kt.levels[k + 1]:
            val = kt.delta.value(z)
            row = []
            for a in kt.levels[k]:
                ai = C.idx(a)
                coeff = {}
                for e, c in val.terms.items():
                    if e[ai] == 1 and sum(e[j] for j in range(C.nvars) if C.degrees[j] != 0) == 1:
                        coeff[e] = c
                p = GradedPolynomial(C, coeff, check=False).left_partial(a)
                row.append(p.restrict_to(E))
            rows.append(row)
        maps[k] = rows
    dims = []
    top = max(slots)
    for k in range(0, top + 1):
        dims.append(_lin_h(I, maps.get(k - 1), maps.get(k), len(slots[k]), slack))
    return {"slots": slots, "maps": maps, "dims": dims}


def _standard(I: JetIdeal, jet: int):
    ech = I.echelon(jet)
    b = I.base.with_truncation(jet, 1, None)
    return [m for m in b.monomials() if m not in ech.rows]


def _lin_h(I, prev_map, next_map, n, slack):
    """dim of ker(next_map) / im(prev_map) on (base/I)^n at the ideal's jet order."""
    J = I.ctx.jet_order
    E = exact_context(I.base)
    std = _standard(I, J)
    inside = [(s, m) for s in range(n) for m in std]

    def reduce_vec(polys):
        out = {}
        for t, p in enumerate(polys):
            jet = max([sum(e) for e in p.terms] + [0])
            r = I.echelon(jet).reduce(p.terms)
            for m, c in r.items():
                out[(t, m)] = c
        return out

    if next_map is None:
        images = [{} for _ in inside]
    else:
        images = []
        for s, m in inside:
            mono = GradedPolynomial(E, {m: Fraction(1)}, check=False)
            images.append(reduce_vec([row[s] * mono for row in next_map]))
    if prev_map is None:
        prev_images = []
    else:
        prev_std = _standard(I, J + slack)
        prev_images = []
        for s in range(len(prev_map[0]) if prev_map else 0):
            for m in prev_std:
                mono = GradedPolynomial(E, {m: Fraction(1)}, check=False)
                prev_images.append(reduce_vec([row[s] * mono for row in prev_map]))
    k, b, _ = _quotient(images, inside, prev_images)
    return k - b


# -- lifting derivations -----------------------------------------------------------

@dataclass
class LiftResult:
    q: Derivation  # truncated to the resolution's context
    q_work: Derivation  # on the working context, [delta, q] = 0 there


def _levels_in_order(kt):
    for k in sorted(kt.levels):
        for n in kt.levels[k]:
            yield k, n


def solve_value(delta: Derivation, target: GradedPolynomial, degree: int, order=None):
    """u of the given total degree with delta(u) = target at truncation."""
    W = delta.ctx
    basis = W.monomials(total=degree)
    cols = [_pvec(delta(GradedPolynomial(W, {m: Fraction(1)}, check=False))) for m in basis]
    idx = list(range(len(basis)))
    if order == "last":
        idx = idx[::-1]
    try:
        sol = solve(cols, _pvec(target), idx)
    except LinearSolveError:
        raise KoszulTateError(f"no solution in degree {degree}: truncation too small "
                              "or data inconsistent") from None
    return GradedPolynomial(W, {basis[j]: c for j, c in sol.items()}, check=False)


def lift_derivation(qI: dict, kt: KTResolution, order=None, extra_jet=None) -> LiftResult:
    """Degree 0 field q with [delta, q] = 0 inducing the given derivation of base/I."""
    C = kt.ctx
    extra = len(kt.levels) + 2 if extra_jet is None else extra_jet
    W = C.with_truncation(C.jet_order + extra)
    delta = kt.delta.to(W)
    I = kt.jet_ideal()
    vals = {}
    for n, p in qI.items():
        if C.degree_of(n) != 0:
            raise GradingError(f"{n} is not a base variable")
        vals[n] = p.embed(W) if not p.ctx.same_chart(W) else p.to(W)
    q = Derivation(W, vals, 0)
    # qI must preserve I
    for g in kt.ideal:
        img = q(g.embed(W))
        b = img.restrict_to(I.base.with_truncation(C.jet_order))
        if not I.contains(b):
            raise KoszulTateError(f"the derivation does not preserve the ideal: q({g}) = {img}")
    for k, n in _levels_in_order(kt):
        i = W.idx(n)
        target = q(delta.value(i))
        u = solve_value(delta, target, -k, order)
        q = q + Derivation(W, {i: u}, 0, check=False)
    res = delta.commutator(q).to(C.with_truncation(C.jet_order + 1))
    if res:
        raise KoszulTateError(f"[delta, q] = {res} != 0")
    return LiftResult(q.to(C), q)


def assemble_tilde_delta(kt: KTResolution, positive_gens) -> QStructure:
    """Extend the resolution by positive generators on which delta vanishes."""
    for n, d in positive_gens:
        if n in kt.ctx.index:
            raise GradingError(f"name collision: {n}")
        if d <= 0:
            raise GradingError(f"{n} must have positive degree")
    ctx = kt.ctx.extend(positive_gens)
    dt = kt.delta.embed(ctx)
    q = check_q(dt)
    if not q.verified:
        raise KoszulTateError("extended differential does not square to zero")
    return q
