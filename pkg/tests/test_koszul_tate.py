from fractions import Fraction

import pytest
import sympy

import oracles
from gradedq import (Derivation, GradedContext, GradingError, JetIdeal, KoszulTateError,
                     advf_cohomology, assemble_tilde_delta, check_q, complex_cohomology,
                     kt_build, kt_verify, lift_derivation, linearization)
from gradedq.koszul_tate import induced_derivation


def base(names, jet=3):
    return GradedContext([(n, 0) for n in names], jet, 1)


def word_values(D):
    g = oracles.Grassmann(D.ctx.degrees)
    return {i: g.from_poly(v) for i, v in D.values.items()}


def xy_delta(jet=3, filt=4):
    c = GradedContext([("x", 0), ("y", 0), ("xi", -1)], jet, filt)
    return c, Derivation(c, {"xi": c.var("x") * c.var("y")})


# -- Tate construction -----------------------------------------------------------

def test_kt_build_principal():
    b = base(["x", "y"])
    kt = kt_build([b.var("x") * b.var("y")], 3)
    assert kt.levels == {1: ["xi1"]}
    assert kt.statuses.get("complete-intersection")
    assert kt.delta == Derivation(kt.ctx, {"xi1": kt.ctx.var("x") * kt.ctx.var("y")})
    one = base(["x"])
    kt = kt_build([one.var("x")], 2)
    assert kt.delta == Derivation(kt.ctx, {"xi1": kt.ctx.var("x")})


def test_kt_build_kills_syzygy():
    b = base(["x", "y"], 4)
    x, y = b.var("x"), b.var("y")
    kt = kt_build([x * x, x * y], 2)
    assert [len(kt.levels[k]) for k in sorted(kt.levels)] == [1 + 1, 1]
    (z,) = kt.levels[2]
    c = kt.ctx
    xi1, xi2 = c.var("xi1"), c.var("xi2")
    # the new generator kills y xi1 - x xi2 up to a scalar
    val = kt.delta.value(z)
    rel = c.var("y") * xi1 - c.var("x") * xi2
    assert val == rel or val == -rel
    assert check_q(kt.delta).verified


def test_kt_build_rejects_bad_input():
    b = base(["x"])
    with pytest.raises(KoszulTateError):
        kt_build([], 2)
    with pytest.raises(KoszulTateError):
        kt_build([b.zero()], 2)


def test_kt_acyclic_below_depth():
    b = base(["x", "y"], 3)
    x, y = b.var("x"), b.var("y")
    for ideal in ([x * y], [x * x, x * y], [x, y], [x * x, y * y], [x * x, x * y, y * y]):
        kt = kt_build(ideal, 2)
        rep = kt_verify(kt)
        assert rep.dim(-1) == 0


# -- function cohomology -----------------------------------------------------------

def test_h0_of_xy():
    c, d = xy_delta(3)
    rep = complex_cohomology(d, [0], c)
    assert rep.dim(0) == 7
    # 9 at jet order 4: the quotient keeps growing with the jet order
    assert rep[0].status == "truncation-sensitive"
    assert rep.dim(0) == oracles.function_cohomology(word_values(d), c.degrees, 0, 3, 4)


def test_principal_injective():
    c = GradedContext([("x", 0), ("xi", -1)], 3, 3)
    d = Derivation(c, {"xi": c.var("x")})
    assert complex_cohomology(d, [-1], c).dim(-1) == 0


def test_contractible_pairs():
    c = GradedContext([("y1", 0), ("y2", 0), ("e1", -1), ("e2", -1)], 3, 3)
    d = Derivation(c, {"e1": c.var("y1"), "e2": c.var("y2")})
    rep = complex_cohomology(d, [-1, -2], c)
    assert rep.dim(-1) == rep.dim(-2) == 0
    # the truncated jets of a point
    assert complex_cohomology(d, [0], c).dim(0) == 1


@pytest.mark.parametrize("jet", [2, 3])
def test_function_cohomology_matches_oracle(jet):
    b = base(["x", "y"], jet)
    x, y = b.var("x"), b.var("y")
    kt = kt_build([x * x, x * y], 2)
    for d in (0, -1, -2):
        got = complex_cohomology(kt.delta, [d], kt.ctx, stability=False).dim(d)
        want = oracles.function_cohomology(word_values(kt.delta), kt.ctx.degrees, d,
                                           kt.ctx.jet_order, kt.ctx.filtration_order)
        assert got == want


# -- vector field cohomology -----------------------------------------------------------

def test_advf_xy_degree_one():
    c, d = xy_delta(3)
    h = advf_cohomology(d, [(None, 1)], c)[(None, 1)]
    assert h.dim == 1
    assert h.representatives[0] == Derivation.partial(c, "xi")


def test_advf_smooth_degree_one():
    c = GradedContext([("x", 0), ("y", 0), ("xi", -1)], 3, 4)
    d = Derivation(c, {"xi": c.var("x")})
    assert advf_cohomology(d, [(None, 1)], c).dim((None, 1)) == 0


def test_advf_xy_degree_zero_euler():
    c, d = xy_delta(3)
    h = advf_cohomology(d, [(None, 0)], c)[(None, 0)]
    euler = Derivation(c, {"x": c.var("x"), "xi": c.var("xi")}, 0)
    assert d.commutator(euler).is_zero()
    # the class survives: adding it to the coboundaries raises the rank
    g = oracles.Grassmann(c.degrees)
    basis = oracles.derivation_basis(c.degrees, -1, None, 4, 4)
    bd = []
    for i, e in basis:
        B = g.bracket(word_values(d), 1, {i: {g.word(e): Fraction(1)}}, -1, c.nvars)
        bd.append({(k, w): v for k, vs in B.items() for w, v in vs.items()})
    ev = {(i, g.word(m)): cf for i, p in euler.values.items() for m, cf in p.terms.items()}
    keys = sorted({k for v in bd + [ev] for k in v}, key=repr)
    assert oracles.dense_rank(bd + [ev], keys) == oracles.dense_rank(bd, keys) + 1
    assert h.dim > 1


@pytest.mark.parametrize("jet", [2, 3])
def test_advf_matches_dense_oracle(jet):
    c, d = xy_delta(jet, 3)
    vals = word_values(d)
    for neg, total in ((None, 0), (None, 1), (None, -1), (0, 0), (1, 0), (-1, 0), (0, 1)):
        got = advf_cohomology(d, [(neg, total)], c, stability=False).dim((neg, total))
        want = oracles.advf_cohomology(vals, c.degrees, neg, total, jet, 3, d_neg=-1)
        assert got == want, (neg, total)


def test_advf_resolution_matches_dense_oracle():
    b = base(["x", "y"], 2)
    x, y = b.var("x"), b.var("y")
    kt = kt_build([x * x, x * y], 2)
    C = kt.ctx
    vals = word_values(kt.delta)
    for neg, total in ((None, 1), (None, 0)):
        got = advf_cohomology(kt, [(neg, total)], stability=False).dim((neg, total))
        want = oracles.advf_cohomology(vals, C.degrees, neg, total, C.jet_order,
                                       C.filtration_order, d_neg=-1)
        assert got == want


def test_negative_degree_needs_homogeneous_differential():
    c = GradedContext([("x", 0), ("xi", -1), ("theta", 1)], 2, 3)
    # x d/dxi has negative degree -1, xi theta d/dxi has 0
    d = Derivation(c, {"xi": c.var("x") + c.var("xi") * c.var("theta")})
    with pytest.raises(GradingError):
        advf_cohomology(d, [(0, 0)], c)


# -- linearization -----------------------------------------------------------

def test_linearization_xy():
    b = base(["x", "y"])
    kt = kt_build([b.var("x") * b.var("y")], 2)
    lin = linearization(kt)
    (row,) = lin["maps"][0]
    assert row == [row[0].ctx.var("y"), row[0].ctx.var("x")]
    assert lin["dims"] == [6, 1]
    assert lin["dims"][0] == _jacobian_kernel_xy(3)


def _jacobian_kernel_xy(jet):
    # (a, b) -> y a + x b modulo the monomial ideal (xy), a, b standard monomials
    X, Y = sympy.symbols("x y")
    std = [X ** k for k in range(jet + 1)] + [Y ** k for k in range(1, jet + 1)]
    cols = []
    for s in range(2):
        for m in std:
            img = sympy.Poly(sympy.expand((Y if s == 0 else X) * m), X, Y)
            cols.append({mon: c for mon, c in img.terms() if not (mon[0] and mon[1])})
    keys = sorted({k for v in cols for k in v})
    M = sympy.Matrix([[v.get(k, 0) for v in cols] for k in keys])
    return len(cols) - M.rank()


def test_linearization_smooth_point():
    b = base(["x"])
    kt = kt_build([b.var("x")], 2)
    lin = linearization(kt)
    assert lin["maps"][0] == [[lin["maps"][0][0][0].ctx.const(1)]]
    assert lin["dims"][0] == 0


# -- lifting -----------------------------------------------------------

def test_lift_examples():
    b = base(["x", "y"])
    kt = kt_build([b.var("x") * b.var("y")], 2)
    c = kt.ctx
    q = lift_derivation({"x": b.var("x")}, kt).q
    assert q == Derivation(c, {"x": c.var("x"), "xi1": c.var("xi1")}, 0)
    assert lift_derivation({}, kt).q.is_zero()
    with pytest.raises(KoszulTateError):
        lift_derivation({"x": b.const(1)}, kt)


def test_lift_through_second_level():
    b = base(["x", "y"], 3)
    x, y = b.var("x"), b.var("y")
    kt = kt_build([x * x, x * y], 2)
    res = lift_derivation({"y": y}, kt)
    q = res.q_work
    W = q.ctx
    assert any(W.degrees[i] == -2 for i in q.values)
    # independent bracket on the working context, compared below its top order
    g = oracles.Grassmann(W.degrees, jet=kt.ctx.jet_order)
    B = g.bracket(word_values(kt.delta.to(W)), 1, word_values(q), 0, W.nvars)
    assert all(not g.to_terms({w: cf for w, cf in v.items() if g.keeps(w)}) for v in B.values())
    assert induced_derivation(res.q, kt.jet_ideal()) == {"y": kt.jet_ideal().base.var("y")}


def test_lift_is_a_section():
    b = base(["x", "y"], 3)
    x, y = b.var("x"), b.var("y")
    kt = kt_build([x * y], 2)
    I = kt.jet_ideal()
    B = I.ctx
    for qI in ({"x": x + x * x}, {"y": 2 * y - y ** 3}, {"x": x * x * x, "y": y * y}):
        lifted = lift_derivation(qI, kt)
        got = induced_derivation(lifted.q, I)
        want = {n: I.reduce(p.restrict_to(B), (1, 0)) for n, p in qI.items()}
        assert got == {n: p for n, p in want.items() if p}


def test_h0_classes_map_injectively():
    c, d = xy_delta(3)
    b = base(["x", "y"], 3)
    I = JetIdeal(b, [b.var("x") * b.var("y")])
    h = advf_cohomology(d, [(None, 0)], c, ideal=I)[(None, 0)]
    rows = []
    for ind in h.induced:
        rows.append({(n, e): cf for n, p in ind.items() for e, cf in p.terms.items()})
    keys = sorted({k for r in rows for k in r}, key=repr)
    assert oracles.dense_rank(rows, keys) == h.dim


# -- assembly -----------------------------------------------------------

def test_assemble_examples():
    b = base(["x", "y"])
    kt = kt_build([b.var("x") * b.var("y")], 2)
    q = assemble_tilde_delta(kt, [("theta", 1)])
    assert q.verified and "theta" in q.ctx.names
    assert q.Q.to(q.ctx).value("xi1") == q.ctx.var("x") * q.ctx.var("y")
    assert q.Q.value("theta").is_zero()
    same = assemble_tilde_delta(kt, [])
    assert same.Q == kt.delta
    with pytest.raises(GradingError):
        assemble_tilde_delta(kt, [("x", 1)])


@pytest.mark.parametrize("jet", [2, 3])
def test_assembled_cohomology_is_k_plus(jet):
    b = base(["x", "y"], jet)
    kt = kt_build([b.var("x")], 2)
    q = assemble_tilde_delta(kt, [("theta", 1)])
    rep = complex_cohomology(q.Q, [0, 1], q.ctx)
    # K_+ = Q[y] (+) theta Q[y] in degrees 0 and 1
    assert rep.dim(0) == jet + 1
    assert rep.dim(1) == jet + 1
