import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gradedq import (Derivation, FlowError, FlowLog, FlowStep, GradedContext,
                     GradingError, apply, commutator, compose_flows, decompose,
                     exp_flow, push_forward)

from helpers import gaining, rand_derivation, rand_poly
from oracles import Grassmann


@pytest.fixture
def xy():
    return GradedContext([("x", 0), ("y", 0), ("xi", -1)], 3, 4)


@pytest.fixture
def triv():
    return GradedContext([("x", 0), ("eta", -1), ("theta", 1)], 2, 3)


def delta(c):
    return Derivation(c, {"xi": c.var("x") * c.var("y")})


def test_apply_examples(xy):
    d = delta(xy)
    assert d(xy.var("xi")) == xy.var("x") * xy.var("y")
    assert d(xy.var("x")) == xy.zero()
    assert apply(d, xy.var("x") * xy.var("xi")) == xy.var("x") ** 2 * xy.var("y")


def test_commutator_examples(xy):
    d = delta(xy)
    # [X,Y] = XY - (-1)^{|X||Y|} YX
    assert commutator(d, Derivation.partial(xy, "x")) == Derivation(xy, {"xi": -xy.var("y")})
    assert commutator(d, d).is_zero()
    dx = Derivation.partial(xy, "x")
    assert commutator(dx, dx).is_zero()


def test_decompose_examples(triv, xy):
    Q = Derivation(triv, {"eta": 1, "x": triv.var("theta")})
    parts = decompose(Q, "negative")
    assert parts[-1] == Derivation(triv, {"eta": 1})
    assert parts[0] == Derivation(triv, {"x": triv.var("theta")})
    assert set(parts) == {-1, 0}
    d = delta(xy)
    assert decompose(d, "negative") == {-1: d}
    assert decompose(d, "arity") == {-1: d}


def test_degree_checked(xy):
    with pytest.raises(GradingError):
        Derivation(xy, {"xi": xy.var("x")}, 2)
    with pytest.raises(GradingError):
        Derivation(xy, {"xi": xy.var("x"), "x": xy.var("y")})


def test_exp_flow_examples(triv):
    v = Derivation(triv, {"x": -(triv.var("eta") * triv.var("theta"))})
    psi = exp_flow(v)
    assert psi.image("x") == triv.var("x") - triv.var("eta") * triv.var("theta")
    assert psi.image("eta") == triv.var("eta")
    assert exp_flow(Derivation.zero(triv)).image("x") == triv.var("x")
    twice = psi.compose(psi)
    assert twice.image("x") == exp_flow(v, 2).image("x")
    assert twice.image("x") == triv.var("x") - 2 * triv.var("eta") * triv.var("theta")


def test_exp_flow_divergence_rejected():
    c = GradedContext([("x", 0)], 3, 2)
    # x d/dx keeps the jet order: the exponential never terminates
    with pytest.raises(FlowError):
        exp_flow(Derivation(c, {"x": c.var("x")}))


def test_push_forward_examples(triv):
    v = Derivation(triv, {"x": -(triv.var("eta") * triv.var("theta"))})
    X = Derivation(triv, {"eta": 1, "x": triv.var("theta")})
    assert push_forward(v, X) == Derivation.partial(triv, "eta")
    Y = Derivation.partial(triv, "theta")
    assert push_forward(Derivation.zero(triv), Y) == Y
    # automorphism property on the pair
    Z = Derivation(triv, {"x": triv.var("x") * triv.var("theta")}, 1)
    lhs = commutator(push_forward(v, X), push_forward(v, Z))
    assert lhs == push_forward(v, commutator(X, Z))


def test_compose_flows_examples(triv):
    assert len(FlowLog(triv)) == 0
    assert compose_flows(FlowLog(triv)).image("x") == triv.var("x")
    v1 = Derivation(triv, {"x": triv.var("eta") * triv.var("theta")})
    single = FlowLog(triv, [FlowStep(v1, "s", 1)])
    assert compose_flows(single).image("x") == exp_flow(v1).image("x")


def test_two_step_log_matches_substitution():
    c = GradedContext([("x", 0), ("y", 0), ("eta", -1), ("theta", 1)], 3, 3)
    v1 = Derivation(c, {"x": c.var("y") ** 2})
    v2 = Derivation(c, {"y": c.var("x") * c.var("eta") * c.var("theta")})
    log = FlowLog(c, [FlowStep(v1, "s", 1), FlowStep(v2, "s", 2)])
    g = Grassmann(c.degrees, jet=3, filt=3)
    # Psi = e^{v1} o e^{v2}: substitute e^{v1} images into e^{v2} images
    e1 = {i: g.from_poly(exp_flow(v1).image(i)) for i in range(c.nvars)}
    for i in range(c.nvars):
        want = g.substitute(e1, g.from_poly(exp_flow(v2).image(i)))
        assert compose_flows(log).image(i).terms == g.to_terms(want)


def test_log_gains_and_inverse(triv):
    v1 = Derivation(triv, {"x": triv.var("eta") * triv.var("theta")})
    log = FlowLog(triv, [FlowStep(v1, "s", 2)])
    with pytest.raises(GradingError):
        log.append(FlowStep(v1.scale(2), "s", 1))
    inv = log.inverse()
    f = triv.var("x") + triv.var("x") ** 2
    assert inv.apply(log.apply(f)) == f


def test_log_json_round_trip(triv):
    v1 = Derivation(triv, {"x": Fraction(-3, 7) * triv.var("eta") * triv.var("theta")})
    log = FlowLog(triv, [FlowStep(v1, "s", 1)])
    data = json.loads(json.dumps(log.to_json()))
    back = FlowLog.from_json(data)
    X = Derivation(triv, {"eta": 1, "x": triv.var("theta")})
    assert back.push_forward(X) == log.push_forward(X)
    assert "3/7" in json.dumps(data)


# -- properties ------------------------------------------------------------------

CTX = GradedContext([("x", 0), ("y", 0), ("t", 1), ("e", -1), ("z", -2)], 3, 4)
ORACLE = Grassmann(CTX.degrees, jet=3, filt=4)


@st.composite
def fields(draw, degree=None):
    rng = random.Random(draw(st.integers(0, 10 ** 6)))
    d = draw(st.integers(-2, 2)) if degree is None else degree
    return rand_derivation(rng, CTX, d, 2)


@st.composite
def polys(draw):
    rng = random.Random(draw(st.integers(0, 10 ** 6)))
    return rand_poly(rng, CTX, draw(st.integers(-2, 2)), 3)


def _vals(X):
    return {i: ORACLE.from_poly(v) for i, v in X.values.items()}


@settings(max_examples=100, deadline=None)
@given(fields(), polys())
def test_apply_matches_word_oracle(X, f):
    want = ORACLE.apply(_vals(X), X.degree, ORACLE.from_poly(f))
    assert X(f).terms == ORACLE.to_terms(want)


@settings(max_examples=100, deadline=None)
@given(fields(), fields())
def test_bracket_matches_word_oracle(X, Y):
    B = commutator(X, Y)
    want = ORACLE.bracket(_vals(X), X.degree, _vals(Y), Y.degree, CTX.nvars)
    for i in range(CTX.nvars):
        sj, sn = CTX.shift_for(i)
        got = B.value(i)
        ref = CTX.zero() + type(got)(CTX, ORACLE.to_terms(want.get(i, {})), check=False)
        assert got == ref.truncate((sj, sn))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_conjugation_oracle(seed):
    rng = random.Random(seed)
    c = GradedContext([("x", 0), ("e", -1), ("t", 1)], 3, 3)
    v = rand_derivation(rng, c, 0, 2, gaining(c))
    X = rand_derivation(rng, c, rng.randint(-1, 1), 2)
    f = rand_poly(rng, c, rng.randint(-1, 1), 3)
    # exact on the working slab, compared where nothing is lost
    W = c.working(4)
    vw, Xw, fw = v.to(W), X.to(W), f.to(W)
    P = push_forward(vw, Xw)
    psi = exp_flow(vw)
    lhs = psi(P(fw))
    rhs = Xw(psi(fw))
    assert (lhs - rhs).to(c) == c.zero()


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_push_forward_tower(seed):
    rng = random.Random(seed)
    c = GradedContext([("x", 0), ("e", -1), ("t", 1)], 4, 5)
    small = c.with_truncation(2, 3)
    v = rand_derivation(rng, c, 0, 2, gaining(c))
    X = rand_derivation(rng, c, 1, 2)
    # v raises jet + neg, so truncation commutes with the push
    W = c.working(2)
    big = push_forward(v.to(W), X.to(W)).to(small)
    Ws = small.working(2)
    direct = push_forward(v.to(Ws), X.to(Ws)).to(small)
    assert big == direct
