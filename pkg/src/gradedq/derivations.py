"""Graded derivations, their flows, and logs of coordinate changes.

A derivation is stored by its values on the coordinate variables.  The value
on a variable z keeps the coefficient terms that give derivation terms inside
the truncation, so it may reach one jet order (base z) or deg_-(z) filtration
orders further than a function would.

Conventions used throughout:

* ``[X, Y] = X Y - (-1)^{|X||Y|} Y X``.
* ``push_forward(v, X) = sum_k ad_v^k(X) / k!`` with ``ad_v(X) = [X, v]``.
  This is X rewritten in the coordinates ``exp(v)(z)``: if Psi denotes the
  algebra map ``exp(v)`` then ``Psi(P f) = X(Psi f)``.
* A log ``[s1, ..., sk]`` stands for ``Psi = s1 o s2 o ... o sk`` acting on
  functions, and pushing forward along it applies the steps in order.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping

from .core import GradedContext, GradedPolynomial, GradingError, to_fraction


class FlowError(ArithmeticError):
    """A flow series failed to terminate within its step budget."""


def _weight(ctx: GradedContext, grading: str, i: int) -> int:
    if grading == "total":
        return ctx.degrees[i]
    if grading == "negative":
        return ctx.negw[i]
    if grading == "positive":
        return ctx.posw[i]
    if grading == "arity":
        return ctx.arityw[i]
    if grading == "jet":
        return ctx.jetw[i]
    if grading == "weight":
        return ctx.jetw[i] + ctx.negw[i]
    raise GradingError(f"unknown grading {grading!r}")


def _grade(ctx, e, grading):
    if grading == "weight":
        return ctx.jet_of(e) + ctx.neg_of(e)
    return ctx.grade(e, grading)


def apply(X: Derivation, f: GradedPolynomial, shift=(0, 0)) -> GradedPolynomial:
    """X(f) via left partial derivatives: sum_i X(x_i) * d_i f."""
    ctx = X.ctx
    out = ctx.zero()
    for i, xv in X.values.items():
        d = f.left_partial(i)
        if d:
            out = out + xv.mul(d, shift)
    return out


class Derivation:
    """Homogeneous derivation of the graded polynomial algebra of ``ctx``."""

    __slots__ = ("ctx", "degree", "values")

    def __init__(self, ctx: GradedContext, values: Mapping | None = None,
                 degree: int | None = None, check: bool = True):
        self.ctx = ctx
        vals = {}
        for k, v in (values or {}).items():
            i = ctx.idx(k)
            if not isinstance(v, GradedPolynomial):
                v = ctx.const(v)
            elif v.ctx is not ctx:
                if not v.ctx.same_chart(ctx):
                    raise GradingError("value lives on another chart")
                v = GradedPolynomial(ctx, v.terms, check=False)
            if check:
                v = v.truncate(ctx.shift_for(i))
            if v:
                vals[i] = vals[i] + v if i in vals else v
        self.values = {i: v for i, v in vals.items() if v}
        if degree is None:
            ds = set()
            for i, v in self.values.items():
                ds |= {d - ctx.degrees[i] for d in v.degrees("total")}
            if len(ds) > 1:
                raise GradingError("derivation is not homogeneous")
            degree = ds.pop() if ds else 0
        elif check:
            for i, v in self.values.items():
                for d in v.degrees("total"):
                    if d - ctx.degrees[i] != degree:
                        raise GradingError(
                            f"value on {ctx.names[i]} has degree {d}, "
                            f"expected {ctx.degrees[i] + degree}")
        self.degree = degree

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls, ctx, degree=0):
        return cls(ctx, {}, degree, check=False)

    @classmethod
    def partial(cls, ctx, name):
        i = ctx.idx(name)
        return cls(ctx, {i: ctx.const(1)}, -ctx.degrees[i])

    def _new(self, values, degree=None):
        return Derivation(self.ctx, values, self.degree if degree is None else degree,
                          check=False)

    # -- protocol -----------------------------------------------------------
    def value(self, name) -> GradedPolynomial:
        return self.values.get(self.ctx.idx(name), self.ctx.zero())

    def __getitem__(self, name):
        return self.value(name)

    def __bool__(self):
        return bool(self.values)

    def is_zero(self):
        return not self.values

    def __eq__(self, other):
        if not isinstance(other, Derivation):
            return NotImplemented
        if not self.ctx.same_chart(other.ctx):
            return False
        if not self.values and not other.values:
            return True
        return self.degree == other.degree and self.values == other.values

    __hash__ = None

    def _check(self, other):
        if not isinstance(other, Derivation):
            raise TypeError("expected a Derivation")
        if not self.ctx.same_chart(other.ctx):
            raise GradingError("derivations on different charts")
        if self.values and other.values and self.degree != other.degree:
            raise GradingError("adding derivations of different degrees")

    def __add__(self, other):
        self._check(other)
        out = dict(self.values)
        for i, v in other.values.items():
            w = out[i] + v if i in out else v
            if w:
                out[i] = w
            else:
                out.pop(i, None)
        deg = self.degree if self.values else other.degree
        return Derivation(self.ctx, out, deg, check=False)

    def __neg__(self):
        return self._new({i: -v for i, v in self.values.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        c = to_fraction(c)
        if not c:
            return Derivation.zero(self.ctx, self.degree)
        return self._new({i: v.scale(c) for i, v in self.values.items()})

    def __rmul__(self, c):
        if isinstance(c, (int, Fraction)):
            return self.scale(c)
        if isinstance(c, GradedPolynomial):
            return self.left_mul(c)
        return NotImplemented

    def left_mul(self, f: GradedPolynomial):
        """The derivation f * X, of degree |f| + |X|."""
        deg = f.degree
        if deg is None:
            if not f:
                return Derivation.zero(self.ctx, self.degree)
            raise GradingError("multiplier must be homogeneous")
        out = {}
        for i, v in self.values.items():
            w = f.mul(v, self.ctx.shift_for(i))
            if w:
                out[i] = w
        return Derivation(self.ctx, out, deg + self.degree, check=False)

    def __call__(self, f, shift=(0, 0)):
        return apply(self, f, shift)

    # -- algebra ------------------------------------------------------------
    def commutator(self, other: Derivation) -> Derivation:
        self._check_chart(other)
        ctx = self.ctx
        sgn = -1 if (self.degree * other.degree) % 2 == 0 else 1
        out = {}
        for i in set(self.values) | set(other.values):
            sh = ctx.shift_for(i)
            w = ctx.zero()
            yv = other.values.get(i)
            if yv is not None and self.values:
                w = w + apply(self, yv, sh)
            xv = self.values.get(i)
            if xv is not None and other.values:
                t = apply(other, xv, sh)
                w = w + t if sgn == 1 else w - t
            if w:
                out[i] = w
        return Derivation(ctx, out, self.degree + other.degree, check=False)

    def _check_chart(self, other):
        if not self.ctx.same_chart(other.ctx):
            raise GradingError("derivations on different charts")

    # -- gradings -----------------------------------------------------------
    def term_grades(self, grading):
        ctx = self.ctx
        out = set()
        for i, v in self.values.items():
            w = _weight(ctx, grading, i)
            for e in v.terms:
                out.add(_grade(ctx, e, grading) - w)
        return out

    def min_grade(self, grading):
        g = self.term_grades(grading)
        return min(g) if g else None

    def components(self, grading):
        ctx = self.ctx
        buckets = {}
        for i, v in self.values.items():
            w = _weight(ctx, grading, i)
            for e, c in v.terms.items():
                buckets.setdefault(_grade(ctx, e, grading) - w, {}).setdefault(i, {})[e] = c
        out = {}
        for k in sorted(buckets):
            vals = {i: GradedPolynomial(ctx, t, check=False) for i, t in buckets[k].items()}
            out[k] = Derivation(ctx, vals, self.degree, check=False)
        return out

    def component(self, grading, n):
        return self.components(grading).get(n, Derivation.zero(self.ctx, self.degree))

    def filter_terms(self, pred):
        """Keep terms (i, exponents) satisfying ``pred``."""
        out = {}
        for i, v in self.values.items():
            t = {e: c for e, c in v.terms.items() if pred(i, e)}
            if t:
                out[i] = GradedPolynomial(self.ctx, t, check=False)
        return self._new(out)

    # -- contexts -----------------------------------------------------------
    def to(self, ctx: GradedContext):
        if not ctx.same_chart(self.ctx):
            raise GradingError("different charts")
        out = {}
        for i, v in self.values.items():
            w = v.to(ctx, ctx.shift_for(i))
            if w:
                out[i] = w
        return Derivation(ctx, out, self.degree, check=False)

    def embed(self, ctx: GradedContext):
        out = {}
        for i, v in self.values.items():
            j = ctx.idx(self.ctx.names[i])
            w = v.embed(ctx, ctx.shift_for(j))
            if w:
                out[j] = w
        return Derivation(ctx, out, self.degree, check=False)

    def truncate(self):
        return self.to(self.ctx)

    def restrict_values(self, names):
        keep = {self.ctx.idx(n) for n in names}
        return self._new({i: v for i, v in self.values.items() if i in keep})

    def set_zero(self, names):
        """Set the listed variables to zero in every coefficient."""
        out = {}
        for i, v in self.values.items():
            w = v.set_zero(names)
            if w:
                out[i] = w
        return self._new(out)

    # -- display ------------------------------------------------------------
    def items(self):
        return [(self.ctx.names[i], self.values[i]) for i in sorted(self.values)]

    def __str__(self):
        if not self.values:
            return "0"
        return " + ".join(f"({v})*d/d{n}" for n, v in self.items())

    def __repr__(self):
        return f"Derivation(deg={self.degree}: {self})"


def commutator(X: Derivation, Y: Derivation) -> Derivation:
    return X.commutator(Y)


def decompose(X: Derivation, grading: str):
    return X.components(grading)


def _budget(ctx: GradedContext) -> int:
    return 2 * (ctx.jet_order + ctx.filtration_order) + ctx.nvars + 4


class Automorphism:
    """Algebra map given by the images of the variables."""

    def __init__(self, ctx: GradedContext, images: Mapping):
        self.ctx = ctx
        self.images = {ctx.idx(k): v for k, v in images.items()}

    def image(self, name) -> GradedPolynomial:
        i = self.ctx.idx(name)
        img = self.images.get(i)
        return self.ctx.var(i) if img is None else img

    def __call__(self, f: GradedPolynomial, shift=(0, 0)):
        return f.substitute(self.images, shift)

    def compose(self, other: Automorphism) -> Automorphism:
        """self o other."""
        ctx = self.ctx
        cache = {}
        return Automorphism(ctx, {i: other.image(i).substitute(self.images, cache=cache)
                                  for i in range(ctx.nvars)})


def exp_series(v: Derivation, f: GradedPolynomial, t=1, budget=None, shift=(0, 0)):
    """sum_k t^k v^k(f) / k!, required to terminate within the budget."""
    if v.degree != 0:
        raise GradingError("flow generators must have degree 0")
    t = to_fraction(t)
    budget = _budget(v.ctx) if budget is None else budget
    out = f
    term = f
    for k in range(1, budget + 1):
        term = apply(v, term, shift).scale(t / k)
        if not term:
            return out
        out = out + term
    raise FlowError(f"flow did not terminate within {budget} steps")


def exp_flow(v: Derivation, t=1, budget=None) -> Automorphism:
    ctx = v.ctx
    return Automorphism(ctx, {i: exp_series(v, ctx.var(i), t, budget)
                              for i in range(ctx.nvars)})


def push_forward(v: Derivation, X: Derivation, budget=None) -> Derivation:
    """sum_k ad_v^k(X) / k! with ad_v(Y) = [Y, v]."""
    if v.degree != 0:
        raise GradingError("flow generators must have degree 0")
    if not v:
        return X
    budget = _budget(v.ctx) if budget is None else budget
    out = X
    term = X
    for k in range(1, budget + 1):
        term = term.commutator(v).scale(Fraction(1, k))
        if not term:
            return out
        out = out + term
    raise FlowError(f"push-forward did not terminate within {budget} steps")


# -- logs -------------------------------------------------------------------

class FlowStep:
    kind = "flow"

    def __init__(self, generator: Derivation, stage: str = "", gain: int = 0):
        if generator.degree != 0:
            raise GradingError("flow generators must have degree 0")
        self.generator = generator
        self.stage = stage
        self.gain = gain

    @property
    def ctx(self):
        return self.generator.ctx

    def automorphism(self):
        return exp_flow(self.generator)

    def apply(self, f, shift=(0, 0)):
        return exp_series(self.generator, f, shift=shift)

    def inverse(self):
        return FlowStep(-self.generator, self.stage, self.gain)

    def push(self, X):
        return push_forward(self.generator, X)

    def to(self, ctx):
        return FlowStep(self.generator.to(ctx), self.stage, self.gain)

    def is_identity(self):
        return not self.generator


class LinearStep:
    """Invertible degree-preserving linear change of coordinates."""

    kind = "linear"

    def __init__(self, ctx, forward: Mapping, inverse: Mapping, stage: str = ""):
        self.forward = Automorphism(ctx, forward)
        self.backward = Automorphism(ctx, inverse)
        self.stage = stage
        self.gain = 0
        self._ctx = ctx

    @property
    def ctx(self):
        return self._ctx

    def automorphism(self):
        return self.forward

    def apply(self, f, shift=(0, 0)):
        return self.forward(f, shift)

    def inverse(self):
        return LinearStep(self._ctx, self.backward.images, self.forward.images, self.stage)

    def push(self, X):
        ctx = X.ctx
        out = {}
        for i in range(ctx.nvars):
            sh = ctx.shift_for(i)
            w = apply(X, self.forward.image(i), sh)
            if w:
                w = self.backward(w, sh)
            if w:
                out[i] = w
        return Derivation(ctx, out, X.degree, check=False)

    def to(self, ctx):
        return LinearStep(ctx, {i: v.to(ctx) for i, v in self.forward.images.items()},
                          {i: v.to(ctx) for i, v in self.backward.images.items()}, self.stage)

    def is_identity(self):
        return all(v == self._ctx.var(i) for i, v in self.forward.images.items())


class FlowLog:
    """Ordered coordinate changes, replayable and invertible.

    Steps of one stage carry weakly increasing gains (the order they correct).
    """

    def __init__(self, ctx: GradedContext, steps=()):
        self.ctx = ctx
        self.steps = []
        for s in steps:
            self.append(s)

    def append(self, step):
        if step.is_identity():
            return
        if not step.ctx.same_chart(self.ctx):
            raise GradingError("step lives on another chart")
        if step.ctx != self.ctx:
            step = step.to(self.ctx)
        if self.steps and self.steps[-1].stage == step.stage and step.gain < self.steps[-1].gain:
            raise GradingError("gains must weakly increase within a stage")
        self.steps.append(step)

    def extend(self, other: FlowLog):
        for s in other.steps:
            self.append(s)

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def inverse(self) -> FlowLog:
        log = FlowLog(self.ctx)
        # gains of an inverted log run backwards, so stages are renamed
        for k, s in enumerate(reversed(self.steps)):
            t = s.inverse()
            t.stage = f"inverse-{k}"
            log.steps.append(t)
        return log

    def push_forward(self, X: Derivation) -> Derivation:
        if X.ctx != self.ctx:
            X = X.to(self.ctx)
        for s in self.steps:
            X = s.push(X)
        return X

    def apply(self, f: GradedPolynomial, shift=(0, 0)) -> GradedPolynomial:
        """Psi(f) = s1(s2(...sk(f)))."""
        if f.ctx != self.ctx:
            f = f.to(self.ctx)
        for s in reversed(self.steps):
            f = s.apply(f, shift)
        return f

    def automorphism(self) -> Automorphism:
        return Automorphism(self.ctx, {i: self.apply(self.ctx.var(i))
                                       for i in range(self.ctx.nvars)})

    def to(self, ctx) -> FlowLog:
        log = FlowLog(ctx)
        log.steps = [s.to(ctx) for s in self.steps]
        return log

    # -- serialisation --------------------------------------------------------
    def to_json(self):
        ctx = self.ctx
        steps = []
        for s in self.steps:
            if s.kind == "flow":
                steps.append({"kind": "flow", "stage": s.stage, "gain": s.gain,
                              "values": {n: str(v) for n, v in s.generator.items()}})
            else:
                steps.append({"kind": "linear", "stage": s.stage,
                              "forward": {ctx.names[i]: str(v) for i, v in sorted(s.forward.images.items())},
                              "inverse": {ctx.names[i]: str(v) for i, v in sorted(s.backward.images.items())}})
        return {"variables": [[n, d] for n, d in zip(ctx.names, ctx.degrees)],
                "jet": ctx.jet_order, "filt": ctx.filtration_order, "cap": ctx.cap,
                "steps": steps}

    @classmethod
    def from_json(cls, data):
        from .dsl import parse_polynomial

        ctx = GradedContext([tuple(v) for v in data["variables"]], data["jet"],
                            data["filt"], data.get("cap"))
        log = cls(ctx)
        for s in data["steps"]:
            if s["kind"] == "flow":
                vals = {n: parse_polynomial(ctx, t) for n, t in s["values"].items()}
                log.steps.append(FlowStep(Derivation(ctx, vals, 0), s["stage"], s["gain"]))
            elif s["kind"] == "linear":
                fw = {n: parse_polynomial(ctx, t) for n, t in s["forward"].items()}
                bw = {n: parse_polynomial(ctx, t) for n, t in s["inverse"].items()}
                log.steps.append(LinearStep(ctx, fw, bw, s["stage"]))
            else:
                raise ValueError(f"unknown step kind {s['kind']!r}")
        return log


def compose_flows(log: FlowLog) -> Automorphism:
    return log.automorphism()
