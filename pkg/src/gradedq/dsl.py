"""Input language for graded manifolds, fields and ideals.

    manifold { base x; base y; gen xi : -1; gen theta : 1; }
    truncate { jet 3; filt 4; }
    Q { xi -> x*y; }
    ideal { x^2, x*y }

Field blocks are ``Q``, ``delta``, ``Qplus`` and ``Qprime`` (values of
degree deg(v) + 1) and ``qI`` (degree 0, base variables only).  ``#`` starts
a comment.  Expressions use rationals, variables, + - * / ^ and parentheses;
``/`` divides by an integer.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .core import GradedContext, GradedPolynomial
from .derivations import Derivation

FIELD_DEGREES = {"Q": 1, "delta": 1, "Qplus": 1, "Qprime": 1, "qI": 0}
EXACT = 1 << 20

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+|\#[^\n]*)
  | (?P<nl>\n)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op>->|[{}();:,+\-*/^])
""", re.VERBOSE)


class ParseError(ValueError):
    def __init__(self, msg, line=None, col=None):
        self.line, self.col = line, col
        where = f"line {line}, column {col}: " if line is not None else ""
        super().__init__(where + msg)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str):
    out = []
    line, start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            start = m.end()
        elif kind != "ws":
            out.append(Token(kind, m.group(), line, pos - start + 1))
        pos = m.end()
    out.append(Token("eof", "", line, pos - start + 1))
    return out


# expression trees: ("num", Fraction) | ("var", name, tok) | (op, a, b) | ("neg", a) | ("pow", a, k)

class _Parser:
    def __init__(self, text):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col)

    def expect(self, text=None, kind=None):
        t = self.tok
        if (text is not None and t.text != text) or (kind is not None and t.kind != kind):
            want = repr(text) if text is not None else kind
            got = repr(t.text) if t.kind != "eof" else "end of input"
            raise self.error(f"expected {want}, got {got}")
        return self.next()

    def accept(self, text):
        if self.tok.text == text and self.tok.kind in ("op", "ident"):
            return self.next()
        return None

    def integer(self):
        sign = -1 if self.accept("-") else 1
        return sign * int(self.expect(kind="int").text)

    # expr := term (("+"|"-") term)*
    def expr(self):
        node = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = self.next().text
            node = ("add" if op == "+" else "sub", node, self.term())
        return node

    # term := unary (("*"|"/") unary)*
    def term(self):
        node = self.unary()
        while self.tok.text in ("*", "/") and self.tok.kind == "op":
            op = self.next()
            if op.text == "*":
                node = ("mul", node, self.unary())
            else:
                d = int(self.expect(kind="int").text)
                if d == 0:
                    raise self.error("division by zero", op)
                node = ("mul", node, ("num", Fraction(1, d)))
        return node

    def unary(self):
        if self.accept("-"):
            return ("neg", self.unary())
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self):
        node = self.atom()
        if self.accept("^"):
            node = ("pow", node, int(self.expect(kind="int").text))
        return node

    def atom(self):
        t = self.tok
        if t.kind == "int":
            self.next()
            return ("num", Fraction(int(t.text)))
        if t.kind == "ident":
            self.next()
            return ("var", t.text, t)
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        raise self.error("expected a number, variable or '('")


def _evaluate(node, ctx: GradedContext):
    kind = node[0]
    if kind == "num":
        return ctx.const(node[1])
    if kind == "var":
        name, tok = node[1], node[2]
        if name not in ctx.index:
            raise ParseError(f"unknown identifier {name!r}", tok.line, tok.col)
        return ctx.var(name)
    if kind == "neg":
        return -_evaluate(node[1], ctx)
    if kind == "pow":
        return _evaluate(node[1], ctx) ** node[2]
    a, b = _evaluate(node[1], ctx), _evaluate(node[2], ctx)
    if kind == "add":
        return a + b
    if kind == "sub":
        return a - b
    return a * b


def _exact(ctx: GradedContext) -> GradedContext:
    return ctx.with_truncation(EXACT, EXACT, None)


def parse_polynomial(ctx: GradedContext, text: str) -> GradedPolynomial:
    """Exact polynomial on ``ctx`` (no truncation applied)."""
    p = _Parser(text)
    node = p.expr()
    p.expect(kind="eof")
    poly = _evaluate(node, _exact(ctx))
    return GradedPolynomial(ctx, poly.terms, check=False)


@dataclass
class ManifoldSpec:
    variables: list  # (name, degree)
    jet: int = 3
    filt: int = 4
    fields: dict = field(default_factory=dict)  # block -> {var: polynomial}
    ideal: list = field(default_factory=list)
    has_truncation: bool = False

    @property
    def ctx(self) -> GradedContext:
        return GradedContext(self.variables, self.jet, self.filt)

    @property
    def exact_ctx(self) -> GradedContext:
        return _exact(self.ctx)

    def derivation(self, block="Q", ctx=None) -> Derivation:
        """The field of a block as exact data on ``ctx`` (default: the declared chart)."""
        ctx = ctx or self.exact_ctx
        vals = {n: GradedPolynomial(ctx, p.terms, check=False)
                for n, p in self.fields.get(block, {}).items()}
        return Derivation(ctx, vals, FIELD_DEGREES[block], check=False)

    def ideal_on(self, ctx=None):
        ctx = ctx or self.base_ctx()
        return [p.restrict_to(ctx) for p in self.ideal]

    def base_ctx(self) -> GradedContext:
        return GradedContext([(n, d) for n, d in self.variables if d == 0], self.jet, self.filt)

    def __eq__(self, other):
        if not isinstance(other, ManifoldSpec):
            return NotImplemented
        return (self.variables == other.variables and self.jet == other.jet
                and self.filt == other.filt and self.ideal == other.ideal
                and {k: v for k, v in self.fields.items() if v}
                == {k: v for k, v in other.fields.items() if v})


def parse(text: str) -> ManifoldSpec:
    p = _Parser(text)
    variables = []
    seen = {}
    raw_fields = []
    raw_ideal = []
    spec = ManifoldSpec([])
    while p.tok.kind != "eof":
        head = p.expect(kind="ident")
        if head.text == "manifold":
            p.expect("{")
            while not p.accept("}"):
                kw = p.expect(kind="ident")
                if kw.text not in ("base", "gen"):
                    raise p.error(f"expected 'base' or 'gen', got {kw.text!r}", kw)
                name = p.expect(kind="ident")
                if name.text in seen:
                    raise p.error(f"duplicate variable {name.text!r}", name)
                deg = 0
                if p.accept(":"):
                    deg = p.integer()
                elif kw.text == "gen":
                    raise p.error(f"generator {name.text!r} needs a degree (gen {name.text} : d;)", name)
                if kw.text == "gen" and deg == 0:
                    raise p.error(f"generator {name.text!r} must have nonzero degree; use 'base'", name)
                if kw.text == "base" and deg != 0:
                    raise p.error(f"base variable {name.text!r} has degree 0", name)
                p.expect(";")
                seen[name.text] = deg
                variables.append((name.text, deg))
        elif head.text == "truncate":
            p.expect("{")
            p.expect("jet")
            spec.jet = int(p.expect(kind="int").text)
            p.expect(";")
            p.expect("filt")
            spec.filt = int(p.expect(kind="int").text)
            if spec.filt < 1:
                raise p.error("filt must be at least 1")
            p.expect(";")
            p.expect("}")
            spec.has_truncation = True
        elif head.text in FIELD_DEGREES:
            p.expect("{")
            entries = []
            while not p.accept("}"):
                var = p.expect(kind="ident")
                p.expect("->")
                entries.append((var, p.expr()))
                p.expect(";")
            raw_fields.append((head.text, entries))
        elif head.text == "ideal":
            p.expect("{")
            if not p.accept("}"):
                raw_ideal.append((p.tok, p.expr()))
                while p.accept(","):
                    raw_ideal.append((p.tok, p.expr()))
                p.expect("}")
        else:
            raise p.error(f"unknown block {head.text!r}", head)
    if not variables:
        raise p.error("no variables declared (missing manifold block)")
    spec.variables = variables
    E = spec.exact_ctx
    for block, entries in raw_fields:
        shift = FIELD_DEGREES[block]
        vals = spec.fields.setdefault(block, {})
        for var, node in entries:
            if var.text not in E.index:
                raise ParseError(f"unknown identifier {var.text!r}", var.line, var.col)
            if var.text in vals:
                raise ParseError(f"{var.text} assigned twice in {block}", var.line, var.col)
            val = _evaluate(node, E)
            want = E.degree_of(var.text) + shift
            bad = [d for d in val.degrees("total") if d != want]
            if bad:
                raise ParseError(f"degree mismatch in {block}: {var.text} -> {val} has degree "
                                 f"{bad[0]}, needs {want}", var.line, var.col)
            if block == "qI" and E.degree_of(var.text) != 0:
                raise ParseError(f"qI assigns base variables only, not {var.text}", var.line, var.col)
            if val:
                vals[var.text] = val
    for tok, node in raw_ideal:
        val = _evaluate(node, E)
        if val.base_projection() != val:
            raise ParseError("ideal generators must involve base variables only", tok.line, tok.col)
        spec.ideal.append(val)
    return spec


def format_polynomial(p: GradedPolynomial) -> str:
    return str(p)


def format_spec(spec: ManifoldSpec) -> str:
    """Text that parses back to an equal spec."""
    decl = " ".join(f"base {n};" if d == 0 else f"gen {n} : {d};" for n, d in spec.variables)
    lines = [f"manifold {{ {decl} }}", f"truncate {{ jet {spec.jet}; filt {spec.filt}; }}"]
    for block, vals in spec.fields.items():
        if not vals:
            continue
        order = {n: i for i, (n, _) in enumerate(spec.variables)}
        body = " ".join(f"{n} -> {vals[n]};" for n in sorted(vals, key=order.get))
        lines.append(f"{block} {{ {body} }}")
    if spec.ideal:
        lines.append("ideal { " + ", ".join(str(g) for g in spec.ideal) + " }")
    return "\n".join(lines) + "\n"


def format_derivation(X: Derivation, block="Q") -> str:
    body = " ".join(f"{n} -> {v};" for n, v in X.items())
    return f"{block} {{ {body} }}"
