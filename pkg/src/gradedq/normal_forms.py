"""Normal forms of Q-structures near a point.

Every pipeline here runs on a working context (``GradedContext.working``)
bounded only by jet + negative degree, with a margin above the caller's
truncation, and hands back results truncated to the caller's context.
Returned logs keep the working context so they can be replayed exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .core import GradedContext, GradedPolynomial, GradingError
from .derivations import Derivation, FlowLog, FlowStep, LinearStep, push_forward
from .linalg import solve
from .qmanifold import QStructure, anchor, as_q, curvature


class NormalFormError(ArithmeticError):
    """A normal-form pipeline could not run or an internal assertion failed."""


DEFAULT_MARGIN = 2


def jet_inverse(k: GradedPolynomial) -> GradedPolynomial:
    """Inverse of a base jet with nonzero constant term (truncated geometric series)."""
    c = k.constant_term()
    if not c:
        raise NormalFormError("jet has no constant term")
    u = k.scale(1 / c) - 1
    out = k.ctx.const(1)
    term = k.ctx.const(1)
    while True:
        term = -(term * u)
        if not term:
            break
        out = out + term
    return out.scale(1 / c)


def _visible(X: Derivation, user: GradedContext) -> Derivation:
    return X.to(user) if X.ctx != user else X


def homotopy_alpha(Q) -> GradedPolynomial:
    """alpha = kappa_eta^{-1} eta for the first component with kappa_eta(0) != 0."""
    q = as_q(Q)
    ctx = q.ctx
    for name, k in curvature(q).items():
        if k.constant_term():
            alpha = jet_inverse(k) * ctx.var(name)
            if (k * jet_inverse(k)) != ctx.const(1):
                raise NormalFormError("inverse jet check failed")
            return alpha
    raise NormalFormError("curvature vanishes at the origin; use split_at_point")


def pairing(kappa: dict, alpha: GradedPolynomial) -> GradedPolynomial:
    """<kappa, alpha>: replace each degree -1 variable of alpha by its curvature."""
    ctx = alpha.ctx
    out = ctx.zero()
    for name, k in kappa.items():
        out = out + k.to(ctx) * alpha.left_partial(name)
    return out


@dataclass
class TrivializeResult:
    Q_final: QStructure
    log: FlowLog
    alpha: GradedPolynomial
    transcript: list = field(default_factory=list)


def i_kappa(ctx: GradedContext, kappa: dict) -> Derivation:
    return Derivation(ctx, {n: k.to(ctx) for n, k in kappa.items()}, 1)


def trivialize(Q, ctx: GradedContext | None = None,
               margin: int = DEFAULT_MARGIN) -> TrivializeResult:
    """Conjugate Q to the contraction with its curvature.

    Q is read as exact data on its own context; results are truncated to
    ``ctx`` (default: the context of Q).
    """
    q = as_q(Q)
    user = ctx or q.ctx
    if not any(k.constant_term() for k in curvature(q).values()):
        raise NormalFormError("curvature vanishes at the origin; use split_at_point")
    W = user.working(margin)
    Qw = q.Q.to(W)
    alpha = homotopy_alpha(QStructure(W, Qw))
    log = FlowLog(W)
    transcript = []
    top = W.cap + 1

    # stage 1: negative degrees 0, 1, 2, ...
    for n in range(0, top):
        comp = Qw.component("negative", n)
        if not comp:
            continue
        v = -comp.left_mul(alpha)
        Qw = push_forward(v, Qw)
        log.append(FlowStep(v, "negative-degree", n + 1))
        left = _visible(Qw.component("negative", n), user)
        transcript.append(("negative-degree", n, len(log)))
        if left:
            raise NormalFormError(f"stage 1 step {n}: component {n} survives: {left}")

    # stage 2: polynomial degree of what remains in negative degree -1
    for k in range(0, top + W.nvars):
        comp = Qw.component("negative", -1).component("arity", k)
        if not comp:
            continue
        for sign in (-1, 1):
            v = comp.left_mul(alpha).scale(sign)
            trial = push_forward(v, Qw)
            left = _visible(trial.component("negative", -1).component("arity", k), user)
            if not left:
                break
        else:
            raise NormalFormError(f"stage 2 step {k}: arity component survives: {left}")
        Qw = trial
        log.append(FlowStep(v, "arity", k + 1))
        transcript.append(("arity", k, sign))

    final = Qw.to(user)
    target = i_kappa(user, {n: k.to(user) for n, k in curvature(q).items()})
    if final != target:
        raise NormalFormError(f"result {final} differs from i_kappa {target}")
    return TrivializeResult(QStructure(user, final, "verified"), log,
                            alpha.to(user), transcript)


@dataclass
class HomotopyReport:
    ok: bool
    checked: int
    per_degree: dict
    failures: list


def contracting_homotopy(Q_final, alpha: GradedPolynomial, samples=None,
                         pos_cap=None) -> HomotopyReport:
    """Check Q h + h Q = id for h = multiplication by alpha.

    Without ``samples`` the whole truncated monomial basis is used.  The
    product alpha * f is formed one filtration order above the context so the
    top layer of f is not lost before Q is applied.
    """
    q = as_q(Q_final)
    ctx = q.ctx
    wide = ctx.with_truncation(ctx.jet_order, ctx.filtration_order + 1)
    Qx = q.Q.to(wide)
    a = alpha.to(wide)
    if samples is None:
        if pos_cap is None:
            pos_cap = max([d for d in ctx.degrees if d > 0], default=0) * 2 + ctx.filtration_order
        samples = [GradedPolynomial(ctx, {e: Fraction(1)}, check=False)
                   for e in ctx.monomials(pos_cap=pos_cap)]
    per_degree = {}
    failures = []
    for f in samples:
        fw = f.to(wide)
        lhs = (Qx(a * fw) + a * Qx(fw)).to(ctx)
        d = f.degree
        if lhs != f:
            failures.append((f, lhs))
        per_degree[d] = per_degree.get(d, 0) + 1
    return HomotopyReport(not failures, len(samples), dict(sorted(per_degree.items(), key=lambda t: (t[0] is None, t[0] or 0))), failures)


# -- coordinate substitutions ------------------------------------------------

def _linear_part(p: GradedPolynomial):
    """{variable index: coefficient} of the terms that are a single variable."""
    out = {}
    for e, c in p.terms.items():
        if sum(e) == 1:
            out[e.index(1)] = c
    return out


def _invert_block(rows):
    """rows[i] = {j: a_ij} for a square block; returns the inverse rows."""
    keys = sorted(rows)
    inv = {}
    cols = [{i: rows[i].get(j, Fraction(0)) for i in keys} for j in keys]
    for t in keys:
        sol = solve(cols, {t: Fraction(1)})
        inv[t] = {keys[j]: v for j, v in sol.items()}
    return inv


def substitution_steps(ctx: GradedContext, targets: dict, stage: str):
    """Steps realising the coordinate change variable i -> targets[i].

    The change is split as a constant-coefficient linear step followed by a
    flow whose generator is the logarithm of the remaining unipotent part.
    """
    n = ctx.nvars
    targets = {ctx.idx(i): t.truncate() for i, t in targets.items()}
    lin = {}
    for i in range(n):
        if i in targets:
            lp = _linear_part(targets[i])
            for j in lp:
                if ctx.degrees[j] != ctx.degrees[i]:
                    raise GradingError("substitution does not preserve degrees")
            lin[i] = lp
        else:
            lin[i] = {i: Fraction(1)}
    steps = []
    moved = {i for i in targets if lin[i] != {i: Fraction(1)}}
    if moved:
        # close the block under the variables the moved ones mix with
        block = set(moved)
        for i in moved:
            block |= set(lin[i])
        inv = _invert_block({i: lin[i] for i in block})
        fwd = {i: sum((ctx.var(j).scale(c) for j, c in lin[i].items()), ctx.zero()) for i in block}
        bwd = {i: sum((ctx.var(j).scale(c) for j, c in inv[i].items()), ctx.zero()) for i in block}
        L = LinearStep(ctx, fwd, bwd, stage + "-linear")
        steps.append(L)
        u_images = {i: t.substitute(L.backward.images) for i, t in targets.items()}
    else:
        u_images = dict(targets)
    # logarithm of the unipotent part
    D = {i: img - ctx.var(i) for i, img in u_images.items()}
    D = {i: v for i, v in D.items() if v}
    if D:
        gen = {}
        cache = {}
        for i, d in D.items():
            acc = d
            term = d
            k = 1
            while True:
                k += 1
                term = term.substitute(u_images, cache=cache) - term
                if not term:
                    break
                if k > 4 * (ctx.jet_order + ctx.filtration_order + n):
                    raise NormalFormError("substitution is not unipotent")
                acc = acc + term.scale(Fraction((-1) ** (k + 1), k))
            gen[i] = acc
        g = Derivation(ctx, gen, 0)
        steps.append(FlowStep(g, stage + "-flow", 0))
    return steps


# -- straightening -------------------------------------------------------------

def _integrate(p: GradedPolynomial, y: int) -> GradedPolynomial:
    out = {}
    for e, c in p.terms.items():
        lst = list(e)
        lst[y] += 1
        out[tuple(lst)] = c / lst[y]
    return GradedPolynomial(p.ctx, out, check=False)


@dataclass
class StraightenResult:
    log: FlowLog
    y: str
    field: Derivation  # pushed field, truncated to the caller's context


def _straighten_working(vw: Derivation, user: GradedContext, exclude=()):
    W = vw.ctx
    if vw.degree != 0:
        raise NormalFormError("straighten needs a degree 0 field")
    consts = {i: vw.values[i].constant_term() for i in W.base_indices() if i in vw.values}
    y = next((i for i in W.base_indices()
              if consts.get(i) and W.names[i] not in exclude), None)
    if y is None:
        raise NormalFormError("base part of the field vanishes at the origin")
    log = FlowLog(W)
    P = vw
    cy = consts[y]
    if any(c for i, c in consts.items() if i != y) or cy != 1:
        targets = {y: W.var(y).scale(1 / cy)}
        for i, c in consts.items():
            if i != y and c:
                targets[i] = W.var(i) - W.var(y).scale(c / cy)
        for s in substitution_steps(W, targets, "straighten"):
            log.append(s)
            P = s.push(P)
    dy = Derivation.partial(W, y)
    w = P - dy
    low = w.min_grade("weight")
    if low is not None and low < 0 and _visible(w.filter_terms(
            lambda i, e: W.jet_of(e) + W.neg_of(e) - W.jetw[i] - W.negw[i] < 0), user):
        raise NormalFormError("linear normalisation left a constant base term")
    for k in range(0, W.cap + 2):
        w = P - dy
        wk = w.component("weight", k)
        if not wk:
            continue
        u = Derivation(W, {i: -_integrate(v, y) for i, v in wk.values.items()}, 0)
        P = push_forward(u, P)
        log.append(FlowStep(u, "straighten", k))
        if _visible((P - dy).component("weight", k), user):
            raise NormalFormError(f"straightening order {k} not removed")
    if _visible(P - dy, user):
        raise NormalFormError("straightened field differs from d/dy")
    return log, W.names[y], P


def straighten(v: Derivation, ctx: GradedContext | None = None,
               margin: int = DEFAULT_MARGIN) -> StraightenResult:
    """Log Psi with push_forward(Psi, v) = d/dy for a base variable y."""
    user = ctx or v.ctx
    W = user.working(margin)
    log, y, P = _straighten_working(v.to(W), user)
    return StraightenResult(log, y, P.to(user))


# -- splitting -----------------------------------------------------------------

@dataclass
class SplitResult:
    pairs: list
    R: Derivation
    log: FlowLog
    Q_final: Derivation
    rank: int
    transcript: list = field(default_factory=list)


def _anchor_choice(Qw: Derivation, paired_y, paired_t):
    ctx = Qw.ctx
    for j in ctx.indices_of_degree(1):
        if ctx.names[j] in paired_t:
            continue
        e = [0] * ctx.nvars
        e[j] = 1
        e = tuple(e)
        for i in ctx.base_indices():
            if ctx.names[i] in paired_y:
                continue
            if Qw.values.get(i) is not None and Qw.values[i].terms.get(e):
                return j
    return None


def split_at_point(Q, ctx: GradedContext | None = None,
                   margin: int = DEFAULT_MARGIN) -> SplitResult:
    """Split off pairs theta_k d/dy_k, one per unit of anchor rank."""
    q = as_q(Q)
    user = ctx or q.ctx
    if any(k.constant_term() for k in curvature(q).values()):
        raise NormalFormError("curvature does not vanish at the origin")
    r = anchor(q).rank
    W = user.working(margin)
    Qw = q.Q.to(W)
    log = FlowLog(W)
    pairs = []
    paired_y, paired_t = set(), set()
    transcript = []
    while True:
        j = _anchor_choice(Qw, paired_y, paired_t)
        if j is None:
            break
        it = len(pairs)
        # 1. straighten v = [Q, i_e]
        ie = Derivation.partial(W, j)
        v = Qw.commutator(ie)
        slog, y, _ = _straighten_working(v, user, exclude=paired_y)
        for s in slog:
            s.stage = f"pair{it}-{s.stage}"
            log.append(s)
            Qw = s.push(Qw)
        yi = W.idx(y)
        if any(_visible(Derivation(W, {i: val.left_partial(yi)}, None, check=False), user)
               for i, val in Qw.values.items() if val.left_partial(yi)):
            raise NormalFormError(f"pair {it}: Q still depends on {y} after straightening")
        transcript.append(("straighten", y, len(slog)))
        # 2. theta := Q(y)
        tau = Qw.value(yi)
        lp = _linear_part(tau)
        k = next((t for t in W.indices_of_degree(1)
                  if lp.get(t) and W.names[t] not in paired_t), None)
        if k is None:
            raise NormalFormError(f"pair {it}: Q({y}) has no unit linear part")
        if tau.truncate() != W.var(k):
            for s in substitution_steps(W, {k: tau}, f"pair{it}-replace"):
                log.append(s)
                Qw = s.push(Qw)
        theta = W.names[k]
        if _visible(Qw.value(yi) - W.var(k), user):
            raise NormalFormError(f"pair {it}: Q({y}) != {theta} after replacement")
        transcript.append(("replace", theta))
        # 3. remove theta * B with the flow exp(-y B)
        B = {}
        for i, val in Qw.values.items():
            if i in (yi, k):
                continue
            b = val.left_partial(k)
            if b:
                B[i] = b
        if B:
            g = Derivation(W, {i: -(W.var(yi) * b) for i, b in B.items()}, 0)
            Qw = push_forward(g, Qw)
            log.append(FlowStep(g, f"pair{it}-cleanup", 0))
        transcript.append(("cleanup", bool(B)))
        _check_pair(Qw, yi, k, user, it)
        pairs.append((y, theta))
        paired_y.add(y)
        paired_t.add(theta)
    if len(pairs) != r:
        raise NormalFormError(f"extracted {len(pairs)} pairs but the anchor rank is {r}")
    standard = Derivation(W, {p[0]: W.var(p[1]) for p in pairs}, 1)
    R = (Qw - standard).to(user)
    return SplitResult(pairs, R, log, Qw.to(user), r, transcript)


def _check_pair(Qw, yi, k, user, it):
    W = Qw.ctx
    bad = []
    if _visible(Derivation(W, {yi: Qw.value(yi) - W.var(k)}, 1, check=False), user):
        bad.append("Q(y) != theta")
    if _visible(Derivation(W, {k: Qw.value(k)}, 1, check=False), user):
        bad.append("Q(theta) != 0")
    for i, val in Qw.values.items():
        if i in (yi, k):
            continue
        for var in (yi, k):
            d = val.left_partial(var)
            if d and _visible(Derivation(W, {i: d}, None, check=False), user):
                bad.append(f"Q({W.names[i]}) involves {W.names[var]}")
    if bad:
        raise NormalFormError(f"pair {it}: " + "; ".join(bad))
