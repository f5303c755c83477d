"""Command line front end: ``gradedq <command> --in FILE``.

Exit status 0 on success, 1 when the mathematics fails (with a report),
2 on usage or parse errors.  ``--format structured`` prints one JSON object
per line; rationals are strings such as "-3/7".
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import warnings
from fractions import Fraction

from . import __version__
from .core import GradedPolynomial, GradingError
from .derivations import Derivation, FlowError, FlowLog
from .dsl import ManifoldSpec, ParseError, parse
from .koszul_tate import (KoszulTateError, advf_cohomology, assemble_tilde_delta,
                          complex_cohomology, kt_build, kt_verify, lift_derivation,
                          linearization)
from .linalg import LinearSolveError
from .normal_forms import NormalFormError, contracting_homotopy, split_at_point, trivialize
from .perturbation import PerturbationError, construct_q, intertwine
from .qmanifold import (QStructure, QStructureError, anchor, check_q, curvature,
                        negative_part, zero_locus_dga)

FORMAT_VERSION = 1
MATH_ERRORS = (KoszulTateError, NormalFormError, PerturbationError, QStructureError,
               FlowError, LinearSolveError)


class UsageError(Exception):
    pass


class MathFailure(Exception):
    """Raised after the report has been emitted, to set exit status 1."""


class Report:
    def __init__(self, command, fmt, out):
        self.command = command
        self.fmt = fmt
        self.out = out

    def emit(self, kind, text=None, **data):
        if self.fmt == "structured":
            rec = {"version": FORMAT_VERSION, "command": self.command, "kind": kind}
            rec.update({k: _jsonable(v) for k, v in data.items()})
            self.out.write(json.dumps(rec, sort_keys=True) + "\n")
        elif text is not None:
            stream = sys.stderr if kind == "error" and self.out is sys.stdout else self.out
            stream.write(text + "\n")


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (str, int, float, bool)) or v is None:
        return v
    return str(v)


def _field_json(X: Derivation):
    return {n: str(v) for n, v in X.items()}


# -- input helpers ---------------------------------------------------------------

def _spec(args) -> ManifoldSpec:
    if args.input in (None, "-"):
        text = sys.stdin.read()
    else:
        try:
            with open(args.input, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as e:
            raise UsageError(f"cannot read {args.input}: {e.strerror}") from None
    spec = parse(text)
    if args.jet is not None:
        spec.jet = args.jet
    if args.filt is not None:
        spec.filt = args.filt
    if not spec.variables:
        raise UsageError("the input declares no variables (manifold block missing)")
    return spec


def _need(spec, block):
    if block not in spec.fields:
        raise UsageError(f"the input has no {block} block")
    return spec.derivation(block)


def _need_ideal(spec):
    if not spec.ideal:
        raise UsageError("the input has no ideal block")
    return spec.ideal_on()


def _positive(spec):
    return [(n, d) for n, d in spec.variables if d > 0]


def _kt(spec, args):
    return kt_build(_need_ideal(spec), args.depth, spec.base_ctx())


def _emit_log(rep, log: FlowLog):
    rep.emit("flowlog", f"log: {len(log)} step(s)" + "".join(
        f"\n  [{s.stage}] " + (str(s.generator) if s.kind == "flow" else "linear change")
        for s in log), log=log.to_json())


# -- commands --------------------------------------------------------------------

def cmd_check(spec, args, rep):
    Q = _need(spec, "Q").to(spec.ctx)
    q = check_q(Q)
    if q.verified:
        rep.emit("result", "[Q,Q] = 0 at truncation: verified", status="verified")
        return
    var, res = q.witness
    rep.emit("result", f"[Q,Q] != 0: witness variable {var}, [Q,Q]({var}) = {res}",
             status="failed", witness=var, residual=str(res))
    raise MathFailure


def cmd_curvature(spec, args, rep):
    kap = curvature(_need(spec, "Q").to(spec.ctx))
    rep.emit("result", "\n".join(f"kappa[{n}] = {k}" for n, k in kap.items()) or "no degree -1 variables",
             curvature={n: str(k) for n, k in kap.items()})


def cmd_negative_part(spec, args, rep):
    q = negative_part(_need(spec, "Q").to(spec.ctx))
    rep.emit("result", f"Q- = {q.Q}", field=_field_json(q.Q),
             variables=[[n, d] for n, d in zip(q.ctx.names, q.ctx.degrees)])


def cmd_zero_locus(spec, args, rep):
    z = zero_locus_dga(_need(spec, "Q").to(spec.ctx))
    rep.emit("result", f"ideal: ({', '.join(map(str, z.ideal_generators))})\nQ+ = {z.Q_plus}",
             ideal=[str(g) for g in z.ideal_generators], Q_plus=_field_json(z.Q_plus))


def cmd_anchor(spec, args, rep):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        a = anchor(_need(spec, "Q").to(spec.ctx))
    for w in caught:
        rep.emit("warning", f"warning: {w.message}", message=str(w.message))
    rows = "\n".join(f"  {r}: " + " ".join(str(c) for c in line) for r, line in zip(a.rows, a.matrix))
    rep.emit("result", f"anchor ({', '.join(a.cols)}):\n{rows}\nrank = {a.rank}",
             rows=a.rows, cols=a.cols, matrix=a.matrix, rank=a.rank,
             at_zero_locus=a.at_zero_locus)


def cmd_trivialize(spec, args, rep):
    res = trivialize(_need(spec, "Q"), spec.ctx)
    rep.emit("result", f"final Q = {res.Q_final.Q}\nalpha = {res.alpha}",
             Q=_field_json(res.Q_final.Q), alpha=str(res.alpha))
    _emit_log(rep, res.log)


def cmd_homotopy(spec, args, rep):
    res = trivialize(_need(spec, "Q"), spec.ctx)
    samples = None
    if args.samples:
        basis = spec.ctx.monomials(pos_cap=2 * spec.filt + 2)
        rng = random.Random(args.seed)
        samples = [GradedPolynomial(spec.ctx, {e: Fraction(1)}, check=False)
                   for e in rng.sample(basis, min(args.samples, len(basis)))]
    h = contracting_homotopy(res.Q_final, res.alpha, samples)
    rep.emit("result", f"Qh + hQ = id on {h.checked} monomials: {'ok' if h.ok else 'FAILED'}",
             ok=h.ok, checked=h.checked, failures=[str(f) for f, _ in h.failures])
    if not h.ok:
        raise MathFailure


def cmd_split(spec, args, rep):
    res = split_at_point(_need(spec, "Q"), spec.ctx)
    pairs = ", ".join(f"({y}, {t})" for y, t in res.pairs)
    rep.emit("result", f"pairs: {pairs or 'none'}\nrank = {res.rank}\nR = {res.R}\nfinal Q = {res.Q_final}",
             pairs=res.pairs, rank=res.rank, R=_field_json(res.R), Q=_field_json(res.Q_final))
    _emit_log(rep, res.log)


def _emit_kt(rep, kt):
    levels = {k: v for k, v in kt.levels.items()}
    rep.emit("resolution", f"delta = {kt.delta}\ngenerators: " +
             "; ".join(f"degree {-k}: {', '.join(v)}" for k, v in levels.items()),
             delta=_field_json(kt.delta), levels=levels,
             variables=[[n, d] for n, d in zip(kt.ctx.names, kt.ctx.degrees)],
             minimal=False)


def cmd_kt_build(spec, args, rep):
    _emit_kt(rep, _kt(spec, args))


def _emit_cohomology(rep, report, label):
    for key, h in report.degrees.items():
        reps = [str(r) for r in h.representatives]
        extra = f" [{h.caveat}]" if h.caveat else ""
        name = f"H^{key}" if not isinstance(key, tuple) else (
            f"H^{key[1]}" + (f" (negative degree {key[0]})" if key[0] is not None else ""))
        text = f"dim {label}{name} = {h.dim} (kernel {h.kernel}, image {h.image}, {h.status}){extra}"
        if reps:
            text += "\n  representatives: " + "; ".join(reps)
        induced = getattr(h, "induced", None)
        data = dict(degree=key, dim=h.dim, kernel=h.kernel, image=h.image,
                    status=h.status, caveat=h.caveat, representatives=reps)
        if induced is not None:
            data["induced"] = [{n: str(p) for n, p in d.items()} for d in induced]
        rep.emit("cohomology", text, **data)


def cmd_kt_verify(spec, args, rep):
    kt = _kt(spec, args)
    _emit_kt(rep, kt)
    report = kt_verify(kt)
    _emit_cohomology(rep, report, "")
    bad = [d for d, h in report.degrees.items() if d < 0 and h.dim]
    if bad:
        rep.emit("result", f"nonzero cohomology in degrees {bad}", status="failed")
        raise MathFailure
    rep.emit("result", "resolution verified", status="verified")


def cmd_kt_cohomology(spec, args, rep):
    if args.degree is None:
        raise UsageError("kt-cohomology needs --degree")
    block = "delta" if "delta" in spec.fields else "Q" if "Q" in spec.fields else None
    if block is not None:
        D = spec.derivation(block).to(spec.ctx)
        if not check_q(D).verified:
            raise UsageError(f"the {block} block does not square to zero")
        target, ctx = D, spec.ctx
    else:
        kt = _kt(spec, args)
        target, ctx = kt, kt.ctx
    if args.vf:
        report = advf_cohomology(target, [(args.negdeg, args.degree)], ctx)
        _emit_cohomology(rep, report, "vector-field ")
    else:
        D = target.delta if not isinstance(target, Derivation) else target
        report = complex_cohomology(D, [args.degree], ctx)
        _emit_cohomology(rep, report, "")


def cmd_linearize(spec, args, rep):
    kt = _kt(spec, args)
    lin = linearization(kt)
    rep.emit("result", "dims: " + ", ".join(f"H^{-k} = {d}" for k, d in enumerate(lin["dims"])),
             dims=lin["dims"], slots=lin["slots"],
             jacobian=[[str(p) for p in row] for row in lin["maps"][0]])


def cmd_lift(spec, args, rep):
    kt = _kt(spec, args)
    base = kt.ctx.restrict(kt.base_names)
    qI = {n: p.restrict_to(base) for n, p in spec.fields.get("qI", {}).items()}
    res = lift_derivation(qI, kt)
    rep.emit("result", f"q = {res.q}", q=_field_json(res.q))


def cmd_assemble(spec, args, rep):
    kt = _kt(spec, args)
    q = assemble_tilde_delta(kt, _positive(spec))
    rep.emit("result", f"delta~ = {q.Q}", field=_field_json(q.Q),
             variables=[[n, d] for n, d in zip(q.ctx.names, q.ctx.degrees)])


def cmd_perturb(spec, args, rep):
    if "delta" in spec.fields:
        dt = QStructure(spec.ctx, spec.derivation("delta"))
        user = spec.ctx
    else:
        kt = _kt(spec, args)
        dt = assemble_tilde_delta(kt, _positive(spec))
        user = dt.ctx.with_truncation(spec.jet, spec.filt)
    K = user.restrict([n for n, d in zip(user.names, user.degrees) if d >= 0])
    Qp = {n: p.restrict_to(K.with_truncation(1 << 20, 1 << 20, None))
          for n, p in spec.fields.get("Qplus", {}).items()}
    q = construct_q(dt, Qp, user, order=args.order)
    rep.emit("result", f"Q = {q.Q}", Q=_field_json(q.Q),
             variables=[[n, d] for n, d in zip(user.names, user.degrees)])


def cmd_intertwine(spec, args, rep):
    Q = _need(spec, "Q")
    Qp = _need(spec, "Qprime")
    log = intertwine(Q, Qp, spec.ctx)
    rep.emit("result", f"{len(log)} gauge step(s)", steps=len(log))
    _emit_log(rep, log)


def cmd_replay(spec, args, rep):
    if not args.log:
        raise UsageError("replay needs --log FILE")
    try:
        with open(args.log, encoding="utf-8") as fh:
            data = None
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                if rec.get("kind") == "flowlog":
                    data = rec["log"]
                elif "steps" in rec and "variables" in rec:
                    data = rec
    except (OSError, ValueError) as e:
        raise UsageError(f"cannot read log {args.log}: {e}") from None
    if data is None:
        raise UsageError(f"no flow log found in {args.log}")
    log = FlowLog.from_json(data)
    Q = _need(spec, "Q")
    if not Q.ctx.same_chart(log.ctx):
        raise UsageError("the log and the input live on different charts")
    out = log.push_forward(Q.to(log.ctx)).to(spec.ctx)
    rep.emit("result", f"Q = {out}", Q=_field_json(out))


COMMANDS = {
    "check": cmd_check,
    "curvature": cmd_curvature,
    "negative-part": cmd_negative_part,
    "zero-locus": cmd_zero_locus,
    "anchor": cmd_anchor,
    "trivialize": cmd_trivialize,
    "homotopy": cmd_homotopy,
    "split": cmd_split,
    "kt-build": cmd_kt_build,
    "kt-verify": cmd_kt_verify,
    "kt-cohomology": cmd_kt_cohomology,
    "linearize": cmd_linearize,
    "lift": cmd_lift,
    "assemble": cmd_assemble,
    "perturb": cmd_perturb,
    "intertwine": cmd_intertwine,
    "replay": cmd_replay,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="gradedq",
                                 description="Exact computations with truncated Q-manifolds.")
    ap.add_argument("--version", action="version", version=f"gradedq {__version__}")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--in", dest="input", metavar="FILE", help="input file (default: stdin)")
    ap.add_argument("--degree", type=int, help="total degree for cohomology")
    ap.add_argument("--negdeg", type=int, help="negative degree for vector-field cohomology")
    ap.add_argument("--vf", action="store_true", help="cohomology of ad_delta on vector fields")
    ap.add_argument("--jet", type=int, help="override the jet order")
    ap.add_argument("--filt", type=int, help="override the filtration order")
    ap.add_argument("--depth", type=int, default=2, help="resolution depth (default 2)")
    ap.add_argument("--order", choices=["first", "last"], default="first",
                    help="pivot preference of linear solves")
    ap.add_argument("--samples", type=int, help="check this many random monomials only")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--log", help="flow log (JSON or structured output) for replay")
    ap.add_argument("--format", choices=["text", "structured"], default="text")
    return ap


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    rep = Report(args.command, args.format, out)
    try:
        spec = _spec(args)
        COMMANDS[args.command](spec, args, rep)
    except MathFailure:
        return 1
    except MATH_ERRORS as e:
        rep.emit("error", f"{args.command}: {e}", error=type(e).__name__, message=str(e))
        return 1
    except (ParseError, UsageError, GradingError) as e:
        rep.emit("error", f"{args.command}: {e}", error=type(e).__name__, message=str(e))
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
