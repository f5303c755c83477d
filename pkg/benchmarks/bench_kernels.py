"""Compare the compiled kernels with their pure-Python twins.

    python benchmarks/bench_kernels.py [--repeat 5]

Kernel timings call both modules directly on the same inputs.  The pipeline
timings run a Tate cohomology computation and a perturbation in a subprocess,
once per backend (GRADEDQ_PURE_PYTHON selects the fallback).
"""

import argparse
import json
import os
import random
import subprocess
import sys
import timeit
from fractions import Fraction

from gradedq import GradedContext, GradedPolynomial
from gradedq import _pykernels as pure

try:
    from gradedq import _kernels as compiled
except ImportError:
    compiled = None


def random_poly(rng, ctx, nterms):
    basis = ctx.monomials()
    picks = rng.sample(basis, min(nterms, len(basis)))
    return GradedPolynomial(ctx, {e: Fraction(rng.randint(-9, 9) or 1, rng.randint(1, 4))
                                  for e in picks}, check=False)


def kernel_cases(rng):
    c = GradedContext([("x", 0), ("y", 0), ("z", 0), ("t", 1), ("s", 1),
                       ("e", -1), ("f", -1), ("w", -2)], 5, 5)
    pairs = [(random_poly(rng, c, 40).terms, random_poly(rng, c, 40).terms) for _ in range(20)]
    margs = (c.odd, c.jetw, c.negw, *c.bounds())
    polys = [random_poly(rng, c, 200).terms for _ in range(20)]
    rows = [{j: rng.randint(-5, 5) for j in rng.sample(range(120), 12)} for _ in range(150)]

    def mul(mod):
        for a, b in pairs:
            mod.mul_terms(a, b, *margs)

    def partial(mod):
        for f in polys:
            for k in range(c.nvars):
                mod.left_partial(f, k, c.odd)

    def rref(mod):
        mod.rref_int([dict(r) for r in rows], 120)

    return {"mul_terms": mul, "left_partial": partial, "rref_int": rref}


PIPELINE = r"""
import json, time
from gradedq import GradedContext, kt_build, advf_cohomology, assemble_tilde_delta
from gradedq import construct_q, zero_locus_dga
from gradedq._backend import BACKEND
b = GradedContext([("x", 0), ("y", 0)], 6, 1)
x, y = b.var("x"), b.var("y")
t0 = time.perf_counter()
kt = kt_build([x * x, x * y], 4)
advf_cohomology(kt, [(None, 0), (None, 1), (None, -1)], stability=False)
t1 = time.perf_counter()
dt = assemble_tilde_delta(kt_build([x * x, x * y], 3), [("t1", 1), ("t2", 1)])
K = zero_locus_dga(dt).ctx
construct_q(dt, {"x": K.var("t1") * K.var("x"), "y": K.var("t2") * K.var("y") * K.var("y")},
            ctx=dt.ctx.with_truncation(4, 3))
t2 = time.perf_counter()
print(json.dumps({"backend": BACKEND, "cohomology": t1 - t0, "perturbation": t2 - t1}))
"""


def pipeline(pure_python):
    env = dict(os.environ, GRADEDQ_PURE_PYTHON="1" if pure_python else "0")
    out = subprocess.run([sys.executable, "-c", PIPELINE], env=env, check=True,
                         capture_output=True, text=True).stdout
    return json.loads(out.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--no-pipeline", action="store_true")
    args = ap.parse_args(argv)
    if compiled is None:
        print("compiled kernels not built; only the pure-Python timings are shown")
    cases = kernel_cases(random.Random(args.seed))
    print(f"{'kernel':<14}{'pure (ms)':>12}{'compiled (ms)':>15}{'speedup':>10}")
    for name, fn in cases.items():
        tp = min(timeit.repeat(lambda: fn(pure), number=1, repeat=args.repeat)) * 1e3
        if compiled is None:
            print(f"{name:<14}{tp:>12.2f}{'-':>15}{'-':>10}")
            continue
        tc = min(timeit.repeat(lambda: fn(compiled), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<14}{tp:>12.2f}{tc:>15.2f}{tp / tc:>9.1f}x")
    if args.no_pipeline:
        return
    p = pipeline(True)
    c = pipeline(False)
    print(f"\n{'pipeline':<14}{'pure (s)':>12}{c['backend'] + ' (s)':>15}{'speedup':>10}")
    for k in ("cohomology", "perturbation"):
        print(f"{k:<14}{p[k]:>12.2f}{c[k]:>15.2f}{p[k] / c[k]:>9.1f}x")


if __name__ == "__main__":
    main()
