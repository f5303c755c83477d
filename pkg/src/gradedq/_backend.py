"""Select the compiled kernels when available.

Set ``GRADEDQ_PURE_PYTHON=1`` to force the fallback.
"""

import os

BACKEND = "python"

if os.environ.get("GRADEDQ_PURE_PYTHON", "") not in ("", "0"):
    from ._pykernels import left_partial, mul_terms, rref_int
else:
    try:
        from ._kernels import left_partial, mul_terms, rref_int

        BACKEND = "compiled"
    except ImportError:
        from ._pykernels import left_partial, mul_terms, rref_int

__all__ = ["BACKEND", "left_partial", "mul_terms", "rref_int"]
