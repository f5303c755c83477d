"""Exact computations with truncated Z-graded Q-manifolds."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .core import (DegreeReport, GradedContext, GradedPolynomial, GradingError,
                   canonicalize, degree_report, homogeneous_component, multiply)
from .derivations import (Automorphism, Derivation, FlowError, FlowLog, FlowStep,
                          LinearStep, apply, commutator, compose_flows, decompose,
                          exp_flow, push_forward)
from .dsl import ManifoldSpec, ParseError, format_spec, parse, parse_polynomial
from .koszul_tate import (CohomologyReport, KoszulTateError, KTResolution,
                          advf_cohomology, assemble_tilde_delta, complex_cohomology,
                          kt_build, kt_verify, lift_derivation, linearization)
from .normal_forms import (NormalFormError, contracting_homotopy, homotopy_alpha,
                           i_kappa, split_at_point, straighten, trivialize)
from .perturbation import PerturbationError, construct_q, intertwine
from .qmanifold import (JetIdeal, QStructure, QStructureError, anchor, check_q,
                        curvature, negative_part, zero_locus_dga)
