"""Second-order cone relaxations of uniform and structured nonconvex QCQPs.

Builds the relaxations, certifies when they are exact (hidden convexity),
recovers exact or provably approximate solutions, and computes Chebyshev
centers of ball intersections with approximation certificates.
"""

from .chebyshev import (
    ChebyshevResult,
    beck_center,
    chebyshev_certified,
    gamma_balls,
    gamma_upper,
)
from .conesolver import (
    ConeProgram,
    DualPoint,
    SocBlock,
    SolveOptions,
    SolverResult,
    certify_strong_duality,
    dual_value,
    solve,
)
from .errors import SocqpError
from .linalg import SubspaceBasis, SymMatrix
from .model import (
    BallIntersection,
    Bound,
    QcqpInstance,
    UqInstance,
    eval_f,
    find_interior_point,
    ilp_to_uq,
    is_feasible,
    normalize_uq,
    translate_origin,
    uq_as_qcqp,
    worst_violation,
)
from .recover import (
    ApproxCertificate,
    ApproxTrace,
    TightenTrace,
    approx_uq,
    gamma_uq,
    tau_bar,
    tighten_qcqp,
    tighten_uq,
)
from .reformulate import (
    CertificateReport,
    ReformulationMeta,
    build_cr,
    build_cr2,
    build_etrs,
    build_socp_indefinite,
    build_socp_uq,
    build_trs,
    build_ttrs,
    build_vtrs,
    build_wd,
    check_as3,
    check_condition_c,
    check_condition_cc,
    lift_set_onesided,
    lift_set_twosided,
    split_indefinite,
)

__version__ = "0.1.0"

__all__ = [
    "ApproxCertificate",
    "ApproxTrace",
    "BallIntersection",
    "Bound",
    "CertificateReport",
    "ChebyshevResult",
    "ConeProgram",
    "DualPoint",
    "QcqpInstance",
    "ReformulationMeta",
    "SocBlock",
    "SocqpError",
    "SolveOptions",
    "SolverResult",
    "SubspaceBasis",
    "SymMatrix",
    "TightenTrace",
    "UqInstance",
    "approx_uq",
    "beck_center",
    "build_cr",
    "build_cr2",
    "build_etrs",
    "build_socp_indefinite",
    "build_socp_uq",
    "build_trs",
    "build_ttrs",
    "build_vtrs",
    "build_wd",
    "certify_strong_duality",
    "chebyshev_certified",
    "check_as3",
    "check_condition_c",
    "check_condition_cc",
    "dual_value",
    "eval_f",
    "find_interior_point",
    "gamma_balls",
    "gamma_uq",
    "gamma_upper",
    "ilp_to_uq",
    "is_feasible",
    "lift_set_onesided",
    "lift_set_twosided",
    "normalize_uq",
    "solve",
    "split_indefinite",
    "tau_bar",
    "tighten_qcqp",
    "tighten_uq",
    "translate_origin",
    "uq_as_qcqp",
    "worst_violation",
]
