"""Riemannian optimization on the symplectic Stiefel manifold SpSt(2n, 2k)."""

from .manifold import check_point, metric, proj_spst, random_point, random_tangent, sympl_inverse
from .optimize import RunReport, StoppingRule, Termination, solve_rcg, solve_rsd, solve_rtr
from .retraction import cayley_retraction, cayley_simple, geodesic

__version__ = "0.1.0"

__all__ = [
    "check_point", "metric", "proj_spst", "random_point", "random_tangent", "sympl_inverse",
    "RunReport", "StoppingRule", "Termination", "solve_rcg", "solve_rsd", "solve_rtr",
    "cayley_retraction", "cayley_simple", "geodesic",
]
