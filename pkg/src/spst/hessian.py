"""Riemannian Hessians on SpSt(2n, 2k) under the right-invariant metric.

The exact Hessian is assembled from the derivative of the gradient formula
along ``D`` plus the Christoffel form of the metric,
``Hess f(U)[D] = D(grad f)(U)[D] + Gamma(grad f(U), D)``. The Christoffel form
for equal arguments is read off the geodesic equation; mixed arguments go
through the polarization identity.
"""

from __future__ import annotations

import enum

import numpy as np

from . import manifold as mf
from .problems import ObjectiveBundle
from .retraction import geodesic


class HessianKind(enum.Enum):
    EXACT = "exact"  # true Riemannian Hessian (R-TR1)
    PROJECTED = "projected"  # projected Euclidean derivative of the gradient (R-TR2)


def _christoffel_unit(U: np.ndarray, D: np.ndarray) -> np.ndarray:
    lift = mf.omega_bar(U, D, check=False)
    WtU = lift.apply_t(U)
    return -lift.apply_skew(D + WtU) - lift.apply_t(WtU)


def christoffel_same(U: np.ndarray, D: np.ndarray, check: bool = True) -> np.ndarray:
    """``Gamma(D, D) = -(W - W^T)(D + W^T U) - (W^T)^2 U`` for the lift ``W`` of ``D``.

    Evaluated on ``D / ||D||_F`` and rescaled by ``||D||_F^2``.
    """
    if check:
        mf._certify(U)
        mf._certify_tangent(U, D)
    s = np.linalg.norm(D)
    if s == 0.0:
        return np.zeros_like(D)
    return (s * s) * _christoffel_unit(U, D / s)


def christoffel(U: np.ndarray, D: np.ndarray, E: np.ndarray, check: bool = True) -> np.ndarray:
    """Symmetric bilinear Christoffel form by polarization of unit-normalised inputs."""
    if check:
        mf._certify(U)
        mf._certify_tangent(U, D)
        mf._certify_tangent(U, E)
    a, b = np.linalg.norm(D), np.linalg.norm(E)
    if a == 0.0 or b == 0.0:
        return np.zeros_like(D)
    d, e = D / a, E / b
    plus = christoffel_same(U, d + e, check=False)
    minus = christoffel_same(U, d - e, check=False)
    return (a * b) * 0.25 * (plus - minus)


def dgrad(U: np.ndarray, G: np.ndarray, HD: np.ndarray, D: np.ndarray) -> np.ndarray:
    """Directional derivative of ``grad f(U) = G U^T U + J U G^T J U`` along ``D``.

    ``G`` is the Euclidean gradient at ``U`` and ``HD`` the Euclidean Hessian
    applied to ``D``.
    """
    JU = mf.jmul(U)
    return (
        HD @ (U.T @ U)
        + G @ (D.T @ U + U.T @ D)
        + mf.jmul(D @ (G.T @ JU))
        + mf.jmul(U @ (HD.T @ JU))
        + mf.jmul(U @ (G.T @ mf.jmul(D)))
    )


class HessianOperator:
    """Hessian action at a fixed base point, with the gradient cached.

    ``kind`` selects the exact Hessian or the projected approximation.
    """

    def __init__(self, prob: ObjectiveBundle, U: np.ndarray,
                 kind: HessianKind = HessianKind.EXACT, egrad: np.ndarray | None = None):
        self.prob = prob
        self.U = U
        self.kind = kind
        self.egrad = prob.egrad(U) if egrad is None else egrad
        self.rgrad = mf.proj_spst(U, mf.egrad_to_rgrad(U, self.egrad, check=False), check=False)

    def dgrad(self, D: np.ndarray) -> np.ndarray:
        return dgrad(self.U, self.egrad, self.prob.ehess(self.U, D), D)

    def __call__(self, D: np.ndarray) -> np.ndarray:
        out = self.dgrad(D)
        if self.kind is HessianKind.EXACT:
            out = out + christoffel(self.U, self.rgrad, D, check=False)
        return mf.proj_spst(self.U, out, check=False)


def rhess_exact(U: np.ndarray, prob: ObjectiveBundle, D: np.ndarray, check: bool = True) -> np.ndarray:
    if check:
        mf._certify(U)
        mf._certify_tangent(U, D)
    return HessianOperator(prob, U, HessianKind.EXACT)(D)


def rhess_projected(U: np.ndarray, prob: ObjectiveBundle, D: np.ndarray, check: bool = True) -> np.ndarray:
    if check:
        mf._certify(U)
        mf._certify_tangent(U, D)
    return HessianOperator(prob, U, HessianKind.PROJECTED)(D)


def rgrad_of(prob: ObjectiveBundle, U: np.ndarray) -> np.ndarray:
    return mf.egrad_to_rgrad(U, prob.egrad(U), check=False)


def fd_hess_oracle(U: np.ndarray, prob: ObjectiveBundle, D: np.ndarray, h: float = 1e-5,
                   project: bool = True) -> np.ndarray:
    """Central difference of ``t -> grad f(gamma(t))`` along the exact geodesic.

    Approximates ``D(grad f)(U)[D]`` to ``O(h^2)``; projected onto ``T_U`` by
    default. The Christoffel term is not included.
    """
    if not 1e-7 <= h <= 1e-3:
        raise ValueError(f"step h={h} outside [1e-7, 1e-3]")
    if not np.any(D):
        return np.zeros_like(D)
    plus = rgrad_of(prob, geodesic(U, D, h, check=False))
    minus = rgrad_of(prob, geodesic(U, D, -h, check=False))
    out = (plus - minus) / (2.0 * h)
    return mf.proj_spst(U, out, check=False) if project else out
