"""Moving on SpSt(2n, 2k): geodesics, Cayley retractions and vector transports.

All Cayley factors are applied through small LU solves (``4k x 4k``,
``8k x 8k`` or ``2k x 2k``) using the low-rank factors of the horizontal lift,
so no ``2n x 2n`` inverse is ever formed on the optimizer path.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import manifold as mf
from .errors import CayleyPoleHit, SingularMatrix
from .linalg import expm, lu_solve


class RetractionKind(enum.Enum):
    GEODESIC = "geodesic"
    CAYLEY_SIMPLE = "cayley_simple"
    CAYLEY = "cayley"  # two-factor, geodesic-like; the optimizer default


class TransportKind(enum.Enum):
    DIFF_RETRACTION = "diff_retraction"
    PROJECTION = "projection"


class _SmallLU:
    """LU factorisation of a small system, with pole detection."""

    def __init__(self, M: np.ndarray):
        if not np.all(np.isfinite(M)):
            raise CayleyPoleHit("non-finite Cayley system")
        lu, piv = sla.lu_factor(M, check_finite=False)
        if np.min(np.abs(np.diag(lu))) < 1e-14 * np.linalg.norm(M):
            raise CayleyPoleHit("singular Cayley system; shrink the step")
        self._f = (lu, piv)

    def solve(self, B: np.ndarray, trans: int = 0) -> np.ndarray:
        return sla.lu_solve(self._f, B, trans=trans, check_finite=False)


def geodesic(U: np.ndarray, D: np.ndarray, t: float, check: bool = True) -> np.ndarray:
    """Exact geodesic ``expm(t(W - W^T)) expm(t W^T) U`` with ``W`` the horizontal lift of ``D``."""
    if t == 0.0:
        return U.copy()
    W = mf.omega_bar(U, D, check=check).omega_bar
    return expm(t * (W - W.T)) @ (expm(t * W.T) @ U)


def cayley_simple(U: np.ndarray, D: np.ndarray, t: float, check: bool = True) -> np.ndarray:
    """Simple Cayley retraction ``cay(t/2 W) U`` with ``W = Y X^T``.

    Evaluated as ``U + t Y (I_{4k} - t/2 X^T Y)^{-1} X^T U``.
    """
    if t == 0.0:
        return U.copy()
    lift = mf.omega_bar(U, D, check=check)
    X, Y = lift.X, lift.Y
    m = X.shape[1]
    out = U + t * Y @ _SmallLU(np.eye(m) - 0.5 * t * (X.T @ Y)).solve(X.T @ U)
    if not np.all(np.isfinite(out)):
        raise CayleyPoleHit("non-finite retraction")
    return out


def cayley_lowrank_apply(X: np.ndarray, Y: np.ndarray, t: float, B: np.ndarray) -> np.ndarray:
    """``cay(t/2 X Y^T) B = B + t X (I - t/2 Y^T X)^{-1} Y^T B`` for thin ``X, Y``."""
    m = X.shape[1]
    return B + t * X @ _SmallLU(np.eye(m) - 0.5 * t * (Y.T @ X)).solve(Y.T @ B)


@dataclass
class CayleyFactors:
    """Intermediate quantities of one evaluation of the two-factor Cayley retraction.

    Kept so that the differentiated-retraction transport at the same
    ``(U, eta, t)`` can reuse them.
    """

    U: np.ndarray
    t: float
    lift: mf.HorizontalLift
    Xhat: np.ndarray
    Yhat: np.ndarray
    big: _SmallLU | None  # I_{8k} - t/2 Yhat^T Xhat
    theta: np.ndarray
    right: np.ndarray  # cay(t/2 W^T) U
    point: np.ndarray

    def inv_left(self, B: np.ndarray) -> np.ndarray:
        """``(I - t/2 (W - W^T))^{-1} B``."""
        if self.big is None:
            return B
        return B + 0.5 * self.t * self.Xhat @ self.big.solve(self.Yhat.T @ B)

    def cay_left(self, B: np.ndarray) -> np.ndarray:
        """``cay(t/2 (W - W^T)) B``."""
        if self.big is None:
            return B
        return B + self.t * self.Xhat @ self.big.solve(self.Yhat.T @ B)

    def inv_right(self, B: np.ndarray) -> np.ndarray:
        """``(I - t/2 W^T)^{-1} B`` with ``W^T = X Y^T``."""
        if self.t == 0.0:
            return B
        X, Y = self.lift.X, self.lift.Y
        small = np.eye(X.shape[1]) - 0.5 * self.t * (Y.T @ X)
        return B + 0.5 * self.t * X @ _SmallLU(small).solve(Y.T @ B)


def cayley_factors(U: np.ndarray, D: np.ndarray, t: float, check: bool = True) -> CayleyFactors:
    """Evaluate the two-factor Cayley retraction and keep its factors."""
    lift = mf.omega_bar(U, D, check=check)
    Xhat, Yhat = lift.Xhat, lift.Yhat
    k2 = U.shape[1]
    if t == 0.0:
        return CayleyFactors(U, 0.0, lift, Xhat, Yhat, None, np.eye(k2), U.copy(), U.copy())
    A, H = lift.A, lift.H
    theta = np.eye(k2) - 0.5 * t * A + 0.25 * t * t * (mf.sympl_inverse(H) @ H)
    # right factor: -U + (tH + 2U) theta^{-1}
    right = -U + _SmallLU(theta).solve((t * H + 2.0 * U).T, trans=1).T
    big = _SmallLU(np.eye(Xhat.shape[1]) - 0.5 * t * (Yhat.T @ Xhat))
    point = right + t * Xhat @ big.solve(Yhat.T @ right)
    if not np.all(np.isfinite(point)):
        raise CayleyPoleHit("non-finite retraction")
    return CayleyFactors(U, t, lift, Xhat, Yhat, big, theta, right, point)


def cayley_retraction(U: np.ndarray, D: np.ndarray, t: float, check: bool = True) -> np.ndarray:
    """Two-factor Cayley retraction ``cay(t/2 (W - W^T)) cay(t/2 W^T) U``."""
    return cayley_factors(U, D, t, check=check).point


def retract(kind: RetractionKind, U: np.ndarray, D: np.ndarray, t: float = 1.0,
            check: bool = True) -> np.ndarray:
    if kind is RetractionKind.CAYLEY:
        return cayley_retraction(U, D, t, check=check)
    if kind is RetractionKind.CAYLEY_SIMPLE:
        return cayley_simple(U, D, t, check=check)
    return geodesic(U, D, t, check=check)


def diff_retraction(U: np.ndarray, eta: np.ndarray, xi: np.ndarray, t: float,
                    factors: CayleyFactors | None = None, check: bool = True) -> np.ndarray:
    """Differential of the two-factor Cayley retraction, ``D R_U(t eta)[xi]``.

    With ``Z1 = t/2 (W - W^T)``, ``Z2 = t/2 W^T`` for the lift ``W`` of ``eta``
    and ``V`` the lift of ``xi``::

        (I-Z1)^-1 (V - V^T) (I-Z1)^-1 cay(Z2) U + cay(Z1) (I-Z2)^-1 V^T (I-Z2)^-1 U

    Pass ``factors`` from :func:`cayley_factors` at the same ``(U, eta, t)``
    to skip recomputing the retraction.
    """
    if factors is None:
        factors = cayley_factors(U, eta, t, check=check)
    elif check and (factors.t != t or factors.U is not U and not np.array_equal(factors.U, U)):
        raise ValueError("factors were computed for a different (U, t)")
    lv = mf.omega_bar(U, xi, check=check)
    term1 = factors.inv_left(lv.apply_skew(factors.inv_left(factors.right)))
    term2 = factors.cay_left(factors.inv_right(lv.apply_t(factors.inv_right(U))))
    return term1 + term2


def transport_proj(target: np.ndarray, xi: np.ndarray, check: bool = True) -> np.ndarray:
    """Projection transport: project the ambient array ``xi`` onto ``T_target``."""
    return mf.proj_spst(target, xi, check=check)


def isometric_transport(U: np.ndarray, eta: np.ndarray, xi: np.ndarray, t: float,
                        kind: TransportKind = TransportKind.DIFF_RETRACTION,
                        factors: CayleyFactors | None = None,
                        check: bool = True) -> np.ndarray:
    """Transport ``xi`` from ``U`` to ``R_U(t eta)`` and rescale to preserve its norm.

    A zero (below 1e-15 in norm) input returns the zero tangent at the target.
    """
    if factors is None:
        factors = cayley_factors(U, eta, t, check=check)
    target = factors.point
    size = mf.norm(U, xi, check=False)
    if size < 1e-15:
        return np.zeros_like(xi)
    if kind is TransportKind.DIFF_RETRACTION:
        out = diff_retraction(U, eta, xi, t, factors=factors, check=check)
    else:
        out = transport_proj(target, xi, check=False)
    out_size = mf.norm(target, out, check=False)
    if out_size < 1e-15:
        return np.zeros_like(xi)
    return out * (size / out_size)


def cayley_dense(Z: np.ndarray) -> np.ndarray:
    """Dense Cayley transform ``(I + Z)(I - Z)^{-1}``; reference path for tests."""
    ident = np.eye(Z.shape[0])
    try:
        return lu_solve((ident - Z).T, (ident + Z).T).T
    except SingularMatrix as exc:
        raise CayleyPoleHit(str(exc)) from None


def cayley_retraction_dense(U: np.ndarray, D: np.ndarray, t: float) -> np.ndarray:
    """Dense two-factor Cayley retraction; reference path for tests."""
    W = mf.omega_bar_dense(U, D)
    return cayley_dense(0.5 * t * (W - W.T)) @ (cayley_dense(0.5 * t * W.T) @ U)


def cayley_simple_dense(U: np.ndarray, D: np.ndarray, t: float) -> np.ndarray:
    """Dense simple Cayley retraction; reference path for tests."""
    return cayley_dense(0.5 * t * mf.omega_bar_dense(U, D)) @ U
