"""Geometry of the symplectic group Sp(2n) and the symplectic Stiefel manifold.

A point of SpSt(2n, 2k) is a real ``2n x 2k`` array ``U`` with
``U^T J_{2n} U = J_{2k}``, equivalently ``U^+ U = I`` with the symplectic
inverse ``U^+ = J_{2k}^T U^T J_{2n}``. Tangent vectors are arrays of the same
shape. The metric is the one induced by the right-invariant metric
``g_M(X1, X2) = 1/2 tr((X1 M^+)^T X2 M^+)`` on Sp(2n).

Functions take plain numpy arrays. Public entry points validate their inputs
unless called with ``check=False``; the optimizers use that fast path and
only certify feasibility at the start and end of a run.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InfeasibleBase, NotTangent, OddDimension, ShapeMismatch
from .linalg import cholesky_solve, rng_from_seed

TOL_FEAS = 1e-8
TOL_TAN = 1e-8


def jmat(m: int) -> np.ndarray:
    """Return ``J_{2m} = [[0, I_m], [-I_m, 0]]``."""
    J = np.zeros((2 * m, 2 * m))
    J[:m, m:] = np.eye(m)
    J[m:, :m] = -np.eye(m)
    return J


def jmul(W: np.ndarray) -> np.ndarray:
    """``J @ W`` without forming J."""
    m = W.shape[0] // 2
    return np.concatenate([W[m:], -W[:m]], axis=0)


def jtmul(W: np.ndarray) -> np.ndarray:
    """``J^T @ W`` without forming J."""
    m = W.shape[0] // 2
    return np.concatenate([-W[m:], W[:m]], axis=0)


def mulj(W: np.ndarray) -> np.ndarray:
    """``W @ J`` without forming J."""
    m = W.shape[1] // 2
    return np.concatenate([-W[:, m:], W[:, :m]], axis=1)


def muljt(W: np.ndarray) -> np.ndarray:
    """``W @ J^T`` without forming J."""
    m = W.shape[1] // 2
    return np.concatenate([W[:, m:], -W[:, :m]], axis=1)


def selector(n: int, k: int) -> np.ndarray:
    """The block selector ``E`` with ``M E = [M[:, :k] | M[:, n:n+k]]``."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    E = np.zeros((2 * n, 2 * k))
    E[:k, :k] = np.eye(k)
    E[n:n + k, k:] = np.eye(k)
    return E


def sympl_inverse(W: np.ndarray) -> np.ndarray:
    """Symplectic inverse ``W^+ = J_{2l}^T W^T J_{2m}`` of a ``2m x 2l`` matrix."""
    if W.ndim != 2 or W.shape[0] % 2 or W.shape[1] % 2:
        raise OddDimension(f"symplectic inverse needs even dimensions, got {W.shape}")
    return jtmul(mulj(W.T))


def _dims(U: np.ndarray) -> tuple[int, int]:
    if U.ndim != 2 or U.shape[0] % 2 or U.shape[1] % 2 or U.shape[1] > U.shape[0]:
        raise ShapeMismatch(f"expected a 2n x 2k array with k <= n, got {U.shape}")
    return U.shape[0] // 2, U.shape[1] // 2


def check_point(U: np.ndarray) -> float:
    """Feasibility ``||U^+ U - I_{2k}||_F``."""
    _dims(U)
    return float(np.linalg.norm(sympl_inverse(U) @ U - np.eye(U.shape[1])))


def _certify(U: np.ndarray, tol: float = TOL_FEAS) -> None:
    feas = check_point(U)
    if not feas <= tol:
        raise InfeasibleBase(f"point is off the manifold: ||U^+U - I||_F = {feas:.3e}")


def _gram_solve(U: np.ndarray, B: np.ndarray) -> np.ndarray:
    """``(U^T U)^{-1} B``."""
    return cholesky_solve(U.T @ U, B)


def metric(U: np.ndarray, X1: np.ndarray, X2: np.ndarray, check: bool = True) -> float:
    """Riemannian metric ``tr(X1^T (I - 1/2 J^T U G^-1 U^T J) X2 G^-1)``, ``G = U^T U``."""
    if check:
        _certify(U)
        if X1.shape != U.shape or X2.shape != U.shape:
            raise ShapeMismatch("tangent vectors must have the shape of the base point")
    G = U.T @ U
    QX2 = X2 - 0.5 * jtmul(U @ cholesky_solve(G, U.T @ jmul(X2)))
    return float(np.sum(X1 * cholesky_solve(G, QX2.T).T))


def norm(U: np.ndarray, X: np.ndarray, check: bool = True) -> float:
    return float(np.sqrt(max(metric(U, X, X, check=check), 0.0)))


def sp_metric(M: np.ndarray, X1: np.ndarray, X2: np.ndarray) -> float:
    """Right-invariant metric on Sp(2n): ``1/2 tr((X1 M^+)^T X2 M^+)``."""
    Mp = sympl_inverse(M)
    return 0.5 * float(np.sum((X1 @ Mp) * (X2 @ Mp)))


def proj_sp(M: np.ndarray, V: np.ndarray, check: bool = True) -> np.ndarray:
    """Orthogonal projection onto ``T_M Sp(2n)``: ``1/2 V - 1/2 M V^+ M``."""
    if check:
        if M.shape[0] != M.shape[1]:
            raise ShapeMismatch("proj_sp needs a square base point")
        _certify(M)
    return 0.5 * V - 0.5 * M @ sympl_inverse(V) @ M


def proj_spst(U: np.ndarray, V: np.ndarray, check: bool = True) -> np.ndarray:
    """Orthogonal projection onto ``T_U SpSt(2n, 2k)`` with respect to the metric."""
    if check:
        _certify(U)
        if V.shape != U.shape:
            raise ShapeMismatch(f"V has shape {V.shape}, base point {U.shape}")
    S = sympl_inverse(V) @ U + sympl_inverse(U) @ V
    # (U^T)^+ ((U^T U)^+)^{-1} = J^T U (U^T U)^{-1} J_{2k}
    return V - 0.5 * jtmul(U @ _gram_solve(U, jmul(S)))


def tangent_residual(U: np.ndarray, D: np.ndarray) -> float:
    """``||P_U(D) - D||_F``."""
    return float(np.linalg.norm(proj_spst(U, D, check=False) - D))


def _certify_tangent(U: np.ndarray, D: np.ndarray) -> None:
    if D.shape != U.shape:
        raise ShapeMismatch(f"tangent has shape {D.shape}, base point {U.shape}")
    res = tangent_residual(U, D)
    if not res <= TOL_TAN * (1.0 + np.linalg.norm(D)):
        raise NotTangent(f"vector is not tangent: ||P(D) - D||_F = {res:.3e}")


def egrad_to_rgrad(U: np.ndarray, G: np.ndarray, check: bool = True) -> np.ndarray:
    """Riemannian gradient ``G U^T U + J U G^T J U`` from the Euclidean gradient ``G``."""
    if check:
        _certify(U)
        if G.shape != U.shape:
            raise ShapeMismatch(f"gradient has shape {G.shape}, base point {U.shape}")
    return G @ (U.T @ U) + jmul(U @ (G.T @ jmul(U)))


@dataclass(frozen=True)
class HorizontalLift:
    """Horizontal lift of a tangent vector ``D`` at ``U``.

    ``omega_bar = Y X^T`` is the unique Hamiltonian matrix in the horizontal
    space with ``omega_bar @ U = D``. ``A`` and ``H`` give the decomposition
    ``delta_bar = U A + H`` with ``U^+ H = 0`` that the low-rank factors are
    built from.
    """

    U: np.ndarray
    delta: np.ndarray
    A: np.ndarray
    H: np.ndarray
    delta_bar: np.ndarray
    X: np.ndarray
    Y: np.ndarray

    @cached_property
    def omega_bar(self) -> np.ndarray:
        return self.Y @ self.X.T

    def apply(self, W: np.ndarray) -> np.ndarray:
        """``omega_bar @ W``."""
        return self.Y @ (self.X.T @ W)

    def apply_t(self, W: np.ndarray) -> np.ndarray:
        """``omega_bar.T @ W``."""
        return self.X @ (self.Y.T @ W)

    def apply_skew(self, W: np.ndarray) -> np.ndarray:
        """``(omega_bar - omega_bar.T) @ W``."""
        return self.apply(W) - self.apply_t(W)

    @property
    def Xhat(self) -> np.ndarray:
        return np.hstack([self.Y, -self.X])

    @property
    def Yhat(self) -> np.ndarray:
        return np.hstack([self.X, self.Y])


def omega_bar(U: np.ndarray, D: np.ndarray, check: bool = True) -> HorizontalLift:
    """Horizontal lift of the tangent vector ``D`` at ``U`` in factored form."""
    if check:
        _certify(U)
        _certify_tangent(U, D)
    G = U.T @ U
    UtD = U.T @ D
    GiDtU = cholesky_solve(G, UtD.T)  # G^-1 D^T U
    # A = J U^T D G^-1 J + G^-1 D^T U - G^-1 D^T J^T U G^-1 J
    A = (
        mulj(jmul(GiDtU.T))
        + GiDtU
        - mulj(cholesky_solve(G, cholesky_solve(G, D.T @ jtmul(U)).T).T)
    )
    Up = sympl_inverse(U)
    W = mulj(cholesky_solve(G, jmul(D).T).T)  # J D G^-1 J_{2k}
    H = W - U @ (Up @ W)
    Dbar = U @ A + H
    # (I - 1/2 U U^+) Dbar and its transpose counterpart
    X = np.hstack([Dbar - 0.5 * U @ (Up @ Dbar), -U])
    Dbar_pt = jtmul(mulj(Dbar))  # (Dbar^+)^T = J^T Dbar J_{2k}
    Y = np.hstack([jtmul(mulj(U)), Dbar_pt - 0.5 * Up.T @ (U.T @ Dbar_pt)])
    return HorizontalLift(U=U, delta=D, A=A, H=H, delta_bar=Dbar, X=X, Y=Y)


def omega_bar_dense(U: np.ndarray, D: np.ndarray) -> np.ndarray:
    """Dense closed-form horizontal lift; reference path for tests."""
    n2 = U.shape[0]
    Gi = np.linalg.inv(U.T @ U)
    J = jmat(n2 // 2)
    Q = np.eye(n2) - J.T @ U @ Gi @ U.T @ J
    return D @ Gi @ U.T + J @ U @ Gi @ D.T @ Q @ J


def horizontal_projector(U: np.ndarray) -> np.ndarray:
    """``P = J^T U U^+ J`` characterising the horizontal Hamiltonian matrices at U."""
    return jtmul(mulj(U @ sympl_inverse(U)))


def random_hamiltonian(m: int, rng: np.random.Generator) -> np.ndarray:
    """A random ``2m x 2m`` Hamiltonian matrix ``J S`` with ``S`` symmetric."""
    S = rng.standard_normal((2 * m, 2 * m))
    return jmul(0.5 * (S + S.T))


def random_point(n: int, k: int, seed: int) -> np.ndarray:
    """Seeded random point of SpSt(2n, 2k).

    Obtained by a simple Cayley step of length 0.5 from ``E`` along a
    unit-norm tangent ``Omega E`` with ``Omega`` random Hamiltonian.
    """
    from .retraction import cayley_simple

    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    rng = rng_from_seed(seed)
    E = selector(n, k)
    D = random_hamiltonian(n, rng) @ E
    D /= np.linalg.norm(D)
    return cayley_simple(E, D, 0.5, check=False)


def random_tangent(U: np.ndarray, seed: int | np.random.Generator, check: bool = True) -> np.ndarray:
    """Seeded random tangent vector at ``U`` with unit Frobenius norm."""
    if check:
        _certify(U)
    rng = seed if isinstance(seed, np.random.Generator) else rng_from_seed(seed)
    D = proj_spst(U, rng.standard_normal(U.shape), check=False)
    D = proj_spst(U, D, check=False)
    return D / np.linalg.norm(D)


def random_normal(U: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """A random normal vector ``J U T (U^T U)`` with ``T`` skew."""
    T = rng.standard_normal((U.shape[1], U.shape[1]))
    return jmul(U @ (T - T.T) @ (U.T @ U))
