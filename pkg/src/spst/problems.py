"""Benchmark objectives on SpSt(2n, 2k) and their test-data generators.

Three problems are provided, each as an :class:`ObjectiveBundle` carrying the
cost, the Euclidean gradient and the Euclidean Hessian action:

* nearest symplectic matrix, ``f(U) = 1/2 ||A - U||_F^2``
* symplectic eigenvalues via the Brockett-type cost ``f(X) = tr(X^T A X)``
* proper symplectic decomposition, ``f(U) = ||S - U U^+ S||_F^2``
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from . import manifold as mf
from .errors import BadGaussParams, NotPositiveDefinite, NotSymmetric, PairingFailure, ShapeMismatch
from .linalg import complex_qr_unitary, rng_from_seed, sym_eig_jacobi


class ObjectiveBundle:
    """Cost, Euclidean gradient and Euclidean Hessian action of one problem."""

    name = "objective"
    shape: tuple[int, int]

    def cost(self, U: np.ndarray) -> float:
        raise NotImplementedError

    def egrad(self, U: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def ehess(self, U: np.ndarray, D: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check(self, U: np.ndarray) -> None:
        if U.shape != self.shape:
            raise ShapeMismatch(f"{self.name}: expected shape {self.shape}, got {U.shape}")


class NearestProblem(ObjectiveBundle):
    name = "nearest"

    def __init__(self, A: np.ndarray):
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] % 2 or A.shape[1] % 2:
            raise ShapeMismatch(f"target must be 2n x 2k, got {A.shape}")
        self.A = A
        self.shape = A.shape

    def cost(self, U):
        self._check(U)
        return 0.5 * float(np.sum((self.A - U) ** 2))

    def egrad(self, U):
        self._check(U)
        return U - self.A

    def ehess(self, U, D):
        return D.copy()


class BrockettProblem(ObjectiveBundle):
    """``f(X) = tr(X^T A X)`` for SPD ``A``; its minimum over SpSt(2n, 2p) is
    twice the sum of the ``p`` smallest symplectic eigenvalues of ``A``."""

    name = "symplectic-eig"

    def __init__(self, A: np.ndarray, p: int):
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] % 2:
            raise ShapeMismatch(f"A must be 2n x 2n, got {A.shape}")
        if np.linalg.norm(A - A.T) > 1e-12 * np.linalg.norm(A):
            raise NotSymmetric("Brockett cost needs a symmetric A")
        self.A = 0.5 * (A + A.T)
        self.shape = (A.shape[0], 2 * p)

    def cost(self, X):
        self._check(X)
        return float(np.sum(X * (self.A @ X)))

    def egrad(self, X):
        self._check(X)
        return 2.0 * self.A @ X

    def ehess(self, X, D):
        return 2.0 * self.A @ D


class PsdProblem(ObjectiveBundle):
    """Proper symplectic decomposition of the snapshot matrix ``S``.

    ``S S^T`` is formed once at construction (``2n x 2n`` memory).
    """

    name = "psd"

    def __init__(self, S: np.ndarray, k: int):
        S = np.asarray(S, dtype=float)
        if S.ndim != 2 or S.shape[0] % 2:
            raise ShapeMismatch(f"snapshot matrix must have 2n rows, got {S.shape}")
        self.S = S
        self.SSt = S @ S.T
        self.shape = (S.shape[0], 2 * k)

    def _residual_projector(self, U):
        return np.eye(U.shape[0]) - U @ mf.sympl_inverse(U)

    def cost(self, U):
        self._check(U)
        R = self.S - U @ (mf.sympl_inverse(U) @ self.S)
        return float(np.sum(R * R))

    def egrad(self, U):
        self._check(U)
        P = self._residual_projector(U)
        M = self.SSt
        # -2 (P M J^T U J_{2k} - J M P^T U J_{2k})
        return -2.0 * (P @ (M @ mf.jtmul(mf.mulj(U))) - mf.jmul(M @ mf.mulj(P.T @ U)))

    def ehess(self, U, D):
        P = self._residual_projector(U)
        M = self.SSt
        # derivative of P in direction D
        dP = -D @ mf.sympl_inverse(U) - U @ mf.sympl_inverse(D)
        first = dP @ (M @ mf.jtmul(mf.mulj(U))) + P @ (M @ mf.jtmul(mf.mulj(D)))
        second = mf.jmul(M @ mf.mulj(dP.T @ U)) + mf.jmul(M @ mf.mulj(P.T @ D))
        return -2.0 * (first - second)


def nearest_problem(A: np.ndarray) -> NearestProblem:
    return NearestProblem(A)


def brockett_problem(A: np.ndarray, p: int) -> BrockettProblem:
    return BrockettProblem(A, p)


def psd_problem(S: np.ndarray, k: int) -> PsdProblem:
    return PsdProblem(S, k)


def gen_nearest_target(n: int, k: int, seed: int) -> np.ndarray:
    """Random ``2n x 2k`` target normalised to unit Frobenius norm."""
    A = rng_from_seed(seed).standard_normal((2 * n, 2 * k))
    return A / np.linalg.norm(A)


@dataclass
class WilliamsonInstance:
    n: int
    D: np.ndarray
    S: np.ndarray
    A: np.ndarray
    l: int
    c: float
    d: float
    K: np.ndarray = field(repr=False)
    L: np.ndarray = field(repr=False)


def gauss_transformation(n: int, l: int, c: float, d: float) -> np.ndarray:
    """Symplectic Gauss transformation ``L(l, c, d)`` of size ``2n x 2n``."""
    if not 2 <= l <= n:
        raise BadGaussParams(f"need 2 <= l <= n, got l={l}, n={n}")
    if c == 0:
        raise BadGaussParams("c must be nonzero")
    L = np.eye(2 * n)
    i, j = l - 2, l - 1  # 0-based rows of the two scaled entries
    L[i, i] = L[j, j] = c
    L[n + i, n + i] = L[n + j, n + j] = 1.0 / c
    L[i, n + j] = d
    L[j, n + i] = d
    return L


def gen_williamson(n: int, l: int = 3, c: float = 2.0, d: float = 1.0, seed: int = 0) -> WilliamsonInstance:
    """SPD matrix ``A = S diag(D, D) S^T`` with symplectic eigenvalues ``1, ..., n``.

    ``S = J K L(l, c, d)`` where ``K`` is the real form of a random unitary.
    """
    re, im = complex_qr_unitary(n, seed)
    K = np.block([[re, -im], [im, re]])
    L = gauss_transformation(n, l, c, d)
    S = mf.jmul(K @ L)
    Dvec = np.arange(1, n + 1, dtype=float)
    A = (S * np.concatenate([Dvec, Dvec])) @ S.T
    A = 0.5 * (A + A.T)
    return WilliamsonInstance(n=n, D=np.diag(Dvec), S=S, A=A, l=l, c=c, d=d, K=K, L=L)


def symplectic_eigs(B: np.ndarray, pair_tol: float = 1e-6) -> np.ndarray:
    """Symplectic eigenvalues of an SPD ``2p x 2p`` matrix, ascending.

    With ``R = B^{1/2}``, ``M = R J R`` is skew and ``M M^T`` has every squared
    symplectic eigenvalue twice; the pairs are matched and square-rooted.
    """
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1] or B.shape[0] % 2:
        raise ShapeMismatch(f"expected a 2p x 2p matrix, got {B.shape}")
    if np.linalg.norm(B - B.T) > 1e-10 * np.linalg.norm(B):
        raise NotSymmetric("symplectic_eigs needs a symmetric matrix")
    w, V = sym_eig_jacobi(0.5 * (B + B.T))
    if w[0] <= 0.0:
        raise NotPositiveDefinite(f"smallest eigenvalue {w[0]:.3e}")
    R = (V * np.sqrt(w)) @ V.T
    M = R @ mf.jmul(R)
    lam, _ = sym_eig_jacobi(0.5 * (M @ M.T + (M @ M.T).T))
    first, second = lam[0::2], lam[1::2]
    if np.any(np.abs(first - second) > pair_tol * np.maximum(np.abs(second), 1e-300)):
        raise PairingFailure("eigenvalues of M M^T do not come in pairs")
    return np.sqrt(0.5 * (first + second))


@dataclass
class PsdInstance:
    n: int
    m: int
    r: int
    T: np.ndarray
    C: np.ndarray
    S: np.ndarray


def gen_psd_instance(n: int, m: int, r: int, seed: int) -> PsdInstance:
    """Snapshot matrix ``S = T C`` of rank ``2r``, ``T`` on SpSt(2n, 2r), ``||C||_F = 1``."""
    if not 1 <= r <= n:
        raise ValueError(f"need 1 <= r <= n, got r={r}, n={n}")
    T = mf.random_point(n, r, seed)
    C = rng_from_seed(seed + 1).standard_normal((2 * r, 2 * m))
    C /= np.linalg.norm(C)
    return PsdInstance(n=n, m=m, r=r, T=T, C=C, S=T @ C)


def save_matrix(path: str | os.PathLike, M: np.ndarray) -> None:
    """Write ``M`` as ``rows cols`` then row-major values at 17 significant digits."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{M.shape[0]} {M.shape[1]}\n")
        for row in M:
            fh.write(" ".join(f"{x:.17g}" for x in row) + "\n")


def load_matrix(path: str | os.PathLike) -> np.ndarray:
    with open(path, encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: bad header")
        rows, cols = int(header[0]), int(header[1])
        values = np.array(fh.read().split(), dtype=float)
    if values.size != rows * cols:
        raise ValueError(f"{path}: expected {rows * cols} values, found {values.size}")
    return values.reshape(rows, cols)
