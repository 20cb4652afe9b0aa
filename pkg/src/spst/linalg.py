"""Dense linear algebra kernels used throughout the package.

LU and Cholesky solves are thin checked wrappers around LAPACK (via scipy);
the symmetric Jacobi eigensolver, the Pade matrix exponential and the
complex Gram-Schmidt QR are implemented here directly.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg as sla

from .errors import NoConvergence, NotPositiveDefinite, RankDeficient, SingularMatrix

TOL_SOLVE = 1e-10
JACOBI_MAX_SWEEPS = 100


def rng_from_seed(seed: int) -> np.random.Generator:
    """Return the package's seeded generator (PCG64) for ``seed``."""
    return np.random.default_rng(np.uint64(seed))


def _check_square(A: np.ndarray) -> None:
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")


def lu_solve(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve ``A X = B`` by LU with partial pivoting.

    Raises SingularMatrix when a pivot is below ``1e-14 * ||A||_F``.
    """
    _check_square(A)
    if B.shape[0] != A.shape[0]:
        raise ValueError(f"row mismatch: A is {A.shape}, B is {B.shape}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
        raise SingularMatrix("non-finite input to lu_solve")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(A, check_finite=False)
    threshold = 1e-14 * np.linalg.norm(A)
    if threshold == 0.0 or np.min(np.abs(np.diag(lu))) < threshold:
        raise SingularMatrix("pivot below 1e-14*||A||_F")
    return sla.lu_solve((lu, piv), B, check_finite=False)


def cholesky_solve(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve ``A X = B`` for symmetric positive definite ``A``."""
    _check_square(A)
    if B.shape[0] != A.shape[0]:
        raise ValueError(f"row mismatch: A is {A.shape}, B is {B.shape}")
    scale = max(np.linalg.norm(A), 1.0)
    if np.linalg.norm(A - A.T) > 1e-12 * scale:
        raise ValueError("cholesky_solve needs a symmetric matrix")
    try:
        c = sla.cho_factor(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    if np.any(np.diag(c[0]) <= 0.0):
        raise NotPositiveDefinite("nonpositive Cholesky pivot")
    return sla.cho_solve(c, B, check_finite=False)


def sym_eig_jacobi(A: np.ndarray, tol: float = 1e-14) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigensolver for a symmetric matrix.

    Returns ascending eigenvalues and an orthogonal matrix of eigenvectors
    (columns). Raises NoConvergence after ``JACOBI_MAX_SWEEPS`` sweeps.
    """
    _check_square(A)
    scale = np.linalg.norm(A)
    if np.linalg.norm(A - A.T) > 1e-10 * max(scale, 1.0):
        raise ValueError("sym_eig_jacobi needs a symmetric matrix")
    a = 0.5 * (A + A.T)
    m = a.shape[0]
    v = np.eye(m)
    if m == 1 or scale == 0.0:
        return np.diag(a).copy(), v
    eps = np.finfo(float).eps
    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            break
        rotated = False
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = a[p, q]
                # negligible relative to its diagonal pair (or to the whole matrix)
                if abs(apq) <= max(eps * np.sqrt(abs(a[p, p] * a[q, q])), 1e-300, 1e-3 * tol * scale / m):
                    a[p, q] = a[q, p] = 0.0
                    continue
                rotated = True
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.hypot(1.0, theta)) if theta != 0 else 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0  # annihilated exactly in exact arithmetic
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
        if not rotated:
            break
    else:
        raise NoConvergence(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")
    w = np.diag(a).copy()
    order = np.argsort(w)
    return w[order], v[:, order]


# Pade(13) coefficients, Higham (2005)
_PADE13 = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
)
_THETA13 = 5.371920351148152


def expm(A: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring with the [13/13] Pade approximant."""
    _check_square(A)
    m = A.shape[0]
    ident = np.eye(m)
    norm1 = np.linalg.norm(A, 1)
    if norm1 == 0.0:
        return ident
    s = 0
    if norm1 > _THETA13:
        s = int(np.ceil(np.log2(norm1 / _THETA13)))
    X = A / (2.0**s)
    b = _PADE13
    X2 = X @ X
    X4 = X2 @ X2
    X6 = X4 @ X2
    u_inner = X6 @ (b[13] * X6 + b[11] * X4 + b[9] * X2)
    u = X @ (u_inner + b[7] * X6 + b[5] * X4 + b[3] * X2 + b[1] * ident)
    v_inner = X6 @ (b[12] * X6 + b[10] * X4 + b[8] * X2)
    v = v_inner + b[6] * X6 + b[4] * X4 + b[2] * X2 + b[0] * ident
    R = lu_solve(v - u, v + u)
    for _ in range(s):
        R = R @ R
    return R


def complex_qr_unitary(n: int, seed: int, max_tries: int = 5) -> tuple[np.ndarray, np.ndarray]:
    """Unitary Q-factor of a seeded random complex matrix, as ``(re, im)``.

    QR is computed with modified Gram-Schmidt. A column whose norm collapses
    triggers a fresh draw, at most ``max_tries`` times.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = rng_from_seed(seed)
    for _ in range(max_tries):
        Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        Q = Z.copy()
        ok = True
        for j in range(n):
            for i in range(j):
                Q[:, j] -= np.vdot(Q[:, i], Q[:, j]) * Q[:, i]
            nrm = np.linalg.norm(Q[:, j])
            if nrm < 1e-10 * np.linalg.norm(Z[:, j]):
                ok = False
                break
            Q[:, j] /= nrm
        if ok:
            # one reorthogonalisation pass keeps ||Q*Q - I|| at roundoff
            for j in range(n):
                for i in range(j):
                    Q[:, j] -= np.vdot(Q[:, i], Q[:, j]) * Q[:, i]
                Q[:, j] /= np.linalg.norm(Q[:, j])
            return Q.real.copy(), Q.imag.copy()
    raise RankDeficient(f"complex QR failed after {max_tries} draws")
