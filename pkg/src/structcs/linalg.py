"""Small dense Hermitian helpers: Jacobi eigensolver, guarded solves and
matrix-free power iteration."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .seeding import STREAM_POWER_START, rng_for


class RankDeficientError(np.linalg.LinAlgError):
    """Gram matrix is singular to working precision."""


def jacobi_eigvalsh(a, tol: float = 1e-12, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix by cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius mass falls below
    ``tol * ||a||_F``. Returns eigenvalues in ascending order.
    """
    a = np.array(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.allclose(a, a.conj().T, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise ValueError("matrix is not Hermitian")
    n = a.shape[0]
    scale = np.linalg.norm(a)
    if n == 1 or scale == 0.0:
        return np.sort(np.real(np.diag(a)))
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                g = a[p, q]
                mag = abs(g)
                if mag <= 1e-300:
                    continue
                phase = g / mag
                theta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                t = 1.0 / (abs(theta) + np.hypot(theta, 1.0))
                if theta < 0:
                    t = -t
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c
                # J = diag(1, conj(phase)) @ [[c, s], [-s, c]] on rows/cols (p, q)
                rot = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                cols = [p, q]
                a[:, cols] = a[:, cols] @ rot
                a[cols, :] = rot.conj().T @ a[cols, :]
                a[p, q] = a[q, p] = 0.0
    else:
        raise np.linalg.LinAlgError("Jacobi iteration did not converge")
    return np.sort(np.real(np.diag(a)))


def hermitian_solve(gram: np.ndarray, rhs: np.ndarray, rcond: float = 1e-12) -> np.ndarray:
    """Solve ``gram @ x = rhs`` for Hermitian positive semidefinite ``gram``.

    Raises :class:`RankDeficientError` when the smallest eigenvalue is below
    ``rcond`` times the largest.
    """
    w, v = np.linalg.eigh(gram)
    if w[-1] <= 0 or w[0] <= rcond * w[-1]:
        raise RankDeficientError(f"Gram matrix rank deficient (min eig {w[0]:.3e})")
    return v @ ((v.conj().T @ rhs) / w)


def power_iteration(
    normal: Callable[[np.ndarray], np.ndarray],
    dim: int,
    seed: int = 0,
    min_iters: int = 30,
    max_iters: int = 10_000,
    tol: float = 1e-9,
) -> float:
    """Largest singular value of ``A`` given ``normal(v) = A^* A v``.

    The start vector is a pseudo-random unit vector derived from ``seed``.
    Iterates at least ``min_iters`` times, then until the Rayleigh quotient
    changes by less than ``tol`` (relative).
    """
    rng = rng_for(seed, STREAM_POWER_START)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    est = 0.0
    for it in range(max_iters):
        w = normal(v)
        new = float(np.real(np.vdot(v, w)))
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        converged = abs(new - est) <= tol * abs(new)
        est = new
        if it + 1 >= min_iters and converged:
            break
    return float(np.sqrt(max(est, 0.0)))
