"""Greedy, thresholding and l1 solvers for noiseless sparse recovery.

All solvers touch the measurement operator only through ``forward``,
``adjoint`` and ``columns`` on the active support, so structured operators
keep their FFT fast paths.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dft import as_vector
from .ensembles import MeasurementOperator
from .linalg import RankDeficientError, hermitian_solve

SUCCESS_TOL = 1e-4


@dataclass
class RecoveryResult:
    estimate: np.ndarray
    iterations: int
    residual_norm: float
    converged: bool
    support_recovered: bool | None = None
    dual: np.ndarray | None = field(default=None, repr=False)
    message: str = ""

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.estimate))

    def to_dict(self) -> dict:
        return {
            "estimate_real": self.estimate.real.tolist(),
            "estimate_imag": self.estimate.imag.tolist(),
            "iterations": self.iterations,
            "residual_norm": self.residual_norm,
            "converged": self.converged,
            "support_recovered": self.support_recovered,
            "message": self.message,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def relative_error(estimate, truth) -> float:
    truth = np.asarray(truth)
    denom = np.linalg.norm(truth)
    diff = np.linalg.norm(np.asarray(estimate) - truth)
    return diff if denom == 0 else diff / denom


def _finish(op, y, x, iterations, converged, truth=None, dual=None, message="") -> RecoveryResult:
    residual = float(np.linalg.norm(y - op.forward(x)))
    recovered = None
    if truth is not None:
        truth = np.asarray(truth)
        recovered = bool(
            set(np.flatnonzero(truth)) == set(np.flatnonzero(np.abs(x) > 1e-8 * max(np.abs(x).max(), 1e-300)))
        )
    return RecoveryResult(x, iterations, residual, converged, recovered, dual, message)


def hard_threshold(v, s: int) -> np.ndarray:
    """Keep the s largest-magnitude entries; ties go to the lower index."""
    v = np.asarray(v)
    out = np.zeros_like(v)
    if s <= 0:
        return out
    keep = _top_indices(np.abs(v), s)
    out[keep] = v[keep]
    return out


def _top_indices(mag: np.ndarray, k: int) -> np.ndarray:
    # stable sort on -mag keeps the lowest index first among equal magnitudes
    order = np.argsort(-mag, kind="stable")
    return np.sort(order[:k])


def _least_squares(op: MeasurementOperator, y: np.ndarray, support: np.ndarray) -> np.ndarray:
    cols = op.columns(support)
    gram = cols.conj().T @ cols
    return hermitian_solve(0.5 * (gram + gram.conj().T), cols.conj().T @ y)


def _prepare(op, y):
    y = as_vector(y, name="y")
    if y.ndim != 1 or y.size != op.n_rows:
        raise ValueError(f"y must be a vector of length {op.n_rows}")
    return y


def omp(op: MeasurementOperator, y, s: int, truth=None) -> RecoveryResult:
    """Orthogonal matching pursuit with s greedy steps."""
    y = _prepare(op, y)
    if not 1 <= s <= op.n_rows:
        raise ValueError("need 1 <= s <= n_rows")
    x = np.zeros(op.n_cols, dtype=np.complex128)
    ynorm = np.linalg.norm(y)
    if ynorm == 0:
        return _finish(op, y, x, 0, True, truth)
    support: list[int] = []
    residual = y.copy()
    for it in range(1, s + 1):
        corr = np.abs(op.adjoint(residual))
        corr[support] = -1.0
        j = int(np.argmax(corr))
        if corr[j] <= 1e-14 * ynorm:
            return _finish(op, y, x, it - 1, True, truth)
        support.append(j)
        sup = np.array(sorted(support))
        try:
            coef = _least_squares(op, y, sup)
        except RankDeficientError as exc:
            return _finish(op, y, x, it, False, truth, message=str(exc))
        x = np.zeros_like(x)
        x[sup] = coef
        residual = y - op.forward(x)
        if np.linalg.norm(residual) <= 1e-13 * ynorm:
            return _finish(op, y, x, it, True, truth)
    return _finish(op, y, x, s, True, truth)


def iht(op: MeasurementOperator, y, s: int, max_iters: int = 500, step: float = 1.0,
        truth=None, rtol: float = 1e-8) -> RecoveryResult:
    """Iterative hard thresholding ``x <- H_s(x + step * Phi^*(y - Phi x))``."""
    y = _prepare(op, y)
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    x = np.zeros(op.n_cols, dtype=np.complex128)
    ynorm = np.linalg.norm(y)
    if ynorm == 0:
        return _finish(op, y, x, 1, True, truth)
    res = ynorm
    r = y
    for it in range(1, max_iters + 1):
        x = hard_threshold(x + step * op.adjoint(r), s)
        r = y - op.forward(x)
        new = np.linalg.norm(r)
        if new > 10.0 * ynorm:
            return _finish(op, y, x, it, False, truth, message="diverged")
        if new <= 1e-13 * ynorm or abs(res - new) < rtol * res:
            return _finish(op, y, x, it, True, truth)
        res = new
    return _finish(op, y, x, max_iters, False, truth, message="max_iters reached")


def htp(op: MeasurementOperator, y, s: int, max_iters: int = 100, step: float = 1.0,
        truth=None) -> RecoveryResult:
    """Hard thresholding pursuit: IHT support step, then least squares."""
    y = _prepare(op, y)
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    x = np.zeros(op.n_cols, dtype=np.complex128)
    ynorm = np.linalg.norm(y)
    if ynorm == 0:
        return _finish(op, y, x, 1, True, truth)
    prev = None
    r = y
    for it in range(1, max_iters + 1):
        sup = _top_indices(np.abs(x + step * op.adjoint(r)), s)
        if prev is not None and np.array_equal(sup, prev):
            return _finish(op, y, x, it, True, truth)
        try:
            coef = _least_squares(op, y, sup)
        except RankDeficientError as exc:
            return _finish(op, y, x, it, False, truth, message=str(exc))
        x = np.zeros_like(x)
        x[sup] = coef
        r = y - op.forward(x)
        if np.linalg.norm(r) > 10.0 * ynorm:
            return _finish(op, y, x, it, False, truth, message="diverged")
        prev = sup
    return _finish(op, y, x, max_iters, False, truth, message="max_iters reached")


def cosamp(op: MeasurementOperator, y, s: int, max_iters: int = 100, truth=None,
           rtol: float = 1e-8) -> RecoveryResult:
    """CoSaMP: merge 2s proxy atoms with the current support, fit, prune to s."""
    y = _prepare(op, y)
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    x = np.zeros(op.n_cols, dtype=np.complex128)
    ynorm = np.linalg.norm(y)
    if ynorm == 0:
        return _finish(op, y, x, 1, True, truth)
    r = y
    res = ynorm
    for it in range(1, max_iters + 1):
        proxy = np.abs(op.adjoint(r))
        cand = _top_indices(proxy, min(2 * s, op.n_cols))
        merged = np.union1d(cand, np.flatnonzero(x))
        if merged.size > op.n_rows:
            merged = merged[np.argsort(-proxy[merged], kind="stable")[: op.n_rows]]
            merged.sort()
        try:
            coef = _least_squares(op, y, merged)
        except RankDeficientError as exc:
            return _finish(op, y, x, it, False, truth, message=str(exc))
        b = np.zeros_like(x)
        b[merged] = coef
        x = hard_threshold(b, s)
        r = y - op.forward(x)
        new = np.linalg.norm(r)
        if new <= 1e-13 * ynorm or abs(res - new) < rtol * res:
            return _finish(op, y, x, it, True, truth)
        res = new
    return _finish(op, y, x, max_iters, False, truth, message="max_iters reached")


def soft_threshold(v, tau: float) -> np.ndarray:
    """Complex soft thresholding: shrink the modulus by tau, keep the phase."""
    v = np.asarray(v, dtype=np.complex128)
    mag = np.abs(v)
    scale = np.where(mag > tau, 1.0 - tau / np.where(mag > 0, mag, 1.0), 0.0)
    return v * scale


def basis_pursuit(op: MeasurementOperator, y, max_iters: int = 50_000, tol: float = 1e-6,
                  truth=None, step_tol: float = 1e-7, seed: int = 0) -> RecoveryResult:
    """``min ||z||_1 s.t. Phi z = y`` by primal-dual proximal splitting.

    Steps ``sigma = tau = 0.9 / L`` with L the power-iteration estimate of
    ``||Phi||``. The returned ``dual`` satisfies ``-Phi^* dual in d||z||_1``
    at optimality; see :func:`l1_certificate`.
    """
    y = _prepare(op, y)
    z = np.zeros(op.n_cols, dtype=np.complex128)
    ynorm = np.linalg.norm(y)
    if ynorm == 0:
        return _finish(op, y, z, 0, True, truth, dual=np.zeros(op.n_rows, dtype=np.complex128))
    lip = op.norm_estimate(seed=seed)
    tau = sigma = 0.9 / lip
    nu = np.zeros(op.n_rows, dtype=np.complex128)
    z_bar = z
    best, best_res = z, math.inf
    for it in range(1, max_iters + 1):
        nu = nu + sigma * (op.forward(z_bar) - y)
        z_new = soft_threshold(z - tau * op.adjoint(nu), tau)
        z_bar = 2.0 * z_new - z
        change = np.linalg.norm(z_new - z)
        z = z_new
        if it % 10 == 0 or change == 0.0:
            res = np.linalg.norm(op.forward(z) - y)
            if res < best_res:
                best, best_res = z, res
            znorm = np.linalg.norm(z)
            if res <= tol * ynorm and change <= step_tol * max(znorm, 1e-300):
                return _finish(op, y, z, it, True, truth, dual=nu)
    return _finish(op, y, best, max_iters, False, truth, dual=nu, message="max_iters reached")


def l1_certificate(op: MeasurementOperator, x, dual, support_tol: float = 1e-6) -> float:
    """Distance of ``g = -Phi^* dual`` from the subdifferential of ``||x||_1``.

    On the support g must equal ``x_j / |x_j|``; off the support ``|g_j| <= 1``.
    Returns the largest violation.
    """
    x = np.asarray(x, dtype=np.complex128)
    g = -op.adjoint(np.asarray(dual, dtype=np.complex128))
    mag = np.abs(x)
    on = mag > support_tol * max(mag.max(), 1e-300)
    viol_on = np.abs(g[on] - x[on] / mag[on]).max(initial=0.0)
    viol_off = np.maximum(np.abs(g[~on]) - 1.0, 0.0).max(initial=0.0)
    return float(max(viol_on, viol_off))


SOLVERS = {"omp": omp, "iht": iht, "htp": htp, "cosamp": cosamp, "basis_pursuit": basis_pursuit}


def solve(name: str, op: MeasurementOperator, y, s: int, truth=None, **kw) -> RecoveryResult:
    if name not in SOLVERS:
        raise KeyError(f"unknown solver {name!r}; choose from {sorted(SOLVERS)}")
    if name == "basis_pursuit":
        return basis_pursuit(op, y, truth=truth, **kw)
    return SOLVERS[name](op, y, s, truth=truth, **kw)
