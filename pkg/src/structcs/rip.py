"""Restricted isometry constants: exhaustive and sampled estimates, the
moment-to-tail conversion and the sufficient measurement counts."""

from __future__ import annotations

import enum
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .ensembles import Kind, MeasurementOperator
from .linalg import jacobi_eigvalsh
from .seeding import STREAM_RIP_SUPPORTS, rng_for

DEFAULT_BUDGET = 10**6
RECORD_LIMIT = 10**4
_CHUNK = 4096


class Method(str, enum.Enum):
    EXACT = "exact"
    MONTE_CARLO = "monte_carlo"


class BudgetExceeded(RuntimeError):
    """Exhaustive enumeration would exceed the configured support budget."""


@dataclass
class RipReport:
    s: int
    delta: float
    method: Method
    supports_checked: int
    support_records: list[tuple[tuple[int, ...], float, float]] | None = None
    trials: int | None = None

    def to_dict(self, include_records: bool = True) -> dict:
        d = {
            "s": self.s,
            "delta": self.delta,
            "method": self.method.value,
            "supports_checked": self.supports_checked,
            "trials": self.trials,
        }
        if include_records and self.support_records is not None:
            d["support_records"] = [[list(S), lo, hi] for S, lo, hi in self.support_records]
        return d

    def to_json(self, include_records: bool = True) -> str:
        return json.dumps(self.to_dict(include_records), sort_keys=True)


def _validate_support(op: MeasurementOperator, support) -> np.ndarray:
    sup = np.asarray(support, dtype=np.intp)
    if sup.ndim != 1 or sup.size < 1:
        raise ValueError("support must be a nonempty index list")
    if sup.min() < 0 or sup.max() >= op.n_cols:
        raise ValueError(f"support index outside [0, {op.n_cols})")
    if np.unique(sup).size != sup.size:
        raise ValueError("support has repeated indices")
    return sup


def gram_extremes(op: MeasurementOperator, support: Sequence[int],
                  solver: str = "jacobi") -> tuple[float, float]:
    """Extremal eigenvalues of ``Phi_S^* Phi_S``.

    ``solver="jacobi"`` uses the in-house cyclic Jacobi iteration,
    ``"lapack"`` defers to :func:`numpy.linalg.eigvalsh`.
    """
    sup = _validate_support(op, support)
    cols = op.columns(sup)
    gram = cols.conj().T @ cols
    gram = 0.5 * (gram + gram.conj().T)
    if solver == "jacobi":
        w = jacobi_eigvalsh(gram)
    elif solver == "lapack":
        w = np.linalg.eigvalsh(gram)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    return float(w[0]), float(w[-1])


def colex_supports(n: int, s: int) -> np.ndarray:
    """All s-subsets of ``range(n)`` in colexicographic order, one per row."""
    if s == 0:
        return np.zeros((1, 0), dtype=np.intp)
    if s > n:
        return np.zeros((0, s), dtype=np.intp)
    prev = colex_supports(n - 1, s - 1)
    blocks = []
    for last in range(s - 1, n):
        head = prev[: math.comb(last, s - 1)]
        blocks.append(np.hstack([head, np.full((head.shape[0], 1), last, dtype=np.intp)]))
    return np.vstack(blocks)


def _batched_extremes(gram: np.ndarray, supports: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    sub = gram[supports[:, :, None], supports[:, None, :]]
    w = np.linalg.eigvalsh(sub)
    return w[:, 0], w[:, -1]


def _scan(op: MeasurementOperator, supports: np.ndarray, threads: int):
    dense = op.to_dense()
    gram = dense.conj().T @ dense
    gram = 0.5 * (gram + gram.conj().T)
    chunks = [supports[i : i + _CHUNK] for i in range(0, supports.shape[0], _CHUNK)]
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda c: _batched_extremes(gram, c), chunks))
    else:
        parts = [_batched_extremes(gram, c) for c in chunks]
    lo = np.concatenate([p[0] for p in parts])
    hi = np.concatenate([p[1] for p in parts])
    return lo, hi


def _report(s, supports, lo, hi, method, keep_records, trials=None) -> RipReport:
    dev = np.maximum(hi - 1.0, 1.0 - lo)
    records = None
    if keep_records is None:
        keep_records = supports.shape[0] <= RECORD_LIMIT
    if keep_records:
        records = [(tuple(int(i) for i in S), float(a), float(b)) for S, a, b in zip(supports, lo, hi)]
    return RipReport(s=s, delta=float(max(dev.max(), 0.0)), method=method,
                     supports_checked=int(supports.shape[0]), support_records=records, trials=trials)


def rip_exact(op: MeasurementOperator, s: int, budget: int = DEFAULT_BUDGET,
              keep_records: bool | None = None, threads: int = 1) -> RipReport:
    """Exact ``delta_s`` by enumerating every support of size s.

    Refuses with :class:`BudgetExceeded` when ``C(n, s) > budget``; there is
    no automatic fallback to sampling.
    """
    if not 1 <= s <= op.n_cols:
        raise ValueError(f"sparsity must be in [1, {op.n_cols}]")
    count = math.comb(op.n_cols, s)
    if count > budget:
        raise BudgetExceeded(
            f"C({op.n_cols}, {s}) = {count} supports exceeds budget {budget}; "
            "use rip_monte_carlo for a lower bound or raise the budget"
        )
    supports = colex_supports(op.n_cols, s)
    lo, hi = _scan(op, supports, threads)
    return _report(s, supports, lo, hi, Method.EXACT, keep_records)


def sample_supports(n: int, s: int, trials: int, seed: int) -> np.ndarray:
    rng = rng_for(seed, STREAM_RIP_SUPPORTS)
    keys = rng.random((trials, n))
    return np.sort(np.argpartition(keys, s - 1, axis=1)[:, :s], axis=1)


def rip_monte_carlo(op: MeasurementOperator, s: int, trials: int, seed: int = 0,
                    keep_records: bool | None = None, threads: int = 1) -> RipReport:
    """Lower bound on ``delta_s`` from ``trials`` uniformly random supports."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 1 <= s <= op.n_cols:
        raise ValueError(f"sparsity must be in [1, {op.n_cols}]")
    supports = sample_supports(op.n_cols, s, trials, seed)
    lo, hi = _scan(op, supports, threads)
    return _report(s, supports, lo, hi, Method.MONTE_CARLO, keep_records, trials=trials)


def tail_from_moments(alpha: float, beta: float, gamma: float, p0: float, u: float) -> tuple[float, float]:
    """Tail bound from moment growth ``||Z||_p <= alpha + beta sqrt(p) + gamma p``.

    Returns ``(e (alpha + beta sqrt(u) + gamma u), exp(-u))``.
    """
    if min(alpha, beta, gamma) < 0:
        raise ValueError("alpha, beta, gamma must be nonnegative")
    if p0 < 1:
        raise ValueError("p0 must be >= 1")
    if u < p0:
        raise ValueError(f"u={u} is below p0={p0}")
    return math.e * (alpha + beta * math.sqrt(u) + gamma * u), math.exp(-u)


def rip_theory_m(s: float, n: float, delta: float, kind: Kind | str, c: float = 1.0,
                 failure_prob: float | None = None, rtol: float = 1e-12,
                 max_iter: int = 200) -> float:
    """Sufficient number of measurements for ``delta_s <= delta`` up to the constant c.

    * partial circulant: ``c delta^-2 s log^2 s log^2 n``
    * Gabor: solves ``m = c delta^-2 s log^2 s log^2 m`` by fixed-point
      iteration from ``max(c delta^-2 s, e^2)``, returning the largest root
      (or 1 when none exceeds 1); ``n`` is ignored
    * subgaussian: ``c delta^-2 max(s log(e n / s), log(1/failure_prob))``
    """
    kind = Kind(kind)
    if s < 2 and kind is not Kind.SUBGAUSSIAN_DENSE:
        raise ValueError("s must be >= 2")
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    scale = c / delta**2
    if kind is Kind.PARTIAL_CIRCULANT:
        if n < s:
            raise ValueError("need n >= s")
        return scale * s * math.log(s) ** 2 * math.log(n) ** 2
    if kind is Kind.SUBGAUSSIAN_DENSE:
        if n < s:
            raise ValueError("need n >= s")
        term = s * math.log(math.e * n / s)
        if failure_prob is not None:
            term = max(term, math.log(1.0 / failure_prob))
        return scale * term
    if kind is Kind.GABOR_SYNTHESIS:
        k = scale * s * math.log(s) ** 2
        # log(m)^2 / m peaks at m = e^2 with value 4 / e^2; below that k the
        # inequality m >= k log(m)^2 holds for every m >= 1
        if 4.0 * k < math.e**2:
            return 1.0
        # start at or above e^2 so the iteration is drawn to the largest root
        m = max(scale * s, math.e**2)
        for _ in range(max_iter):
            new = k * math.log(m) ** 2
            if abs(new - m) <= rtol * abs(new):
                return new
            m = new
        raise ArithmeticError("fixed-point iteration for the Gabor bound did not converge")
    raise ValueError(f"no bound for kind {kind.value}")
