"""Random generators, structured measurement operators and the
coefficient-indexed families ``V_x`` used by the chaos analysis.

Measurement operators are matrix-free: partial circulant and Gabor maps are
applied through FFTs, only the subgaussian ensemble stores its matrix (and
even then it is re-derived from the seed, never serialized).
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from . import dft as _dft
from .dft import DimensionError, as_vector
from .linalg import power_iteration
from .seeding import STREAM_GENERATOR, STREAM_OMEGA, derive_seed, rng_for

GABOR_ORDERING_VERSION = 1


class Distribution(str, enum.Enum):
    RADEMACHER = "rademacher"
    GAUSSIAN = "gaussian"
    STEINHAUS = "steinhaus"


class Kind(str, enum.Enum):
    PARTIAL_CIRCULANT = "partial_circulant"
    GABOR_SYNTHESIS = "gabor_synthesis"
    SUBGAUSSIAN_DENSE = "subgaussian_dense"
    MATRIX = "matrix"


class ConstructionError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    """Distribution, master seed and length of a random generator vector.

    ``stream`` and ``draw`` select a sub-stream of the master seed; two specs
    differing only in ``draw`` give independent vectors.
    """

    distribution: Distribution
    master_seed: int
    length: int
    stream: int = STREAM_GENERATOR
    draw: int = 0

    def __post_init__(self):
        object.__setattr__(self, "distribution", Distribution(self.distribution))
        if self.length < 1:
            raise ValueError("generator length must be >= 1")

    def child(self, draw: int) -> "GeneratorSpec":
        return replace(self, draw=draw)

    def with_length(self, length: int) -> "GeneratorSpec":
        return replace(self, length=length)

    @property
    def seed(self) -> int:
        return derive_seed(self.master_seed, self.stream, self.draw)

    def to_dict(self) -> dict[str, Any]:
        return {
            "distribution": self.distribution.value,
            "master_seed": self.master_seed,
            "length": self.length,
            "stream": self.stream,
            "draw": self.draw,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "GeneratorSpec":
        return cls(**d)


def sample_generator(spec: GeneratorSpec) -> np.ndarray:
    """Draw the i.i.d. mean-zero, unit-variance vector described by ``spec``."""
    rng = np.random.default_rng(spec.seed)
    n = spec.length
    if spec.distribution is Distribution.RADEMACHER:
        return (2.0 * rng.integers(0, 2, size=n) - 1.0).astype(np.complex128)
    if spec.distribution is Distribution.GAUSSIAN:
        return rng.standard_normal(n).astype(np.complex128)
    return np.exp(2j * np.pi * rng.random(n))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# measurement operators


class MeasurementOperator:
    """Linear map ``C^n_cols -> C^n_rows`` with forward and adjoint applies.

    ``forward`` and ``adjoint`` accept a vector or a stack of row vectors
    (shape ``(k, n)``) and act on the last axis.
    """

    kind: Kind
    n_rows: int
    n_cols: int
    generator: GeneratorSpec | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    def forward(self, x) -> np.ndarray:
        raise NotImplementedError

    def adjoint(self, y) -> np.ndarray:
        raise NotImplementedError

    def _check(self, x, size: int, name: str) -> np.ndarray:
        x = as_vector(x, name=name)
        if x.shape[-1] != size:
            raise DimensionError(f"{name} has length {x.shape[-1]}, expected {size}")
        return x

    def columns(self, support: Sequence[int]) -> np.ndarray:
        """Columns on ``support`` as an ``(n_rows, len(support))`` array."""
        support = np.asarray(support, dtype=np.intp)
        basis = np.zeros((support.size, self.n_cols), dtype=np.complex128)
        basis[np.arange(support.size), support] = 1.0
        return self.forward(basis).T

    def to_dense(self) -> np.ndarray:
        return self.columns(np.arange(self.n_cols))

    def norm_estimate(self, seed: int = 0, **kw) -> float:
        """Power-iteration estimate of the spectral norm."""
        return power_iteration(
            lambda v: self.adjoint(self.forward(v)), self.n_cols, seed=seed, **kw
        )

    def metadata(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "n_rows": self.n_rows,
            "n_cols": self.n_cols,
            "generator": None if self.generator is None else self.generator.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.metadata(), sort_keys=True)


class PartialCirculant(MeasurementOperator):
    """``x -> m^{-1/2} R_omega (xi * x)`` for a generator ``xi`` of length n."""

    kind = Kind.PARTIAL_CIRCULANT

    def __init__(self, generator_vector, omega: Sequence[int], generator: GeneratorSpec | None = None):
        xi = as_vector(generator_vector, name="generator")
        if xi.ndim != 1:
            raise ConstructionError("generator must be one-dimensional")
        n = xi.size
        omega_arr = np.asarray(omega, dtype=np.int64)
        if omega_arr.ndim != 1 or omega_arr.size == 0:
            raise ConstructionError("omega must be a nonempty index set")
        if np.any(omega_arr < 0) or np.any(omega_arr >= n):
            raise ConstructionError(f"omega has indices outside [0, {n})")
        if np.unique(omega_arr).size != omega_arr.size:
            raise ConstructionError("omega has duplicate indices")
        self.n_cols = n
        self.n_rows = omega_arr.size
        self.omega = _frozen(np.sort(omega_arr))
        self.xi = _frozen(xi)
        self.xi_hat = _frozen(_dft.dft(xi))
        self.generator = generator
        self._scale = 1.0 / np.sqrt(self.n_rows)

    def forward(self, x) -> np.ndarray:
        x = self._check(x, self.n_cols, "x")
        full = _dft.idft(self.xi_hat * _dft.dft(x))
        return self._scale * full[..., self.omega]

    def forward_naive(self, x) -> np.ndarray:
        """Same map through the direct double-sum convolution."""
        x = self._check(x, self.n_cols, "x")
        return self._scale * _dft.circ_conv(self.xi, x, method="naive")[..., self.omega]

    def adjoint(self, y) -> np.ndarray:
        y = self._check(y, self.n_rows, "y")
        full = np.zeros(y.shape[:-1] + (self.n_cols,), dtype=np.complex128)
        full[..., self.omega] = y
        return self._scale * _dft.idft(np.conj(self.xi_hat) * _dft.dft(full))

    def metadata(self) -> dict[str, Any]:
        meta = super().metadata()
        meta["omega"] = [int(i) for i in self.omega]
        return meta


class GaborSynthesis(MeasurementOperator):
    """Gabor synthesis matrix with columns ``M^l T^k h`` at index ``k + l*m``.

    Forward: ``y_j = sum_k h[j - k] * sum_l x[k + l m] w^{l j}``, i.e. one
    length-m DFT per time shift followed by a cyclic gather, so the
    ``m x m^2`` matrix is never formed.
    """

    kind = Kind.GABOR_SYNTHESIS

    def __init__(self, window, generator: GeneratorSpec | None = None, window_scale: float = 1.0):
        h = as_vector(window, name="window")
        if h.ndim != 1:
            raise ConstructionError("window must be one-dimensional")
        m = h.size
        self.m = m
        self.n_rows = m
        self.n_cols = m * m
        self.window = _frozen(h)
        self.generator = generator
        self.window_scale = window_scale
        j = np.arange(m)
        # gather[k, j] = (j - k) mod m
        self._gather = _frozen(_dft.cyclic_sub(j[None, :], j[:, None], m))

    def _grid(self, x: np.ndarray) -> np.ndarray:
        # x[k + l*m] -> grid[..., k, l]
        return np.swapaxes(x.reshape(x.shape[:-1] + (self.m, self.m)), -1, -2)

    def forward(self, x) -> np.ndarray:
        x = self._check(x, self.n_cols, "x")
        per_shift = _dft.dft(self._grid(x))  # [..., k, j] = sum_l x_{k,l} w^{l j}
        shifted = self.window[self._gather]  # [k, j] = h[j - k]
        return np.sum(shifted * per_shift, axis=-2)

    def adjoint(self, y) -> np.ndarray:
        y = self._check(y, self.n_rows, "y")
        weighted = np.conj(self.window[self._gather]) * y[..., None, :]
        # sum_j exp(-2 pi i l j / m) w_j = m * idft(w)_l
        coeffs = self.m * _dft.idft(weighted)  # [..., k, l]
        return np.swapaxes(coeffs, -1, -2).reshape(y.shape[:-1] + (self.n_cols,))

    def metadata(self) -> dict[str, Any]:
        meta = super().metadata()
        meta["ordering_version"] = GABOR_ORDERING_VERSION
        meta["window_scale"] = self.window_scale
        return meta


class DenseOperator(MeasurementOperator):
    """Explicit matrix; used for the subgaussian ensemble and test fixtures."""

    kind = Kind.MATRIX

    def __init__(self, matrix, generator: GeneratorSpec | None = None):
        mat = np.array(matrix, dtype=np.complex128)
        if mat.ndim != 2:
            raise ConstructionError("matrix payload must be two-dimensional")
        self.n_rows, self.n_cols = mat.shape
        self.matrix = _frozen(mat)
        self.generator = generator

    def forward(self, x) -> np.ndarray:
        x = self._check(x, self.n_cols, "x")
        return x @ self.matrix.T

    def adjoint(self, y) -> np.ndarray:
        y = self._check(y, self.n_rows, "y")
        return y @ self.matrix.conj()

    def to_dense(self) -> np.ndarray:
        return self.matrix.copy()


class SubgaussianDense(DenseOperator):
    kind = Kind.SUBGAUSSIAN_DENSE


# ---------------------------------------------------------------------------
# constructors


def random_omega(n: int, m: int, seed: int) -> np.ndarray:
    """Seeded uniformly random row set of size m."""
    if not 1 <= m <= n:
        raise ConstructionError("need 1 <= m <= n")
    rng = rng_for(seed, STREAM_OMEGA)
    return np.sort(rng.choice(n, size=m, replace=False))


def strided_omega(n: int, m: int, stride: int | None = None) -> np.ndarray:
    """Structured row set ``{L, 2L, ..., mL}`` reduced mod n (0-based)."""
    stride = n // m if stride is None else stride
    omega = (stride * np.arange(1, m + 1)) % n
    if np.unique(omega).size != m:
        raise ConstructionError("stride produces repeated rows")
    return np.sort(omega)


def partial_circulant(n: int, omega: Sequence[int], spec: GeneratorSpec) -> PartialCirculant:
    if spec.length != n:
        spec = spec.with_length(n)
    return PartialCirculant(sample_generator(spec), omega, generator=spec)


def gabor_synthesis(m: int, window) -> GaborSynthesis:
    h = as_vector(window, name="window")
    if h.ndim != 1 or h.size != m:
        raise ConstructionError(f"window must have length m={m}")
    return GaborSynthesis(h)


def gabor_from_generator(m: int, spec: GeneratorSpec) -> GaborSynthesis:
    """Gabor synthesis matrix with window ``h = xi / sqrt(m)``."""
    if spec.length != m:
        spec = spec.with_length(m)
    scale = 1.0 / np.sqrt(m)
    return GaborSynthesis(scale * sample_generator(spec), generator=spec, window_scale=scale)


def subgaussian_dense(m: int, n: int, spec: GeneratorSpec) -> SubgaussianDense:
    """``m x n`` matrix with entries ``xi_{jk} / sqrt(m)`` (row-major ``xi``)."""
    if m < 1 or n < 1:
        raise ConstructionError("m, n must be >= 1")
    if spec.length != m * n:
        spec = spec.with_length(m * n)
    payload = sample_generator(spec).reshape(m, n) / np.sqrt(m)
    return SubgaussianDense(payload, generator=spec)


def operator_from_json(doc: str | dict) -> MeasurementOperator:
    """Rebuild an operator from :meth:`MeasurementOperator.to_json` output."""
    meta = json.loads(doc) if isinstance(doc, str) else doc
    kind = Kind(meta["kind"])
    if meta.get("generator") is None:
        raise ConstructionError("operator metadata has no generator to re-derive from")
    spec = GeneratorSpec.from_dict(meta["generator"])
    if kind is Kind.PARTIAL_CIRCULANT:
        return partial_circulant(meta["n_cols"], meta["omega"], spec)
    if kind is Kind.GABOR_SYNTHESIS:
        if meta.get("ordering_version", GABOR_ORDERING_VERSION) != GABOR_ORDERING_VERSION:
            raise ConstructionError("unsupported Gabor column ordering")
        return gabor_from_generator(meta["n_rows"], spec)
    if kind is Kind.SUBGAUSSIAN_DENSE:
        return subgaussian_dense(meta["n_rows"], meta["n_cols"], spec)
    raise ConstructionError(f"cannot rebuild kind {kind.value}")


# ---------------------------------------------------------------------------
# sparse vectors and V_x families


@dataclass(frozen=True)
class SparseVector:
    n: int
    support: tuple[int, ...]
    values: tuple[complex, ...] = field(default=())

    def __post_init__(self):
        sup = tuple(int(i) for i in self.support)
        vals = tuple(complex(v) for v in self.values)
        if len(sup) != len(vals):
            raise ValueError("support and values differ in length")
        if any(b <= a for a, b in zip(sup, sup[1:])):
            raise ValueError("support must be strictly increasing")
        if sup and (sup[0] < 0 or sup[-1] >= self.n):
            raise ValueError("support index out of range")
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_dense(cls, x, tol: float = 0.0) -> "SparseVector":
        x = np.asarray(x, dtype=np.complex128)
        idx = np.flatnonzero(np.abs(x) > tol)
        return cls(x.size, tuple(idx), tuple(x[idx]))

    def to_dense(self) -> np.ndarray:
        x = np.zeros(self.n, dtype=np.complex128)
        x[list(self.support)] = self.values
        return x

    @property
    def nnz(self) -> int:
        return len(self.support)

    def norm(self) -> float:
        return float(np.linalg.norm(np.asarray(self.values)))


def random_sparse(n: int, s: int, rng: np.random.Generator, complex_values: bool = False,
                  unit: bool = True) -> SparseVector:
    """Uniform random support of size s with Gaussian values."""
    support = np.sort(rng.choice(n, size=s, replace=False))
    vals = rng.standard_normal(s)
    if complex_values:
        vals = vals + 1j * rng.standard_normal(s)
    if unit:
        vals = vals / np.linalg.norm(vals)
    return SparseVector(n, tuple(support), tuple(vals))


class FamilyOperator:
    """The matrix ``V_x`` with ``Phi_xi x = V_x xi`` for a fixed coefficient x.

    Acts on generator vectors of length ``n_in``.
    """

    kind: Kind
    n_out: int
    n_in: int

    def __init__(self, x: SparseVector):
        self.x = x

    def forward(self, xi) -> np.ndarray:
        raise NotImplementedError

    def adjoint(self, y) -> np.ndarray:
        raise NotImplementedError

    def frobenius_norm(self) -> float:
        # every family here is an isometric image of the coefficient vector
        return self.x.norm()

    def operator_norm(self, seed: int = 0, **kw) -> float:
        return power_iteration(lambda v: self.adjoint(self.forward(v)), self.n_in, seed=seed, **kw)

    def to_dense(self) -> np.ndarray:
        return self.forward(np.eye(self.n_in, dtype=np.complex128)).T


class CirculantFamily(FamilyOperator):
    """``V_x = m^{-1/2} P_omega F^{-1} diag(F x) F``."""

    kind = Kind.PARTIAL_CIRCULANT

    def __init__(self, x: SparseVector, omega: Sequence[int]):
        super().__init__(x)
        self.omega = np.sort(np.asarray(omega, dtype=np.intp))
        self.n_in = x.n
        self.n_out = self.omega.size
        self.x_hat = _dft.dft(x.to_dense())

    def forward(self, xi) -> np.ndarray:
        xi = as_vector(xi, name="xi")
        if xi.shape[-1] != self.n_in:
            raise DimensionError("generator length mismatch")
        return _dft.idft(self.x_hat * _dft.dft(xi))[..., self.omega] / np.sqrt(self.n_out)

    def adjoint(self, y) -> np.ndarray:
        y = as_vector(y, name="y")
        full = np.zeros(y.shape[:-1] + (self.n_in,), dtype=np.complex128)
        full[..., self.omega] = y
        return _dft.idft(np.conj(self.x_hat) * _dft.dft(full)) / np.sqrt(self.n_out)

    def operator_norm_bound(self) -> float:
        """Closed-form bound ``m^{-1/2} ||F x||_inf`` (equality when omega is everything)."""
        return float(np.max(np.abs(self.x_hat)) / np.sqrt(self.n_out))


def time_frequency_shift(m: int, k: int, ell: int) -> np.ndarray:
    """Dense ``m x m`` matrix of ``M^ell T^k``."""
    j = np.arange(m)
    mat = np.zeros((m, m), dtype=np.complex128)
    mat[j, (j - k) % m] = np.exp(2j * np.pi * ((ell * j) % m) / m)
    return mat


class GaborFamily(FamilyOperator):
    """``V_x = m^{-1/2} sum_lambda x_lambda pi(lambda)``, assembled densely."""

    kind = Kind.GABOR_SYNTHESIS

    def __init__(self, x: SparseVector, m: int):
        if x.n != m * m:
            raise DimensionError(f"Gabor coefficients need length m^2={m * m}")
        super().__init__(x)
        self.m = m
        self.n_in = self.n_out = m
        mat = np.zeros((m, m), dtype=np.complex128)
        for idx, val in zip(x.support, x.values):
            k, ell = idx % m, idx // m
            mat += val * time_frequency_shift(m, k, ell)
        self.matrix = _frozen(mat / np.sqrt(m))

    def forward(self, xi) -> np.ndarray:
        xi = as_vector(xi, name="xi")
        if xi.shape[-1] != self.m:
            raise DimensionError("generator length mismatch")
        return xi @ self.matrix.T

    def adjoint(self, y) -> np.ndarray:
        return as_vector(y, name="y") @ self.matrix.conj()

    def to_dense(self) -> np.ndarray:
        return self.matrix.copy()


class SubgaussianFamily(FamilyOperator):
    """Block-diagonal ``m x mn`` matrix ``m^{-1/2} diag(x^T, ..., x^T)``."""

    kind = Kind.SUBGAUSSIAN_DENSE

    def __init__(self, x: SparseVector, m: int):
        super().__init__(x)
        self.m = m
        self.n_out = m
        self.n_in = m * x.n
        self._x = x.to_dense()

    def forward(self, xi) -> np.ndarray:
        xi = as_vector(xi, name="xi")
        if xi.shape[-1] != self.n_in:
            raise DimensionError("generator length mismatch")
        blocks = xi.reshape(xi.shape[:-1] + (self.m, self.x.n))
        return blocks @ self._x / np.sqrt(self.m)

    def adjoint(self, y) -> np.ndarray:
        y = as_vector(y, name="y")
        out = y[..., :, None] * np.conj(self._x) / np.sqrt(self.m)
        return out.reshape(y.shape[:-1] + (self.n_in,))


def family_operator(kind: Kind | str, x: SparseVector, *, m: int | None = None,
                    omega: Sequence[int] | None = None) -> FamilyOperator:
    """Build ``V_x`` for the given ensemble kind.

    ``omega`` is required for the partial circulant family, ``m`` for the
    Gabor (window length) and subgaussian (row count) families.
    """
    kind = Kind(kind)
    if kind is Kind.PARTIAL_CIRCULANT:
        if omega is None:
            raise ValueError("circulant family needs omega")
        omega = np.asarray(omega)
        if omega.size and (omega.min() < 0 or omega.max() >= x.n):
            raise DimensionError("omega outside the coefficient dimension")
        return CirculantFamily(x, omega)
    if m is None:
        raise ValueError(f"{kind.value} family needs m")
    if kind is Kind.GABOR_SYNTHESIS:
        return GaborFamily(x, m)
    if kind is Kind.SUBGAUSSIAN_DENSE:
        return SubgaussianFamily(x, m)
    raise ValueError(f"no V_x family for kind {kind.value}")


def family_for(op: MeasurementOperator, x: SparseVector) -> FamilyOperator:
    """``V_x`` matching an existing operator's parameters."""
    if isinstance(op, PartialCirculant):
        return family_operator(op.kind, x, omega=op.omega)
    if isinstance(op, GaborSynthesis):
        return family_operator(op.kind, x, m=op.m)
    if isinstance(op, SubgaussianDense):
        return family_operator(op.kind, x, m=op.n_rows)
    raise ValueError(f"no V_x family for kind {op.kind.value}")


def generator_for_family(op: MeasurementOperator) -> np.ndarray:
    """The generator vector ``xi`` with ``op.forward(x) == V_x xi``."""
    if op.generator is None:
        raise ValueError("operator was not built from a generator")
    return sample_generator(op.generator)
