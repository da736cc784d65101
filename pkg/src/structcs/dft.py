"""Discrete Fourier transform, cyclic convolution and time-frequency shifts.

All transforms use the unnormalized kernel ``F[j, k] = exp(+2*pi*i*j*k/n)``
with 0-based indices. Every function accepts either a single vector of
length ``n`` or a stack of vectors of shape ``(..., n)`` and acts on the
last axis.

The fast path is a vectorized radix-2 transform for powers of two and
Bluestein's chirp-z reduction for every other length. The naive ``O(n^2)``
path is kept as the reference oracle.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = [
    "DimensionError",
    "as_vector",
    "cyclic_sub",
    "dft",
    "idft",
    "dft_matrix",
    "circ_conv",
    "translate",
    "modulate",
]


class DimensionError(ValueError):
    """Operand shapes do not agree."""


def as_vector(x, *, name: str = "x") -> np.ndarray:
    """Return ``x`` as a finite complex128 array with a nonempty last axis."""
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim == 0 or arr.shape[-1] < 1:
        raise DimensionError(f"{name} must have length >= 1")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def cyclic_sub(j, k, n: int):
    """Cyclic subtraction ``j - k`` with residues in ``{0, ..., n-1}``."""
    return np.mod(np.subtract(j, k), n)


# ---------------------------------------------------------------------------
# fast transforms


def _pow2_transform(x: np.ndarray, sign: int) -> np.ndarray:
    n = x.shape[-1]
    if n == 1:
        return x.copy()
    n_min = min(n, 16)
    k = np.arange(n_min)
    small = np.exp(sign * 2j * np.pi * np.outer(k, k) / n_min)
    # rows j hold the decimated subsequences x[c::cols] laid out column-wise
    blocks = x.reshape(x.shape[:-1] + (n_min, n // n_min))
    out = small @ blocks
    while out.shape[-2] < n:
        half = out.shape[-1] // 2
        even = out[..., :half]
        odd = out[..., half:]
        size = out.shape[-2]
        twiddle = np.exp(sign * 1j * np.pi * np.arange(size) / size)[:, None]
        out = np.concatenate([even + twiddle * odd, even - twiddle * odd], axis=-2)
    return out.reshape(x.shape[:-1] + (n,))


@lru_cache(maxsize=64)
def _bluestein_plan(n: int, sign: int):
    size = 1 << (2 * n - 1).bit_length()
    k = np.arange(n)
    # k^2 mod 2n keeps the phase argument small for large n
    chirp = np.exp(sign * 1j * np.pi * ((k * k) % (2 * n)) / n)
    kernel = np.zeros(size, dtype=np.complex128)
    kernel[:n] = np.conj(chirp)
    if n > 1:
        kernel[size - n + 1 :] = np.conj(chirp[1:][::-1])
    kernel_hat = _pow2_transform(kernel, -1)
    chirp.setflags(write=False)
    kernel_hat.setflags(write=False)
    return size, chirp, kernel_hat


def _bluestein(x: np.ndarray, sign: int) -> np.ndarray:
    n = x.shape[-1]
    size, chirp, kernel_hat = _bluestein_plan(n, sign)
    padded = np.zeros(x.shape[:-1] + (size,), dtype=np.complex128)
    padded[..., :n] = x * chirp
    conv = _pow2_transform(_pow2_transform(padded, -1) * kernel_hat, +1) / size
    return conv[..., :n] * chirp


def _fast(x: np.ndarray, sign: int) -> np.ndarray:
    n = x.shape[-1]
    if n & (n - 1) == 0:
        return _pow2_transform(x, sign)
    return _bluestein(x, sign)


@lru_cache(maxsize=32)
def _kernel(n: int, sign: int) -> np.ndarray:
    k = np.arange(n)
    mat = np.exp(sign * 2j * np.pi * (np.outer(k, k) % n) / n)
    mat.setflags(write=False)
    return mat


def dft_matrix(n: int) -> np.ndarray:
    """Dense unnormalized DFT matrix ``exp(2*pi*i*j*k/n)``."""
    return _kernel(n, +1).copy()


def dft(x, method: str = "fft") -> np.ndarray:
    """Unnormalized forward transform ``X_j = sum_k exp(2*pi*i*j*k/n) x_k``.

    Parameters
    ----------
    x : array_like
        Vector or stack of vectors, transformed along the last axis.
    method : {"fft", "naive"}
        ``"fft"`` uses radix-2/Bluestein, ``"naive"`` the dense matrix.
    """
    x = as_vector(x)
    if method == "fft":
        return _fast(x, +1)
    if method == "naive":
        return x @ _kernel(x.shape[-1], +1).T
    raise ValueError(f"unknown method {method!r}")


def idft(X, method: str = "fft") -> np.ndarray:
    """Inverse of :func:`dft`, i.e. ``(1/n) * conj(F) @ X``."""
    X = as_vector(X, name="X")
    n = X.shape[-1]
    if method == "fft":
        return _fast(X, -1) / n
    if method == "naive":
        return X @ _kernel(n, -1).T / n
    raise ValueError(f"unknown method {method!r}")


def circ_conv(z, x, method: str = "fft") -> np.ndarray:
    """Cyclic convolution ``(z * x)_j = sum_k z[(j - k) mod n] x_k``."""
    z = as_vector(z, name="z")
    x = as_vector(x)
    if z.shape[-1] != x.shape[-1]:
        raise DimensionError(f"length mismatch: {z.shape[-1]} != {x.shape[-1]}")
    n = x.shape[-1]
    if method == "fft":
        return idft(dft(z) * dft(x))
    if method == "naive":
        idx = cyclic_sub(np.arange(n)[:, None], np.arange(n)[None, :], n)
        circulant = z[..., idx]
        return np.einsum("...jk,...k->...j", circulant, x)
    raise ValueError(f"unknown method {method!r}")


def translate(h, k: int) -> np.ndarray:
    """Cyclic shift ``(T^k h)_j = h[(j - k) mod m]``."""
    if k < 0:
        raise ValueError("shift must be nonnegative")
    h = as_vector(h, name="h")
    return np.roll(h, k % h.shape[-1], axis=-1)


def modulate(h, ell: int) -> np.ndarray:
    """Modulation ``(M^ell h)_j = exp(2*pi*i*ell*j/m) h_j``."""
    if ell < 0:
        raise ValueError("frequency must be nonnegative")
    h = as_vector(h, name="h")
    m = h.shape[-1]
    j = np.arange(m)
    return h * np.exp(2j * np.pi * ((ell * j) % m) / m)
