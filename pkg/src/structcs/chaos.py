"""Complexity parameters of V_x families, Dudley-integral surrogates for
gamma_2, empirical chaos suprema and Monte-Carlo decoupling checks.

Every analytic bound below carries an unspecified absolute constant; it is
exposed as a parameter (default 1) and comparisons against theory fit a
constant instead of asserting one.
"""

from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .ensembles import FamilyOperator, GeneratorSpec, Kind, sample_generator
from .seeding import STREAM_DECOUPLE, rng_for


class DivergentIntegralError(ArithmeticError):
    pass


_T_MAX = 80.0


class ProfileKind(str, enum.Enum):
    CIRCULANT = "circulant_volumetric_maurey"
    GABOR = "gabor_volumetric_maurey"
    SUBGAUSSIAN = "subgaussian_volumetric"
    CUSTOM = "custom"


def maurey_entropy(u, radius: float, log_cardinality: float, c: float = 1.0):
    """Covering bound for a convex hull: ``c (radius / u)^2 log N``."""
    u = np.asarray(u, dtype=float)
    return c * (radius / u) ** 2 * log_cardinality


@dataclass(frozen=True)
class CoveringProfile:
    """Upper bound ``u -> log N(A, ||.||_{2->2}, u)`` for a V_x family.

    ``diameter`` is the operator-norm radius of the family, i.e. the natural
    upper limit of the entropy integral.
    """

    kind: ProfileKind
    s: int
    n: int
    m: int
    c: float = 1.0
    evaluator_fn: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)
    diameter_value: float | None = None

    @property
    def diameter(self) -> float:
        if self.diameter_value is not None:
            return self.diameter_value
        if self.kind is ProfileKind.SUBGAUSSIAN:
            return 1.0 / math.sqrt(self.m)
        return math.sqrt(self.s / self.m)

    def volumetric(self, u):
        u = np.asarray(u, dtype=float)
        s, n, m, c = self.s, self.n, self.m, self.c
        if self.kind is ProfileKind.CIRCULANT:
            return np.maximum(c * s * np.log(math.e * n / (s * u)), 0.0)
        if self.kind is ProfileKind.GABOR:
            return c * s * (math.log(math.e * m * m / s) + np.log(3.0 * math.sqrt(s / m) / u))
        if self.kind is ProfileKind.SUBGAUSSIAN:
            # N(D_{s,n}, ||.||_2 / sqrt(m), u) <= (en/s)^s (1 + 2/(sqrt(m) u))^s
            return c * s * (math.log(math.e * n / s) + np.log1p(2.0 / (math.sqrt(m) * u)))
        raise ValueError("custom profiles have no volumetric branch")

    def maurey(self, u):
        s, n, m = self.s, self.n, self.m
        if self.kind is ProfileKind.CIRCULANT:
            # A = sqrt(s/m) sqrt(log n) for the 4n signed/rotated basis vectors
            return maurey_entropy(u, math.sqrt(s / m * math.log(n)), math.log(n), self.c)
        if self.kind is ProfileKind.GABOR:
            return self.c * s * math.log(m) ** 2 / (m * np.asarray(u, dtype=float) ** 2)
        return np.full(np.shape(u), np.inf)

    def evaluator(self, u):
        if self.kind is ProfileKind.CUSTOM:
            return np.asarray(self.evaluator_fn(np.asarray(u, dtype=float)), dtype=float)
        return np.minimum(self.volumetric(u), self.maurey(u))


def circulant_profile(s: int, n: int, m: int, c: float = 1.0) -> CoveringProfile:
    return CoveringProfile(ProfileKind.CIRCULANT, s, n, m, c)


def gabor_profile(s: int, m: int, c: float = 1.0) -> CoveringProfile:
    return CoveringProfile(ProfileKind.GABOR, s, m * m, m, c)


def subgaussian_profile(s: int, n: int, m: int, c: float = 1.0) -> CoveringProfile:
    return CoveringProfile(ProfileKind.SUBGAUSSIAN, s, n, m, c)


def custom_profile(evaluator: Callable, diameter: float) -> CoveringProfile:
    return CoveringProfile(ProfileKind.CUSTOM, 0, 0, 0, evaluator_fn=evaluator, diameter_value=diameter)


def dudley_bound(profile: CoveringProfile, upper_limit: float | None = None,
                 rtol: float = 1e-9) -> float:
    """``int_0^upper sqrt(log N(u)) du`` with the Dudley constant set to 1.

    The substitution ``u = upper * exp(-t)`` maps the singular endpoint to
    ``t -> inf``. The transformed integrand is checked to be negligible at
    ``t = 80`` (otherwise the profile is treated as divergent) and the range
    ``[0, 80]`` goes to adaptive Gauss-Kronrod quadrature.
    """
    upper = profile.diameter if upper_limit is None else upper_limit
    if not upper > 0:
        raise ValueError("upper limit must be positive")

    def integrand(t):
        u = upper * math.exp(-t)
        val = float(profile.evaluator(u))
        return math.sqrt(max(val, 0.0)) * u

    # sqrt(log N) grows like sqrt(log 1/u) for integrable profiles, so the
    # transformed integrand decays like sqrt(t) exp(-t)
    head = max(integrand(0.0), integrand(1.0), 1e-300)
    far = integrand(_T_MAX)
    if not math.isfinite(far) or far > 1e-20 * head:
        raise DivergentIntegralError("entropy integrand does not decay at u -> 0")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(integrand, 0.0, _T_MAX, epsabs=0.0, epsrel=rtol, limit=1000)
    if not math.isfinite(val) or err > 1e-6 * abs(val):
        raise DivergentIntegralError(f"quadrature failed (value {val}, error {err})")
    return float(val)


def volumetric_integral_constant(rtol: float = 1e-9) -> float:
    """``int_0^1 sqrt(log(1 + 2/u)) du`` evaluated with :func:`dudley_bound`."""
    prof = custom_profile(lambda u: np.log1p(2.0 / u), 1.0)
    return dudley_bound(prof, 1.0, rtol=rtol)


def subgaussian_closed_form(s: int, n: int, m: int) -> float:
    """``sqrt(s/m) (sqrt(log(e n / s)) + I0)`` dominating the subgaussian integral."""
    return math.sqrt(s / m) * (math.sqrt(math.log(math.e * n / s)) + volumetric_integral_constant())


def radii(kind: Kind | str, s: int, m: int, n: int | None = None) -> tuple[float, float]:
    """``(d_F, d_op)`` of ``{V_x : x in D_{s,n}}``; d_op is an upper bound
    for the structured families and exact for the subgaussian one."""
    kind = Kind(kind)
    if kind in (Kind.PARTIAL_CIRCULANT, Kind.GABOR_SYNTHESIS):
        return 1.0, math.sqrt(s / m)
    if kind is Kind.SUBGAUSSIAN_DENSE:
        return 1.0, 1.0 / math.sqrt(m)
    raise ValueError(f"no radii for kind {kind.value}")


def theory_bounds(d_f: float, d_op: float, gamma2: float) -> tuple[float, float, float]:
    """``E = g(g + d_F) + d_F d_op``, ``V = d_op (g + d_F)``, ``U = d_op^2``."""
    if min(d_f, d_op, gamma2) < 0:
        raise ValueError("inputs must be nonnegative")
    e = gamma2 * (gamma2 + d_f) + d_f * d_op
    v = d_op * (gamma2 + d_f)
    u = d_op**2
    return e, v, u


@dataclass
class ChaosProfile:
    d_f: float
    d_op: float
    gamma2_dudley: float
    E: float
    V: float
    U: float
    empirical_samples: list[float] = field(default_factory=list)

    @classmethod
    def build(cls, d_f: float, d_op: float, gamma2: float, samples=()) -> "ChaosProfile":
        e, v, u = theory_bounds(d_f, d_op, gamma2)
        return cls(d_f, d_op, gamma2, e, v, u, [float(x) for x in samples])

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def chaos_profile(kind: Kind | str, s: int, m: int, n: int | None = None, c: float = 1.0,
                  samples=()) -> ChaosProfile:
    kind = Kind(kind)
    d_f, d_op = radii(kind, s, m, n)
    if kind is Kind.PARTIAL_CIRCULANT:
        prof = circulant_profile(s, n, m, c)
    elif kind is Kind.GABOR_SYNTHESIS:
        prof = gabor_profile(s, m, c)
    else:
        prof = subgaussian_profile(s, n, m, c)
    return ChaosProfile.build(d_f, d_op, dudley_bound(prof), samples)


# ---------------------------------------------------------------------------
# Monte Carlo


def empirical_chaos_supremum(family: Sequence[FamilyOperator], spec: GeneratorSpec,
                             draws: int) -> np.ndarray:
    """``max_A | ||A xi||^2 - ||A||_F^2 |`` over a finite family for each draw.

    Draw d uses ``sample_generator(spec.child(d))``. The result is a lower
    bound on the full chaos supremum for that draw.
    """
    if not family:
        raise ValueError("family must be nonempty")
    if draws < 1:
        raise ValueError("draws must be >= 1")
    dim = family[0].n_in
    if any(a.n_in != dim for a in family):
        raise ValueError("family members act on different generator lengths")
    spec = spec.with_length(dim)
    xis = np.stack([sample_generator(spec.child(d)) for d in range(draws)])
    fro2 = np.array([a.frobenius_norm() ** 2 for a in family])
    out = np.zeros(draws)
    for a, f2 in zip(family, fro2):
        vals = np.abs(np.sum(np.abs(a.forward(xis)) ** 2, axis=-1) - f2)
        np.maximum(out, vals, out=out)
    return out


@dataclass
class DecouplingResult:
    lhs: float
    rhs: float
    se_lhs: float
    se_rhs: float
    passed: bool

    def csv_row(self) -> str:
        return f"{self.lhs!r},{self.rhs!r},{self.se_lhs!r},{self.se_rhs!r},{str(self.passed).lower()}"

    def __iter__(self):
        return iter((self.lhs, self.rhs, self.passed))


def _stack_family(b_family) -> np.ndarray:
    if len(b_family) == 0:
        return np.zeros((0, 0, 0), dtype=np.complex128)
    fam = np.stack([np.asarray(b, dtype=np.complex128) for b in b_family])
    if fam.ndim != 3 or fam.shape[1] != fam.shape[2]:
        raise ValueError("family must consist of square matrices of one size")
    return fam


def _draw(rng, dist: str, shape) -> np.ndarray:
    if dist == "rademacher":
        return 2.0 * rng.integers(0, 2, size=shape) - 1.0
    if dist == "gaussian":
        return rng.standard_normal(shape)
    if dist == "steinhaus":
        return np.exp(2j * np.pi * rng.random(shape))
    raise ValueError(f"unknown distribution {dist!r}")


def _sup_forms(fam, a, b) -> np.ndarray:
    # sup_B | sum_{jk} conj(a_j) b_k B_jk |
    return np.abs(np.einsum("tj,fjk,tk->tf", np.conj(a), fam, b, optimize=True)).max(axis=1)


def decoupling_check(b_family, distribution: str = "rademacher", trials: int = 10**5,
                     seed: int = 0, chunk: int = 8192) -> DecouplingResult:
    """Monte-Carlo check of ``E sup|sum_{j!=k} xi_j xi_k B_jk| <= E sup|4 sum xi_j xi'_k B_jk|``.

    Passes when the left mean exceeds the right mean by less than three
    combined standard errors.
    """
    fam = _stack_family(b_family)
    if fam.shape[0] == 0 or not np.any(fam):
        return DecouplingResult(0.0, 0.0, 0.0, 0.0, True)
    if trials < 1000:
        raise ValueError("trials must be >= 1000")
    if np.any(np.abs(np.diagonal(fam, axis1=1, axis2=2)) > 0):
        raise ValueError("decoupling_check needs zero-diagonal matrices; use decoupling_check_gaussian")
    dist = str(getattr(distribution, "value", distribution))
    n = fam.shape[1]
    lhs_sum = lhs_sq = rhs_sum = rhs_sq = 0.0
    for i, start in enumerate(range(0, trials, chunk)):
        t = min(chunk, trials - start)
        rng = rng_for(seed, STREAM_DECOUPLE, i)
        xi = _draw(rng, dist, (t, n))
        xi2 = _draw(rng, dist, (t, n))
        lhs = _sup_forms(fam, xi, xi)
        rhs = 4.0 * _sup_forms(fam, xi, xi2)
        lhs_sum += lhs.sum()
        lhs_sq += (lhs**2).sum()
        rhs_sum += rhs.sum()
        rhs_sq += (rhs**2).sum()
    lm, rm = lhs_sum / trials, rhs_sum / trials
    se_l = math.sqrt(max(lhs_sq / trials - lm**2, 0.0) / trials)
    se_r = math.sqrt(max(rhs_sq / trials - rm**2, 0.0) / trials)
    passed = lm <= rm + 3.0 * math.hypot(se_l, se_r)
    return DecouplingResult(lm, rm, se_l, se_r, passed)


def decoupling_exact_rademacher(b_family) -> tuple[float, float]:
    """Both sides of the decoupling inequality by enumerating all sign patterns."""
    fam = _stack_family(b_family)
    if fam.shape[0] == 0:
        return 0.0, 0.0
    n = fam.shape[1]
    if n > 10:
        raise ValueError("exhaustive enumeration limited to n <= 10")
    signs = 1.0 - 2.0 * ((np.arange(2**n)[:, None] >> np.arange(n)) & 1)
    off = fam * (1 - np.eye(n))
    lhs = _sup_forms(off, signs, signs).mean()
    pairs_a = np.repeat(signs, 2**n, axis=0)
    pairs_b = np.tile(signs, (2**n, 1))
    rhs = 4.0 * _sup_forms(fam, pairs_a, pairs_b).mean()
    return float(lhs), float(rhs)


def decoupling_check_gaussian(b_family, trials: int = 10**5, p: int = 1, c_test: float = 8.0,
                              seed: int = 0, chunk: int = 8192) -> DecouplingResult:
    """Gaussian decoupling with diagonal term, compared in L_p norm.

    Left side ``sup_B |g^T B g - tr B|``, right side ``sup_B |g^T B g'|``;
    both are returned as ``(E |.|^p)^{1/p}`` and the check passes when
    ``lhs <= c_test * rhs``. The sharp constant is not known, so this is a
    sanity monitor rather than a proof of the inequality.
    """
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    fam = _stack_family(b_family)
    if fam.shape[0] == 0 or not np.any(fam):
        return DecouplingResult(0.0, 0.0, 0.0, 0.0, True)
    if not np.allclose(fam, np.conj(np.swapaxes(fam, 1, 2))):
        raise ValueError("decoupling_check_gaussian needs Hermitian matrices")
    n = fam.shape[1]
    traces = np.real(np.trace(fam, axis1=1, axis2=2))
    lhs_acc, rhs_acc = [], []
    for i, start in enumerate(range(0, trials, chunk)):
        t = min(chunk, trials - start)
        rng = rng_for(seed, STREAM_DECOUPLE, i)
        g = rng.standard_normal((t, n))
        g2 = rng.standard_normal((t, n))
        quad = np.real(np.einsum("tj,fjk,tk->tf", g, fam, g, optimize=True)) - traces
        lhs_acc.append(np.abs(quad).max(axis=1) ** p)
        rhs_acc.append(_sup_forms(fam, g, g2) ** p)
    lhs = np.concatenate(lhs_acc)
    rhs = np.concatenate(rhs_acc)
    lm, rm = lhs.mean(), rhs.mean()
    se_l = lhs.std() / math.sqrt(trials)
    se_r = rhs.std() / math.sqrt(trials)
    # delta method for the p-th root
    lnorm, rnorm = lm ** (1 / p), rm ** (1 / p)
    se_l = se_l * lnorm / (p * lm) if lm > 0 else 0.0
    se_r = se_r * rnorm / (p * rm) if rm > 0 else 0.0
    return DecouplingResult(lnorm, rnorm, se_l, se_r, lnorm <= c_test * rnorm)
