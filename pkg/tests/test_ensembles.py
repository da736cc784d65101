import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from structcs.dft import DimensionError, dft, modulate, translate
from structcs.ensembles import (
    ConstructionError,
    Distribution,
    GeneratorSpec,
    Kind,
    SparseVector,
    family_for,
    family_operator,
    gabor_from_generator,
    gabor_synthesis,
    generator_for_family,
    operator_from_json,
    partial_circulant,
    random_omega,
    random_sparse,
    sample_generator,
    strided_omega,
    subgaussian_dense,
    time_frequency_shift,
)
from structcs.seeding import derive_seed, rng_for, splitmix64


def rand_c(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


ALL_DIST = [d.value for d in Distribution]


def make_ops(seed=0):
    return [
        partial_circulant(24, random_omega(24, 9, seed), GeneratorSpec("rademacher", seed, 24)),
        partial_circulant(20, [0, 3, 7, 19], GeneratorSpec("steinhaus", seed, 20)),
        gabor_from_generator(6, GeneratorSpec("steinhaus", seed, 6)),
        subgaussian_dense(7, 15, GeneratorSpec("gaussian", seed, 105)),
    ]


# -- seeding ------------------------------------------------------------------


def test_splitmix64_reference_values():
    # first outputs of the reference generator seeded with 0; splitmix64(state)
    # advances the state by the golden-ratio increment before mixing
    outs = [splitmix64(i * 0x9E3779B97F4A7C15 % 2**64) for i in range(3)]
    assert outs[0] == 0xE220A8397B1DCDAF
    assert outs[1] == 0x6E789E6AA1B965F4
    assert outs[2] == 0x06C45D188009454F


def test_derive_seed_distinct_streams_and_draws():
    seeds = {derive_seed(7, s, d) for s in range(11) for d in range(50)}
    assert len(seeds) == 11 * 50
    assert derive_seed(7, 1, 2) == derive_seed(7, 1, 2)


# -- generators ----------------------------------------------------------------


@pytest.mark.parametrize("dist", ALL_DIST)
def test_sample_generator_deterministic(dist):
    spec = GeneratorSpec(dist, 123, 50)
    np.testing.assert_array_equal(sample_generator(spec), sample_generator(spec))
    assert not np.array_equal(sample_generator(spec), sample_generator(spec.child(1)))


def test_rademacher_values_and_mean():
    xi = sample_generator(GeneratorSpec("rademacher", 5, 10**4))
    assert set(np.unique(xi.real)) <= {-1.0, 1.0}
    assert np.all(xi.imag == 0)
    assert -0.05 <= xi.real.mean() <= 0.05


def test_steinhaus_unimodular():
    xi = sample_generator(GeneratorSpec("steinhaus", 5, 10**3))
    assert np.max(np.abs(np.abs(xi) - 1.0)) <= 1e-12


def test_gaussian_moments():
    xi = sample_generator(GeneratorSpec("gaussian", 5, 10**5)).real
    assert abs(xi.mean()) < 0.02 and abs(xi.var() - 1.0) < 0.02


def test_generator_spec_validation_and_roundtrip():
    with pytest.raises(ValueError):
        GeneratorSpec("rademacher", 0, 0)
    with pytest.raises(ValueError):
        GeneratorSpec("cauchy", 0, 3)
    spec = GeneratorSpec("gaussian", 9, 4, draw=3)
    assert GeneratorSpec.from_dict(spec.to_dict()) == spec


# -- partial circulant ---------------------------------------------------------


@pytest.mark.parametrize("n, m", [(8, 3), (17, 17), (64, 16)])
def test_circulant_unit_columns(n, m):
    op = partial_circulant(n, random_omega(n, m, 1), GeneratorSpec("rademacher", 1, n))
    np.testing.assert_allclose(np.linalg.norm(op.to_dense(), axis=0), 1.0, atol=1e-14)


def test_circulant_forward_on_e0():
    n, omega = 10, [1, 4, 5, 9]
    op = partial_circulant(n, omega, GeneratorSpec("gaussian", 2, n))
    xi = sample_generator(GeneratorSpec("gaussian", 2, n))
    e0 = np.zeros(n)
    e0[0] = 1
    np.testing.assert_allclose(op.forward(e0), xi[omega] / np.sqrt(len(omega)), atol=1e-14)


def test_circulant_matches_brute_matrix():
    n, omega = 9, [0, 2, 3, 8]
    spec = GeneratorSpec("gaussian", 3, n)
    op = partial_circulant(n, omega, spec)
    xi = sample_generator(spec)
    full = np.array([[xi[(j - k) % n] for k in range(n)] for j in range(n)])
    np.testing.assert_allclose(op.to_dense(), full[omega] / 2.0, atol=1e-13)


def test_circulant_full_omega_isotropy():
    n = 16
    x = rand_c(np.random.default_rng(4), n)
    vals = [
        np.linalg.norm(partial_circulant(n, np.arange(n), GeneratorSpec("rademacher", 11, n, draw=d)).forward(x)) ** 2
        for d in range(1000)
    ]
    assert abs(np.mean(vals) / np.linalg.norm(x) ** 2 - 1.0) <= 0.05


@pytest.mark.parametrize("omega", [[], [0, 0], [-1], [10]])
def test_circulant_rejects_bad_omega(omega):
    with pytest.raises(ConstructionError):
        partial_circulant(10, omega, GeneratorSpec("rademacher", 0, 10))


def test_fft_path_equals_naive_path():
    rng = np.random.default_rng(5)
    for n in (5, 33, 128, 300, 512):
        op = partial_circulant(n, random_omega(n, max(1, n // 3), n), GeneratorSpec("gaussian", n, n))
        x = rand_c(rng, n)
        a, b = op.forward(x), op.forward_naive(x)
        assert np.linalg.norm(a - b) <= 1e-10 * np.linalg.norm(b)


def test_omega_helpers():
    np.testing.assert_array_equal(strided_omega(12, 4), [0, 3, 6, 9])
    np.testing.assert_array_equal(random_omega(30, 7, 3), random_omega(30, 7, 3))
    with pytest.raises(ConstructionError):
        strided_omega(12, 4, stride=6)


# -- gabor ---------------------------------------------------------------------


def test_gabor_column_ordering_and_norms():
    m = 5
    h = rand_c(np.random.default_rng(6), m)
    op = gabor_synthesis(m, h)
    dense = op.to_dense()
    assert dense.shape == (m, m * m)
    for k in range(m):
        for ell in range(m):
            np.testing.assert_allclose(dense[:, k + ell * m], modulate(translate(h, k), ell), atol=1e-13)
    np.testing.assert_allclose(np.linalg.norm(dense, axis=0), np.linalg.norm(h), rtol=1e-13)


def test_gabor_zero_shift_column_is_window():
    h = np.array([0.3 + 1j, -2.0])
    np.testing.assert_allclose(gabor_synthesis(2, h).to_dense()[:, 0], h, atol=1e-15)


def test_gabor_window_length_checked():
    with pytest.raises(ConstructionError):
        gabor_synthesis(4, np.ones(3))


@pytest.mark.parametrize("dist", ALL_DIST)
def test_gabor_synthesis_equals_family_product(dist):
    m, s = 8, 5
    spec = GeneratorSpec(dist, 8, m)
    op = gabor_from_generator(m, spec)
    rng = np.random.default_rng(7)
    for _ in range(5):
        x = random_sparse(m * m, s, rng, complex_values=True)
        v = family_for(op, x)
        np.testing.assert_allclose(op.forward(x.to_dense()), v.forward(generator_for_family(op)), atol=1e-10)


def test_time_frequency_orthonormality_small():
    m = 4
    mats = [time_frequency_shift(m, k, ell) for ell in range(m) for k in range(m)]
    gram = np.array([[np.trace(a.conj().T @ b) / m for b in mats] for a in mats])
    np.testing.assert_allclose(gram, np.eye(m * m), atol=1e-12)


# -- subgaussian ---------------------------------------------------------------


def test_subgaussian_shape_entries_determinism():
    spec = GeneratorSpec("rademacher", 1, 12)
    op = subgaussian_dense(3, 4, spec)
    dense = op.to_dense()
    assert dense.shape == (3, 4)
    np.testing.assert_allclose(np.abs(dense), 1 / np.sqrt(3), atol=1e-15)
    np.testing.assert_array_equal(dense, subgaussian_dense(3, 4, spec).to_dense())


def test_subgaussian_isotropy():
    x = rand_c(np.random.default_rng(8), 10)
    vals = [np.linalg.norm(subgaussian_dense(6, 10, GeneratorSpec("gaussian", 2, 60, draw=d)).forward(x)) ** 2
            for d in range(10**4)]
    assert abs(np.mean(vals) / np.linalg.norm(x) ** 2 - 1.0) <= 0.05


# -- shared operator properties ------------------------------------------------


@pytest.mark.parametrize("op", make_ops(), ids=lambda o: o.kind.value)
def test_adjoint_consistency(op):
    rng = np.random.default_rng(9)
    for _ in range(10):
        x, y = rand_c(rng, op.n_cols), rand_c(rng, op.n_rows)
        lhs = np.vdot(y, op.forward(x))
        rhs = np.vdot(op.adjoint(y), x)
        assert abs(lhs - rhs) <= 1e-10 * np.linalg.norm(x) * np.linalg.norm(y)


@pytest.mark.parametrize("op", make_ops(), ids=lambda o: o.kind.value)
def test_batched_forward_matches_rows(op):
    xs = rand_c(np.random.default_rng(10), 3, op.n_cols)
    out = op.forward(xs)
    for i in range(3):
        np.testing.assert_allclose(out[i], op.forward(xs[i]), atol=1e-12)


@pytest.mark.parametrize("op", make_ops(), ids=lambda o: o.kind.value)
def test_json_roundtrip_rederives_payload(op):
    meta = json.loads(op.to_json())
    assert meta["kind"] == op.kind.value
    again = operator_from_json(op.to_json())
    np.testing.assert_array_equal(again.to_dense(), op.to_dense())


@pytest.mark.parametrize("op", make_ops(), ids=lambda o: o.kind.value)
def test_norm_estimate_matches_svd(op):
    assert abs(op.norm_estimate() - np.linalg.norm(op.to_dense(), 2)) <= 1e-6


def test_operator_dimension_checks():
    op = make_ops()[0]
    with pytest.raises(DimensionError):
        op.forward(np.ones(op.n_cols + 1))


# -- sparse vectors -------------------------------------------------------------


def test_sparse_vector_invariants():
    x = SparseVector(6, (1, 4), (2.0, -1j))
    assert x.nnz == 2
    np.testing.assert_array_equal(SparseVector.from_dense(x.to_dense()).to_dense(), x.to_dense())
    with pytest.raises(ValueError):
        SparseVector(6, (4, 1), (1, 1))
    with pytest.raises(ValueError):
        SparseVector(6, (1,), (1, 2))
    with pytest.raises(ValueError):
        SparseVector(3, (3,), (1,))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 50).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n), st.integers(0, 2**32))))
def test_random_sparse_support_size(args):
    n, s, seed = args
    x = random_sparse(n, s, np.random.default_rng(seed))
    assert x.nnz == s and np.isclose(x.norm(), 1.0)


# -- V_x families --------------------------------------------------------------


def _circ_family(n=64, m=16, s=4, seed=0, dist="rademacher"):
    op = partial_circulant(n, random_omega(n, m, seed), GeneratorSpec(dist, seed, n))
    x = random_sparse(n, s, np.random.default_rng(seed))
    return op, x, family_for(op, x)


@pytest.mark.parametrize("dist", ALL_DIST)
def test_circulant_family_reproduces_operator(dist):
    op, x, v = _circ_family(dist=dist)
    np.testing.assert_allclose(v.forward(generator_for_family(op)), op.forward(x.to_dense()), atol=1e-12)


def test_circulant_family_frobenius_is_l2():
    op, x, v = _circ_family()
    assert np.isclose(np.linalg.norm(v.to_dense()), x.norm(), rtol=1e-12)
    assert np.isclose(v.frobenius_norm(), x.norm(), rtol=1e-14)


def test_gabor_family_frobenius_is_l2():
    m = 6
    x = random_sparse(m * m, 5, np.random.default_rng(1), complex_values=True, unit=False)
    v = family_operator(Kind.GABOR_SYNTHESIS, x, m=m)
    assert np.isclose(np.linalg.norm(v.to_dense()), x.norm(), rtol=1e-12)


def test_subgaussian_family_block_structure():
    m, n = 3, 5
    spec = GeneratorSpec("gaussian", 4, m * n)
    op = subgaussian_dense(m, n, spec)
    x = random_sparse(n, 2, np.random.default_rng(2))
    v = family_for(op, x)
    dense = v.to_dense()
    assert dense.shape == (m, m * n)
    np.testing.assert_allclose(v.forward(generator_for_family(op)), op.forward(x.to_dense()), atol=1e-13)
    np.testing.assert_allclose(np.linalg.norm(dense, 2), x.norm() / np.sqrt(m), rtol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_circulant_operator_norm_bounded_by_fourier_peak(seed):
    _, x, v = _circ_family(seed=seed)
    exact = np.linalg.norm(v.to_dense(), 2)
    assert abs(v.operator_norm() - exact) <= 1e-6
    assert exact <= v.operator_norm_bound() + 1e-12
    assert np.isclose(v.operator_norm_bound(), np.max(np.abs(dft(x.to_dense()))) / 4.0)


@pytest.mark.parametrize("seed", range(5))
def test_circulant_operator_norm_equality_on_full_row_set(seed):
    n = 32
    op = partial_circulant(n, np.arange(n), GeneratorSpec("rademacher", seed, n))
    x = random_sparse(n, 4, np.random.default_rng(seed))
    v = family_for(op, x)
    assert abs(v.operator_norm() - v.operator_norm_bound()) <= 1e-6


def test_family_dimension_errors():
    x = SparseVector(8, (1,), (1.0,))
    with pytest.raises(DimensionError):
        family_operator(Kind.PARTIAL_CIRCULANT, x, omega=[0, 9])
    with pytest.raises(ValueError):
        family_operator(Kind.GABOR_SYNTHESIS, x)
