import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from structcs.dft import dft_matrix
from structcs.ensembles import (
    DenseOperator,
    GeneratorSpec,
    gabor_from_generator,
    partial_circulant,
    random_omega,
    random_sparse,
    subgaussian_dense,
)
from structcs.recovery import (
    SOLVERS,
    SUCCESS_TOL,
    RecoveryResult,
    basis_pursuit,
    hard_threshold,
    l1_certificate,
    omp,
    relative_error,
    soft_threshold,
    solve,
)
from structcs.rip import rip_exact

GREEDY = ["omp", "iht", "htp", "cosamp"]


def orthonormal_toy(n=8, m=8):
    q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((m, n)))
    return DenseOperator(q)


def planted(op, s, seed, complex_values=False):
    rng = np.random.default_rng(seed)
    x = random_sparse(op.n_cols, s, rng, complex_values=complex_values, unit=False).to_dense()
    return x, op.forward(x)


# -- thresholding --------------------------------------------------------------------


def test_hard_threshold_ties_prefer_low_index():
    np.testing.assert_array_equal(hard_threshold(np.array([1.0, -2.0, 2.0, 0.5]), 1), [0, -2.0, 0, 0])
    np.testing.assert_array_equal(hard_threshold(np.ones(4), 2), [1, 1, 0, 0])


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(1, 12), elements=st.floats(-10, 10)), st.data())
def test_hard_threshold_is_best_s_term(v, data):
    s = data.draw(st.integers(1, v.size))
    kept = np.linalg.norm(hard_threshold(v, s))
    best = max(np.linalg.norm(v[list(c)]) for c in itertools.combinations(range(v.size), s))
    assert kept >= best - 1e-12
    assert np.count_nonzero(hard_threshold(v, s)) <= s


def test_soft_threshold_keeps_phase():
    v = np.array([3 + 4j, 0.5, -2.0])
    out = soft_threshold(v, 1.0)
    np.testing.assert_allclose(out, [(3 + 4j) * 0.8, 0.0, -1.0])


# -- trivial inputs ---------------------------------------------------------------------


@pytest.mark.parametrize("name", list(SOLVERS))
def test_zero_measurement_gives_zero(name):
    op = subgaussian_dense(10, 20, GeneratorSpec("gaussian", 0, 200))
    res = solve(name, op, np.zeros(10), 3)
    assert res.converged and res.residual_norm == 0.0
    assert not np.any(res.estimate)
    if name == "iht":
        assert res.iterations == 1


@pytest.mark.parametrize("name", GREEDY)
def test_one_sparse_orthonormal_exact(name):
    op = orthonormal_toy()
    x = np.zeros(8)
    x[5] = -1.7
    res = solve(name, op, op.forward(x), 1)
    assert relative_error(res.estimate, x) <= 1e-12
    if name == "iht":
        assert res.iterations <= 2


def test_omp_single_atom_with_rip_precondition():
    op = subgaussian_dense(128, 20, GeneratorSpec("rademacher", 1, 128 * 20))
    assert rip_exact(op, 2).delta < 1 / 3
    for j in range(20):
        e = np.zeros(20)
        e[j] = 1.0
        res = omp(op, op.forward(e), 1)
        assert res.support == (j,)
        assert abs(res.estimate[j] - 1.0) <= 1e-8


@pytest.mark.parametrize("m", [2, 3, 4, 8])
def test_omp_one_sparse_fails_only_when_unidentifiable(m):
    # delta_1 = 0 makes every column a unit vector, but for tiny m two columns
    # can coincide up to sign and then no decoder can tell the supports apart
    n = 32
    for seed in range(20):
        op = partial_circulant(n, random_omega(n, m, seed), GeneratorSpec("rademacher", seed, n))
        cols = op.to_dense()
        j = seed % n
        x = np.zeros(n)
        x[j] = 1.0 + seed
        y = op.forward(x)
        corr = np.abs(cols.conj().T @ cols[:, j])
        corr[j] = 0.0
        twins = np.flatnonzero(np.isclose(corr, 1.0, atol=1e-12))
        if twins.size == 0:
            assert relative_error(omp(op, y, 1).estimate, x) <= SUCCESS_TOL
        else:
            k = twins[0]
            z = np.zeros(n, dtype=complex)
            z[k] = np.vdot(cols[:, k], y)
            np.testing.assert_allclose(op.forward(z), y, atol=1e-10)


def test_omp_two_sparse_matches_exhaustive_least_squares():
    op = subgaussian_dense(20, 40, GeneratorSpec("gaussian", 2, 800))
    a = op.to_dense()
    x, y = planted(op, 2, 3)
    best = min(itertools.combinations(range(40), 2),
               key=lambda c: np.linalg.norm(y - a[:, c] @ np.linalg.lstsq(a[:, c], y, rcond=None)[0]))
    res = omp(op, y, 2)
    assert res.support == best == tuple(np.flatnonzero(x))


def test_omp_flags_rank_deficiency():
    # two columns at angle 1e-13: the second selection makes the Gram singular
    near = np.array([1.0, 1e-13]) / np.linalg.norm([1.0, 1e-13])
    op = DenseOperator(np.column_stack([[1.0, 0.0], near]))
    res = omp(op, np.array([0.0, 1.0]), 2)
    assert not res.converged
    assert "rank deficient" in res.message
    assert abs(res.residual_norm - np.linalg.norm(np.array([0.0, 1.0]) - op.forward(res.estimate))) <= 1e-10


# -- planted recovery ---------------------------------------------------------------------


# unit-step IHT diverges at this aspect ratio (||Phi||^2 is about 6); it is
# covered by the circulant case below
@pytest.mark.parametrize("name", [n for n in SOLVERS if n != "iht"])
def test_planted_dense_recovery(name):
    op = subgaussian_dense(48, 96, GeneratorSpec("gaussian", 3, 48 * 96))
    x, y = planted(op, 4, 4)
    res = solve(name, op, y, 4, truth=x)
    assert relative_error(res.estimate, x) <= SUCCESS_TOL
    assert res.support_recovered


@pytest.mark.parametrize("name", list(SOLVERS))
def test_planted_circulant_recovery(name):
    n, m = 256, 80
    op = partial_circulant(n, random_omega(n, m, 5), GeneratorSpec("rademacher", 5, n))
    x, y = planted(op, 4, 5)
    kw = {"max_iters": 200} if name == "iht" else {}
    res = solve(name, op, y, 4, truth=x, **kw)
    assert relative_error(res.estimate, x) <= 1e-6


def test_planted_gabor_complex_omp():
    op = gabor_from_generator(16, GeneratorSpec("steinhaus", 6, 16))
    x, y = planted(op, 2, 6, complex_values=True)
    assert relative_error(omp(op, y, 2).estimate, x) <= SUCCESS_TOL


@pytest.mark.parametrize("name", list(SOLVERS))
def test_residual_consistency(name):
    op = partial_circulant(64, random_omega(64, 20, 7), GeneratorSpec("rademacher", 7, 64))
    x, y = planted(op, 5, 7)
    res = solve(name, op, y, 5)
    assert abs(res.residual_norm - np.linalg.norm(y - op.forward(res.estimate))) <= 1e-10


def test_iht_divergence_detector():
    a = np.random.default_rng(8).standard_normal((10, 20)) * 3.0
    op = DenseOperator(a)
    _, y = planted(op, 3, 8)
    res = solve("iht", op, y, 3, max_iters=500)
    assert not res.converged


# -- basis pursuit ---------------------------------------------------------------------------


def test_basis_pursuit_unitary():
    n = 16
    op = DenseOperator(dft_matrix(n) / np.sqrt(n))
    x0 = np.random.default_rng(9).standard_normal(n)
    res = basis_pursuit(op, op.forward(x0))
    assert res.converged
    assert relative_error(res.estimate, x0) <= 1e-5


@pytest.mark.parametrize("seed", range(5))
def test_basis_pursuit_certificate_and_agreement(seed):
    op = subgaussian_dense(40, 80, GeneratorSpec("gaussian", seed, 3200))
    x, y = planted(op, 4, seed)
    bp = basis_pursuit(op, y)
    assert bp.converged
    assert l1_certificate(op, bp.estimate, bp.dual) <= 1e-3
    assert relative_error(bp.estimate, omp(op, y, 4).estimate) <= 1e-3


def test_basis_pursuit_reports_nonconvergence():
    op = subgaussian_dense(40, 80, GeneratorSpec("gaussian", 1, 3200))
    _, y = planted(op, 4, 1)
    res = basis_pursuit(op, y, max_iters=5)
    assert not res.converged and "max_iters" in res.message


def test_result_json_roundtrip_fields():
    op = orthonormal_toy()
    res = omp(op, op.forward(np.eye(8)[2]), 1)
    assert isinstance(res, RecoveryResult)
    doc = res.to_json()
    assert '"converged": true' in doc and '"iterations": 1' in doc


def test_solver_argument_errors():
    op = orthonormal_toy()
    with pytest.raises(KeyError):
        solve("lasso", op, np.ones(8), 1)
    with pytest.raises(ValueError):
        omp(op, np.ones(8), 9)
    with pytest.raises(ValueError):
        omp(op, np.ones(7), 1)
