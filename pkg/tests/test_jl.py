import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from structcs.dft import DimensionError
from structcs.jl import PointSet, distortion, jl_embed, jl_map


def cloud(p=8, n=64, seed=0, complex_values=False):
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((p, n))
    if complex_values:
        pts = pts + 1j * rng.standard_normal((p, n))
    return PointSet(pts)


def test_zero_vector_maps_to_zero():
    emb = jl_embed(PointSet(np.zeros((1, 32))), 8, 1, 2)
    np.testing.assert_array_equal(emb.points, 0.0)


def test_embedding_is_linear():
    a, b = cloud(seed=1).points, cloud(seed=2).points
    ea = jl_embed(PointSet(a), 16, 3, 4).points
    eb = jl_embed(PointSet(b), 16, 3, 4).points
    eab = jl_embed(PointSet(a + b), 16, 3, 4).points
    np.testing.assert_allclose(eab, ea + eb, atol=1e-10)


def test_embedding_matches_explicit_matrix():
    jmap = jl_map(32, 8, 5, 6)
    mat = jmap.phi.to_dense() @ np.diag(jmap.signs)
    x = cloud(n=32, seed=3).points
    np.testing.assert_allclose(jmap.apply(x), x @ mat.T, atol=1e-12)


def test_default_omega_contiguous_and_override():
    assert list(jl_map(32, 8, 1, 2).phi.omega) == list(range(8))
    assert list(jl_map(32, 3, 1, 2, omega=[4, 9, 30]).phi.omega) == [4, 9, 30]


def test_real_input_gives_real_output_and_complex_allowed():
    assert not np.iscomplexobj(jl_embed(cloud(), 16, 1, 2).points)
    emb = jl_embed(cloud(complex_values=True), 16, 1, 2)
    assert np.iscomplexobj(emb.points)


def test_sign_and_phi_streams_are_independent():
    jmap = jl_map(64, 16, 7, 7)
    assert not np.array_equal(jmap.phi.xi.real, jmap.signs)


def test_determinism_across_runs_and_threads():
    pts = cloud(p=300, n=128, seed=4)
    a = jl_embed(pts, 32, 11, 12, threads=1)
    b = jl_embed(pts, 32, 11, 12, threads=8, chunk=16)
    c = jl_embed(pts, 32, 11, 12, threads=1)
    assert a.points.tobytes() == b.points.tobytes() == c.points.tobytes()


def test_validation():
    with pytest.raises(ValueError):
        jl_map(16, 17, 1, 2)
    with pytest.raises(DimensionError):
        PointSet(np.zeros(4))
    with pytest.raises(ValueError):
        PointSet(np.array([[np.inf]]))


# -- distortion -------------------------------------------------------------------------


def test_distortion_identity_and_scaled():
    e = cloud()
    assert distortion(e, e) == 0.0
    single = PointSet(np.array([[1.0, 2.0]]))
    assert distortion(single, PointSet(np.sqrt(2) * single.points)) == pytest.approx(1.0, rel=1e-15)


def test_distortion_skips_zero_points_and_rejects_all_zero():
    e = PointSet(np.array([[0.0, 0.0], [3.0, 4.0]]))
    assert distortion(e, PointSet(np.array([[0.0, 0.0], [3.0, 4.0]]))) == 0.0
    with pytest.raises(ValueError):
        distortion(PointSet(np.zeros((2, 2))), PointSet(np.zeros((2, 2))))
    with pytest.raises(DimensionError):
        distortion(e, PointSet(np.zeros((3, 2))))


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-3, 1e3) | st.floats(-1e3, -1e-3), st.integers(0, 1000))
def test_distortion_scale_invariant(c, seed):
    e = cloud(p=5, n=32, seed=seed)
    d1 = distortion(e, jl_embed(e, 8, seed, seed + 1))
    ce = PointSet(c * e.points)
    d2 = distortion(ce, jl_embed(ce, 8, seed, seed + 1))
    assert d2 == pytest.approx(d1, rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("j", [0, 5, 63])
def test_basis_vector_has_zero_distortion(j):
    e = PointSet(np.eye(64)[[j]])
    assert distortion(e, jl_embed(e, 16, 3, 9)) <= 1e-14


def test_median_distortion_improves_with_m():
    n, p = 512, 32
    meds = {}
    clouds = [cloud(p, n, seed=100 + t) for t in range(20)]
    for m in (64, 256):
        meds[m] = np.median([distortion(c, jl_embed(c, m, t, 1000 + t)) for t, c in enumerate(clouds)])
    assert meds[256] < meds[64]


# -- IO ----------------------------------------------------------------------------------


@pytest.mark.parametrize("complex_values", [False, True])
def test_csv_and_json_roundtrip(complex_values, tmp_path):
    e = cloud(p=4, n=6, seed=5, complex_values=complex_values)
    e.labels = [f"p{i}" for i in range(4)]
    text = e.to_csv()
    assert text.splitlines()[0].startswith("dim=6")
    back = PointSet.from_csv(text)
    np.testing.assert_array_equal(back.points, e.points)
    assert back.labels == e.labels
    path = tmp_path / "pts.csv"
    e.to_csv(path)
    np.testing.assert_array_equal(PointSet.from_csv(path).points, e.points)
    again = PointSet.from_json(e.to_json())
    np.testing.assert_array_equal(again.points, e.points)


def test_csv_requires_header():
    with pytest.raises(ValueError):
        PointSet.from_csv("1,2\n3,4\n")
