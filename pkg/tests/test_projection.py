import numpy as np
import pytest

from ich import DataError, DimensionReducer, fit_projection

from oracles import pca_eigh_oracle, svd_projection_oracle


def test_single_axis_variance():
    pts = np.array([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
    model = fit_projection(pts, "pca", 1)
    comp = model.components_[0]
    assert np.allclose(np.abs(comp), [1.0, 0.0], atol=1e-12)
    assert model.explained_variance_[0] == pytest.approx(1.0)  # var of {1,2,3}


def test_none_is_identity():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(6, 4))
    model = fit_projection(X, "none", 2)
    assert np.array_equal(model.transform(X), X)
    assert model.k_ == 4


def test_pca_matches_eigh_oracle():
    rng = np.random.default_rng(42)
    X = rng.normal(size=(10, 5))
    model = fit_projection(X, "pca", 5)
    comps, variances, _ = pca_eigh_oracle(X, 5)
    assert np.allclose(model.explained_variance_, variances, atol=1e-8)
    for i in range(5):
        dot = abs(float(model.components_[i] @ comps[i]))
        assert dot == pytest.approx(1.0, abs=1e-8)


def test_projection_matches_svd_oracle():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(8, 6))
    model = fit_projection(X, "pca", 3)
    projected = model.transform(X)
    oracle = svd_projection_oracle(X, 3)
    # sign per component is a convention; compare up to per-column sign
    for col in range(3):
        assert np.allclose(projected[:, col], oracle[:, col], atol=1e-8) or np.allclose(
            projected[:, col], -oracle[:, col], atol=1e-8
        )


def test_full_rank_projection_preserves_distances():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(7, 4))
    model = fit_projection(X, "pca", 4)
    projected = model.transform(X)
    for i in range(7):
        for j in range(7):
            d_orig = np.linalg.norm(X[i] - X[j])
            d_proj = np.linalg.norm(projected[i] - projected[j])
            assert d_proj == pytest.approx(d_orig, abs=1e-8)


def test_zero_variance_projects_to_origin():
    X = np.tile([2.0, -1.0, 3.0], (5, 1))
    model = fit_projection(X, "pca", 2)
    assert np.allclose(model.transform(X), 0.0, atol=1e-12)


def test_orthonormal_components():
    rng = np.random.default_rng(5)
    for method in ("pca", "truncated-svd"):
        X = rng.normal(size=(12, 9))
        model = fit_projection(X, method, 6)
        gram = model.components_ @ model.components_.T
        assert np.allclose(gram, np.eye(model.k_), atol=1e-8)


def test_variance_ordering_and_total():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(15, 6)) * np.array([5.0, 3.0, 2.0, 1.0, 0.5, 0.1])
    model = fit_projection(X, "pca", 6)
    ev = model.explained_variance_
    assert (np.diff(ev) <= 1e-12).all()
    assert ev.sum() == pytest.approx(X.var(axis=0, ddof=1).sum(), abs=1e-8)


def test_deterministic_and_sign_convention():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(10, 7))
    a = fit_projection(X, "pca", 4)
    b = fit_projection(X, "pca", 4)
    assert np.array_equal(a.components_, b.components_)
    assert np.array_equal(a.explained_variance_, b.explained_variance_)
    for comp in a.components_:
        assert comp[np.argmax(np.abs(comp))] > 0


def test_k_degrades_to_min():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(3, 10))
    model = fit_projection(X, "pca", 20)
    assert model.k_ == 3
    assert model.transform(X).shape == (3, 3)


def test_single_sample_projects_to_zero():
    X = np.array([[1.0, 2.0, 3.0]])
    model = fit_projection(X, "pca", 2)
    assert model.k_ == 1
    assert np.allclose(model.explained_variance_, 0.0)
    assert np.allclose(model.transform(X), 0.0)


def test_truncated_svd_skips_centering():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(6, 4)) + 10.0
    model = fit_projection(X, "truncated-svd", 2)
    assert model.mean_ is None
    _, _, vt = np.linalg.svd(X, full_matrices=False)
    for i in range(2):
        assert abs(float(model.components_[i] @ vt[i])) == pytest.approx(1.0, abs=1e-8)


def test_empty_fit_rejected():
    with pytest.raises(DataError):
        fit_projection(np.zeros((0, 3)), "pca", 2)


def test_dimension_mismatch_rejected():
    X = np.ones((4, 3))
    model = fit_projection(X, "pca", 2)
    with pytest.raises(DataError):
        model.transform(np.ones((2, 5)))


def test_json_roundtrip():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(5, 4))
    model = fit_projection(X, "pca", 2)
    clone = DimensionReducer.from_dict(model.to_dict())
    assert np.allclose(clone.transform(X), model.transform(X), atol=1e-12)


def test_sklearn_get_params():
    model = DimensionReducer(method="pca", n_components=7)
    assert model.get_params() == {"method": "pca", "n_components": 7}
