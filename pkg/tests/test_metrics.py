import numpy as np
import pytest

from ich import (
    ClusterAssignment,
    ContingencyTable,
    DataError,
    contingency_table,
    homogeneity,
    majority_confusion,
    nearest_neighbor_assign,
    pairwise_distances,
    silhouette_report,
)

from oracles import (
    homogeneity_oracle,
    majority_confusion_oracle,
    nearest_neighbor_oracle,
    silhouette_oracle,
)


def assignment_for(labels):
    labels = np.asarray(labels)
    return ClusterAssignment(np.arange(labels.size), labels, int(labels.max()) + 1)


# --- silhouette ---------------------------------------------------------

# frozen from a hand evaluation: a = 0.1, b = (10 + 10.1) / 2 = 10.05,
# s = (10.05 - 0.1) / 10.05
HAND_S = 0.9900497512437811


def test_silhouette_hand_case():
    X = np.array([[0.0], [0.1], [10.0], [10.1]])
    report = silhouette_report(X, assignment_for([0, 0, 1, 1]), "euclidean")
    assert report.per_sample[0] == pytest.approx(HAND_S, abs=1e-9)


def test_silhouette_singleton_is_zero():
    X = np.array([[0.0], [0.1], [5.0]])
    report = silhouette_report(X, assignment_for([0, 0, 1]), "euclidean")
    assert report.per_sample[2] == 0.0


def test_silhouette_identical_points_zero():
    X = np.ones((6, 3))
    report = silhouette_report(X, assignment_for([0, 0, 0, 1, 1, 1]), "euclidean")
    assert np.array_equal(report.per_sample, np.zeros(6))
    report = silhouette_report(X, assignment_for([0, 0, 0, 1, 1, 1]), "cosine")
    assert np.array_equal(report.per_sample, np.zeros(6))


def test_silhouette_requires_two_clusters():
    X = np.ones((3, 2))
    with pytest.raises(DataError):
        silhouette_report(X, assignment_for([0, 0, 0]), "euclidean")


def test_silhouette_matches_loop_oracle():
    rng = np.random.default_rng(21)
    for metric in ("euclidean", "cosine"):
        for _ in range(20):
            n = int(rng.integers(4, 15))
            k = int(rng.integers(2, min(n, 5)))
            X = rng.normal(size=(n, 3))
            labels = np.concatenate([np.arange(k), rng.integers(0, k, size=n - k)])
            report = silhouette_report(X, assignment_for(labels), metric)
            expected = silhouette_oracle(X, labels, metric)
            assert np.allclose(report.per_sample, expected, atol=1e-10)


def test_silhouette_range_property():
    rng = np.random.default_rng(33)
    for _ in range(1000):
        n = int(rng.integers(3, 10))
        k = int(rng.integers(2, min(n, 4) + 1))
        X = rng.normal(size=(n, 2))
        labels = np.concatenate([np.arange(k), rng.integers(0, k, size=n - k)])
        report = silhouette_report(X, assignment_for(labels), "euclidean")
        assert (report.per_sample >= -1.0 - 1e-12).all()
        assert (report.per_sample <= 1.0 + 1e-12).all()


def test_silhouette_cosine_scale_invariance():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(12, 4))
    labels = np.array([0, 1, 2] + [0, 1, 2] * 3)
    base = silhouette_report(X, assignment_for(labels), "cosine")
    scaled = silhouette_report(X * 37.5, assignment_for(labels), "cosine")
    assert np.allclose(base.per_sample, scaled.per_sample, atol=1e-10)
    assert base.best_cluster == scaled.best_cluster


def test_silhouette_euclidean_translation_invariance():
    rng = np.random.default_rng(14)
    X = rng.normal(size=(10, 3))
    labels = np.array([0, 1] * 5)
    base = silhouette_report(X, assignment_for(labels), "euclidean")
    shifted = silhouette_report(X + 13.0, assignment_for(labels), "euclidean")
    assert np.allclose(base.per_sample, shifted.per_sample, atol=1e-8)


def test_best_cluster_scaling_invariance_both_metrics():
    rng = np.random.default_rng(25)
    for metric in ("euclidean", "cosine"):
        X = rng.normal(size=(15, 3))
        labels = np.concatenate([np.arange(3), rng.integers(0, 3, size=12)])
        base = silhouette_report(X, assignment_for(labels), metric)
        scaled = silhouette_report(X * 4.0, assignment_for(labels), metric)
        assert base.best_cluster == scaled.best_cluster


def test_best_cluster_tie_goes_low():
    # two mirror-image pairs produce identical per-cluster means
    X = np.array([[0.0], [1.0], [100.0], [101.0]])
    report = silhouette_report(X, assignment_for([0, 0, 1, 1]), "euclidean")
    assert report.per_cluster[0] == pytest.approx(report.per_cluster[1])
    assert report.best_cluster == 0


def test_zero_vector_cosine_convention():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    D = pairwise_distances(X, "cosine")
    assert D[0, 1] == 1.0
    assert D[0, 2] == 1.0
    assert D[1, 2] == pytest.approx(0.0, abs=1e-12)


# --- homogeneity --------------------------------------------------------


def test_homogeneity_pure_clusters():
    table = contingency_table(["a", "a", "b", "b"], [0, 0, 1, 1])
    assert homogeneity(table) == pytest.approx(1.0)


def test_homogeneity_single_cluster_two_classes():
    table = contingency_table(["a", "a", "b", "b"], [0, 0, 0, 0])
    assert homogeneity(table) == pytest.approx(0.0)


# frozen from homogeneity_oracle: labels [c0,c0,c1,c1], clusters [k0,k0,k0,k1]
FOUR_SAMPLE_H = 0.3112781244591327


def test_homogeneity_four_sample_case():
    labels = ["c0", "c0", "c1", "c1"]
    clusters = [0, 0, 0, 1]
    assert homogeneity_oracle(labels, clusters) == pytest.approx(
        FOUR_SAMPLE_H, abs=1e-12
    )
    table = contingency_table(labels, clusters)
    assert homogeneity(table) == pytest.approx(FOUR_SAMPLE_H, abs=1e-12)


def test_homogeneity_single_class_is_one():
    table = contingency_table(["a", "a", "a"], [0, 1, 2])
    assert homogeneity(table) == 1.0


def test_homogeneity_matches_oracle_random():
    rng = np.random.default_rng(77)
    for _ in range(50):
        n = int(rng.integers(2, 30))
        labels = [f"c{v}" for v in rng.integers(0, 4, size=n)]
        clusters = rng.integers(0, 5, size=n).tolist()
        expected = homogeneity_oracle(labels, clusters)
        got = homogeneity(contingency_table(labels, clusters))
        assert got == pytest.approx(expected, abs=1e-12)


def test_homogeneity_permutation_invariance():
    rng = np.random.default_rng(123)
    for _ in range(200):
        n = int(rng.integers(2, 25))
        labels = [f"c{v}" for v in rng.integers(0, 4, size=n)]
        clusters = rng.integers(0, 4, size=n)
        base = homogeneity(contingency_table(labels, clusters))
        class_perm = {f"c{i}": f"d{j}" for i, j in enumerate(rng.permutation(4))}
        cluster_perm = rng.permutation(10)
        relabeled = homogeneity(
            contingency_table(
                [class_perm[lab] for lab in labels],
                [int(cluster_perm[c]) for c in clusters],
            )
        )
        assert relabeled == pytest.approx(base, abs=1e-12)


def test_homogeneity_never_improves_under_column_merge():
    rng = np.random.default_rng(55)
    for _ in range(200):
        counts = rng.integers(0, 6, size=(3, 4))
        counts[0, 0] += 1  # nonempty table
        cols = [c for c in range(4) if counts[:, c].sum() > 0]
        if len(cols) < 2:
            continue
        table = ContingencyTable(counts[:, cols], ["a", "b", "c"], len(cols))
        base = homogeneity(table)
        i, j = rng.choice(len(cols), size=2, replace=False)
        merged = counts[:, cols].copy()
        merged[:, i] += merged[:, j]
        merged = np.delete(merged, j, axis=1)
        merged_h = homogeneity(
            ContingencyTable(merged, ["a", "b", "c"], merged.shape[1])
        )
        assert merged_h <= base + 1e-12


def test_homogeneity_rejects_negative_counts():
    with pytest.raises(DataError):
        ContingencyTable(np.array([[1, -1], [0, 2]]), ["a", "b"], 2)


# --- majority confusion -------------------------------------------------


def test_confusion_perfect_clustering():
    table = contingency_table(["a", "a", "b", "b"], [0, 0, 1, 1])
    confusion = majority_confusion(table)
    assert np.allclose(confusion.matrix, np.eye(2))
    assert confusion.clusters_per_class.tolist() == [1, 1]


def test_confusion_single_cluster_majority_rule():
    table = contingency_table(["a", "a", "a", "b"], [0, 0, 0, 0])
    confusion = majority_confusion(table)
    # both classes land in the cluster predicted as the larger class "a"
    assert np.allclose(confusion.matrix, [[1.0, 0.0], [1.0, 0.0]])
    assert confusion.clusters_per_class.tolist() == [1, 0]


def test_confusion_majority_tie_prefers_lexicographic():
    table = contingency_table(["b", "a"], [0, 0])
    confusion = majority_confusion(table)
    assert confusion.clusters_per_class.tolist() == [1, 0]  # "a" wins the tie


def test_confusion_matches_oracle():
    rng = np.random.default_rng(31)
    for _ in range(20):
        counts = rng.integers(0, 7, size=(6, 8))
        counts[rng.integers(0, 6), :] += 1  # no empty cluster columns
        table = ContingencyTable(counts, [f"c{i}" for i in range(6)], 8)
        confusion = majority_confusion(table)
        matrix, per_class = majority_confusion_oracle(counts)
        assert np.allclose(confusion.matrix, matrix, atol=1e-12)
        assert confusion.clusters_per_class.tolist() == per_class.tolist()


def test_confusion_rejects_empty_cluster():
    with pytest.raises(DataError):
        majority_confusion(
            ContingencyTable(np.array([[1, 0], [1, 0]]), ["a", "b"], 2)
        )


def test_confusion_rows_sum_to_one():
    rng = np.random.default_rng(90)
    counts = rng.integers(1, 5, size=(4, 6))
    table = ContingencyTable(counts, list("abcd"), 6)
    confusion = majority_confusion(table)
    assert np.allclose(confusion.matrix.sum(axis=1), 1.0)


# --- nearest neighbor assignment ---------------------------------------


def test_nn_zero_orphans():
    anchors = np.ones((3, 2))
    out = nearest_neighbor_assign(anchors, [0, 1, 2], np.zeros((0, 2)))
    assert out.size == 0


def test_nn_tie_goes_to_lowest_anchor_index():
    anchors = np.array([[1.0, 0.0], [-1.0, 0.0]])
    orphans = np.array([[0.0, 0.0]])
    out = nearest_neighbor_assign(anchors, [5, 7], orphans)
    assert out.tolist() == [5]


def test_nn_matches_exhaustive_oracle():
    rng = np.random.default_rng(8)
    for _ in range(100):
        n_anchor = int(rng.integers(1, 51))
        n_orphan = int(rng.integers(0, 21))
        d = int(rng.integers(1, 6))
        anchors = rng.normal(size=(n_anchor, d))
        orphans = rng.normal(size=(n_orphan, d))
        clusters = rng.integers(0, 5, size=n_anchor)
        got = nearest_neighbor_assign(anchors, clusters, orphans)
        expected = nearest_neighbor_oracle(anchors, clusters, orphans)
        assert np.array_equal(got, expected)


def test_nn_rejects_zero_anchors():
    with pytest.raises(DataError):
        nearest_neighbor_assign(np.zeros((0, 2)), [], np.ones((1, 2)))


def test_nn_rejects_dim_mismatch():
    with pytest.raises(DataError):
        nearest_neighbor_assign(np.ones((2, 3)), [0, 1], np.ones((1, 2)))
