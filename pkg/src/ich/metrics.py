"""Cluster quality metrics: silhouette, homogeneity, majority-label confusion.

Distance conventions (pinned for reproducibility):

* cosine distance is 1 - u.v/(|u||v|); a zero vector is at distance 1 from
  everything, so projections that collapse to the origin stay well-defined.
* silhouette of a singleton-cluster member is 0, and s = 0 whenever
  max(a, b) = 0, so degenerate clusters never outrank genuinely separated
  ones.
* homogeneity uses natural logarithms; the value is a ratio, so the base
  only affects intermediate values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import ClusterAssignment, DataError, check_feature_matrix


def pairwise_distances(X: np.ndarray, metric: str) -> np.ndarray:
    """Dense symmetric distance matrix under 'euclidean' or 'cosine'."""
    X = check_feature_matrix(X)
    if metric == "euclidean":
        sq = np.einsum("ij,ij->i", X, X)
        D = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
        np.maximum(D, 0.0, out=D)
        D = np.sqrt((D + D.T) / 2.0)
    elif metric == "cosine":
        norms = np.linalg.norm(X, axis=1)
        zero = norms == 0
        safe = np.where(zero, 1.0, norms)
        unit = X / safe[:, None]
        D = 1.0 - unit @ unit.T
        np.clip(D, 0.0, 2.0, out=D)
        D = (D + D.T) / 2.0
        D[zero, :] = 1.0
        D[:, zero] = 1.0
    else:
        raise DataError(f"unknown metric {metric!r}")
    np.fill_diagonal(D, 0.0)
    return D


@dataclass(frozen=True)
class SilhouetteReport:
    per_sample: np.ndarray  # aligned with the clustered rows
    per_cluster: np.ndarray  # mean per cluster id
    best_cluster: int  # argmax of per_cluster, ties -> lowest id


def silhouette_report(
    data, assignment: ClusterAssignment, metric: str = "cosine"
) -> SilhouetteReport:
    """Per-sample and per-cluster silhouette scores, plus the best cluster.

    a is the mean distance to own-cluster co-members, b the smallest mean
    distance to another cluster; s = (b - a) / max(a, b).
    """
    X = check_feature_matrix(data)
    labels = assignment.cluster_ids
    k = assignment.n_clusters
    if X.shape[0] != labels.shape[0]:
        raise DataError("assignment does not cover the data rows")
    if k < 2:
        raise DataError("silhouette requires at least 2 clusters")

    D = pairwise_distances(X, metric)
    onehot = np.zeros((X.shape[0], k))
    onehot[np.arange(X.shape[0]), labels] = 1.0
    sums = D @ onehot  # distance sums from each row to each cluster
    sizes = onehot.sum(axis=0)

    own_size = sizes[labels]
    own_sum = sums[np.arange(X.shape[0]), labels]
    with np.errstate(invalid="ignore", divide="ignore"):
        a = np.where(own_size > 1, own_sum / np.maximum(own_size - 1, 1), 0.0)
    means = sums / sizes[None, :]
    means[np.arange(X.shape[0]), labels] = np.inf
    b = means.min(axis=1)

    denom = np.maximum(a, b)
    s = np.zeros(X.shape[0])
    ok = (own_size > 1) & (denom > 0)
    s[ok] = (b[ok] - a[ok]) / denom[ok]

    per_cluster = np.array([s[labels == c].mean() for c in range(k)])
    best = int(np.argmax(per_cluster))
    return SilhouetteReport(s, per_cluster, best)


@dataclass(frozen=True)
class ContingencyTable:
    """Class-by-cluster count table for labeled clustering evaluation."""

    counts: np.ndarray  # shape (n_classes, n_clusters), nonnegative ints
    classes: list[str]
    n_clusters: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        if counts.ndim != 2 or counts.shape != (len(self.classes), self.n_clusters):
            raise DataError("contingency shape mismatch")
        if (counts < 0).any():
            raise DataError("negative counts in contingency table")

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def class_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def cluster_totals(self) -> np.ndarray:
        return self.counts.sum(axis=0)


def contingency_table(labels: list[str], cluster_ids) -> ContingencyTable:
    """Build the class x cluster contingency table from aligned labels/ids.

    Columns are the distinct cluster ids present (in sorted order), so every
    column is non-empty even if the id space has gaps.
    """
    cluster_ids = np.asarray(cluster_ids, dtype=np.intp)
    if len(labels) != cluster_ids.shape[0]:
        raise DataError("labels and cluster ids must be aligned")
    classes = sorted(set(labels))
    class_index = {c: i for i, c in enumerate(classes)}
    uniq, dense = np.unique(cluster_ids, return_inverse=True)
    k = uniq.size
    counts = np.zeros((len(classes), k), dtype=np.int64)
    for lab, cid in zip(labels, dense):
        counts[class_index[lab], cid] += 1
    return ContingencyTable(counts, classes, k)


def homogeneity(table: ContingencyTable) -> float:
    """1 - H(classes | clusters) / H(classes); 1.0 when a single class is present."""
    n = table.n
    if n < 1:
        raise DataError("homogeneity needs at least one sample")
    counts = table.counts.astype(np.float64)
    class_totals = counts.sum(axis=1)
    cluster_totals = counts.sum(axis=0)

    nz = class_totals > 0
    h_c = -np.sum(class_totals[nz] / n * np.log(class_totals[nz] / n))
    if h_c == 0.0:
        return 1.0
    ratio = np.divide(
        counts,
        cluster_totals[None, :],
        out=np.zeros_like(counts),
        where=cluster_totals[None, :] > 0,
    )
    mask = counts > 0
    h_ck = -np.sum(counts[mask] / n * np.log(ratio[mask]))
    return float(1.0 - h_ck / h_c)


@dataclass(frozen=True)
class MajorityConfusion:
    classes: list[str]
    matrix: np.ndarray  # (true class, predicted class), rows normalized by class total
    clusters_per_class: np.ndarray  # clusters whose majority is each class


def majority_confusion(table: ContingencyTable) -> MajorityConfusion:
    """Confusion matrix after labeling each cluster with its majority class.

    Majority ties go to the lexicographically smallest class name (classes are
    stored sorted, so the smallest row index wins). Rows are normalized by the
    true-class totals.
    """
    counts = table.counts
    if (counts.sum(axis=0) == 0).any():
        raise DataError("empty cluster in contingency table")
    n_classes = len(table.classes)
    predicted = counts.argmax(axis=0)  # first max -> lexicographically smallest
    matrix = np.zeros((n_classes, n_classes))
    for cluster, pred in enumerate(predicted):
        matrix[:, pred] += counts[:, cluster]
    totals = table.class_totals.astype(np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        matrix = np.where(totals[:, None] > 0, matrix / totals[:, None], 0.0)
    clusters_per_class = np.bincount(predicted, minlength=n_classes)
    return MajorityConfusion(list(table.classes), matrix, clusters_per_class)


def nearest_neighbor_assign(anchors, anchor_clusters, orphans) -> np.ndarray:
    """Assign each orphan the cluster of its nearest anchor (Euclidean).

    Ties go to the anchor with the lowest row index. Distances are computed
    with the Gram expansion so very wide matrices stay tractable.
    """
    A = check_feature_matrix(anchors)
    Q = check_feature_matrix(orphans)
    anchor_clusters = np.asarray(anchor_clusters, dtype=np.intp)
    if A.shape[0] == 0:
        raise DataError("nearest-neighbor assignment needs at least one anchor")
    if anchor_clusters.shape[0] != A.shape[0]:
        raise DataError("anchor clusters must align with anchor rows")
    if Q.shape[0] == 0:
        return np.zeros(0, dtype=np.intp)
    if A.shape[1] != Q.shape[1]:
        raise DataError("anchor/orphan dimension mismatch")
    a_sq = np.einsum("ij,ij->i", A, A)
    q_sq = np.einsum("ij,ij->i", Q, Q)
    d2 = q_sq[:, None] + a_sq[None, :] - 2.0 * (Q @ A.T)
    nearest = np.argmin(d2, axis=1)  # first occurrence = lowest anchor index
    return anchor_clusters[nearest]
