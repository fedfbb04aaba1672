"""Per-iteration clustering: Ward-linkage agglomeration and Lloyd k-means.

Ward runs the Lance-Williams recurrence over a full n x n cost matrix with
per-row nearest-neighbor caches (O(n^2) memory, O(n^3) worst case). Costs are
parameterized on squared Euclidean distance between singletons, so the value
driving each merge is exactly twice the within-cluster sum-of-squares
increase; ``MergeStep.merge_cost`` records the actual increase. Cost ties are
broken by the lexicographically smallest (left node id, right node id) pair,
making partitions reproducible across platforms.

Cluster ids in every returned assignment are canonical: 0..k-1 in order of
each cluster's smallest member row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from .dataset import ClusterAssignment, DataError, canonical_relabel, check_feature_matrix


@dataclass(frozen=True)
class MergeStep:
    left_cluster: int
    right_cluster: int
    merge_cost: float  # within-cluster sum-of-squares increase
    new_node: int
    new_size: int

    def to_dict(self) -> dict:
        return {
            "left_cluster": self.left_cluster,
            "right_cluster": self.right_cluster,
            "merge_cost": self.merge_cost,
            "new_node": self.new_node,
            "new_size": self.new_size,
        }


def _squared_distances(X: np.ndarray) -> np.ndarray:
    """Dense symmetric squared-Euclidean matrix via the Gram expansion."""
    sq = np.einsum("ij,ij->i", X, X)
    D = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(D, 0.0, out=D)
    D = (D + D.T) / 2.0  # force exact symmetry
    np.fill_diagonal(D, 0.0)
    return D


def _ward_merges(X: np.ndarray, n_merges: int) -> tuple[list[MergeStep], np.ndarray]:
    """Run n_merges Ward merges; return steps and the final flat labels.

    Labels are raw node-membership groups (not canonical ids).
    """
    n = X.shape[0]
    D = _squared_distances(X)
    np.fill_diagonal(D, np.inf)

    active = np.ones(n, dtype=bool)
    sizes = np.ones(n, dtype=np.int64)
    node_of = np.arange(n, dtype=np.int64)  # node id stored at each matrix row
    labels = np.arange(n, dtype=np.intp)  # row -> current matrix-row of its cluster

    row_min = D.min(axis=1) if n > 1 else np.full(n, np.inf)
    row_arg = D.argmin(axis=1) if n > 1 else np.zeros(n, dtype=np.intp)

    def rescan(i: int) -> None:
        row = np.where(active, D[i], np.inf)
        row[i] = np.inf
        j = int(np.argmin(row))
        row_min[i], row_arg[i] = row[j], j

    steps: list[MergeStep] = []
    next_node = n
    for _ in range(n_merges):
        m = np.min(row_min[active])
        # resolve ties by smallest (left node id, right node id)
        best = None
        for i in np.flatnonzero(active & (row_min == m)):
            cols = np.flatnonzero(active & (D[i] == m))
            for j in cols:
                a, b = sorted((int(node_of[i]), int(node_of[j])))
                if best is None or (a, b) < best[:2]:
                    pi, pj = (i, j) if node_of[i] == a else (j, i)
                    best = (a, b, int(pi), int(pj))
        a, b, pi, pj = best

        steps.append(
            MergeStep(a, b, float(m) / 2.0, next_node, int(sizes[pi] + sizes[pj]))
        )

        # Lance-Williams update of costs against the merged cluster
        sa, sb = sizes[pi], sizes[pj]
        others = active.copy()
        others[pi] = others[pj] = False
        sc = sizes[others]
        new_costs = (
            (sa + sc) * D[pi, others] + (sb + sc) * D[pj, others] - sc * m
        ) / (sa + sb + sc)
        D[pi, others] = new_costs
        D[others, pi] = new_costs
        D[pj, :] = np.inf
        D[:, pj] = np.inf

        active[pj] = False
        sizes[pi] = sa + sb
        node_of[pi] = next_node
        next_node += 1
        labels[labels == pj] = pi

        row_min[pj] = np.inf
        if active.sum() > 1:
            rescan(pi)
            idx = np.flatnonzero(others)
            stale = np.isin(row_arg[idx], (pi, pj))
            for i in idx[stale]:
                rescan(int(i))
            fresh = idx[~stale]
            better = new_costs[~stale] < row_min[fresh]
            row_min[fresh[better]] = new_costs[~stale][better]
            row_arg[fresh[better]] = pi

    return steps, labels


def ward_linkage(X) -> list[MergeStep]:
    """Full Ward dendrogram (n-1 merges) for debugging dumps."""
    X = check_feature_matrix(X)
    if X.shape[0] == 0:
        raise DataError("cannot cluster 0 samples")
    steps, _ = _ward_merges(X, X.shape[0] - 1)
    return steps


class WardClustering(BaseEstimator, ClusterMixin):
    """Agglomerative clustering with Ward linkage, cut at ``n_clusters``."""

    def __init__(self, n_clusters: int = 2):
        self.n_clusters = n_clusters

    def fit(self, X, y=None):
        X = check_feature_matrix(X)
        n = X.shape[0]
        if n == 0:
            raise DataError("cannot cluster 0 samples")
        if not 1 <= self.n_clusters <= n:
            raise DataError(
                f"n_clusters must be in [1, {n}], got {self.n_clusters}"
            )
        steps, raw = _ward_merges(X, n - self.n_clusters)
        self.merge_steps_ = steps
        assignment = canonical_relabel(raw)
        self.labels_ = assignment.cluster_ids
        self.assignment_ = assignment
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_


class KMeansClustering(BaseEstimator, ClusterMixin):
    """Lloyd k-means from a seeded k-means++ initialization.

    Deterministic for a fixed ``random_state`` (PCG64). Stops when the
    assignment is stable or after ``max_iter`` sweeps; emptied clusters are
    refilled with the point farthest from its current centroid.
    """

    def __init__(self, n_clusters: int = 2, random_state: int = 0, max_iter: int = 300):
        self.n_clusters = n_clusters
        self.random_state = random_state
        self.max_iter = max_iter

    def _plus_plus_init(self, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        n = X.shape[0]
        chosen = [int(rng.integers(n))]
        d2 = ((X - X[chosen[0]]) ** 2).sum(axis=1)
        for _ in range(1, self.n_clusters):
            total = d2.sum()
            if total <= 0:
                pick = int(rng.integers(n))
            else:
                pick = int(rng.choice(n, p=d2 / total))
            chosen.append(pick)
            d2 = np.minimum(d2, ((X - X[pick]) ** 2).sum(axis=1))
        return X[chosen].copy()

    def fit(self, X, y=None):
        X = check_feature_matrix(X)
        n = X.shape[0]
        if n == 0:
            raise DataError("cannot cluster 0 samples")
        if not 1 <= self.n_clusters <= n:
            raise DataError(
                f"n_clusters must be in [1, {n}], got {self.n_clusters}"
            )
        rng = np.random.default_rng(self.random_state)
        centroids = self._plus_plus_init(X, rng)
        labels = np.full(n, -1, dtype=np.intp)
        for _ in range(self.max_iter):
            d2 = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
            new_labels = np.argmin(d2, axis=1)
            # refill any emptied cluster with the worst-fitting point
            for c in range(self.n_clusters):
                if not (new_labels == c).any():
                    contrib = d2[np.arange(n), new_labels]
                    donors = np.bincount(new_labels, minlength=self.n_clusters)
                    eligible = donors[new_labels] > 1
                    contrib = np.where(eligible, contrib, -np.inf)
                    new_labels[int(np.argmax(contrib))] = c
            if (new_labels == labels).all():
                break
            labels = new_labels
            for c in range(self.n_clusters):
                centroids[c] = X[labels == c].mean(axis=0)
        assignment = canonical_relabel(labels)
        self.labels_ = assignment.cluster_ids
        self.assignment_ = assignment
        self.cluster_centers_ = centroids
        self.inertia_ = float(
            ((X - centroids[labels]) ** 2).sum()
        )
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_


def ward_cluster(data, n_clusters: int) -> ClusterAssignment:
    """Functional alias: Ward-cluster rows into n_clusters canonical groups."""
    return WardClustering(n_clusters=n_clusters).fit(data).assignment_


def kmeans_cluster(data, n_clusters: int, seed: int = 0) -> ClusterAssignment:
    """Functional alias: seeded k-means++ / Lloyd clustering."""
    return KMeansClustering(n_clusters=n_clusters, random_state=seed).fit(data).assignment_
