"""In-memory dataset model: a dense feature matrix plus sample ids and optional labels.

Feature values are stored as float64 for computation; the on-disk format
(see :mod:`ich.feature_io`) quantizes to float32.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DataError(ValueError):
    """Invalid data contents (bad values, inconsistent shapes, bad subsets)."""


class ConfigError(ValueError):
    """Invalid configuration or usage (bad hyperparameters, bad invocation)."""


def check_feature_matrix(values, *, copy: bool = False) -> np.ndarray:
    """Validate and coerce a 2-D feature matrix to a C-contiguous float64 array.

    Rejects non-finite entries and zero-width matrices (n_dims must be >= 1);
    zero rows are allowed.
    """
    arr = np.array(values, dtype=np.float64, copy=copy, order="C")
    if arr.ndim != 2:
        raise DataError(f"feature matrix must be 2-D, got shape {arr.shape}")
    if arr.shape[1] < 1:
        raise DataError("feature matrix must have at least one column")
    if arr.size and not np.isfinite(arr).all():
        row, col = np.argwhere(~np.isfinite(arr))[0]
        raise DataError(f"non-finite value at ({row}, {col})")
    return arr


def check_index_subset(indices, n_samples: int) -> np.ndarray:
    """Validate a strictly increasing index subset against a parent of size n_samples."""
    idx = np.asarray(indices, dtype=np.intp)
    if idx.ndim != 1:
        raise DataError(f"index subset must be 1-D, got shape {idx.shape}")
    if idx.size:
        if idx.min() < 0 or idx.max() >= n_samples:
            raise DataError(
                f"index out of range for dataset of {n_samples} samples"
            )
        if not (np.diff(idx) > 0).all():
            raise DataError("index subset must be strictly increasing")
    return idx


def default_sample_ids(n_samples: int) -> list[str]:
    return [f"sample_{i}" for i in range(n_samples)]


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix with per-row sample ids and optional string class labels."""

    features: np.ndarray
    sample_ids: list[str]
    labels: list[str] | None = None

    def __post_init__(self):
        object.__setattr__(self, "features", check_feature_matrix(self.features))
        n = self.features.shape[0]
        if len(self.sample_ids) != n:
            raise DataError(
                f"expected {n} sample ids, got {len(self.sample_ids)}"
            )
        if len(set(self.sample_ids)) != n:
            raise DataError("sample ids must be unique")
        if self.labels is not None and len(self.labels) != n:
            raise DataError(f"expected {n} labels, got {len(self.labels)}")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_dims(self) -> int:
        return self.features.shape[1]

    @classmethod
    def from_features(cls, features, labels=None) -> "LabeledDataset":
        """Build a dataset with generated "sample_{i}" ids."""
        features = check_feature_matrix(features)
        return cls(features, default_sample_ids(features.shape[0]), labels)


def subset_rows(dataset: LabeledDataset, indices) -> LabeledDataset:
    """Select rows (with their ids and labels) by a strictly increasing index subset."""
    idx = check_index_subset(indices, dataset.n_samples)
    labels = None
    if dataset.labels is not None:
        labels = [dataset.labels[i] for i in idx]
    return LabeledDataset(
        dataset.features[idx],
        [dataset.sample_ids[i] for i in idx],
        labels,
    )


@dataclass(frozen=True)
class ClusterAssignment:
    """A partition of a row subset into clusters 0..n_clusters-1.

    ``member_indices`` are row indices into the clustered matrix (or a parent
    dataset), ``cluster_ids[i]`` is the cluster of ``member_indices[i]``.
    Every cluster id in range must be non-empty.
    """

    member_indices: np.ndarray
    cluster_ids: np.ndarray
    n_clusters: int

    def __post_init__(self):
        members = np.asarray(self.member_indices, dtype=np.intp)
        ids = np.asarray(self.cluster_ids, dtype=np.intp)
        object.__setattr__(self, "member_indices", members)
        object.__setattr__(self, "cluster_ids", ids)
        if members.shape != ids.shape or members.ndim != 1:
            raise DataError("member_indices and cluster_ids must be 1-D and aligned")
        if self.n_clusters < 0:
            raise DataError("n_clusters must be >= 0")
        if ids.size:
            present = np.unique(ids)
            if present[0] < 0 or present[-1] >= self.n_clusters:
                raise DataError("cluster id out of range")
            if present.size != self.n_clusters:
                raise DataError("every cluster id in range must be non-empty")
        elif self.n_clusters != 0:
            raise DataError("empty assignment must have n_clusters == 0")

    def members_of(self, cluster_id: int) -> np.ndarray:
        return self.member_indices[self.cluster_ids == cluster_id]

    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.cluster_ids, minlength=self.n_clusters)


def canonical_relabel(labels: np.ndarray, member_indices: np.ndarray | None = None) -> ClusterAssignment:
    """Relabel raw cluster labels so ids run 0..k-1 ordered by smallest member index.

    ``labels`` is dense over the clustered rows; ``member_indices`` defaults to
    0..n-1.
    """
    labels = np.asarray(labels, dtype=np.intp)
    n = labels.shape[0]
    if member_indices is None:
        member_indices = np.arange(n, dtype=np.intp)
    uniq = np.unique(labels)
    # first occurrence of each raw label, in row order
    first_row = {lab: int(np.argmax(labels == lab)) for lab in uniq}
    order = sorted(uniq, key=lambda lab: first_row[lab])
    remap = {lab: new for new, lab in enumerate(order)}
    new_labels = np.array([remap[lab] for lab in labels], dtype=np.intp)
    return ClusterAssignment(np.asarray(member_indices, dtype=np.intp), new_labels, len(uniq))
