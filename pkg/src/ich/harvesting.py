"""Iterative cluster harvesting and its one-shot baselines.

The harvest loop: while more samples remain than the reducer's target
dimensionality, refit the reducer on the remaining rows, cluster the
projection, score clusters by mean silhouette, and move the best cluster's
rows out of the working set. Harvested clusters below the minimum size are
filtered to a side set; remaining rows at loop exit form the rest set.
Optionally, rest/small members are attached to surviving clusters by nearest
neighbor in the ORIGINAL feature space (projections change per iteration, so
their distances are not comparable across iterations).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from .clustering import kmeans_cluster, ward_cluster
from .dataset import ConfigError, DataError, LabeledDataset, check_feature_matrix
from .metrics import (
    contingency_table,
    homogeneity,
    nearest_neighbor_assign,
    silhouette_report,
)
from .projection import DimensionReducer

_SEED_MASK = (1 << 64) - 1

SILHOUETTE_METRICS = ("cosine", "euclidean")
CLUSTER_METHODS = ("ward", "kmeans")
DIMRED_METHODS = ("pca", "truncated-svd", "none")


@dataclass(frozen=True)
class HarvestConfig:
    """Hyperparameters of a harvest run (also used for one-shot baselines)."""

    n_pca: int = 20
    n_clusters_per_iter: int = 15
    min_cluster_size: int = 5
    silhouette_metric: str = "cosine"
    dimred: str = "pca"
    cluster_method: str = "ward"
    seed: int = 0

    def validate(self) -> "HarvestConfig":
        if self.n_pca < 1:
            raise ConfigError("n_pca must be >= 1")
        if self.n_clusters_per_iter < 2:
            raise ConfigError("n_clusters_per_iter must be >= 2")
        if self.min_cluster_size < 1:
            raise ConfigError("min_cluster_size must be >= 1")
        if self.silhouette_metric not in SILHOUETTE_METRICS:
            raise ConfigError(f"unknown silhouette metric {self.silhouette_metric!r}")
        if self.dimred not in DIMRED_METHODS:
            raise ConfigError(f"unknown dimred method {self.dimred!r}")
        if self.cluster_method not in CLUSTER_METHODS:
            raise ConfigError(f"unknown cluster method {self.cluster_method!r}")
        return self

    def to_dict(self) -> dict:
        return {
            "n_pca": self.n_pca,
            "n_clusters_per_iter": self.n_clusters_per_iter,
            "min_cluster_size": self.min_cluster_size,
            "silhouette_metric": self.silhouette_metric,
            "dimred": self.dimred,
            "cluster_method": self.cluster_method,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "HarvestConfig":
        return cls(**payload).validate()


@dataclass(frozen=True)
class IterationRecord:
    iteration: int  # 1-based
    n_remaining: int  # working-set size at iteration start
    chosen_cluster: int  # within-iteration cluster id
    s_max: float | None  # mean silhouette of the harvested cluster
    size: int
    effective_k: int  # reducer output dims this iteration
    majority_label: str | None = None

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "n_remaining": self.n_remaining,
            "chosen_cluster": self.chosen_cluster,
            "s_max": self.s_max,
            "size": self.size,
            "effective_k": self.effective_k,
            "majority_label": self.majority_label,
        }


@dataclass(frozen=True)
class HarvestState:
    """Partition of the original index set after harvesting and size filtering."""

    harvested_clusters: list  # [(indices, iteration)] surviving the size filter
    rest: np.ndarray  # never harvested before the stopping rule fired
    small: list  # [indices] filtered out by size, in harvest order
    iteration_log: list  # one IterationRecord per harvest iteration


STAGE_HARVEST = "harvest"
STAGE_NN_REST = "nn-rest"
STAGE_NN_SMALL = "nn-small"
STAGE_UNASSIGNED = "unassigned"


def _majority(values: list[str]) -> str:
    # ties -> lexicographically smallest
    best = None
    counts: dict[str, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    for v in sorted(counts):
        if best is None or counts[v] > counts[best]:
            best = v
    return best


def _iteration_seed(seed: int, iteration: int) -> int:
    ss = np.random.SeedSequence([seed & _SEED_MASK, iteration])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class IterativeClusterHarvester(BaseEstimator, ClusterMixin):
    """Silhouette-guided iterative harvest clusterer.

    After ``fit(X)``:

    * ``labels_`` holds a cluster id per row, -1 for rows not in a surviving
      cluster (always absent when ``full_assign`` is set and clusters
      survived).
    * ``stages_`` records how each row was assigned: ``harvest``,
      ``nn-rest``, ``nn-small`` or ``unassigned``.
    * ``state_`` is the HarvestState partition, ``iteration_log_`` its log.

    ``y`` is optional and only used to annotate the log with per-iteration
    majority labels.
    """

    def __init__(
        self,
        n_pca: int = 20,
        n_clusters_per_iter: int = 15,
        min_cluster_size: int = 5,
        silhouette_metric: str = "cosine",
        dimred: str = "pca",
        cluster_method: str = "ward",
        random_state: int = 0,
        full_assign: bool = False,
        keep_models: bool = False,
        iteration_callback=None,
    ):
        self.n_pca = n_pca
        self.n_clusters_per_iter = n_clusters_per_iter
        self.min_cluster_size = min_cluster_size
        self.silhouette_metric = silhouette_metric
        self.dimred = dimred
        self.cluster_method = cluster_method
        self.random_state = random_state
        self.full_assign = full_assign
        self.keep_models = keep_models
        self.iteration_callback = iteration_callback

    def _config(self) -> HarvestConfig:
        return HarvestConfig(
            n_pca=self.n_pca,
            n_clusters_per_iter=self.n_clusters_per_iter,
            min_cluster_size=self.min_cluster_size,
            silhouette_metric=self.silhouette_metric,
            dimred=self.dimred,
            cluster_method=self.cluster_method,
            seed=self.random_state,
        ).validate()

    def fit(self, X, y=None):
        config = self._config()
        X = check_feature_matrix(X)
        n = X.shape[0]
        if n == 0:
            raise DataError("cannot harvest an empty dataset")
        if y is not None and len(y) != n:
            raise DataError("y must align with X rows")

        remaining = np.arange(n, dtype=np.intp)
        harvested: list[tuple[np.ndarray, int]] = []
        log: list[IterationRecord] = []
        models: list[dict] = []
        iteration = 0
        while remaining.size > config.n_pca:
            iteration += 1
            sub = X[remaining]
            reducer = DimensionReducer(config.dimred, config.n_pca).fit(sub)
            projected = reducer.transform(sub)
            k = min(config.n_clusters_per_iter, remaining.size)
            if config.cluster_method == "ward":
                assignment = ward_cluster(projected, k)
            else:
                assignment = kmeans_cluster(
                    projected, k, seed=_iteration_seed(config.seed, iteration)
                )
            if assignment.n_clusters >= 2:
                report = silhouette_report(
                    projected, assignment, config.silhouette_metric
                )
                best = report.best_cluster
                s_max = float(report.per_cluster[best])
            else:
                best, s_max = 0, None
            chosen = remaining[assignment.members_of(best)]
            majority = (
                _majority([y[i] for i in chosen]) if y is not None else None
            )
            record = IterationRecord(
                iteration=iteration,
                n_remaining=int(remaining.size),
                chosen_cluster=int(best),
                s_max=s_max,
                size=int(chosen.size),
                effective_k=int(reducer.k_),
                majority_label=majority,
            )
            harvested.append((chosen, iteration))
            log.append(record)
            if self.iteration_callback is not None:
                self.iteration_callback(record)
            if self.keep_models:
                models.append(reducer.to_dict())
            remaining = np.setdiff1d(remaining, chosen, assume_unique=True)

        rest = remaining
        surviving = [
            (idx, it) for idx, it in harvested if idx.size >= config.min_cluster_size
        ]
        small = [idx for idx, _ in harvested if idx.size < config.min_cluster_size]

        labels = np.full(n, -1, dtype=np.intp)
        stages = np.full(n, STAGE_UNASSIGNED, dtype=object)
        for cid, (idx, _) in enumerate(surviving):
            labels[idx] = cid
            stages[idx] = STAGE_HARVEST

        if self.full_assign:
            orphan_groups = [(rest, STAGE_NN_REST)] + [
                (idx, STAGE_NN_SMALL) for idx in small
            ]
            orphans = np.concatenate([g for g, _ in orphan_groups])
            if orphans.size:
                if not surviving:
                    raise DataError("no surviving clusters to assign to")
                # anchors sorted by sample index so distance ties go low
                anchor_idx = np.sort(
                    np.concatenate([idx for idx, _ in surviving])
                )
                assigned = nearest_neighbor_assign(
                    X[anchor_idx], labels[anchor_idx], X[orphans]
                )
                labels[orphans] = assigned
                for group, stage in orphan_groups:
                    stages[group] = stage

        self.labels_ = labels
        self.stages_ = stages
        self.state_ = HarvestState(surviving, rest, small, log)
        self.iteration_log_ = log
        self.n_clusters_ = len(surviving)
        self.models_ = models if self.keep_models else None
        self.n_iterations_ = iteration
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X, y).labels_


@dataclass(frozen=True)
class HarvestOutcome:
    """Full result of a harvest run on a labeled dataset."""

    config: HarvestConfig
    full_assign: bool
    state: HarvestState
    labels: np.ndarray  # per sample, -1 = unassigned
    stages: np.ndarray  # per sample stage string
    sample_ids: list[str]
    true_labels: list[str] | None
    models: list[dict] | None = None

    @property
    def n_clusters(self) -> int:
        return len(self.state.harvested_clusters)

    def final_assignment(self) -> dict[str, int] | None:
        if not self.full_assign:
            return None
        return {
            sid: int(cid)
            for sid, cid in zip(self.sample_ids, self.labels)
            if cid >= 0
        }

    def to_json_dict(self) -> dict:
        clusters = []
        for cid, (idx, iteration) in enumerate(self.state.harvested_clusters):
            clusters.append(
                {
                    "cluster_id": cid,
                    "iteration": iteration,
                    "size": int(idx.size),
                    "sample_ids": [self.sample_ids[i] for i in idx],
                }
            )
        return {
            "config": self.config.to_dict(),
            "full_assign": self.full_assign,
            "n_samples": len(self.sample_ids),
            "n_clusters": self.n_clusters,
            "iterations": [rec.to_dict() for rec in self.state.iteration_log],
            "clusters": clusters,
            "rest_sample_ids": [self.sample_ids[i] for i in self.state.rest],
            "small_clusters": [
                [self.sample_ids[i] for i in idx] for idx in self.state.small
            ],
            "final_assignment": self.final_assignment(),
            "models": self.models,
        }


def run_ich(
    dataset: LabeledDataset,
    config: HarvestConfig,
    full_assign: bool = False,
    trace: bool = False,
    iteration_callback=None,
) -> HarvestOutcome:
    """Run iterative cluster harvesting over a labeled dataset."""
    config.validate()
    estimator = IterativeClusterHarvester(
        n_pca=config.n_pca,
        n_clusters_per_iter=config.n_clusters_per_iter,
        min_cluster_size=config.min_cluster_size,
        silhouette_metric=config.silhouette_metric,
        dimred=config.dimred,
        cluster_method=config.cluster_method,
        random_state=config.seed,
        full_assign=full_assign,
        keep_models=trace,
        iteration_callback=iteration_callback,
    )
    estimator.fit(dataset.features, dataset.labels)
    return HarvestOutcome(
        config=config,
        full_assign=full_assign,
        state=estimator.state_,
        labels=estimator.labels_,
        stages=estimator.stages_,
        sample_ids=dataset.sample_ids,
        true_labels=dataset.labels,
        models=estimator.models_,
    )


def run_otc(
    dataset: LabeledDataset, config: HarvestConfig, k_total: int
) -> np.ndarray:
    """One-shot baseline: reduce once, cluster once into k_total clusters.

    With ``dimred="none"`` this is direct clustering of the ingested
    features; with ``dimred="pca"`` on raw-pixel input it is the classic
    PCA-then-cluster pipeline. Returns a cluster id per dataset row.
    """
    config.validate()
    n = dataset.n_samples
    if not 1 <= k_total <= n:
        raise ConfigError(f"k_total must be in [1, {n}], got {k_total}")
    reducer = DimensionReducer(config.dimred, config.n_pca).fit(dataset.features)
    projected = reducer.transform(dataset.features)
    if config.cluster_method == "ward":
        assignment = ward_cluster(projected, k_total)
    else:
        assignment = kmeans_cluster(projected, k_total, seed=config.seed)
    return assignment.cluster_ids


BASELINES = ("otc", "cnn-ac", "pca-ac")


def _baseline_config(name: str, config: HarvestConfig) -> HarvestConfig:
    if name == "otc":
        return config
    if name == "cnn-ac":  # cluster the ingested features directly
        return replace(config, dimred="none")
    if name == "pca-ac":
        return replace(config, dimred="pca")
    raise DataError(f"unknown baseline {name!r}")


@dataclass(frozen=True)
class BenchmarkReport:
    """Method-by-method homogeneity table plus ICH-vs-OTC relative gain."""

    n_clusters: int
    methods: dict  # name -> {homogeneity_partial, homogeneity_full, n_clusters}
    delta_rel_partial: float | None
    delta_rel_full: float | None

    def to_json_dict(self) -> dict:
        return {
            "n_clusters": self.n_clusters,
            "methods": self.methods,
            "delta_rel_partial": self.delta_rel_partial,
            "delta_rel_full": self.delta_rel_full,
        }


def _subset_homogeneity(labels: list[str], cluster_ids: np.ndarray, mask) -> float:
    keep = np.flatnonzero(mask)
    table = contingency_table([labels[i] for i in keep], cluster_ids[keep])
    return homogeneity(table)


def compare_runs(
    dataset: LabeledDataset,
    config: HarvestConfig,
    baselines: tuple[str, ...] = BASELINES,
) -> BenchmarkReport:
    """Benchmark ICH against one-shot baselines at matched cluster count.

    Partial homogeneity for every method is evaluated on the samples the
    harvester kept in surviving clusters; full homogeneity covers all
    samples (ICH uses its nearest-neighbor completion).
    """
    if dataset.labels is None:
        raise DataError("compare_runs needs a labeled dataset")
    outcome = run_ich(dataset, config, full_assign=True)
    k = outcome.n_clusters
    retained = outcome.stages == STAGE_HARVEST

    methods: dict[str, dict] = {}
    methods["ich"] = {
        "homogeneity_partial": _subset_homogeneity(
            dataset.labels, outcome.labels, retained
        ),
        "homogeneity_full": _subset_homogeneity(
            dataset.labels, outcome.labels, np.ones(dataset.n_samples, bool)
        ),
        "n_clusters": k,
    }
    for name in baselines:
        ids = run_otc(dataset, _baseline_config(name, config), k)
        methods[name] = {
            "homogeneity_partial": _subset_homogeneity(dataset.labels, ids, retained),
            "homogeneity_full": _subset_homogeneity(
                dataset.labels, ids, np.ones(dataset.n_samples, bool)
            ),
            "n_clusters": k,
        }

    delta_partial = delta_full = None
    if "otc" in methods:
        for kind in ("partial", "full"):
            h_ich = methods["ich"][f"homogeneity_{kind}"]
            h_otc = methods["otc"][f"homogeneity_{kind}"]
            if h_otc > 0:
                value = (h_ich - h_otc) / h_otc
                if kind == "partial":
                    delta_partial = value
                else:
                    delta_full = value
    return BenchmarkReport(k, methods, delta_partial, delta_full)
