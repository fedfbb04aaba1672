"""Command-line interface: generate / run / evaluate / report / compare.

Every command writes a ``manifest.json`` next to its outputs recording the
invocation, config, input paths and sha256 of each output, so reruns can be
checked for reproducibility. Exit codes: 0 success, 1 runtime data error,
2 usage or config error. The ``ICH_THREADS`` env var caps BLAS worker
threads.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import sys
import time
from importlib.metadata import version as pkg_version
from pathlib import Path

import click
import numpy as np

from .dataset import ClusterAssignment, ConfigError, DataError
from .feature_io import FormatError, load_features, write_feature_file
from .harvesting import (
    BASELINES,
    HarvestConfig,
    compare_runs,
    run_ich,
    run_otc,
)
from .metrics import contingency_table, homogeneity, majority_confusion, silhouette_report
from .report import (
    cluster_mean_images,
    component_histograms,
    fit_report_projection,
    render_histogram_svg,
    write_cluster_summary,
    write_histogram_csv,
    write_mean_images,
)
from .synthetic import CLASS_NAMES, generate_dataset, write_image_archive


def _tool_version() -> str:
    try:
        return pkg_version("ich")
    except Exception:
        return "unknown"


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(
    out_dir: Path,
    command: str,
    config: dict,
    inputs: list[Path],
    outputs: list[Path],
    seed: int | None,
    started: float,
) -> None:
    manifest = {
        "command": command,
        "config": config,
        "inputs": [str(p) for p in inputs],
        "outputs": {
            os.path.relpath(p, out_dir): _sha256(p) for p in sorted(outputs)
        },
        "tool_version": _tool_version(),
        "seed": seed,
        "duration_seconds": round(time.monotonic() - started, 3),
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)


def _limit_threads() -> None:
    raw = os.environ.get("ICH_THREADS")
    if not raw:
        return
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"ICH_THREADS must be an integer, got {raw!r}")
    if n < 1:
        raise ConfigError("ICH_THREADS must be >= 1")
    from threadpoolctl import threadpool_limits

    # hold a reference so the limit stays applied for the process lifetime
    global _THREAD_LIMITS
    _THREAD_LIMITS = threadpool_limits(limits=n)


def _config_from_flags(n_pca, n_clusters, n_min, metric, dimred, cluster, seed) -> HarvestConfig:
    try:
        return HarvestConfig(
            n_pca=n_pca,
            n_clusters_per_iter=n_clusters,
            min_cluster_size=n_min,
            silhouette_metric=metric,
            dimred=dimred,
            cluster_method=cluster,
            seed=seed,
        ).validate()
    except ConfigError as exc:
        raise click.UsageError(str(exc))


def _config_options(fn):
    for option in reversed(
        [
            click.option("--n-pca", type=int, default=20, show_default=True),
            click.option(
                "--n-clusters",
                type=int,
                default=15,
                show_default=True,
                help="Clusters per iteration (ich) or total clusters (otc).",
            ),
            click.option("--n-min", type=int, default=5, show_default=True),
            click.option(
                "--silhouette-metric",
                type=click.Choice(["cosine", "euclidean"]),
                default="cosine",
                show_default=True,
            ),
            click.option(
                "--dimred",
                type=click.Choice(["pca", "svd", "none"]),
                default="pca",
                show_default=True,
            ),
            click.option(
                "--cluster",
                type=click.Choice(["ward", "kmeans"]),
                default="ward",
                show_default=True,
            ),
            click.option("--seed", type=int, default=0, show_default=True),
        ]
    ):
        fn = option(fn)
    return fn


def _dimred_name(flag: str) -> str:
    return "truncated-svd" if flag == "svd" else flag


@click.group()
def main() -> None:
    """Iterative cluster harvesting toolkit."""
    try:
        _limit_threads()
    except ConfigError as exc:
        raise click.UsageError(str(exc))


def _run_guarded(body) -> None:
    try:
        body()
    except click.UsageError:
        raise
    except ConfigError as exc:
        raise click.UsageError(str(exc))
    except (DataError, FormatError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


@main.command()
@click.option("--classes", required=True, help="Comma list like Center=40,Ring=40.")
@click.option("--size", type=int, default=64, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.option("--images/--no-images", default=True, show_default=True)
def generate(classes: str, size: int, seed: int, out: Path, images: bool) -> None:
    """Generate a synthetic wafer-map dataset (feature file + image archive)."""
    started = time.monotonic()
    counts: dict[str, int] = {}
    for item in classes.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise click.UsageError(f"bad class count {item!r}, expected NAME=N")
        name, _, value = item.partition("=")
        name = name.strip()
        if name not in CLASS_NAMES:
            raise click.UsageError(
                f"unknown class {name!r}; choices: {', '.join(CLASS_NAMES)}"
            )
        try:
            counts[name] = int(value)
        except ValueError:
            raise click.UsageError(f"bad count for {name!r}: {value!r}")
        if counts[name] < 0:
            raise click.UsageError(f"count for {name!r} must be >= 0")

    def body() -> None:
        out.mkdir(parents=True, exist_ok=True)
        dataset, maps = generate_dataset(counts, size=size, seed=seed)
        feature_path = out / "features.ichf"
        write_feature_file(dataset, feature_path)
        outputs = [feature_path]
        if images and maps:
            manifest_csv = write_image_archive(maps, dataset.sample_ids, out / "images")
            outputs.append(manifest_csv)
            outputs.extend(sorted((out / "images").glob("*.png")))
        _write_manifest(
            out,
            "generate",
            {"classes": counts, "size": size},
            [],
            outputs,
            seed,
            started,
        )
        click.echo(
            f"generated {dataset.n_samples} maps ({dataset.n_dims} dims) -> {feature_path}"
        )

    _run_guarded(body)


def _print_record(record) -> None:
    s_max = "n/a" if record.s_max is None else f"{record.s_max:.4f}"
    majority = record.majority_label if record.majority_label else "-"
    click.echo(
        f"iter {record.iteration}: remaining {record.n_remaining}, "
        f"harvested size {record.size}, s_max {s_max}, majority {majority}"
    )


def _write_assignment_csv(
    path: Path, sample_ids: list[str], labels: np.ndarray, stages: np.ndarray
) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "cluster_id", "assigned_stage"])
        for sid, cid, stage in zip(sample_ids, labels, stages):
            if cid >= 0:
                writer.writerow([sid, int(cid), stage])


@main.command(name="run")
@click.argument("mode", type=click.Choice(["ich", "otc"]))
@click.argument("feature_file", type=click.Path(exists=True, path_type=Path))
@_config_options
@click.option("--full-assign", is_flag=True, default=False)
@click.option("--trace", is_flag=True, default=False, help="Keep per-iteration models.")
@click.option("--out", required=True, type=click.Path(path_type=Path))
def run_command(
    mode, feature_file, n_pca, n_clusters, n_min, silhouette_metric, dimred,
    cluster, seed, full_assign, trace, out,
):
    """Run iterative harvesting (ich) or one-shot clustering (otc)."""
    started = time.monotonic()
    config = _config_from_flags(
        n_pca, n_clusters, n_min, silhouette_metric, _dimred_name(dimred), cluster, seed
    )

    def body() -> None:
        dataset = load_features(feature_file)
        if dataset.n_samples == 0:
            raise DataError("empty dataset")
        out.mkdir(parents=True, exist_ok=True)
        if mode == "ich":
            outcome = run_ich(
                dataset,
                config,
                full_assign=full_assign,
                trace=trace,
                iteration_callback=_print_record,
            )
            payload = outcome.to_json_dict()
            payload["mode"] = "ich"
            labels, stages = outcome.labels, outcome.stages
            click.echo(
                f"harvested {outcome.n_clusters} clusters "
                f"({len(outcome.state.small)} small, {outcome.state.rest.size} rest)"
            )
        else:
            ids = run_otc(dataset, config, n_clusters)
            labels = ids
            stages = np.full(dataset.n_samples, "harvest", dtype=object)
            clusters = [
                {
                    "cluster_id": int(cid),
                    "iteration": 1,
                    "size": int((ids == cid).sum()),
                    "sample_ids": [
                        dataset.sample_ids[i] for i in np.flatnonzero(ids == cid)
                    ],
                }
                for cid in range(int(ids.max()) + 1)
            ]
            payload = {
                "mode": "otc",
                "config": config.to_dict(),
                "full_assign": True,
                "n_samples": dataset.n_samples,
                "n_clusters": len(clusters),
                "iterations": [],
                "clusters": clusters,
                "rest_sample_ids": [],
                "small_clusters": [],
                "final_assignment": {
                    sid: int(cid) for sid, cid in zip(dataset.sample_ids, ids)
                },
                "models": None,
            }
            click.echo(f"clustered into {len(clusters)} clusters")
        outcome_path = out / "outcome.json"
        with open(outcome_path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
        assignment_path = out / "assignment.csv"
        _write_assignment_csv(assignment_path, dataset.sample_ids, labels, stages)
        _write_manifest(
            out,
            f"run {mode}",
            config.to_dict(),
            [feature_file],
            [outcome_path, assignment_path],
            seed,
            started,
        )

    _run_guarded(body)


@main.command()
@click.argument("assignment_csv", type=click.Path(exists=True, path_type=Path))
@click.argument("feature_file", type=click.Path(exists=True, path_type=Path))
@click.option(
    "--silhouette-metric",
    type=click.Choice(["cosine", "euclidean"]),
    default="cosine",
    show_default=True,
)
@click.option("--out", required=True, type=click.Path(path_type=Path))
def evaluate(assignment_csv: Path, feature_file: Path, silhouette_metric: str, out: Path) -> None:
    """Score an assignment against true labels (homogeneity + confusion)."""
    started = time.monotonic()

    def body() -> None:
        dataset = load_features(feature_file)
        if dataset.labels is None:
            raise click.UsageError("feature file has no labels to evaluate against")
        id_to_row = {sid: i for i, sid in enumerate(dataset.sample_ids)}
        rows, cluster_ids = [], []
        with open(assignment_csv, newline="") as fh:
            reader = csv.DictReader(fh)
            if not reader.fieldnames or "sample_id" not in reader.fieldnames:
                raise FormatError("assignment CSV needs a sample_id column")
            for line in reader:
                sid = line["sample_id"]
                if sid not in id_to_row:
                    raise DataError(f"unknown sample id {sid!r} in assignment")
                rows.append(id_to_row[sid])
                cluster_ids.append(int(line["cluster_id"]))
        if not rows:
            raise DataError("assignment CSV is empty")
        rows = np.asarray(rows)
        cluster_ids = np.asarray(cluster_ids)
        labels = [dataset.labels[i] for i in rows]

        table = contingency_table(labels, cluster_ids)
        h = homogeneity(table)
        confusion = majority_confusion(table)
        per_cluster = {}
        if table.n_clusters >= 2:
            uniq, dense = np.unique(cluster_ids, return_inverse=True)
            assignment = ClusterAssignment(
                np.arange(dense.size), dense, uniq.size
            )
            report = silhouette_report(
                dataset.features[rows], assignment, silhouette_metric
            )
            for pos, cid in enumerate(uniq):
                per_cluster[str(int(cid))] = float(report.per_cluster[pos])

        out.mkdir(parents=True, exist_ok=True)
        evaluation = {
            "homogeneity": h,
            "n_samples_evaluated": int(rows.size),
            "per_cluster_silhouette": per_cluster,
            "confusion": {
                "classes": confusion.classes,
                "matrix": confusion.matrix.tolist(),
                "clusters_per_class": confusion.clusters_per_class.tolist(),
            },
        }
        eval_path = out / "evaluation.json"
        with open(eval_path, "w") as fh:
            json.dump(evaluation, fh, indent=2, sort_keys=True)
        confusion_path = out / "confusion.csv"
        with open(confusion_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["true\\predicted"] + confusion.classes)
            writer.writerow(["clusters_per_class"] + confusion.clusters_per_class.tolist())
            for i, cls in enumerate(confusion.classes):
                writer.writerow([cls] + [f"{v:.6f}" for v in confusion.matrix[i]])
        _write_manifest(
            out,
            "evaluate",
            {"silhouette_metric": silhouette_metric},
            [assignment_csv, feature_file],
            [eval_path, confusion_path],
            None,
            started,
        )
        click.echo(f"homogeneity {h:.4f} over {rows.size} samples")

    _run_guarded(body)


@main.command()
@click.argument("outcome_json", type=click.Path(exists=True, path_type=Path))
@click.argument("feature_file", type=click.Path(exists=True, path_type=Path))
@click.option("--out", required=True, type=click.Path(path_type=Path))
def report(outcome_json: Path, feature_file: Path, out: Path) -> None:
    """Emit component histograms (CSV + SVG) and per-cluster mean images."""
    started = time.monotonic()

    def body() -> None:
        dataset = load_features(feature_file)
        with open(outcome_json) as fh:
            payload = json.load(fh)
        id_to_row = {sid: i for i, sid in enumerate(dataset.sample_ids)}
        labels = np.full(dataset.n_samples, -1, dtype=np.intp)
        if payload.get("final_assignment"):
            for sid, cid in payload["final_assignment"].items():
                labels[id_to_row[sid]] = cid
        else:
            for cluster in payload.get("clusters", []):
                for sid in cluster["sample_ids"]:
                    labels[id_to_row[sid]] = cluster["cluster_id"]

        out.mkdir(parents=True, exist_ok=True)
        outputs = []
        projected = fit_report_projection(
            dataset, payload.get("config", {}), payload.get("models")
        )
        if projected is not None:
            panels = component_histograms(projected, dataset.labels)
            csv_path = out / "components.csv"
            write_histogram_csv(panels, csv_path)
            svg_path = out / "components.svg"
            svg_path.write_text(render_histogram_svg(panels))
            outputs += [csv_path, svg_path]
        else:
            click.echo("no projection available; assignment-only report")

        summary_path = out / "cluster_summary.csv"
        write_cluster_summary(dataset, labels, summary_path)
        outputs.append(summary_path)
        means = cluster_mean_images(dataset, labels)
        if means is not None:
            outputs.extend(write_mean_images(means, out / "mean_images"))
        _write_manifest(
            out,
            "report",
            payload.get("config", {}),
            [outcome_json, feature_file],
            outputs,
            None,
            started,
        )
        click.echo(f"report written to {out}")

    _run_guarded(body)


@main.command()
@click.argument("feature_file", type=click.Path(exists=True, path_type=Path))
@_config_options
@click.option(
    "--baselines",
    default=",".join(BASELINES),
    show_default=True,
    help="Comma list from: " + ", ".join(BASELINES),
)
@click.option("--out", required=True, type=click.Path(path_type=Path))
def compare(
    feature_file, n_pca, n_clusters, n_min, silhouette_metric, dimred,
    cluster, seed, baselines, out,
):
    """Benchmark harvesting against one-shot baselines at matched cluster count."""
    started = time.monotonic()
    config = _config_from_flags(
        n_pca, n_clusters, n_min, silhouette_metric, _dimred_name(dimred), cluster, seed
    )
    names = tuple(b.strip() for b in baselines.split(",") if b.strip())
    for name in names:
        if name not in BASELINES:
            raise click.UsageError(f"unknown baseline {name!r}")

    def body() -> None:
        dataset = load_features(feature_file)
        if dataset.labels is None:
            raise click.UsageError("compare needs a labeled feature file")
        report = compare_runs(dataset, config, names)
        out.mkdir(parents=True, exist_ok=True)
        json_path = out / "benchmark.json"
        with open(json_path, "w") as fh:
            json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
        csv_path = out / "benchmark.csv"
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["method", "homogeneity_partial", "homogeneity_full", "n_clusters"]
            )
            for name, row in report.methods.items():
                writer.writerow(
                    [
                        name,
                        f"{row['homogeneity_partial']:.6f}",
                        f"{row['homogeneity_full']:.6f}",
                        row["n_clusters"],
                    ]
                )
        _write_manifest(
            out,
            "compare",
            config.to_dict(),
            [feature_file],
            [json_path, csv_path],
            seed,
            started,
        )
        for name, row in report.methods.items():
            click.echo(
                f"{name}: partial {row['homogeneity_partial']:.4f}, "
                f"full {row['homogeneity_full']:.4f}"
            )

    _run_guarded(body)


if __name__ == "__main__":
    main()
