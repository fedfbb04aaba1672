"""Run reports: leading-component histograms (CSV + SVG) and cluster mean images.

SVG is emitted by hand so reports stay dependency-free and diffable.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from PIL import Image

from .dataset import LabeledDataset
from .projection import DimensionReducer

MAX_COMPONENTS = 7
_N_BINS = 24

_PALETTE = (
    "#4c78a8",
    "#f58518",
    "#54a24b",
    "#e45756",
    "#72b7b2",
    "#eeca3b",
    "#b279a2",
    "#9d755d",
    "#bab0ac",
    "#637939",
)


def component_histograms(
    projected: np.ndarray, labels: list[str] | None, n_bins: int = _N_BINS
) -> list[dict]:
    """Histogram data for the first MAX_COMPONENTS columns, split by label."""
    n, k = projected.shape
    groups = sorted(set(labels)) if labels else ["all"]
    label_arr = np.asarray(labels if labels else ["all"] * n)
    panels = []
    for comp in range(min(k, MAX_COMPONENTS)):
        values = projected[:, comp]
        lo, hi = float(values.min()), float(values.max())
        if lo == hi:
            hi = lo + 1.0
        edges = np.linspace(lo, hi, n_bins + 1)
        series = {}
        for group in groups:
            counts, _ = np.histogram(values[label_arr == group], bins=edges)
            series[group] = counts
        panels.append({"component": comp, "edges": edges, "series": series})
    return panels


def write_histogram_csv(panels: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["component", "bin_left", "bin_right", "label", "count"])
        for panel in panels:
            edges = panel["edges"]
            for label, counts in panel["series"].items():
                for b, count in enumerate(counts):
                    writer.writerow(
                        [
                            panel["component"],
                            f"{edges[b]:.6g}",
                            f"{edges[b + 1]:.6g}",
                            label,
                            int(count),
                        ]
                    )


def render_histogram_svg(panels: list[dict]) -> str:
    """One stacked layout of per-component histograms, colored by label."""
    width, panel_h, gap, margin = 680, 110, 18, 40
    legend_h = 24
    height = margin + legend_h + len(panels) * (panel_h + gap)
    groups = sorted({g for p in panels for g in p["series"]})
    colors = {g: _PALETTE[i % len(_PALETTE)] for i, g in enumerate(groups)}

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" font-family="sans-serif" font-size="11">'
    ]
    x = margin
    for group in groups:
        parts.append(
            f'<rect x="{x}" y="{margin - 14}" width="10" height="10" '
            f'fill="{colors[group]}"/>'
            f'<text x="{x + 14}" y="{margin - 5}">{group}</text>'
        )
        x += 14 + 7 * len(group) + 18
    top = margin + legend_h
    plot_w = width - 2 * margin
    for panel in panels:
        edges = panel["edges"]
        peak = max((int(c.max()) for c in panel["series"].values()), default=1) or 1
        lo, hi = edges[0], edges[-1]
        parts.append(
            f'<text x="{margin}" y="{top - 4}" font-weight="bold">'
            f'component {panel["component"]}</text>'
        )
        parts.append(
            f'<line x1="{margin}" y1="{top + panel_h}" x2="{margin + plot_w}" '
            f'y2="{top + panel_h}" stroke="#999"/>'
        )
        for group in groups:
            counts = panel["series"].get(group)
            if counts is None:
                continue
            for b, count in enumerate(counts):
                if count == 0:
                    continue
                x0 = margin + plot_w * (edges[b] - lo) / (hi - lo)
                x1 = margin + plot_w * (edges[b + 1] - lo) / (hi - lo)
                h = panel_h * count / peak
                parts.append(
                    f'<rect x="{x0:.2f}" y="{top + panel_h - h:.2f}" '
                    f'width="{max(x1 - x0, 0.5):.2f}" height="{h:.2f}" '
                    f'fill="{colors[group]}" fill-opacity="0.5"/>'
                )
        top += panel_h + gap
    parts.append("</svg>")
    return "\n".join(parts)


def image_side(n_dims: int) -> int | None:
    """Side length when features are flattened square images, else None."""
    side = int(round(n_dims**0.5))
    return side if side * side == n_dims else None


def cluster_mean_images(
    dataset: LabeledDataset, labels: np.ndarray
) -> dict[int, np.ndarray] | None:
    """Per-cluster mean of the (square-image) feature rows; None if not images."""
    side = image_side(dataset.n_dims)
    if side is None:
        return None
    means = {}
    for cid in sorted(set(int(c) for c in labels if c >= 0)):
        rows = dataset.features[labels == cid]
        means[cid] = rows.mean(axis=0).reshape(side, side)
    return means


def write_mean_images(means: dict[int, np.ndarray], out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for cid, mean in means.items():
        scaled = np.clip(mean, 0.0, 1.0)
        img = Image.fromarray((scaled * 255).astype(np.uint8), mode="L")
        path = out_dir / f"cluster_{cid}_mean.png"
        img.save(path)
        paths.append(path)
    return paths


def write_cluster_summary(
    dataset: LabeledDataset, labels: np.ndarray, path
) -> None:
    """Per-cluster size and (when labeled) majority-class summary CSV."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cluster_id", "size", "majority_label"])
        for cid in sorted(set(int(c) for c in labels if c >= 0)):
            members = np.flatnonzero(labels == cid)
            majority = ""
            if dataset.labels is not None:
                counts: dict[str, int] = {}
                for i in members:
                    lab = dataset.labels[i]
                    counts[lab] = counts.get(lab, 0) + 1
                majority = min(
                    counts, key=lambda lab: (-counts[lab], lab)
                )
            writer.writerow([cid, members.size, majority])


def fit_report_projection(
    dataset: LabeledDataset, config_dict: dict, models: list[dict] | None
) -> np.ndarray | None:
    """Projected data for the report panels.

    Uses the first traced model when present, otherwise refits on the full
    dataset (identical to the first harvest iteration since fitting is
    deterministic). Returns None when the run used no reduction.
    """
    if models:
        reducer = DimensionReducer.from_dict(models[0])
        return reducer.transform(dataset.features)
    if config_dict.get("dimred", "pca") == "none":
        return None
    reducer = DimensionReducer(
        config_dict.get("dimred", "pca"), config_dict.get("n_pca", 20)
    ).fit(dataset.features)
    return reducer.transform(dataset.features)
