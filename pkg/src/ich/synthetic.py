"""Deterministic synthetic wafer-map generator for eight defect classes.

Maps are ternary grids (outside wafer / pass / defect) on a square of cells
whose inscribed disc is the wafer. Class geometry is parameterized per map
from a PCG64 stream keyed by (class, size, seed), so identical inputs yield
identical grids on every platform. Classes mirror the usual taxonomy:
compact geometric patterns (Center, Donut, Ring, Near-Full) have fairly
uniform appearance, while Edge-Loc, Loc, Scratch and Random vary strongly in
position, orientation or density.

Feature encoding for clustering: outside = 0.0, pass = 0.5, defect = 1.0,
flattened row-major (exactly representable in float32).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .dataset import DataError, LabeledDataset

CLASS_NAMES = (
    "Center",
    "Donut",
    "Edge-Loc",
    "Loc",
    "Near-Full",
    "Random",
    "Ring",
    "Scratch",
)

OUTSIDE, PASS, DEFECT = 0, 1, 2
BACKGROUND_NOISE = 0.02
_SEED_MASK = (1 << 64) - 1

# Per-class shape/density ranges (as fractions of the wafer radius). Chosen
# so the taxonomy has both uniform-looking classes (Center, Donut, Ring,
# Near-Full) and classes whose position/orientation/density vary strongly
# (Edge-Loc, Loc, Scratch, Random).
GEOMETRY = {
    "Center": {"rho": (0.15, 0.35), "fill": (0.85, 1.0)},
    "Donut": {"r_in": (0.25, 0.45), "width": (0.2, 0.35), "fill": (0.85, 1.0)},
    "Ring": {"r_out": (0.9, 0.98), "thickness": (0.05, 0.12), "arc_prob": 0.5,
             "arc_span": (0.25, 0.75)},
    "Edge-Loc": {"blob_r": (0.22, 0.35)},
    "Loc": {"dist": (0.3, 0.55), "blob_r": (0.12, 0.2)},
    "Scratch": {"mid_r": (0.0, 0.2), "length": (1.2, 1.7), "jitter": 0.25,
                "width": 1},
    "Random": {"density": (0.05, 0.15), "block": 8},
    "Near-Full": {"density": (0.6, 0.9), "block": 8},
}


@dataclass(frozen=True)
class SyntheticWaferMap:
    grid: np.ndarray  # uint8 codes OUTSIDE/PASS/DEFECT
    label: str
    seed: int
    params: dict

    def to_features(self) -> np.ndarray:
        """Flattened row-major {0, 0.5, 1} encoding."""
        lut = np.array([0.0, 0.5, 1.0])
        return lut[self.grid].ravel()

    def to_image(self) -> Image.Image:
        lut = np.array([0, 128, 255], dtype=np.uint8)
        return Image.fromarray(lut[self.grid], mode="L")


def disc_mask(size: int) -> np.ndarray:
    """Boolean mask of cells inside the inscribed wafer disc."""
    c = (size - 1) / 2.0
    radius = size / 2.0 - 0.5
    ii, jj = np.mgrid[0:size, 0:size]
    return (ii - c) ** 2 + (jj - c) ** 2 <= radius**2


def _blob_mask(size: int, center_ij: tuple[float, float], radius: float) -> np.ndarray:
    ii, jj = np.mgrid[0:size, 0:size]
    return (ii - center_ij[0]) ** 2 + (jj - center_ij[1]) ** 2 <= radius**2


def _annulus_mask(size: int, r_in: float, r_out: float) -> np.ndarray:
    c = (size - 1) / 2.0
    ii, jj = np.mgrid[0:size, 0:size]
    rr = np.sqrt((ii - c) ** 2 + (jj - c) ** 2)
    return (rr >= r_in) & (rr <= r_out)


def _arc_mask(size: int, theta0: float, span: float) -> np.ndarray:
    c = (size - 1) / 2.0
    ii, jj = np.mgrid[0:size, 0:size]
    angles = np.mod(np.arctan2(ii - c, jj - c) - theta0, 2 * np.pi)
    return angles <= span


def _bernoulli_field(
    size: int, density: float, block: int, rng: np.random.Generator
) -> np.ndarray:
    """Bernoulli defect field, optionally drawn on a coarse block lattice.

    ``block`` is the number of blocks per side; 0 means independent cells.
    Real random-defect fields cluster spatially (whole dies or reticle shots
    fail together). Expected disc coverage equals ``density``.
    """
    if block <= 0 or block >= size:
        return rng.random((size, size)) < density
    cell_rate = 0.55 if density < 0.5 else 0.93
    block_px = max(size // block, 1)
    n_blocks = -(-size // block_px)
    coarse = rng.random((n_blocks, n_blocks)) < min(density / cell_rate, 1.0)
    up = np.repeat(np.repeat(coarse, block_px, axis=0), block_px, axis=1)
    return up[:size, :size] & (rng.random((size, size)) < cell_rate)


def _scratch_cells(size: int, spec: dict, rng: np.random.Generator) -> np.ndarray:
    """Thin polyline: a jittered chord passing near the wafer center."""
    c = (size - 1) / 2.0
    radius = size / 2.0 - 0.5
    mid_r = rng.uniform(*spec["mid_r"]) * radius
    mid_t = rng.uniform(0.0, 2 * np.pi)
    mid = np.array([c + mid_r * np.sin(mid_t), c + mid_r * np.cos(mid_t)])
    heading = rng.uniform(0.0, 2 * np.pi)
    total = rng.uniform(*spec["length"]) * radius
    segments = int(rng.integers(2, 5))
    pos = mid - (total / 2.0) * np.array([np.sin(heading), np.cos(heading)])
    mask = np.zeros((size, size), dtype=bool)
    jitter = spec["jitter"]
    for _ in range(segments):
        heading += rng.uniform(-jitter, jitter)
        seg_len = total / segments
        steps = max(int(seg_len * 2), 1)
        for _ in range(steps):
            pos += 0.5 * np.array([np.sin(heading), np.cos(heading)])
            i, j = int(round(pos[0])), int(round(pos[1]))
            if 0 <= i < size and 0 <= j < size:
                mask[i : i + spec["width"], j : j + spec["width"]] = True
    return mask


def generate_map(label: str, size: int, seed: int) -> SyntheticWaferMap:
    """Generate one wafer map; deterministic for fixed (label, size, seed)."""
    if label not in CLASS_NAMES:
        raise DataError(f"unknown defect class {label!r}")
    if size < 16:
        raise DataError("size must be >= 16")
    class_idx = CLASS_NAMES.index(label)
    rng = np.random.default_rng(
        np.random.SeedSequence([class_idx, size, seed & _SEED_MASK])
    )

    disc = disc_mask(size)
    c = (size - 1) / 2.0
    radius = size / 2.0 - 0.5
    spec = GEOMETRY[label]
    params: dict = {}
    pattern = np.zeros((size, size), dtype=bool)

    if label == "Center":
        rho = rng.uniform(*spec["rho"])
        fill = rng.uniform(*spec["fill"])
        params = {"rho": rho, "fill": fill}
        pattern = _blob_mask(size, (c, c), rho * radius)
        pattern &= rng.random((size, size)) < fill
    elif label == "Donut":
        r_in = rng.uniform(*spec["r_in"])
        r_out = min(r_in + rng.uniform(*spec["width"]), 0.85)
        fill = rng.uniform(*spec["fill"])
        params = {"r_in": r_in, "r_out": r_out, "fill": fill}
        pattern = _annulus_mask(size, r_in * radius, r_out * radius)
        pattern &= rng.random((size, size)) < fill
    elif label == "Ring":
        r_out = rng.uniform(*spec["r_out"])
        thickness = rng.uniform(*spec["thickness"])
        segment = bool(rng.random() < spec["arc_prob"])
        params = {"r_out": r_out, "thickness": thickness, "segment": segment}
        pattern = _annulus_mask(size, (r_out - thickness) * radius, r_out * radius)
        if segment:
            theta0 = rng.uniform(0.0, 2 * np.pi)
            span = rng.uniform(*spec["arc_span"]) * 2 * np.pi
            params.update({"theta0": theta0, "span": span})
            pattern &= _arc_mask(size, theta0, span)
    elif label == "Edge-Loc":
        theta = rng.uniform(0.0, 2 * np.pi)
        blob_r = rng.uniform(*spec["blob_r"]) * radius
        params = {"theta": theta, "blob_r": blob_r}
        center = (c + radius * np.sin(theta), c + radius * np.cos(theta))
        pattern = _blob_mask(size, center, blob_r)
    elif label == "Loc":
        theta = rng.uniform(0.0, 2 * np.pi)
        dist = rng.uniform(*spec["dist"]) * radius
        blob_r = rng.uniform(*spec["blob_r"]) * radius
        params = {"theta": theta, "dist": dist, "blob_r": blob_r}
        center = (c + dist * np.sin(theta), c + dist * np.cos(theta))
        pattern = _blob_mask(size, center, blob_r)
    elif label == "Scratch":
        pattern = _scratch_cells(size, spec, rng)
        params = {}
    elif label == "Random":
        density = rng.uniform(*spec["density"])
        params = {"density": density}
        pattern = _bernoulli_field(size, density, spec["block"], rng)
    elif label == "Near-Full":
        density = rng.uniform(*spec["density"])
        params = {"density": density}
        pattern = _bernoulli_field(size, density, spec["block"], rng)

    noise = rng.random((size, size)) < BACKGROUND_NOISE
    defects = (pattern | noise) & disc

    grid = np.full((size, size), OUTSIDE, dtype=np.uint8)
    grid[disc] = PASS
    grid[defects] = DEFECT
    return SyntheticWaferMap(grid, label, seed, params)


def _map_seed(seed: int, size: int, class_idx: int, index: int) -> int:
    ss = np.random.SeedSequence([seed & _SEED_MASK, size, class_idx, index])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def generate_dataset(
    class_counts: dict[str, int], size: int = 64, seed: int = 0
) -> tuple[LabeledDataset, list[SyntheticWaferMap]]:
    """Generate a labeled dataset of flattened maps plus the maps themselves.

    Sample ids follow the image archive naming: ``{label}_{index}_{seed}``.
    """
    for label, count in class_counts.items():
        if label not in CLASS_NAMES:
            raise DataError(f"unknown defect class {label!r}")
        if count < 0:
            raise DataError("class counts must be >= 0")
    maps: list[SyntheticWaferMap] = []
    ids: list[str] = []
    labels: list[str] = []
    for label in CLASS_NAMES:
        count = class_counts.get(label, 0)
        class_idx = CLASS_NAMES.index(label)
        for i in range(count):
            wafer = generate_map(label, size, _map_seed(seed, size, class_idx, i))
            maps.append(wafer)
            ids.append(f"{label}_{i}_{seed}")
            labels.append(label)
    if maps:
        features = np.stack([m.to_features() for m in maps])
    else:
        features = np.zeros((0, size * size))
    return LabeledDataset(features, ids, labels), maps


def write_image_archive(maps: list[SyntheticWaferMap], ids: list[str], out_dir) -> Path:
    """Write one grayscale PNG per map plus a ``manifest.csv`` (filename,label)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = out_dir / "manifest.csv"
    with open(manifest, "w", newline="") as fh:
        fh.write("filename,label\n")
        for wafer, stem in zip(maps, ids):
            filename = f"{stem}.png"
            wafer.to_image().save(out_dir / filename)
            fh.write(f"{filename},{wafer.label}\n")
    return manifest
