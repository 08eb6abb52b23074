"""Artifact export: tiled filter maps (PGM), assignment maps (CSV + PPM),
and the results table.

Everything here is dependency-free on purpose: PGM (P5) and PPM (P6) are
single-header binary formats any image tool can open.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .evaluation import UNASSIGNED, VotingModel, mean_std

RESULTS_HEADER = (
    "strategy",
    "k",
    "p_low",
    "c_min",
    "c_max",
    "sparsity",
    "epochs",
    "seed",
    "scheme",
    "accuracy",
    "stddev",
)

# one distinct color per class, plus gray for unassigned
PALETTE = np.array(
    [
        (31, 119, 180),
        (255, 127, 14),
        (44, 160, 44),
        (214, 39, 40),
        (148, 103, 189),
        (140, 86, 75),
        (227, 119, 194),
        (188, 189, 34),
        (23, 190, 207),
        (255, 255, 0),
    ],
    dtype=np.uint8,
)
UNASSIGNED_COLOR = np.array((128, 128, 128), dtype=np.uint8)


def _write_pnm(path: Path, magic: bytes, pixels: np.ndarray) -> None:
    h, w = pixels.shape[:2]
    with open(path, "wb") as f:
        f.write(magic + b"\n%d %d\n255\n" % (w, h))
        f.write(np.ascontiguousarray(pixels, dtype=np.uint8).tobytes())


def filter_map_pixels(weights: np.ndarray, k: int, n_input: int) -> np.ndarray:
    """Tile each neuron's reshaped weight column onto the k x k lattice.

    One-pixel separator lines divide the tiles; intensities are min-max
    scaled to 0-255 over the whole weight matrix. A degenerate all-equal
    matrix maps to 0 everywhere.
    """
    n = n_input
    side = k * n + (k - 1)
    lo = float(weights.min())
    hi = float(weights.max())
    scale = 255.0 / (hi - lo) if hi > lo else 0.0
    canvas = np.zeros((side, side), dtype=np.uint8)
    for idx in range(k * k):
        r, c = divmod(idx, k)
        tile = (weights[:, idx].reshape(n, n) - lo) * scale
        canvas[r * (n + 1) : r * (n + 1) + n, c * (n + 1) : c * (n + 1) + n] = tile.astype(np.uint8)
    return canvas


def export_filter_map(weights: np.ndarray, k: int, n_input: int, path) -> Path:
    """Write the tiled filter map as a binary PGM (P5) grayscale image."""
    path = Path(path)
    _write_pnm(path, b"P5", filter_map_pixels(weights, k, n_input))
    return path


def export_assignment_map(model: VotingModel, k: int, path) -> tuple[Path, Path]:
    """Write neuron class assignments as a k x k CSV grid (with -1 for
    unassigned) plus a color-coded PPM image next to it."""
    path = Path(path)
    grid = np.asarray(model.assignments, dtype=np.int64).reshape(k, k)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        for row in grid:
            writer.writerow([int(x) for x in row])
    pixels = np.empty((k, k, 3), dtype=np.uint8)
    unassigned = grid == UNASSIGNED
    safe = np.where(unassigned, 0, grid % len(PALETTE))
    pixels[:] = PALETTE[safe]
    pixels[unassigned] = UNASSIGNED_COLOR
    image_path = path.with_suffix(".ppm")
    _write_pnm(image_path, b"P6", pixels)
    return path, image_path


def read_assignment_map(path) -> np.ndarray:
    with open(path, newline="") as f:
        return np.array([[int(x) for x in row] for row in csv.reader(f)], dtype=np.int64)


def format_result_row(row: dict) -> dict:
    out = dict(row)
    out["accuracy"] = f"{float(row['accuracy']):.4f}"
    out["stddev"] = f"{float(row.get('stddev', 0.0)):.4f}"
    return out


def write_results(rows: list[dict], path) -> Path:
    """Append result rows to a CSV, creating it (with header) if needed."""
    path = Path(path)
    exists = path.exists() and path.stat().st_size > 0
    if exists:
        with open(path, newline="") as f:
            header = next(csv.reader(f), None)
        if header != list(RESULTS_HEADER):
            raise ValueError(f"{path}: existing header {header} does not match {list(RESULTS_HEADER)}")
    with open(path, "a", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=RESULTS_HEADER)
        if not exists:
            writer.writeheader()
        for row in rows:
            writer.writerow(format_result_row(row))
    return path


def read_results(path) -> list[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def results_to_string(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=RESULTS_HEADER)
    writer.writeheader()
    for row in rows:
        writer.writerow(format_result_row(row))
    return buf.getvalue()


def aggregate_results(rows: list[dict]) -> tuple[float, float]:
    """Mean and sample stddev of the accuracy column of result rows."""
    return mean_std([float(r["accuracy"]) for r in rows])


CURVE_HEADER = ("examples", "raw_accuracy", "smoothed_accuracy")


def write_curve(curve, path) -> Path:
    """Write a convergence curve as CSV (one row per estimate)."""
    path = Path(path)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CURVE_HEADER)
        for n, raw, smoothed in zip(curve.examples, curve.raw, curve.smoothed):
            writer.writerow([int(n), f"{raw:.4f}", f"{smoothed:.4f}"])
    return path
