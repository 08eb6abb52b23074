"""Dataset ingestion: IDX parsing and checksum-verified download.

IDX is the big-endian binary container of the classic digit files: a 4-byte
magic (0x00000803 for uint8 image tensors, 0x00000801 for label vectors),
one big-endian int32 per dimension, then raw bytes.
"""

from __future__ import annotations

import gzip
import hashlib
import os
import struct
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path

import numpy as np

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801

DEFAULT_BASE_URL = "https://storage.googleapis.com/cvdf-datasets/mnist/"

# file name -> md5 of the gzipped archive
ARCHIVES = {
    "train-images-idx3-ubyte": ("train-images-idx3-ubyte.gz", "f68b3c2dcbeaaa9fbdd348bbdeb94873"),
    "train-labels-idx1-ubyte": ("train-labels-idx1-ubyte.gz", "d53e105ee54ea40749a09fcbcd1e9432"),
    "t10k-images-idx3-ubyte": ("t10k-images-idx3-ubyte.gz", "9fb629c4189551a2d022fa330f9573f3"),
    "t10k-labels-idx1-ubyte": ("t10k-labels-idx1-ubyte.gz", "ec29112dd5afa0611ce80d1b7f02629c"),
}

DATA_DIR_ENV = "LMSNN_DATA_DIR"


class DataError(Exception):
    """Dataset missing, unreadable, or failing validation."""


class IdxFormatError(DataError):
    """Malformed IDX content."""


@dataclass
class Dataset:
    """Images as (M, N, N) uint8 with int labels and a split tag."""

    images: np.ndarray
    labels: np.ndarray
    split: str = ""

    def __post_init__(self):
        if len(self.images) != len(self.labels):
            raise IdxFormatError(
                f"image/label count mismatch: {len(self.images)} images vs {len(self.labels)} labels"
            )

    def __len__(self) -> int:
        return len(self.images)

    @property
    def side(self) -> int:
        return self.images.shape[1]

    def take(self, limit: int | None) -> "Dataset":
        if limit is None or limit >= len(self):
            return self
        return Dataset(self.images[:limit], self.labels[:limit], self.split)


def _read_idx(path, expected_magic: int) -> np.ndarray:
    path = Path(path)
    try:
        buf = path.read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if len(buf) < 8:
        raise IdxFormatError(f"{path}: truncated header ({len(buf)} bytes)")
    (magic,) = struct.unpack(">i", buf[:4])
    if magic != expected_magic:
        raise IdxFormatError(
            f"{path}: bad magic 0x{magic:08x}, expected 0x{expected_magic:08x}"
        )
    ndim = magic & 0xFF
    header_len = 4 + 4 * ndim
    if len(buf) < header_len:
        raise IdxFormatError(f"{path}: truncated dimension header")
    dims = struct.unpack(f">{ndim}i", buf[4:header_len])
    count = int(np.prod(dims))
    data = np.frombuffer(buf, dtype=np.uint8, offset=header_len)
    if data.size != count:
        raise IdxFormatError(
            f"{path}: payload holds {data.size} bytes but dimensions {dims} require {count}"
        )
    return data.reshape(dims)


def load_idx(images_path, labels_path, split: str = "") -> Dataset:
    """Parse an images/labels IDX file pair into a validated Dataset."""
    images = _read_idx(images_path, IMAGES_MAGIC)
    labels = _read_idx(labels_path, LABELS_MAGIC).astype(np.int64)
    if images.shape[1] != images.shape[2]:
        raise IdxFormatError(f"{images_path}: non-square images {images.shape[1:]} unsupported")
    return Dataset(images=images, labels=labels, split=split)


def resolve_data_dir(data_dir=None) -> Path:
    """Explicit path, else the LMSNN_DATA_DIR environment variable, else ./data."""
    if data_dir is not None:
        return Path(data_dir)
    env = os.environ.get(DATA_DIR_ENV)
    return Path(env) if env else Path("data")


def dataset_paths(data_dir=None) -> dict[str, Path]:
    root = resolve_data_dir(data_dir)
    return {name: root / name for name in ARCHIVES}


def load_split(split: str, data_dir=None) -> Dataset:
    """Load the train or test split from a data directory, with a pointer to
    the fetch command when files are absent."""
    prefix = {"train": "train", "test": "t10k"}[split]
    paths = dataset_paths(data_dir)
    images = paths[f"{prefix}-images-idx3-ubyte"]
    labels = paths[f"{prefix}-labels-idx1-ubyte"]
    for p in (images, labels):
        if not p.exists():
            raise DataError(
                f"dataset file {p} not found; run `lmsnn fetch-data --data-dir {p.parent}` "
                f"or point {DATA_DIR_ENV} at an existing copy"
            )
    return load_idx(images, labels, split=split)


def fetch_dataset(data_dir=None, base_url: str = DEFAULT_BASE_URL, archives=None) -> dict[str, Path]:
    """Download, checksum-verify, and decompress the four IDX files.

    Files already present are left alone. Returns the file paths.
    """
    root = resolve_data_dir(data_dir)
    root.mkdir(parents=True, exist_ok=True)
    archives = ARCHIVES if archives is None else archives
    out = {}
    for name, (gz_name, md5) in archives.items():
        target = root / name
        out[name] = target
        if target.exists():
            continue
        url = base_url + gz_name
        try:
            with urllib.request.urlopen(url) as resp:
                payload = resp.read()
        except (urllib.error.URLError, OSError) as exc:
            raise DataError(f"download of {url} failed: {exc}") from exc
        digest = hashlib.md5(payload).hexdigest()
        if digest != md5:
            raise DataError(f"{gz_name}: checksum mismatch (got {digest}, expected {md5})")
        tmp = target.with_suffix(".tmp")
        tmp.write_bytes(gzip.decompress(payload))
        tmp.replace(target)
    return out
