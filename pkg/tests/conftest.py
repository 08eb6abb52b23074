"""Shared test fixtures: fast simulation configs, a synthetic separable
image set, and IDX dataset writers for exercising the full pipeline without
the real digit files."""

import gzip
import hashlib
import struct

import numpy as np
import pytest

from lmsnn.config import SimConfig
from lmsnn.data import IMAGES_MAGIC, LABELS_MAGIC
from lmsnn.network import Network
from lmsnn.topology import TWO_LEVEL, InhibitionSchedule

BLOB_SIDE = 12
BLOB_CLASSES = 3


def fast_sim(seed=0, **kw):
    """A config whose presentations run in a few milliseconds."""
    base = dict(
        dt=0.5,
        present_duration=70.0,
        rest_duration=15.0,
        rate_scale=0.6,
        min_spikes=3,
        seed=seed,
    )
    base.update(kw)
    return SimConfig(**base)


def blob_image(cls, rng, side=BLOB_SIDE):
    """Class-coded bright region plus sparse speckle noise."""
    img = np.zeros((side, side), dtype=np.int64)
    if cls == 0:
        img[1:6, 1:6] = 210
    elif cls == 1:
        img[6:11, 6:11] = 210
    else:
        img[5:8, :] = 210
    img += (rng.random((side, side)) < 0.02) * 60
    return np.clip(img, 0, 255).astype(np.uint8)


def blob_arrays(n, seed=0, side=BLOB_SIDE):
    """(images, labels) arrays cycling through the blob classes."""
    rng = np.random.default_rng(seed)
    labels = np.arange(n, dtype=np.int64) % BLOB_CLASSES
    images = np.stack([blob_image(int(c), rng, side) for c in labels])
    return images, labels


def small_net(seed=0, k=4, n_input=BLOB_SIDE, strategy=TWO_LEVEL, total=60, sparsity=0.0, **sched_kw):
    sched = InhibitionSchedule(strategy=strategy, total_steps=total, **sched_kw)
    return Network(fast_sim(seed), sched, k, n_input=n_input, sparsity=sparsity)


def write_idx(path, arr, magic):
    arr = np.asarray(arr, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(f">i{arr.ndim}i", magic, *arr.shape))
        fh.write(arr.tobytes())


def write_dataset_dir(root, train, test):
    """Write (images, labels) pairs in the standard four-file layout."""
    root.mkdir(parents=True, exist_ok=True)
    write_idx(root / "train-images-idx3-ubyte", train[0], IMAGES_MAGIC)
    write_idx(root / "train-labels-idx1-ubyte", train[1], LABELS_MAGIC)
    write_idx(root / "t10k-images-idx3-ubyte", test[0], IMAGES_MAGIC)
    write_idx(root / "t10k-labels-idx1-ubyte", test[1], LABELS_MAGIC)
    return root


def stage_gz_archives(src_dir):
    """Gzip a tiny synthetic dataset into src_dir under the standard archive
    names; returns an archive table {name: (gz_name, md5)} with the real
    checksums of the staged files."""
    src_dir.mkdir(parents=True, exist_ok=True)
    train_x, train_y = blob_arrays(6, seed=1)
    test_x, test_y = blob_arrays(4, seed=2)
    archives = {}
    for name, arr, magic in (
        ("train-images-idx3-ubyte", train_x, IMAGES_MAGIC),
        ("train-labels-idx1-ubyte", train_y, LABELS_MAGIC),
        ("t10k-images-idx3-ubyte", test_x, IMAGES_MAGIC),
        ("t10k-labels-idx1-ubyte", test_y, LABELS_MAGIC),
    ):
        write_idx(src_dir / name, arr, magic)
        gz = gzip.compress((src_dir / name).read_bytes())
        (src_dir / f"{name}.gz").write_bytes(gz)
        archives[name] = (f"{name}.gz", hashlib.md5(gz).hexdigest())
    return archives


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def blob_data_dir(tmp_path_factory):
    """A complete on-disk dataset of blob images, shared across tests."""
    root = tmp_path_factory.mktemp("blobdata")
    write_dataset_dir(root, blob_arrays(120, seed=10), blob_arrays(45, seed=20))
    return root


@pytest.fixture(scope="session")
def trained_blob_net():
    """One network trained on 90 blob examples, with its training stream.

    Session-scoped: training is the expensive part and every consumer only
    reads from the result.
    """
    net = small_net(seed=3, k=4, total=90, c_min=0.1, c_max=20.0, p_low=0.1)
    images, labels = blob_arrays(90, seed=42)
    records = [(net.train_example(img), int(lab)) for img, lab in zip(images, labels)]
    return net, records
