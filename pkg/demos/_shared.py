"""Tiny synthetic image set shared by the demo scripts.

Three 12x12 "blob" classes — a top-left square, a bottom-right square, and a
horizontal bar — plus light speckle noise. They are separable enough that a
small lattice organizes within a few dozen presentations, so every demo runs
in seconds without downloading the real digit files.
"""

import struct

import numpy as np

from lmsnn import SimConfig
from lmsnn.data import IMAGES_MAGIC, LABELS_MAGIC

SIDE = 12
NUM_CLASSES = 3


def toy_sim(seed=0, **overrides):
    """A simulation config tuned for demo speed: short presentations and a
    hot input drive so small lattices spike reliably."""
    base = dict(
        dt=0.5,
        present_duration=70.0,
        rest_duration=15.0,
        rate_scale=0.6,
        min_spikes=3,
        seed=seed,
    )
    base.update(overrides)
    return SimConfig(**base)


def toy_image(cls, rng, side=SIDE):
    img = np.zeros((side, side), dtype=np.int64)
    if cls == 0:
        img[1:6, 1:6] = 210
    elif cls == 1:
        img[6:11, 6:11] = 210
    else:
        img[5:8, :] = 210
    img += (rng.random((side, side)) < 0.02) * 60
    return np.clip(img, 0, 255).astype(np.uint8)


def toy_arrays(n, seed=0, side=SIDE):
    """(images, labels) arrays cycling through the three classes."""
    rng = np.random.default_rng(seed)
    labels = np.arange(n, dtype=np.int64) % NUM_CLASSES
    images = np.stack([toy_image(int(c), rng, side) for c in labels])
    return images, labels


def write_idx(path, arr, magic):
    arr = np.asarray(arr, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(f">i{arr.ndim}i", magic, *arr.shape))
        fh.write(arr.tobytes())


def write_toy_dataset(root, n_train=90, n_test=30):
    """Write a full train/test split in the standard four-file layout so the
    disk-loading paths (sweeps, CLI) can consume the toy set."""
    root.mkdir(parents=True, exist_ok=True)
    train_x, train_y = toy_arrays(n_train, seed=10)
    test_x, test_y = toy_arrays(n_test, seed=20)
    write_idx(root / "train-images-idx3-ubyte", train_x, IMAGES_MAGIC)
    write_idx(root / "train-labels-idx1-ubyte", train_y, LABELS_MAGIC)
    write_idx(root / "t10k-images-idx3-ubyte", test_x, IMAGES_MAGIC)
    write_idx(root / "t10k-labels-idx1-ubyte", test_y, LABELS_MAGIC)
    return root
