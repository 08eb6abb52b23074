"""Lattice geometry, lateral inhibition profiles, and inhibition scheduling.

Excitatory neurons sit on a k x k grid (row-major indexing, unit spacing,
no wrap-around). Inhibition between neurons i and j is a non-positive weight
derived from their Euclidean grid distance d:

    w(i, j) = -min(level * sqrt(d), c_max)

where `level` is either a fixed multiplier (increasing strategy) or a value
that moves over the training run (growing, two-level). The constant strategy
ignores distance entirely: every off-diagonal pair gets -c_max.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .config import ConfigError

CONSTANT = "constant"
INCREASING = "increasing"
GROWING = "growing"
TWO_LEVEL = "two-level"
STRATEGIES = (CONSTANT, INCREASING, GROWING, TWO_LEVEL)

DISTANCE_MODES = ("sqrt", "linear")


@dataclass(frozen=True)
class InhibitionSchedule:
    """How the inhibition level evolves over a training run.

    total_steps counts planned training examples. c_inhib is the fixed
    distance multiplier used by the increasing strategy only; the other
    distance-based strategies derive their multiplier from the schedule.
    """

    strategy: str = TWO_LEVEL
    c_min: float = 0.1
    c_max: float = 20.0
    p_low: float = 0.1
    p_grow: float = 1.0
    c_inhib: float = 0.5
    total_steps: int = 60000

    def validate(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown inhibition strategy {self.strategy!r}, expected one of {STRATEGIES}")
        if not (0.0 <= self.p_low <= 1.0):
            raise ConfigError(f"p_low must lie in [0, 1], got {self.p_low}")
        if not (0.0 <= self.p_grow <= 1.0):
            raise ConfigError(f"p_grow must lie in [0, 1], got {self.p_grow}")
        if not (0.0 <= self.c_min <= self.c_max):
            raise ConfigError(f"need 0 <= c_min <= c_max, got c_min={self.c_min}, c_max={self.c_max}")
        if self.c_inhib < 0.0:
            raise ConfigError("c_inhib must be non-negative")
        if self.total_steps < 0:
            raise ConfigError("total_steps must be non-negative")

    def with_total(self, total_steps: int) -> "InhibitionSchedule":
        return replace(self, total_steps=total_steps)


def lattice_coords(k: int) -> np.ndarray:
    """(row, col) grid coordinates for all k*k neurons in row-major order."""
    idx = np.arange(k * k)
    return np.stack((idx // k, idx % k), axis=1)


def lattice_distance(i: int, j: int, k: int) -> float:
    """Euclidean distance between neurons i and j on a k x k grid."""
    n = k * k
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"neuron index out of range for k={k}: i={i}, j={j}")
    ri, ci = divmod(i, k)
    rj, cj = divmod(j, k)
    return math.hypot(ri - rj, ci - cj)


def inhibition_weight(d, c_inhib, c_max, distance_mode: str = "sqrt"):
    """Non-positive inhibitory weight for grid distance d.

    Scales with sqrt(d) by default; the magnitude never exceeds c_max.
    Broadcasts over array arguments.
    """
    d = np.asarray(d, dtype=np.float64)
    if distance_mode == "sqrt":
        profile = np.sqrt(d)
    elif distance_mode == "linear":
        profile = d
    else:
        raise ConfigError(f"unknown distance_mode {distance_mode!r}")
    w = -np.minimum(np.asarray(c_inhib, dtype=np.float64) * profile, c_max)
    return float(w) if w.ndim == 0 else w


def schedule_level(step: int, sched: InhibitionSchedule) -> float:
    """Inhibition level at training-example index step.

    Constant and increasing runs sit at c_max for their whole duration (the
    increasing strategy varies with distance, not time). Growing ramps
    linearly from c_min, reaching c_max at p_grow * total_steps and holding.
    Two-level sits at c_min and jumps to c_max at the p_low mark; the
    boundary example itself belongs to the high phase.
    """
    if sched.strategy in (CONSTANT, INCREASING):
        return sched.c_max
    if sched.strategy == TWO_LEVEL:
        if sched.total_steps <= 0:
            return sched.c_max
        return sched.c_min if step / sched.total_steps < sched.p_low else sched.c_max
    ramp = sched.p_grow * sched.total_steps
    if ramp <= 0.0:
        return sched.c_max
    return sched.c_min + (sched.c_max - sched.c_min) * min(step / ramp, 1.0)


def build_inhibition_matrix(
    k: int, c_inhib: float, c_max: float, strategy: str, distance_mode: str = "sqrt"
) -> np.ndarray:
    """k^2 x k^2 inhibitory weight matrix, zero diagonal, entries <= 0.

    The constant strategy pins every off-diagonal entry to -c_max and ignores
    c_inhib; distance-based strategies apply inhibition_weight to pairwise
    grid distances with multiplier c_inhib.
    """
    n = k * k
    if strategy == CONSTANT:
        m = np.full((n, n), -c_max, dtype=np.float64)
        np.fill_diagonal(m, 0.0)
        return m
    coords = lattice_coords(k).astype(np.float64)
    diff = coords[:, None, :] - coords[None, :, :]
    d = np.sqrt((diff * diff).sum(axis=2))
    m = inhibition_weight(d, c_inhib, c_max, distance_mode)
    np.fill_diagonal(m, 0.0)
    return m


def sparse_mask(n_input: int, k: int, sparsity: float, rng: np.random.Generator) -> np.ndarray:
    """Boolean input connectivity mask of shape (n_input^2, k^2).

    Each input->excitatory synapse is kept independently with probability
    1 - sparsity. Masked synapses stay at weight zero for the network's
    lifetime and never take plasticity updates.
    """
    if not (0.0 <= sparsity <= 1.0):
        raise ConfigError(f"sparsity must lie in [0, 1], got {sparsity}")
    return rng.random((n_input * n_input, k * k)) >= sparsity


@dataclass
class LatticeTopology:
    """Geometry plus the current inhibition matrix for one network.

    current_level is the multiplier baked into inhib_matrix; the matrix is
    rebuilt only when the schedule moves it (twice in total for two-level).
    """

    n_input: int
    k: int
    strategy: str
    schedule: InhibitionSchedule
    coords: np.ndarray
    inhib_matrix: np.ndarray
    input_mask: np.ndarray
    sparsity: float
    distance_mode: str = "sqrt"
    current_level: float = field(default=0.0)

    @classmethod
    def build(
        cls,
        n_input: int,
        k: int,
        schedule: InhibitionSchedule,
        sparsity: float,
        rng: np.random.Generator,
        distance_mode: str = "sqrt",
    ) -> "LatticeTopology":
        if k <= 0 or n_input <= 0:
            raise ConfigError(f"lattice and input sides must be positive, got k={k}, n_input={n_input}")
        if distance_mode not in DISTANCE_MODES:
            raise ConfigError(f"unknown distance_mode {distance_mode!r}")
        schedule.validate()
        mask = sparse_mask(n_input, k, sparsity, rng)
        topo = cls(
            n_input=n_input,
            k=k,
            strategy=schedule.strategy,
            schedule=schedule,
            coords=lattice_coords(k),
            inhib_matrix=np.zeros((k * k, k * k)),
            input_mask=mask,
            sparsity=sparsity,
            distance_mode=distance_mode,
        )
        topo.current_level = math.nan  # force first build
        topo.update_for_step(0)
        return topo

    @property
    def n_exc(self) -> int:
        return self.k * self.k

    def level_for_step(self, step: int) -> float:
        """Distance multiplier in effect at this training step."""
        if self.strategy == INCREASING:
            return self.schedule.c_inhib
        return schedule_level(step, self.schedule)

    def update_for_step(self, step: int) -> bool:
        """Rebuild inhib_matrix if the schedule moved; True when rebuilt."""
        level = self.level_for_step(step)
        if level == self.current_level:
            return False
        self.inhib_matrix = build_inhibition_matrix(
            self.k, level, self.schedule.c_max, self.strategy, self.distance_mode
        )
        self.current_level = level
        return True
