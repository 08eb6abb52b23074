"""End-to-end experiment orchestration: configuration, training, labeling,
evaluation, sweeps, and convergence runs.

A RunConfig pins everything a run needs; (config, seed, dataset) fully
determines all outputs. Sweep grid points and trials are independent
networks, so they parallelize across processes.
"""

from __future__ import annotations

import dataclasses
import functools
import itertools
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .config import ConfigError, SimConfig
from .data import load_split
from .evaluation import (
    ConvergenceCurve,
    VotingModel,
    accuracy,
    assign_labels,
    convergence_curve,
    learn_ngrams,
    mean_std,
    vote_all,
    vote_confidence,
    vote_distance,
    vote_ngram,
)
from .network import Network, SpikeRecord
from .topology import TWO_LEVEL, InhibitionSchedule

logger = logging.getLogger("lmsnn")

SCHEMES = ("all", "confidence", "distance", "ngram")

WORKERS_ENV = "LMSNN_WORKERS"


@dataclass
class RunConfig:
    """Full recipe for an experiment run."""

    neurons: int = 625
    n_input: int = 28
    strategy: str = TWO_LEVEL
    p_low: float = 0.1
    p_grow: float = 1.0
    c_min: float = 0.1
    c_max: float = 20.0
    c_inhib: float = 0.5
    sparsity: float = 0.0
    distance_mode: str = "sqrt"
    epochs: int = 1
    seed: int = 0
    trials: int = 5
    train_limit: int | None = None
    test_limit: int | None = None
    label_limit: int = 12000
    voting: tuple[str, ...] | None = None
    ngram_n: int = 2
    ngram_learn_limit: int = 12000
    vote_all_normalized: bool = True
    ngram_normalized: bool = True
    num_classes: int = 10
    sim: SimConfig = field(default_factory=SimConfig)

    @property
    def k(self) -> int:
        k = round(self.neurons**0.5)
        if k * k != self.neurons:
            raise ConfigError(f"--neurons must be a perfect square (k x k lattice), got {self.neurons}")
        return k

    def schemes(self) -> tuple[str, ...]:
        if self.voting is None:
            return SCHEMES
        unknown = [s for s in self.voting if s not in SCHEMES]
        if unknown:
            raise ConfigError(f"unknown voting scheme(s) {unknown}, expected subset of {SCHEMES}")
        return tuple(self.voting)

    def schedule(self, total_examples: int) -> InhibitionSchedule:
        sched = InhibitionSchedule(
            strategy=self.strategy,
            c_min=self.c_min,
            c_max=self.c_max,
            p_low=self.p_low,
            p_grow=self.p_grow,
            c_inhib=self.c_inhib,
            total_steps=total_examples,
        )
        sched.validate()
        return sched

    def validate(self) -> None:
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        for name in ("train_limit", "test_limit"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.label_limit <= 0:
            raise ConfigError("label_limit must be positive")
        if self.ngram_n < 1:
            raise ConfigError("ngram n must be >= 1")
        _ = self.k
        _ = self.schemes()
        self.schedule(max(self.train_limit or 1, 1))
        self.sim.validate()

    def metadata(self) -> dict:
        """The provenance columns shared by every result row of this run."""
        return {
            "strategy": self.strategy,
            "k": self.k,
            "p_low": self.p_low,
            "c_min": self.c_min,
            "c_max": self.c_max,
            "sparsity": self.sparsity,
            "epochs": self.epochs,
            "seed": self.seed,
        }


def build_network(rc: RunConfig, total_examples: int, seed: int | None = None) -> Network:
    """Fresh network for this config; `seed` overrides rc.seed (trials)."""
    sim = dataclasses.replace(rc.sim, seed=rc.seed if seed is None else seed)
    return Network(
        sim,
        rc.schedule(total_examples),
        rc.k,
        n_input=rc.n_input,
        sparsity=rc.sparsity,
        distance_mode=rc.distance_mode,
    )


def train_network(
    net: Network,
    dataset,
    epochs: int = 1,
    collect: bool = False,
    log_every: int = 1000,
) -> list[tuple[SpikeRecord, int]] | None:
    """Run epochs x len(dataset) training presentations in order.

    With collect=True returns the per-example (record, label) stream, which
    convergence estimation consumes.
    """
    records: list[tuple[SpikeRecord, int]] | None = [] if collect else None
    total = epochs * len(dataset)
    done = 0
    t0 = time.perf_counter()
    spikes_since = 0
    for _ in range(epochs):
        for img, label in zip(dataset.images, dataset.labels):
            rec = net.train_example(img)
            if records is not None:
                records.append((rec, int(label)))
            done += 1
            spikes_since += rec.total
            if log_every and done % log_every == 0:
                dt = time.perf_counter() - t0
                logger.info(
                    "trained %d/%d examples (%.1f examples/s, mean spikes %.1f)",
                    done,
                    total,
                    done / dt if dt > 0 else 0.0,
                    spikes_since / log_every,
                )
                spikes_since = 0
    return records


def label_network(net: Network, dataset, rc: RunConfig) -> VotingModel:
    """Replay a labeling subset with plasticity off and build the voting
    model; the n-gram table comes from the first ngram_learn_limit of the
    same records."""
    subset = dataset.take(rc.label_limit)
    if len(subset) == 0:
        raise ValueError("labeling requires at least one example")
    records = [(net.infer_example(img), int(label)) for img, label in zip(subset.images, subset.labels)]
    model = assign_labels(records, rc.num_classes)
    model.n = rc.ngram_n
    model.ngram_table = learn_ngrams(records[: rc.ngram_learn_limit], rc.ngram_n, rc.num_classes)
    return model


def predict(scheme: str, rec: SpikeRecord, image, net: Network, model: VotingModel, rc: RunConfig) -> int:
    if scheme == "all":
        return vote_all(rec, model, normalize=rc.vote_all_normalized)[1]
    if scheme == "confidence":
        return vote_confidence(rec, model)[1]
    if scheme == "distance":
        return vote_distance(image, net.weights, model)
    if scheme == "ngram":
        return vote_ngram(rec, model, normalized=rc.ngram_normalized)[1]
    raise ConfigError(f"unknown voting scheme {scheme!r}")


def evaluate_network(net: Network, model: VotingModel, dataset, rc: RunConfig) -> dict[str, float]:
    """One replay of the test subset, scored under every requested scheme."""
    schemes = rc.schemes()
    subset = dataset.take(rc.test_limit)
    if len(subset) == 0:
        raise ValueError("evaluation requires at least one example")
    preds: dict[str, list[int]] = {s: [] for s in schemes}
    for img, _ in zip(subset.images, subset.labels):
        rec = net.infer_example(img)
        for s in schemes:
            preds[s].append(predict(s, rec, img, net, model, rc))
    return {s: accuracy(preds[s], subset.labels) for s in schemes}


def run_pipeline(rc: RunConfig, train_ds, test_ds, seed: int | None = None) -> dict[str, float]:
    """Train, label, evaluate one network; returns accuracy per scheme."""
    train_subset = train_ds.take(rc.train_limit)
    net = build_network(rc, rc.epochs * len(train_subset), seed=seed)
    train_network(net, train_subset, epochs=rc.epochs)
    model = label_network(net, train_subset, rc)
    return evaluate_network(net, model, test_ds, rc)


@functools.lru_cache(maxsize=2)
def _cached_split(split: str, data_dir: str | None):
    return load_split(split, data_dir)


def _sweep_trial(args) -> tuple[tuple, int, dict[str, float]]:
    point, rc, seed, data_dir = args
    train_ds = _cached_split("train", data_dir)
    test_ds = _cached_split("test", data_dir)
    return point, seed, run_pipeline(rc, train_ds, test_ds, seed=seed)


def sweep_rows(
    rc: RunConfig,
    p_lows: list[float],
    c_mins: list[float],
    c_maxs: list[float],
    data_dir: str | None,
    existing_keys: set[tuple] | None = None,
    workers: int | None = None,
) -> list[dict]:
    """Aggregated result rows over the p_low x c_min x c_max grid.

    Each grid point runs rc.trials independent seeds (rc.seed + trial index)
    and reports mean accuracy with sample stddev per scheme. Points whose
    keys already appear in existing_keys are skipped, so an interrupted
    sweep resumes where it stopped.
    """
    points = list(itertools.product(p_lows, c_mins, c_maxs))
    todo = []
    for point in points:
        meta = _point_metadata(rc, point)
        if existing_keys and all(_row_key({**meta, "scheme": s}) in existing_keys for s in rc.schemes()):
            logger.info("skipping completed grid point %s", point)
            continue
        todo.append(point)
    jobs = [
        (point, _point_config(rc, point), rc.seed + t, data_dir)
        for point in todo
        for t in range(rc.trials)
    ]
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, 0)) or os.cpu_count() or 1
    results: dict[tuple, dict[int, dict[str, float]]] = {p: {} for p in todo}
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for point, seed, accs in pool.map(_sweep_trial, jobs):
                results[point][seed] = accs
                logger.info("grid point %s seed %d done: %s", point, seed, accs)
    else:
        for job in jobs:
            point, seed, accs = _sweep_trial(job)
            results[point][seed] = accs
            logger.info("grid point %s seed %d done: %s", point, seed, accs)
    rows = []
    for point in todo:
        per_trial = [results[point][rc.seed + t] for t in range(rc.trials)]
        meta = _point_metadata(rc, point)
        for scheme in rc.schemes():
            mean, std = mean_std([accs[scheme] for accs in per_trial])
            rows.append({**meta, "scheme": scheme, "accuracy": mean, "stddev": std})
    return rows


def _point_config(rc: RunConfig, point: tuple) -> RunConfig:
    p_low, c_min, c_max = point
    return dataclasses.replace(rc, p_low=p_low, c_min=c_min, c_max=c_max)


def _point_metadata(rc: RunConfig, point: tuple) -> dict:
    return _point_config(rc, point).metadata()


def _row_key(row: dict) -> tuple:
    return (
        str(row["strategy"]),
        int(row["k"]),
        float(row["p_low"]),
        float(row["c_min"]),
        float(row["c_max"]),
        float(row["sparsity"]),
        int(row["epochs"]),
        int(row["seed"]),
        str(row["scheme"]),
    )


def result_keys(rows: list[dict]) -> set[tuple]:
    return {_row_key(row) for row in rows}


def run_convergence(rc: RunConfig, train_ds, period: int = 250, window: int = 10) -> ConvergenceCurve:
    """Train while recording activity and estimate accuracy every `period`
    examples (label on one period, classify the next)."""
    subset = train_ds.take(rc.train_limit)
    net = build_network(rc, rc.epochs * len(subset))
    records = train_network(net, subset, epochs=rc.epochs, collect=True)
    return convergence_curve(records, period=period, window=window, num_classes=rc.num_classes)
