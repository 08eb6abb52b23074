"""Neuron labeling, the four voting schemes, and convergence estimation.

Labeling assigns each excitatory neuron the class it fired most for on
average over a recording pass. Test examples are then classified by:

  all        - mean spike count per assigned class group
  confidence - spike counts weighted by per-neuron class proportions
  distance   - label of the nearest filter in unit-norm Euclidean distance
  ngram      - summed class distributions of length-n firing-order motifs

Ties break toward the lowest index everywhere, so every scheme is a pure
deterministic function of (model, record).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .network import SpikeRecord

UNASSIGNED = -1


@dataclass
class VotingModel:
    """Everything learned from the labeling pass.

    assignments uses UNASSIGNED (-1) for neurons that never spiked; such
    neurons are excluded from every scheme's candidate set. rates[n][c] is
    the mean spike count of neuron n on class-c examples; proportions rows
    sum to 1 (or 0 for silent neurons). ngram_table maps length-n neuron
    index tuples to per-class counts.
    """

    assignments: np.ndarray
    rates: np.ndarray
    proportions: np.ndarray
    fallback_class: int
    num_classes: int
    ngram_table: dict[tuple[int, ...], np.ndarray] | None = None
    n: int | None = None

    @property
    def assigned(self) -> np.ndarray:
        return self.assignments != UNASSIGNED


def assign_labels(records: list[tuple[SpikeRecord, int]], num_classes: int = 10) -> VotingModel:
    """Build a VotingModel from (record, class) pairs of a labeling pass."""
    if not records:
        raise ValueError("cannot assign labels from an empty record list")
    n_e = records[0][0].counts.shape[0]
    totals = np.zeros((n_e, num_classes), dtype=np.float64)
    class_counts = np.zeros(num_classes, dtype=np.int64)
    for rec, label in records:
        totals[:, label] += rec.counts
        class_counts[label] += 1
    rates = totals / np.maximum(class_counts, 1)
    assignments = np.argmax(rates, axis=1).astype(np.int64)
    assignments[rates.max(axis=1) <= 0.0] = UNASSIGNED
    spike_sums = totals.sum(axis=1, keepdims=True)
    proportions = np.divide(totals, spike_sums, out=np.zeros_like(totals), where=spike_sums > 0)
    fallback_class = int(np.argmax(class_counts))
    return VotingModel(
        assignments=assignments,
        rates=rates,
        proportions=proportions,
        fallback_class=fallback_class,
        num_classes=num_classes,
    )


def _require_assigned(model: VotingModel) -> np.ndarray:
    assigned = model.assigned
    if not assigned.any():
        raise ValueError("voting requires at least one assigned neuron")
    return assigned


def vote_all(record: SpikeRecord, model: VotingModel, normalize: bool = True) -> tuple[np.ndarray, int]:
    """Mean spike count per class group; classes with no neurons score -inf.

    normalize=False sums group counts without dividing by group size.
    """
    assigned = _require_assigned(model)
    scores = np.full(model.num_classes, -np.inf)
    for c in range(model.num_classes):
        members = assigned & (model.assignments == c)
        if members.any():
            total = record.counts[members].sum()
            scores[c] = total / members.sum() if normalize else float(total)
    return scores, int(np.argmax(scores))


def vote_confidence(record: SpikeRecord, model: VotingModel) -> tuple[np.ndarray, int]:
    """Spike counts weighted by each neuron's class-proportion vector."""
    assigned = _require_assigned(model)
    scores = record.counts[assigned].astype(np.float64) @ model.proportions[assigned]
    return scores, int(np.argmax(scores))


def vote_distance(image, weights: np.ndarray, model: VotingModel) -> int:
    """Label of the assigned neuron whose filter is nearest the input after
    both are scaled to unit Euclidean norm. Zero input (or no usable
    filters) falls back to the labeling set's most frequent class."""
    assigned = _require_assigned(model)
    x = np.asarray(image, dtype=np.float64).reshape(-1)
    x_norm = np.linalg.norm(x)
    if x_norm == 0.0:
        return model.fallback_class
    cols = np.flatnonzero(assigned)
    filt = weights[:, cols]
    norms = np.linalg.norm(filt, axis=0)
    usable = norms > 0.0
    if not usable.any():
        return model.fallback_class
    cols = cols[usable]
    filt = filt[:, usable] / norms[usable]
    dists = np.linalg.norm(filt - (x / x_norm)[:, None], axis=0)
    return int(model.assignments[cols[np.argmin(dists)]])


def learn_ngrams(
    records: list[tuple[SpikeRecord, int]], n: int, num_classes: int = 10
) -> dict[tuple[int, ...], np.ndarray]:
    """Count per-class occurrences of every length-n window of each record's
    firing sequence. Sequences shorter than n contribute nothing."""
    if n < 1:
        raise ValueError(f"n-gram order must be >= 1, got {n}")
    table: dict[tuple[int, ...], np.ndarray] = {}
    for rec, label in records:
        seq = rec.neurons
        for j in range(len(seq) - n + 1):
            key = tuple(int(x) for x in seq[j : j + n])
            row = table.get(key)
            if row is None:
                row = np.zeros(num_classes, dtype=np.int64)
                table[key] = row
            row[label] += 1
    return table


def vote_ngram(record: SpikeRecord, model: VotingModel, normalized: bool = True) -> tuple[np.ndarray, int]:
    """Sum the table's class distribution over every matching window of the
    record's firing sequence. With normalized=True each seen window
    contributes a probability vector (summing to 1); otherwise raw counts.
    No matching window (or a too-short sequence) predicts fallback_class."""
    if model.ngram_table is None or model.n is None:
        raise ValueError("model has no n-gram table; run the n-gram learning pass first")
    n = model.n
    scores = np.zeros(model.num_classes, dtype=np.float64)
    matched = False
    seq = record.neurons
    for j in range(len(seq) - n + 1):
        row = model.ngram_table.get(tuple(int(x) for x in seq[j : j + n]))
        if row is not None:
            matched = True
            scores += row / row.sum() if normalized else row
    if not matched:
        return scores, model.fallback_class
    return scores, int(np.argmax(scores))


def accuracy(predictions, labels) -> float:
    """Exact fraction of matching entries."""
    preds = np.asarray(predictions)
    labs = np.asarray(labels)
    if preds.shape != labs.shape:
        raise ValueError(f"length mismatch: {preds.shape} vs {labs.shape}")
    if preds.size == 0:
        raise ValueError("cannot compute accuracy of zero predictions")
    return float(np.mean(preds == labs))


def mean_std(values) -> tuple[float, float]:
    """Mean and sample standard deviation (ddof=1; 0.0 for a single value)."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("cannot aggregate zero values")
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return float(arr.mean()), std


@dataclass
class ConvergenceCurve:
    """Training-time accuracy estimates: raw points and a window-smoothed
    copy of identical length. examples[i] counts training examples consumed
    when estimate i was complete."""

    examples: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    raw: np.ndarray = field(default_factory=lambda: np.zeros(0))
    smoothed: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __len__(self) -> int:
        return len(self.raw)

    def at_examples(self, n_examples: int, smoothed: bool = True) -> float:
        """Estimate at the latest point with examples <= n_examples."""
        idx = int(np.searchsorted(self.examples, n_examples, side="right")) - 1
        if idx < 0:
            raise ValueError(f"no estimate at or before {n_examples} examples")
        return float(self.smoothed[idx] if smoothed else self.raw[idx])


def smooth_curve(raw: np.ndarray, window: int = 10) -> np.ndarray:
    """Average each point with its `window` nearest neighbors (window/2 on
    each side), truncating at the boundaries."""
    half = window // 2
    out = np.empty_like(raw)
    for i in range(len(raw)):
        out[i] = raw[max(0, i - half) : i + half + 1].mean()
    return out


def convergence_curve(
    records: list[tuple[SpikeRecord, int]],
    period: int = 250,
    window: int = 10,
    num_classes: int = 10,
) -> ConvergenceCurve:
    """Accuracy estimates over a training run's per-example records.

    Every `period` examples, neurons are labeled from the previous period's
    records and the following period is classified with the all-scheme vote.
    Fewer than two periods of records yield an empty curve.
    """
    m = len(records) // period
    if m < 2:
        return ConvergenceCurve()
    examples = np.zeros(m - 1, dtype=np.int64)
    raw = np.zeros(m - 1, dtype=np.float64)
    for b in range(m - 1):
        label_block = records[b * period : (b + 1) * period]
        eval_block = records[(b + 1) * period : (b + 2) * period]
        model = assign_labels(label_block, num_classes)
        if model.assigned.any():
            preds = [vote_all(rec, model)[1] for rec, _ in eval_block]
        else:
            preds = [model.fallback_class] * len(eval_block)
        raw[b] = accuracy(preds, [label for _, label in eval_block])
        examples[b] = (b + 2) * period
    return ConvergenceCurve(examples=examples, raw=raw, smoothed=smooth_curve(raw, window))
