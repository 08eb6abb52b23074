"""
Four ways to read a classification out of spiking activity
==========================================================

A trained lattice never sees labels; classification happens afterwards by
"voting" over recorded activity. This script trains one small lattice on the
toy blob set, labels it, and compares the four schemes — group counts,
confidence weighting, filter distance, and firing-order n-grams — on the
same held-out images. It finishes with the convergence curve machinery that
estimates accuracy *during* training.
"""

import numpy as np

from _shared import NUM_CLASSES, SIDE, toy_arrays, toy_sim
from lmsnn import (
    Dataset,
    Network,
    RunConfig,
    accuracy,
    convergence_curve,
    label_network,
    learn_ngrams,
    mean_std,
    vote_all,
    vote_confidence,
    vote_distance,
    vote_ngram,
)
from lmsnn.experiment import train_network

# ----------------------------------------------------------------------
# 1. Train and label
#
# label_network replays a labeled subset with plasticity off, assigns each
# neuron the class that drove it hardest, and tabulates length-n firing
# motifs for the n-gram scheme.
n_train = 90
rc = RunConfig(
    neurons=16,
    n_input=SIDE,
    num_classes=NUM_CLASSES,
    label_limit=45,
    ngram_n=2,
    ngram_learn_limit=45,
    sim=toy_sim(seed=3),
)
net = Network(rc.sim, rc.schedule(n_train), rc.k, n_input=SIDE)
train_network(net, Dataset(*toy_arrays(n_train, seed=42), split="train"))
model = label_network(net, Dataset(*toy_arrays(45, seed=7), split="label"), rc)
print(f"assignments: {np.bincount(model.assignments[model.assigned], minlength=NUM_CLASSES)} neurons per class")
print(f"n-gram table: {len(model.ngram_table)} distinct firing motifs of length {model.n}")

# ----------------------------------------------------------------------
# 2. One image through all four schemes
#
# Each scheme returns per-class scores plus the argmax. "all" averages raw
# spike counts per assignment group; "confidence" weights each neuron's vote
# by how class-specific its labeling activity was; "distance" ignores spikes
# entirely and matches the image against the learned filters; "ngram" scores
# the firing order against the motif table.
test_x, test_y = toy_arrays(12, seed=99)
img, truth = test_x[0], int(test_y[0])
rec = net.infer_example(img)

scores_all, pred_all = vote_all(rec, model)
scores_conf, pred_conf = vote_confidence(rec, model)
pred_dist = vote_distance(img, net.weights, model)
scores_ng, pred_ng = vote_ngram(rec, model)
print(f"\none class-{truth} image ({rec.total} spikes):")
print(f"  all        scores={np.round(scores_all, 3)} -> {pred_all}")
print(f"  confidence scores={np.round(scores_conf, 3)} -> {pred_conf}")
print(f"  distance   -> {pred_dist}")
print(f"  ngram      scores={np.round(scores_ng, 3)} -> {pred_ng}")

# ----------------------------------------------------------------------
# 3. Accuracy over a small held-out set
records = [(net.infer_example(x), int(y)) for x, y in zip(test_x, test_y)]
preds = {
    "all": [vote_all(r, model)[1] for r, _ in records],
    "confidence": [vote_confidence(r, model)[1] for r, _ in records],
    "distance": [vote_distance(x, net.weights, model) for x in test_x],
    "ngram": [vote_ngram(r, model)[1] for r, _ in records],
}
print(f"\naccuracy on {len(records)} held-out images:")
for scheme, p in preds.items():
    print(f"  {scheme:<10} {accuracy(p, test_y):.3f}")

# mean_std is the aggregation used for multi-seed result tables.
m, s = mean_std([0.82, 0.85, 0.80])
print(f"\nmean_std([0.82, 0.85, 0.80]) = ({m:.4f}, {s:.4f})  # sample stddev")

# ----------------------------------------------------------------------
# 4. Accuracy during training: the convergence curve
#
# Collect the per-example records of a fresh training run, then label on one
# period and classify the next, every `period` examples. The n-gram table
# builder is also reusable on its own for custom analyses.
net2 = Network(toy_sim(seed=11), rc.schedule(240), k=4, n_input=SIDE)
stream = train_network(net2, Dataset(*toy_arrays(240, seed=5), split="train"), collect=True)
curve = convergence_curve(stream, period=30, window=3, num_classes=NUM_CLASSES)
print(f"\nconvergence estimates every 30 examples:")
for ex, raw, smooth in zip(curve.examples, curve.raw, curve.smoothed):
    print(f"  after {ex:3d} examples: raw={raw:.3f} smoothed={smooth:.3f}")

table = learn_ngrams(stream[-30:], n=2, num_classes=NUM_CLASSES)
top = sorted(table.items(), key=lambda kv: -kv[1].sum())[:3]
print("\nmost frequent firing motifs late in training:")
for motif, cnts in top:
    print(f"  {motif}: per-class counts {cnts.astype(int)}")
