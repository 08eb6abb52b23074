"""
Sparse input connectivity
=========================

Dense wiring gives every excitatory neuron a synapse from every pixel. The
sparsity knob deletes each input synapse independently at build time; the
deleted synapses stay at weight zero forever and take no plasticity updates.
This script checks the mask statistics, confirms the invariants hold through
training, and measures accuracy across sparsity levels.
"""

import numpy as np

from _shared import NUM_CLASSES, SIDE, toy_arrays, toy_sim
from lmsnn import Dataset, Network, RunConfig, run_pipeline, sparse_mask

# ----------------------------------------------------------------------
# 1. The mask itself
#
# sparse_mask(n_input, k, sparsity, rng) keeps each synapse with probability
# 1 - sparsity. Density concentrates tightly around its expectation because
# the draws are independent.
rng = np.random.default_rng(0)
for sparsity in (0.0, 0.5, 0.9):
    mask = sparse_mask(SIDE, 5, sparsity, rng)
    print(f"sparsity={sparsity:>4}: kept {mask.mean():.4f} of {mask.size} synapses (expected {1 - sparsity:.1f})")

# ----------------------------------------------------------------------
# 2. Masked synapses stay dead through training
#
# Note where the surviving weights end up: per-neuron normalization keeps
# each neuron's *total* input constant, so with half the synapses gone each
# survivor carries roughly twice the weight it would in a dense lattice.
sp = 0.5
net = Network(toy_sim(seed=8), RunConfig(sparsity=sp).schedule(30), k=4, n_input=SIDE, sparsity=sp)
dead = ~net.topology.input_mask
print(f"\n4x4 lattice at sparsity {sp}: {dead.sum()} of {dead.size} synapses masked")
print(f"masked weights zero before training: {bool((net.weights[dead] == 0).all())}")
for img in toy_arrays(30, seed=1)[0]:
    net.train_example(img)
print(f"masked weights zero after 30 examples: {bool((net.weights[dead] == 0).all())}")
print(f"surviving weights carry the load: mean={net.weights[~dead].mean():.4f} "
      f"(vs ~{net.cfg.stdp.norm_sum / dead.shape[0]:.2f} dense)")

# ----------------------------------------------------------------------
# 3. Accuracy vs sparsity
#
# run_pipeline builds, trains, labels, and evaluates in one call. The toy
# classes are low-dimensional, so here even a 90%-sparse lattice classifies
# well — random synapse deletion acts more like a regularizer than damage at
# this scale. The cost of sparsity only shows up on harder inputs, where
# missing wiring blurs the learned filters.
train = Dataset(*toy_arrays(120, seed=10), split="train")
test = Dataset(*toy_arrays(45, seed=20), split="test")
print(f"\naccuracy of the count-vote scheme vs sparsity ({len(test)} test images):")
for sp in (0.0, 0.5, 0.9):
    rc = RunConfig(
        neurons=25,
        n_input=SIDE,
        num_classes=NUM_CLASSES,
        sparsity=sp,
        label_limit=60,
        ngram_learn_limit=60,
        voting=("all",),
        sim=toy_sim(seed=2),
    )
    acc = run_pipeline(rc, train, test, seed=2)["all"]
    bar = "#" * int(round(acc * 40))
    print(f"  sparsity={sp:>4}: {acc:.3f} {bar}")
