"""
Unsupervised training, receptive fields, and snapshots
======================================================

Training is fully unsupervised: STDP on the input synapses plus lateral
competition pulls each excitatory neuron toward one image class. This script
trains a 4x4 lattice on the toy blob set, inspects what the plasticity rules
maintain (column norms, adaptive thresholds), renders the learned filters
and the label map to image files, and round-trips the whole model through a
snapshot file.
"""

import tempfile
from pathlib import Path

import numpy as np

from _shared import NUM_CLASSES, SIDE, toy_arrays, toy_sim
from lmsnn import (
    Network,
    assign_labels,
    export_assignment_map,
    export_filter_map,
    load_snapshot,
    network_from_snapshot,
    save_snapshot,
)
from lmsnn.topology import InhibitionSchedule

out = Path(tempfile.mkdtemp(prefix="lmsnn_demo_"))

# ----------------------------------------------------------------------
# 1. Train a 4x4 lattice on 90 toy images
#
# Two-level inhibition: weak for the first 10% of examples (neurons spread
# over the input space), then strong (they specialize).
n_train = 90
images, labels = toy_arrays(n_train, seed=42)
sched = InhibitionSchedule(strategy="two-level", c_min=0.1, c_max=20.0, p_low=0.1, total_steps=n_train)
net = Network(toy_sim(seed=3), sched, k=4, n_input=SIDE)

# train_example is one full training iteration: advance the inhibition
# schedule, present with plasticity on, rest, renormalize incoming weights.
w_before = net.weights.copy()
for img in images:
    net.train_example(img)
print(f"trained on {net.examples_seen} examples")
print(f"mean |weight change| = {np.abs(net.weights - w_before).mean():.4f}")

# ----------------------------------------------------------------------
# 2. What plasticity maintains
#
# After every example each neuron's incoming weight vector is rescaled to a
# fixed sum, so neurons compete by *shape*, not magnitude. Thresholds adapt
# upward with activity, spreading firing across the lattice.
sums = net.weights.sum(axis=0)
print(f"\nincoming weight sums: min={sums.min():.6f}, max={sums.max():.6f} (target {net.cfg.stdp.norm_sum})")
print(f"weights stay in [0, {net.cfg.stdp.w_max}]: min={net.weights.min():.4f}, max={net.weights.max():.4f}")
theta = net.state.theta
print(f"adaptive thresholds span [{theta.min():.3f}, {theta.max():.3f}] mV above base")

# ----------------------------------------------------------------------
# 3. Label neurons from held-out activity, then render maps
#
# assign_labels gives each neuron the class that drove it hardest. The
# filter map tiles every neuron's 12x12 weight column into one image; the
# assignment map colors the lattice by class.
label_x, label_y = toy_arrays(30, seed=7)
records = [(net.infer_example(img), int(y)) for img, y in zip(label_x, label_y)]
model = assign_labels(records, num_classes=NUM_CLASSES)
print(f"\nneuron labels on the 4x4 grid (-1 = never fired):")
print(model.assignments.reshape(4, 4))

pgm = export_filter_map(net.weights, k=4, n_input=SIDE, path=out / "filters.pgm")
csv, ppm = export_assignment_map(model, k=4, path=out / "assignments.csv")
print(f"\nwrote {pgm.name} ({pgm.stat().st_size} bytes), {csv.name}, {ppm.name} under {out}")

# ----------------------------------------------------------------------
# 4. Snapshot round trip
#
# A snapshot carries everything a resumed run needs: config, topology,
# weights, neuron state, RNG state, and progress. Restoring and re-saving
# reproduces the file byte for byte.
snap_path = save_snapshot(net, out / "model.lmsnn", model=model)
snap = load_snapshot(snap_path)
restored_net = network_from_snapshot(snap)
print(f"\nsnapshot: {snap_path.stat().st_size} bytes")
print(f"weights restored exactly:     {bool((restored_net.weights == net.weights).all())}")
print(f"thresholds restored exactly:  {bool((restored_net.state.theta == net.state.theta).all())}")
print(f"assignments restored exactly: {bool((snap.voting_model.assignments == model.assignments).all())}")
resaved = save_snapshot(restored_net, out / "model2.lmsnn", model=snap.voting_model)
print(f"re-saved file is byte-identical: {resaved.read_bytes() == snap_path.read_bytes()}")
