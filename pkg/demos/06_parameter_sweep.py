"""
Reproducible inhibition-parameter sweeps
========================================

Picking the inhibition schedule is an empirical question, so the toolkit
ships a grid-sweep harness: every (p_low, c_min, c_max) point runs a fixed
number of trials with derived seeds, rows land in a stable CSV schema, and
reruns skip points that already have results. This script sweeps a small
grid over the toy dataset and shows the resume behavior.
"""

import tempfile
from pathlib import Path

from _shared import NUM_CLASSES, SIDE, toy_sim, write_toy_dataset
from lmsnn import RunConfig, sweep_rows, write_results
from lmsnn.experiment import result_keys
from lmsnn.export import aggregate_results, read_results, results_to_string

workdir = Path(tempfile.mkdtemp(prefix="lmsnn_sweep_"))
data_dir = write_toy_dataset(workdir / "data", n_train=90, n_test=30)

# ----------------------------------------------------------------------
# 1. A 2-point grid, two trials per point
#
# Trials at one grid point use seeds rc.seed, rc.seed + 1, ...; the row
# records the mean and sample stddev across them. Everything about the run
# (neurons, limits, trial count) lives on the RunConfig.
rc = RunConfig(
    neurons=16,
    n_input=SIDE,
    num_classes=NUM_CLASSES,
    trials=2,
    train_limit=45,
    test_limit=30,
    label_limit=45,
    ngram_learn_limit=45,
    voting=("all",),
    sim=toy_sim(),
)
rows = sweep_rows(rc, p_lows=[0.1, 0.5], c_mins=[0.1], c_maxs=[15.0], data_dir=str(data_dir))
out = write_results(rows, workdir / "results.csv")
print(f"swept {len(rows)} grid points -> {out}")
print(results_to_string(rows))

# ----------------------------------------------------------------------
# 2. Resuming an extended grid
#
# Passing the keys of existing rows skips finished points, so growing a
# sweep only pays for the new work.
existing = read_results(out)
more = sweep_rows(
    rc,
    p_lows=[0.1, 0.5, 0.9],
    c_mins=[0.1],
    c_maxs=[15.0],
    data_dir=str(data_dir),
    existing_keys=result_keys(existing),
)
print(f"grid grown to 3 points: {len(more)} new row(s) computed")
write_results(more, out)  # append-only: finished rows stay untouched
final = read_results(out)
print(f"results file now holds {len(final)} rows; p_low column = {[r['p_low'] for r in final]}")

# aggregate_results pools every row into one (mean, stddev) pair — handy for
# summarizing a finished sweep at a glance.
mean, std = aggregate_results(final)
print(f"pooled accuracy over the whole sweep: {mean:.4f} +/- {std:.4f}")
