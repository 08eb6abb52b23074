"""
Lattice geometry and lateral inhibition profiles
================================================

Excitatory neurons sit on a k x k grid. Every spike inhibits the rest of the
grid with a strength that grows with lattice distance, so nearby neurons are
allowed to co-activate while distant ones compete. This script walks the
geometry helpers, the four inhibition strategies, and the schedules that move
the inhibition level over a training run.
"""

import numpy as np

from lmsnn import (
    InhibitionSchedule,
    STRATEGIES,
    build_inhibition_matrix,
    inhibition_weight,
    lattice_distance,
    schedule_level,
)

# ----------------------------------------------------------------------
# 1. Grid distance
#
# Neuron i lives at (i // k, i % k). Distance is plain Euclidean distance
# between those coordinates.
k = 6
corner, center, neighbor = 0, (k // 2) * k + k // 2, 1
print(f"{k}x{k} lattice:")
print(f"  d(corner, neighbor) = {lattice_distance(corner, neighbor, k):.3f}")
print(f"  d(corner, center)   = {lattice_distance(corner, center, k):.3f}")
print(f"  d(corner, opposite) = {lattice_distance(corner, k * k - 1, k):.3f}")

# ----------------------------------------------------------------------
# 2. Distance -> weight
#
# The weight is -min(c_inhib * sqrt(d), c_max): negative, saturating at
# c_max, and flat in d once the cap kicks in. A "linear" profile (d instead
# of sqrt(d)) is available for comparison.
c_inhib, c_max = 3.0, 12.0
print(f"\nweight profile, c_inhib={c_inhib}, c_max={c_max}:")
print(f"  {'d':>5} {'sqrt':>8} {'linear':>8}")
for d in (0.0, 1.0, 2.0, 4.0, 8.0, 16.0):
    w_s = inhibition_weight(d, c_inhib, c_max, "sqrt")
    w_l = inhibition_weight(d, c_inhib, c_max, "linear")
    print(f"  {d:5.1f} {w_s:8.3f} {w_l:8.3f}")

# ----------------------------------------------------------------------
# 3. The four strategies as full matrices
#
# "constant" ignores distance entirely: every off-diagonal entry is -c_max,
# which makes the lattice a winner-take-all circuit. The distance-based
# strategies share the same matrix shape and differ only in how the level
# moves over training (next section).
for strategy in STRATEGIES:
    m = build_inhibition_matrix(k, c_inhib, c_max, strategy)
    off = m[~np.eye(k * k, dtype=bool)]
    print(
        f"\n{strategy:>10}: diag={m.diagonal().max():.0f}, "
        f"off-diagonal range [{off.min():.3f}, {off.max():.3f}], "
        f"distinct levels={len(np.unique(np.round(off, 9)))}"
    )

# ----------------------------------------------------------------------
# 4. Moving the level over a run
#
# schedule_level(step, sched) gives the inhibition multiplier in effect for
# training example `step`:
#   constant / increasing  - pinned at c_max for the whole run
#   growing                - linear ramp c_min -> c_max over p_grow * total
#   two-level              - c_min for the first p_low fraction, then c_max
total = 1000
schedules = {
    "growing": InhibitionSchedule(strategy="growing", c_min=0.5, c_max=17.5, p_grow=0.5, total_steps=total),
    "two-level": InhibitionSchedule(strategy="two-level", c_min=0.1, c_max=20.0, p_low=0.1, total_steps=total),
}
probe = [0, 50, 99, 100, 250, 500, 750, 999]
print(f"\nlevel over a {total}-example run:")
print("  step:      " + "".join(f"{s:>8}" for s in probe))
for name, sched in schedules.items():
    levels = [schedule_level(s, sched) for s in probe]
    print(f"  {name:<10} " + "".join(f"{v:8.2f}" for v in levels))

# The two-level flip lands exactly at step p_low * total — the boundary
# example already belongs to the high phase.
flip = int(0.1 * total)
before, after = schedule_level(flip - 1, schedules["two-level"]), schedule_level(flip, schedules["two-level"])
print(f"\ntwo-level flip at step {flip}: level {before} -> {after}")
