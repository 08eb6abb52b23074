"""
Poisson rate coding of image intensities
========================================

Images enter the network as spike trains: pixel intensity maps to a firing
rate, and each simulation step emits a spike with probability rate * dt /
1000. This script checks the empirical statistics against the closed-form
expectation and shows the rate-boost retry loop that rescues images too
faint to drive the network.
"""

import warnings

import numpy as np

from lmsnn import DegenerateInputWarning, Network, SimConfig, poisson_encode
from lmsnn.topology import InhibitionSchedule

# ----------------------------------------------------------------------
# 1. Expected spike counts
#
# With the stock config (dt=0.5 ms, 350 ms presentations, rate_scale=0.25),
# a saturated pixel (intensity 255) fires at 255 * 0.25 = 63.75 Hz, i.e.
# 22.3125 expected spikes per presentation.
cfg = SimConfig()
rng = np.random.default_rng(42)
intensities = np.array([0, 32, 64, 128, 255])
image = np.tile(intensities, (5, 1)).T.astype(np.uint8)  # 5x5, constant rows

expected = intensities * cfg.rate_scale * cfg.present_duration / 1000.0
trains = np.stack([poisson_encode(image, cfg, rng=rng) for _ in range(400)])
counts = trains.sum(axis=1).reshape(-1, 5, 5).mean(axis=(0, 2))

print(f"per-presentation spike counts over {trains.shape[0]} encodings:")
print(f"  {'intensity':>9} {'expected':>9} {'measured':>9}")
for inten, exp, got in zip(intensities, expected, counts):
    print(f"  {inten:9d} {exp:9.4f} {got:9.4f}")

# ----------------------------------------------------------------------
# 2. Shape and determinism
#
# One encoding is (present_steps, side^2) of booleans, and the generator
# state fully determines it.
train = poisson_encode(image, cfg, rng=np.random.default_rng(7))
again = poisson_encode(image, cfg, rng=np.random.default_rng(7))
print(f"\ntrain shape = {train.shape} (steps x pixels), dtype = {train.dtype}")
print(f"same seed reproduces the train exactly: {bool((train == again).all())}")

# A dead pixel never spikes; rate_offset adds a floor rate to *nonzero*
# pixels only, which is what the retry loop below exploits.
boosted = poisson_encode(image, cfg, rate_offset=40.0, rng=np.random.default_rng(7))
per_pixel = boosted.sum(axis=0).reshape(5, 5).mean(axis=1)
print(f"with +40 Hz offset, per-row mean counts = {np.round(per_pixel, 2)} (zero row stays zero)")

# ----------------------------------------------------------------------
# 3. The retry loop on a faint image
#
# If a presentation yields fewer than min_spikes output spikes, the network
# re-presents the image with the offset raised by retry_rate_boost, up to
# max_retries times. A faint patch on a 2x2 lattice stays silent at its
# native rate but crosses the spike floor after a few boosts.
sched = InhibitionSchedule(strategy="two-level", c_min=0.1, c_max=5.0, p_low=0.1, total_steps=10)
net = Network(
    SimConfig(seed=5, present_duration=100.0, min_spikes=5, retry_rate_boost=64.0),
    sched, k=2, n_input=4, w_init_max=1.0,
)
faint = np.zeros((4, 4), dtype=np.uint8)
faint[1:3, 1:3] = 60  # 15 Hz per live pixel unboosted: ~6 input spikes total
rec = net.present(faint, learn=False)
print(f"\nfaint image: {rec.total} output spikes after {rec.retries} rate boosts")

# An all-black image can never be rescued — the offset only applies to
# nonzero pixels — so the loop exhausts its retries and warns instead.
with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    rec = net.present(np.zeros((4, 4), dtype=np.uint8), learn=False)
messages = [w for w in caught if issubclass(w.category, DegenerateInputWarning)]
print(f"all-black image: {rec.total} spikes, {rec.retries} boosts, warning raised: {len(messages) == 1}")
print(f"  -> {messages[0].message}")
