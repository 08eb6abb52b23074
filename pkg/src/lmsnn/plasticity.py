"""Trace-based pair STDP on input->excitatory synapses.

Each input neuron carries a presynaptic trace x_pre and each excitatory
neuron a postsynaptic trace x_post. Traces decay exponentially and saturate
to 1 on a spike (set, not added). Weight updates use multiplicative soft
bounds so weights stay inside [0, w_max] without hard clipping artifacts:

    post spike:  dw = eta_post * x_pre * (w_max - w)
    pre spike:   dw = -eta_pre * x_post * w

Per-neuron input weight sums are rescaled to norm_sum once per training
example to keep competition stable.
"""

from __future__ import annotations

import math

import numpy as np

from .config import StdpParams


def decay_traces(
    x_pre: np.ndarray,
    x_post: np.ndarray,
    dt: float,
    params: StdpParams,
    pre_spikes: np.ndarray | None = None,
    post_spikes: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """One time-step of trace dynamics: exponential decay, then saturation
    to 1 for neurons that spiked this step. Returns new arrays."""
    x_pre = x_pre * math.exp(-dt / params.tau_pre)
    x_post = x_post * math.exp(-dt / params.tau_post)
    if pre_spikes is not None:
        x_pre[pre_spikes] = 1.0
    if post_spikes is not None:
        x_post[post_spikes] = 1.0
    return x_pre, x_post


def stdp_on_post(w, x_pre, params: StdpParams):
    """Weight change for a postsynaptic spike; result stays within [0, w_max]."""
    w = np.asarray(w, dtype=np.float64)
    dw = params.eta_post * np.asarray(x_pre, dtype=np.float64) * (params.w_max - w)
    return np.minimum(w + dw, params.w_max) - w


def stdp_on_pre(w, x_post, params: StdpParams):
    """Weight change for a presynaptic spike; result stays within [0, w_max]."""
    w = np.asarray(w, dtype=np.float64)
    dw = -params.eta_pre * np.asarray(x_post, dtype=np.float64) * w
    return np.maximum(w + dw, 0.0) - w


def normalize_input_weights(w: np.ndarray, norm_sum: float) -> int:
    """Rescale each excitatory neuron's input weights (one column of w) so
    they sum to norm_sum. Masked synapses hold weight 0, so they neither
    count toward the sum nor move. Columns summing to zero are left alone;
    returns how many such columns were skipped."""
    sums = w.sum(axis=0)
    zero = sums <= 0.0
    safe = np.where(zero, 1.0, sums)
    w *= np.where(zero, 1.0, norm_sum / safe)
    return int(zero.sum())
