"""Clock-driven simulation of Poisson-encoded inputs driving a lattice of
conductance-based LIF neurons with lateral inhibition.

The inhibitory layer is collapsed into a relay: when an excitatory neuron
fires, its row of the topology's inhibition matrix is queued and lands on the
other neurons' inhibitory conductances at the start of the next step. This
preserves the competition pattern while halving the simulated state.

A Network owns all mutable state plus a private RNG; one instance is a
single logical thread of execution. Presentations run through a compiled
kernel; the step-level ops here (step_network etc.) are the readable numpy
mirror of that kernel and produce bit-identical results.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .config import SimConfig, LifParams
from .plasticity import normalize_input_weights
from .topology import LatticeTopology, InhibitionSchedule

# Max recorded spike events per presentation; far above anything a sane
# configuration produces (retriggers a hard error, not silent truncation).
EVENT_CAP = 1 << 16


class NumericDivergenceError(RuntimeError):
    """Membrane state went non-finite; the configuration is unstable."""

    def __init__(self, step: int, examples_seen: int, dt: float):
        self.step = step
        self.examples_seen = examples_seen
        super().__init__(
            f"non-finite membrane potential at step {step} (dt={dt} ms, "
            f"examples seen: {examples_seen}); reduce dt or input rates"
        )


class DegenerateInputWarning(UserWarning):
    """An example stayed below the minimum spike count through every retry."""


@dataclass
class NeuronState:
    """All mutable per-neuron simulation state.

    pending_inhib holds inhibition queued by this step's spikes for delivery
    at the start of the next step (non-negative conductance increments).
    """

    v: np.ndarray
    g_e: np.ndarray
    g_i: np.ndarray
    theta: np.ndarray
    refrac_remaining: np.ndarray
    x_pre: np.ndarray
    x_post: np.ndarray
    pending_inhib: np.ndarray

    @classmethod
    def fresh(cls, n_input_total: int, n_exc: int, lif: LifParams) -> "NeuronState":
        return cls(
            v=np.full(n_exc, lif.v_rest, dtype=np.float64),
            g_e=np.zeros(n_exc, dtype=np.float64),
            g_i=np.zeros(n_exc, dtype=np.float64),
            theta=np.zeros(n_exc, dtype=np.float64),
            refrac_remaining=np.zeros(n_exc, dtype=np.float64),
            x_pre=np.zeros(n_input_total, dtype=np.float64),
            x_post=np.zeros(n_exc, dtype=np.float64),
            pending_inhib=np.zeros(n_exc, dtype=np.float64),
        )

    def copy(self) -> "NeuronState":
        return NeuronState(
            v=self.v.copy(),
            g_e=self.g_e.copy(),
            g_i=self.g_i.copy(),
            theta=self.theta.copy(),
            refrac_remaining=self.refrac_remaining.copy(),
            x_pre=self.x_pre.copy(),
            x_post=self.x_post.copy(),
            pending_inhib=self.pending_inhib.copy(),
        )

    def arrays(self) -> dict[str, np.ndarray]:
        return {
            "v": self.v,
            "g_e": self.g_e,
            "g_i": self.g_i,
            "theta": self.theta,
            "refrac_remaining": self.refrac_remaining,
            "x_pre": self.x_pre,
            "x_post": self.x_post,
            "pending_inhib": self.pending_inhib,
        }


@dataclass
class SpikeRecord:
    """Outcome of one presentation: per-neuron spike counts plus the
    time-ordered excitatory spike sequence (ties within a step are ordered
    by ascending neuron index)."""

    counts: np.ndarray
    times: np.ndarray
    neurons: np.ndarray
    input_spike_total: int
    retries: int

    @property
    def sequence(self) -> list[tuple[float, int]]:
        return [(float(t), int(n)) for t, n in zip(self.times, self.neurons)]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def decay_factors(cfg: SimConfig) -> tuple[float, float, float, float, float]:
    """Per-step exponential decay factors (g_e, g_i, theta, x_pre, x_post).

    Computed once from the config so the compiled and numpy paths share the
    exact same constants.
    """
    return (
        math.exp(-cfg.dt / cfg.lif.tau_ge),
        math.exp(-cfg.dt / cfg.lif.tau_gi),
        math.exp(-cfg.dt / cfg.lif.tau_theta),
        math.exp(-cfg.dt / cfg.stdp.tau_pre),
        math.exp(-cfg.dt / cfg.stdp.tau_post),
    )


def poisson_encode(
    image, cfg: SimConfig, rate_offset: float | None = None, rng: np.random.Generator | None = None
) -> np.ndarray:
    """Poisson spike trains for one image over the presentation window.

    Pixel i fires with rate intensity_i * rate_scale, plus rate_offset if the
    pixel is nonzero. Per step the emission probability is rate * dt / 1000,
    at most one spike per neuron per step. Returns bool (present_steps, N*N).
    """
    img = np.asarray(image)
    if img.ndim != 2 or img.shape[0] != img.shape[1]:
        raise ValueError(f"expected a square 2-D intensity grid, got shape {img.shape}")
    if rate_offset is None:
        rate_offset = cfg.rate_offset
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    flat = img.reshape(-1).astype(np.float64)
    rates = flat * cfg.rate_scale
    rates[flat > 0.0] += rate_offset
    p = rates * (cfg.dt / 1000.0)
    spikes = np.zeros((cfg.present_steps, flat.size), dtype=np.bool_)
    nz = np.flatnonzero(p > 0.0)
    if nz.size:
        spikes[:, nz] = rng.random((cfg.present_steps, nz.size)) < p[nz]
    return spikes


def step_network(
    state: NeuronState,
    topology: LatticeTopology,
    weights: np.ndarray,
    input_spikes: np.ndarray,
    params: LifParams,
    dt: float,
    adapt_theta: bool = True,
) -> tuple[NeuronState, np.ndarray]:
    """Advance the membrane dynamics one step; returns (state, fired flags).

    Mutates state in place. This is the numpy mirror of one kernel step's
    dynamics block (trace updates and plasticity live in the plasticity
    module and are composed by the caller).
    """
    dec_ge = math.exp(-dt / params.tau_ge)
    dec_gi = math.exp(-dt / params.tau_gi)
    dec_theta = math.exp(-dt / params.tau_theta)
    dt_over_tau = dt / params.tau_v

    state.g_e *= dec_ge
    state.g_i *= dec_gi
    state.g_i += state.pending_inhib
    state.pending_inhib[:] = 0.0
    for i in np.flatnonzero(input_spikes):
        state.g_e += weights[i]

    state.refrac_remaining[:] = np.maximum(state.refrac_remaining - dt, 0.0)
    active = state.refrac_remaining == 0.0
    v_new = state.v + dt_over_tau * (
        (params.v_rest - state.v)
        + state.g_e * (params.e_exc - state.v)
        + state.g_i * (params.e_inh - state.v)
    )
    state.v[active] = v_new[active]
    if not np.all(np.isfinite(state.v[active])):
        raise NumericDivergenceError(step=0, examples_seen=-1, dt=dt)

    fired = active & (state.v >= params.v_thresh_base + state.theta)
    state.v[fired] = params.v_reset
    state.refrac_remaining[fired] = params.refractory
    if adapt_theta:
        state.theta[fired] += params.theta_plus
    for n in np.flatnonzero(fired):
        state.pending_inhib -= topology.inhib_matrix[n]
    if adapt_theta:
        state.theta *= dec_theta
    return state, fired


class Network:
    """A lattice network: topology, weights, neuron state, and its own RNG.

    Construction draws the connectivity mask first, then the initial weights
    (uniform in [0, w_init_max], zero where masked), so a seed fully
    determines the run.
    """

    def __init__(
        self,
        cfg: SimConfig,
        schedule: InhibitionSchedule,
        k: int,
        n_input: int = 28,
        sparsity: float = 0.0,
        distance_mode: str = "sqrt",
        w_init_max: float = 0.3,
    ):
        cfg.validate()
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.topology = LatticeTopology.build(n_input, k, schedule, sparsity, self.rng, distance_mode)
        n_in = n_input * n_input
        n_e = k * k
        self.weights = self.rng.uniform(0.0, w_init_max, size=(n_in, n_e))
        self.weights[~self.topology.input_mask] = 0.0
        self.state = NeuronState.fresh(n_in, n_e, cfg.lif)
        self.w_init_max = w_init_max
        self.examples_seen = 0
        self.zero_norm_count = 0
        self._init_buffers()

    def _init_buffers(self) -> None:
        n_e = self.topology.n_exc
        self._counts_buf = np.zeros(n_e, dtype=np.int64)
        self._fired_buf = np.zeros(n_e, dtype=np.bool_)
        self._times_buf = np.empty(EVENT_CAP, dtype=np.float64)
        self._neurons_buf = np.empty(EVENT_CAP, dtype=np.int32)

    @property
    def n_input(self) -> int:
        return self.topology.n_input

    @property
    def n_exc(self) -> int:
        return self.topology.n_exc

    def _run_steps(self, sp: np.ndarray, act_idx: np.ndarray, learn: bool, adapt_theta: bool):
        cfg = self.cfg
        lif = cfg.lif
        stdp = cfg.stdp
        dec_ge, dec_gi, dec_theta, dec_xpre, dec_xpost = decay_factors(cfg)
        st = self.state
        self._counts_buf[:] = 0
        n_events, input_total, bad_step = _kernels.run_steps(
            sp,
            act_idx,
            self.weights,
            self.topology.input_mask,
            self.topology.inhib_matrix,
            st.v,
            st.g_e,
            st.g_i,
            st.theta,
            st.refrac_remaining,
            st.pending_inhib,
            st.x_pre,
            st.x_post,
            self._fired_buf,
            dec_ge,
            dec_gi,
            dec_theta,
            dec_xpre,
            dec_xpost,
            cfg.dt,
            cfg.dt / lif.tau_v,
            lif.v_rest,
            lif.v_reset,
            lif.v_thresh_base,
            lif.e_exc,
            lif.e_inh,
            lif.refractory,
            lif.theta_plus,
            stdp.eta_post,
            stdp.eta_pre,
            stdp.w_max,
            learn,
            adapt_theta,
            self._counts_buf,
            self._times_buf,
            self._neurons_buf,
        )
        if bad_step >= 0:
            raise NumericDivergenceError(bad_step, self.examples_seen, cfg.dt)
        if n_events > EVENT_CAP:
            raise RuntimeError(
                f"spike event buffer overflow ({n_events} events in one window); "
                "the configuration is pathologically active"
            )
        counts = self._counts_buf.copy()
        times = self._times_buf[:n_events].copy()
        neurons = self._neurons_buf[:n_events].copy()
        return counts, times, neurons, input_total

    def present(self, image, learn: bool) -> SpikeRecord:
        """Present one image for present_duration ms (plasticity iff learn).

        If the network emits fewer than min_spikes spikes, the input rate
        offset is boosted by retry_rate_boost and the image re-presented
        after a rest, up to max_retries boosts. Returns the record of the
        final presentation with the boost count in `retries`.
        """
        img = np.asarray(image)
        n = self.n_input
        if img.shape != (n, n):
            raise ValueError(f"image shape {img.shape} does not match configured input {n}x{n}")
        cfg = self.cfg
        offset = cfg.rate_offset
        retries = 0
        while True:
            full = poisson_encode(img, cfg, offset, self.rng)
            act_idx = np.flatnonzero(full.any(axis=0))
            sp = np.ascontiguousarray(full[:, act_idx])
            counts, times, neurons, input_total = self._run_steps(sp, act_idx, learn, adapt_theta=learn)
            if int(counts.sum()) >= cfg.min_spikes or retries >= cfg.max_retries:
                if int(counts.sum()) < cfg.min_spikes:
                    warnings.warn(
                        f"example stayed below {cfg.min_spikes} spikes after "
                        f"{retries} rate boosts",
                        DegenerateInputWarning,
                        stacklevel=2,
                    )
                return SpikeRecord(counts, times, neurons, input_total, retries)
            offset += cfg.retry_rate_boost
            retries += 1
            self.rest(adapt_theta=learn)

    def rest(self, adapt_theta: bool = True) -> None:
        """Simulate rest_duration ms of zero input with no plasticity."""
        steps = self.cfg.rest_steps
        if steps == 0:
            return
        sp = np.zeros((steps, 0), dtype=np.bool_)
        act_idx = np.zeros(0, dtype=np.int64)
        self._run_steps(sp, act_idx, learn=False, adapt_theta=adapt_theta)

    def train_example(self, image) -> SpikeRecord:
        """One full training iteration: schedule update, presentation with
        plasticity, rest, then input weight normalization."""
        self.topology.update_for_step(self.examples_seen)
        rec = self.present(image, learn=True)
        self.rest(adapt_theta=True)
        self.zero_norm_count += normalize_input_weights(self.weights, self.cfg.stdp.norm_sum)
        self.examples_seen += 1
        return rec

    def infer_example(self, image) -> SpikeRecord:
        """One evaluation iteration: no plasticity, thresholds frozen."""
        rec = self.present(image, learn=False)
        self.rest(adapt_theta=False)
        return rec


def present_example(network: Network, image, learn: bool) -> SpikeRecord:
    """Present one image on the network (see Network.present)."""
    return network.present(image, learn)


def rest_network(network: Network, adapt_theta: bool = True) -> NeuronState:
    """Rest the network between examples (see Network.rest); returns state."""
    network.rest(adapt_theta=adapt_theta)
    return network.state
