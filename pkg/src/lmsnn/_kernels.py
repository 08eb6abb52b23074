"""Compiled inner loop for whole-presentation simulation.

This kernel and the step-level numpy ops in network.py implement the same
update order with identical floating-point expression shapes, so a
presentation run here is bit-identical to composing the public single-step
operations (covered by an equivalence test):

  per step:
    1. STDP traces decay
    2. conductances decay; inhibition queued last step lands on g_i
    3. this step's input spikes add weight rows onto g_e
    4. refractory countdown; forward-Euler membrane update for
       non-refractory neurons; divergence check
    5. threshold test; firing neurons reset, bump theta, restart their
       refractory period, queue their inhibition row for the next step
    6. theta decays
    7. weight updates: depression per input spike, potentiation per firing
       neuron (masked synapses untouched); traces saturate to 1 on spikes

Exponential decay factors are precomputed by the caller so both execution
paths consume the exact same float64 constants.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def run_steps(
    sp,
    act_idx,
    w,
    mask,
    inhib,
    v,
    g_e,
    g_i,
    theta,
    refrac,
    pending,
    x_pre,
    x_post,
    fired_buf,
    dec_ge,
    dec_gi,
    dec_theta,
    dec_xpre,
    dec_xpost,
    dt,
    dt_over_tau,
    v_rest,
    v_reset,
    v_thresh_base,
    e_exc,
    e_inh,
    refractory,
    theta_plus,
    eta_post,
    eta_pre,
    w_max,
    learn,
    adapt_theta,
    out_counts,
    out_times,
    out_neurons,
):
    n_steps = sp.shape[0]
    n_act = sp.shape[1]
    n_in = w.shape[0]
    n_e = w.shape[1]
    cap = out_neurons.shape[0]
    n_events = 0
    input_total = 0

    for t in range(n_steps):
        for i in range(n_in):
            x_pre[i] *= dec_xpre
        for n in range(n_e):
            x_post[n] *= dec_xpost

        for n in range(n_e):
            g_e[n] *= dec_ge
            g_i[n] = g_i[n] * dec_gi + pending[n]
            pending[n] = 0.0

        for a in range(n_act):
            if sp[t, a]:
                input_total += 1
                i = act_idx[a]
                for n in range(n_e):
                    g_e[n] += w[i, n]

        bad = False
        for n in range(n_e):
            r = refrac[n] - dt
            refrac[n] = r if r > 0.0 else 0.0
            if refrac[n] == 0.0:
                vv = v[n] + dt_over_tau * (
                    (v_rest - v[n]) + g_e[n] * (e_exc - v[n]) + g_i[n] * (e_inh - v[n])
                )
                v[n] = vv
                if not np.isfinite(vv):
                    bad = True
        if bad:
            return n_events, input_total, t

        any_fired = False
        for n in range(n_e):
            if refrac[n] == 0.0 and v[n] >= v_thresh_base + theta[n]:
                fired_buf[n] = True
                any_fired = True
                out_counts[n] += 1
                if n_events < cap:
                    out_times[n_events] = t * dt
                    out_neurons[n_events] = n
                n_events += 1
                v[n] = v_reset
                refrac[n] = refractory
                if adapt_theta:
                    theta[n] += theta_plus
                for m in range(n_e):
                    pending[m] -= inhib[n, m]

        if adapt_theta:
            for n in range(n_e):
                theta[n] *= dec_theta

        for a in range(n_act):
            if sp[t, a]:
                i = act_idx[a]
                if learn:
                    for n in range(n_e):
                        wn = w[i, n] - eta_pre * x_post[n] * w[i, n]
                        w[i, n] = wn if wn > 0.0 else 0.0
                x_pre[i] = 1.0

        if any_fired:
            for n in range(n_e):
                if fired_buf[n]:
                    if learn:
                        for i in range(n_in):
                            if mask[i, n]:
                                wn = w[i, n] + eta_post * x_pre[i] * (w_max - w[i, n])
                                w[i, n] = wn if wn < w_max else w_max
                    x_post[n] = 1.0
                    fired_buf[n] = False

    return n_events, input_total, -1
