"""Jitted event-driven path simulation (internal).

One kernel simulates a single path of the surplus process: two marked
streams (claims, premiums), each pair (inter-arrival, jump size) drawn
jointly from the FGM copula at scheduling time, dividend drift between
events when the surplus is above the threshold, ruin checked at claim
epochs only.  The batch driver parallelizes over paths; every path writes
its own output slot, so results are identical for any thread count.

Stop reason codes: 0 = ruin, 1 = horizon reached, 2 = event cap hit.
"""

from __future__ import annotations

import warnings

import numpy as np

# the TBB version probe warns on some hosts; the workqueue layer is fine
warnings.filterwarnings("ignore", message=".*TBB threading layer.*")

from numba import njit, prange, types

from .streams import next_uniform, stream_seed

REASON_RUIN = 0
REASON_HORIZON = 1
REASON_EVENT_CAP = 2

# conditional-quantile linear fallback threshold, as in copula.conditional_quantile
_LINEAR_EPS = 1e-12


@njit(types.float64(types.float64, types.float64, types.float64), cache=True)
def _cond_quantile(u1, v, theta):
    a = theta * (1.0 - 2.0 * u1)
    if abs(a) < _LINEAR_EPS or v <= 0.0:
        return v
    disc = (1.0 + a) * (1.0 + a) - 4.0 * a * v
    return 2.0 * v / (1.0 + a + np.sqrt(disc))


@njit(
    types.Tuple((types.uint64, types.float64, types.float64))(
        types.uint64, types.float64, types.float64, types.float64
    ),
    cache=True,
)
def _draw_pair(state, rate, mean, theta):
    """Joint (gap, jump) draw; returns (state, gap, jump)."""
    state, u1 = next_uniform(state)
    gap = -np.log1p(-u1) / rate
    state, v = next_uniform(state)
    jump = -mean * np.log1p(-_cond_quantile(u1, v, theta))
    return state, gap, jump


@njit(cache=True)
def run_path(
    master_seed,
    path_index,
    lam,
    lam_bar,
    mu,
    mu_bar,
    theta,
    theta_bar,
    pays_dividends,
    b,
    d,
    delta,
    x0,
    horizon,
    event_cap,
    trace_times,
    trace_types,
    trace_jumps,
    trace_surplus,
    trace_on,
):
    """Simulate one path; returns (state, ruined, tau, prior, deficit, divs, reason, n_events, n_trace)."""
    state = stream_seed(np.uint64(master_seed), np.uint64(path_index))
    return resume_path(
        state, lam, lam_bar, mu, mu_bar, theta, theta_bar, pays_dividends,
        b, d, delta, x0, horizon, event_cap,
        trace_times, trace_types, trace_jumps, trace_surplus, trace_on,
    )


@njit(cache=True)
def resume_path(
    state,
    lam,
    lam_bar,
    mu,
    mu_bar,
    theta,
    theta_bar,
    pays_dividends,
    b,
    d,
    delta,
    x0,
    horizon,
    event_cap,
    trace_times,
    trace_types,
    trace_jumps,
    trace_surplus,
    trace_on,
):
    x = x0
    t = 0.0
    divs = 0.0
    n_ev = 0
    n_tr = 0
    state, gap, yc = _draw_pair(state, lam, mu, theta)
    tc = gap
    state, gap, yp = _draw_pair(state, lam_bar, mu_bar, theta_bar)
    tp = gap
    while True:
        tn = tc if tc < tp else tp
        stop = tn >= horizon
        seg_end = horizon if stop else tn
        if pays_dividends and x > b:
            # drift x(s) = max(b, x - d s); dividends accrue until level b
            dt = seg_end - t
            s = (x - b) / d
            if dt < s:
                s = dt
            divs += d * np.exp(-delta * t) * (1.0 - np.exp(-delta * s)) / delta
            nx = x - d * dt
            x = b if nx < b else nx
        if stop:
            return state, 0, 0.0, 0.0, 0.0, divs, REASON_HORIZON, n_ev, n_tr
        t = tn
        n_ev += 1
        if n_ev > event_cap:
            return state, 0, 0.0, 0.0, 0.0, divs, REASON_EVENT_CAP, n_ev, n_tr
        if tc < tp:
            prior = x
            x -= yc
            if trace_on and n_tr < trace_times.shape[0]:
                trace_times[n_tr] = t
                trace_types[n_tr] = 0
                trace_jumps[n_tr] = yc
                trace_surplus[n_tr] = x
                n_tr += 1
            if x < 0.0:
                return state, 1, t, prior, -x, divs, REASON_RUIN, n_ev, n_tr
            state, gap, yc = _draw_pair(state, lam, mu, theta)
            tc = t + gap
        else:
            x += yp
            if trace_on and n_tr < trace_times.shape[0]:
                trace_times[n_tr] = t
                trace_types[n_tr] = 1
                trace_jumps[n_tr] = yp
                trace_surplus[n_tr] = x
                n_tr += 1
            state, gap, yp = _draw_pair(state, lam_bar, mu_bar, theta_bar)
            tp = t + gap


@njit(cache=True, parallel=True)
def run_batch(
    master_seed,
    n_paths,
    lam,
    lam_bar,
    mu,
    mu_bar,
    theta,
    theta_bar,
    pays_dividends,
    b,
    d,
    delta,
    x0,
    horizon,
    event_cap,
):
    """Simulate ``n_paths`` independent paths; per-path output arrays."""
    ruined = np.empty(n_paths, np.uint8)
    tau = np.empty(n_paths, np.float64)
    prior = np.empty(n_paths, np.float64)
    deficit = np.empty(n_paths, np.float64)
    divs = np.empty(n_paths, np.float64)
    reason = np.empty(n_paths, np.uint8)
    n_events = np.empty(n_paths, np.int64)
    dummy_f = np.empty(0, np.float64)
    dummy_u = np.empty(0, np.uint8)
    for i in prange(n_paths):
        _, r, tu, pr, de, dv, rs, ne, _ = run_path(
            master_seed, i, lam, lam_bar, mu, mu_bar, theta, theta_bar,
            pays_dividends, b, d, delta, x0, horizon, event_cap,
            dummy_f, dummy_u, dummy_f, dummy_f, False,
        )
        ruined[i] = r
        tau[i] = tu
        prior[i] = pr
        deficit[i] = de
        divs[i] = dv
        reason[i] = rs
        n_events[i] = ne
    return ruined, tau, prior, deficit, divs, reason, n_events
