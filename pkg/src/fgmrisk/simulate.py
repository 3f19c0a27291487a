"""Monte Carlo estimation of ruin, penalty and dividend functionals.

Paths are simulated event by event (see ``_kernel``).  Each path owns a
stream derived from ``(master_seed, path_index)``, so estimates are
bit-identical for any worker count; workers only change how the path loop
is scheduled.  Estimates are horizon-truncated: the fraction of paths
stopped by the horizon (rather than by ruin) is reported so the
truncation is visible, and dividend estimates carry the explicit tail
bound ``(d/delta) exp(-delta horizon)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernel
from .errors import ParameterError
from .model import (
    Discounts,
    ModelParams,
    PenaltySpec,
    ThresholdStrategy,
    net_profit_check,
    penalty_eval,
)
from .streams import SplitMix64

__all__ = [
    "SimLimits",
    "RuinRecord",
    "McEstimate",
    "simulate_path",
    "estimate_ruin_probability",
    "estimate_gerber_shiu",
    "estimate_dividend_value",
]

_REASONS = {0: "ruin", 1: "horizon", 2: "event_cap"}


@dataclass(frozen=True)
class SimLimits:
    """Horizon and event-count guards for a single path."""

    horizon: float = 5000.0
    event_cap: int = 10**7

    def __post_init__(self):
        if self.horizon < 0.0:
            raise ParameterError(f"horizon must be >= 0, got {self.horizon}")
        if self.event_cap < 1:
            raise ParameterError(f"event_cap must be >= 1, got {self.event_cap}")


@dataclass(frozen=True)
class RuinRecord:
    """Outcome of one simulated path."""

    ruined: bool
    tau: Optional[float]
    surplus_prior: Optional[float]
    deficit: Optional[float]
    discounted_dividends: float
    stopped_reason: str
    n_events: int


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo mean with its standard error and 95% interval."""

    mean: float
    std_error: float
    n_paths: int
    ci95_low: float = field(init=False)
    ci95_high: float = field(init=False)
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "ci95_low", self.mean - 1.96 * self.std_error)
        object.__setattr__(self, "ci95_high", self.mean + 1.96 * self.std_error)


def _kernel_args(params: ModelParams, strategy: ThresholdStrategy, delta: float):
    return (
        params.lam,
        params.lam_bar,
        params.mu,
        params.mu_bar,
        params.theta.theta,
        params.theta_bar.theta,
        strategy.pays_dividends,
        strategy.b if strategy.pays_dividends else 0.0,
        strategy.d if strategy.pays_dividends else 0.0,
        delta if strategy.pays_dividends else 1.0,
    )


def simulate_path(
    params: ModelParams,
    strategy: ThresholdStrategy,
    discounts: Discounts,
    x0: float,
    limits: SimLimits = SimLimits(),
    rng_stream: Optional[SplitMix64] = None,
    trace: bool = False,
):
    """Simulate one surplus path.

    Between events the surplus is flat below the threshold; at or above it,
    it decays at the dividend rate until it reaches the threshold and then
    sits there (paying nothing) until the next jump.  Discounted dividends
    accrue along the decay.  Ruin is only possible at claim epochs.

    Parameters
    ----------
    rng_stream : SplitMix64, optional
        Stream consumed by the path (its state advances).  Defaults to a
        fresh stream seeded from (0, 0).
    trace : bool
        When true, also return the event log as a list of
        ``(event_time, event_type, jump_size, surplus_after)`` tuples with
        event_type in {"claim", "premium"}.  The log keeps the first
        million events.

    Returns
    -------
    RuinRecord, or (RuinRecord, trace list) when ``trace`` is set.
    """
    if x0 < 0.0:
        raise ParameterError(f"x0 must be >= 0, got {x0}")
    stream = rng_stream if rng_stream is not None else SplitMix64(0, 0)
    cap = min(limits.event_cap, 10**6) if trace else 0
    tr_t = np.empty(cap, np.float64)
    tr_k = np.empty(cap, np.uint8)
    tr_j = np.empty(cap, np.float64)
    tr_x = np.empty(cap, np.float64)
    state, ruined, tau, prior, deficit, divs, reason, n_ev, n_tr = _kernel.resume_path(
        np.uint64(stream.state),
        *_kernel_args(params, strategy, discounts.delta),
        x0,
        limits.horizon,
        limits.event_cap,
        tr_t,
        tr_k,
        tr_j,
        tr_x,
        trace,
    )
    stream.state = int(state)
    record = RuinRecord(
        ruined=bool(ruined),
        tau=float(tau) if ruined else None,
        surplus_prior=float(prior) if ruined else None,
        deficit=float(deficit) if ruined else None,
        discounted_dividends=float(divs),
        stopped_reason=_REASONS[int(reason)],
        n_events=int(n_ev),
    )
    if not trace:
        return record
    kinds = ("claim", "premium")
    events = [
        (float(tr_t[i]), kinds[int(tr_k[i])], float(tr_j[i]), float(tr_x[i]))
        for i in range(n_tr)
    ]
    return record, events


def _set_workers(workers):
    import numba

    if workers is None:
        return None
    avail = numba.config.NUMBA_NUM_THREADS
    prev = numba.get_num_threads()
    numba.set_num_threads(max(1, min(int(workers), avail)))
    return prev


def _restore_workers(prev):
    if prev is not None:
        import numba

        numba.set_num_threads(prev)


def _run_batch(params, strategy, delta, x0, n_paths, limits, master_seed, workers):
    if n_paths < 1:
        raise ParameterError(f"n_paths must be >= 1, got {n_paths}")
    if x0 < 0.0:
        raise ParameterError(f"x0 must be >= 0, got {x0}")
    prev = _set_workers(workers)
    try:
        out = _kernel.run_batch(
            np.uint64(master_seed),
            n_paths,
            *_kernel_args(params, strategy, delta),
            x0,
            limits.horizon,
            limits.event_cap,
        )
    finally:
        _restore_workers(prev)
    return out


def _mean_se(values: np.ndarray) -> tuple:
    n = values.shape[0]
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return mean, se


def _reason_counts(reason: np.ndarray) -> dict:
    return {
        name: int((reason == code).sum()) for code, name in _REASONS.items()
    }


def estimate_ruin_probability(
    params: ModelParams,
    strategy: ThresholdStrategy,
    x0: float,
    n_paths: int,
    limits: SimLimits = SimLimits(),
    master_seed: int = 0,
    workers: Optional[int] = None,
) -> McEstimate:
    """Probability of ruin within the horizon (Bernoulli mean over paths).

    The infinite-horizon ruin probability is approached from below as the
    horizon grows; ``diagnostics['stopped_reason']`` exposes how many
    paths were cut off.  A warning applies when the net profit condition
    fails: the estimate then depends strongly on the horizon.
    """
    npc = net_profit_check(params, strategy)
    if not npc.holds:
        import warnings

        warnings.warn(
            "net profit condition fails; ruin estimate is horizon-dominated",
            stacklevel=2,
        )
    ruined, _, _, _, _, reason, n_events = _run_batch(
        params, strategy, 1.0, x0, n_paths, limits, master_seed, workers
    )
    mean, se = _mean_se(ruined.astype(np.float64))
    return McEstimate(
        mean,
        se,
        n_paths,
        diagnostics={
            "stopped_reason": _reason_counts(reason),
            "total_events": int(n_events.sum()),
        },
    )


def estimate_gerber_shiu(
    params: ModelParams,
    strategy: ThresholdStrategy,
    penalty: PenaltySpec,
    delta0: float,
    x0: float,
    n_paths: int,
    limits: SimLimits = SimLimits(),
    master_seed: int = 0,
    workers: Optional[int] = None,
) -> McEstimate:
    """Expected discounted penalty at ruin (zero on surviving paths)."""
    if delta0 < 0.0:
        raise ParameterError(f"delta0 must be >= 0, got {delta0}")
    ruined, tau, prior, deficit, _, reason, _ = _run_batch(
        params, strategy, 1.0, x0, n_paths, limits, master_seed, workers
    )
    mask = ruined.astype(bool)
    values = np.zeros(n_paths)
    if mask.any():
        w = penalty_eval(penalty, prior[mask], deficit[mask])
        values[mask] = np.exp(-delta0 * tau[mask]) * w
    mean, se = _mean_se(values)
    return McEstimate(
        mean, se, n_paths, diagnostics={"stopped_reason": _reason_counts(reason)}
    )


def estimate_dividend_value(
    params: ModelParams,
    strategy: ThresholdStrategy,
    delta: float,
    x0: float,
    n_paths: int,
    limits: SimLimits = SimLimits(),
    master_seed: int = 0,
    workers: Optional[int] = None,
) -> McEstimate:
    """Expected discounted dividends paid until ruin.

    The horizon truncation error is bounded path-wise by
    ``(d/delta) exp(-delta horizon)``, reported in the diagnostics.
    """
    if not strategy.pays_dividends:
        raise ParameterError("estimate_dividend_value requires a threshold strategy")
    if not delta > 0.0:
        raise ParameterError(f"delta must be positive, got {delta}")
    _, _, _, _, divs, reason, _ = _run_batch(
        params, strategy, delta, x0, n_paths, limits, master_seed, workers
    )
    mean, se = _mean_se(divs)
    bound = strategy.d / delta * math.exp(-delta * limits.horizon)
    return McEstimate(
        mean,
        se,
        n_paths,
        diagnostics={
            "stopped_reason": _reason_counts(reason),
            "truncation_bound": bound,
        },
    )
