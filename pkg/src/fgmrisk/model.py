"""Model parameters, dividend strategy, discounts and penalty functions.

The surplus process has claim arrivals of intensity ``lam`` with jump
sizes from ``claim`` (FGM-coupled to the preceding inter-claim time with
parameter ``theta``) and premium arrivals of intensity ``lam_bar`` with
jump sizes from ``premium`` (coupled with ``theta_bar``).  A threshold
strategy pays dividends at rate ``d`` while the surplus is at or above
``b``.  All value types validate on construction and are immutable.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

from .copula import ExponentialMarginal, FgmParam
from .errors import ParameterError

__all__ = [
    "ModelParams",
    "ThresholdStrategy",
    "Discounts",
    "PenaltySpec",
    "NetProfitResult",
    "net_profit_check",
    "penalty_eval",
    "paper_sec6_params",
]


@dataclass(frozen=True)
class ModelParams:
    """Intensities, jump-size marginals and dependence parameters."""

    lam: float
    lam_bar: float
    claim: ExponentialMarginal
    premium: ExponentialMarginal
    theta: FgmParam = FgmParam(0.0)
    theta_bar: FgmParam = FgmParam(0.0)

    def __post_init__(self):
        if not self.lam > 0.0:
            raise ParameterError(f"lam must be positive, got {self.lam}")
        if not self.lam_bar > 0.0:
            raise ParameterError(f"lam_bar must be positive, got {self.lam_bar}")
        for name in ("theta", "theta_bar"):
            val = getattr(self, name)
            if not isinstance(val, FgmParam):
                object.__setattr__(self, name, FgmParam(float(val)))

    @property
    def mu(self) -> float:
        return self.claim.mean

    @property
    def mu_bar(self) -> float:
        return self.premium.mean

    def is_independent(self) -> bool:
        return self.theta.theta == 0.0 and self.theta_bar.theta == 0.0


def paper_sec6_params(theta: float = 0.0, theta_bar: float = 0.0) -> ModelParams:
    """The built-in 'paper-sec6' preset: lam=0.1, lam_bar=2.3, mu=3, mu_bar=0.2."""
    return ModelParams(
        lam=0.1,
        lam_bar=2.3,
        claim=ExponentialMarginal(3.0),
        premium=ExponentialMarginal(0.2),
        theta=FgmParam(theta),
        theta_bar=FgmParam(theta_bar),
    )


@dataclass(frozen=True)
class ThresholdStrategy:
    """Dividend strategy: either no dividends or (threshold b, rate d)."""

    mode: str = "none"
    b: float = 0.0
    d: float = 0.0

    def __post_init__(self):
        if self.mode not in ("none", "threshold"):
            raise ParameterError(f"mode must be 'none' or 'threshold', got {self.mode!r}")
        if self.mode == "threshold":
            if not self.b > 0.0:
                raise ParameterError(f"b must be positive, got {self.b}")
            if not self.d > 0.0:
                raise ParameterError(f"d must be positive, got {self.d}")

    @classmethod
    def none(cls) -> "ThresholdStrategy":
        return cls(mode="none")

    @classmethod
    def threshold(cls, b: float, d: float) -> "ThresholdStrategy":
        return cls(mode="threshold", b=b, d=d)

    @property
    def pays_dividends(self) -> bool:
        return self.mode == "threshold"


@dataclass(frozen=True)
class Discounts:
    """Discount forces: delta0 for the penalty functional, delta for dividends."""

    delta0: float = 0.0
    delta: float = 0.01

    def __post_init__(self):
        if self.delta0 < 0.0:
            raise ParameterError(f"delta0 must be >= 0, got {self.delta0}")
        if not self.delta > 0.0:
            raise ParameterError(f"delta must be positive, got {self.delta}")


_PENALTY_KINDS = ("one", "deficit", "surplus_prior", "product", "indicator_deficit_le")
_UNBOUNDED = ("deficit", "surplus_prior", "product")


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty w(surplus prior to ruin, deficit at ruin).

    ``one`` recovers the plain ruin probability (with zero discount force);
    ``indicator_deficit_le`` needs the bound ``a``.  The deficit, prior and
    product variants are unbounded; they are admissible for Monte Carlo
    with exponential tails and construction emits a warning.
    """

    kind: str = "one"
    a: float = field(default=0.0)

    def __post_init__(self):
        if self.kind not in _PENALTY_KINDS:
            raise ParameterError(
                f"kind must be one of {_PENALTY_KINDS}, got {self.kind!r}"
            )
        if self.kind == "indicator_deficit_le" and not self.a >= 0.0:
            raise ParameterError(f"a must be >= 0, got {self.a}")
        if self.kind in _UNBOUNDED:
            warnings.warn(
                f"penalty kind {self.kind!r} is unbounded; expectations stay "
                "finite for exponential tails but the bounded-penalty theory "
                "does not cover it",
                stacklevel=2,
            )

    @property
    def is_bounded(self) -> bool:
        return self.kind not in _UNBOUNDED


def penalty_eval(spec: PenaltySpec, surplus_prior, deficit):
    """Evaluate the penalty at (surplus prior to ruin, deficit at ruin).

    Accepts scalars or numpy arrays; returns the same shape.
    """
    import numpy as np

    u1 = np.asarray(surplus_prior, dtype=float)
    u2 = np.asarray(deficit, dtype=float)
    if np.any(u1 < 0) or np.any(u2 < 0):
        raise ParameterError("surplus_prior and deficit must be >= 0")
    if spec.kind == "one":
        out = np.ones_like(u1 * u2)
    elif spec.kind == "deficit":
        out = u2 + 0.0 * u1
    elif spec.kind == "surplus_prior":
        out = u1 + 0.0 * u2
    elif spec.kind == "product":
        out = u1 * u2
    else:  # indicator_deficit_le
        out = np.where(u2 <= spec.a, 1.0, 0.0) + 0.0 * u1
    return out if out.ndim else float(out)


class NetProfitResult(NamedTuple):
    holds: bool
    margin: float


def net_profit_check(params: ModelParams, strategy: ThresholdStrategy) -> NetProfitResult:
    """Net profit condition: premium inflow must beat claim outflow.

    Without dividends this is ``lam_bar mu_bar > lam mu``; under a
    threshold strategy the dividend rate is charged as well.  Returns the
    margin ``lam_bar mu_bar - lam mu - d 1(threshold)``.
    """
    margin = params.lam_bar * params.mu_bar - params.lam * params.mu
    if strategy.pays_dividends:
        margin -= strategy.d
    return NetProfitResult(holds=margin > 0.0, margin=margin)
