"""Risk-model engine: compound-Poisson surplus with stochastic premiums,
FGM dependence and a threshold dividend strategy.

Three mutually cross-checking routes to the same quantities: closed forms
(exponential marginals), a grid-based integral-equation solver, and
Monte Carlo simulation.
"""

from .closedform import (
    ExpSum,
    PiecewiseSolution,
    dividend_cubic_discriminant,
    dividends_threshold_independent,
    psi_independent_no_dividends,
    psi_theta_bar_characteristic_roots,
    psi_theta_integral_exact,
    psi_theta_no_dividends,
    psi_threshold_independent,
    solve_cubic_real,
    solve_linear_system,
)
from .copula import (
    ExponentialMarginal,
    FgmParam,
    conditional_cdf,
    conditional_quantile,
    fgm_cdf,
    fgm_density,
    rank_dependence,
    sample_dependent_pair,
)
from .errors import (
    NumericalError,
    ParameterError,
    SingularSystemError,
    UnsupportedRegimeError,
)
from .ide import (
    GridFunction,
    GridSpec,
    ResidualReport,
    residual_integral_inner,
    residual_outer_ode,
    solve_gs_no_dividends,
)
from .model import (
    Discounts,
    ModelParams,
    PenaltySpec,
    ThresholdStrategy,
    net_profit_check,
    paper_sec6_params,
    penalty_eval,
)
from .simulate import (
    McEstimate,
    RuinRecord,
    SimLimits,
    estimate_dividend_value,
    estimate_gerber_shiu,
    estimate_ruin_probability,
    simulate_path,
)
from .streams import SplitMix64

__version__ = "0.1.0"
