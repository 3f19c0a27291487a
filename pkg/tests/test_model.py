import numpy as np
import pytest

from fgmrisk.copula import ExponentialMarginal
from fgmrisk.errors import ParameterError
from fgmrisk.model import (
    Discounts,
    ModelParams,
    PenaltySpec,
    ThresholdStrategy,
    net_profit_check,
    paper_sec6_params,
    penalty_eval,
)


def test_params_validation_names_field():
    with pytest.raises(ParameterError, match="lam"):
        ModelParams(lam=0.0, lam_bar=1.0, claim=ExponentialMarginal(1.0),
                    premium=ExponentialMarginal(1.0))
    with pytest.raises(ParameterError, match="lam_bar"):
        ModelParams(lam=1.0, lam_bar=-2.0, claim=ExponentialMarginal(1.0),
                    premium=ExponentialMarginal(1.0))
    with pytest.raises(ParameterError, match="theta"):
        paper_sec6_params(theta=1.5)
    with pytest.raises(ParameterError, match="mean"):
        ModelParams(lam=1.0, lam_bar=1.0, claim=ExponentialMarginal(-1.0),
                    premium=ExponentialMarginal(1.0))


def test_strategy_validation():
    ThresholdStrategy.none()
    s = ThresholdStrategy.threshold(5.0, 0.1)
    assert s.pays_dividends
    with pytest.raises(ParameterError, match="b"):
        ThresholdStrategy.threshold(0.0, 0.1)
    with pytest.raises(ParameterError, match="d"):
        ThresholdStrategy.threshold(5.0, 0.0)
    with pytest.raises(ParameterError, match="mode"):
        ThresholdStrategy(mode="barrier")


def test_discounts_validation():
    Discounts(0.0, 0.01)
    with pytest.raises(ParameterError, match="delta0"):
        Discounts(-0.1, 0.01)
    with pytest.raises(ParameterError, match="delta"):
        Discounts(0.0, 0.0)


def test_net_profit_examples():
    p = paper_sec6_params()
    res = net_profit_check(p, ThresholdStrategy.none())
    assert res.holds and res.margin == pytest.approx(0.16, abs=1e-12)
    res = net_profit_check(p, ThresholdStrategy.threshold(5.0, 0.1))
    assert res.holds and res.margin == pytest.approx(0.06, abs=1e-12)
    boundary = ModelParams(lam=1.0, lam_bar=2.0, claim=ExponentialMarginal(1.0),
                           premium=ExponentialMarginal(0.5))
    res = net_profit_check(boundary, ThresholdStrategy.none())
    assert not res.holds and res.margin == pytest.approx(0.0, abs=1e-12)


def test_penalty_eval_examples():
    one = PenaltySpec("one")
    assert penalty_eval(one, 3.2, 1.1) == 1.0
    with pytest.warns(UserWarning, match="unbounded"):
        deficit = PenaltySpec("deficit")
    assert penalty_eval(deficit, 3.2, 1.1) == 1.1
    ind = PenaltySpec("indicator_deficit_le", a=2.0)
    assert penalty_eval(ind, 0.5, 1.1) == 1.0
    assert penalty_eval(ind, 0.5, 2.5) == 0.0
    with pytest.warns(UserWarning):
        prod = PenaltySpec("product")
    assert penalty_eval(prod, 2.0, 3.0) == 6.0
    arr = penalty_eval(ind, np.array([0.5, 0.5]), np.array([1.1, 2.5]))
    assert arr.tolist() == [1.0, 0.0]
    with pytest.raises(ParameterError):
        penalty_eval(one, -1.0, 0.5)
    with pytest.raises(ParameterError, match="kind"):
        PenaltySpec("square")


def test_penalty_bounded_flag():
    assert PenaltySpec("one").is_bounded
    assert PenaltySpec("indicator_deficit_le", a=3.0).is_bounded
    with pytest.warns(UserWarning):
        assert not PenaltySpec("deficit").is_bounded
