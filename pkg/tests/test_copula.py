import math

import numpy as np
import pytest
from scipy import integrate

from fgmrisk.copula import (
    ExponentialMarginal,
    FgmParam,
    conditional_cdf,
    conditional_quantile,
    fgm_cdf,
    fgm_density,
    rank_dependence,
    sample_dependent_pair,
)
from fgmrisk.errors import ParameterError
from fgmrisk.streams import SplitMix64


def test_fgm_param_rejects_out_of_range():
    FgmParam(1.0)
    FgmParam(-1.0)
    with pytest.raises(ParameterError):
        FgmParam(1.0001)
    with pytest.raises(ParameterError):
        FgmParam(float("nan"))


def test_cdf_point_values():
    assert fgm_cdf(0.5, 0.5, 0.0) == pytest.approx(0.25, abs=1e-15)
    assert fgm_cdf(1.0, 0.7, 0.9) == pytest.approx(0.7, abs=1e-15)
    assert fgm_cdf(0.5, 0.5, 1.0) == pytest.approx(0.3125, abs=1e-15)


def test_cdf_stays_in_unit_interval():
    u = np.linspace(0, 1, 21)
    for theta in (-1.0, -0.3, 0.0, 0.7, 1.0):
        c = fgm_cdf(u[:, None], u[None, :], theta)
        assert np.all(c >= -1e-15) and np.all(c <= 1 + 1e-15)


def test_density_point_values():
    assert fgm_density(0.5, 0.123, 0.8) == pytest.approx(1.0, abs=1e-15)
    assert fgm_density(0.0, 0.0, 1.0) == pytest.approx(2.0, abs=1e-15)
    assert fgm_density(0.0, 1.0, 1.0) == pytest.approx(0.0, abs=1e-15)


def test_density_nonnegative_and_normalized():
    u = np.linspace(0, 1, 41)
    for theta in (-1.0, -0.5, 0.5, 1.0):
        dens = fgm_density(u[:, None], u[None, :], theta)
        assert np.all(dens >= -1e-14)
        for u1 in (0.0, 0.2, 0.5, 0.9, 1.0):
            total, _ = integrate.quad(lambda v: fgm_density(u1, v, theta), 0, 1,
                                      epsabs=1e-13)
            assert abs(total - 1.0) < 1e-10


def test_conditional_quantile_limits():
    assert conditional_quantile(0.3, 0.42, 0.0) == pytest.approx(0.42, abs=1e-15)
    assert conditional_quantile(0.5, 0.3, 0.8) == pytest.approx(0.3, abs=1e-15)
    assert conditional_quantile(0.0, 0.5, 1.0) == pytest.approx(
        1.0 - math.sqrt(0.5), abs=1e-12
    )


def test_conditional_quantile_roundtrip_grid():
    u1 = np.linspace(0.0, 1.0, 50)
    v = np.linspace(0.0, 1.0, 50)
    worst = 0.0
    for theta in (-1.0, -0.5, 0.0, 0.5, 1.0):
        q = conditional_quantile(u1[:, None], v[None, :], theta)
        back = conditional_cdf(u1[:, None], q, theta)
        worst = max(worst, float(np.max(np.abs(back - v[None, :]))))
    assert worst < 1e-12


def test_conditional_quantile_monotone_in_v():
    v = np.linspace(0, 1, 200)
    for theta in (-1.0, -0.4, 0.6, 1.0):
        for u1 in (0.0, 0.25, 0.75, 1.0):
            q = conditional_quantile(u1, v, theta)
            assert np.all(np.diff(q) >= -1e-15)


def test_exponential_marginal_shapes():
    m = ExponentialMarginal(3.0)
    y = np.linspace(0, 20, 50)
    assert np.allclose(m.f(y), np.exp(-y / 3) / 3)
    assert np.allclose(m.h(y), 2 / 3 * np.exp(-2 * y / 3) - np.exp(-y / 3) / 3)
    assert m.F(0.0) == 0.0
    assert m.quantile(m.F(5.0)) == pytest.approx(5.0, rel=1e-12)
    # h integrates to zero (it is the derivative of F - F^2)
    total, _ = integrate.quad(m.h, 0, np.inf)
    assert abs(total) < 1e-12
    with pytest.raises(ParameterError):
        ExponentialMarginal(0.0)


def test_marginal_derivatives_match_finite_differences():
    m = ExponentialMarginal(2.5)
    eps = 1e-6
    for y in (0.1, 1.0, 4.0):
        fd = (m.f(y + eps) - m.f(y - eps)) / (2 * eps)
        assert m.df(y, 1) == pytest.approx(fd, rel=1e-8)
        fd2 = (m.h(y + eps) - m.h(y - eps)) / (2 * eps)
        assert m.dh(y, 1) == pytest.approx(fd2, rel=1e-8)


def _sample(theta, n, seed=11):
    stream = SplitMix64(seed, 0)
    marg = ExponentialMarginal(3.0)
    ts = np.empty(n)
    ys = np.empty(n)
    for i in range(n):
        ts[i], ys[i] = sample_dependent_pair(0.1, marg, theta, stream)
    return ts, ys


@pytest.mark.parametrize("theta", [-1.0, -0.5, 0.0, 0.5, 1.0])
def test_sampler_rank_dependence(theta):
    ts, ys = _sample(theta, 100_000)
    dep = rank_dependence(ts, ys)
    assert abs(dep["spearman"] - theta / 3.0) <= 0.015
    assert abs(dep["kendall"] - 2.0 * theta / 9.0) <= 0.015


def test_sampler_preserves_marginal_mean():
    for theta in (-0.9, 0.9):
        ts, ys = _sample(theta, 100_000)
        se = ys.std() / math.sqrt(len(ys))
        assert abs(ys.mean() - 3.0) <= 3.0 * se
        se_t = ts.std() / math.sqrt(len(ts))
        assert abs(ts.mean() - 10.0) <= 3.0 * se_t


def test_sampler_matches_jitted_kernel_draws():
    # same stream, same draws; values may differ by a unit in the last
    # place because numpy's and libm's log1p round differently
    import fgmrisk._kernel as kernel

    state = np.uint64(SplitMix64(77, 5).state)
    stream = SplitMix64(77, 5)
    marg = ExponentialMarginal(3.0)
    for _ in range(200):
        state, gap, jump = kernel._draw_pair(state, 0.1, 3.0, 0.7)
        t, y = sample_dependent_pair(0.1, marg, 0.7, stream)
        assert gap == pytest.approx(t, rel=5e-16)
        assert jump == pytest.approx(y, rel=5e-16)
