import numpy as np
import pytest

from fgmrisk import closedform as cf
from fgmrisk import ide
from fgmrisk.errors import ParameterError
from fgmrisk.model import (
    Discounts,
    PenaltySpec,
    ThresholdStrategy,
    paper_sec6_params,
)

SEC6 = paper_sec6_params()
STRAT = ThresholdStrategy.threshold(5.0, 0.1)
DISC = Discounts(0.0, 0.01)
ONE = PenaltySpec("one")


@pytest.fixture(scope="module")
def grid_psi0():
    return ide.solve_gs_no_dividends(SEC6, ONE, 0.0, ide.GridSpec(150.0, 3000))


@pytest.fixture(scope="module")
def thm4():
    return cf.psi_threshold_independent(SEC6, STRAT)


@pytest.fixture(scope="module")
def thm5():
    return cf.dividends_threshold_independent(SEC6, STRAT, 0.01)


class TestGridFunction:
    def test_interpolation_and_tails(self):
        g = ide.GridFunction(np.array([0.0, 1.0, 2.0]), np.array([1.0, 0.5, 0.25]),
                             tail="exp", tail_rate=0.5)
        assert g(0.5) == pytest.approx(0.75)
        assert g(3.0) == pytest.approx(0.25 * np.exp(-0.5))
        z = ide.GridFunction(np.array([0.0, 1.0]), np.array([1.0, 0.5]), tail="zero")
        assert z(2.0) == 0.0
        with pytest.raises(ParameterError):
            g(-1.0)

    def test_validation(self):
        with pytest.raises(ParameterError):
            ide.GridFunction(np.array([1.0, 2.0]), np.array([1.0, 1.0]))
        with pytest.raises(ParameterError):
            ide.GridFunction(np.array([0.0, 0.0]), np.array([1.0, 1.0]))


class TestGridSolver:
    def test_matches_independent_closed_form(self, grid_psi0):
        psi0 = cf.psi_independent_no_dividends(SEC6)
        probes = np.linspace(0.0, 20.0, 81)
        err = np.max(np.abs(grid_psi0(probes) - psi0(probes)))
        assert err <= 1e-3

    def test_matches_dependent_integral_solution(self):
        p = paper_sec6_params(theta=0.5)
        sol = ide.solve_gs_no_dividends(p, ONE, 0.0, ide.GridSpec(150.0, 3000))
        exact = cf.psi_theta_integral_exact(p)
        probes = np.linspace(0.0, 20.0, 81)
        err = np.max(np.abs(sol(probes) - exact(probes)))
        assert err <= 1e-3

    def test_mesh_halving_improves_roughly_fourfold(self):
        psi0 = cf.psi_independent_no_dividends(SEC6)
        probes = np.linspace(0.0, 20.0, 81)
        errs = []
        for n in (750, 1500):
            sol = ide.solve_gs_no_dividends(SEC6, ONE, 0.0, ide.GridSpec(150.0, n))
            errs.append(np.max(np.abs(sol(probes) - psi0(probes))))
        ratio = errs[0] / errs[1]
        assert 2.5 <= ratio <= 6.0

    def test_discounting_damps_the_solution(self):
        spec = ide.GridSpec(150.0, 1500)
        base = ide.solve_gs_no_dividends(SEC6, ONE, 0.0, spec)
        damped = ide.solve_gs_no_dividends(SEC6, ONE, 0.1, spec)
        probes = np.linspace(0.0, 30.0, 61)
        assert np.all(damped(probes) <= base(probes) + 1e-9)
        vals = damped(probes)
        assert np.all(np.diff(vals) <= 1e-9)

    def test_gauss_panels_agree_with_trapezoid(self):
        psi0 = cf.psi_independent_no_dividends(SEC6)
        probes = np.linspace(0.0, 20.0, 41)
        sol = ide.solve_gs_no_dividends(
            SEC6, ONE, 0.0, ide.GridSpec(150.0, 1500, quadrature="gauss")
        )
        assert np.max(np.abs(sol(probes) - psi0(probes))) <= 2e-3

    def test_deficit_penalty_grid_vs_oracle(self):
        # E[deficit at ruin] = mu psi(x) for independent exponential claims
        with pytest.warns(UserWarning, match="unbounded"):
            spec = PenaltySpec("deficit")
        sol = ide.solve_gs_no_dividends(SEC6, spec, 0.0, ide.GridSpec(150.0, 1500))
        psi0 = cf.psi_independent_no_dividends(SEC6)
        probes = np.linspace(0.0, 20.0, 41)
        assert np.max(np.abs(sol(probes) - SEC6.mu * psi0(probes))) <= 5e-3

    def test_small_domain_warns(self):
        with pytest.warns(UserWarning, match="x_max"):
            ide.solve_gs_no_dividends(SEC6, ONE, 0.5, ide.GridSpec(2.0, 64))


class TestResidualReports:
    def test_exact_candidates_have_tiny_residuals(self, thm4, thm5):
        cases = [
            (cf.psi_independent_no_dividends(SEC6), SEC6, "eq47", {}),
            (cf.psi_independent_no_dividends(SEC6), SEC6, "eq48", {}),
            (cf.psi_independent_no_dividends(SEC6), SEC6, "eq25", {}),
            (cf.psi_theta_integral_exact(paper_sec6_params(theta=0.5)),
             paper_sec6_params(theta=0.5), "eq48", {}),
            (thm4, SEC6, "eq9", {"strategy": STRAT}),
            (thm4, SEC6, "eq68", {"strategy": STRAT}),
            (thm4, SEC6, "eq69", {"strategy": STRAT}),
            (thm5, SEC6, "eq29", {"strategy": STRAT, "discounts": DISC}),
            (thm5, SEC6, "eq86", {"strategy": STRAT, "discounts": DISC}),
            (thm5, SEC6, "eq87", {"strategy": STRAT, "discounts": DISC}),
        ]
        for cand, params, eq, kw in cases:
            rep = ide.residual_integral_inner(cand, params, eq, **kw)
            assert rep.max_abs_residual <= 1e-10, (eq, rep.max_abs_residual)

    def test_outer_ode_residuals(self, thm4, thm5):
        for eq in ("eq26", "eq27", "eq28", "eq10", "eq70", "eq71"):
            rep = ide.residual_outer_ode(thm4, SEC6, eq, strategy=STRAT)
            assert rep.max_abs_residual <= 1e-10, (eq, rep.max_abs_residual)
        for eq in ("eq42", "eq43", "eq44", "eq30", "eq88", "eq89"):
            rep = ide.residual_outer_ode(thm5, SEC6, eq, strategy=STRAT,
                                         discounts=DISC)
            assert rep.max_abs_residual <= 1e-10, (eq, rep.max_abs_residual)

    def test_lemma_equations_with_published_route(self):
        p = paper_sec6_params(theta=0.5)
        pub = cf.psi_theta_no_dividends(p)
        rep = ide.residual_outer_ode(pub, p, "eq49")
        assert rep.max_abs_residual <= 1e-10

    def test_premium_side_ode_with_characteristic_root(self):
        p = paper_sec6_params(theta_bar=0.5)
        roots = cf.psi_theta_bar_characteristic_roots(p)["roots"]
        cand = cf.ExpSum(0.0, ((1.0, roots[0]),))
        rep = ide.residual_outer_ode(cand, p, "eq50")
        assert rep.max_abs_residual <= 1e-10

    def test_equations_discriminate(self):
        # the ruin-side solution must not satisfy the premium-side equation
        p = paper_sec6_params(theta=0.5)
        pub = cf.psi_theta_no_dividends(p)
        swapped = paper_sec6_params(theta=0.0, theta_bar=0.5)
        rep = ide.residual_outer_ode(pub, swapped, "eq50")
        assert rep.max_abs_residual > 1e-3

    def test_published_dependent_route_misses_integral_equation(self):
        # the documented defect: the published expansion leaves a visible
        # residual in the integral equation it came from
        p = paper_sec6_params(theta=0.5)
        pub = cf.psi_theta_no_dividends(p)
        rep = ide.residual_integral_inner(pub, p, "eq48")
        assert 1e-6 < rep.max_abs_residual < 1e-3

    def test_zero_candidate_exposes_source_terms(self):
        zero = cf.ExpSum(0.0, ((0.0, -1.0),))
        rep = ide.residual_integral_inner(zero, SEC6, "eq25",
                                          probes=(0.0, 1.0, 4.0))
        lam = SEC6.lam
        for (x, lhs, rhs, resid) in rep.probes:
            source = lam * (1.0 - float(SEC6.claim.F(x)))
            assert resid == pytest.approx(-source, abs=1e-12)

    def test_residuals_are_affine_in_the_candidate(self):
        base = cf.psi_independent_no_dividends(SEC6)
        scaled = cf.ExpSum(0.0, tuple((2.0 * c, z) for c, z in base.terms))
        zero = cf.ExpSum(0.0, ((0.0, -1.0),))
        probes = (0.0, 2.0, 7.0)
        r1 = ide.residual_integral_inner(base, SEC6, "eq25", probes=probes)
        r2 = ide.residual_integral_inner(scaled, SEC6, "eq25", probes=probes)
        r0 = ide.residual_integral_inner(zero, SEC6, "eq25", probes=probes)
        for (p1, p2, p0) in zip(r1.probes, r2.probes, r0.probes):
            assert p2[3] == pytest.approx(2.0 * p1[3] - p0[3], abs=1e-11)

    def test_transforms_closed_form_matches_quadrature(self):
        sol = cf.psi_independent_no_dividends(SEC6)
        closed = ide._i_transforms(sol, SEC6, 3.0)
        quad = ide._i_transforms(lambda x: sol(x), SEC6, 3.0)
        for key in ("I13", "I14", "I15", "I16"):
            assert closed[key] == pytest.approx(quad[key], abs=1e-10)

    def test_eq48_reports_transforms(self):
        sol = cf.psi_independent_no_dividends(SEC6)
        rep = ide.residual_integral_inner(sol, SEC6, "eq48", probes=(0.0, 2.0))
        assert set(rep.intermediates["transforms"][2.0]) == {"I13", "I14", "I15", "I16"}

    def test_beta_values_reported(self, thm4):
        rep = ide.residual_outer_ode(thm4, SEC6, "eq26", strategy=STRAT,
                                     probes=(6.0, 10.0))
        assert "beta1" in rep.intermediates["beta"][6.0]

    def test_grid_candidate_accepted_by_integral_equations(self, grid_psi0):
        rep = ide.residual_integral_inner(grid_psi0, SEC6, "eq47",
                                          probes=(1.0, 5.0, 10.0))
        assert rep.max_abs_residual <= 5e-4

    def test_grid_candidate_rejected_by_derivative_equations(self, grid_psi0):
        with pytest.raises(ParameterError, match="ExpSum|analytic"):
            ide.residual_outer_ode(grid_psi0, SEC6, "eq49")

    def test_probe_domain_enforced(self, thm4):
        with pytest.raises(ParameterError, match="domain"):
            ide.residual_integral_inner(thm4, SEC6, "eq68", strategy=STRAT,
                                        probes=(6.0,))
        with pytest.raises(ParameterError, match="domain"):
            ide.residual_outer_ode(thm4, SEC6, "eq71", strategy=STRAT,
                                   probes=(2.0,))

    def test_report_serializes(self, thm4):
        rep = ide.residual_integral_inner(thm4, SEC6, "eq68", strategy=STRAT)
        d = rep.to_dict()
        assert d["equation_id"] == "eq68"
        assert len(d["probes"]) == len(rep.probes)
