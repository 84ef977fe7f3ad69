import math

import numpy as np
import pytest
import sympy as sp

from biharm.constructor import (
    AlphaProfile,
    ConstructionSpec,
    alpha_ode_residual,
    build_flat_target,
    build_nonflat_target,
    integrate_alpha,
    ode_residual_terms,
    profile_from_text,
    profile_to_text,
    riccati_consistency,
    riccati_rhs,
    simpson_integral,
    verify_construction,
)
from biharm.errors import (
    ImmediateSingularity,
    OutOfProfile,
    SingularCoefficient,
    SingularProfile,
)
from biharm.numkernel import CHART_SYMBOLS, ChartBox, ScalarField

T, S, Z = CHART_SYMBOLS

START = (math.pi / 4, 0.1, -0.01)  # alpha0, alpha1, alpha2 = u0 * alpha1^2


@pytest.fixture(scope="module")
def solved_profile():
    return integrate_alpha(*START, (0.0, 1.0), 1e-3)


class TestRiccati:
    def test_zero_u(self):
        assert riccati_rhs(math.pi / 4, 0.0) == pytest.approx(-8.0)

    def test_negative_u(self):
        assert riccati_rhs(math.pi / 4, -1.0) == pytest.approx(-3.0)

    def test_singular_margin(self):
        with pytest.raises(SingularCoefficient):
            riccati_rhs(math.pi / 2 - 1e-9, 0.0)


class TestIntegration:
    def test_zero_slope_rejected(self):
        with pytest.raises(ImmediateSingularity):
            integrate_alpha(math.pi / 4, 0.0, 0.0, (0.0, 1.0), 1e-3)

    def test_profile_stays_regular(self, solved_profile):
        prof = solved_profile
        assert not prof.truncated
        assert len(prof.y_grid) == 1001
        assert prof.step_error < 1e-12
        prof.validate()

    def test_riccati_flow_consistency(self, solved_profile):
        assert riccati_consistency(solved_profile) <= 1e-5

    def test_fourth_order_convergence(self):
        # endpoint differences between steps h and h/2 shrink ~16x; steps
        # are chosen coarse enough for truncation to dominate round-off
        steps = (0.08, 0.04, 0.02)
        end = {}
        for h in steps:
            prof = integrate_alpha(math.pi / 4, 0.6, -0.36, (0.0, 0.64), h)
            end[h] = prof.alpha[-1]
        d1 = abs(end[steps[0]] - end[steps[1]])
        d2 = abs(end[steps[1]] - end[steps[2]])
        assert d2 < d1
        ratio = d1 / max(d2, 1e-18)
        assert 8.0 < ratio < 40.0

    def test_truncation_on_margin(self):
        # drive alpha towards pi/2 fast: the sin*cos margin must stop it
        prof = integrate_alpha(1.45, 0.8, 0.0, (0.0, 1.0), 1e-3)
        assert prof.truncated
        assert "margin" in prof.truncate_reason
        assert prof.y_grid[-1] < 1.0


class TestOdeResidual:
    def test_solution_residual_small(self, solved_profile):
        prof = solved_profile
        for y in np.linspace(0.01, 0.99, 23):
            assert abs(alpha_ode_residual(prof, float(y))) <= 1e-5

    def test_constant_profile_zero(self):
        ys = np.linspace(0.0, 1.0, 11)
        prof = AlphaProfile(
            y_grid=ys, alpha=np.full(11, 0.7), alpha1=np.zeros(11),
            alpha2=np.zeros(11),
        )
        assert alpha_ode_residual(prof, 0.5) == pytest.approx(0.0, abs=1e-15)

    def test_perturbed_node_detected(self, solved_profile):
        prof = solved_profile
        alpha2 = prof.alpha2.copy()
        k = len(alpha2) // 2
        alpha2[k] += 0.1
        bad = AlphaProfile(prof.y_grid, prof.alpha, prof.alpha1, alpha2)
        y = float(prof.y_grid[k])
        assert abs(alpha_ode_residual(bad, y)) > 1e-3

    def test_out_of_profile(self, solved_profile):
        with pytest.raises(OutOfProfile):
            alpha_ode_residual(solved_profile, 2.0)

    def test_residual_terms_sign(self):
        # straight substitution of the printed third-order expression
        val = ode_residual_terms(math.pi / 4, 0.1, -0.01, 0.0)
        s = c = math.sqrt(0.5)
        expected = c * (s * s + 3) * 0.1 * (-0.01) + s * (2 * c * c + 3) * 1e-3
        assert val == pytest.approx(expected, abs=1e-15)


class TestFlatTargetBuilder:
    def test_cosh_family_residual_vanishes(self):
        spec = build_flat_target(2 * sp.log(sp.cosh(S)),
                                 ChartBox((-1.0, -1.5, -0.5),
                                          (1.0, 1.5, 0.5), 0.05))
        rep = verify_construction(spec, tol=1e-6, grid=(7, 7))
        assert rep.passed
        assert rep.classification == "proper biharmonic"

    def test_square_root_family(self):
        spec = build_flat_target(2 * sp.log(S),
                                 ChartBox((-1.0, 0.5, -0.5),
                                          (1.0, 3.0, 0.5), 0.05))
        rep = verify_construction(spec, tol=1e-6, grid=(7, 7))
        assert rep.passed

    def test_square_exponent_residual(self):
        spec = build_flat_target(S**2)
        assert spec.aux_residual((0.0, 1.0, 0.0)) == pytest.approx(4.0,
                                                                   abs=1e-9)
        rep = verify_construction(spec, tol=1e-6, grid=(5, 5))
        assert not rep.passed

    def test_slope_free_exponent_flagged(self):
        spec = build_flat_target(0.4 * T)
        assert any("harmonic" in f for f in spec.flags)


class TestNonflatBuilder:
    def test_linear_angle_metrics(self):
        # alpha(y) = y exercises the metric builders only (not a solution
        # of the angle ODE): domain tan^2(y) dt^2 + dy^2 + dz^2 and target
        # dy^2 + sin^2(y) dpsi^2 with curvature 1
        ys = np.linspace(0.3, 1.2, 181)
        prof = AlphaProfile(ys, ys.copy(), np.ones_like(ys),
                            np.zeros_like(ys))
        built = build_nonflat_target(ConstructionSpec(prof))
        y = 0.7
        w = built.canonical.domain_metric.weights((0.1, y, 0.0))
        assert w[0] == pytest.approx(math.tan(y) ** 2, abs=1e-10)
        assert w[1] == w[2] == 1.0
        tw = built.target.weights((y, 0.3))
        assert tw[1] == pytest.approx(math.sin(y) ** 2, abs=1e-10)
        assert built.target_curvature(y) == pytest.approx(1.0, abs=1e-9)

    def test_linear_angle_is_not_biharmonic(self):
        ys = np.linspace(0.3, 1.2, 181)
        prof = AlphaProfile(ys, ys.copy(), np.ones_like(ys),
                            np.zeros_like(ys))
        built = build_nonflat_target(ConstructionSpec(prof))
        rep = verify_construction(built.canonical, tol=1e-4, grid=(5, 5))
        assert not rep.passed
        assert rep.channel("r1").max_abs > 1e-2

    def test_branch_sign_in_map(self, solved_profile):
        plus = build_nonflat_target(ConstructionSpec(solved_profile))
        minus = build_nonflat_target(
            ConstructionSpec(solved_profile, branch_sign=-1)
        )
        assert "z + t(x)" in plus.map_note
        assert "z - t(x)" in minus.map_note
        # identical metrics either way
        p = (0.1, 0.5, 0.0)
        assert plus.canonical.domain_metric.weights(p) == pytest.approx(
            minus.canonical.domain_metric.weights(p)
        )

    def test_solved_profile_pipeline(self, solved_profile):
        built = build_nonflat_target(ConstructionSpec(solved_profile))
        rep = verify_construction(built.canonical, tol=1e-4, grid=(7, 7))
        assert rep.passed
        assert rep.classification == "proper biharmonic"
        assert rep.channel("ode_vs_channel_gap").max_abs <= 1e-4
        # transverse annihilation holds to round-off
        for c in rep.channels:
            if c.name.startswith("transverse"):
                assert c.max_abs < 1e-8

    def test_general_form_with_free_functions(self, solved_profile):
        phi = ScalarField.from_sympy(0.3 * sp.sin(CHART_SYMBOLS[0]), 1)
        w = ScalarField.from_sympy(0.2 * CHART_SYMBOLS[0], 1)
        built = build_nonflat_target(
            ConstructionSpec(solved_profile, phi=phi, w=w)
        )
        rep = verify_construction(built.general, tol=1e-4, grid=(5, 5))
        assert rep.passed
        # the horizontal arc integrates e^{phi}
        cs = ConstructionSpec(solved_profile, phi=phi)
        val = cs.horizontal_arc(1.0)
        exact = simpson_integral(lambda x: math.exp(0.3 * math.sin(x)),
                                 -1.0, 1.0, abs_tol=1e-12)
        assert val == pytest.approx(exact, abs=1e-9)

    def test_constant_fiber_collapse_rejected(self, solved_profile):
        with pytest.raises(ValueError):
            ConstructionSpec(solved_profile, F=ScalarField.constant(1.0, 1))

    def test_profile_outside_quadrant_rejected(self):
        ys = np.linspace(0.0, 1.0, 101)
        alpha = np.linspace(1.0, 2.0, 101)  # crosses pi/2
        prof = AlphaProfile(ys, alpha, np.ones_like(ys), np.zeros_like(ys))
        with pytest.raises(SingularProfile):
            build_nonflat_target(ConstructionSpec(prof))


class TestSerialization:
    def test_round_trip(self, solved_profile):
        text = profile_to_text(solved_profile)
        assert text.splitlines()[0] == "y alpha alpha1 alpha2"
        back = profile_from_text(text)
        assert np.array_equal(back.y_grid, solved_profile.y_grid)
        assert np.array_equal(back.alpha, solved_profile.alpha)
        assert np.array_equal(back.alpha1, solved_profile.alpha1)
        assert np.array_equal(back.alpha2, solved_profile.alpha2)

    def test_header_required(self):
        with pytest.raises(ValueError):
            profile_from_text("a b c\n1 2 3\n")


class TestQuadrature:
    def test_exponential(self):
        assert simpson_integral(math.exp, 0.0, 1.0) == pytest.approx(
            math.e - 1.0, abs=1e-10
        )

    def test_empty_interval(self):
        assert simpson_integral(math.exp, 0.5, 0.5) == 0.0
