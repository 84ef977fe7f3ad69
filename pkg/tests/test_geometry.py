import itertools
import math

import numpy as np
import pytest
import sympy as sp

from biharm.errors import NonOrthonormalFrame
from biharm.frames import AdaptedFrameSpec, adapted_frame, semi_geodesic_frame
from biharm.geometry import (
    FrameField,
    ProductMetric3,
    SurfaceMetric,
    base_gauss_curvature,
    christoffel_symbols,
    curvature_components,
    gauss_curvature_2d,
    laplace_beltrami,
    riemann_component,
)
from biharm.numkernel import CHART_SYMBOLS, ChartBox, ScalarField

T, S, Z = CHART_SYMBOLS


class TestChristoffel:
    def test_flat_all_zero(self, flat_metric3):
        g = christoffel_symbols(flat_metric3, (0.1, 0.2, 0.3))
        assert np.max(np.abs(g)) == 0.0

    def test_linear_exponent(self, hyperbolic_metric3):
        # q = s: the weighted block is G^s_tt = -e^{2s}, G^t_ts = 1
        p = (0.3, 0.5, 0.0)
        g = christoffel_symbols(hyperbolic_metric3, p)
        assert g[1, 0, 0] == pytest.approx(-math.exp(2 * 0.5), abs=1e-10)
        assert g[0, 0, 1] == pytest.approx(1.0, abs=1e-12)
        assert g[0, 1, 0] == pytest.approx(1.0, abs=1e-12)

    def test_symmetric_lower_indices(self, sphere_metric3):
        g = christoffel_symbols(sphere_metric3, (0.2, 0.9, 0.1))
        assert np.max(np.abs(g - np.transpose(g, (0, 2, 1)))) < 1e-12

    def test_sphere_surface_chart(self):
        # ds^2 + sin^2(s) dphi^2: G^s_{phi phi} = -sin(s)cos(s)
        metric = SurfaceMetric(
            ScalarField.from_sympy(sp.log(sp.sin(T)), 2),
            ChartBox((0.3, -1.0), (2.8, 1.0), 0.02),
            weighted_axis=1,
        )
        g = christoffel_symbols(metric, (math.pi / 4, 0.0))
        assert g[0, 1, 1] == pytest.approx(-0.5, abs=1e-12)


class TestGaussCurvature:
    @pytest.mark.parametrize("radius", [0.5, 1.0, 2.0])
    def test_sphere(self, radius):
        q = sp.log(radius * sp.sin(S / radius))
        metric = SurfaceMetric(
            ScalarField(dim=2, expr=q),
            ChartBox((-1.0, 0.15 * radius), (1.0, 2.9 * radius), 0.02),
        )
        for s in np.linspace(0.3 * radius, 2.6 * radius, 7):
            k = gauss_curvature_2d(metric, (0.0, float(s)))
            assert k == pytest.approx(1.0 / radius**2, abs=1e-9)

    def test_flat(self):
        metric = SurfaceMetric(
            ScalarField.constant(0.0, 2), ChartBox((-1, -1), (1, 1), 0.02)
        )
        assert gauss_curvature_2d(metric, (0.1, 0.7)) == 0.0

    def test_hyperbolic_constant_slope(self):
        metric = SurfaceMetric(
            ScalarField(dim=2, expr=S), ChartBox((-1, -1), (1, 1), 0.02)
        )
        assert gauss_curvature_2d(metric, (0.4, -0.3)) == pytest.approx(-1.0)

    def test_base_factor_matches_surface(self, sphere_metric3):
        p3 = (0.2, 1.1, 0.4)
        k3 = base_gauss_curvature(sphere_metric3, p3)
        k2 = gauss_curvature_2d(sphere_metric3.base_surface(), p3[:2])
        assert k3 == pytest.approx(k2, abs=1e-12)


class TestRiemann:
    def test_flat_vanishes(self, flat_metric3):
        frame = semi_geodesic_frame(flat_metric3)
        p = (0.3, -0.2, 0.5)
        for idx in itertools.product(range(3), repeat=4):
            assert riemann_component(flat_metric3, p, frame, idx) == pytest.approx(
                0.0, abs=1e-12
            )

    def test_sphere_sectional(self, sphere_metric3):
        frame = semi_geodesic_frame(sphere_metric3)
        p = (0.4, 1.2, 0.0)
        val = riemann_component(sphere_metric3, p, frame, (0, 1, 1, 0))
        assert val == pytest.approx(1.0, abs=1e-10)
        assert val == pytest.approx(base_gauss_curvature(sphere_metric3, p), abs=1e-10)

    def test_matches_gauss_on_random_exponents(self):
        rng = np.random.default_rng(4)
        for _ in range(5):
            a, b, c = rng.uniform(0.2, 1.0, size=3)
            q = a * S + b * sp.sin(c * T + S)
            box = ChartBox((-1.0, -1.0, -0.5), (1.0, 1.0, 0.5), 0.05)
            metric = ProductMetric3(ScalarField(dim=2, expr=q), box)
            frame = semi_geodesic_frame(metric)
            p = tuple(rng.uniform(-0.8, 0.8, size=3))
            lhs = riemann_component(metric, p, frame, (0, 1, 1, 0))
            assert lhs == pytest.approx(base_gauss_curvature(metric, p), abs=1e-6)

    def test_first_bianchi(self):
        rng = np.random.default_rng(5)
        q = 0.7 * S + 0.3 * sp.sin(T + 0.5 * S)
        box = ChartBox((-1.0, -1.0, -0.5), (1.0, 1.0, 0.5), 0.05)
        metric = ProductMetric3(ScalarField(dim=2, expr=q), box)
        frame = semi_geodesic_frame(metric)
        for _ in range(3):
            p = tuple(rng.uniform(-0.8, 0.8, size=3))
            comp = curvature_components(metric, frame, p)
            for i, j, k, l in itertools.product(range(3), repeat=4):
                cyc = comp[(i, j, k, l)] + comp[(j, k, i, l)] + comp[(k, i, j, l)]
                assert abs(cyc) < 1e-6

    def test_symmetries(self, sphere_metric3):
        frame = semi_geodesic_frame(sphere_metric3)
        comp = curvature_components(sphere_metric3, frame, (0.1, 0.9, 0.2))
        assert comp.max_symmetry_defect() < 1e-8

    def test_adapted_frame_cross_check(self):
        # warped family: the (1,2)-plane component must match both the
        # integrability-data expression and cos^2(alpha) * K_base
        from biharm.frames import integrability_data
        from biharm.numkernel import directional_field

        q = sp.log(sp.tan(S))
        box = ChartBox((-1.0, 0.4, -0.5), (1.0, 1.1, 0.5), 0.05)
        metric = ProductMetric3(ScalarField(dim=2, expr=q), box)
        spec = AdaptedFrameSpec(math.pi / 2, ScalarField(dim=3, expr=S))
        frame = adapted_frame(spec, metric)
        data = integrability_data(spec, metric)
        p = (0.2, 0.8, 0.0)
        # printed index pattern (1,2,1,2) means <R(e1,e2)e2, e1>
        lhs = riemann_component(metric, p, frame, (0, 1, 1, 0))
        e1f2 = directional_field(frame.components[0], data.f2)(p)
        e2f1 = directional_field(frame.components[1], data.f1)(p)
        mid = (e1f2 + e2f1 - data.f1(p) ** 2 - data.f2(p) ** 2
               + 2 * data.f3(p) * data.sigma(p) - 3 * data.sigma(p) ** 2)
        a33 = frame.coeff_matrix(p)[2][2]
        rhs = a33**2 * base_gauss_curvature(metric, p)
        assert lhs == pytest.approx(mid, abs=1e-9)
        assert mid == pytest.approx(rhs, abs=1e-9)

    def test_rejects_non_orthonormal(self, flat_metric3):
        one = ScalarField.constant(1.0, 3)
        zero = ScalarField.constant(0.0, 3)
        bad = FrameField(
            ((one, one, zero), (zero, one, zero), (zero, zero, one)),
            flat_metric3,
        )
        with pytest.raises(NonOrthonormalFrame):
            riemann_component(flat_metric3, (0.0, 0.0, 0.0), bad, (0, 1, 1, 0))


class TestLaplacian:
    def test_flat_square(self, flat_metric3):
        frame = semi_geodesic_frame(flat_metric3)
        f = ScalarField.from_expr("s**2", ("t", "s", "z"))
        assert laplace_beltrami(frame, f, (0.1, 0.3, -0.2)) == pytest.approx(2.0)

    def test_constant_field_everywhere_zero(self, hyperbolic_metric3):
        # the operator annihilates constants on any chart; the cubic value
        # a^3 + c*a of the constant-slope reduction lives in the scan, not
        # here (see submersion.hyperbolic_uniqueness_scan)
        frame = semi_geodesic_frame(hyperbolic_metric3)
        f = ScalarField.constant(0.7, 3)
        assert laplace_beltrami(frame, f, (0.2, 0.1, 0.0)) == pytest.approx(
            0.0, abs=1e-12
        )

    def test_projection_slope_is_base_harmonic(self):
        # p = 2 log(cosh y): the base Laplacian of p_y vanishes identically
        metric2 = SurfaceMetric(
            ScalarField(dim=2, expr=2 * sp.log(sp.cosh(S))),
            ChartBox((-1.0, -1.5), (1.0, 1.5), 0.05),
        )
        frame = semi_geodesic_frame(metric2)
        slope = metric2.conformal_exponent.diff(1)
        for s in np.linspace(-1.2, 1.2, 7):
            val = laplace_beltrami(frame, slope, (0.2, float(s)))
            assert val == pytest.approx(0.0, abs=1e-10)

    def test_frame_independence(self, sphere_metric3):
        f = ScalarField.from_expr("sin(s)*t + s**2", ("t", "s", "z"))
        frame_a = semi_geodesic_frame(sphere_metric3)
        frame_b = adapted_frame(
            AdaptedFrameSpec(0.7, 0.4), sphere_metric3
        )
        p = (0.3, 1.0, 0.1)
        va = laplace_beltrami(frame_a, f, p)
        vb = laplace_beltrami(frame_b, f, p)
        assert va == pytest.approx(vb, abs=1e-6)
