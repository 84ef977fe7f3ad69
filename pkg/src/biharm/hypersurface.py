"""Parametrized surfaces in product 3-charts: fundamental forms and
biharmonicity.

A surface is a map (u, v) -> chart point.  The normal is the metric cross
product of the coordinate tangents (orientation fixed by chart order and an
optional flip), the shape operator comes from the ambient covariant
derivative of the unit normal, and the biharmonicity residual of a surface
with mean curvature H, shape operator A and unit normal xi is

    scalar:   Lap H - H |A|^2 + H Ric(xi, xi),
    tangent:  2 A(grad H) + grad(H^2) - 2 H (Ric xi)^T,

which vanishes exactly for biharmonic immersions.  Lap and grad are taken
in the induced metric through an orthonormal tangent frame built by
Gram-Schmidt from the coordinate tangents (first leg along d_u).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import sympy as sp

from .errors import DegenerateImmersion, NotCMC, NotUmbilic
from .geometry import (
    ProductMetric3,
    base_gauss_curvature,
    riemann_chart,
)
from .geometry import _christoffel_fields
from .numkernel import (
    CHART_SYMBOLS,
    ChartBox,
    ScalarField,
    as_field,
    compose,
    directional_field,
    fexp,
    fsqrt,
    sample_grid,
)

_RANK_TOL = 1e-10


class SurfaceImmersion:
    """Codimension-one surface (u, v) -> (chart point) in a product 3-chart.

    ``components`` are three fields of (u, v); ``orientation`` (+1 or -1)
    flips the unit normal.
    """

    def __init__(self, components, ambient: ProductMetric3, uv_box: ChartBox,
                 orientation=1, label="surface"):
        self.components = tuple(as_field(c, 2) for c in components)
        if len(self.components) != 3:
            raise ValueError("an immersion needs three chart components")
        self.ambient = ambient
        if uv_box.dim != 2:
            raise ValueError("the parameter box must be 2-dimensional")
        self.uv_box = uv_box
        self.orientation = int(orientation)
        self.label = label

    def point(self, uv):
        return tuple(c(uv) for c in self.components)

    def flipped(self):
        return SurfaceImmersion(self.components, self.ambient, self.uv_box,
                                orientation=-self.orientation,
                                label=self.label + "-flipped")

    def numeric_only(self):
        return SurfaceImmersion(
            tuple(c.numeric_only() for c in self.components),
            self.ambient.numeric_only(), self.uv_box,
            orientation=self.orientation, label=self.label,
        )

    # -- derived fields on the (u, v) chart -----------------------------------

    @cached_property
    def tangent_fields(self):
        """tangent_fields[a][l] = d(component l)/d(parameter a)."""
        return tuple(
            tuple(c.diff(a) for c in self.components) for a in range(2)
        )

    @cached_property
    def _weight_fields(self):
        """Ambient diagonal metric coefficients pulled back to (u, v)."""
        q = compose(self.ambient.conformal_exponent, self.components)
        one = ScalarField.constant(1.0, 2)
        w = [one, one, one]
        w[self.ambient.weighted_axis] = fexp(2.0 * q)
        return tuple(w)

    @cached_property
    def induced_metric_fields(self):
        """(g11, g12, g22) of the induced metric."""
        T, w = self.tangent_fields, self._weight_fields

        def dot(a, b):
            return (w[0] * (T[a][0] * T[b][0]) + w[1] * (T[a][1] * T[b][1])
                    + w[2] * (T[a][2] * T[b][2]))

        return dot(0, 0), dot(0, 1), dot(1, 1)

    @cached_property
    def _det_field(self):
        g11, g12, g22 = self.induced_metric_fields
        return g11 * g22 - g12 * g12

    @cached_property
    def normal_fields(self):
        """Chart components of the unit normal (metric cross product)."""
        T, w = self.tangent_fields, self._weight_fields
        q = compose(self.ambient.conformal_exponent, self.components)
        sqrt_amb = fexp(q)  # sqrt of the ambient metric determinant
        tu, tv = T
        raw = (
            tu[1] * tv[2] - tu[2] * tv[1],
            tu[2] * tv[0] - tu[0] * tv[2],
            tu[0] * tv[1] - tu[1] * tv[0],
        )
        norm = fsqrt(self._det_field)
        sign = float(self.orientation)
        return tuple(
            sign * (sqrt_amb * raw[l]) / (w[l] * norm) for l in range(3)
        )

    @cached_property
    def second_form_fields(self):
        """h_ab = -<grad_{T_a} xi, T_b> on the coordinate tangents."""
        T, w = self.tangent_fields, self._weight_fields
        xi = self.normal_fields
        gamma = _christoffel_fields(self.ambient)
        gamma_uv = {key: compose(g, self.components) for key, g in gamma.items()}

        def cov_xi(a, l):
            term = xi[l].diff(a)
            for (k, b, m), g in gamma_uv.items():
                if k == l:
                    term = term + g * (T[a][b] * xi[m])
            return term

        def h(a, b):
            total = None
            for l in range(3):
                piece = w[l] * (cov_xi(a, l) * T[b][l])
                total = piece if total is None else total + piece
            return -1.0 * total

        h11, h12, h22 = h(0, 0), h(0, 1), h(1, 1)
        return h11, h12, h22

    @cached_property
    def frame_fields(self):
        """Orthonormal tangent frame on the (u, v) chart, first leg along d_u.

        Rows are (u, v)-components: eps1 = d_u / sqrt(g11),
        eps2 = (d_v - (g12/g11) d_u) normalized.
        """
        g11, g12, g22 = self.induced_metric_fields
        det = self._det_field
        zero = ScalarField.constant(0.0, 2)
        inv_s11 = ScalarField.constant(1.0, 2) / fsqrt(g11)
        eps1 = (inv_s11, zero)
        fac = fsqrt(g11 / det)
        eps2 = (-1.0 * (g12 / g11) * fac, fac)
        return eps1, eps2

    @cached_property
    def shape_frame_fields(self):
        """Shape operator entries in the orthonormal tangent frame."""
        h11, h12, h22 = self.second_form_fields
        eps1, eps2 = self.frame_fields

        def pair(ea, eb):
            return (h11 * (ea[0] * eb[0]) + h12 * (ea[0] * eb[1])
                    + h12 * (ea[1] * eb[0]) + h22 * (ea[1] * eb[1]))

        return pair(eps1, eps1), pair(eps1, eps2), pair(eps2, eps2)

    @cached_property
    def mean_curvature_field(self):
        a11, _, a22 = self.shape_frame_fields
        return 0.5 * (a11 + a22)

    @cached_property
    def _induced_christoffels(self):
        """Christoffel fields of the induced 2-metric, {(c,a,b): field}."""
        g11, g12, g22 = self.induced_metric_fields
        det = self._det_field
        g = {(0, 0): g11, (0, 1): g12, (1, 0): g12, (1, 1): g22}
        ginv = {
            (0, 0): g22 / det, (0, 1): -1.0 * g12 / det,
            (1, 0): -1.0 * g12 / det, (1, 1): g11 / det,
        }
        out = {}
        for c in range(2):
            for a in range(2):
                for b in range(a, 2):
                    total = None
                    for d in range(2):
                        piece = ginv[(c, d)] * (
                            g[(b, d)].diff(a) + g[(a, d)].diff(b)
                            - g[(a, b)].diff(d)
                        )
                        total = piece if total is None else total + piece
                    out[(c, a, b)] = 0.5 * total
                    out[(c, b, a)] = out[(c, a, b)]
        return out

    def induced_laplacian_field(self, field):
        """Laplace-Beltrami of a (u, v) field in the induced metric."""
        gamma = self._induced_christoffels
        total = None
        for eps in self.frame_fields:
            term = directional_field(eps, directional_field(eps, field))
            conn = []
            for c in range(2):
                piece = directional_field(eps, eps[c])
                for (k, a, b), g in gamma.items():
                    if k == c:
                        piece = piece + g * (eps[a] * eps[b])
                conn.append(piece)
            term = term - directional_field(tuple(conn), field)
            total = term if total is None else total + term
        return total

    @cached_property
    def _laplacian_H(self):
        return self.induced_laplacian_field(self.mean_curvature_field)

    def frame_vectors_ambient(self, uv):
        """Chart components of the pushed-forward tangent frame at uv."""
        T = np.array([[t(uv) for t in row] for row in self.tangent_fields])
        eps = np.array([[e(uv) for e in row] for row in self.frame_fields])
        return eps @ T


@dataclass(frozen=True)
class SurfaceGeometry:
    """First/second fundamental data of an immersion at one parameter point."""

    induced_metric: np.ndarray
    unit_normal: np.ndarray
    shape_operator: np.ndarray  # in the orthonormal tangent frame
    mean_curvature: float
    shape_norm_sq: float
    principal_curvatures: tuple
    tangent_frame: np.ndarray  # ambient components of the orthonormal legs


def surface_geometry(immersion: SurfaceImmersion, uv) -> SurfaceGeometry:
    """Fundamental forms, unit normal, shape operator and curvatures at uv."""
    g11, g12, g22 = (f(uv) for f in immersion.induced_metric_fields)
    gram = np.array([[g11, g12], [g12, g22]])
    if np.linalg.det(gram) <= _RANK_TOL:
        raise DegenerateImmersion(
            f"induced metric degenerate at {tuple(uv)}: det = "
            f"{np.linalg.det(gram):.3e}"
        )
    xi = np.array([f(uv) for f in immersion.normal_fields])
    a11, a12, a22 = (f(uv) for f in immersion.shape_frame_fields)
    shape = np.array([[a11, a12], [a12, a22]])
    mean = 0.5 * (a11 + a22)
    norm_sq = float(np.sum(shape * shape))
    eigs = tuple(sorted(np.linalg.eigvalsh(shape), key=abs, reverse=True))
    return SurfaceGeometry(
        induced_metric=gram,
        unit_normal=xi,
        shape_operator=shape,
        mean_curvature=mean,
        shape_norm_sq=norm_sq,
        principal_curvatures=eigs,
        tangent_frame=immersion.frame_vectors_ambient(uv),
    )


@dataclass(frozen=True)
class RicciSplit:
    """Ambient Ricci curvature split along a surface normal.

    ``normal``/``tangent`` come from contracting the chart curvature
    tensor; the ``*_closed`` values are the product-chart closed forms
    (1 - <xi,E3>^2) K and -<xi,E3> K (<e_a,E3>) for cross-checking.
    """

    normal: float
    tangent: np.ndarray
    normal_closed: float
    tangent_closed: np.ndarray


def ambient_ricci(immersion: SurfaceImmersion, uv) -> RicciSplit:
    point = immersion.point(uv)
    metric = immersion.ambient
    xi = np.array([f(uv) for f in immersion.normal_fields])
    legs = immersion.frame_vectors_ambient(uv)
    low = riemann_chart(metric, point)

    def riem(x, y, z, t):
        return float(np.einsum("a,b,c,d,abcd->", x, y, z, t, low))

    def ric(x, y):
        return (riem(legs[0], x, y, legs[0]) + riem(legs[1], x, y, legs[1])
                + riem(xi, x, y, xi))

    normal = ric(xi, xi)
    tangent = np.array([ric(xi, legs[0]), ric(xi, legs[1])])
    k_base = base_gauss_curvature(metric, point)
    a13, a23, a33 = legs[0][2], legs[1][2], xi[2]
    normal_closed = (1.0 - a33 * a33) * k_base
    tangent_closed = np.array([-a33 * a13 * k_base, -a33 * a23 * k_base])
    return RicciSplit(normal, tangent, normal_closed, tangent_closed)


def biharmonic_residuals_surface(immersion: SurfaceImmersion, uv):
    """Scalar and tangent residual channels of the surface system at uv."""
    H = immersion.mean_curvature_field
    h_val = H(uv)
    lap = immersion._laplacian_H(uv)
    geo = surface_geometry(immersion, uv)
    ric = ambient_ricci(immersion, uv)
    scalar = lap - h_val * geo.shape_norm_sq + h_val * ric.normal
    grad = np.array([
        directional_field(eps, H)(uv) for eps in immersion.frame_fields
    ])
    tangent = (2.0 * geo.shape_operator @ grad + 2.0 * h_val * grad
               - 2.0 * h_val * ric.tangent)
    return scalar, tangent


@dataclass(frozen=True)
class CmcClassification:
    kind: str  # "minimal" | "proper_biharmonic_vertical_cylinder" | "not_biharmonic"
    mean_curvature: float
    sphere_radius: float = math.nan
    circle_radius: float = math.nan
    details: dict = None


def cmc_classify(immersion: SurfaceImmersion, points, tol=1e-6):
    """Classify a constant-mean-curvature surface.

    Proper biharmonic surfaces here are exactly the vertical cylinders with
    <xi, E3> = 0 and |A|^2 = K_base = 4H^2 > 0; the implied radii of the
    ambient sphere factor and of the base circle are reported.  Raises
    NotCMC when H varies beyond ``tol`` (relative spread).
    """
    points = list(points)
    h_vals = [immersion.mean_curvature_field(p) for p in points]
    h_lo, h_hi = min(h_vals), max(h_vals)
    h_mean = sum(h_vals) / len(h_vals)
    scale = max(1.0, abs(h_mean))
    if (h_hi - h_lo) / scale > tol:
        raise NotCMC(
            f"mean curvature spread {(h_hi - h_lo):.3e} exceeds {tol:g}"
        )
    details = {"H": h_mean}
    if abs(h_mean) <= tol:
        return CmcClassification("minimal", h_mean, details=details)
    vertical = 0.0
    gaps = []
    for p, h in zip(points, h_vals):
        geo = surface_geometry(immersion, p)
        k_base = base_gauss_curvature(immersion.ambient, immersion.point(p))
        vertical = max(vertical, abs(geo.unit_normal[2]))
        gaps.append((abs(geo.shape_norm_sq - k_base),
                     abs(k_base - 4.0 * h * h)))
    details["max_vertical_defect"] = vertical
    details["max_shape_vs_base"] = max(g[0] for g in gaps)
    details["max_base_vs_4H2"] = max(g[1] for g in gaps)
    if (vertical <= tol and details["max_shape_vs_base"] <= tol
            and details["max_base_vs_4H2"] <= tol):
        h_abs = abs(h_mean)
        return CmcClassification(
            "proper_biharmonic_vertical_cylinder", h_mean,
            sphere_radius=1.0 / (2.0 * h_abs),
            circle_radius=1.0 / (2.0 * math.sqrt(2.0) * h_abs),
            details=details,
        )
    return CmcClassification("not_biharmonic", h_mean, details=details)


# -- Hopf cylinders -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HopfCylinderSpec:
    """Preimage of a unit-speed base curve under the vertical projection.

    ``geodesic_curvature`` is k_g(s) of the base curve, ``base_curvature``
    the Gauss curvature along it; the geodesic torsion vanishes for these
    cylinders and the mean curvature is k_g / 2.
    """

    geodesic_curvature: ScalarField
    base_curvature: ScalarField
    torsion: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "geodesic_curvature",
                           as_field(self.geodesic_curvature, 1))
        object.__setattr__(self, "base_curvature",
                           as_field(self.base_curvature, 1))
        if self.torsion != 0.0:
            raise ValueError("vertical Hopf cylinders have zero torsion")

    @property
    def mean_curvature_field(self):
        return 0.5 * self.geodesic_curvature

    def numeric_only(self):
        return HopfCylinderSpec(self.geodesic_curvature.numeric_only(),
                                self.base_curvature.numeric_only())


def hopf_cylinder_residuals(spec: HopfCylinderSpec, s):
    """Residual pair (k_g'' - k_g^3 + k_g K, 3 k_g' k_g) at arc length s."""
    kg = spec.geodesic_curvature
    p = (float(s),)
    k = kg(p)
    r1 = kg.partial(p, 0, 2) - k ** 3 + k * spec.base_curvature(p)
    r2 = 3.0 * kg.partial(p, 0, 1) * k
    return r1, r2


# -- umbilic test ---------------------------------------------------------------


@dataclass(frozen=True)
class UmbilicResult:
    minimal: bool
    consistent: bool
    max_mean_curvature: float
    max_scalar_residual: float


def umbilic_biharmonic_test(immersion: SurfaceImmersion, points, tol=1e-6):
    """For totally umbilical surfaces, check biharmonic <=> minimal.

    Raises NotUmbilic when the shape operator is not H * Id on some point.
    Otherwise the verdict is consistent when either H vanishes everywhere
    (minimal, hence biharmonic) or the scalar residual is nonzero somewhere
    (nonminimal umbilical surfaces are never biharmonic).
    """
    points = list(points)
    h_max, defect = 0.0, 0.0
    for p in points:
        geo = surface_geometry(immersion, p)
        dev = geo.shape_operator - geo.mean_curvature * np.eye(2)
        defect = max(defect, float(np.max(np.abs(dev))))
        h_max = max(h_max, abs(geo.mean_curvature))
    if defect > tol:
        raise NotUmbilic(f"umbilic defect {defect:.3e} exceeds {tol:g}")
    if h_max <= tol:
        return UmbilicResult(minimal=True, consistent=True,
                             max_mean_curvature=h_max,
                             max_scalar_residual=0.0)
    worst = max(
        abs(biharmonic_residuals_surface(immersion, p)[0]) for p in points
    )
    return UmbilicResult(minimal=False, consistent=worst > tol,
                         max_mean_curvature=h_max, max_scalar_residual=worst)


# -- builders --------------------------------------------------------------------

_U, _V = CHART_SYMBOLS[0], CHART_SYMBOLS[1]


def flat_ambient(extent=3.0, guard=0.05) -> ProductMetric3:
    box = ChartBox((-extent,) * 3, (extent,) * 3, guard)
    return ProductMetric3(ScalarField.constant(0.0, 3), box)


def slice_immersion(ambient: ProductMetric3, z0=0.0) -> SurfaceImmersion:
    """The horizontal slice {z = z0}, a totally geodesic copy of the base."""
    box = ambient.box
    uv_box = ChartBox(box.lower[:2], box.upper[:2], box.guard)
    comps = (
        ScalarField.coordinate(0, 2),
        ScalarField.coordinate(1, 2),
        ScalarField.constant(z0, 2),
    )
    return SurfaceImmersion(comps, ambient, uv_box, label=f"slice(z={z0:g})")


def graph_immersion(height_expr, extent=1.0) -> SurfaceImmersion:
    """Graph z = h(u, v) over the flat base plane."""
    ambient = flat_ambient(extent=max(3.0, 2 * extent))
    comps = (
        ScalarField.coordinate(0, 2),
        ScalarField.coordinate(1, 2),
        ScalarField.from_sympy(height_expr, 2),
    )
    uv_box = ChartBox((-extent, -extent), (extent, extent), 0.05)
    return SurfaceImmersion(comps, ambient, uv_box, label="graph")


def tilted_plane(a=0.3, b=0.5, extent=1.0) -> SurfaceImmersion:
    return graph_immersion(a * _U + b * _V, extent=extent)


def round_sphere(radius=1.0) -> SurfaceImmersion:
    """Round sphere in the flat chart (polar angle u, azimuth v)."""
    ambient = flat_ambient(extent=2.0 * radius + 1.0)
    r = sp.Float(radius)
    comps = (
        ScalarField.from_sympy(r * sp.sin(_U) * sp.cos(_V), 2),
        ScalarField.from_sympy(r * sp.sin(_U) * sp.sin(_V), 2),
        ScalarField.from_sympy(r * sp.cos(_U), 2),
    )
    uv_box = ChartBox((0.5, 0.3), (math.pi - 0.5, 2.5), 0.02)
    return SurfaceImmersion(comps, ambient, uv_box,
                            label=f"sphere(R={radius:g})")


def vertical_cylinder(kg, base_curvature, u_extent=1.0, v_extent=0.5):
    """Vertical cylinder over a constant-curvature circle of the base.

    The base surface of Gauss curvature K is presented in geodesic polar
    form e^{2q} dt^2 + ds^2 with q = log(R sin(s/R)) for K = 1/R^2 > 0,
    q = log(s) for K = 0 and q = log(R sinh(s/R)) for K = -1/R^2; circles
    {s = s0} have geodesic curvature cot(s0/R)/R, 1/s0 and coth(s0/R)/R
    respectively, and the cylinder is their preimage under the vertical
    projection, parametrized by arc length.
    """
    if kg <= 0:
        raise ValueError("the circle curvature must be positive")
    t, s = CHART_SYMBOLS[0], CHART_SYMBOLS[1]
    if base_curvature > 0:
        radius = 1.0 / math.sqrt(base_curvature)
        s0 = radius * math.atan(1.0 / (radius * kg))
        q = sp.log(radius * sp.sin(s / radius))
        s_lo, s_hi = 0.2 * s0, min(0.95 * math.pi * radius, 1.8 * s0)
    elif base_curvature == 0:
        s0 = 1.0 / kg
        q = sp.log(s)
        s_lo, s_hi = 0.3 * s0, 2.0 * s0
    else:
        radius = 1.0 / math.sqrt(-base_curvature)
        if kg * radius <= 1.0:
            raise ValueError(
                "no geodesic circle with this curvature exists in the "
                "hyperbolic base"
            )
        s0 = radius * math.atanh(1.0 / (radius * kg))
        q = sp.log(radius * sp.sinh(s / radius))
        s_lo, s_hi = 0.3 * s0, 2.0 * s0
    speed = float(sp.exp(q.subs(s, s0)))
    t_hi = u_extent / speed
    box = ChartBox((-0.1 - t_hi, s_lo, -v_extent - 0.1),
                   (t_hi + 0.1, s_hi, v_extent + 0.1), 0.0)
    ambient = ProductMetric3(ScalarField.from_sympy(q, 2), box)
    comps = (
        ScalarField.from_sympy(_U / speed, 2),
        ScalarField.constant(s0, 2),
        ScalarField.coordinate(1, 2),
    )
    uv_box = ChartBox((-u_extent, -v_extent), (u_extent, v_extent), 0.02)
    return SurfaceImmersion(
        comps, ambient, uv_box,
        label=f"cylinder(kg={kg:g}, K={base_curvature:g})",
    )


def surface_points(immersion: SurfaceImmersion, grid=(5, 5)):
    return sample_grid(immersion.uv_box, grid)
