"""Metrics on product charts: connection, curvature, frame Laplacian.

Every metric handled here is diagonal with exactly one axis carrying a
conformal weight e^{2q}: the 3-chart form e^{2q(t,s)} dt^2 + ds^2 + dz^2
(base surface on axes 0,1; flat factor on axis 2) and the 2-chart surface
forms e^{2q} dt^2 + ds^2 or dy^2 + e^{2l} dphi^2.

Curvature is computed through the chart Christoffel symbols and contracted
with frame components; the sign conventions are

    R(X,Y)Z = grad_X grad_Y Z - grad_Y grad_X Z - grad_[X,Y] Z,
    riemann_component(i,j,k,l) = <R(e_i,e_j) e_k, e_l>,

so that on a sphere chart <R(E1,E2)E2, E1> equals the Gauss curvature.
The Laplacian convention is Delta f = sum_i [e_i e_i f - (grad_{e_i} e_i) f].
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NonOrthonormalFrame
from .numkernel import (
    ChartBox,
    ScalarField,
    directional_field,
    fexp,
    lift,
)

PRODUCT_AXIS = 2  # the flat R factor of a 3-chart


@dataclass(frozen=True, eq=False)
class ProductMetric3:
    """Metric e^{2q} (weighted axis)^2 + unit^2 + unit^2 on a 3-chart.

    ``conformal_exponent`` is q; it must not depend on the product axis
    (axis 2), which carries the flat R factor.  A 2-dimensional exponent is
    lifted to the chart automatically.
    """

    conformal_exponent: ScalarField
    box: ChartBox
    weighted_axis: int = 0

    def __post_init__(self):
        q = self.conformal_exponent
        if q.dim == 2:
            object.__setattr__(self, "conformal_exponent", lift(q, 3, (0, 1)))
        elif q.dim != 3:
            raise ValueError("conformal exponent must live on a 2- or 3-chart")
        if self.box.dim != 3:
            raise ValueError("a 3-chart box is required")
        if self.weighted_axis not in (0, 1):
            raise ValueError("the weighted axis must belong to the base surface")
        self._check_z_independent()

    def _check_z_independent(self):
        q = self.conformal_exponent
        p0 = self.box.midpoint()
        lo, hi = self.box.lower[PRODUCT_AXIS], self.box.upper[PRODUCT_AXIS]
        for z in (lo + 0.25 * (hi - lo), lo + 0.75 * (hi - lo)):
            p = list(p0)
            p[PRODUCT_AXIS] = z
            if abs(q(tuple(p)) - q(p0)) > 1e-10:
                raise ValueError("conformal exponent depends on the product axis")

    @property
    def dim(self):
        return 3

    def weights(self, point):
        """Diagonal metric coefficients at a point."""
        w = np.ones(3)
        w[self.weighted_axis] = np.exp(2.0 * self.conformal_exponent(point))
        return w

    def base_surface(self) -> "SurfaceMetric":
        """The 2-dimensional base factor e^{2q} dt^2 + ds^2."""
        q = self.conformal_exponent

        def fn(p2):
            return q((p2[0], p2[1], self.box.midpoint()[2]))

        if q.expr is not None:
            q2 = ScalarField(dim=2, expr=q.expr, name=q.name)
        else:
            q2 = ScalarField(fn=fn, dim=2, name=q.name)
        box2 = ChartBox(self.box.lower[:2], self.box.upper[:2], self.box.guard)
        return SurfaceMetric(q2, box2, self.weighted_axis)

    def numeric_only(self) -> "ProductMetric3":
        return ProductMetric3(
            self.conformal_exponent.numeric_only(), self.box, self.weighted_axis
        )


@dataclass(frozen=True, eq=False)
class SurfaceMetric:
    """Diagonal 2-chart metric with e^{2q} on one axis and 1 on the other."""

    conformal_exponent: ScalarField
    box: ChartBox
    weighted_axis: int = 0

    def __post_init__(self):
        if self.conformal_exponent.dim != 2:
            raise ValueError("surface exponent must live on a 2-chart")
        if self.box.dim != 2:
            raise ValueError("a 2-chart box is required")
        if self.weighted_axis not in (0, 1):
            raise ValueError("weighted axis must be 0 or 1")

    @property
    def dim(self):
        return 2

    def weights(self, point):
        w = np.ones(2)
        w[self.weighted_axis] = np.exp(2.0 * self.conformal_exponent(point))
        return w

    def numeric_only(self) -> "SurfaceMetric":
        return SurfaceMetric(
            self.conformal_exponent.numeric_only(), self.box, self.weighted_axis
        )


@dataclass(frozen=True, eq=False)
class FrameField:
    """Orthonormal frame given by chart-component fields, one row per leg.

    ``coeff`` optionally stores the rotation coefficients of each leg
    against the semi-geodesic frame of the same metric (a special-orthogonal
    matrix of fields).
    """

    components: tuple
    metric: object
    coeff: tuple = None

    @property
    def dim(self):
        return len(self.components)

    def vector(self, i, point):
        return np.array([c(point) for c in self.components[i]])

    def matrix(self, point):
        return np.array(
            [[c(point) for c in row] for row in self.components]
        )

    def coeff_matrix(self, point):
        if self.coeff is None:
            return None
        return np.array([[c(point) for c in row] for row in self.coeff])

    def orthonormality_defect(self, point):
        w = self.metric.weights(point)
        m = self.matrix(point)
        gram = (m * w) @ m.T
        return float(np.max(np.abs(gram - np.eye(self.dim))))

    def numeric_only(self):
        strip = lambda rows: tuple(
            tuple(c.numeric_only() for c in row) for row in rows
        )
        return FrameField(
            strip(self.components),
            self.metric.numeric_only(),
            strip(self.coeff) if self.coeff else None,
        )


@dataclass(frozen=True)
class CurvatureComponents:
    """All frame components <R(e_i,e_j)e_k, e_l> at one point."""

    values: dict

    def __getitem__(self, idx):
        return self.values[idx]

    def max_symmetry_defect(self):
        """Worst violation of the antisymmetry and pair-swap symmetries."""
        worst = 0.0
        for (i, j, k, l), v in self.values.items():
            worst = max(
                worst,
                abs(v + self.values[(j, i, k, l)]),
                abs(v + self.values[(i, j, l, k)]),
                abs(v - self.values[(k, l, i, j)]),
            )
        return worst


# -- Christoffel symbols ------------------------------------------------------


@lru_cache(maxsize=None)
def _christoffel_fields(metric):
    """Nonzero Christoffel fields {(k,i,j): field} of a diagonal metric.

    For the weighted axis w: G^w_{wi} = G^w_{iw} = q_i and, for j != w,
    G^j_{ww} = -e^{2q} q_j.
    """
    q = metric.conformal_exponent
    w = metric.weighted_axis
    e2q = fexp(q + q)
    fields = {}
    for i in range(metric.dim):
        qi = q.diff(i)
        fields[(w, w, i)] = qi
        fields[(w, i, w)] = qi
        if i != w:
            fields[(i, w, w)] = -1.0 * (e2q * qi)
    return fields


def christoffel_symbols(metric, point):
    """Chart Christoffel symbols as an array G[k, i, j]."""
    d = metric.dim
    out = np.zeros((d, d, d))
    for (k, i, j), fld in _christoffel_fields(metric).items():
        out[k, i, j] = fld(point)
    return out


def riemann_chart(metric, point):
    """Lowered curvature R[i,j,k,l] = <R(d_i, d_j) d_k, d_l> at a point."""
    d = metric.dim
    fields = _christoffel_fields(metric)
    gamma = christoffel_symbols(metric, point)
    dgamma = np.zeros((d, d, d, d))  # dgamma[a, k, i, j] = d_a G^k_{ij}
    for (k, i, j), fld in fields.items():
        for a in range(d):
            dgamma[a, k, i, j] = fld.partial(point, a, 1)
    weights = metric.weights(point)
    up = np.zeros((d, d, d, d))  # up[l, i, j, k] -> R(d_i,d_j)d_k = up . d_l
    for l, i, j, k in itertools.product(range(d), repeat=4):
        val = dgamma[i, l, j, k] - dgamma[j, l, i, k]
        val += np.dot(gamma[l, i, :], gamma[:, j, k])
        val -= np.dot(gamma[l, j, :], gamma[:, i, k])
        up[l, i, j, k] = val
    low = np.zeros((d, d, d, d))
    for i, j, k, l in itertools.product(range(d), repeat=4):
        low[i, j, k, l] = weights[l] * up[l, i, j, k]
    return low


# -- curvature ---------------------------------------------------------------


def gauss_curvature_2d(metric: SurfaceMetric, point):
    """Gauss curvature -d_u f - f^2 with f the unit-axis slope of q."""
    u = 1 - metric.weighted_axis
    q = metric.conformal_exponent
    f = q.partial(point, u, 1)
    return -q.partial(point, u, 2) - f * f


def base_gauss_curvature(metric: ProductMetric3, point):
    """Gauss curvature of the base surface factor, evaluated on the 3-chart."""
    u = 1 - metric.weighted_axis
    q = metric.conformal_exponent
    f = q.partial(point, u, 1)
    return -q.partial(point, u, 2) - f * f


def riemann_component(metric, point, frame: FrameField, indices,
                      check_tol=1e-6):
    """<R(e_i, e_j) e_k, e_l> for the given frame legs.

    The frame must be orthonormal for the metric at the point (checked to
    ``check_tol``).
    """
    defect = frame.orthonormality_defect(point)
    if defect > check_tol:
        raise NonOrthonormalFrame(
            f"orthonormality defect {defect:.3e} at {tuple(point)}"
        )
    i, j, k, l = indices
    low = riemann_chart(metric, point)
    m = frame.matrix(point)
    return float(np.einsum("a,b,c,d,abcd->", m[i], m[j], m[k], m[l], low))


def curvature_components(metric, frame, point, check_tol=1e-6):
    defect = frame.orthonormality_defect(point)
    if defect > check_tol:
        raise NonOrthonormalFrame(
            f"orthonormality defect {defect:.3e} at {tuple(point)}"
        )
    low = riemann_chart(metric, point)
    m = frame.matrix(point)
    vals = {}
    d = frame.dim
    for idx in itertools.product(range(d), repeat=4):
        i, j, k, l = idx
        vals[idx] = float(
            np.einsum("a,b,c,d,abcd->", m[i], m[j], m[k], m[l], low)
        )
    return CurvatureComponents(vals)


# -- frame Laplacian ----------------------------------------------------------


@lru_cache(maxsize=None)
def _connection_vector_fields(frame):
    """Chart components of grad_{e_i} e_i for each leg, as fields."""
    metric = frame.metric
    fields = _christoffel_fields(metric)
    d = frame.dim
    out = []
    for i in range(d):
        row = frame.components[i]
        comps = []
        for l in range(d):
            term = directional_field(row, row[l])
            for (k, b, m), gam in fields.items():
                if k == l:
                    term = term + gam * (row[b] * row[m])
            comps.append(term)
        out.append(tuple(comps))
    return tuple(out)


@lru_cache(maxsize=None)
def laplacian_field(frame, field) -> ScalarField:
    """Delta f = sum_i [e_i(e_i f) - (grad_{e_i} e_i) f] as a field."""
    conn = _connection_vector_fields(frame)
    total = None
    for i in range(frame.dim):
        row = frame.components[i]
        term = directional_field(row, directional_field(row, field))
        term = term - directional_field(conn[i], field)
        total = term if total is None else total + term
    return total


def laplace_beltrami(frame, field, point):
    """Frame Laplacian of ``field`` at ``point``."""
    return laplacian_field(frame, field)(point)
