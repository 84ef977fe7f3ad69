"""Adapted orthonormal frames on product 3-charts and their integrability data.

The semi-geodesic frame of a chart e^{2q(t,s)} dt^2 + ds^2 + dz^2 is
E1 = e^{-q} d_t, E2 = d_s, E3 = d_z.  An adapted frame is the rotation

    e1 = cos(theta) E1 + sin(theta) E2,
    e2 = -cos(alpha)(sin(theta) E1 - cos(theta) E2) + sin(alpha) E3,
    e3 =  sin(alpha)(sin(theta) E1 - cos(theta) E2) + cos(alpha) E3,

with e3 the unit vertical of a Riemannian submersion onto a surface and
alpha the angle between e3 and the flat factor.  Its integrability data
(f1, f2, f3, sigma, kappa1, kappa2) encode brackets and connection:

    f1 = 0,
    f2 = -fbar cos^2(a) - sin(a)cos(a) E3(theta),
    f3 = -E3(theta),
    sigma  = -fbar sin(a)cos(a) - sin^2(a) E3(theta),
    kappa1 = -fbar sin^2(a) + sin(a)cos(a) E3(theta),
    kappa2 = -e3(alpha),
    fbar   = -sin(theta) E1(theta) + cos(theta) E2(theta) + q_s sin(theta).

Not every smooth pair (theta, alpha) arises from a Riemannian submersion:
the angles must satisfy compatibility conditions (e.g. e1(alpha) = -sigma,
E3(theta) = 0, e1(theta) = q_s cos(theta)).  ``validate_frame`` checks the
full bracket/connection table and the curvature identities numerically and
therefore rejects incompatible specs; ``random_adapted_specs`` draws specs
from families that genuinely come from submersions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from types import SimpleNamespace

import sympy as sp

from .errors import NonOrthonormalFrame, ToleranceExceeded
from .geometry import (
    FrameField,
    ProductMetric3,
    base_gauss_curvature,
    riemann_component,
)
from .numkernel import (
    ChartBox,
    ScalarField,
    as_field,
    directional_field,
    fcos,
    fexp,
    fsin,
    opaque,
    sample_grid,
)
from .report import build_report, max_over_points


@dataclass(frozen=True, eq=False)
class AdaptedFrameSpec:
    """Angle pair (theta, alpha) defining an adapted frame.

    ``theta`` orients the horizontal leg e1 inside the base surface;
    ``alpha`` is the angle between the vertical leg e3 and the flat factor.
    Scalars are accepted and treated as constant fields.
    """

    theta: ScalarField
    alpha: ScalarField

    def __post_init__(self):
        object.__setattr__(self, "theta", as_field(self.theta, 3))
        object.__setattr__(self, "alpha", as_field(self.alpha, 3))

    def numeric_only(self):
        return AdaptedFrameSpec(self.theta.numeric_only(),
                                self.alpha.numeric_only())


@dataclass(frozen=True, eq=False)
class IntegrabilityData:
    """The six bracket/connection functions of an adapted frame, plus the
    rotated base slope fbar they are built from."""

    f1: ScalarField
    f2: ScalarField
    f3: ScalarField
    sigma: ScalarField
    kappa1: ScalarField
    kappa2: ScalarField
    fbar: ScalarField

    def replace(self, **kwargs):
        return replace(self, **kwargs)

    def as_dict(self):
        return {
            "f1": self.f1, "f2": self.f2, "f3": self.f3,
            "sigma": self.sigma, "kappa1": self.kappa1,
            "kappa2": self.kappa2,
        }


def semi_geodesic_frame(metric) -> FrameField:
    """Orthonormal coordinate-aligned frame of a diagonal conformal metric.

    Leg 0 is e^{-q} along the weighted axis; the remaining legs are unit
    coordinate fields in ascending axis order.
    """
    d = metric.dim
    q = metric.conformal_exponent
    einv = fexp(-1.0 * q)
    zero = ScalarField.constant(0.0, d)
    one = ScalarField.constant(1.0, d)
    axes = [metric.weighted_axis] + [
        a for a in range(d) if a != metric.weighted_axis
    ]
    rows = []
    for leg, axis in enumerate(axes):
        row = [zero] * d
        row[axis] = einv if leg == 0 else one
        rows.append(tuple(row))
    coeff = tuple(
        tuple(one if i == j else zero for j in range(d)) for i in range(d)
    )
    return FrameField(tuple(rows), metric, coeff)


@lru_cache(maxsize=None)
def adapted_frame(spec: AdaptedFrameSpec, metric: ProductMetric3) -> FrameField:
    """Adapted frame of the angle spec, with rotation coefficients attached."""
    if metric.weighted_axis != 0:
        raise ValueError("adapted frames require the weighted axis first")
    st, ct = fsin(spec.theta), fcos(spec.theta)
    sa, ca = fsin(spec.alpha), fcos(spec.alpha)
    zero = ScalarField.constant(0.0, 3)
    einv = fexp(-1.0 * metric.conformal_exponent)
    coeff = (
        (ct, st, zero),
        (-1.0 * (ca * st), ca * ct, sa),
        (sa * st, -1.0 * (sa * ct), ca),
    )
    rows = tuple(
        (a1 * einv, a2, a3) for (a1, a2, a3) in coeff
    )
    return FrameField(rows, metric, coeff)


@lru_cache(maxsize=None)
def integrability_data(spec: AdaptedFrameSpec,
                       metric: ProductMetric3) -> IntegrabilityData:
    """Closed-form integrability data of the adapted frame."""
    theta, alpha = spec.theta, spec.alpha
    st, ct = fsin(theta), fcos(theta)
    sa, ca = fsin(alpha), fcos(alpha)
    q = metric.conformal_exponent
    f = q.diff(1)
    einv = fexp(-1.0 * q)
    e1_theta = einv * theta.diff(0)
    e2_theta = theta.diff(1)
    e3_theta = theta.diff(2)
    fbar = -1.0 * (st * e1_theta) + ct * e2_theta + f * st
    frame = adapted_frame(spec, metric)
    e3_alpha = directional_field(frame.components[2], alpha)
    return IntegrabilityData(
        f1=ScalarField.constant(0.0, 3),
        f2=-1.0 * (fbar * (ca * ca)) - (sa * ca) * e3_theta,
        f3=-1.0 * e3_theta,
        sigma=-1.0 * (fbar * (sa * ca)) - (sa * sa) * e3_theta,
        kappa1=-1.0 * (fbar * (sa * sa)) + (sa * ca) * e3_theta,
        kappa2=-1.0 * e3_alpha,
        fbar=fbar,
    )


# -- identity suite -----------------------------------------------------------

# Curvature table rows: (label, (i,j,k,l) as printed, data expression,
# coefficient pattern (sign, a-row-1, a-row-2)) where the right side is
# sign * a_{r1}^3 * a_{r2}^3 * K with K the base Gauss curvature, and the
# printed 4-tuple means <R(e_i,e_j) e_l, e_k>.
_CURVATURE_ROWS = (
    ("curv_1312", (1, 3, 1, 2),
     lambda D, e: -1.0 * e[1](D.sigma) + 2.0 * (D.kappa1 * D.sigma),
     (-1.0, 2, 3)),
    ("curv_1313", (1, 3, 1, 3),
     lambda D, e: e[1](D.kappa1) + D.sigma * D.sigma
     - D.kappa1 * D.kappa1 + D.kappa2 * D.f1,
     (1.0, 2, 2)),
    ("curv_1323", (1, 3, 2, 3),
     lambda D, e: e[1](D.kappa2) - e[3](D.sigma)
     - D.kappa1 * D.f1 - D.kappa1 * D.kappa2,
     (-1.0, 1, 2)),
    ("curv_1212", (1, 2, 1, 2),
     lambda D, e: e[1](D.f2) + e[2](D.f1) - D.f1 * D.f1 - D.f2 * D.f2
     + 2.0 * (D.f3 * D.sigma) - 3.0 * (D.sigma * D.sigma),
     (1.0, 3, 3)),
    ("curv_1223", (1, 2, 2, 3),
     lambda D, e: -1.0 * e[2](D.sigma) + 2.0 * (D.kappa2 * D.sigma),
     (1.0, 1, 3)),
    ("curv_2313", (2, 3, 1, 3),
     lambda D, e: e[2](D.kappa1) + e[3](D.sigma)
     + D.kappa2 * D.f2 - D.kappa1 * D.kappa2,
     (-1.0, 1, 2)),
    ("curv_2323", (2, 3, 2, 3),
     lambda D, e: D.sigma * D.sigma + e[2](D.kappa2)
     - D.kappa1 * D.f2 - D.kappa2 * D.kappa2,
     (1.0, 1, 1)),
)


def _frame_identity_channels(frame: FrameField, data: IntegrabilityData):
    """Residual fields for the bracket and connection table.

    Returns (name, component fields) pairs; each identity is vector-valued
    with one residual field per chart component.
    """
    from .geometry import _christoffel_fields  # shared cache

    metric = frame.metric
    rows = tuple(tuple(opaque(c) for c in row) for row in frame.components)
    gamma = {key: opaque(g) for key, g in _christoffel_fields(metric).items()}
    zero = ScalarField.constant(0.0, 3)
    D = data

    def bracket(i, j):
        # [e_i, e_j]^l = e_i(e_j^l) - e_j(e_i^l)
        return [
            directional_field(rows[i - 1], rows[j - 1][l])
            - directional_field(rows[j - 1], rows[i - 1][l])
            for l in range(3)
        ]

    def nabla(i, j):
        # (grad_{e_i} e_j)^l = e_i(e_j^l) + G^l_{bm} e_i^b e_j^m
        out = []
        for l in range(3):
            term = directional_field(rows[i - 1], rows[j - 1][l])
            for (k, b, m), gam in gamma.items():
                if k == l:
                    term = term + gam * (rows[i - 1][b] * rows[j - 1][m])
            out.append(term)
        return out

    def combo(*pairs):
        # sum of coeff-field * frame-row combinations, componentwise
        out = [zero, zero, zero]
        for coeff, leg in pairs:
            for l in range(3):
                out[l] = out[l] + coeff * rows[leg - 1][l]
        return out

    minus_one = ScalarField.constant(-1.0, 3)
    two = ScalarField.constant(2.0, 3)
    table = {
        "bracket_12": (bracket(1, 2),
                       combo((D.f1, 1), (D.f2, 2), (minus_one * two * D.sigma, 3))),
        "bracket_13": (bracket(1, 3), combo((D.f3, 2), (D.kappa1, 3))),
        "bracket_23": (bracket(2, 3),
                       combo((minus_one * D.f3, 1), (D.kappa2, 3))),
        "conn_11": (nabla(1, 1), combo((minus_one * D.f1, 2))),
        "conn_12": (nabla(1, 2), combo((D.f1, 1), (minus_one * D.sigma, 3))),
        "conn_13": (nabla(1, 3), combo((D.sigma, 2),)),
        "conn_21": (nabla(2, 1), combo((minus_one * D.f2, 2), (D.sigma, 3))),
        "conn_22": (nabla(2, 2), combo((D.f2, 1),)),
        "conn_23": (nabla(2, 3), combo((minus_one * D.sigma, 1),)),
        "conn_31": (nabla(3, 1),
                    combo((minus_one * D.kappa1, 3), (D.sigma - D.f3, 2))),
        "conn_32": (nabla(3, 2),
                    combo((minus_one * (D.sigma - D.f3), 1),
                          (minus_one * D.kappa2, 3))),
        "conn_33": (nabla(3, 3), combo((D.kappa1, 1), (D.kappa2, 2))),
    }
    channels = []
    for name, (lhs, rhs) in table.items():
        channels.append((name, [lhs[l] - rhs[l] for l in range(3)]))
    return channels


def validate_frame(frame: FrameField, data: IntegrabilityData, points,
                   tol=1e-6):
    """Check the full bracket/connection table and the curvature identities.

    Every connection identity is verified componentwise in the chart; each
    curvature identity is verified along two independent routes (frame
    contraction of the chart curvature vs. the data expression, and the
    data expression vs. the rotation-coefficient multiple of the base Gauss
    curvature).  Returns the report on success and raises
    ToleranceExceeded naming the worst identity otherwise.
    """
    points = list(points)
    metric = frame.metric
    defect = max(frame.orthonormality_defect(p) for p in points)
    if defect > max(tol, 1e-8):
        raise NonOrthonormalFrame(f"orthonormality defect {defect:.3e}")

    # opaque views keep the exact derivative routes of the data while
    # sparing sympy from code-generating every combined identity
    wrapped = SimpleNamespace(
        **{k: opaque(v) for k, v in data.as_dict().items()}
    )
    rows = tuple(tuple(opaque(c) for c in row) for row in frame.components)

    channels = []
    for name, comps in _frame_identity_channels(frame, wrapped):
        channels.append(
            max_over_points(
                name,
                ((p, max(abs(c(p)) for c in comps)) for p in points),
            )
        )

    def e_op(leg):
        return lambda fld: directional_field(rows[leg - 1], fld)

    ops = {1: e_op(1), 2: e_op(2), 3: e_op(3)}
    for name, printed, data_expr, (sign, r1, r2) in _CURVATURE_ROWS:
        expr = data_expr(wrapped, ops)
        i, j, k, l = printed
        values = []
        for p in points:
            lhs = riemann_component(metric, p, frame, (i - 1, j - 1, l - 1, k - 1),
                                    check_tol=max(tol, 1e-6))
            mid = expr(p)
            a = frame.coeff_matrix(p)
            rhs = sign * a[r1 - 1][2] * a[r2 - 1][2] * base_gauss_curvature(metric, p)
            values.append((p, max(abs(lhs - mid), abs(mid - rhs))))
        channels.append(max_over_points(name, values))

    report = build_report("frame-identities", tol, channels, len(points))
    if not report.passed:
        worst = report.worst_channel
        raise ToleranceExceeded(
            f"identity {worst.name} violated by {worst.max_abs:.3e} "
            f"at {worst.at}",
            identity=worst.name, point=worst.at, report=report,
        )
    return report


# -- families of genuine submersion specs -------------------------------------


def _trig(rng, amp_lo, amp_hi, freq_lo=0.5, freq_hi=1.5):
    amp = rng.uniform(amp_lo, amp_hi)
    freq = rng.uniform(freq_lo, freq_hi)
    phase = rng.uniform(0.0, 2.0 * math.pi)
    return amp, freq, phase


_T, _S = sp.symbols("x0 x1", real=True)


def random_adapted_specs(rng, count, mode="analytic"):
    """Draw (label, metric, spec) triples from submersion-compatible families.

    Four families cycle: the twisted projection along the weighted axis
    (alpha = pi/2, free conformal exponent), the warped family (alpha a
    function of the geodesic coordinate, exponent log(tan(alpha)) + phi(t)),
    a polar rewrite of the warped family on a flat chart (both angles vary
    across the chart), and the vertical projection onto the base surface
    (alpha = 0).  Arbitrary angle pairs do not satisfy the adapted-frame
    equations; these do.
    """
    out = []
    half_pi = 0.5 * math.pi
    for k in range(count):
        fam = k % 4
        if fam in (0, 3):
            a = rng.uniform(0.6, 1.4)
            amp, freq, phase = _trig(rng, 0.1, 0.35)
            q = ScalarField.from_sympy(
                a * _S + amp * sp.sin(freq * _T + 0.7 * freq * _S + phase), 2
            )
            box = ChartBox((-1.0, 0.2, -0.5), (1.0, 1.5, 0.5), 0.05)
            metric = ProductMetric3(q, box)
            alpha = half_pi if fam == 0 else 0.0
            name = "twisted" if fam == 0 else "projection"
            spec = AdaptedFrameSpec(as_field(half_pi, 3), as_field(alpha, 3))
        elif fam == 1:
            mid = rng.uniform(0.55, 0.85)
            amp, freq, phase = _trig(rng, 0.05, 0.18)
            alpha_expr = mid + amp * sp.sin(freq * _S + phase)
            c0, c1, c2 = _trig(rng, 0.1, 0.3)
            q = ScalarField.from_sympy(
                sp.log(sp.tan(alpha_expr)) + c0 * sp.sin(c1 * _T + c2), 2
            )
            box = ChartBox((-1.0, 0.2, -0.5), (1.0, 1.5, 0.5), 0.05)
            metric = ProductMetric3(q, box)
            spec = AdaptedFrameSpec(
                as_field(half_pi, 3), ScalarField.from_sympy(alpha_expr, 3)
            )
            name = "warped"
        else:
            t0 = -0.8 - rng.uniform(0.0, 0.5)
            s0 = -0.8 - rng.uniform(0.0, 0.5)
            cc = rng.uniform(0.3, 1.0)
            r = sp.sqrt((_T - t0) ** 2 + (_S - s0) ** 2)
            theta = sp.atan2(_S - s0, _T - t0)
            box = ChartBox((0.0, 0.0, -0.5), (1.0, 1.0, 0.5), 0.05)
            metric = ProductMetric3(ScalarField.constant(0.0, 3), box)
            spec = AdaptedFrameSpec(
                ScalarField.from_sympy(theta, 3),
                ScalarField.from_sympy(sp.atan(cc * r), 3),
            )
            name = "polar"
        if mode == "fd":
            metric = metric.numeric_only()
            spec = spec.numeric_only()
        out.append((f"frame[{k:02d}]-{name}", metric, spec))
    return out


def frame_identity_suite(rng, count=20, mode="analytic", tol=1e-6,
                         grid=(5, 5)):
    """Reports for the identity suite over randomized compatible specs."""
    reports = []
    for label, metric, spec in random_adapted_specs(rng, count, mode):
        frame = adapted_frame(spec, metric)
        data = integrability_data(spec, metric)
        pts = _verification_points(metric.box, grid)
        try:
            rep = validate_frame(frame, data, pts, tol)
            rep = replace(rep, case_label=label)
        except ToleranceExceeded as err:
            rep = replace(err.report, case_label=label)
        reports.append(rep)
    return reports


def mutation_detected(metric, spec, points, tol=1e-6, factor=1.1):
    """Scale each not-identically-zero data channel and check detection.

    Returns {channel name: detected} for every channel whose magnitude on
    the points exceeds the noise floor (a multiplicative bump of an
    identically-zero function is invisible by construction).
    """
    frame = adapted_frame(spec, metric)
    data = integrability_data(spec, metric)
    results = {}
    for name, fld in data.as_dict().items():
        scale = max(abs(fld(p)) for p in points)
        if scale <= 100.0 * tol:
            continue
        mutated = data.replace(**{name: fld * factor})
        try:
            validate_frame(frame, mutated, points, tol)
            results[name] = False
        except ToleranceExceeded:
            results[name] = True
    return results


def _verification_points(box: ChartBox, grid):
    """2-D sweep of the base axes at the mid product-axis value."""
    base = ChartBox(box.lower[:2], box.upper[:2], box.guard)
    zmid = box.midpoint()[2]
    return [(t, s, zmid) for (t, s) in sample_grid(base, grid)]
