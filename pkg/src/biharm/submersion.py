"""Riemannian submersions from product 3-charts onto surfaces.

A submersion is represented by its domain metric and the angle spec of an
adapted frame; everything else (integrability data, target curvature, the
biharmonicity residuals) is derived.  The residual system has two channels,

  r1 = -Lap k1 - 2 sum_i f_i e_i(k2) - k2 sum_i (e_i(f_i) - k_i f_i)
       + k1 (-K_N + sum_i f_i^2),
  r2 = -Lap k2 + 2 sum_i f_i e_i(k1) + k1 sum_i (e_i(f_i) - k_i f_i)
       + k2 (-K_N + sum_i f_i^2),

with i running over the horizontal legs, Lap the 3-chart frame Laplacian,
and K_N = e1(f2) - e2(f1) - f1^2 - f2^2 + 2 f3 sigma the target Gauss
curvature.  Both channels vanish exactly on biharmonic submersions; they
are reported separately because they degenerate differently (k2 = 0 kills
most of r2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import sympy as sp

from .errors import EmptyRange
from .frames import (
    AdaptedFrameSpec,
    adapted_frame,
    integrability_data,
)
from .geometry import (
    FrameField,
    ProductMetric3,
    SurfaceMetric,
    base_gauss_curvature,
    laplacian_field,
)
from .numkernel import (
    CHART_SYMBOLS,
    ChartBox,
    ScalarField,
    as_field,
    directional_field,
    fexp,
    sample_grid,
)
from .report import ResidualReport, build_report, max_over_points

Z_SPREAD_TOL = 1e-10  # all fields must be constant along the flat factor


class SubmersionSpec:
    """A submersion case: domain metric + adapted-frame angles.

    ``family`` tags how the spec was built ("flat_target" for projections
    along the weighted axis, "nonflat_target" for warped constructions);
    ``aux_residual`` optionally carries an independently assembled residual
    field used for dual-route checks.
    """

    def __init__(self, domain_metric: ProductMetric3,
                 frame_spec: AdaptedFrameSpec, label,
                 target_metric: SurfaceMetric = None, family=None,
                 aux_residual: ScalarField = None, flags=()):
        self.domain_metric = domain_metric
        self.frame_spec = frame_spec
        self.label = label
        self.target_metric = target_metric
        self.family = family
        self.aux_residual = aux_residual
        self.flags = tuple(flags)
        self.extras = {}

    # -- derived structure --------------------------------------------------

    @cached_property
    def frame(self) -> FrameField:
        return adapted_frame(self.frame_spec, self.domain_metric)

    @cached_property
    def data(self):
        return integrability_data(self.frame_spec, self.domain_metric)

    def _edir(self, leg):
        return lambda fld: directional_field(self.frame.components[leg], fld)

    @cached_property
    def target_curvature_field(self) -> ScalarField:
        d = self.data
        e1, e2 = self._edir(0), self._edir(1)
        return (e1(d.f2) - e2(d.f1) - d.f1 * d.f1 - d.f2 * d.f2
                + 2.0 * (d.f3 * d.sigma))

    @cached_property
    def residual_fields(self):
        d = self.data
        e1, e2 = self._edir(0), self._edir(1)
        lap1 = laplacian_field(self.frame, d.kappa1)
        lap2 = laplacian_field(self.frame, d.kappa2)
        div = (e1(d.f1) - d.kappa1 * d.f1) + (e2(d.f2) - d.kappa2 * d.f2)
        fsq = d.f1 * d.f1 + d.f2 * d.f2
        coeff = -1.0 * self.target_curvature_field + fsq
        r1 = (-1.0 * lap1
              - 2.0 * (d.f1 * e1(d.kappa2) + d.f2 * e2(d.kappa2))
              - d.kappa2 * div + d.kappa1 * coeff)
        r2 = (-1.0 * lap2
              + 2.0 * (d.f1 * e1(d.kappa1) + d.f2 * e2(d.kappa1))
              + d.kappa1 * div + d.kappa2 * coeff)
        return r1, r2

    # -- sweeps ---------------------------------------------------------------

    def verification_points(self, grid=(21, 21)):
        """Base-axes sweep at the middle of the flat factor."""
        box = self.domain_metric.box
        base = ChartBox(box.lower[:2], box.upper[:2], box.guard)
        zmid = box.midpoint()[2]
        return [(t, s, zmid) for (t, s) in sample_grid(base, grid)]

    def z_probe_points(self):
        box = self.domain_metric.box
        t, s, _ = box.midpoint()
        lo, hi = box.lower[2] + box.guard, box.upper[2] - box.guard
        return [(t, s, z) for z in (lo, 0.5 * (lo + hi), hi)]

    def numeric_only(self) -> "SubmersionSpec":
        spec = SubmersionSpec(
            self.domain_metric.numeric_only(),
            self.frame_spec.numeric_only(),
            self.label,
            target_metric=(self.target_metric.numeric_only()
                           if self.target_metric else None),
            family=self.family,
            aux_residual=(self.aux_residual.numeric_only()
                          if self.aux_residual else None),
            flags=self.flags,
        )
        spec.extras = dict(self.extras)
        return spec


# -- module operations ---------------------------------------------------------


def base_curvature(data, frame: FrameField, point):
    """Target Gauss curvature e1(f2) - e2(f1) - f1^2 - f2^2 + 2 f3 sigma."""
    e1 = directional_field(frame.components[0], data.f2)
    e2 = directional_field(frame.components[1], data.f1)
    return (e1(point) - e2(point)
            - data.f1(point) ** 2 - data.f2(point) ** 2
            + 2.0 * data.f3(point) * data.sigma(point))


def biharmonic_residuals(spec: SubmersionSpec, point):
    """The two residual channels at a point; (0, 0) iff biharmonic there."""
    r1, r2 = spec.residual_fields
    return r1(point), r2(point)


@dataclass(frozen=True)
class HarmonicityResult:
    harmonic: bool
    report: object


def harmonicity_test(spec: SubmersionSpec, points, tol=1e-6):
    """Harmonic iff both fiber curvatures k1, k2 vanish on the points.

    Harmonic submersions have totally geodesic fibers; for those the test
    additionally asserts an integrable horizontal distribution (sigma = 0)
    and reports the agreement K_N = 3 sigma^2 + cos^2(alpha) K_base.
    """
    d = spec.data
    points = list(points)
    ch_k1 = max_over_points("kappa1", ((p, d.kappa1(p)) for p in points))
    ch_k2 = max_over_points("kappa2", ((p, d.kappa2(p)) for p in points))
    harmonic = max(ch_k1.max_abs, ch_k2.max_abs) <= tol
    channels = [ch_k1, ch_k2]
    notes = []
    extra_fail = False
    if harmonic:
        channels.append(
            max_over_points("sigma", ((p, d.sigma(p)) for p in points))
        )
        gaps = []
        for p in points:
            kn = spec.target_curvature_field(p)
            a33 = spec.frame.coeff_matrix(p)[2][2]
            kb = base_gauss_curvature(spec.domain_metric, p)
            gaps.append((p, kn - 3.0 * d.sigma(p) ** 2 - a33 * a33 * kb))
        channels.append(max_over_points("target_vs_base_curvature", gaps))
        extra_fail = any(c.max_abs > tol for c in channels[2:])
        notes.append("totally geodesic fibers")
        # harmonic: kappa channels are within tol by definition
        report = build_report(spec.label, tol, channels, len(points),
                              classification="harmonic", notes=notes,
                              extra_fail=extra_fail)
    else:
        # fiber curvature channels are measurements here, not failures
        report = ResidualReport(
            case_label=spec.label, points_checked=len(points),
            channels=tuple(channels), tolerance=tol, verdict="pass",
            classification="not harmonic",
            notes=(f"max |kappa1| = {ch_k1.max_abs:.3e}",
                   f"max |kappa2| = {ch_k2.max_abs:.3e}"),
        )
    return HarmonicityResult(harmonic, report)


def residual_report(spec: SubmersionSpec, tol=1e-6, grid=(21, 21)):
    """Grid sweep of the residual channels with verdict and classification.

    The sweep covers the base axes only; constancy along the flat factor is
    asserted (not assumed) through a three-point probe that must agree to
    1e-10.
    """
    points = spec.verification_points(grid)
    r1f, r2f = spec.residual_fields
    d = spec.data
    ch_r1 = max_over_points("r1", ((p, r1f(p)) for p in points))
    ch_r2 = max_over_points("r2", ((p, r2f(p)) for p in points))
    ch_f3 = max_over_points("f3_adapted", ((p, d.f3(p)) for p in points))
    channels = [ch_r1, ch_r2, ch_f3]

    probes = [r1f(p) for p in spec.z_probe_points()]
    z_spread = max(probes) - min(probes)
    notes = [f"flat-factor spread {z_spread:.3e}"]
    extra_fail = z_spread > Z_SPREAD_TOL

    k1_max = max(abs(d.kappa1(p)) for p in points)
    k2_max = max(abs(d.kappa2(p)) for p in points)
    residual_ok = max(ch_r1.max_abs, ch_r2.max_abs, ch_f3.max_abs) <= tol
    if not residual_ok:
        classification = "not biharmonic"
    elif max(k1_max, k2_max) <= tol:
        classification = "harmonic"
    elif k1_max > 100.0 * tol or k2_max > 100.0 * tol:
        classification = "proper biharmonic"
    else:
        classification = "indeterminate"
    notes.append(f"max |kappa1| = {k1_max:.6e}")

    if spec.aux_residual is not None:
        gaps = [(p, r1f(p) - spec.aux_residual(p)) for p in points]
        channels.append(max_over_points("dual_residual_gap", gaps))

    return build_report(spec.label, tol, channels, len(points),
                        classification=classification, notes=notes,
                        extra_fail=extra_fail)


# -- catalog -------------------------------------------------------------------

_T, _S = CHART_SYMBOLS[0], CHART_SYMBOLS[1]
_HALF_PI = 0.5 * math.pi


def projection_spec(exponent, box, label, flags=()) -> SubmersionSpec:
    """Flat-target projection along the weighted axis.

    The domain is e^{2p} dt^2 + ds^2 + dz^2 with p = ``exponent`` in
    (t, s) (a ScalarField or a sympy expression); the submersion forgets
    the weighted coordinate, so the adapted angles are
    theta = alpha = pi/2 and k1 = -p_s.  An independently assembled
    residual field (the base-surface Laplacian of the slope p_s, written
    out as p_sss + p_ss p_s + e^{-2p}(p_tts - p_ts p_t)) is attached for
    dual-route verification.
    """
    if isinstance(exponent, ScalarField):
        q = exponent
    else:
        q = ScalarField.from_sympy(exponent, 2)
    metric = ProductMetric3(q, box)
    spec3 = AdaptedFrameSpec(as_field(_HALF_PI, 3), as_field(_HALF_PI, 3))
    p = metric.conformal_exponent
    ps = p.diff(1)
    aux = (ps.diff(1).diff(1) + ps.diff(1) * ps
           + fexp(-2.0 * p) * (p.diff(0).diff(0).diff(1)
                               - p.diff(0).diff(1) * p.diff(0)))
    target_box = ChartBox(box.lower[1:], box.upper[1:], box.guard)
    target = SurfaceMetric(ScalarField.constant(0.0, 2), target_box)
    return SubmersionSpec(metric, spec3, label, target_metric=target,
                          family="flat_target", aux_residual=aux, flags=flags)


def hyperbolic_spec(c, box=None) -> SubmersionSpec:
    """Projection from the hyperbolic product chart e^{2 sqrt(-c) s}."""
    if c >= 0:
        raise ValueError("the hyperbolic family needs c < 0")
    if box is None:
        box = ChartBox((-1.0, -1.0, -0.5), (1.0, 1.0, 0.5), 0.05)
    return projection_spec(sp.sqrt(-sp.Float(c)) * _S, box,
                           f"hyperbolic({c:g})")


def catalog_examples():
    """The built-in proper biharmonic submersion catalog."""
    cosh4 = projection_spec(
        2 * sp.log(sp.cosh(_S)),
        ChartBox((-1.0, -1.5, -0.5), (1.0, 1.5, 0.5), 0.05),
        "cosh4",
    )
    y4 = projection_spec(
        2 * sp.log(_S),
        ChartBox((-1.0, 0.5, -0.5), (1.0, 3.0, 0.5), 0.05),
        "y4",
    )
    return [cosh4, y4, hyperbolic_spec(-1.0), hyperbolic_spec(-2.0)]


def catalog_suite(mode="analytic", tol=1e-6, grid=(21, 21)):
    """Residual reports for the catalog; every case must come out proper."""
    reports = []
    for spec in catalog_examples():
        if mode == "fd":
            spec = spec.numeric_only()
        rep = residual_report(spec, tol=tol, grid=grid)
        if rep.passed and rep.classification != "proper biharmonic":
            rep = build_report(rep.case_label, tol, rep.channels,
                               rep.points_checked,
                               classification=rep.classification,
                               notes=rep.notes + ("expected proper",),
                               extra_fail=True)
        reports.append(rep)
    return reports


# -- uniqueness scan ------------------------------------------------------------


@dataclass(frozen=True)
class ScanRoot:
    slope: float
    kind: str  # "proper" | "harmonic"


def _slope_residual(a, c):
    """Residual of the constant-slope family p = a*s on a base of curvature c.

    For constant k1 = -a the residual channel collapses to
    -(k1^3 + c k1) = a^3 + c a; its nonzero roots are the proper biharmonic
    slopes a = +-sqrt(-c), the root a = 0 is the harmonic projection.
    """
    k1 = -a
    return -(k1 ** 3 + c * k1)


def hyperbolic_uniqueness_scan(c, slope_range, samples=201):
    """Roots of the constant-slope residual over ``slope_range``.

    Sign changes are bracketed on a uniform sample and refined by bisection
    to 1e-8.  For c < 0 the roots found are {-sqrt(-c), 0, +sqrt(-c)}
    intersected with the range; for c > 0 only the harmonic root 0 exists.
    """
    lo, hi = slope_range
    if not (hi > lo):
        raise EmptyRange(f"slope range [{lo}, {hi}] is empty")
    if samples < 3:
        raise EmptyRange("need at least 3 samples")
    xs = [lo + (hi - lo) * k / (samples - 1) for k in range(samples)]
    vals = [_slope_residual(x, c) for x in xs]
    roots = []
    for x, v in zip(xs, vals):
        if v == 0.0:
            roots.append(x)
    for k in range(samples - 1):
        if vals[k] == 0.0 or vals[k + 1] == 0.0:
            continue
        if (vals[k] < 0) != (vals[k + 1] < 0):
            a, b = xs[k], xs[k + 1]
            fa = vals[k]
            for _ in range(200):
                m = 0.5 * (a + b)
                fm = _slope_residual(m, c)
                if fm == 0.0 or (b - a) < 1e-8:
                    break
                if (fa < 0) != (fm < 0):
                    b = m
                else:
                    a, fa = m, fm
            roots.append(0.5 * (a + b))
    out = []
    for r in sorted(roots):
        if out and abs(r - out[-1].slope) < 1e-7:
            continue
        kind = "harmonic" if abs(r) <= 1e-9 else "proper"
        out.append(ScanRoot(slope=r, kind=kind))
    return out


# -- randomized flat-flat family -------------------------------------------------


def flat_random_specs(rng, count):
    """Flat-domain, flat-target specs with nonvanishing fiber curvature.

    The base metric e^{2q} dt^2 + ds^2 is flat exactly when e^q is linear
    in s, so q = log(a(t) s + b(t)) with positive coefficient functions;
    combined with theta = alpha = pi/2 both the base and the target are
    flat while k1 = -q_s never vanishes.
    """
    specs = []
    box = ChartBox((-1.0, 0.2, -0.5), (1.0, 1.5, 0.5), 0.05)
    for k in range(count):
        a0 = rng.uniform(0.8, 1.2)
        a1 = rng.uniform(0.05, 0.2)
        b0 = rng.uniform(0.8, 1.2)
        b1 = rng.uniform(0.05, 0.2)
        w1, w2 = rng.uniform(0.5, 1.5), rng.uniform(0.5, 1.5)
        p1, p2 = rng.uniform(0, 2 * math.pi), rng.uniform(0, 2 * math.pi)
        a_t = a0 + a1 * sp.sin(w1 * _T + p1)
        b_t = b0 + b1 * sp.cos(w2 * _T + p2)
        specs.append(
            projection_spec(sp.log(a_t * _S + b_t), box, f"flatflat[{k:02d}]")
        )
    return specs
