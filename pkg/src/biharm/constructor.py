"""Construction of biharmonic submersions from the fiber-angle ODE.

The warped construction is driven by the angle alpha(y) between the fibers
and the flat factor, which must solve the third-order ODE

    a''' sin(a) cos^2(a) + cos(a)(sin^2(a)+3) a' a''
        + sin(a)(2 cos^2(a)+3) a'^3 = 0.

Substituting u(a) = a''/a'^2 (so a' a'' = u a'^3, a''' = (u' + 2u^2) a'^3)
reduces it to the Riccati equation

    u'(a) = -2u^2 - (sin^2(a)+3)/(sin(a)cos(a)) u - (2cos^2(a)+3)/cos^2(a),

used here as the independent cross-check of the y-integration.  A solved
profile feeds two builders: the flat-target twisted projection (domain
e^{2p(x,y)} dx^2 + dy^2 + dz^2, target flat) and the non-flat warped pair

    domain tan^2(a(y)) dt^2 + dy^2 + dz^2,
    target dy^2 + sin^2(a(y)) dpsi^2,

whose target Gauss curvature is -(sin a)''/sin a.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyRange,
    ImmediateSingularity,
    OutOfProfile,
    SingularCoefficient,
    SingularProfile,
)
from .geometry import ProductMetric3, SurfaceMetric
from .frames import AdaptedFrameSpec
from .numkernel import (
    CHART_SYMBOLS,
    ChartBox,
    ScalarField,
    as_field,
    directional_field,
    flog,
    fsin,
    ftan,
    lift,
    sample_grid,
)
from .report import build_report, max_over_points
from .submersion import SubmersionSpec, projection_spec, residual_report

EPS_SING = 1e-3  # margin on |sin(a) cos(a)| away from the ODE singularities
MIN_SLOPE = 1e-6  # |a'| below this is the degenerate constant-angle branch


def riccati_rhs(alpha, u):
    """Right side of the Riccati equation for u(alpha) = a''/a'^2."""
    s, c = math.sin(alpha), math.cos(alpha)
    if abs(s * c) < EPS_SING:
        raise SingularCoefficient(
            f"sin*cos = {s * c:.3e} inside the margin {EPS_SING:g} "
            f"at alpha = {alpha:.6g}"
        )
    return -2.0 * u * u - (s * s + 3.0) / (s * c) * u \
        - (2.0 * c * c + 3.0) / (c * c)


def _third_derivative(alpha, a1, a2):
    """a''' from the third-order form, solved for the leading term."""
    s, c = math.sin(alpha), math.cos(alpha)
    lead = s * c * c
    if abs(lead) < EPS_SING ** 2:
        raise SingularCoefficient(
            f"sin*cos^2 = {lead:.3e} inside the margin at alpha = {alpha:.6g}"
        )
    return -(c * (s * s + 3.0) * a1 * a2 + s * (2.0 * c * c + 3.0) * a1 ** 3) \
        / lead


def ode_residual_terms(alpha, a1, a2, a3):
    """The third-order expression exactly as written (zero on solutions)."""
    s, c = math.sin(alpha), math.cos(alpha)
    return (a3 * s * c * c + c * (s * s + 3.0) * a1 * a2
            + s * (2.0 * c * c + 3.0) * a1 ** 3)


class _CubicHermite:
    """Piecewise-cubic interpolant matching values and first derivatives."""

    def __init__(self, xs, ys, ds):
        self.xs = np.asarray(xs, dtype=float)
        self.ys = np.asarray(ys, dtype=float)
        self.ds = np.asarray(ds, dtype=float)
        if not np.all(np.diff(self.xs) > 0):
            raise ValueError("nodes must be strictly increasing")

    def __call__(self, x):
        xs = self.xs
        if x < xs[0] - 1e-12 or x > xs[-1] + 1e-12:
            raise OutOfProfile(
                f"{x:.6g} outside the profile span [{xs[0]:.6g}, {xs[-1]:.6g}]"
            )
        i = int(np.clip(np.searchsorted(xs, x) - 1, 0, len(xs) - 2))
        h = xs[i + 1] - xs[i]
        t = (x - xs[i]) / h
        t2, t3 = t * t, t * t * t
        return ((2 * t3 - 3 * t2 + 1) * self.ys[i]
                + (t3 - 2 * t2 + t) * h * self.ds[i]
                + (-2 * t3 + 3 * t2) * self.ys[i + 1]
                + (t3 - t2) * h * self.ds[i + 1])


@dataclass(frozen=True, eq=False)
class AlphaProfile:
    """Sampled solution of the fiber-angle ODE with its derivatives.

    Nodes carry (alpha, alpha', alpha''); interpolation between nodes is
    cubic Hermite.  ``truncated`` flags an integration stopped early by a
    singularity margin; ``step_error`` is the worst per-step Richardson
    estimate from step halving.
    """

    y_grid: np.ndarray
    alpha: np.ndarray
    alpha1: np.ndarray
    alpha2: np.ndarray
    truncated: bool = False
    truncate_reason: str = ""
    step_error: float = 0.0
    alpha3: np.ndarray = None

    @property
    def span(self):
        return float(self.y_grid[0]), float(self.y_grid[-1])

    @property
    def node_step(self):
        return float(self.y_grid[1] - self.y_grid[0])

    def _alpha3_nodes(self):
        """Third-derivative node values: the stored column when the profile
        came from an integration, otherwise central differences of the
        stored alpha'' (no appeal to the differential equation)."""
        if self.alpha3 is not None:
            return self.alpha3
        cached = self.__dict__.get("_alpha3_fd")
        if cached is None:
            cached = np.gradient(self.alpha2, self.y_grid)
            self.__dict__["_alpha3_fd"] = cached
        return cached

    def validate(self, eps_sing=EPS_SING, min_slope=MIN_SLOPE):
        sc = np.sin(self.alpha) * np.cos(self.alpha)
        if np.min(np.abs(sc)) < eps_sing:
            raise SingularProfile(
                f"min |sin*cos| = {np.min(np.abs(sc)):.3e} below {eps_sing:g}"
            )
        if np.min(np.abs(self.alpha1)) < min_slope:
            raise SingularProfile(
                f"min |alpha'| = {np.min(np.abs(self.alpha1)):.3e} "
                f"below {min_slope:g}"
            )
        if len(self.y_grid) < 5:
            raise SingularProfile("profile has fewer than 5 nodes")

    def _interp(self, which):
        key = f"_interp_{which}"
        cached = self.__dict__.get(key)
        if cached is None:
            if which == "alpha":
                cached = _CubicHermite(self.y_grid, self.alpha, self.alpha1)
            elif which == "alpha1":
                cached = _CubicHermite(self.y_grid, self.alpha1, self.alpha2)
            else:
                cached = _CubicHermite(self.y_grid, self.alpha2,
                                       self._alpha3_nodes())
            self.__dict__[key] = cached
        return cached

    def angle(self, y):
        return self._interp("alpha")(y)

    def slope(self, y):
        return self._interp("alpha1")(y)

    def curvature2(self, y):
        return self._interp("alpha2")(y)

    def field(self, dim=3, axis=1) -> ScalarField:
        """The angle as a chart field varying along one axis only."""
        a = self._interp("alpha")
        a1 = self._interp("alpha1")
        a2 = self._interp("alpha2")
        ys, a3s = self.y_grid, self._alpha3_nodes()

        def d3(point):
            return float(np.interp(point[axis], ys, a3s))

        zero = lambda p: 0.0
        partials = {
            ax: (zero, zero, zero) for ax in range(dim) if ax != axis
        }
        partials[axis] = (
            lambda p: a1(p[axis]),
            lambda p: a2(p[axis]),
            d3,
        )
        return ScalarField(fn=lambda p: a(p[axis]), dim=dim,
                           partials=partials, name="alpha-profile")


def _margins_ok(state, eps_sing, min_slope):
    alpha, a1, _ = state
    if not all(math.isfinite(v) for v in state):
        return False, "non-finite state"
    if abs(math.sin(alpha) * math.cos(alpha)) < eps_sing:
        return False, f"|sin*cos| margin {eps_sing:g} hit at alpha={alpha:.6g}"
    if abs(a1) < min_slope:
        return False, f"|alpha'| fell below {min_slope:g}"
    return True, ""


def _rk4_step(state, h):
    def rhs(y):
        return np.array([y[1], y[2], _third_derivative(y[0], y[1], y[2])])

    k1 = rhs(state)
    k2 = rhs(state + 0.5 * h * k1)
    k3 = rhs(state + 0.5 * h * k2)
    k4 = rhs(state + h * k3)
    return state + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_alpha(alpha0, alpha1_0, alpha2_0, y_span, step,
                    eps_sing=EPS_SING, min_slope=MIN_SLOPE) -> AlphaProfile:
    """Integrate the third-order angle ODE with classical 4th-order steps.

    Every step is taken twice (once at h, once as two h/2 steps) and the
    halved result is kept; the difference/15 gives the per-step error
    estimate.  Integration stops early, returning a truncated profile, when
    a singularity margin or the nonzero-slope requirement is violated.
    Initial data violating the margins raises ImmediateSingularity.
    """
    y0, y1 = y_span
    if not y1 > y0:
        raise EmptyRange(f"span [{y0}, {y1}] is empty")
    if step <= 0:
        raise ValueError("step must be positive")
    state = np.array([alpha0, alpha1_0, alpha2_0], dtype=float)
    ok, reason = _margins_ok(state, eps_sing, min_slope)
    if not ok:
        raise ImmediateSingularity(f"initial data rejected: {reason}")

    n = max(1, round((y1 - y0) / step))
    h = (y1 - y0) / n
    ys, rows = [y0], [state.copy()]
    truncated, reason, worst = False, "", 0.0
    for k in range(n):
        try:
            full = _rk4_step(state, h)
            half = _rk4_step(_rk4_step(state, 0.5 * h), 0.5 * h)
        except SingularCoefficient as err:
            truncated, reason = True, str(err)
            break
        worst = max(worst, float(np.max(np.abs(full - half))) / 15.0)
        state = half
        ok, why = _margins_ok(state, eps_sing, min_slope)
        if not ok:
            truncated, reason = True, why
            break
        ys.append(y0 + (k + 1) * h)
        rows.append(state.copy())
    rows = np.array(rows)
    # the third-derivative column is exact on solution trajectories
    alpha3 = np.array([
        _third_derivative(a, b, c) for a, b, c in rows
    ])
    return AlphaProfile(
        y_grid=np.array(ys), alpha=rows[:, 0], alpha1=rows[:, 1],
        alpha2=rows[:, 2], truncated=truncated, truncate_reason=reason,
        step_error=worst, alpha3=alpha3,
    )


def alpha_ode_residual(profile: AlphaProfile, y):
    """Third-order residual at y from the integrated columns alone.

    alpha''' is recomputed by a central difference of the stored alpha''
    values (node-step wide, linear interpolation off the nodes), so the
    check does not reuse the right side that drove the integration.
    """
    y0, y1 = profile.span
    d = profile.node_step
    if not (y0 + d <= y <= y1 - d):
        raise OutOfProfile(f"{y:.6g} is not interior to [{y0:.6g}, {y1:.6g}]")
    a2_lin = lambda x: float(np.interp(x, profile.y_grid, profile.alpha2))
    a3 = (a2_lin(y + d) - a2_lin(y - d)) / (2.0 * d)
    return ode_residual_terms(
        profile.angle(y),
        profile.slope(y),
        a2_lin(y),
        a3,
    )


def riccati_consistency(profile: AlphaProfile):
    """Worst deviation between u = a''/a'^2 and the Riccati flow in alpha.

    The Riccati equation is integrated independently (classical 4th order,
    node-to-node in the alpha variable) from the initial u and compared
    with the profile's own u at every node.
    """
    alphas = profile.alpha
    u = profile.alpha2[0] / profile.alpha1[0] ** 2
    worst = 0.0
    for k in range(len(alphas)):
        u_profile = profile.alpha2[k] / profile.alpha1[k] ** 2
        worst = max(worst, abs(u - u_profile))
        if k + 1 < len(alphas):
            da = alphas[k + 1] - alphas[k]
            k1 = riccati_rhs(alphas[k], u)
            k2 = riccati_rhs(alphas[k] + 0.5 * da, u + 0.5 * da * k1)
            k3 = riccati_rhs(alphas[k] + 0.5 * da, u + 0.5 * da * k2)
            k4 = riccati_rhs(alphas[k] + da, u + da * k3)
            u = u + (da / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return worst


# -- quadrature -----------------------------------------------------------------


def simpson_integral(f, a, b, abs_tol=1e-10, max_doublings=24):
    """Composite Simpson quadrature with interval doubling to ``abs_tol``."""
    if b == a:
        return 0.0

    def composite(n):
        xs = np.linspace(a, b, n + 1)
        ys = np.array([f(x) for x in xs])
        h = (b - a) / n
        return h / 3.0 * (ys[0] + ys[-1] + 4 * ys[1:-1:2].sum()
                          + 2 * ys[2:-2:2].sum())

    n = 8
    prev = composite(n)
    for _ in range(max_doublings):
        n *= 2
        cur = composite(n)
        if abs(cur - prev) <= abs_tol:
            return cur
        prev = cur
    return prev


# -- builders --------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ConstructionSpec:
    """Inputs of the warped construction: a solved angle profile plus the
    free functions of the general-coordinates form.

    phi(x) reshapes the horizontal coordinate, w(.) the target fiber
    coordinate and F (nonconstant) the fiber collapse; the defaults give
    the canonical warped pair directly.
    """

    profile: AlphaProfile
    phi: ScalarField = None
    w: ScalarField = None
    F: ScalarField = None
    branch_sign: int = 1
    x_box: ChartBox = field(default_factory=lambda: ChartBox((-1.0,), (1.0,)))
    u_box: ChartBox = field(default_factory=lambda: ChartBox((-1.0,), (1.0,)))

    def __post_init__(self):
        if self.phi is None:
            object.__setattr__(self, "phi", ScalarField.constant(0.0, 1))
        if self.w is None:
            object.__setattr__(self, "w", ScalarField.constant(0.0, 1))
        if self.F is None:
            object.__setattr__(self, "F", ScalarField.coordinate(0, 1))
        if self.branch_sign not in (1, -1):
            raise ValueError("branch sign must be +1 or -1")
        grid = sample_grid(self.u_box, (9,))
        slope = max(abs(self.F.partial(p, 0, 1)) for p in grid)
        if slope <= 1e-12:
            raise ValueError("the fiber collapse F must be nonconstant")

    def horizontal_arc(self, x):
        """The coordinate change t(x) = integral of e^{phi} from the left
        edge of the x box (composite Simpson, abs tol 1e-10)."""
        return simpson_integral(
            lambda xi: math.exp(self.phi((xi,))), self.x_box.lower[0], x
        )


@dataclass(frozen=True)
class NonflatConstruction:
    """Output of the warped builder: canonical and general-coordinates specs,
    the target surface, and a plain-text description of the map."""

    canonical: SubmersionSpec
    general: SubmersionSpec
    target: SurfaceMetric
    map_note: str
    profile: AlphaProfile

    def target_curvature(self, y):
        """-(sin a)''/sin a along the profile."""
        a = self.profile.angle(y)
        a1 = self.profile.slope(y)
        a2 = self.profile.curvature2(y)
        return -(math.cos(a) * a2 - math.sin(a) * a1 ** 2) / math.sin(a)


def build_flat_target(p, box=None, label="flat-target") -> SubmersionSpec:
    """Flat-target twisted projection for a free exponent p(x, y).

    Vanishing base slope p_y means the projection is harmonic; such specs
    are returned flagged rather than rejected.
    """
    if box is None:
        box = ChartBox((-1.0, 0.2, -0.5), (1.0, 1.5, 0.5), 0.05)
    spec = projection_spec(p, box, label)
    pts = spec.verification_points((5, 5))
    slope = max(
        abs(spec.domain_metric.conformal_exponent.partial(q, 1, 1))
        for q in pts
    )
    if slope <= 1e-12:
        spec.flags = spec.flags + ("harmonic: vanishing base slope",)
    return spec


def build_nonflat_target(cspec: ConstructionSpec,
                         label="warped") -> NonflatConstruction:
    """Warped construction from a solved angle profile.

    Emits the canonical warped pair (free functions integrated away by the
    coordinate change t = int e^{phi} dx, psi = int e^{w} dphi) and the
    general-coordinates form with exponent log(tan a(y)) + phi(x).  The
    profile must stay inside (0, pi/2) clear of the singularity margins.
    """
    prof = cspec.profile
    prof.validate()
    if np.min(prof.alpha) <= 0.0 or np.max(prof.alpha) >= 0.5 * math.pi:
        raise SingularProfile(
            "the builder needs an angle profile inside (0, pi/2)"
        )
    y0, y1 = prof.span
    pad = max(3.0 * prof.node_step, 0.02 * (y1 - y0))
    guard = 0.05 * (y1 - y0 - 2 * pad)

    def domain_box():
        return ChartBox((-1.0, y0 + pad, -0.5), (1.0, y1 - pad, 0.5), guard)

    alpha3 = prof.field(dim=3, axis=1)
    q_canonical = flog(ftan(alpha3))
    canonical_metric = ProductMetric3(q_canonical, domain_box())
    frame_spec = AdaptedFrameSpec(as_field(0.5 * math.pi, 3), alpha3)

    alpha_target = prof.field(dim=2, axis=0)
    lam = flog(fsin(alpha_target))
    target_box = ChartBox((y0 + pad, -1.0), (y1 - pad, 1.0), guard)
    target = SurfaceMetric(lam, target_box, weighted_axis=1)

    canonical = SubmersionSpec(
        canonical_metric, frame_spec, label + "-canonical",
        target_metric=target, family="nonflat_target",
    )
    canonical.extras = {"profile": prof}

    phi3 = lift(cspec.phi, 3, (0,))
    general_metric = ProductMetric3(q_canonical + phi3, domain_box())
    w2 = lift(cspec.w, 2, (1,))
    general_target = SurfaceMetric(lam + w2, target_box, weighted_axis=1)
    general = SubmersionSpec(
        general_metric, frame_spec, label + "-general",
        target_metric=general_target, family="nonflat_target",
    )
    general.extras = {"profile": prof}

    sign = "+" if cspec.branch_sign > 0 else "-"
    note = (f"(x, y, z) -> (y, F(z {sign} t(x))) with "
            f"t(x) = integral of exp(phi) and the fiber tangent at angle "
            f"alpha(y) to the flat factor")
    return NonflatConstruction(canonical, general, target, note, prof)


def verify_construction(spec: SubmersionSpec, tol=1e-4, grid=(21, 21)):
    """Residual sweep plus the structural side conditions of the family.

    Flat-target specs must agree with their independently assembled slope
    Laplacian channel; warped specs must additionally satisfy
    e1(alpha) = -sigma, transverse annihilation of all data, a base-slope
    product f2*k1*sigma bounded away from zero and a target curvature
    bounded away from zero, and their frame residual must match the
    third-order residual through the factor cos^3(alpha).
    """
    base = residual_report(spec, tol=tol, grid=grid)
    if spec.family != "nonflat_target":
        return base

    channels = list(base.channels)
    notes = list(base.notes)
    extra_fail = not base.passed
    d = spec.data
    frame = spec.frame
    alpha = spec.frame_spec.alpha
    pts = spec.verification_points(grid)

    e1_alpha = directional_field(frame.components[0], alpha)
    channels.append(max_over_points(
        "slope_plus_sigma", ((p, e1_alpha(p) + d.sigma(p)) for p in pts)
    ))
    for name, fld in (("f2", d.f2), ("kappa1", d.kappa1),
                      ("sigma", d.sigma), ("alpha", alpha)):
        for leg in (1, 2):
            der = directional_field(frame.components[leg], fld)
            channels.append(max_over_points(
                f"transverse_e{leg + 1}_{name}",
                ((p, der(p)) for p in pts),
            ))

    profile = getattr(spec, "extras", {}).get("profile")
    if profile is not None:
        r1f, _ = spec.residual_fields
        gaps = []
        for p in pts:
            ode = alpha_ode_residual(profile, p[1])
            ca = math.cos(profile.angle(p[1]))
            gaps.append((p, ode - ca ** 3 * r1f(p)))
        channels.append(max_over_points("ode_vs_channel_gap", gaps))

    product_min = min(
        abs(d.f2(p) * d.kappa1(p) * d.sigma(p)) for p in pts
    )
    kn_min = min(abs(spec.target_curvature_field(p)) for p in pts)
    notes.append(f"min |f2*kappa1*sigma| = {product_min:.3e}")
    notes.append(f"min |target curvature| = {kn_min:.3e}")
    if product_min < tol or kn_min < max(10.0 * tol, 1e-3):
        extra_fail = True

    return build_report(spec.label, tol, channels, len(pts),
                        classification=base.classification, notes=notes,
                        extra_fail=extra_fail)


# -- profile serialization --------------------------------------------------------


def profile_to_text(profile: AlphaProfile) -> str:
    """Columnar text form: header then one node per line, full precision."""
    lines = ["y alpha alpha1 alpha2"]
    for row in zip(profile.y_grid, profile.alpha, profile.alpha1,
                   profile.alpha2):
        lines.append(" ".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def profile_from_text(text) -> AlphaProfile:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if not lines or lines[0].split() != ["y", "alpha", "alpha1", "alpha2"]:
        raise ValueError("expected header 'y alpha alpha1 alpha2'")
    rows = np.array([[float(v) for v in ln.split()] for ln in lines[1:]])
    return AlphaProfile(y_grid=rows[:, 0], alpha=rows[:, 1],
                        alpha1=rows[:, 2], alpha2=rows[:, 3])
