"""Scalar fields on rectangular chart domains: evaluation, differentiation, grids.

A :class:`ScalarField` is a real-valued function of 1 to 3 chart coordinates.
Derivatives are taken through the best route available, in order:

* a sympy expression attached to the field (exact, any order, mixed indices),
* explicit per-axis derivative callables supplied at construction,
* central finite differences on the bare evaluator.

Derived fields (sums, products, directional derivatives along a frame) keep
exact derivative information whenever their inputs carry it, so long
differentiation chains stay at round-off accuracy in analytic mode and
degrade gracefully to stencils in finite-difference mode.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import sympy as sp

from .errors import DegenerateBox, NonFiniteValue, PointOutsideGuard

# Canonical coordinate symbols; axis i of every chart maps to CHART_SYMBOLS[i].
CHART_SYMBOLS = sp.symbols("x0 x1 x2", real=True)

# Central-difference steps: H_FD for first/second differences, H_FD3 for the
# outer step of a nested third difference.  Chosen to balance truncation
# against round-off at double precision.
H_FD = 1e-4
H_FD3 = 1e-3

ChartPoint = tuple
"""A chart point is a plain tuple of 1-3 floats in axis order."""


@dataclass(frozen=True)
class ChartBox:
    """Axis-aligned chart domain with a guard margin.

    The guard is the strip near the boundary excluded from verification
    grids so that every finite-difference stencil evaluated on a grid point
    stays inside the box.  For stencil work the guard should be at least
    twice the difference step.
    """

    lower: tuple
    upper: tuple
    guard: float = 0.0

    def __post_init__(self):
        if len(self.lower) != len(self.upper):
            raise ValueError("lower/upper must have equal lengths")
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("need lower < upper on every axis")
        if self.guard < 0:
            raise ValueError("guard must be nonnegative")

    @property
    def dim(self):
        return len(self.lower)

    def contains(self, point, margin=0.0):
        return all(
            lo + margin <= x <= hi - margin
            for x, lo, hi in zip(point, self.lower, self.upper)
        )

    def require_stencil(self, point, reach):
        """Raise PointOutsideGuard unless a stencil of half-width ``reach``
        around ``point`` stays inside the box."""
        slack = 1e-12
        if not self.contains(point, margin=max(self.guard, reach) - slack):
            raise PointOutsideGuard(
                f"point {tuple(point)} closer than {max(self.guard, reach):g} "
                f"to the boundary of {self.lower}..{self.upper}"
            )

    def midpoint(self):
        return tuple(0.5 * (lo + hi) for lo, hi in zip(self.lower, self.upper))


def sample_grid(box: ChartBox, resolution) -> list:
    """Uniform grid on the guarded interior of ``box``, row-major order.

    ``resolution`` gives the per-axis point counts (>= 2 each).  The first
    axis varies slowest.  Raises DegenerateBox when the guarded interior is
    empty.
    """
    if isinstance(resolution, int):
        resolution = (resolution,) * box.dim
    if len(resolution) != box.dim:
        raise ValueError("resolution length must match box dimension")
    if any(n < 2 for n in resolution):
        raise ValueError("need at least 2 points per axis")
    axes = []
    for lo, hi, n in zip(box.lower, box.upper, resolution):
        a, b = lo + box.guard, hi - box.guard
        if a > b:
            raise DegenerateBox(f"guard {box.guard:g} empties axis [{lo}, {hi}]")
        axes.append([a + (b - a) * k / (n - 1) for k in range(n)])
    return [tuple(p) for p in itertools.product(*axes)]


def _as_float(value, point):
    v = float(value)
    if not math.isfinite(v):
        raise NonFiniteValue(f"field evaluated to {v!r} at {tuple(point)}")
    return v


class ScalarField:
    """Real-valued function of chart coordinates.

    Parameters
    ----------
    fn : callable point -> float
        Evaluator.  Required unless ``expr`` is given.
    dim : int
        Number of chart coordinates (1, 2 or 3).
    partials : dict, optional
        ``{axis: (d1, d2[, d3])}`` explicit derivative callables per axis.
    expr : sympy expression, optional
        Exact form in CHART_SYMBOLS[:dim]; wins over ``partials``.
    diff_hook : callable axis -> ScalarField, optional
        Derivative constructor for derived fields (product rules etc.).
    """

    # value caching keeps nested-stencil evaluation trees polynomial: the
    # same point tuples recur across stencil legs, channels and sweeps, and
    # every field here is a pure function of its point.
    _CACHE_LIMIT = 400_000

    def __init__(self, fn=None, dim=None, partials=None, expr=None,
                 diff_hook=None, name="", fd_depth=0):
        if expr is not None and dim is None:
            raise ValueError("dim is required")
        self.dim = int(dim)
        self.expr = expr
        self.partials = dict(partials) if partials else None
        self.name = name
        self._diff_hook = diff_hook
        self._fn = fn
        self._lambdified = None
        self._diff_cache = {}
        self._val_cache = {}
        # number of stacked finite-difference levels feeding this field;
        # a third stacked difference switches to the wider step H_FD3 to
        # keep round-off amplification in check.
        self.fd_depth = fd_depth

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_sympy(cls, expr, dim, name=""):
        return cls(dim=dim, expr=sp.sympify(expr), name=name)

    @classmethod
    def from_expr(cls, text, variables, name=""):
        """Parse ``text`` with the given variable names in axis order."""
        syms = sp.symbols(list(variables))
        if not isinstance(syms, (list, tuple)):
            syms = [syms]
        expr = sp.sympify(text)
        expr = expr.subs(
            {s: CHART_SYMBOLS[i] for i, s in enumerate(syms)}, simultaneous=True
        )
        return cls(dim=len(syms), expr=expr, name=name or str(text))

    @classmethod
    def constant(cls, value, dim, name=""):
        return cls(dim=dim, expr=sp.Float(value) if value else sp.Integer(0),
                   name=name)

    @classmethod
    def coordinate(cls, axis, dim):
        return cls(dim=dim, expr=CHART_SYMBOLS[axis], name=f"x{axis}")

    # -- evaluation ---------------------------------------------------------

    def __call__(self, point):
        key = tuple(point)
        cached = self._val_cache.get(key)
        if cached is not None:
            return cached
        if self._fn is not None:
            value = _as_float(self._fn(point), point)
        else:
            if self._lambdified is None:
                self._lambdified = sp.lambdify(
                    CHART_SYMBOLS[: self.dim], self.expr, modules=["math"]
                )
            value = _as_float(self._lambdified(*point[: self.dim]), point)
        if len(self._val_cache) >= self._CACHE_LIMIT:
            self._val_cache.clear()
        self._val_cache[key] = value
        return value

    # -- differentiation ----------------------------------------------------

    def diff(self, axis) -> "ScalarField":
        """Partial-derivative field along a chart axis."""
        if axis in self._diff_cache:
            return self._diff_cache[axis]
        if not 0 <= axis < self.dim:
            raise ValueError(f"axis {axis} out of range for dim {self.dim}")
        if self.expr is not None:
            out = ScalarField.from_sympy(
                sp.diff(self.expr, CHART_SYMBOLS[axis]), self.dim
            )
        elif self.partials and axis in self.partials:
            derivs = self.partials[axis]
            rest = tuple(derivs[1:])
            out = ScalarField(
                fn=derivs[0],
                dim=self.dim,
                partials={axis: rest} if rest else None,
            )
        elif self._diff_hook is not None:
            out = self._diff_hook(axis)
        else:
            out = _fd_first_difference(self, axis)
        self._diff_cache[axis] = out
        return out

    def partial(self, point, axis, order=1):
        """Pure partial of the given order (1..3) at a point."""
        if order not in (1, 2, 3):
            raise ValueError("order must be 1, 2 or 3")
        if self.expr is not None:
            fld = self
            for _ in range(order):
                fld = fld.diff(axis)
            return fld(point)
        if self.partials and axis in self.partials:
            derivs = self.partials[axis]
            if order <= len(derivs) and derivs[order - 1] is not None:
                return _as_float(derivs[order - 1](point), point)
            if order == 3:
                # nest a first difference of the analytic second derivative
                second = lambda q: self.partial(q, axis, 2)
                return _central1(second, point, axis, H_FD3)
            # fall through to stencils on whatever is available
        if self._diff_hook is not None:
            fld = self
            for k in range(order):
                step = H_FD3 if (order == 3 and k == 2) else None
                if step is None:
                    fld = fld.diff(axis)
                else:
                    return _central1(fld, point, axis, H_FD3)
            return fld(point)
        if order == 1:
            return _central1(self, point, axis, H_FD)
        if order == 2:
            return _central2(self, point, axis, H_FD)
        return _central1(lambda q: self.partial(q, axis, 2), point, axis, H_FD3)

    def stencil_reach(self, axis, order):
        """Half-width of the evaluation stencil partial() will use."""
        if self.expr is not None:
            return 0.0
        if self.partials and axis in self.partials:
            derivs = self.partials[axis]
            if order <= len(derivs) and derivs[order - 1] is not None:
                return 0.0
            return H_FD3
        if order <= 2:
            return order * H_FD
        return H_FD3 + 2 * H_FD

    # -- structure-stripping (finite-difference mode) ------------------------

    def numeric_only(self) -> "ScalarField":
        """Copy of this field with all analytic derivative routes removed."""
        return ScalarField(fn=self.__call__, dim=self.dim,
                           name=self.name and self.name + "[fd]")

    # -- algebra -------------------------------------------------------------

    def _binary(self, other, op):
        if isinstance(other, (int, float)):
            other = ScalarField.constant(float(other), self.dim)
        if not isinstance(other, ScalarField):
            return NotImplemented
        if other.dim != self.dim:
            raise ValueError("dimension mismatch in field algebra")
        if self.expr is not None and other.expr is not None:
            return ScalarField.from_sympy(
                _SYM_OPS[op](self.expr, other.expr), self.dim
            )
        f, g = self, other
        num = _NUM_OPS[op]
        return ScalarField(
            fn=lambda p: num(f(p), g(p)),
            dim=self.dim,
            diff_hook=lambda ax: _algebra_diff(f, g, op, ax),
            fd_depth=max(f.fd_depth, g.fd_depth),
        )

    def __add__(self, other):
        return self._binary(other, "+")

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, "-")

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        return self._binary(other, "*")

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binary(other, "/")

    def __neg__(self):
        return self * -1.0

    def __repr__(self):
        tag = self.name or (str(self.expr) if self.expr is not None else "fn")
        return f"ScalarField({tag}, dim={self.dim})"


_SYM_OPS = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: a / b,
}
_NUM_OPS = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: a / b,
}


def _algebra_diff(f, g, op, axis):
    """Derivative field of f .op. g by the chain rules of +,-,*,/."""
    if op == "+":
        return f.diff(axis) + g.diff(axis)
    if op == "-":
        return f.diff(axis) - g.diff(axis)
    if op == "*":
        return f.diff(axis) * g + f * g.diff(axis)
    return (f.diff(axis) * g - f * g.diff(axis)) / (g * g)


def _fd_first_difference(field, axis):
    depth = field.fd_depth + 1
    h = H_FD3 if depth >= 3 else H_FD

    def fn(point):
        return _central1(field, point, axis, h)

    return ScalarField(fn=fn, dim=field.dim, name=f"d{axis}[fd]",
                       fd_depth=depth)


def _central1(f, point, axis, h):
    p = list(point)
    p[axis] = point[axis] + h
    up = f(tuple(p))
    p[axis] = point[axis] - h
    dn = f(tuple(p))
    return (up - dn) / (2.0 * h)


def _central2(f, point, axis, h):
    p = list(point)
    p[axis] = point[axis] + h
    up = f(tuple(p))
    p[axis] = point[axis] - h
    dn = f(tuple(p))
    return (up - 2.0 * f(tuple(point)) + dn) / (h * h)


# -- module-level operations -------------------------------------------------


def partial_derivative(field, point, axis, order=1, box=None):
    """Partial derivative of ``field`` at ``point`` along ``axis``.

    Uses the analytic route when the field carries one, otherwise central
    differences (step H_FD for orders 1-2, an H_FD3 outer step for order 3).
    When ``box`` is given the point must keep guard+stencil clearance from
    the boundary.
    """
    if box is not None:
        box.require_stencil(point, field.stencil_reach(axis, order))
    return field.partial(point, axis, order)


def frame_derivative(vector_components, field, point):
    """Directional derivative sum_i c_i(p) * d(field)/dx_i at ``point``."""
    if len(vector_components) != field.dim:
        raise ValueError("component count must equal the chart dimension")
    total = 0.0
    for axis, comp in enumerate(vector_components):
        c = comp(point)
        if c != 0.0:
            total += c * field.partial(point, axis, 1)
    return total


def directional_field(vector_components, field) -> ScalarField:
    """Directional derivative as a composable ScalarField.

    Symbolic when every input is symbolic; otherwise a closure whose own
    derivatives follow the product rule, so nesting e_i(e_j(f)) keeps the
    analytic accuracy of the inputs.
    """
    comps = tuple(vector_components)
    if len(comps) != field.dim:
        raise ValueError("component count must equal the chart dimension")
    if field.expr is not None and all(c.expr is not None for c in comps):
        expr = sum(
            c.expr * sp.diff(field.expr, CHART_SYMBOLS[ax])
            for ax, c in enumerate(comps)
        )
        return ScalarField.from_sympy(expr, field.dim)

    def fn(point):
        return frame_derivative(comps, field, point)

    def hook(axis):
        terms = None
        for ax, c in enumerate(comps):
            term = c.diff(axis) * field.diff(ax) + c * field.diff(ax).diff(axis)
            terms = term if terms is None else terms + term
        return terms

    depth = max([field.diff(ax).fd_depth for ax in range(field.dim)]
                + [c.fd_depth for c in comps])
    return ScalarField(fn=fn, dim=field.dim, diff_hook=hook, fd_depth=depth)


def lift(field, dim, axes: Sequence[int]) -> ScalarField:
    """Reinterpret ``field`` on a higher-dimensional chart.

    ``axes[i]`` names the new-chart axis carrying the i-th original
    coordinate; the new field is constant along all other axes.
    """
    axes = tuple(axes)
    if len(axes) != field.dim:
        raise ValueError("axes must list one target axis per original axis")
    if field.expr is not None:
        sub = {
            CHART_SYMBOLS[i]: CHART_SYMBOLS[axes[i]] for i in range(field.dim)
        }
        return ScalarField(dim=dim, expr=field.expr.subs(sub, simultaneous=True),
                           name=field.name)

    def fn(point):
        return field(tuple(point[a] for a in axes))

    partials = None
    if field.partials:
        partials = {}
        for old_axis, derivs in field.partials.items():
            partials[axes[old_axis]] = tuple(
                (lambda p, d=d: d(tuple(p[a] for a in axes))) if d else None
                for d in derivs
            )
        # constant along the remaining axes
        zero = lambda p: 0.0
        for new_axis in range(dim):
            if new_axis not in axes:
                partials[new_axis] = (zero, zero, zero)

    return ScalarField(fn=fn, dim=dim, partials=partials, name=field.name)


def opaque(field) -> ScalarField:
    """View of a field that blocks symbolic propagation into combinations.

    Evaluation and derivatives delegate to the original field (so accuracy
    is unchanged), but algebra built on top produces plain closures.  Used
    where combining many exact fields symbolically would spend more time
    code-generating giant expressions than evaluating them.
    """
    return ScalarField(
        fn=field.__call__, dim=field.dim,
        diff_hook=lambda ax: opaque(field.diff(ax)),
        fd_depth=field.fd_depth, name=field.name,
    )


def compose(field, components) -> ScalarField:
    """Pull ``field`` back through a map given by component fields.

    ``components[l]`` is the l-th coordinate of the map, all living on a
    common chart; the result is field(comp_0(p), comp_1(p), ...).  Symbolic
    inputs give a symbolic pullback; otherwise a closure whose derivatives
    follow the chain rule d_a (F o phi) = sum_l (d_l F o phi) d_a phi_l.
    """
    comps = tuple(components)
    if len(comps) != field.dim:
        raise ValueError("need one component per field coordinate")
    dims = {c.dim for c in comps}
    if len(dims) != 1:
        raise ValueError("map components must share a chart")
    dim = dims.pop()
    if field.expr is not None and all(c.expr is not None for c in comps):
        expr = field.expr.subs(
            {CHART_SYMBOLS[l]: c.expr for l, c in enumerate(comps)},
            simultaneous=True,
        )
        return ScalarField(dim=dim, expr=expr)

    def fn(point):
        return field(tuple(c(point) for c in comps))

    def hook(axis):
        total = None
        for l, c in enumerate(comps):
            term = compose(field.diff(l), comps) * c.diff(axis)
            total = term if total is None else total + term
        return total

    depth = max([field.fd_depth] + [c.fd_depth for c in comps])
    return ScalarField(fn=fn, dim=dim, diff_hook=hook, fd_depth=depth)


def _unary(field, sym_fn, num_fn, label):
    if field.expr is not None:
        return ScalarField.from_sympy(sym_fn(field.expr), field.dim)

    def hook(axis):
        return _unary_derivative(field, label) * field.diff(axis)

    return ScalarField(
        fn=lambda p: num_fn(field(p)), dim=field.dim,
        diff_hook=hook, name=f"{label}({field.name})",
        fd_depth=field.fd_depth,
    )


_UNARY_DERIVS = {
    "sin": lambda f: fcos(f),
    "cos": lambda f: -fsin(f),
    "exp": lambda f: fexp(f),
    "log": lambda f: ScalarField.constant(1.0, f.dim) / f,
    "tan": lambda f: ScalarField.constant(1.0, f.dim) / (fcos(f) * fcos(f)),
    "sqrt": lambda f: ScalarField.constant(0.5, f.dim) / fsqrt(f),
}


def _unary_derivative(field, label):
    return _UNARY_DERIVS[label](field)


def fsin(f):
    return _unary(f, sp.sin, math.sin, "sin")


def fcos(f):
    return _unary(f, sp.cos, math.cos, "cos")


def fexp(f):
    return _unary(f, sp.exp, math.exp, "exp")


def flog(f):
    return _unary(f, sp.log, math.log, "log")


def ftan(f):
    return _unary(f, sp.tan, math.tan, "tan")


def fsqrt(f):
    return _unary(f, sp.sqrt, math.sqrt, "sqrt")


def as_field(value, dim) -> ScalarField:
    """Coerce a float or field to a ScalarField of the given dimension."""
    if isinstance(value, ScalarField):
        if value.dim == dim:
            return value
        if value.dim < dim:
            return lift(value, dim, tuple(range(value.dim)))
        raise ValueError("cannot lower field dimension")
    return ScalarField.constant(float(value), dim)
