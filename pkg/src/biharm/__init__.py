"""Numerical verification and construction of biharmonic geometry on
product 3-manifolds (surface x line).

The package evaluates the residual systems characterizing biharmonic
isometric immersions of surfaces into, and biharmonic Riemannian
submersions from, charts of the form e^{2q} dt^2 + ds^2 + dz^2, and
constructs new proper biharmonic submersions by integrating the
fiber-angle ODE through its Riccati reduction.
"""

from .errors import (
    DegenerateBox,
    DegenerateImmersion,
    EmptyRange,
    GeometryError,
    ImmediateSingularity,
    NonFiniteValue,
    NonOrthonormalFrame,
    NotCMC,
    NotUmbilic,
    OutOfProfile,
    PointOutsideGuard,
    SingularCoefficient,
    SingularProfile,
    ToleranceExceeded,
)
from .numkernel import (
    ChartBox,
    ChartPoint,
    ScalarField,
    compose,
    directional_field,
    frame_derivative,
    lift,
    partial_derivative,
    sample_grid,
)
from .geometry import (
    CurvatureComponents,
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
from .frames import (
    AdaptedFrameSpec,
    IntegrabilityData,
    adapted_frame,
    frame_identity_suite,
    integrability_data,
    random_adapted_specs,
    semi_geodesic_frame,
    validate_frame,
)
from .submersion import (
    SubmersionSpec,
    base_curvature,
    biharmonic_residuals,
    catalog_examples,
    catalog_suite,
    harmonicity_test,
    hyperbolic_uniqueness_scan,
    residual_report,
)
from .hypersurface import (
    HopfCylinderSpec,
    SurfaceGeometry,
    SurfaceImmersion,
    ambient_ricci,
    biharmonic_residuals_surface,
    cmc_classify,
    hopf_cylinder_residuals,
    surface_geometry,
    umbilic_biharmonic_test,
    vertical_cylinder,
)
from .constructor import (
    AlphaProfile,
    ConstructionSpec,
    alpha_ode_residual,
    build_flat_target,
    build_nonflat_target,
    integrate_alpha,
    riccati_consistency,
    riccati_rhs,
    verify_construction,
)
from .report import Channel, ResidualReport

__version__ = "0.1.0"
