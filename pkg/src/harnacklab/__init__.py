"""Numerical laboratory for degenerate elliptic problems on half-domains.

The package covers five connected capabilities:

* ``grid`` -- structured half/full rectangles, nodal fields, weighted
  quadrature and seminorms;
* ``weighted_solver`` -- divergence-form equations div(x_n^s A grad w) =
  div(x_n^s f) + x_n g with Dirichlet data on the outer boundary only;
* ``obstacle`` -- projected-SOR complementarity solves, free-boundary
  extraction as a graph, and blow-up classification at boundary points;
* ``straighten`` -- charts flattening a boundary graph, coefficient
  transport, and pullback sampling;
* ``harnack`` -- quotients of positive solutions with one-sided boundary
  values, Hopf floors, Campanato/Hoelder regularity scans, and Taylor
  analyticity scans of extracted curves;
* ``majorant`` -- power series with coefficients in [0, +inf], exact
  rational arithmetic, closed-form families, and the majorant ODE
  integrator with tail radius estimates.

The command-line pipeline (``python -m harnacklab.cli`` or the
``harnacklab`` script) drives each capability from a single JSON config.
"""

from .grid import (
    BoundaryTag,
    Grid,
    GridFunction,
    build_grid,
    gridfunction_from_csv,
    gridfunction_from_json,
    gridfunction_to_csv,
    gridfunction_to_json,
    integrate_weighted,
    weighted_h1_seminorm,
)
from .harnack import (
    AnalyticityScan,
    CampanatoReport,
    GlobalNormSpec,
    RatioSystemFields,
    analyticity_scan,
    build_ratio_system,
    campanato_scan,
    export_campanato_csv,
    global_norm_coeff,
    holder_seminorm,
    hopf_floor,
    planar_quotient,
    ratio,
    ratio_residual,
)
from .majorant import (
    DEFAULT_ORDER,
    Apply,
    ClosedFormMajorant,
    Const,
    DropConst,
    InfiniteCoefficientError,
    MajorantSeries,
    Prod,
    RateExpr,
    SeriesLiteral,
    Sum,
    Var,
    add,
    compose,
    expr_from_dict,
    export_series_csv,
    integrate_rule,
    majorizes,
    mul,
    ode_solve,
    radius_estimate,
    recenter,
)
from .obstacle import (
    FreeBoundaryCurve,
    NoFreeBoundaryError,
    NonGraphBoundaryError,
    ObstacleSolution,
    RegularPointReport,
    blowup_check,
    export_curve_csv,
    extract_free_boundary,
    solve_obstacle,
)
from .straighten import (
    CurveModel,
    ellipticity_floor,
    export_coefficients_csv,
    jacobians,
    pullback_function,
    transform_coefficients,
    transform_rhs,
)
from .weighted_solver import (
    BoundaryData,
    CoefficientField,
    SolveConvergenceError,
    VectorField,
    WeightedOperator,
    assemble_rhs,
    assemble_weighted,
    export_coo,
    poincare_ratio,
    residual_norm,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyticityScan",
    "Apply",
    "BoundaryData",
    "BoundaryTag",
    "CampanatoReport",
    "ClosedFormMajorant",
    "CoefficientField",
    "Const",
    "CurveModel",
    "DEFAULT_ORDER",
    "DropConst",
    "FreeBoundaryCurve",
    "GlobalNormSpec",
    "Grid",
    "GridFunction",
    "InfiniteCoefficientError",
    "MajorantSeries",
    "NoFreeBoundaryError",
    "NonGraphBoundaryError",
    "ObstacleSolution",
    "Prod",
    "RateExpr",
    "RatioSystemFields",
    "RegularPointReport",
    "SeriesLiteral",
    "SolveConvergenceError",
    "Sum",
    "Var",
    "VectorField",
    "WeightedOperator",
    "add",
    "analyticity_scan",
    "assemble_rhs",
    "assemble_weighted",
    "blowup_check",
    "build_grid",
    "build_ratio_system",
    "campanato_scan",
    "compose",
    "ellipticity_floor",
    "export_campanato_csv",
    "export_coefficients_csv",
    "export_coo",
    "export_curve_csv",
    "export_series_csv",
    "expr_from_dict",
    "extract_free_boundary",
    "global_norm_coeff",
    "gridfunction_from_csv",
    "gridfunction_from_json",
    "gridfunction_to_csv",
    "gridfunction_to_json",
    "holder_seminorm",
    "hopf_floor",
    "integrate_rule",
    "integrate_weighted",
    "jacobians",
    "majorizes",
    "mul",
    "ode_solve",
    "planar_quotient",
    "poincare_ratio",
    "pullback_function",
    "radius_estimate",
    "ratio",
    "ratio_residual",
    "recenter",
    "solve",
    "solve_obstacle",
    "transform_coefficients",
    "transform_rhs",
    "weighted_h1_seminorm",
    "__version__",
]
