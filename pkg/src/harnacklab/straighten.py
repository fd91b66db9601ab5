"""Boundary-straightening chart y = x + Gamma(x_1) e_n and its pullbacks.

The chart flattens the graph x_n = Gamma(x_1) onto the plane x_n = 0.  Its
Jacobian is unit-determinant lower-triangular, so divergence-form operators
transform without a volume factor: a = Jinv B(y(x)) Jinv^T with
Jinv = [[1, 0], [-Gamma', 1]], and vector loads transform by f_x = Jinv f.

Coefficients and loads given analytically are sampled by evaluating the
formula at y(x); grid-sampled inputs are interpolated bilinearly there.
"""

from __future__ import annotations

import math

import numpy as np

from .grid import Grid, GridFunction
from .obstacle import FreeBoundaryCurve
from .weighted_solver import CoefficientField, VectorField

_GRAD_SAMPLES = 2049


class CurveModel:
    """Graph function Gamma with derivatives, recentered so Gamma(0) = 0.

    Derivatives up to max_order (default 3) come from supplied callables or
    the curve spline; beyond spline order they would be noise-dominated, so
    higher orders are refused rather than extrapolated.
    """

    def __init__(self, value, derivs, domain, max_order: int = 3):
        self._derivs = list(derivs)
        self.domain = (float(domain[0]), float(domain[1]))
        self.max_order = int(max_order)
        if len(self._derivs) < 1:
            raise ValueError("need at least the first derivative")
        self._offset = float(value(0.0))
        self._value = value
        t = np.linspace(self.domain[0], self.domain[1], _GRAD_SAMPLES)
        self.grad_sup = float(np.max(np.abs(self._derivs[0](t))))

    @classmethod
    def from_function(cls, fn, derivs=None, domain=(-1.0, 1.0),
                      max_order: int = 3):
        """Wrap an analytic graph function.

        Missing derivatives are taken by central stencils applied directly
        to fn (never to a lower finite difference, which would lose all
        precision by order three), with steps balancing truncation against
        round-off per order.
        """
        derivs = list(derivs) if derivs is not None else []

        def _stencil(order):
            if order == 1:
                h = 1e-6
                return lambda t: (fn(t + h) - fn(t - h)) / (2 * h)
            if order == 2:
                h = 1e-4
                return lambda t: (fn(t + h) - 2 * fn(t) + fn(t - h)) / (h * h)
            h = 1e-3
            return lambda t: (
                fn(t + 2 * h) - 2 * fn(t + h) + 2 * fn(t - h) - fn(t - 2 * h)
            ) / (2 * h ** 3)

        while len(derivs) < max_order:
            derivs.append(_stencil(len(derivs) + 1))
        return cls(fn, derivs, domain, max_order)

    @classmethod
    def from_curve(cls, curve: FreeBoundaryCurve, max_order: int = 3):
        """Wrap an extracted free-boundary spline."""
        lo = float(curve.samples[0, 0])
        hi = float(curve.samples[-1, 0])
        if not lo <= 0.0 <= hi:
            raise ValueError("curve must contain x' = 0 for recentering")
        spline = curve.spline
        derivs = [
            (lambda k: (lambda t: spline(np.asarray(t, dtype=float), k)))(k)
            for k in range(1, max_order + 1)
        ]
        return cls(lambda t: spline(np.asarray(t, dtype=float)),
                   derivs, (lo, hi), max_order)

    def gamma(self, t):
        t = np.asarray(t, dtype=float)
        return np.asarray(self._value(t), dtype=float) - self._offset

    def dgamma(self, t, order: int = 1):
        if not 1 <= order <= self.max_order:
            raise ValueError(
                f"derivative order must be in [1, {self.max_order}]"
            )
        t = np.asarray(t, dtype=float)
        return np.asarray(self._derivs[order - 1](t), dtype=float)

    def to_x(self, y1, yn):
        """Chart y -> x: subtract the graph height."""
        y1 = np.asarray(y1, dtype=float)
        return y1, np.asarray(yn, dtype=float) - self.gamma(y1)

    def to_y(self, x1, xn):
        """Chart x -> y: add the graph height."""
        x1 = np.asarray(x1, dtype=float)
        return x1, np.asarray(xn, dtype=float) + self.gamma(x1)


def ellipticity_floor(lam: float, grad_sup: float) -> float:
    """Exact lower eigenvalue bound of Jinv B Jinv^T for B >= lam.

    The smallest singular value squared of [[1, 0], [-c, 1]] at c = grad_sup
    is 2 / (2 + c^2 + c*sqrt(4 + c^2)).
    """
    c = float(grad_sup)
    return lam * 2.0 / (2.0 + c * c + c * math.sqrt(4.0 + c * c))


def jacobians(c: CurveModel, x):
    """Forward and inverse chart Jacobians at x, with the exact det 1."""
    g = float(c.dgamma(float(np.asarray(x, dtype=float).ravel()[0])))
    J = np.array([[1.0, 0.0], [g, 1.0]])
    Jinv = np.array([[1.0, 0.0], [-g, 1.0]])
    return J, Jinv, 1.0


def _sample_coefficients(B, y1, yn):
    if isinstance(B, CoefficientField):
        pts = np.column_stack([y1, yn])
        maps = []
        for comp in (B.a11, B.a12, B.a22):
            maps.append(GridFunction(B.grid, comp).interpolate(pts))
        return maps[0], maps[1], maps[2], B.lam
    b11, b12, b22 = B(y1, yn)
    b11 = np.broadcast_to(np.asarray(b11, dtype=float), y1.shape)
    b12 = np.broadcast_to(np.asarray(b12, dtype=float), y1.shape)
    b22 = np.broadcast_to(np.asarray(b22, dtype=float), y1.shape)
    mid = 0.5 * (b11 + b22)
    rad = np.hypot(0.5 * (b11 - b22), b12)
    return b11, b12, b22, float(np.min(mid - rad))


def transform_coefficients(B, c: CurveModel, target: Grid) -> CoefficientField:
    """Pull a divergence-form coefficient field back through the chart.

    B is a CoefficientField (interpolated at y(x)) or a callable
    (y1, yn) -> (b11, b12, b22).  The output carries recomputed ellipticity
    bounds and is rejected if any node dips below the exact floor implied by
    grad_sup, which numerically can only happen through interpolation error.
    """
    if c.grad_sup > 1.0 + 1e-12:
        raise ValueError(
            f"straightening requires |Gamma'| <= 1, got {c.grad_sup:.6g}"
        )
    y1, yn = c.to_y(target.X1, target.XN)
    b11, b12, b22, lam = _sample_coefficients(B, y1, yn)
    g = c.dgamma(target.X1)
    a11 = b11
    a12 = b12 - g * b11
    a22 = g * g * b11 - 2.0 * g * b12 + b22
    mid = 0.5 * (a11 + a22)
    rad = np.hypot(0.5 * (a11 - a22), a12)
    eig = mid - rad
    floor = ellipticity_floor(lam, c.grad_sup)
    bad = np.flatnonzero(eig < floor - 1e-10 * max(1.0, abs(floor)))
    if bad.size:
        k = int(bad[0])
        raise ValueError(
            f"transformed coefficients lose ellipticity at node {k} "
            f"(x1={target.X1[k]:.6g}, xn={target.XN[k]:.6g}): "
            f"eigenvalue {eig[k]:.6g} < floor {floor:.6g}"
        )
    return CoefficientField(target, a11, a12, a22)


def transform_rhs(f, c: CurveModel, target: Grid) -> VectorField:
    """Pull a vector load back: f_x = Jinv f(y(x)) (unit determinant)."""
    y1, yn = c.to_y(target.X1, target.XN)
    if isinstance(f, VectorField):
        pts = np.column_stack([y1, yn])
        f1 = GridFunction(f.grid, f.f1).interpolate(pts)
        fn = GridFunction(f.grid, f.fn).interpolate(pts)
    else:
        f1, fn = f(y1, yn)
        f1 = np.broadcast_to(np.asarray(f1, dtype=float), y1.shape)
        fn = np.broadcast_to(np.asarray(fn, dtype=float), y1.shape)
    g = c.dgamma(target.X1)
    return VectorField(target, f1, fn - g * f1)


def pullback_function(u, c: CurveModel, target: Grid) -> GridFunction:
    """Nodal samples of u(y(x)) on the target grid."""
    y1, yn = c.to_y(target.X1, target.XN)
    if isinstance(u, GridFunction):
        vals = u.interpolate(np.column_stack([y1, yn]))
    else:
        vals = np.broadcast_to(np.asarray(u(y1, yn), dtype=float), y1.shape)
    return GridFunction(target, vals)


def export_coefficients_csv(A: CoefficientField, path) -> None:
    """Write per-node coefficient entries as 'i, j, a11, a12, a22' rows."""
    grid = A.grid
    with open(path, "w") as fh:
        fh.write("i,j,a11,a12,a22\n")
        for k in range(grid.n_nodes):
            i = k % (grid.nx + 1)
            j = k // (grid.nx + 1)
            fh.write(
                f"{i},{j},{repr(float(A.a11[k]))},"
                f"{repr(float(A.a12[k]))},{repr(float(A.a22[k]))}\n"
            )
