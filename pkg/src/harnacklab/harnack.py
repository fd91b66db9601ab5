"""Ratio calculus for pairs of solutions, multiscale regularity scanning,
discrete weighted global norms, and graph-analyticity diagnostics.

Quotients by the vertical coordinate use one-sided planar values u(x', h)/h:
numerator and denominator both vanish linearly at the planar boundary, so the
one-sided quotient converges at first order and never divides by zero.

The multiscale scan follows the iteration w_{k+1} = w_k - l_k on nested
half-rectangles Q_k of size S^k snapped to grid lines, with l_k either the
L^2 projection of w_k onto span{1, x_1} over Q_k or the linearization at the
origin of a degenerate-harmonic replacement solved on Q_k / 2.  The decay
rate of sigma_k = S^{-k(n/2+1+alpha)} ||w_k||_{L^2(Q_k)} discriminates
C^{1,alpha} behaviour (ratio S^{1-alpha}) from rougher profiles (growth).

The analyticity scan fits a polynomial to a graph function on a window,
rescales to Taylor coefficients at 0, drops noise-dominated orders, and runs
a root test in log-slope form: the median slope of log c_k over the last
usable orders cancels algebraic prefactors that would bias plain c_k^{1/k}
at reachable orders.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import (
    Grid,
    GridFunction,
    build_grid,
    integrate_weighted,
)
from .straighten import CurveModel, transform_coefficients
from .weighted_solver import (
    BoundaryData,
    CoefficientField,
    VectorField,
    _corner_stiffness,
    _flux_load,
    _mass_apply,
    assemble_weighted,
    solve,
)

__all__ = [
    "AnalyticityScan",
    "CampanatoReport",
    "GlobalNormSpec",
    "RatioSystemFields",
    "analyticity_scan",
    "build_ratio_system",
    "campanato_scan",
    "export_campanato_csv",
    "global_norm_coeff",
    "holder_seminorm",
    "hopf_floor",
    "planar_quotient",
    "ratio",
    "ratio_residual",
]


# ---------------------------------------------------------------------------
# quotients and the ratio identity


def planar_quotient(u: GridFunction) -> np.ndarray:
    """Per-node u / x_n with the planar row replaced by u(x', h) / h."""
    g = u.grid
    if g.shape != "half":
        raise ValueError("quotients by x_n are defined on half grids")
    V = u.view2d()
    out = np.empty_like(V)
    out[1:] = V[1:] / g.XN.reshape(g.ny + 1, g.nx + 1)[1:]
    out[0] = V[1] / g.h2
    return out.ravel()


def hopf_floor(u: GridFunction) -> float:
    """Minimum of u / x_n over the grid, one-sided at the planar row.

    A positive return certifies the Hopf-type lower bound used by ratio
    computations; nonpositive values are valid (failing) answers.
    """
    return float(np.min(planar_quotient(u)))


def ratio(u1: GridFunction, u2: GridFunction,
          floor_tol: float = 1e-8) -> GridFunction:
    """Nodal ratio u1 / u2 with planar values from one-sided differences.

    Requires hopf_floor(u2) >= floor_tol > 0 so the denominator is usable;
    at the planar row both functions vanish and the ratio is the quotient of
    vertical increments over the first cell.
    """
    if u1.grid != u2.grid:
        raise ValueError("ratio arguments must share a grid")
    if floor_tol <= 0:
        raise ValueError("floor_tol must be positive")
    floor = hopf_floor(u2)
    if floor < floor_tol:
        raise ValueError(
            f"denominator violates the Hopf floor: min u/x_n = {floor:.6g} "
            f"< {floor_tol:.6g}"
        )
    g = u1.grid
    V1 = u1.view2d()
    V2 = u2.view2d()
    inc = (V2[1] - V2[0]) / g.h2
    if float(np.min(inc)) < floor_tol:
        raise ValueError(
            "denominator increments degenerate at the planar row: "
            f"min = {float(np.min(inc)):.6g} < {floor_tol:.6g}"
        )
    out = np.empty_like(V1)
    out[1:] = V1[1:] / V2[1:]
    out[0] = (V1[1] - V1[0]) / (V2[1] - V2[0])
    return GridFunction(g, out.ravel())


def _node_gradient(u: GridFunction) -> tuple[np.ndarray, np.ndarray]:
    """Second-order nodal gradient (one-sided at the boundary rows)."""
    g = u.grid
    dn, d1 = np.gradient(u.view2d(), g.h2, g.h1)
    return d1.ravel(), dn.ravel()


def ratio_residual(w: GridFunction, u2: GridFunction, A: CoefficientField,
                   f1: VectorField | None = None,
                   f2: VectorField | None = None) -> float:
    """Discrete residual of the ratio identity for the pair (w*u2, u2).

    With u1 = w*u2, checks div(u2^2 A grad w) = div(u2 f1 - u1 f2)
    + (f2 . grad u1 - f1 . grad u2) in flux form, returning the Euclidean
    norm over rows free of Dirichlet data.  Zero loads make both sides drop
    to the plain weighted equation for w.
    """
    g = w.grid
    if u2.grid != g or A.grid != g:
        raise ValueError("ratio residual arguments must share a grid")
    q2 = u2.values * u2.values
    K = _corner_stiffness(g, q2 * A.a11, q2 * A.a12, q2 * A.a22, 0)
    rhs = np.zeros(g.n_nodes)
    u1_vals = w.values * u2.values
    if f1 is not None or f2 is not None:
        z = np.zeros(g.n_nodes)
        a1 = f1.f1 if f1 is not None else z
        an = f1.fn if f1 is not None else z
        b1 = f2.f1 if f2 is not None else z
        bn = f2.fn if f2 is not None else z
        rhs += _flux_load(g, 0, u2.values * a1 - u1_vals * b1,
                          u2.values * an - u1_vals * bn)
        g1x, g1n = _node_gradient(GridFunction(g, u1_vals))
        g2x, g2n = _node_gradient(u2)
        source = b1 * g1x + bn * g1n - a1 * g2x - an * g2n
        rhs += _mass_apply(g, 0, source)
    free = np.setdiff1d(
        np.arange(g.n_nodes),
        np.concatenate([g.outer_indices, g.planar_corner_indices]),
    )
    r = (K @ w.values - rhs)[free]
    return float(np.linalg.norm(r))


# ---------------------------------------------------------------------------
# the ratio PDE system fields


@dataclass(frozen=True)
class RatioSystemFields:
    """Coefficients of the pulled-back system for the slope ratio w_k.

    Atilde scales the transformed coefficients by the squared vertical
    quotient; F, G, H collect the terms generated by coordinate-dependent
    coefficients.  All vanish identically when the original coefficients
    are constant.
    """

    Atilde: CoefficientField
    F: VectorField
    G: GridFunction
    H: VectorField


def _coefficient_derivatives(B, y1, yn, step: float):
    """d/dy_d of the three coefficient entries at given points, d in {1, n}."""

    def at(p1, pn):
        if isinstance(B, CoefficientField):
            pts = np.column_stack([p1, pn])
            return tuple(
                GridFunction(B.grid, comp).interpolate(pts)
                for comp in (B.a11, B.a12, B.a22)
            )
        b11, b12, b22 = B(p1, pn)
        full = np.broadcast_to
        return (full(np.asarray(b11, float), p1.shape),
                full(np.asarray(b12, float), p1.shape),
                full(np.asarray(b22, float), p1.shape))

    d1 = [(hi - lo) / (2 * step)
          for hi, lo in zip(at(y1 + step, yn), at(y1 - step, yn))]
    dn = [(hi - lo) / (2 * step)
          for hi, lo in zip(at(y1, yn + step), at(y1, yn - step))]
    return d1, dn


def build_ratio_system(u: list[GridFunction], c: CurveModel, B,
                       k: int) -> RatioSystemFields:
    """Assemble the fields of the slope-ratio equation for index k.

    u lists the tangential and vertical derivative fields (u_1, ..., u_n)
    on the half grid in straightened coordinates; B gives the original
    coefficients in the curved frame (callable or CoefficientField).  The
    sign of H is chosen so the derivative equation reads
    div(A grad u_k) = div(H).
    """
    n = len(u)
    if n != 2:
        raise ValueError("the plane implementation takes u = (u_1, u_n)")
    if not 1 <= k <= n:
        raise ValueError(f"index k must lie in [1, {n}]")
    g = u[0].grid
    if any(ui.grid != g for ui in u):
        raise ValueError("all derivative fields must share a grid")
    if c.grad_sup > 1.0 + 1e-12:
        raise ValueError("straightening requires |Gamma'| <= 1")
    floor = hopf_floor(u[-1])
    if floor <= 0:
        raise ValueError(
            f"vertical derivative violates the Hopf floor: {floor:.6g}"
        )

    A = transform_coefficients(B, c, g)
    quot = [planar_quotient(ui) for ui in u]
    qn = quot[-1]
    qk = quot[k - 1]

    y1, yn = c.to_y(g.X1, g.XN)
    if isinstance(B, CoefficientField):
        step = 0.5 * min(B.grid.h1, B.grid.h2)
        # keep the difference stencil inside the sampled domain
        y1 = np.clip(y1, B.grid.x1[0] + step, B.grid.x1[-1] - step)
        yn = np.clip(yn, B.grid.xn[0] + step, B.grid.xn[-1] - step)
    else:
        step = 1e-5
    d1, dn = _coefficient_derivatives(B, y1, yn, step)
    dB = {1: _as_matrix(d1), n: _as_matrix(dn)}

    grad = [np.stack(_node_gradient(ui)) for ui in u]  # grad[q][i] = d_i u_q
    gprime = c.dgamma(g.X1)
    Jinv = np.empty((2, 2, g.n_nodes))
    Jinv[0, 0] = 1.0
    Jinv[0, 1] = 0.0
    Jinv[1, 0] = -gprime
    Jinv[1, 1] = 1.0

    F = np.zeros((2, g.n_nodes))
    G = np.zeros(g.n_nodes)
    H = np.zeros((2, g.n_nodes))
    for i in range(2):
        for p in range(2):
            for q in range(2):
                F[i] += Jinv[i, p] * (qk * quot[q] * dB[n][p][q]
                                      - qn * quot[q] * dB[k][p][q])
                G += Jinv[i, p] * quot[q] * (
                    dB[k][p][q] * grad[-1][i] - dB[n][p][q] * grad[k - 1][i]
                )
                H[i] -= Jinv[i, p] * dB[k][p][q] * u[q].values

    qn2 = qn * qn
    Atilde = CoefficientField(g, qn2 * A.a11, qn2 * A.a12, qn2 * A.a22)
    if Atilde.eig_min < floor * floor * A.lam - 1e-10:
        raise ValueError("scaled coefficients lost the certified floor")
    return RatioSystemFields(
        Atilde,
        VectorField(g, F[0], F[1]),
        GridFunction(g, G),
        VectorField(g, H[0], H[1]),
    )


def _as_matrix(entries):
    """(b11, b12, b22) arrays -> symmetric 2x2 of arrays."""
    e11, e12, e22 = entries
    return ((e11, e12), (e12, e22))


# ---------------------------------------------------------------------------
# Hoelder seminorm estimation

_PAIR_LIMIT = 2000


def _dyadic_offsets(nx: int, ny: int) -> list[tuple[int, int]]:
    steps = [0]
    m = 1
    while m <= max(nx, ny):
        steps.extend((m, -m))
        m *= 2
    out = [(di, dj) for di in steps for dj in steps if di or dj]
    # the exact spans, so the largest separations are always probed
    for di in (nx, -nx, 0):
        for dj in (ny, -ny, 0):
            if (di or dj) and (di, dj) not in out:
                out.append((di, dj))
    return out


def holder_seminorm(f: GridFunction, alpha: float,
                    region: tuple[float, float, float, float] | None = None
                    ) -> float:
    """Estimate sup |f(x) - f(y)| / |x - y|^alpha over node pairs.

    Exhaustive over all pairs when the region holds fewer than 2000 nodes;
    otherwise pairs are generated from a uniform anchor subsample combined
    with dyadic index offsets, covering every separation scale.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    g = f.grid
    if region is None:
        sel = np.arange(g.n_nodes)
    else:
        xa, xb, ya, yb = region
        eps = 1e-12
        sel = np.flatnonzero(
            (g.X1 >= xa - eps) & (g.X1 <= xb + eps)
            & (g.XN >= ya - eps) & (g.XN <= yb + eps)
        )
    if sel.size < 2:
        raise ValueError("region must contain at least two nodes")
    x = g.X1[sel]
    y = g.XN[sel]
    v = f.values[sel]

    if sel.size <= _PAIR_LIMIT:
        best = 0.0
        for a in range(sel.size - 1):
            dx = x[a + 1:] - x[a]
            dy = y[a + 1:] - y[a]
            dv = np.abs(v[a + 1:] - v[a])
            d = np.hypot(dx, dy)
            best = max(best, float(np.max(dv / d**alpha)))
        return best

    # stratified: anchors on a uniform stride, partners at dyadic offsets
    stride = max(1, int(math.ceil(sel.size / _PAIR_LIMIT)))
    anchors = sel[::stride]
    ai = anchors % (g.nx + 1)
    aj = anchors // (g.nx + 1)
    V = f.view2d()
    best = 0.0
    lo_i, hi_i = int(ai.min()), int(ai.max())
    lo_j, hi_j = int(aj.min()), int(aj.max())
    for di, dj in _dyadic_offsets(hi_i - lo_i, hi_j - lo_j):
        bi = ai + di
        bj = aj + dj
        ok = (bi >= lo_i) & (bi <= hi_i) & (bj >= lo_j) & (bj <= hi_j)
        if not ok.any():
            continue
        d = math.hypot(di * g.h1, dj * g.h2)
        dv = np.abs(V[bj[ok], bi[ok]] - V[aj[ok], ai[ok]])
        best = max(best, float(np.max(dv)) / d**alpha)
    return best


# ---------------------------------------------------------------------------
# multiscale regularity scan


@dataclass
class CampanatoReport:
    """Scan record: scales, remainders, load seminorms, and the linear limit.

    fitted_decay is the least-squares slope of log sigma_k against k over
    positive entries (negative = decay, tied to C^{1,alpha} behaviour);
    -inf marks fewer than two usable scales.  The limit polynomial P is
    p0 + p1*x_1 with the vertical slope pinned to zero.
    """

    S: float
    alpha: float
    K: int
    sigma: list[float]
    chi: list[float]
    p0: float
    p1: float
    fitted_decay: float
    mode: str = "l2fit"

    def __post_init__(self):
        if any(s < 0 for s in self.sigma) or any(c < 0 for c in self.chi):
            raise ValueError("scan magnitudes must be nonnegative")

    @property
    def P(self) -> tuple[float, float]:
        return (self.p0, self.p1)

    def ratios(self) -> list[float]:
        """Consecutive sigma quotients over scales where both are positive."""
        out = []
        for a, b in zip(self.sigma, self.sigma[1:]):
            if a > 0 and b > 0:
                out.append(b / a)
        return out

    def to_json(self) -> str:
        return json.dumps(
            {
                "S": self.S,
                "alpha": self.alpha,
                "K": self.K,
                "sigma": self.sigma,
                "chi": self.chi,
                "P": [self.p0, self.p1],
                "fitted_decay": self.fitted_decay,
                "mode": self.mode,
            },
            sort_keys=True,
        )


def export_campanato_csv(report: CampanatoReport, path) -> None:
    with open(path, "w") as fh:
        fh.write("k,scale,sigma,chi\n")
        for k, (s, c) in enumerate(zip(report.sigma, report.chi)):
            fh.write(
                f"{k},{repr(float(report.S ** k))},"
                f"{repr(float(s))},{repr(float(c))}\n"
            )


def _snap_window(g: Grid, half_width: float, height: float):
    """Grid-index window for [-half_width, half_width] x [0, height]."""
    i0 = int(round((-half_width - g.x1[0]) / g.h1))
    i1 = int(round((half_width - g.x1[0]) / g.h1))
    j1 = int(round(height / g.h2))
    i0 = max(i0, 0)
    i1 = min(i1, g.nx)
    j1 = min(j1, g.ny)
    return i0, i1, 0, j1


def _window_nodes(g: Grid, win):
    i0, i1, j0, j1 = win
    ii, jj = np.meshgrid(np.arange(i0, i1 + 1), np.arange(j0, j1 + 1),
                         indexing="xy")
    return (jj * (g.nx + 1) + ii).ravel()


def _l2_linear_fit(g: Grid, values: np.ndarray, win) -> tuple[float, float]:
    nodes = _window_nodes(g, win)
    X = np.column_stack([np.ones(nodes.size), g.X1[nodes]])
    sol, *_ = np.linalg.lstsq(X, values[nodes], rcond=None)
    return float(sol[0]), float(sol[1])


_REPLACEMENT_GRID = (32, 16)


def _replacement_fit(g: Grid, values: np.ndarray,
                     half_width: float, height: float) -> tuple[float, float]:
    """Linearize a degenerate-harmonic replacement solved on the sub-box.

    The box [-a, a] x [0, b] maps onto the reference half grid; the pulled
    equation div(x_n^2 grad h) = 0 becomes the same equation with constant
    coefficients diag((b/a)^2, 1).  The linearization keeps the value and
    tangential slope at the origin; the vertical slope of such solutions
    vanishes there.
    """
    ref = build_grid("half", *_REPLACEMENT_GRID)
    parent = GridFunction(g, values)

    def data(x1, xn):
        return parent.interpolate(
            np.column_stack([
                np.broadcast_to(np.asarray(x1, float), np.shape(x1)).ravel()
                * half_width,
                np.broadcast_to(np.asarray(xn, float), np.shape(xn)).ravel()
                * height,
            ])
        ).reshape(np.shape(x1))

    A = CoefficientField.constant(ref, (height / half_width) ** 2, 0.0, 1.0)
    op = assemble_weighted(ref, A, 2)
    bd = BoundaryData.from_callable(ref, data)
    h = solve(op, np.zeros(ref.n_nodes), bd, tol=1e-12)
    V = h.view2d()
    mid = ref.nx // 2
    value = float(V[0, mid])
    slope = float((V[0, mid + 1] - V[0, mid - 1]) / (2 * ref.h1 * half_width))
    return value, slope


def campanato_scan(w: GridFunction, f: VectorField | None, alpha: float,
                   S: float, K: int, mode: str = "l2fit",
                   A: CoefficientField | None = None) -> CampanatoReport:
    """Iteratively strip linear polynomials at scales S^k and record decay.

    At scale k the remainder w_k is measured by sigma_k over the snapped
    half-rectangle Q_k of half-width S^k, the load f_k by its alpha-Hoelder
    seminorm chi_k; then l_k(x_1) is fitted (projection or replacement
    linearization), w_{k+1} = w_k - l_k, and with coefficients A given the
    load updates by f_{k+1} = f_k + (I - A) grad l_k.
    """
    g = w.grid
    if g.shape != "half":
        raise ValueError("the scan runs on half grids")
    if not 0 < S <= 0.5:
        raise ValueError("shrinking rate must lie in (0, 1/2]")
    if K < 1:
        raise ValueError("need at least one scale")
    if mode not in ("l2fit", "replacement"):
        raise ValueError("mode must be 'l2fit' or 'replacement'")
    if S**K < 4 * max(g.h1, g.h2):
        raise ValueError(
            f"scale underflow: S^K = {S**K:.3g} below 4 cells "
            f"({4 * max(g.h1, g.h2):.3g})"
        )

    wk = w.values.copy()
    fk1 = f.f1.copy() if f is not None else np.zeros(g.n_nodes)
    fkn = f.fn.copy() if f is not None else np.zeros(g.n_nodes)
    n_dim = 2
    expo = n_dim + 2 + 2 * alpha
    sigma: list[float] = []
    chi: list[float] = []
    p0_total = 0.0
    p1_total = 0.0
    for k in range(K + 1):
        scale = S**k
        win = _snap_window(g, scale, scale)
        wk_sq = GridFunction(g, wk * wk)
        mass = integrate_weighted(wk_sq, 0, window=win)
        sigma.append(math.sqrt(max(mass, 0.0) / scale**expo))
        region = (-scale, scale, 0.0, scale)
        fmag = GridFunction(g, np.hypot(fk1, fkn))
        if np.any(fmag.values):
            chi.append(holder_seminorm(fmag, alpha, region))
        else:
            chi.append(0.0)
        if k == K:
            break
        if mode == "l2fit":
            c0, c1 = _l2_linear_fit(g, wk, win)
        else:
            c0, c1 = _replacement_fit(g, wk, scale / 2, scale / 2)
        wk -= c0 + c1 * g.X1
        p0_total += c0
        p1_total += c1
        if A is not None:
            # f_{k+1} = f_k + (I - A) grad l_k with grad l_k = (c1, 0)
            fk1 += (1.0 - A.a11) * c1
            fkn += (0.0 - A.a12) * c1

    usable = [(k, s) for k, s in enumerate(sigma) if s > 0]
    if len(usable) >= 2:
        ks = np.array([k for k, _ in usable], dtype=float)
        ls = np.log([s for _, s in usable])
        decay = float(np.polyfit(ks, ls, 1)[0])
    else:
        decay = float("-inf")
    return CampanatoReport(S, alpha, K, sigma, chi, p0_total, p1_total,
                           decay, mode)


# ---------------------------------------------------------------------------
# discrete global norms


@dataclass(frozen=True)
class GlobalNormSpec:
    """Order-k seminorm request with at most b vertical differences.

    l is the boundary-distance growth exponent; the default l = k makes the
    result the k-th majorant coefficient of the norm family.
    """

    k: int
    alpha: float
    b: int = 0
    l: int | None = None
    k_max: int = field(default=6, compare=False)

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.b not in (0, 1):
            raise ValueError("normal-derivative budget must be 0 or 1")
        if self.k < 0 or self.k > self.k_max:
            raise ValueError(f"derivative order must lie in [0, {self.k_max}]")
        if self.l is None:
            object.__setattr__(self, "l", self.k)


def _tangential_diff(V: np.ndarray, h: float, times: int) -> np.ndarray:
    for _ in range(times):
        out = np.full_like(V, np.nan)
        out[:, 1:-1] = (V[:, 2:] - V[:, :-2]) / (2 * h)
        V = out
    return V


def _vertical_diff(V: np.ndarray, h: float, times: int) -> np.ndarray:
    for _ in range(times):
        out = np.full_like(V, np.nan)
        out[1:-1, :] = (V[2:, :] - V[:-2, :]) / (2 * h)
        V = out
    return V


def global_norm_coeff(f: GridFunction, spec: GlobalNormSpec) -> float:
    """Discrete weighted seminorm sup_X D^l (sup |D^beta f| + D^a Hoelder).

    D is the distance of the center X to the outer boundary, the sup and the
    alpha-seminorm run over grid nodes in the ball of radius D/(l+1) around
    X, and beta ranges over order-k differences with at most b vertical
    ones.  Centers whose ball touches nodes lost to the difference stencil
    are skipped (flagged scales); at least one center must survive.
    """
    g = f.grid
    V = f.view2d()
    if g.shape == "half":
        dist = np.minimum(1.0 - np.abs(g.X1), 1.0 - g.XN)
    else:
        dist = np.minimum(1.0 - np.abs(g.X1), 1.0 - np.abs(g.XN))
    derivs = []
    for m in range(min(spec.b, spec.k) + 1):
        D = _tangential_diff(V, g.h1, spec.k - m)
        D = _vertical_diff(D, g.h2, m)
        derivs.append(D)

    # center subsample: strided indices plus the distance maximizer
    def strided(n):
        return np.unique(np.round(np.linspace(0, n, min(n + 1, 21))).astype(int))

    centers = [(i, j) for i in strided(g.nx) for j in strided(g.ny)]
    best_node = int(np.argmax(dist))
    centers.append((best_node % (g.nx + 1), best_node // (g.nx + 1)))

    X1 = g.X1.reshape(g.ny + 1, g.nx + 1)
    XN = g.XN.reshape(g.ny + 1, g.nx + 1)
    out = 0.0
    usable = 0
    for i, j in centers:
        Delta = float(dist[j * (g.nx + 1) + i])
        if Delta <= 0:
            continue
        rad = Delta / (spec.l + 1)
        # open ball: at l = 0 the radius reaches the nearest outer node
        # exactly, which must stay outside
        mask = (np.abs(X1 - X1[j, i]) <= rad) & (np.abs(XN - XN[j, i]) <= rad)
        mask &= np.hypot(X1 - X1[j, i], XN - XN[j, i]) < rad
        if not mask.any():
            continue
        local = 0.0
        ok = True
        for D in derivs:
            vals = D[mask]
            if np.isnan(vals).any():
                ok = False
                break
            sup = float(np.max(np.abs(vals)))
            # pairwise alpha-quotient inside the ball, capped sample
            idx = np.flatnonzero(mask.ravel())
            if idx.size > 400:
                idx = idx[:: int(math.ceil(idx.size / 400))]
            xs = g.X1[idx]
            ys = g.XN[idx]
            vs = D.ravel()[idx]
            sem = 0.0
            for a in range(idx.size - 1):
                d = np.hypot(xs[a + 1:] - xs[a], ys[a + 1:] - ys[a])
                dv = np.abs(vs[a + 1:] - vs[a])
                if d.size:
                    sem = max(sem, float(np.max(dv / d**spec.alpha)))
            local = max(local, sup + Delta**spec.alpha * sem)
        if not ok:
            continue
        usable += 1
        out = max(out, Delta**spec.l * local)
    if usable == 0:
        raise ValueError(
            "derivative order too large for the grid: every center's ball "
            "hits the difference-stencil margin"
        )
    return out


# ---------------------------------------------------------------------------
# analyticity diagnostics


@dataclass
class AnalyticityScan:
    """Taylor-coefficient estimates of a graph function at the origin.

    coefficients[k] estimates |Gamma^(k)(0)| / k!; radius is the log-slope
    root-test estimate (math.inf when fewer than two orders survive the
    noise floor).  kmax_used reports automatic degree reduction on
    ill-conditioned fits.
    """

    coefficients: list[float]
    radius: float
    kmax_used: int
    usable_orders: list[int]
    noise_level: float

    def __iter__(self):
        return iter((self.coefficients, self.radius))


def analyticity_scan(c: CurveModel, kmax: int = 8,
                     window: float = 0.25) -> AnalyticityScan:
    """Fit Taylor coefficients of the graph on [-window, window].

    The graph is sampled densely, fitted by a least-squares polynomial in
    the scaled variable t/window (degree reduced automatically while the
    design matrix condition exceeds 1e12), converted to coefficient
    estimates c_k, and truncated where |p_k| falls below thirty times the
    fit residual.  The radius estimate exponentiates the negated median
    slope of log c_k across consecutive usable orders, which is exact for
    geometric coefficients and robust to tail aliasing in the top orders.
    """
    if kmax < 1:
        raise ValueError("kmax must be positive")
    if window <= 0:
        raise ValueError("window must be positive")
    lo, hi = c.domain
    if -window < lo or window > hi:
        raise ValueError("window exceeds the curve domain")
    m = max(4 * kmax + 1, 129)
    t = np.linspace(-window, window, m)
    vals = c.gamma(t)
    tau = t / window

    deg = kmax
    while True:
        design = np.vander(tau, deg + 1, increasing=True)
        cond = np.linalg.cond(design)
        if cond <= 1e12 or deg <= 1:
            break
        deg -= 1
    coef, *_ = np.linalg.lstsq(design, vals, rcond=None)
    fit_res = vals - design @ coef
    noise = float(np.sqrt(np.mean(fit_res**2)))

    ck = [abs(float(coef[k])) / window**k for k in range(deg + 1)]
    # orders below the fit noise or the round-off floor carry no signal
    floor = max(30 * noise, 1e-12 * float(np.max(np.abs(coef))))
    usable = [k for k in range(1, deg + 1)
              if abs(coef[k]) >= floor and coef[k] != 0.0]
    if len(usable) < 2:
        return AnalyticityScan(ck, math.inf, deg, usable, noise)
    # median over all consecutive slopes: the top fitted orders absorb the
    # truncated tail and the lowest can be transient, but the middle of the
    # slope distribution stays clean
    slopes = [
        (math.log(ck[b]) - math.log(ck[a])) / (b - a)
        for a, b in zip(usable, usable[1:])
    ]
    radius = float(math.exp(-float(np.median(slopes))))
    return AnalyticityScan(ck, radius, deg, usable, noise)
