"""Flux-form solver for div(x_n^s A grad w) = div(x_n^s f) + x_n g.

The domain is the half-rectangle; Dirichlet data lives on the outer
boundary only, and the planar row x_n = 0 consists of free unknowns (the
weight supplies the natural condition there).

Assembly evaluates the quadratic form grad^T A grad at the four corners of
every cell, with A read at the corner node, the gradient built from the two
cell edges meeting that corner, and the weight x_n^s integrated exactly
over the quarter-cell box.  The result is symmetric positive semidefinite
by construction, reduces to the 5-point stencil when a12 vanishes, and is
exact for vertically constant linear solutions.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sps

from .grid import Grid, GridFunction, _weight_moment

__all__ = [
    "CoefficientField",
    "VectorField",
    "BoundaryData",
    "WeightedOperator",
    "SolveConvergenceError",
    "assemble_weighted",
    "assemble_rhs",
    "solve",
    "residual_norm",
    "poincare_ratio",
    "export_coo",
]


class SolveConvergenceError(RuntimeError):
    """CG failed to reach the target relative residual."""

    def __init__(self, iterations, residual_history):
        self.iterations = iterations
        self.residual_history = list(residual_history)
        final = residual_history[-1] if len(residual_history) else float("nan")
        super().__init__(
            f"conjugate gradients stalled at relative residual {final:.3e} "
            f"after {iterations} iterations"
        )


class CoefficientField:
    """Symmetric 2x2 coefficient per node with ellipticity bounds.

    Attributes:
        a11, a12, a22: flat per-node entry arrays.
        lam, Lam: certified eigenvalue bounds, 0 < lam <= Lam.
    """

    def __init__(self, grid: Grid, a11, a12, a22, lam=None, Lam=None):
        self.grid = grid
        self.a11 = np.broadcast_to(np.asarray(a11, dtype=float), (grid.n_nodes,)).copy()
        self.a12 = np.broadcast_to(np.asarray(a12, dtype=float), (grid.n_nodes,)).copy()
        self.a22 = np.broadcast_to(np.asarray(a22, dtype=float), (grid.n_nodes,)).copy()
        entries = (self.a11, self.a12, self.a22)
        if not all(np.all(np.isfinite(e)) for e in entries):
            raise ValueError("coefficient entries must be finite")
        mid = 0.5 * (self.a11 + self.a22)
        rad = np.hypot(0.5 * (self.a11 - self.a22), self.a12)
        self.eig_min = float(np.min(mid - rad))
        self.eig_max = float(np.max(mid + rad))
        self.lam = self.eig_min if lam is None else float(lam)
        self.Lam = self.eig_max if Lam is None else float(Lam)
        tol = 1e-10 * max(1.0, abs(self.Lam))
        if self.lam <= 0:
            raise ValueError(f"ellipticity floor must be positive, got {self.lam}")
        if self.eig_min < self.lam - tol or self.eig_max > self.Lam + tol:
            raise ValueError(
                f"nodal eigenvalues [{self.eig_min:.6g}, {self.eig_max:.6g}] "
                f"escape the declared bounds [{self.lam:.6g}, {self.Lam:.6g}]"
            )

    @classmethod
    def identity(cls, grid: Grid) -> "CoefficientField":
        return cls(grid, 1.0, 0.0, 1.0, lam=1.0, Lam=1.0)

    @classmethod
    def constant(cls, grid: Grid, a11, a12, a22) -> "CoefficientField":
        return cls(grid, float(a11), float(a12), float(a22))

    @classmethod
    def from_callable(cls, grid: Grid, fn) -> "CoefficientField":
        """fn(x1, xn) -> (a11, a12, a22) arrays."""
        a11, a12, a22 = fn(grid.X1, grid.XN)
        return cls(grid, a11, a12, a22)


class VectorField:
    """Per-node vector field (f1, fn)."""

    def __init__(self, grid: Grid, f1, fn):
        self.grid = grid
        self.f1 = np.broadcast_to(np.asarray(f1, dtype=float), (grid.n_nodes,)).copy()
        self.fn = np.broadcast_to(np.asarray(fn, dtype=float), (grid.n_nodes,)).copy()
        if not (np.all(np.isfinite(self.f1)) and np.all(np.isfinite(self.fn))):
            raise ValueError("vector field entries must be finite")

    @classmethod
    def zero(cls, grid: Grid) -> "VectorField":
        return cls(grid, 0.0, 0.0)

    @classmethod
    def from_callable(cls, grid: Grid, fn) -> "VectorField":
        f1, f2 = fn(grid.X1, grid.XN)
        return cls(grid, f1, f2)


class BoundaryData:
    """Dirichlet values on outer nodes; optional values for the planar row.

    The two bottom corners of a half grid are planar-tagged yet lie in the
    closure of the outer boundary; solvers pin them.  corner_values supplies
    them explicitly (from_callable does so automatically); otherwise each
    corner inherits the outer value of the node directly above it, which is
    exact for vertically constant data.

    planar_values are only consumed by operators assembled with
    planar_dirichlet=True; the default contract leaves the planar row free.
    """

    def __init__(self, grid: Grid, outer_values, planar_values=None,
                 corner_values=None):
        self.grid = grid
        out = np.asarray(outer_values, dtype=float)
        if out.shape != grid.outer_indices.shape:
            raise ValueError(
                f"expected {grid.outer_indices.size} outer values, got {out.shape}"
            )
        if not np.all(np.isfinite(out)):
            raise ValueError("boundary values must be finite")
        self.outer_values = out.copy()
        if planar_values is None:
            self.planar_values = None
        else:
            pla = np.asarray(planar_values, dtype=float)
            if pla.shape != grid.planar_indices.shape:
                raise ValueError(
                    f"expected {grid.planar_indices.size} planar values, got {pla.shape}"
                )
            self.planar_values = pla.copy()
        if corner_values is None:
            self.corner_values = None
        else:
            cor = np.asarray(corner_values, dtype=float)
            if cor.shape != grid.planar_corner_indices.shape:
                raise ValueError("corner_values must hold one value per bottom corner")
            self.corner_values = cor.copy()

    @classmethod
    def from_callable(cls, grid: Grid, fn, include_planar: bool = False):
        outer = fn(grid.X1[grid.outer_indices], grid.XN[grid.outer_indices])
        outer = np.broadcast_to(np.asarray(outer, dtype=float), grid.outer_indices.shape)
        planar = None
        if include_planar:
            planar = fn(grid.X1[grid.planar_indices], grid.XN[grid.planar_indices])
            planar = np.broadcast_to(
                np.asarray(planar, dtype=float), grid.planar_indices.shape
            )
        corners = None
        if grid.planar_corner_indices.size:
            ci = grid.planar_corner_indices
            corners = np.broadcast_to(
                np.asarray(fn(grid.X1[ci], grid.XN[ci]), dtype=float), ci.shape
            )
        return cls(grid, outer, planar, corners)

    def corner_fallback(self) -> np.ndarray:
        """Corner values, defaulting to the outer value one node above."""
        if self.corner_values is not None:
            return self.corner_values
        grid = self.grid
        pos = {int(k): p for p, k in enumerate(grid.outer_indices)}
        above = [pos[int(k) + (grid.nx + 1)] for k in grid.planar_corner_indices]
        return self.outer_values[above]


def _corner_data(grid: Grid, s: float):
    """Per-cell corner node indices, edge endpoints, and quarter weights.

    Returns a list of four tuples (node, xa, xb, yc, yd, w), one per corner
    position, each entry a flat array over cells.  (xa, xb) span the x-edge
    and (yc, yd) the y-edge meeting that corner; w is the exact integral of
    x_n^s over the quarter-cell box.
    """
    nx, ny = grid.nx, grid.ny
    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    ii = ii.ravel()
    jj = jj.ravel()
    stride = nx + 1

    def node(i, j):
        return j * stride + i

    yb0 = grid.xn[jj]
    yb1 = yb0 + 0.5 * grid.h2
    yt1 = grid.xn[jj + 1]
    w_bot = 0.5 * grid.h1 * _weight_moment(yb0, yb1, s, 0)
    w_top = 0.5 * grid.h1 * _weight_moment(yb1, yt1, s, 0)

    sw = node(ii, jj)
    se = node(ii + 1, jj)
    nw = node(ii, jj + 1)
    ne = node(ii + 1, jj + 1)
    return [
        (sw, sw, se, sw, nw, w_bot),
        (se, sw, se, se, ne, w_bot),
        (nw, nw, ne, sw, nw, w_top),
        (ne, nw, ne, se, ne, w_top),
    ]


def _corner_stiffness(grid: Grid, a11, a12, a22, s: float) -> sps.csr_matrix:
    """Full symmetric stiffness over all nodes; coefficients are per node."""
    h1, h2 = grid.h1, grid.h2
    rows, cols, vals = [], [], []

    def emit(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    for node, xa, xb, yc, yd, w in _corner_data(grid, s):
        gxx = w * a11[node] / (h1 * h1)
        gyy = w * a22[node] / (h2 * h2)
        gxy = w * a12[node] / (h1 * h2)
        emit(xa, xa, gxx)
        emit(xb, xb, gxx)
        emit(xa, xb, -gxx)
        emit(xb, xa, -gxx)
        emit(yc, yc, gyy)
        emit(yd, yd, gyy)
        emit(yc, yd, -gyy)
        emit(yd, yc, -gyy)
        if np.any(gxy):
            for (r, c, sign) in (
                (xb, yd, 1.0),
                (xb, yc, -1.0),
                (xa, yd, -1.0),
                (xa, yc, 1.0),
            ):
                emit(r, c, sign * gxy)
                emit(c, r, sign * gxy)

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    n = grid.n_nodes
    K = sps.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    K.sum_duplicates()
    return K


class WeightedOperator:
    """Assembled operator with its Dirichlet partition.

    Attributes:
        matrix: stiffness over free (non-constrained) nodes, CSR.
        lifting: coupling from constrained nodes into free rows, CSR.
        full_matrix: stiffness over all nodes.
        free_indices / constrained_indices: the node partition.
    """

    def __init__(self, grid: Grid, s: float, A: CoefficientField, full_matrix,
                 planar_dirichlet: bool):
        self.grid = grid
        self.s = s
        self.A = A
        self.full_matrix = full_matrix
        self.planar_dirichlet = planar_dirichlet
        constrained = np.concatenate([grid.outer_indices, grid.planar_corner_indices])
        if planar_dirichlet:
            constrained = np.concatenate([constrained, grid.planar_indices])
        constrained = np.unique(constrained)
        mask = np.zeros(grid.n_nodes, dtype=bool)
        mask[constrained] = True
        self.constrained_indices = constrained
        self.free_indices = np.flatnonzero(~mask)
        self.matrix = full_matrix[self.free_indices][:, self.free_indices].tocsr()
        self.lifting = full_matrix[self.free_indices][:, self.constrained_indices].tocsr()

    def constrained_values(self, bd: BoundaryData) -> np.ndarray:
        g = self.grid
        vals = np.zeros(g.n_nodes)
        vals[g.outer_indices] = bd.outer_values
        vals[g.planar_corner_indices] = bd.corner_fallback()
        if self.planar_dirichlet and bd.planar_values is not None:
            vals[g.planar_indices] = bd.planar_values
        return vals[self.constrained_indices]


def assemble_weighted(grid: Grid, A: CoefficientField, s: float, *,
                      planar_dirichlet: bool = False) -> WeightedOperator:
    """Assemble the x_n^s-weighted stiffness on a half grid.

    By default only outer nodes carry Dirichlet data and the planar row is
    free; planar_dirichlet=True constrains the planar row as well (used by
    the unweighted s=0 problems whose solutions vanish on the straightened
    boundary).
    """
    if grid.shape != "half":
        raise ValueError("weighted assembly is defined on half grids only")
    if s < 0:
        raise ValueError(f"weight exponent must be >= 0, got {s}")
    if A.grid != grid:
        raise ValueError("coefficient field lives on a different grid")
    K = _corner_stiffness(grid, A.a11, A.a12, A.a22, s)
    return WeightedOperator(grid, s, A, K, planar_dirichlet)


def _mass_apply(grid: Grid, sigma: float, g: np.ndarray) -> np.ndarray:
    """Apply the x_n^sigma-weighted bilinear mass matrix to nodal values."""
    nx, ny = grid.nx, grid.ny
    V = g.reshape(ny + 1, nx + 1)
    yj = grid.xn[:-1]
    yj1 = grid.xn[1:]
    M0 = _weight_moment(yj, yj1, sigma, 0)
    M1 = _weight_moment(yj, yj1, sigma, 1)
    M2 = _weight_moment(yj, yj1, sigma, 2)
    T1 = (M1 - yj * M0) / grid.h2
    T2 = (M2 - 2 * yj * M1 + yj * yj * M0) / (grid.h2 * grid.h2)
    My = np.empty((ny, 2, 2))
    My[:, 0, 0] = M0 - 2 * T1 + T2
    My[:, 0, 1] = My[:, 1, 0] = T1 - T2
    My[:, 1, 1] = T2
    Mx = grid.h1 * np.array([[1 / 3, 1 / 6], [1 / 6, 1 / 3]])

    out = np.zeros_like(V)
    for py in (0, 1):
        for qy in (0, 1):
            wy = My[:, py, qy]
            for px in (0, 1):
                for qx in (0, 1):
                    block = V[qy : qy + ny, qx : qx + nx] * wy[:, None] * Mx[px, qx]
                    out[py : py + ny, px : px + nx] += block
    return out.ravel()


def _flux_load(grid: Grid, s: float, f1: np.ndarray, fn: np.ndarray,
               scale: np.ndarray | None = None) -> np.ndarray:
    """Load entries of int x_n^s (scale * f) . grad phi, per basis function."""
    rhs = np.zeros(grid.n_nodes)
    for node, xa, xb, yc, yd, w in _corner_data(grid, s):
        wloc = w if scale is None else w * scale[node]
        cx = wloc * f1[node] / grid.h1
        cy = wloc * fn[node] / grid.h2
        np.add.at(rhs, xb, cx)
        np.add.at(rhs, xa, -cx)
        np.add.at(rhs, yd, cy)
        np.add.at(rhs, yc, -cy)
    return rhs


def assemble_rhs(op: WeightedOperator, f: VectorField | None,
                 g: GridFunction | None) -> np.ndarray:
    """Load vector F(phi) = int x_n^s f . grad phi + int x_n g phi.

    Returns one entry per node (all basis functions); solvers consume the
    non-constrained entries.
    """
    grid = op.grid
    rhs = np.zeros(grid.n_nodes)
    if f is not None:
        if f.grid != grid:
            raise ValueError("vector field lives on a different grid")
        rhs += _flux_load(grid, op.s, f.f1, f.fn)
    if g is not None:
        if g.grid != grid:
            raise ValueError("source term lives on a different grid")
        rhs += _mass_apply(grid, 1.0, g.values)
    return rhs


def _cg(K, b, M_inv, tol, max_iter):
    """Plain (optionally Jacobi-preconditioned) conjugate gradients."""
    n = b.size
    x = np.zeros(n)
    bnorm = float(np.linalg.norm(b))
    history = []
    if bnorm == 0.0:
        return x, 0, history
    r = b.copy()
    z = r * M_inv if M_inv is not None else r
    p = z.copy()
    rz = float(r @ z)
    for it in range(1, max_iter + 1):
        Kp = K @ p
        alpha = rz / float(p @ Kp)
        x += alpha * p
        r -= alpha * Kp
        rel = float(np.linalg.norm(r)) / bnorm
        history.append(rel)
        if rel <= tol:
            return x, it, history
        z = r * M_inv if M_inv is not None else r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolveConvergenceError(max_iter, history)


def solve(op: WeightedOperator, rhs: np.ndarray, bd: BoundaryData, *,
          tol: float = 1e-10, max_iter: int | None = None,
          jacobi: bool = False, stats: dict | None = None) -> GridFunction:
    """Solve for the free nodes given Dirichlet data; returns the full field."""
    grid = op.grid
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (grid.n_nodes,):
        raise ValueError(f"rhs must have one entry per node, got {rhs.shape}")
    if bd.grid != grid:
        raise ValueError("boundary data lives on a different grid")
    wc = op.constrained_values(bd)
    b = rhs[op.free_indices] - op.lifting @ wc
    if max_iter is None:
        max_iter = 20 * max(1, op.free_indices.size)
    M_inv = None
    if jacobi:
        diag = op.matrix.diagonal()
        if np.any(diag <= 0):
            raise ValueError("nonpositive diagonal; Jacobi preconditioner unusable")
        M_inv = 1.0 / diag
    x, iterations, history = _cg(op.matrix, b, M_inv, tol, max_iter)
    values = np.zeros(grid.n_nodes)
    values[op.constrained_indices] = wc
    values[op.free_indices] = x
    if stats is not None:
        stats["iterations"] = iterations
        stats["residual_history"] = history
        stats["relative_residual"] = history[-1] if history else 0.0
    return GridFunction(grid, values)


def residual_norm(op: WeightedOperator, w: GridFunction, rhs: np.ndarray,
                  bd: BoundaryData | None = None) -> float:
    """Euclidean norm of (stiffness @ w - rhs) over the free rows."""
    if w.grid != op.grid:
        raise ValueError("field lives on a different grid")
    rhs = np.asarray(rhs, dtype=float)
    if bd is not None:
        wc = op.constrained_values(bd)
        if not np.allclose(w.values[op.constrained_indices], wc, atol=1e-9):
            raise ValueError("field disagrees with the boundary data it is checked against")
    r = (op.full_matrix @ w.values - rhs)[op.free_indices]
    return float(np.linalg.norm(r))


def poincare_ratio(f: GridFunction) -> float | None:
    """Ratio int f^2 / int x_n^2 |grad f|^2 for f vanishing on outer nodes.

    Returns None when the gradient energy vanishes (f constant zero).
    """
    from .grid import integrate_weighted, weighted_h1_seminorm

    g = f.grid
    if g.shape != "half":
        raise ValueError("the weighted Poincare ratio is defined on half grids")
    scale = float(np.max(np.abs(f.values))) or 1.0
    if np.max(np.abs(f.values[g.outer_indices])) > 1e-12 * scale:
        raise ValueError("f must vanish on outer nodes")
    num = integrate_weighted(GridFunction(g, f.values**2), 0)
    den = weighted_h1_seminorm(f, 2) ** 2
    if den == 0.0:
        return None
    return num / den


def export_coo(op: WeightedOperator, path) -> None:
    """Write the free-node stiffness as 'row col value' lines."""
    coo = op.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{int(r)} {int(c)} {repr(float(v))}\n")
