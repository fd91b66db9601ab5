"""Tensor grids on the half-rectangle [-1,1] x [0,1] and the full square.

Nodes are stored in a single flat vector, ordered lexicographically by
(j, i) with the vertical index j as the major key.  The bottom row x_n = 0
of a half grid is tagged planar (it carries no Dirichlet data in the
degenerate solvers); every other boundary node is tagged outer.

All quadratures integrate the weight x_n^s in closed form per cell, so the
degenerate bottom row never divides by zero.
"""

from __future__ import annotations

import csv
import enum
import json

import numpy as np

__all__ = [
    "BoundaryTag",
    "Grid",
    "GridFunction",
    "build_grid",
    "integrate_weighted",
    "weighted_h1_seminorm",
    "gridfunction_to_csv",
    "gridfunction_from_csv",
    "gridfunction_to_json",
    "gridfunction_from_json",
]


class BoundaryTag(enum.IntEnum):
    INTERIOR = 0
    PLANAR = 1
    OUTER = 2


class Grid:
    """Uniform tensor grid.

    Attributes:
        shape: "half" ([-1,1] x [0,1]) or "full" ([-1,1] x [-1,1]).
        nx, ny: cell counts per direction; (nx+1)*(ny+1) nodes.
        h1, h2: spacings.
        x1, xn: 1-D node coordinate arrays.
        X1, XN: flat per-node coordinate arrays in node order.
        tags: per-node BoundaryTag values (int8).
    """

    def __init__(self, shape: str, nx: int, ny: int):
        if shape not in ("half", "full"):
            raise ValueError(f"shape must be 'half' or 'full', got {shape!r}")
        if nx < 2 or ny < 2:
            raise ValueError("need at least 2 cells per direction")
        self.shape = shape
        self.nx = int(nx)
        self.ny = int(ny)
        self.x1 = np.linspace(-1.0, 1.0, self.nx + 1)
        y0 = 0.0 if shape == "half" else -1.0
        self.xn = np.linspace(y0, 1.0, self.ny + 1)
        self.h1 = 2.0 / self.nx
        self.h2 = (1.0 - y0) / self.ny
        self.n_nodes = (self.nx + 1) * (self.ny + 1)

        XN, X1 = np.meshgrid(self.xn, self.x1, indexing="ij")
        self.X1 = X1.ravel()
        self.XN = XN.ravel()

        I, J = np.meshgrid(np.arange(self.nx + 1), np.arange(self.ny + 1), indexing="xy")
        self.I = I.ravel()
        self.J = J.ravel()

        tags = np.full(self.n_nodes, BoundaryTag.INTERIOR, dtype=np.int8)
        on_side = (self.I == 0) | (self.I == self.nx)
        on_top = self.J == self.ny
        if shape == "half":
            on_bottom = self.J == 0
            tags[on_side | on_top] = BoundaryTag.OUTER
            tags[on_bottom] = BoundaryTag.PLANAR
        else:
            on_bottom = self.J == 0
            tags[on_side | on_top | on_bottom] = BoundaryTag.OUTER
        self.tags = tags
        self.interior_indices = np.flatnonzero(tags == BoundaryTag.INTERIOR)
        self.planar_indices = np.flatnonzero(tags == BoundaryTag.PLANAR)
        self.outer_indices = np.flatnonzero(tags == BoundaryTag.OUTER)
        # bottom corners of a half grid: planar-tagged, but they sit in the
        # closure of the outer boundary and solvers pin them with data
        if shape == "half":
            self.planar_corner_indices = np.array(
                [self.node_index(0, 0), self.node_index(self.nx, 0)]
            )
        else:
            self.planar_corner_indices = np.empty(0, dtype=int)

    def node_index(self, i: int, j: int) -> int:
        if not (0 <= i <= self.nx and 0 <= j <= self.ny):
            raise IndexError(f"node ({i}, {j}) outside grid")
        return j * (self.nx + 1) + i

    def __eq__(self, other):
        return (
            isinstance(other, Grid)
            and (self.shape, self.nx, self.ny) == (other.shape, other.nx, other.ny)
        )

    def __hash__(self):
        return hash((self.shape, self.nx, self.ny))

    def __repr__(self):
        return f"Grid(shape={self.shape!r}, nx={self.nx}, ny={self.ny})"


def build_grid(shape: str, nx: int, ny: int) -> Grid:
    """Build a uniform grid; see Grid for the node ordering and tags."""
    return Grid(shape, nx, ny)


class GridFunction:
    """Nodal values on a grid, in node order."""

    def __init__(self, grid: Grid, values):
        values = np.asarray(values, dtype=np.float64)
        if values.shape == (grid.ny + 1, grid.nx + 1):
            values = values.ravel()
        if values.shape != (grid.n_nodes,):
            raise ValueError(
                f"expected {grid.n_nodes} values, got array of shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("grid function values must be finite")
        self.grid = grid
        self.values = values.copy()

    @classmethod
    def from_callable(cls, grid: Grid, fn) -> "GridFunction":
        return cls(grid, fn(grid.X1, grid.XN))

    def view2d(self) -> np.ndarray:
        """Values reshaped to (ny+1, nx+1); a view, rows are x_n levels."""
        return self.values.reshape(self.grid.ny + 1, self.grid.nx + 1)

    def interpolate(self, points: np.ndarray) -> np.ndarray:
        """Bilinear interpolation at (m, 2) points inside the domain."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        g = self.grid
        eps = 1e-12
        if (
            pts[:, 0].min() < g.x1[0] - eps
            or pts[:, 0].max() > g.x1[-1] + eps
            or pts[:, 1].min() < g.xn[0] - eps
            or pts[:, 1].max() > g.xn[-1] + eps
        ):
            raise ValueError("interpolation point outside the grid domain")
        s = np.clip((pts[:, 0] - g.x1[0]) / g.h1, 0.0, g.nx - 1e-12)
        t = np.clip((pts[:, 1] - g.xn[0]) / g.h2, 0.0, g.ny - 1e-12)
        i0 = s.astype(int)
        j0 = t.astype(int)
        fs = s - i0
        ft = t - j0
        V = self.view2d()
        return (
            V[j0, i0] * (1 - fs) * (1 - ft)
            + V[j0, i0 + 1] * fs * (1 - ft)
            + V[j0 + 1, i0] * (1 - fs) * ft
            + V[j0 + 1, i0 + 1] * fs * ft
        )

    def __repr__(self):
        return f"GridFunction({self.grid!r}, range=[{self.values.min():.3g}, {self.values.max():.3g}])"


def _weight_moment(y0, y1, s: float, p: int = 0):
    """Closed form of integral of y^(s+p) over [y0, y1]; vectorized."""
    q = s + p + 1.0
    return (np.power(y1, q) - np.power(y0, q)) / q


def _check_weight_args(grid: Grid, s: float):
    if s < 0:
        raise ValueError(f"weight exponent must be >= 0, got {s}")
    if s != 0 and grid.shape != "half":
        raise ValueError("weighted integrals with s != 0 need a half grid")


def _window_or_default(grid: Grid, window):
    if window is None:
        return 0, grid.nx, 0, grid.ny
    i0, i1, j0, j1 = (int(v) for v in window)
    if not (0 <= i0 < i1 <= grid.nx and 0 <= j0 < j1 <= grid.ny):
        raise ValueError(f"bad index window {window}")
    return i0, i1, j0, j1


def integrate_weighted(f: GridFunction, s: float, window=None) -> float:
    """Integral of x_n^s * f, with f bilinear per cell and the weight exact.

    window, if given, is a node-index rectangle (i0, i1, j0, j1) and the
    integral runs over the cells it encloses.
    """
    g = f.grid
    _check_weight_args(g, s)
    i0, i1, j0, j1 = _window_or_default(g, window)
    yj = g.xn[j0:j1]
    yj1 = g.xn[j0 + 1 : j1 + 1]
    M0 = _weight_moment(yj, yj1, s, 0)
    M1 = _weight_moment(yj, yj1, s, 1)
    I1 = (M1 - yj * M0) / g.h2
    I0 = M0 - I1
    V = f.view2d()
    lo = V[j0:j1, i0:i1] + V[j0:j1, i0 + 1 : i1 + 1]
    hi = V[j0 + 1 : j1 + 1, i0:i1] + V[j0 + 1 : j1 + 1, i0 + 1 : i1 + 1]
    return float(0.5 * g.h1 * (lo.sum(axis=1) @ I0 + hi.sum(axis=1) @ I1))


def weighted_h1_seminorm(f: GridFunction, s: float, window=None) -> float:
    """sqrt of integral of x_n^s |grad f|^2 with face-centered differences.

    Horizontal faces carry the exact weight moment over the row's control
    interval; vertical faces carry the exact moment over the cell column.
    """
    g = f.grid
    _check_weight_args(g, s)
    i0, i1, j0, j1 = _window_or_default(g, window)
    V = f.view2d()
    ylo, yhi = g.xn[j0], g.xn[j1]

    # x-direction faces, one per horizontal edge and row
    rows = g.xn[j0 : j1 + 1]
    ctrl_lo = np.maximum(rows - 0.5 * g.h2, ylo)
    ctrl_hi = np.minimum(rows + 0.5 * g.h2, yhi)
    w_row = g.h1 * _weight_moment(ctrl_lo, ctrl_hi, s, 0)
    dx = (V[j0 : j1 + 1, i0 + 1 : i1 + 1] - V[j0 : j1 + 1, i0:i1]) / g.h1
    energy = float((dx ** 2).sum(axis=1) @ w_row)

    # y-direction faces, one per vertical edge and column
    ncols = i1 - i0 + 1
    col_w = np.full(ncols, g.h1)
    col_w[0] = 0.5 * g.h1
    col_w[-1] = 0.5 * g.h1
    m_col = _weight_moment(g.xn[j0:j1], g.xn[j0 + 1 : j1 + 1], s, 0)
    dy = (V[j0 + 1 : j1 + 1, i0 : i1 + 1] - V[j0:j1, i0 : i1 + 1]) / g.h2
    energy += float(col_w @ (dy ** 2 * m_col[:, None]).sum(axis=0))
    return float(np.sqrt(energy))


def gridfunction_to_csv(f: GridFunction, path) -> None:
    """One row per node: i, j, x1, xn, value."""
    g = f.grid
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "x1", "xn", "value"])
        for k in range(g.n_nodes):
            w.writerow(
                [
                    int(g.I[k]),
                    int(g.J[k]),
                    repr(float(g.X1[k])),
                    repr(float(g.XN[k])),
                    repr(float(f.values[k])),
                ]
            )


def gridfunction_from_csv(path, shape: str, nx: int, ny: int) -> GridFunction:
    grid = build_grid(shape, nx, ny)
    values = np.full(grid.n_nodes, np.nan)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        count = 0
        for row in reader:
            k = grid.node_index(int(row["i"]), int(row["j"]))
            values[k] = float(row["value"])
            count += 1
    if count != grid.n_nodes or not np.all(np.isfinite(values)):
        raise ValueError(f"CSV holds {count} rows; expected {grid.n_nodes} distinct nodes")
    return GridFunction(grid, values)


def gridfunction_to_json(f: GridFunction) -> str:
    doc = {
        "shape": f.grid.shape,
        "nx": f.grid.nx,
        "ny": f.grid.ny,
        "values": f.values.tolist(),
    }
    return json.dumps(doc, sort_keys=True)


def gridfunction_from_json(text: str) -> GridFunction:
    doc = json.loads(text)
    for key in ("shape", "nx", "ny", "values"):
        if key not in doc:
            raise ValueError(f"JSON envelope missing key {key!r}")
    grid = build_grid(doc["shape"], doc["nx"], doc["ny"])
    values = np.asarray(doc["values"], dtype=np.float64)
    if values.shape != (grid.n_nodes,):
        raise ValueError(
            f"JSON envelope holds {values.size} values; expected {grid.n_nodes}"
        )
    return GridFunction(grid, values)
