"""Solve the degenerate equation div(x_n^2 A grad w) = 0 on a half grid.

The benchmark solution w = 3 x_1^2 - x_n^2 is annihilated by the weighted
operator with s = 2, so prescribing it on the outer boundary alone (the
planar row carries no datum -- the weight degenerates there) must reproduce
it in the interior.  The script runs three refinements and prints the
relative L^2 error together with the empirical convergence order.
"""

import math

import numpy as np

from harnacklab.grid import GridFunction, build_grid, integrate_weighted
from harnacklab.weighted_solver import (BoundaryData, CoefficientField,
                                        assemble_weighted, solve)


def exact(x1, xn):
    return 3.0 * x1**2 - xn**2


def main():
    print("degenerate solve, weight x_n^2, benchmark w = 3 x1^2 - xn^2")
    print(f"{'grid':>10} {'rel L2 error':>14} {'CG iterations':>14}")
    errs, hs = [], []
    for n1, n2 in ((32, 16), (64, 32), (128, 64)):
        g = build_grid("half", n1, n2)
        op = assemble_weighted(g, CoefficientField.identity(g), 2,
                               planar_dirichlet=False)
        bd = BoundaryData.from_callable(g, exact, include_planar=False)
        stats = {}
        sol = solve(op, np.zeros(g.n_nodes), bd, stats=stats)
        wex = exact(g.X1, g.XN)
        num = integrate_weighted(GridFunction(g, (sol.values - wex) ** 2), 0)
        den = integrate_weighted(GridFunction(g, wex**2), 0)
        rel = math.sqrt(num / den)
        errs.append(rel)
        hs.append(g.h1)
        print(f"{n1:>5}x{n2:<4} {rel:>14.3e} {stats['iterations']:>14}")
    order = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    print(f"empirical order: {order:.2f} (second-order five-point fluxes)")


if __name__ == "__main__":
    main()
