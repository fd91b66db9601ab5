"""Obstacle solver, free-boundary extraction, and blow-up classification."""

import csv

import numpy as np
import pytest
import sympy as sp

from harnacklab.grid import GridFunction, build_grid
from harnacklab.obstacle import (
    FreeBoundaryCurve,
    NoFreeBoundaryError,
    NonGraphBoundaryError,
    ObstacleSolution,
    blowup_check,
    export_curve_csv,
    extract_free_boundary,
    solve_obstacle,
)
from harnacklab.weighted_solver import (
    BoundaryData,
    CoefficientField,
    SolveConvergenceError,
)

A_RADIUS = 0.4


def radial_profile(x, y):
    """Contact-disc benchmark: zero inside r = A_RADIUS, quadratic-log outside."""
    r = np.hypot(x, y)
    out = (r**2 - A_RADIUS**2) / 4 - (A_RADIUS**2 / 2) * np.log(
        np.maximum(r, A_RADIUS) / A_RADIUS
    )
    return np.where(r > A_RADIUS, out, 0.0)


def half_plane_profile(x, y):
    return 0.5 * np.square(np.maximum(y, 0.0))


def test_radial_profile_oracle():
    # independent symbolic check: unit Laplacian outside the disc and a
    # C^1 vanishing match at the contact circle
    r, a = sp.symbols("r a", positive=True)
    u = (r**2 - a**2) / 4 - (a**2 / 2) * sp.log(r / a)
    assert sp.simplify(sp.diff(u, r, 2) + sp.diff(u, r) / r - 1) == 0
    assert sp.simplify(u.subs(r, a)) == 0
    assert sp.simplify(sp.diff(u, r).subs(r, a)) == 0


def _solve_radial(n, **kw):
    g = build_grid("full", n, n)
    A = CoefficientField.identity(g)
    bd = BoundaryData.from_callable(g, radial_profile)
    return solve_obstacle(g, A, bd, **kw)


def _solve_half_plane(n, **kw):
    g = build_grid("full", n, n)
    A = CoefficientField.identity(g)
    bd = BoundaryData.from_callable(g, half_plane_profile)
    return solve_obstacle(g, A, bd, **kw)


def test_zero_data_gives_zero_solution():
    g = build_grid("full", 12, 12)
    sol = solve_obstacle(
        g, CoefficientField.identity(g), BoundaryData(g, np.zeros(g.outer_indices.size))
    )
    assert np.all(sol.U.values == 0)
    assert not sol.active_mask.any()
    assert sol.complementarity_residual == 0.0


def test_half_plane_solution_near_exact():
    sol = _solve_half_plane(32)
    g = sol.grid
    exact = half_plane_profile(g.X1, g.XN)
    assert np.max(np.abs(sol.U.values - exact)) <= 1e-6
    assert sol.complementarity_residual <= 1e-8
    curve = extract_free_boundary(sol)
    assert np.max(np.abs(curve.samples[:, 1])) <= 1e-8


def test_half_plane_invariants():
    sol = _solve_half_plane(32)
    assert np.all(sol.U.values >= -1e-12)
    thr = sol.activation_threshold
    assert np.all(sol.U.values[~sol.active_mask] <= thr)


def test_radial_contact_set_and_extraction():
    sol = _solve_radial(64)
    g = sol.grid
    h = g.h1
    # the inactive region is a disc of radius a up to O(h)
    inact = ~sol.active_mask
    r = np.hypot(g.X1[inact], g.XN[inact])
    assert r.max() <= A_RADIUS + 2 * h
    curve = extract_free_boundary(sol, "xn")
    xs = curve.samples[:, 0]
    keep = np.abs(xs) <= 0.25
    assert keep.sum() >= 5
    exact = np.sqrt(A_RADIUS**2 - xs[keep] ** 2)
    assert np.max(np.abs(curve.samples[keep, 1] - exact)) <= 2 * h


def test_radial_extraction_along_x1():
    sol = _solve_radial(64)
    curve = extract_free_boundary(sol, "x1")
    assert curve.axis == "x1"
    # graph over x_n: gamma(t) = sqrt(a^2 - t^2) on the right-hand side
    t = curve.samples[:, 0]
    keep = np.abs(t) <= 0.25
    exact = np.sqrt(A_RADIUS**2 - t[keep] ** 2)
    assert np.max(np.abs(curve.samples[keep, 1] - exact)) <= 2 * sol.grid.h1


def test_free_boundary_radius_converges():
    errs = []
    for n in (32, 64):
        sol = _solve_radial(n)
        curve = extract_free_boundary(sol)
        xs = curve.samples[:, 0]
        keep = np.abs(xs) <= 0.2
        radius = np.hypot(xs[keep], curve.samples[keep, 1])
        errs.append(float(np.max(np.abs(radius - A_RADIUS))))
    # refinement halves the location error, give or take
    assert errs[1] <= 0.7 * errs[0] + 1e-12


def test_monotone_in_boundary_data():
    g = build_grid("full", 24, 24)
    A = CoefficientField.identity(g)
    bd1 = BoundaryData.from_callable(g, lambda x, y: half_plane_profile(x, y))
    bd2 = BoundaryData.from_callable(g, lambda x, y: half_plane_profile(x, y) + 0.1)
    U1 = solve_obstacle(g, A, bd1).U.values
    U2 = solve_obstacle(g, A, bd2).U.values
    assert np.all(U1 <= U2 + 1e-8)


def test_quadratic_growth_of_sup():
    sol = _solve_half_plane(48)
    g = sol.grid
    h = g.h2
    for t in (0.3, 0.5, 0.8):
        below = g.XN < t
        m = float(sol.U.values[below].max())
        assert abs(m - 0.5 * t**2) <= t * h + h * h


def test_rejects_bad_inputs():
    g = build_grid("half", 8, 4)
    with pytest.raises(ValueError, match="full"):
        solve_obstacle(g, CoefficientField.identity(g),
                       BoundaryData(g, np.zeros(g.outer_indices.size)))
    gf = build_grid("full", 8, 8)
    neg = BoundaryData(gf, np.full(gf.outer_indices.size, -1.0))
    with pytest.raises(ValueError, match="nonnegative"):
        solve_obstacle(gf, CoefficientField.identity(gf), neg)
    ok = BoundaryData(gf, np.ones(gf.outer_indices.size))
    with pytest.raises(ValueError, match="relaxation"):
        solve_obstacle(gf, CoefficientField.identity(gf), ok, omega=2.5)


def test_nonconvergence_reports_residual():
    g = build_grid("full", 32, 32)
    bd = BoundaryData.from_callable(g, radial_profile)
    with pytest.raises(SolveConvergenceError) as exc:
        solve_obstacle(g, CoefficientField.identity(g), bd, max_sweeps=3,
                       check_every=1)
    assert exc.value.residual_history[-1] > 1e-8


def test_no_free_boundary_when_all_active():
    g = build_grid("full", 16, 16)
    vals = 1.0 + half_plane_profile(g.X1, g.XN)
    sol = ObstacleSolution(GridFunction(g, vals), vals > 0, 1, 0.0)
    with pytest.raises(NoFreeBoundaryError):
        extract_free_boundary(sol)
    zero = ObstacleSolution(GridFunction(g, np.zeros(g.n_nodes)),
                            np.zeros(g.n_nodes, bool), 1, 0.0)
    with pytest.raises(NoFreeBoundaryError):
        extract_free_boundary(zero)


def test_non_graph_pattern_is_flagged():
    g = build_grid("full", 16, 16)
    # two horizontal active bands: every column crosses the boundary twice
    band = ((g.XN > -0.8) & (g.XN < -0.4)) | ((g.XN > 0.4) & (g.XN < 0.8))
    vals = np.where(band, 1.0, 0.0)
    sol = ObstacleSolution(GridFunction(g, vals), band, 1, 0.0)
    with pytest.raises(NonGraphBoundaryError) as exc:
        extract_free_boundary(sol)
    assert len(exc.value.columns) > 0


def test_curve_requires_sorted_samples():
    with pytest.raises(ValueError):
        FreeBoundaryCurve("xn", [(0.0, 0.1), (0.0, 0.2)])
    with pytest.raises(ValueError):
        FreeBoundaryCurve("xn", [(0.5, 0.1)])


def test_curve_csv_export(tmp_path):
    sol = _solve_radial(48)
    curve = extract_free_boundary(sol)
    path = tmp_path / "curve.csv"
    export_curve_csv(curve, path)
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == curve.samples.shape[0]
    mid = rows[len(rows) // 2]
    x = float(mid["xprime"])
    assert float(mid["gamma"]) == pytest.approx(float(curve.gamma(x)))
    assert float(mid["dgamma"]) == pytest.approx(float(curve.dgamma(x)))


def test_blowup_half_plane_regular():
    sol = _solve_half_plane(64)
    rep = blowup_check(sol, (0.0, 0.0), [0.8, 0.6, 0.4])
    assert rep.verdict == "regular"
    assert rep.k == pytest.approx(1.0, abs=0.05)
    e = rep.direction
    assert np.hypot(e[0], e[1] - 1.0) <= 0.05
    # fit residual is interpolation noise ~ h^2/r^2; 3e-3 is the 64-cell bound
    assert all(r < 3e-3 for r in rep.residuals)


def test_blowup_radial_point_converges_to_half_plane():
    # curvature keeps the relative residual ~ r/(3a), so the verdict bar is
    # out of reach at desk resolution; the fit direction and the decreasing
    # residual trend are the checkable claims
    sol = _solve_radial(96)
    rep = blowup_check(sol, (A_RADIUS, 0.0), [0.4, 0.2, 0.1])
    e = rep.direction
    assert np.hypot(e[0] - 1.0, e[1]) <= 0.1
    assert rep.residuals[2] < rep.residuals[1] < rep.residuals[0]
    assert rep.ks[-1] == pytest.approx(1.0, abs=0.1)


def test_blowup_interior_contact_point_inconclusive():
    sol = _solve_radial(64)
    rep = blowup_check(sol, (0.0, 0.0), [0.3, 0.2, 0.1])
    assert rep.verdict == "inconclusive"


def test_blowup_skips_out_of_domain_radius():
    sol = _solve_half_plane(32)
    rep = blowup_check(sol, (0.9, 0.0), [0.5, 0.05])
    assert rep.skipped_radii == [0.5]
    assert rep.radii == [0.05]


def test_blowup_validates_radii():
    sol = _solve_half_plane(16)
    with pytest.raises(ValueError):
        blowup_check(sol, (0.0, 0.0), [0.1, 0.2])
    with pytest.raises(ValueError):
        blowup_check(sol, (0.0, 0.0), [])


def test_report_json_fields():
    sol = _solve_half_plane(64)
    rep = blowup_check(sol, (0.0, 0.0), [0.8, 0.4])
    import json

    data = json.loads(rep.to_json())
    assert data["verdict"] == "regular"
    assert len(data["radii"]) == len(data["residual"]) == len(data["k"])
