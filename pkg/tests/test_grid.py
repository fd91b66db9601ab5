import json

import numpy as np
import pytest
import sympy as sp

from harnacklab.grid import (
    BoundaryTag,
    GridFunction,
    build_grid,
    gridfunction_from_csv,
    gridfunction_from_json,
    gridfunction_to_csv,
    gridfunction_to_json,
    integrate_weighted,
    weighted_h1_seminorm,
)


def _sym_integral(expr, shape="half", s=0):
    """Oracle: exact integral of x_n^s * expr over the domain via sympy."""
    x, y = sp.symbols("x y")
    y0 = 0 if shape == "half" else -1
    return float(sp.integrate(sp.integrate(y**s * expr, (x, -1, 1)), (y, y0, 1)))


def test_half_grid_counts_and_spacing():
    g = build_grid("half", 4, 2)
    assert g.n_nodes == 15
    assert np.sum(g.tags == BoundaryTag.PLANAR) == 5
    assert g.h1 == 0.5 and g.h2 == 0.5
    # the whole bottom row is planar, corners included
    assert set(g.planar_indices) == {g.node_index(i, 0) for i in range(5)}


def test_full_grid_counts():
    g = build_grid("full", 2, 2)
    assert g.n_nodes == 9
    assert np.sum(g.tags == BoundaryTag.OUTER) == 8
    assert np.sum(g.tags == BoundaryTag.INTERIOR) == 1
    assert np.sum(g.tags == BoundaryTag.PLANAR) == 0


def test_tag_partition():
    for shape, nx, ny in [("half", 6, 4), ("full", 5, 7), ("half", 3, 3)]:
        g = build_grid(shape, nx, ny)
        counts = (
            len(g.interior_indices) + len(g.planar_indices) + len(g.outer_indices)
        )
        assert counts == g.n_nodes
        assert len(np.intersect1d(g.interior_indices, g.outer_indices)) == 0
        assert len(np.intersect1d(g.planar_indices, g.outer_indices)) == 0


def test_node_ordering_is_xn_major():
    g = build_grid("half", 4, 2)
    k = g.node_index(3, 1)
    assert k == 1 * 5 + 3
    assert g.X1[k] == g.x1[3]
    assert g.XN[k] == g.xn[1]


def test_build_grid_rejects_bad_args():
    with pytest.raises(ValueError):
        build_grid("quarter", 4, 4)
    with pytest.raises(ValueError):
        build_grid("half", 1, 4)


def test_integrate_weight_alone_exact():
    # oracle: integral of x_n^2 over the half-rectangle is exactly 2/3
    x, y = sp.symbols("x y")
    exact = _sym_integral(sp.Integer(1), s=2)
    assert exact == pytest.approx(2.0 / 3.0, abs=1e-15)
    for nx, ny in [(4, 2), (7, 3), (64, 32)]:
        g = build_grid("half", nx, ny)
        f = GridFunction(g, np.ones(g.n_nodes))
        assert integrate_weighted(f, 2) == pytest.approx(exact, abs=1e-13)


def test_integrate_exact_for_per_axis_linear():
    # bilinear integrands are integrated exactly against the weight
    x, y = sp.symbols("x y")
    expr = 2 - x + 3 * y - 5 * x * y
    for s in (0, 1, 2):
        exact = _sym_integral(expr, s=s)
        g = build_grid("half", 5, 4)
        f = GridFunction.from_callable(g, lambda a, b: 2 - a + 3 * b - 5 * a * b)
        assert integrate_weighted(f, s) == pytest.approx(exact, rel=1e-13)


def test_integrate_refinement_order():
    x, y = sp.symbols("x y")
    exact = _sym_integral(sp.exp(x) * sp.cos(y), s=2)
    errs = []
    for nx in (8, 16, 32):
        g = build_grid("half", nx, nx // 2)
        f = GridFunction.from_callable(g, lambda a, b: np.exp(a) * np.cos(b))
        errs.append(abs(integrate_weighted(f, 2) - exact))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert orders.min() >= 1.8


def test_integrate_full_grid_s0_and_rejections():
    g = build_grid("full", 6, 6)
    f = GridFunction.from_callable(g, lambda a, b: a * b + 1.0)
    assert integrate_weighted(f, 0) == pytest.approx(4.0, abs=1e-13)
    with pytest.raises(ValueError):
        integrate_weighted(f, 2)
    with pytest.raises(ValueError):
        integrate_weighted(f, -0.5)
    fh = GridFunction.from_callable(build_grid("half", 4, 4), lambda a, b: a)
    with pytest.raises(ValueError):
        integrate_weighted(fh, 0, window=(0, 5, 0, 2))


def test_seminorm_pinned_values():
    # integral of x_n^2 * |grad x_n|^2 = integral of x_n^2 = 2/3, on any grid
    for nx, ny in [(4, 2), (10, 5), (16, 16)]:
        g = build_grid("half", nx, ny)
        f = GridFunction.from_callable(g, lambda a, b: b)
        assert weighted_h1_seminorm(f, 2) == pytest.approx(
            np.sqrt(2.0 / 3.0), abs=1e-13
        )
        fx = GridFunction.from_callable(g, lambda a, b: a)
        assert weighted_h1_seminorm(fx, 0) == pytest.approx(np.sqrt(2.0), abs=1e-13)


def test_seminorm_refinement_order():
    x, y = sp.symbols("x y")
    grad2 = sp.diff(sp.sin(x) * sp.cosh(y), x) ** 2 + sp.diff(
        sp.sin(x) * sp.cosh(y), y
    ) ** 2
    exact = np.sqrt(_sym_integral(grad2, s=2))
    errs = []
    for nx in (8, 16, 32):
        g = build_grid("half", nx, nx // 2)
        f = GridFunction.from_callable(g, lambda a, b: np.sin(a) * np.cosh(b))
        errs.append(abs(weighted_h1_seminorm(f, 2) - exact))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert orders.min() >= 1.8


def test_windowed_integral_matches_sub_domain():
    x, y = sp.symbols("x y")
    exact = float(
        sp.integrate(sp.integrate(y**2 * (x + y) ** 2, (x, -sp.Rational(1, 2), sp.Rational(1, 2))), (y, 0, sp.Rational(1, 2)))
    )
    vals = []
    for nx in (16, 32, 64):
        g = build_grid("half", nx, nx // 2)
        f = GridFunction.from_callable(g, lambda a, b: (a + b) ** 2)
        win = (nx // 4, 3 * nx // 4, 0, nx // 4)
        vals.append(integrate_weighted(f, 2, window=win))
    errs = [abs(v - exact) for v in vals]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert orders.min() >= 1.8
    assert vals[-1] == pytest.approx(exact, rel=5e-3)


def test_interpolation_reproduces_bilinear():
    g = build_grid("half", 9, 5)
    f = GridFunction.from_callable(g, lambda a, b: 1 + 2 * a - b + 0.5 * a * b)
    rng = np.random.default_rng(0)
    pts = np.column_stack(
        [rng.uniform(-1, 1, size=40), rng.uniform(0, 1, size=40)]
    )
    got = f.interpolate(pts)
    want = 1 + 2 * pts[:, 0] - pts[:, 1] + 0.5 * pts[:, 0] * pts[:, 1]
    np.testing.assert_allclose(got, want, atol=1e-13)
    with pytest.raises(ValueError):
        f.interpolate(np.array([[0.0, 1.5]]))


def test_csv_roundtrip(tmp_path):
    g = build_grid("half", 5, 3)
    f = GridFunction.from_callable(g, lambda a, b: np.sin(a) + b)
    path = tmp_path / "f.csv"
    gridfunction_to_csv(f, path)
    back = gridfunction_from_csv(path, "half", 5, 3)
    np.testing.assert_array_equal(back.values, f.values)


def test_json_roundtrip_and_validation():
    g = build_grid("full", 4, 6)
    f = GridFunction.from_callable(g, lambda a, b: a - b)
    text = gridfunction_to_json(f)
    back = gridfunction_from_json(text)
    assert back.grid == g
    np.testing.assert_array_equal(back.values, f.values)

    doc = json.loads(text)
    doc["values"] = doc["values"][:-1]
    with pytest.raises(ValueError):
        gridfunction_from_json(json.dumps(doc))
    del doc["nx"]
    with pytest.raises(ValueError):
        gridfunction_from_json(json.dumps(doc))


def test_gridfunction_validation():
    g = build_grid("half", 4, 2)
    with pytest.raises(ValueError):
        GridFunction(g, np.ones(7))
    bad = np.ones(g.n_nodes)
    bad[3] = np.nan
    with pytest.raises(ValueError):
        GridFunction(g, bad)
