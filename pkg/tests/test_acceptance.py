"""End-to-end acceptance checks, one per shipped guarantee.

Each test drives a full pipeline at its stated sizes and tolerances and
prints a single ``criterion NN: PASS/FAIL ...`` line carrying the measured
quantities, so the terminal log shows every bound next to its measurement.
Tests share expensive solves through a cache; every tolerance is asserted,
never rounded in the pipeline's favour.
"""

import math
import random
import time
from fractions import Fraction
from functools import lru_cache

import numpy as np

from harnacklab.grid import GridFunction, build_grid, integrate_weighted
from harnacklab.harnack import (
    analyticity_scan,
    campanato_scan,
    holder_seminorm,
    ratio,
    ratio_residual,
)
from harnacklab.majorant import (
    MajorantSeries,
    Prod,
    Var,
    add,
    compose,
    majorizes,
    mul,
    ode_solve,
    radius_estimate,
)
from harnacklab.obstacle import blowup_check, extract_free_boundary, solve_obstacle
from harnacklab.straighten import CurveModel, pullback_function, transform_coefficients
from harnacklab.weighted_solver import (
    BoundaryData,
    CoefficientField,
    VectorField,
    assemble_weighted,
    poincare_ratio,
    residual_norm,
    solve,
)


def _report(n: int, ok: bool, detail: str) -> None:
    print(f"criterion {n:02d}: {'PASS' if ok else 'FAIL'} - {detail}", flush=True)


def _radial_contact(a: float):
    """Dirichlet data whose obstacle solution has the circular contact set r <= a."""

    def fn(x1, xn):
        r = np.maximum(np.hypot(x1, xn), a)
        return (r * r - a * a) / 4.0 - (a * a / 2.0) * np.log(r / a)

    return fn


@lru_cache(maxsize=None)
def _radial_pipeline(n: int):
    """PSOR solve + free-boundary extraction for the radius-0.4 benchmark."""
    g = build_grid("full", n, n)
    bd = BoundaryData.from_callable(g, _radial_contact(0.4))
    sol = solve_obstacle(g, CoefficientField.identity(g), bd)
    fb = extract_free_boundary(sol, axis="xn")
    return sol, fb


# ---------------------------------------------------------------------------
# 1. degenerate-solver convergence on the weighted-harmonic quadratic


def test_criterion_01_weighted_solver_convergence():
    exact = lambda x1, xn: 3.0 * x1**2 - xn**2  # noqa: E731

    errs, hs, times = [], [], []
    for n1, n2 in ((32, 16), (64, 32), (128, 64)):
        g = build_grid("half", n1, n2)
        t0 = time.perf_counter()
        op = assemble_weighted(g, CoefficientField.identity(g), 2,
                               planar_dirichlet=False)
        bd = BoundaryData.from_callable(g, exact, include_planar=False)
        sol = solve(op, np.zeros(g.n_nodes), bd)
        times.append(time.perf_counter() - t0)
        wex = exact(g.X1, g.XN)
        num = integrate_weighted(GridFunction(g, (sol.values - wex) ** 2), 0)
        den = integrate_weighted(GridFunction(g, wex**2), 0)
        errs.append(math.sqrt(num / den))
        hs.append(g.h1)
    order = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])

    ok = errs[1] < 5e-2 and order >= 1.8 and max(times) < 30.0
    _report(1, ok, f"rel_err(64x32)={errs[1]:.3e} (<5e-2), "
                   f"order={order:.2f} (>=1.8), max_time={max(times):.1f}s (<30s)")
    assert ok


# ---------------------------------------------------------------------------
# 2. weighted Poincare inequality on random outer-vanishing samples


def test_criterion_02_weighted_poincare_inequality():
    g = build_grid("half", 64, 32)
    rng = np.random.default_rng(20260814)
    # modes vanish on the lateral and top boundaries but are free at the
    # planar row, exactly the class the inequality must control
    basis = [
        np.sin(m * np.pi * (1.0 + g.X1) / 2.0) * np.cos((l - 0.5) * np.pi * g.XN)
        for m in range(1, 5)
        for l in range(1, 5)
    ]
    worst = 0.0
    for _ in range(100):
        w = np.zeros(g.n_nodes)
        for b in basis:
            w += rng.standard_normal() * b
        r = poincare_ratio(GridFunction(g, w))
        assert r is not None
        worst = max(worst, r)

    ok = worst <= 4.2
    _report(2, ok, f"worst int w^2 / int xn^2|grad w|^2 = {worst:.3f} "
                   f"over 100 samples (<=4.2)")
    assert ok


# ---------------------------------------------------------------------------
# 3. obstacle radial benchmark: radius, complementarity, sweep budget


def test_criterion_03_obstacle_radial_benchmark():
    sol, fb = _radial_pipeline(128)
    h = sol.grid.h1
    dev = float(np.abs(np.hypot(fb.samples[:, 0], fb.samples[:, 1]) - 0.4).max())

    ok = (dev <= 2.0 * h
          and sol.complementarity_residual <= 1e-8
          and sol.iterations < 100_000)
    _report(3, ok, f"radius dev={dev:.2e} (<=2h={2*h:.2e}), "
                   f"complementarity={sol.complementarity_residual:.2e} (<=1e-8), "
                   f"sweeps={sol.iterations} (<1e5)")
    assert ok


# ---------------------------------------------------------------------------
# 4. blow-up classification on the half-plane benchmark


def test_criterion_04_blowup_halfplane_benchmark():
    g = build_grid("full", 128, 128)
    bd = BoundaryData.from_callable(
        g, lambda x1, xn: 0.5 * np.maximum(xn, 0.0) ** 2)
    sol = solve_obstacle(g, CoefficientField.identity(g), bd)
    rep = blowup_check(sol, (0.0, 0.0), [0.8, 0.6, 0.4])

    k_dev = max(abs(k - 1.0) for k in rep.ks)
    e_dev = max(math.hypot(e[0], e[1] - 1.0) for e in rep.directions)
    res = max(rep.residuals)
    ok = (rep.verdict == "regular" and k_dev <= 0.05
          and e_dev <= 0.05 and res < 1e-3)
    _report(4, ok, f"verdict={rep.verdict}, |k-1|={k_dev:.2e} (<=0.05), "
                   f"|e-e_n|={e_dev:.2e} (<=0.05), residual={res:.2e} (<1e-3)")
    assert ok


# ---------------------------------------------------------------------------
# 5. ratio identity residual on the exact pair (2 x1 xn, xn)


def test_criterion_05_ratio_identity_residual():
    # With identity coefficients and the matched flux loads f_i = A grad u_i
    # the discrete identity closes to round-off (both members are exactly
    # representable), so decay is certified either by an all-round-off
    # residual or by an order >= 1.8 fit when the residual is nonzero.
    residuals, hs = [], []
    for n1, n2 in ((32, 16), (64, 32), (128, 64)):
        g = build_grid("half", n1, n2)
        u1 = GridFunction(g, 2.0 * g.X1 * g.XN)
        u2 = GridFunction(g, g.XN.copy())
        w = ratio(u1, u2)
        f1 = VectorField.from_callable(g, lambda x1, xn: (2.0 * xn, 2.0 * x1))
        f2 = VectorField.from_callable(
            g, lambda x1, xn: (np.zeros_like(x1), np.ones_like(xn)))
        residuals.append(
            ratio_residual(w, u2, CoefficientField.identity(g), f1, f2))
        hs.append(g.h1)

    if max(residuals) < 1e-9:
        ok = True
        detail = (f"round-off branch: max residual={max(residuals):.2e} "
                  f"(<1e-9) across three refinements")
    else:
        order = float(np.polyfit(np.log(hs), np.log(residuals), 1)[0])
        ok = order >= 1.8
        detail = f"order branch: order={order:.2f} (>=1.8)"
    _report(5, ok, detail)
    assert ok


# ---------------------------------------------------------------------------
# 6. straightening contract: pulled-back solution satisfies the chart equation


def test_criterion_06_straightening_residual_order():
    def u(y1, yn):
        return 3.0 * y1**2 * yn - yn**3

    cm = CurveModel.from_function(
        lambda t: 0.1 * np.sin(np.pi * np.asarray(t, dtype=float)),
        derivs=[lambda t: 0.1 * np.pi * np.cos(np.pi * np.asarray(t, dtype=float))],
    )
    norms, hs = [], []
    for n1, n2 in ((16, 8), (32, 16), (64, 32)):
        g = build_grid("half", n1, n2)
        A = transform_coefficients(lambda y1, yn: (1.0, 0.0, 1.0), cm, g)
        op = assemble_weighted(g, A, 0, planar_dirichlet=True)
        ut = pullback_function(u, cm, g)
        norms.append(residual_norm(op, ut, np.zeros(g.n_nodes)))
        hs.append(g.h1)
    order = float(np.polyfit(np.log(hs), np.log(norms), 1)[0])

    ok = order >= 1.8
    _report(6, ok, f"pullback residual order={order:.2f} (>=1.8) "
                   f"for the 0.1*sin(pi x1) graph")
    assert ok


# ---------------------------------------------------------------------------
# 7. Campanato discrimination at alpha = 0.5


def test_criterion_07_campanato_discrimination():
    g = build_grid("half", 256, 128)
    t0 = time.perf_counter()

    quad = GridFunction(g, 3.0 * g.X1**2 - g.XN**2)
    rep_decay = campanato_scan(quad, None, 0.5, 0.5, 5)
    rough = GridFunction(g, np.abs(g.X1) ** 1.3)
    rep_growth = campanato_scan(rough, None, 0.5, 0.5, 5)
    elapsed = time.perf_counter() - t0

    # sigma_0 measures the raw function before any linear part has been
    # stripped, so the first ratio compares a plain norm with a fitted
    # excess; the resolved decay regime is the ratios between remainders
    # that have both been through a fit.
    mean_decay = float(np.mean(rep_decay.ratios()[1:]))
    mean_growth = float(np.mean(rep_growth.ratios()[1:]))

    ok = (0.57 <= mean_decay <= 0.85 and mean_growth >= 1.05
          and elapsed < 60.0)
    _report(7, ok, f"quadratic mean ratio={mean_decay:.3f} (in [0.57,0.85], "
                   f"target 2^-0.5={2**-0.5:.3f}), "
                   f"|x1|^1.3 mean ratio={mean_growth:.3f} (>=1.05), "
                   f"time={elapsed:.1f}s (<60s)")
    assert ok


# ---------------------------------------------------------------------------
# 8. majorant algebra exactness against brute-force oracles, plus closure


def _brute_mul(a, b):
    n = len(a)
    return [sum(a[j] * b[k - j] for j in range(k + 1)) for k in range(n)]


def _brute_compose(outer, inner):
    n = len(outer)
    out = [Fraction(0)] * n
    power = [Fraction(1)] + [Fraction(0)] * (n - 1)
    for k in range(n):
        for i in range(n):
            out[i] += outer[k] * power[i]
        power = [sum(power[j] * inner[i - j] for j in range(i + 1))
                 for i in range(n)]
    return out


def _random_rationals(rnd, n):
    return [Fraction(rnd.randrange(0, 5), rnd.randrange(1, 7)) for _ in range(n)]


def test_criterion_08_majorant_algebra_exactness_and_closure():
    rnd = random.Random(20260814)

    exact_cases = 0
    for _ in range(200):
        n = rnd.randrange(1, 9)  # truncation order N <= 8
        a = _random_rationals(rnd, n + 1)
        b = _random_rationals(rnd, n + 1)
        f, gser = MajorantSeries(a), MajorantSeries(b)
        assert list(add(f, gser).coeffs) == [x + y for x, y in zip(a, b)]
        assert list(mul(f, gser).coeffs) == _brute_mul(a, b)
        inner = [Fraction(0)] + b[1:]
        assert list(compose(f, MajorantSeries(inner)).coeffs) == \
            _brute_compose(a, inner)
        exact_cases += 1

    closure_cases = 0
    for _ in range(1000):
        n = rnd.randrange(3, 9)
        F = _random_rationals(rnd, n + 1)
        G = [Fraction(0)] + _random_rationals(rnd, n)
        f = [c * Fraction(rnd.randrange(0, 4), 3) for c in F]
        gsmall = [c * Fraction(rnd.randrange(0, 4), 3) for c in G]
        Fs, Gs = MajorantSeries(F), MajorantSeries(G)
        fs, gs = MajorantSeries(f), MajorantSeries(gsmall)
        assert majorizes(Fs, fs) and majorizes(Gs, gs)
        assert majorizes(add(Fs, Gs), add(fs, gs))
        assert majorizes(mul(Fs, Gs), mul(fs, gs))
        assert majorizes(compose(Fs, Gs), compose(fs, gs))
        closure_cases += 1

    ok = exact_cases == 200 and closure_cases == 1000
    _report(8, ok, f"{exact_cases} rational add/mul/compose cases match "
                   f"brute force exactly; closure held on {closure_cases} cases")
    assert ok


# ---------------------------------------------------------------------------
# 9. majorant ODE: the geometric-series benchmark


def test_criterion_09_majorant_ode_geometric():
    t0 = time.perf_counter()
    _, omega = ode_solve(Prod(Var("omega"), Var("omega")), None, 0, 1, order=32)
    r_root = radius_estimate(omega, method="root")
    r_ratio = radius_estimate(omega, method="ratio")
    elapsed = time.perf_counter() - t0

    exact_orders = all(omega.coeffs[k] == 1 for k in range(21))
    ok = (exact_orders
          and abs(r_root - 1.0) <= 0.15 and abs(r_ratio - 1.0) <= 0.15
          and elapsed < 1.0)
    _report(9, ok, f"a_k == 1 exactly for k<=20: {exact_orders}, "
                   f"radius root={r_root:.3f} ratio={r_ratio:.3f} (1 +/- 15%), "
                   f"time={elapsed:.2f}s (<1s)")
    assert ok


# ---------------------------------------------------------------------------
# 10. analyticity scan end-to-end on the circular free boundary


def test_criterion_10_analyticity_scan_stability():
    radii = {}
    for n in (128, 256):
        _, fb = _radial_pipeline(n)
        scan = analyticity_scan(CurveModel.from_curve(fb), kmax=8, window=0.25)
        radii[n] = scan.radius
    ratio_rr = radii[256] / radii[128]

    ok = (radii[128] > 0.0 and radii[256] > 0.0
          and math.isfinite(radii[128]) and math.isfinite(radii[256])
          and 0.75 <= ratio_rr <= 1.0 / 0.75)
    _report(10, ok, f"radius(128^2)={radii[128]:.3f}, "
                    f"radius(256^2)={radii[256]:.3f}, "
                    f"stability ratio={ratio_rr:.3f} (in [0.75,1.33]; "
                    f"continuum value 0.4)")
    assert ok


# ---------------------------------------------------------------------------
# 11. subdivision property of the Hoelder seminorm


def test_criterion_11_seminorm_subdivision():
    g = build_grid("half", 32, 16)
    rng = np.random.default_rng(77)
    alpha = 0.5
    bound = 2 ** (1.0 - alpha) * 1.10

    worst = 0.0
    for _ in range(200):
        w = np.zeros(g.n_nodes)
        for m in range(4):
            for l in range(4):
                w += (rng.standard_normal()
                      * np.cos(m * np.pi * g.X1 / 2 + rng.uniform(0, 2 * np.pi))
                      * np.cos(l * np.pi * g.XN + rng.uniform(0, 2 * np.pi)))
        f = GridFunction(g, w)
        s_full = holder_seminorm(f, alpha)
        s_left = holder_seminorm(f, alpha, region=(-1.0, 0.0, 0.0, 1.0))
        s_right = holder_seminorm(f, alpha, region=(0.0, 1.0, 0.0, 1.0))
        worst = max(worst, s_full / max(s_left, s_right))

    ok = worst <= bound
    _report(11, ok, f"worst full/half seminorm ratio={worst:.3f} "
                    f"(<=2^(1-alpha)*1.10={bound:.3f}) over 200 samples")
    assert ok
