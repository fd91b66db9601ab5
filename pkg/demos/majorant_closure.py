"""Majorant power-series calculus and the ODE closure benchmark.

Coefficients live in [0, +inf] with exact rational arithmetic whenever the
inputs are rational.  The Riccati benchmark dOmega/dt = Omega^2, Omega(0)=1
has the geometric series solution sum t^k, whose unit radius both tail
estimators must recover; crossing the pole of a closed-form majorant makes
the coefficients infinite, which the integrator reports by order.
"""

from fractions import Fraction

from harnacklab.majorant import (Apply, ClosedFormMajorant, DropConst,
                                 InfiniteCoefficientError, MajorantSeries,
                                 Prod, Var, mul, ode_solve, radius_estimate)


def main():
    print("-- algebra: (sum t^k)^2 has coefficients k + 1 --")
    geo = MajorantSeries([Fraction(1)] * 9)
    sq = mul(geo, geo)
    print("  coefficients:", [str(c) for c in sq.coeffs])

    print("-- Riccati closure: dOmega/dt = Omega^2, Omega(0) = 1 --")
    _, omega = ode_solve(Prod(Var("omega"), Var("omega")), None, 0, 1,
                         order=32)
    print("  first coefficients:", [str(c) for c in omega.coeffs[:8]])
    print(f"  radius estimates: root = "
          f"{radius_estimate(omega, method='root'):.3f}, "
          f"ratio = {radius_estimate(omega, method='ratio'):.3f} (exact 1)")

    print("-- pole crossing is reported by order --")
    # C/(R - x) applied to 2 + Omega: the inner constant 2 sits past the
    # pole at R = 1, so every coefficient is infinite from order 0 on
    rate = Apply(ClosedFormMajorant("geometric", C=1, R=1),
                 DropConst(Var("omega")))
    shifted = Apply(ClosedFormMajorant("geometric", C=1, R=1), Var("omega"))
    try:
        ode_solve(shifted, None, 0, 2, order=8)
    except InfiniteCoefficientError as err:
        print(f"  Omega0 = 2 crosses the pole: infinite coefficient "
              f"at order {err.order}")
    _, omega = ode_solve(rate, None, 0, 2, order=8)
    print("  dropping the constant keeps it finite:",
          [str(c) for c in omega.coeffs[:5]])


if __name__ == "__main__":
    main()
