"""Formal power series with coefficients in [0, +inf]: majorization order,
coefficient calculus, closed-form families, and the ODE closure that turns a
coefficient recurrence into a convergence-radius bound.

Coefficients are stored raw (a_k, so the series is sum a_k t^k); any k!
bookkeeping is confined to I/O.  Arithmetic is exact over ints and Fractions
and falls back to binary64 when a float enters, so order laws can be tested
as identities.  The conventions inf + x = inf and 0 * inf = 0 make the zero
series absorbing under products regardless of the other factor.

The ODE closure integrates dOmega/dt = M(t, Pi, Omega), dPi/dt =
N(t, Pi, Omega) order by order: the order-k coefficient of a right-hand
side built from sums, products, and closed-form substitution depends only
on solution coefficients of order <= k, so a_{k+1} = rhs_k / (k+1) is
well posed.  An infinite right-hand-side coefficient aborts the solve with
the offending order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "DEFAULT_ORDER",
    "ClosedFormMajorant",
    "InfiniteCoefficientError",
    "MajorantSeries",
    "RateExpr",
    "Var",
    "Const",
    "Sum",
    "Prod",
    "Apply",
    "DropConst",
    "SeriesLiteral",
    "add",
    "compose",
    "expr_from_dict",
    "export_series_csv",
    "integrate_rule",
    "majorizes",
    "mul",
    "ode_solve",
    "radius_estimate",
    "recenter",
]

DEFAULT_ORDER = 32

INF = math.inf


class InfiniteCoefficientError(RuntimeError):
    """A right-hand-side coefficient became infinite during an ODE solve."""

    def __init__(self, order: int):
        super().__init__(
            f"right-hand side has an infinite coefficient at order {order}"
        )
        self.order = order


def _coerce(x):
    """Validate and normalize a coefficient: int/Fraction exact, float lax."""
    if isinstance(x, bool):
        raise ValueError("coefficients must be numbers, not booleans")
    if isinstance(x, (int, Fraction)):
        if x < 0:
            raise ValueError(f"coefficients must be >= 0, got {x}")
        return x
    if isinstance(x, float):
        if math.isnan(x) or x < 0:
            raise ValueError(f"coefficients must be >= 0, got {x}")
        return x
    raise ValueError(f"unsupported coefficient type {type(x).__name__}")


def _add(a, b):
    if a == INF or b == INF:
        return INF
    return a + b


def _mul(a, b):
    # 0 * inf = 0: an identically-zero factor annihilates
    if a == 0 or b == 0:
        return 0
    if a == INF or b == INF:
        return INF
    return a * b


class MajorantSeries:
    """Truncated power series sum_{k<=N} a_k t^k with a_k in [0, +inf].

    Immutable.  Binary operations align at the smaller truncation order:
    beyond its truncation a series carries no information, so no zeros are
    invented.
    """

    __slots__ = ("coeffs", "N")

    def __init__(self, coeffs, N: int | None = None):
        coeffs = [_coerce(c) for c in coeffs]
        if N is None:
            N = max(len(coeffs) - 1, 1)
        N = int(N)
        if N < 1:
            raise ValueError("truncation order must be >= 1")
        if len(coeffs) < N + 1:
            coeffs = coeffs + [0] * (N + 1 - len(coeffs))
        object.__setattr__(self, "coeffs", tuple(coeffs[: N + 1]))
        object.__setattr__(self, "N", N)

    def __setattr__(self, *_):
        raise AttributeError("MajorantSeries is immutable")

    @classmethod
    def zero(cls, N: int = DEFAULT_ORDER) -> "MajorantSeries":
        return cls([0], N)

    @classmethod
    def constant(cls, c, N: int = DEFAULT_ORDER) -> "MajorantSeries":
        return cls([c], N)

    @classmethod
    def variable(cls, N: int = DEFAULT_ORDER) -> "MajorantSeries":
        """The series t."""
        return cls([0, 1], N)

    def __eq__(self, other):
        if not isinstance(other, MajorantSeries):
            return NotImplemented
        return self.N == other.N and all(
            a == b for a, b in zip(self.coeffs, other.coeffs)
        )

    def __hash__(self):
        return hash((self.N, self.coeffs))

    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __repr__(self):
        head = ", ".join(str(c) for c in self.coeffs[:5])
        tail = ", ..." if self.N >= 5 else ""
        return f"MajorantSeries([{head}{tail}], N={self.N})"

    def to_json(self) -> str:
        return json.dumps(
            {"N": self.N, "coeffs": [_num_to_token(c) for c in self.coeffs]},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "MajorantSeries":
        blob = json.loads(text)
        return cls([_num_from_token(c) for c in blob["coeffs"]], blob["N"])


def _num_to_token(c):
    if c == INF:
        return "inf"
    if isinstance(c, Fraction):
        return str(c) if c.denominator != 1 else c.numerator
    return c


def _num_from_token(tok):
    if isinstance(tok, str):
        if tok == "inf":
            return INF
        return Fraction(tok)
    if isinstance(tok, float) and not tok.is_integer():
        return tok
    if isinstance(tok, float):
        return int(tok)
    return tok


def add(f: MajorantSeries, g: MajorantSeries) -> MajorantSeries:
    """Coefficient-wise sum; majorizes the sum and difference of sources."""
    N = min(f.N, g.N)
    return MajorantSeries(
        [_add(a, b) for a, b in zip(f.coeffs, g.coeffs)], N
    )


def mul(f: MajorantSeries, g: MajorantSeries) -> MajorantSeries:
    """Truncated Cauchy product; majorizes the product of the sources."""
    N = min(f.N, g.N)
    out = []
    for k in range(N + 1):
        acc = 0
        for j in range(k + 1):
            acc = _add(acc, _mul(f.coeffs[j], g.coeffs[k - j]))
        out.append(acc)
    return MajorantSeries(out, N)


def majorizes(g: MajorantSeries, f: MajorantSeries) -> bool:
    """True iff f_k <= g_k for every order up to the common truncation."""
    N = min(f.N, g.N)
    return all(f.coeffs[k] <= g.coeffs[k] for k in range(N + 1))


def integrate_rule(g: MajorantSeries, C) -> MajorantSeries:
    """t*g(t) + C: majorizes any antiderivative of a g-majorized function
    whose value at 0 is bounded by C."""
    C = _coerce(C)
    return MajorantSeries([C] + list(g.coeffs[: g.N]), g.N)


def compose(g: MajorantSeries, f: MajorantSeries) -> MajorantSeries:
    """Formal substitution g(f(t)), requiring f(0) = 0.

    With a vanishing inner constant term the truncated coefficients are
    exact; Horner evaluation keeps the cost at N products.
    """
    if f.coeffs[0] != 0:
        raise ValueError(
            "composition needs a vanishing inner constant term, "
            f"got f(0) = {f.coeffs[0]}"
        )
    N = min(g.N, f.N)
    fi = MajorantSeries(list(f.coeffs[: N + 1]), N)
    res = MajorantSeries.constant(g.coeffs[N], N)
    for k in range(N - 1, -1, -1):
        res = add(mul(res, fi), MajorantSeries.constant(g.coeffs[k], N))
    return res


# ---------------------------------------------------------------------------
# closed-form families


def _is_rational(*xs) -> bool:
    return all(isinstance(x, (int, Fraction)) for x in xs)


@dataclass(frozen=True)
class ClosedFormMajorant:
    """Closed-form series family expandable to any order.

    geometric: C/(R - t), coefficients C/R^{k+1};
    exponential: C*e^{t/R}, coefficients C/(R^k k!);
    polynomial: explicit nonnegative coefficient tuple.
    """

    family: str
    C: object = None
    R: object = None
    coeffs: tuple = None

    def __post_init__(self):
        if self.family in ("geometric", "exponential"):
            C = _coerce(self.C)
            R = _coerce(self.R)
            if C <= 0 or C == INF:
                raise ValueError(f"scale C must be positive finite, got {C}")
            if R <= 0 or R == INF:
                raise ValueError(f"radius R must be positive finite, got {R}")
            object.__setattr__(self, "C", C)
            object.__setattr__(self, "R", R)
            if self.coeffs is not None:
                raise ValueError(f"{self.family} family takes C, R only")
        elif self.family == "polynomial":
            if self.coeffs is None:
                raise ValueError("polynomial family needs coefficients")
            if self.C is not None or self.R is not None:
                raise ValueError("polynomial family takes coefficients only")
            cs = tuple(_coerce(c) for c in self.coeffs)
            if any(c == INF for c in cs):
                raise ValueError("polynomial coefficients must be finite")
            object.__setattr__(self, "coeffs", cs)
        else:
            raise ValueError(f"unknown closed-form family {self.family!r}")

    @classmethod
    def geometric(cls, C, R) -> "ClosedFormMajorant":
        return cls("geometric", C, R)

    @classmethod
    def exponential(cls, C, R) -> "ClosedFormMajorant":
        return cls("exponential", C, R)

    @classmethod
    def polynomial(cls, coeffs) -> "ClosedFormMajorant":
        return cls("polynomial", coeffs=tuple(coeffs))

    def series(self, N: int = DEFAULT_ORDER) -> MajorantSeries:
        if self.family == "geometric":
            if _is_rational(self.C, self.R):
                C, R = Fraction(self.C), Fraction(self.R)
                out = [C / R ** (k + 1) for k in range(N + 1)]
            else:
                out = [self.C / self.R ** (k + 1) for k in range(N + 1)]
            return MajorantSeries(out, N)
        if self.family == "exponential":
            if _is_rational(self.C, self.R):
                C, R = Fraction(self.C), Fraction(self.R)
                out = [C / (R**k * math.factorial(k)) for k in range(N + 1)]
            else:
                out = [
                    self.C / (self.R**k * math.factorial(k))
                    for k in range(N + 1)
                ]
            return MajorantSeries(out, N)
        return MajorantSeries(list(self.coeffs), N)


def recenter(cf: ClosedFormMajorant, a) -> ClosedFormMajorant:
    """Re-expand the closed form at t = a >= 0, exactly within the family.

    geometric(C, R) -> geometric(C, R - a) (pole at a = R rejected);
    exponential(C, R) -> exponential(C e^{a/R}, R);
    polynomial -> binomial shift of the coefficients.
    """
    a = _coerce(a)
    if a == INF:
        raise ValueError("recenter offset must be finite")
    if cf.family == "geometric":
        if a >= cf.R:
            raise ValueError(
                f"recenter offset {a} reaches the pole at R = {cf.R}"
            )
        return ClosedFormMajorant.geometric(cf.C, cf.R - a)
    if cf.family == "exponential":
        if a == 0:
            return cf
        scale = cf.C * math.exp(a / cf.R)
        return ClosedFormMajorant.exponential(scale, cf.R)
    shifted = []
    for j in range(len(cf.coeffs)):
        acc = 0
        for k in range(j, len(cf.coeffs)):
            acc += math.comb(k, j) * a ** (k - j) * cf.coeffs[k]
        shifted.append(acc)
    return ClosedFormMajorant.polynomial(shifted)


# ---------------------------------------------------------------------------
# radius diagnostics


def radius_estimate(f: MajorantSeries, method: str = "root") -> float:
    """Convergence-radius estimate from the coefficient tail.

    root: 1/median(a_k^{1/k}) over the last three nonzero orders;
    ratio: median of a_k/a_{k+1} over consecutive nonzero pairs.
    A vanishing tail (the last three orders zero) reads as polynomial and
    returns +inf, as do estimates beyond 1e6; an infinite coefficient
    collapses the radius to 0.
    """
    if method not in ("root", "ratio"):
        raise ValueError("method must be 'root' or 'ratio'")
    a = f.coeffs
    nz = [k for k in range(1, len(a)) if a[k] != 0]
    if not nz or nz[-1] <= f.N - 3:
        return INF
    if any(a[k] == INF for k in nz):
        return 0.0
    if method == "root":
        if len(nz) < 6:
            raise ValueError(
                f"root estimate needs >= 6 nonzero orders, got {len(nz)}"
            )
        vals = sorted(float(a[k]) ** (1.0 / k) for k in nz[-3:])
        r = 1.0 / vals[1]
    else:
        pairs = [(j, k) for j, k in zip(nz, nz[1:]) if k == j + 1]
        if len(pairs) < 2:
            raise ValueError(
                f"ratio estimate needs >= 2 consecutive nonzero pairs, "
                f"got {len(pairs)}"
            )
        quots = sorted(float(a[j]) / float(a[k]) for j, k in pairs)
        r = quots[len(quots) // 2]
    return INF if r > 1e6 else float(r)


# ---------------------------------------------------------------------------
# right-hand-side description language


class RateExpr:
    """Expression in the variables t, pi, omega, evaluated on series."""

    def evaluate(self, ctx: dict, N: int) -> MajorantSeries:
        raise NotImplementedError


@dataclass(frozen=True)
class Var(RateExpr):
    name: str

    def __post_init__(self):
        if self.name not in ("t", "pi", "omega"):
            raise ValueError(f"unknown variable {self.name!r}")

    def evaluate(self, ctx, N):
        if self.name == "t":
            return MajorantSeries.variable(N)
        return ctx[self.name]


@dataclass(frozen=True)
class Const(RateExpr):
    value: object

    def __post_init__(self):
        object.__setattr__(self, "value", _coerce(self.value))

    def evaluate(self, ctx, N):
        return MajorantSeries.constant(self.value, N)


class _Nary(RateExpr):
    def __init__(self, *args: RateExpr):
        if not args:
            raise ValueError("need at least one operand")
        if not all(isinstance(a, RateExpr) for a in args):
            raise ValueError("operands must be rate expressions")
        self.args = tuple(args)


class Sum(_Nary):
    def evaluate(self, ctx, N):
        out = self.args[0].evaluate(ctx, N)
        for arg in self.args[1:]:
            out = add(out, arg.evaluate(ctx, N))
        return out


class Prod(_Nary):
    def evaluate(self, ctx, N):
        out = self.args[0].evaluate(ctx, N)
        for arg in self.args[1:]:
            out = mul(out, arg.evaluate(ctx, N))
        return out


@dataclass(frozen=True)
class Apply(RateExpr):
    """Closed form applied to an inner expression.

    A nonzero inner constant term is absorbed by recentering the closed
    form, then composing with the remainder; a geometric form whose pole is
    reached by the constant yields the all-infinite series, which an ODE
    solve reports as an infinite coefficient.
    """

    cf: ClosedFormMajorant
    inner: RateExpr

    def evaluate(self, ctx, N):
        s = self.inner.evaluate(ctx, N)
        c0 = s.coeffs[0]
        cf = self.cf
        if c0 != 0:
            if cf.family == "geometric" and c0 >= cf.R:
                return MajorantSeries([INF] * (N + 1), N)
            cf = recenter(cf, c0)
            s = MajorantSeries([0] + list(s.coeffs[1:]), s.N)
        return compose(cf.series(N), s)


@dataclass(frozen=True)
class DropConst(RateExpr):
    """Inner expression with its constant term removed (f - f(0))."""

    inner: RateExpr

    def evaluate(self, ctx, N):
        s = self.inner.evaluate(ctx, N)
        return MajorantSeries([0] + list(s.coeffs[1:]), s.N)


class SeriesLiteral(RateExpr):
    def __init__(self, coeffs):
        self.series_value = MajorantSeries(coeffs)

    def evaluate(self, ctx, N):
        return MajorantSeries(list(self.series_value.coeffs), N)


def expr_from_dict(d) -> RateExpr:
    """Build a rate expression from its JSON form.

    Nodes: {"var": name}, {"const": c}, {"sum": [...]}, {"prod": [...]},
    {"apply": {family...}, "to": node}, {"drop_const": node},
    {"series": [...]}.  Numbers may be ints, floats, "p/q" strings, or
    "inf".
    """
    if not isinstance(d, dict) or len(d) == 0:
        raise ValueError(f"expected an expression object, got {d!r}")
    keys = set(d)
    if keys == {"var"}:
        return Var(d["var"])
    if keys == {"const"}:
        return Const(_num_from_token(d["const"]))
    if keys == {"sum"}:
        return Sum(*[expr_from_dict(x) for x in d["sum"]])
    if keys == {"prod"}:
        return Prod(*[expr_from_dict(x) for x in d["prod"]])
    if keys == {"apply", "to"}:
        return Apply(_closed_form_from_dict(d["apply"]),
                     expr_from_dict(d["to"]))
    if keys == {"drop_const"}:
        return DropConst(expr_from_dict(d["drop_const"]))
    if keys == {"series"}:
        return SeriesLiteral([_num_from_token(c) for c in d["series"]])
    raise ValueError(f"unknown expression node with keys {sorted(keys)}")


def _closed_form_from_dict(d) -> ClosedFormMajorant:
    if not isinstance(d, dict) or "family" not in d:
        raise ValueError(f"expected a closed-form object, got {d!r}")
    family = d["family"]
    if family == "polynomial":
        extra = set(d) - {"family", "coeffs"}
        if extra:
            raise ValueError(f"unknown closed-form keys {sorted(extra)}")
        return ClosedFormMajorant.polynomial(
            [_num_from_token(c) for c in d["coeffs"]]
        )
    extra = set(d) - {"family", "C", "R"}
    if extra:
        raise ValueError(f"unknown closed-form keys {sorted(extra)}")
    return ClosedFormMajorant(
        family, _num_from_token(d["C"]), _num_from_token(d["R"])
    )


# ---------------------------------------------------------------------------
# the ODE closure


def _div(a, k: int):
    if a == INF:
        return INF
    if isinstance(a, int):
        return Fraction(a, k)
    if isinstance(a, Fraction):
        return a / k
    return a / k


def ode_solve(M: RateExpr | None, N: RateExpr | None, Pi0, Omega0,
              order: int = DEFAULT_ORDER):
    """Integrate dOmega/dt = M(t, Pi, Omega), dPi/dt = N(t, Pi, Omega).

    Returns (Pi, Omega) as series through the given order.  The order-k
    right-hand-side coefficient only involves solution coefficients of
    order <= k, so each step is a finite division; an infinite coefficient
    at any used order aborts with InfiniteCoefficientError.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    Pi0 = _coerce(Pi0)
    Omega0 = _coerce(Omega0)
    if Pi0 == INF or Omega0 == INF:
        raise ValueError("initial values must be finite")
    pi = [Pi0]
    om = [Omega0]
    for k in range(order):
        ctx = {
            "pi": MajorantSeries(list(pi), order),
            "omega": MajorantSeries(list(om), order),
        }
        mk = M.evaluate(ctx, order).coeffs[k] if M is not None else 0
        nk = N.evaluate(ctx, order).coeffs[k] if N is not None else 0
        if mk == INF or nk == INF:
            raise InfiniteCoefficientError(k)
        om.append(_div(mk, k + 1))
        pi.append(_div(nk, k + 1))
    return MajorantSeries(pi, order), MajorantSeries(om, order)


def export_series_csv(f: MajorantSeries, path) -> None:
    """One row per order: k, a_k, a_k * k! (the derivative-scale value)."""
    with open(path, "w") as fh:
        fh.write("k,a_k,a_k_times_kfact\n")
        for k, c in enumerate(f.coeffs):
            scaled = _mul(c, math.factorial(k))
            fh.write(f"{k},{repr(float(c))},{repr(float(scaled))}\n")
