"""Lienard systems dx/dt = y - f(x), dy/dt = eps*(lam - p(x)): construction,
vanishing-order detection at the contact point and validation of the standing
assumptions (parabola-like critical curve, odd singularity order, slow flow
crossing the contact point, finite divergence integral).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from ._expr import RealExpr, parse_expression
from ._poly import as_rational, order_at_zero, rational_derivative, rational_multiply
from .errors import OrderDetectionError

__all__ = [
    "AssumptionCheck",
    "AssumptionReport",
    "LienardSystem",
    "detect_orders",
    "parse_expression",
    "validate",
]

ORDER_CAP = 12


@dataclass(frozen=True)
class AssumptionCheck:
    name: str
    passed: bool
    witness: float | None = None


@dataclass(frozen=True)
class AssumptionReport:
    n: int
    m: int
    checks: tuple[AssumptionCheck, ...]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[AssumptionCheck]:
        return [c for c in self.checks if not c.passed]


def detect_orders(f: RealExpr, p: RealExpr) -> tuple[int, int]:
    """Vanishing orders (n, m) of f and p at x = 0.

    Orders are read off the exact rational form of each expression (the
    supported grammar is closed under rational arithmetic, so this is the
    symbolic derivative test: n is the smallest k with f^(k)(0) != 0).
    Orders above ORDER_CAP, or identically zero expressions, are rejected:
    flat contact is outside the supported class.
    """
    orders = []
    for name, expr in (("f", f), ("p", p)):
        order = order_at_zero(as_rational(expr))
        if order is None or order > ORDER_CAP:
            raise OrderDetectionError(
                f"vanishing order of {name} at 0 is >= {ORDER_CAP + 1} (undetectable)"
            )
        orders.append(order)
    return orders[0], orders[1]


class LienardSystem:
    """The pair (f, p) with domain [x_min, x_max] containing the contact point 0.

    Immutable after construction; safe to share across workers. Rational
    coefficient arrays for the jitted kernels are precomputed here:
    ``g(x) = -p(x)`` and the divergence integrand ``f'(x)^2 / g(x)``.
    """

    def __init__(self, f: RealExpr, p: RealExpr, x_min: float, x_max: float):
        if not (x_min < 0.0 < x_max):
            raise ValueError(f"domain [{x_min}, {x_max}] must contain 0 strictly inside")
        self.f = f
        self.p = p
        self.x_min = float(x_min)
        self.x_max = float(x_max)
        self.n, self.m = detect_orders(f, p)
        self.f_prime = f.derivative()

        self._f_rat = as_rational(f)
        self._p_rat = as_rational(p)
        self._fp_rat = rational_derivative(self._f_rat)
        self._g_rat = (-self._p_rat[0], self._p_rat[1])
        self._integrand_rat = rational_multiply(
            rational_multiply(self._fp_rat, self._fp_rat),
            (self._g_rat[1], self._g_rat[0]),  # 1/g
        )

    @classmethod
    def from_text(cls, f_text: str, p_text: str, x_min: float, x_max: float) -> "LienardSystem":
        return cls(parse_expression(f_text), parse_expression(p_text), x_min, x_max)

    def f_at(self, x):
        num, den = self._f_rat
        return npoly.polyval(x, num) / npoly.polyval(x, den)

    def f_prime_at(self, x):
        num, den = self._fp_rat
        return npoly.polyval(x, num) / npoly.polyval(x, den)

    def p_at(self, x):
        num, den = self._p_rat
        return npoly.polyval(x, num) / npoly.polyval(x, den)

    def g_at(self, x):
        return -self.p_at(x)

    def __repr__(self) -> str:
        return (
            f"LienardSystem(f={str(self.f)!r}, p={str(self.p)!r}, "
            f"n={self.n}, m={self.m}, domain=[{self.x_min}, {self.x_max}])"
        )


def _sign_check(values: np.ndarray, xs: np.ndarray, want_positive: bool):
    with np.errstate(invalid="ignore"):
        bad = ~(values > 0.0) if want_positive else ~(values < 0.0)
    bad |= ~np.isfinite(values)
    if bad.any():
        return False, float(xs[np.argmax(bad)])
    return True, None


def validate(system: LienardSystem, grid_points: int = 512) -> AssumptionReport:
    """Check every standing assumption on a sign-sampling grid plus endpoints.

    Failures never raise; they become report entries so the caller can show
    all of them at once.
    """
    checks: list[AssumptionCheck] = []
    left = np.linspace(system.x_min, 0.0, grid_points + 1)[:-1]
    right = np.linspace(0.0, system.x_max, grid_points + 1)[1:]

    f0 = system.f_at(0.0)
    fp0 = system.f_prime_at(0.0)
    contact_ok = abs(f0) <= 1e-12 and abs(fp0) <= 1e-12
    checks.append(AssumptionCheck("contact_at_origin", contact_ok, None if contact_ok else 0.0))

    ok, witness = _sign_check(system.f_prime_at(right), right, want_positive=True)
    checks.append(AssumptionCheck("f_increasing_right_of_contact", ok, witness))
    ok, witness = _sign_check(system.f_prime_at(left), left, want_positive=False)
    checks.append(AssumptionCheck("f_decreasing_left_of_contact", ok, witness))

    ok_r, wit_r = _sign_check(system.p_at(right), right, want_positive=True)
    ok_l, wit_l = _sign_check(system.p_at(left), left, want_positive=False)
    checks.append(
        AssumptionCheck("slow_flow_toward_repelling_branch", ok_r and ok_l,
                        wit_r if not ok_r else wit_l)
    )

    checks.append(AssumptionCheck("contact_order_even", system.n % 2 == 0 and system.n >= 2))
    checks.append(AssumptionCheck("singularity_order_odd", system.m % 2 == 1))
    checks.append(AssumptionCheck("order_inequality_m_lt_2n_minus_2", system.m < 2 * (system.n - 1)))

    return AssumptionReport(n=system.n, m=system.m, checks=tuple(checks))
