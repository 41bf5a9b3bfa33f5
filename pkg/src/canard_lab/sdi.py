"""Slow divergence integrals along the two branches of the critical curve.

For a validated system the evaluator computes branch roots omega1(s) > 0 and
alpha1(s) < 0 with f(root) = s, the integrals

    I_minus(s) = integral of f'(x)^2/g(x) from 0 to omega1(s)   (< 0)
    I_plus(s)  = integral of f'(x)^2/g(x) from alpha1(s) to 0   (> 0)

with g(x) = -p(x), their closed-form derivatives and the total I(s).
"""

from __future__ import annotations

from . import _kernels as K
from .errors import AccuracyError, InvalidSystemError, RangeError, SingularIntegrandError
from .model import LienardSystem, validate

__all__ = ["SdiEvaluator", "ATTRACTING", "REPELLING"]

ATTRACTING = "attracting"
REPELLING = "repelling"


class SdiEvaluator:
    """Memoizing evaluator for the slow divergence integrals of one system.

    Results are pure functions of the height s at the configured tolerances,
    so the evaluator can be shared read-only across workers: concurrent calls
    return the same values as sequential ones (the memo table is only an
    optimization).
    """

    def __init__(
        self,
        system: LienardSystem,
        quad_abs_tol: float = 1e-12,
        quad_rel_tol: float = 1e-10,
        max_subdivisions: int = 10**6,
    ):
        report = validate(system)
        if not report.all_passed:
            names = ", ".join(c.name for c in report.failed())
            raise InvalidSystemError(f"system rejected, failing checks: {names}")
        self.system = system
        self.quad_abs_tol = float(quad_abs_tol)
        self.quad_rel_tol = float(quad_rel_tol)
        self.max_subdivisions = int(max_subdivisions)
        self._root_cache: dict[tuple[str, float], float] = {}
        self._sdi_cache: dict[tuple[str, float], float] = {}

        s = system
        self._fnum, self._fden = s._f_rat
        self._pnum, self._pden = s._p_rat
        self._fpnum, self._fpden = s._fp_rat
        self._gnum, self._gden = s._g_rat
        self._inum, self._iden = s._integrand_rat

    # -- geometry ------------------------------------------------------------

    def _branch_end(self, side: str) -> float:
        if side == ATTRACTING:
            return self.system.x_max
        if side == REPELLING:
            return self.system.x_min
        raise ValueError(f"side must be {ATTRACTING!r} or {REPELLING!r}, got {side!r}")

    def branch_height_max(self, side: str) -> float:
        """Largest height reachable on the given branch within the domain."""
        return float(self.system.f_at(self._branch_end(side)))

    def _check_range(self, s: float, side: str) -> None:
        smax = self.branch_height_max(side)
        if not (0.0 < s <= smax * (1.0 + 1e-12)):
            raise RangeError(
                f"height s={s!r} outside the {side} branch range (0, {smax!r}]"
            )

    def branch_root(self, s: float, side: str) -> float:
        """The unique x on the given branch with f(x) = s (omega1 / alpha1)."""
        self._check_range(s, side)
        key = (side, float(s))
        hit = self._root_cache.get(key)
        if hit is not None:
            return hit
        root, status = K.branch_root(self._fnum, self._fden, s, self._branch_end(side))
        if status != K.OK:
            raise RangeError(f"no branch root for s={s!r} on the {side} side")
        self._root_cache[key] = root
        return root

    # -- integrand -----------------------------------------------------------

    def integrand(self, x: float) -> float:
        """f'(x)^2 / g(x), extended continuously by 0 at the contact point."""
        if not (self.system.x_min <= x <= self.system.x_max):
            raise RangeError(f"x={x!r} outside the domain")
        if x == 0.0:
            return 0.0
        g = float(self.system.g_at(x))
        if g == 0.0:
            raise SingularIntegrandError(f"g vanishes at x={x!r} != 0")
        return float(K.integrand_val(self._inum, self._iden, x))

    # -- integrals -----------------------------------------------------------

    def _itilde(self, s: float, side: str) -> float:
        self._check_range(s, side)
        key = (side, float(s))
        hit = self._sdi_cache.get(key)
        if hit is not None:
            return hit
        val, status = K.itilde(
            self._inum, self._iden, self._fnum, self._fden,
            s, self._branch_end(side),
            self.quad_abs_tol, self.quad_rel_tol, self.max_subdivisions,
        )
        if status == K.NONFINITE:
            raise SingularIntegrandError(
                f"integrand not integrable up to height s={s!r} on the {side} side"
            )
        if status != K.OK:
            raise AccuracyError(
                f"quadrature did not converge within {self.max_subdivisions} subdivisions"
            )
        self._sdi_cache[key] = val
        return val

    def sdi_minus(self, s: float) -> float:
        """Attracting-side integral, strictly negative for s > 0."""
        return self._itilde(s, ATTRACTING)

    def sdi_plus(self, s: float) -> float:
        """Repelling-side integral, strictly positive for s > 0."""
        return self._itilde(s, REPELLING)

    def sdi_total(self, s: float) -> float:
        """I(s) = I_minus(s) + I_plus(s), the integral along the canard cycle."""
        return self.sdi_minus(s) + self.sdi_plus(s)

    def sdi_derivative(self, s: float, side: str) -> float:
        """Closed-form d/ds of the branch integral (no quadrature).

        Attracting: f'(omega1)/g(omega1) < 0. Repelling: -f'(alpha1)/g(alpha1) > 0.
        """
        root = self.branch_root(s, side)
        val = float(self.system.f_prime_at(root) / self.system.g_at(root))
        return val if side == ATTRACTING else -val
