"""The slow relation (entry-exit) function and what it implies.

Single-section form: S : [0, s0] -> [0, s0] balances contraction against
expansion. Which of the two mirrored defining identities applies is decided
once, by comparing -I_minus(s0) with I_plus(s0):

    exhaust-minus orientation (-I_minus(s0) <= I_plus(s0)):
        I_minus(s) + I_plus(S(s)) = 0, solved on the repelling side;
    exhaust-plus orientation (-I_minus(s0) > I_plus(s0)):
        I_minus(S(s)) + I_plus(s) = 0, solved on the attracting side.

Either way S is increasing, continuous, S(0) = 0, its fixed points are the
zeros of I = I_minus + I_plus, and orbits S^n(s) converge monotonically to
fixed points. I(s) and s - S(s) share their sign in the exhaust-minus
orientation and have opposite signs in the exhaust-plus orientation.

Two-section form: S0 : L -> T with L below the entry cut s_c^- always solves
I_minus(s^-) + I_plus(S0(s^-)) = 0. When contraction at the cut exceeds the
expansion available at the exit cut (funnel case), the buffer point s_b^-
splits L, and the epsilon -> 0 limit map equals S0 below s_b^- and the
constant s_c^+ above it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import AccuracyError, ConvergenceError, RangeError
from .sdi import ATTRACTING, REPELLING, SdiEvaluator

__all__ = [
    "SlowRelation",
    "MeasureClass",
    "ZeroInfo",
    "ZeroScanResult",
    "CyclicityReport",
    "buffer_point",
    "find_zeros",
    "classify_invariant_measures",
    "cyclicity_report",
]

EXHAUST_MINUS = "exhaust_minus"  # I_minus(s) + I_plus(S(s)) = 0
EXHAUST_PLUS = "exhaust_plus"    # I_minus(S(s)) + I_plus(s) = 0

CASE_TUNNEL = "tunnel"  # (a): -I_minus(s_c^-) <= I_plus(s_c^+)
CASE_FUNNEL = "funnel"  # (b): buffer point present


def _invert(evaluator: SdiEvaluator, side: str, target: float, h_hi: float,
            solve_tol: float) -> float:
    """Height h in (0, h_hi] with I_side(h) = target, by bisection."""
    branch_end = evaluator.system.x_max if side == ATTRACTING else evaluator.system.x_min
    h, residual, status = K.invert_itilde(
        evaluator._inum, evaluator._iden, evaluator._fnum, evaluator._fden,
        branch_end, target, h_hi,
        solve_tol, evaluator.quad_abs_tol, evaluator.quad_rel_tol,
        evaluator.max_subdivisions,
    )
    if status == K.NO_BRACKET:
        raise RangeError(
            f"no height in (0, {h_hi!r}] on the {side} side reaches integral {target!r}"
        )
    if status == K.TOL_NOT_MET:
        raise ConvergenceError(
            f"balance residual {residual!r} above tolerance {solve_tol!r}"
        )
    if status != K.OK:
        raise AccuracyError("quadrature failure while inverting the integral")
    return float(h)


class SlowRelation:
    """Solved slow relation function, single-section or two-section."""

    def __init__(self, evaluator: SdiEvaluator, solve_tol: float = 1e-12):
        self.evaluator = evaluator
        self.solve_tol = float(solve_tol)
        self.mode: str | None = None
        self.s0: float | None = None
        self.orientation: str | None = None
        self.L: tuple[float, float] | None = None
        self.s_c_minus: float | None = None
        self.s_c_plus: float | None = None
        self.case: str | None = None
        self.buffer: float | None = None

    # -- constructors ---------------------------------------------------------

    @classmethod
    def single_section(cls, evaluator: SdiEvaluator, s0: float,
                       solve_tol: float = 1e-12) -> "SlowRelation":
        rel = cls(evaluator, solve_tol)
        smax = min(evaluator.branch_height_max(ATTRACTING),
                   evaluator.branch_height_max(REPELLING))
        if not (0.0 < s0 <= smax):
            raise RangeError(f"s0={s0!r} must lie in (0, {smax!r}]")
        rel.mode = "single"
        rel.s0 = float(s0)
        # Orientation per the defining comparison; ties use exhaust-minus.
        if -evaluator.sdi_minus(s0) <= evaluator.sdi_plus(s0):
            rel.orientation = EXHAUST_MINUS
        else:
            rel.orientation = EXHAUST_PLUS
        return rel

    @classmethod
    def two_section(cls, evaluator: SdiEvaluator, L: tuple[float, float],
                    s_c_minus: float, s_c_plus: float,
                    solve_tol: float = 1e-12) -> "SlowRelation":
        rel = cls(evaluator, solve_tol)
        lo, hi = float(L[0]), float(L[1])
        if not (0.0 < lo < hi <= s_c_minus):
            raise RangeError(f"L={L!r} must satisfy 0 < lo < hi <= s_c_minus={s_c_minus!r}")
        if s_c_minus > evaluator.branch_height_max(ATTRACTING):
            raise RangeError(f"s_c_minus={s_c_minus!r} above the attracting branch range")
        if s_c_plus > evaluator.branch_height_max(REPELLING):
            raise RangeError(f"s_c_plus={s_c_plus!r} above the repelling branch range")
        rel.mode = "two"
        rel.L = (lo, hi)
        rel.s_c_minus = float(s_c_minus)
        rel.s_c_plus = float(s_c_plus)
        rel.buffer = buffer_point(evaluator, s_c_minus, s_c_plus, solve_tol)
        rel.case = CASE_TUNNEL if rel.buffer is None else CASE_FUNNEL
        return rel

    # -- single-section -------------------------------------------------------

    def slow_relation(self, s: float) -> float:
        """S(s) on [0, s0]. S(0) = 0 exactly."""
        if self.mode != "single":
            raise ValueError("slow_relation requires single-section mode")
        if not (0.0 <= s <= self.s0 * (1.0 + 1e-12)):
            raise RangeError(f"s={s!r} outside [0, {self.s0!r}]")
        if s == 0.0:
            return 0.0
        ev = self.evaluator
        if self.orientation == EXHAUST_MINUS:
            # bisection on the strictly monotone I_plus
            return _invert(ev, REPELLING, -ev.sdi_minus(s), self.s0, self.solve_tol)
        # mirrored identity: bisection on the strictly monotone I_minus
        return _invert(ev, ATTRACTING, -ev.sdi_plus(s), self.s0, self.solve_tol)

    def iterate_orbit(self, s: float, max_iter: int = 200_000,
                      step_tol: float = 1e-12) -> tuple[float, int]:
        """Iterate S until successive values differ by less than step_tol.

        Returns (limit, steps). Orbits of S are monotone, so non-convergence
        within max_iter signals a tolerance/grid mismatch.
        """
        if self.mode != "single":
            raise ValueError("iterate_orbit requires single-section mode")
        prev = float(s)
        for k in range(1, max_iter + 1):
            cur = self.slow_relation(prev)
            if abs(cur - prev) < step_tol:
                return cur, k
            prev = cur
        raise ConvergenceError(
            f"orbit from s={s!r} not converged after {max_iter} iterations (last={prev!r})"
        )

    # -- two-section ------------------------------------------------------------

    def two_section_relation(self, s_minus: float) -> float:
        """S0(s^-) for s^- in L; increasing. In the funnel case values above
        the buffer point exceed s_c^+ (the identity still defines them)."""
        if self.mode != "two":
            raise ValueError("two_section_relation requires two-section mode")
        lo, hi = self.L
        # slack covers inverse-solve residuals mapped back into L
        slack = 1e-9 * max(1.0, hi)
        if not (lo - slack <= s_minus <= hi + slack):
            raise RangeError(f"s_minus={s_minus!r} outside L={self.L!r}")
        ev = self.evaluator
        target = -ev.sdi_minus(s_minus)
        h_hi = ev.branch_height_max(REPELLING)
        if target > ev.sdi_plus(h_hi):
            raise RangeError(
                "required repelling height exceeds the branch range f(x_min)"
            )
        return _invert(ev, REPELLING, target, h_hi, self.solve_tol)

    def exit_interval(self) -> tuple[float, float]:
        """T = S0(L). In the funnel case the upper end may exceed the branch
        range (RangeError); inversion does not rely on it."""
        return self.two_section_relation(self.L[0]), self.two_section_relation(self.L[1])

    def relation_inverse(self, s_plus: float) -> float:
        """S0^{-1}(s^+) by bisection on the monotone attracting-side integral.

        The membership test s^+ in T = S0(L) is done on integral values, so it
        works in the funnel case even when S0(L_hi) itself escapes the branch.
        """
        if self.mode != "two":
            raise ValueError("relation_inverse requires two-section mode")
        ev = self.evaluator
        if not (0.0 < s_plus <= ev.branch_height_max(REPELLING) * (1.0 + 1e-12)):
            raise RangeError(f"s_plus={s_plus!r} outside the repelling branch range")
        target = -ev.sdi_plus(s_plus)
        most_neg = ev.sdi_minus(self.L[1])
        least_neg = ev.sdi_minus(self.L[0])
        slack = 1e-10 * max(1.0, abs(most_neg))
        if target < most_neg - slack or target > least_neg + slack:
            raise RangeError(f"s_plus={s_plus!r} outside T = S0(L)")
        return _invert(ev, ATTRACTING, target, self.L[1], self.solve_tol)

    def limit_map(self, s_minus: float) -> float:
        """The epsilon -> 0 exit map: S0 in the tunnel case; in the funnel case
        S0 below the buffer point and the constant s_c^+ from it upward."""
        if self.mode != "two":
            raise ValueError("limit_map requires two-section mode")
        if self.case == CASE_TUNNEL or s_minus < self.buffer:
            return self.two_section_relation(s_minus)
        return self.s_c_plus

    def __repr__(self) -> str:
        if self.mode == "single":
            return f"SlowRelation(single, s0={self.s0!r}, orientation={self.orientation!r})"
        return (
            f"SlowRelation(two, L={self.L!r}, s_c=({self.s_c_minus!r}, {self.s_c_plus!r}), "
            f"case={self.case!r}, buffer={self.buffer!r})"
        )


def buffer_point(evaluator: SdiEvaluator, s_c_minus: float, s_c_plus: float,
                 solve_tol: float = 1e-12) -> float | None:
    """The unique s_b^- in (0, s_c^-) with I_minus(s_b^-) + I_plus(s_c^+) = 0,
    or None when -I_minus(s_c^-) <= I_plus(s_c^+) (tunnel case; ties included)."""
    plus_at_cut = evaluator.sdi_plus(s_c_plus)
    if -evaluator.sdi_minus(s_c_minus) <= plus_at_cut:
        return None
    return _invert(evaluator, ATTRACTING, -plus_at_cut, s_c_minus, solve_tol)


@dataclass(frozen=True)
class ZeroInfo:
    location: float
    multiplicity: object  # 1, or the string ">=2"
    tangential: bool = False


@dataclass(frozen=True)
class ZeroScanResult:
    zeros: tuple[ZeroInfo, ...]
    identically_zero: bool
    max_abs: float
    interval: tuple[float, float]


def find_zeros(evaluator: SdiEvaluator, interval: tuple[float, float],
               grid_points: int = 2000, refine_tol: float = 1e-12,
               deriv_tol: float = 1e-8, tangential_tol: float = 1e-10,
               zero_floor: float = 1e-12) -> ZeroScanResult:
    """Zeros of I = I_minus + I_plus on [a, b] with multiplicity estimates.

    Grid scan for sign changes refined by bisection; a simple zero is declared
    when the closed-form I'(s) is nonzero beyond deriv_tol, otherwise ">=2".
    Interior local minima of |I| below tangential_tol without a sign change
    are flagged as tangential candidates. If max |I| on the grid stays below
    zero_floor the integral is reported identically zero.
    """
    a, b = float(interval[0]), float(interval[1])
    if not (0.0 < a < b):
        raise RangeError(f"interval {interval!r} must satisfy 0 < a < b")
    grid = np.linspace(a, b, grid_points)
    vals = np.array([evaluator.sdi_total(s) for s in grid])
    max_abs = float(np.max(np.abs(vals)))
    if max_abs < zero_floor:
        return ZeroScanResult((), True, max_abs, (a, b))

    def total(s: float) -> float:
        return evaluator.sdi_total(s)

    def deriv(s: float) -> float:
        return (evaluator.sdi_derivative(s, ATTRACTING)
                + evaluator.sdi_derivative(s, REPELLING))

    zeros: list[ZeroInfo] = []
    for i in range(grid_points - 1):
        v0, v1 = vals[i], vals[i + 1]
        if v0 == 0.0:
            root = float(grid[i])
        elif v0 * v1 < 0.0:
            lo, hi = float(grid[i]), float(grid[i + 1])
            flo = v0
            while hi - lo > refine_tol:
                mid = 0.5 * (lo + hi)
                fm = total(mid)
                if fm == 0.0:
                    lo = hi = mid
                    break
                if (fm > 0.0) == (flo > 0.0):
                    lo, flo = mid, fm
                else:
                    hi = mid
            root = 0.5 * (lo + hi)
        else:
            continue
        mult = 1 if abs(deriv(root)) > deriv_tol else ">=2"
        zeros.append(ZeroInfo(root, mult, tangential=False))
    if vals[-1] == 0.0:
        mult = 1 if abs(deriv(float(grid[-1]))) > deriv_tol else ">=2"
        zeros.append(ZeroInfo(float(grid[-1]), mult, tangential=False))

    # even-multiplicity candidates: |I| dips below tolerance without changing sign
    absvals = np.abs(vals)
    for i in range(1, grid_points - 1):
        if absvals[i] < tangential_tol and absvals[i] <= absvals[i - 1] \
                and absvals[i] <= absvals[i + 1] and vals[i] != 0.0 \
                and vals[i - 1] * vals[i] > 0.0 and vals[i] * vals[i + 1] > 0.0:
            loc = float(grid[i])
            if all(abs(z.location - loc) > (b - a) / grid_points for z in zeros):
                zeros.append(ZeroInfo(loc, ">=2", tangential=True))

    zeros.sort(key=lambda z: z.location)
    return ZeroScanResult(tuple(zeros), False, max_abs, (a, b))


@dataclass(frozen=True)
class MeasureClass:
    """Structure of the invariant probability measures of the slow relation map.

    kind is one of:
      "unique"       -- only the Dirac mass at 0 (no zeros of I);
      "convex_hull"  -- convex combinations of Dirac masses at the atoms;
      "all_invariant"-- I identically zero: every probability measure invariant.
    """

    atoms: tuple[float, ...]
    uniquely_ergodic: bool
    multiplicities: tuple
    kind: str

    @property
    def k(self) -> int:
        return max(len(self.atoms) - 1, 0)


def classify_invariant_measures(evaluator: SdiEvaluator, interval: tuple[float, float],
                                grid_points: int = 2000) -> MeasureClass:
    """Atoms {0} union zeros(I); uniquely ergodic iff no zeros (identity-map
    systems get the distinguished all-invariant report)."""
    scan = find_zeros(evaluator, interval, grid_points)
    if scan.identically_zero:
        return MeasureClass((), False, (), "all_invariant")
    atoms = (0.0,) + tuple(z.location for z in scan.zeros)
    mults = tuple(z.multiplicity for z in scan.zeros)
    if len(scan.zeros) == 0:
        return MeasureClass(atoms, True, mults, "unique")
    return MeasureClass(atoms, False, mults, "convex_hull")


@dataclass(frozen=True)
class CyclicityReport:
    s: float
    regime: str  # "slow_fast_hopf" | "non_generic_turning" | "general"
    bound: int | None
    stability: str | None  # "attracting" | "repelling" | None
    note: str


def cyclicity_report(evaluator: SdiEvaluator, s: float, interval: tuple[float, float],
                     grid_points: int = 2000) -> CyclicityReport:
    """Upper bound on the number of limit cycles born from the canard cycle at
    height s: 1 with a stability tag where I(s) != 0, l + 1 at a simple zero,
    undetermined at degenerate zeros, and no finite bound when I vanishes
    identically."""
    system = evaluator.system
    if (system.n, system.m) == (2, 1):
        regime = "slow_fast_hopf"
    elif system.m == system.n - 1:
        regime = "non_generic_turning"
    else:
        regime = "general"
    scan = find_zeros(evaluator, interval, grid_points)
    if scan.identically_zero:
        return CyclicityReport(s, regime, None, None,
                               "integral identically zero: no finite bound available")
    a, b = scan.interval
    match_tol = max(10.0 * (b - a) / grid_points, 1e-9)
    for z in scan.zeros:
        if abs(z.location - s) <= match_tol:
            if z.multiplicity == 1:
                return CyclicityReport(s, regime, 2, None,
                                       "simple zero: bound l + 1 with l = 1")
            return CyclicityReport(s, regime, None, None,
                                   "degenerate zero: bound >= 3, undetermined")
    total = evaluator.sdi_total(s)
    stability = "attracting" if total < 0.0 else "repelling"
    return CyclicityReport(s, regime, 1, stability,
                           "nonzero integral: at most one limit cycle, hyperbolic")
