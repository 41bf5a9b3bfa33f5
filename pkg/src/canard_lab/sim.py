"""Positive-epsilon dynamics: orbit integration through the turning point with
section-crossing detection, shooting for the control parameter lambda_c(eps),
the transition map S_eps, and entry-measure ensembles.

The integrator is an embedded Dormand-Prince 5(4) pair in fast time honoring a
maximum step size; the exit-section event is bracketed by the accepted step and
refined by bisection in t. Shooting bisects lambda on the topological dichotomy
(exit above the target cut / escape right, versus exit below / escape down):
near a canard the exit height is a near-step function of lambda, so bisection
is immune to its stiffness.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import BracketError, ConvergenceError, RangeError, StiffnessError, TransitionError
from .measures import EmpiricalSample, TransportMeasure, sample
from .model import LienardSystem

__all__ = [
    "SimConfig",
    "CrossingResult",
    "ControlResult",
    "EnsembleRun",
    "default_sections",
    "integrate_to_section",
    "find_control_lambda",
    "transition_map",
    "ensemble_transport",
    "worker_count",
]

MIN_EPS = 1.0 / 400.0

CROSSED = "crossed"
ESCAPED_RIGHT = "escaped_right"
ESCAPED_DOWN = "escaped_down"
BUDGET_EXHAUSTED = "budget_exhausted"
TURNED_BACK = "turned_back"
STATIONARY = "stationary"

_CODE_TO_OUTCOME = {
    K.CROSSED: CROSSED,
    K.ESCAPED_RIGHT: ESCAPED_RIGHT,
    K.ESCAPED_DOWN: ESCAPED_DOWN,
    K.BUDGET_EXHAUSTED: BUDGET_EXHAUSTED,
    K.TURNED_BACK: TURNED_BACK,
    K.STATIONARY: STATIONARY,
}


@dataclass(frozen=True)
class SimConfig:
    """Integration setup. Double precision limits canard tracking, so eps is
    restricted to >= 1/400 by default; smaller values need extended precision
    and are rejected unless allow_small_eps is set."""

    eps: float
    x_sigma_minus: float
    x_sigma_plus: float
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_step: float = 1e-2
    max_time: float | None = None  # fast-time budget; default 1e4 / eps
    x_escape_right: float | None = None  # default: system x_max
    y_floor: float | None = None  # default: -f(x_sigma_minus)
    allow_small_eps: bool = False

    def __post_init__(self):
        if self.eps <= 0.0:
            raise ValueError("eps must be positive")
        if self.eps < MIN_EPS and not self.allow_small_eps:
            raise ValueError(
                f"eps={self.eps!r} below {MIN_EPS!r}: the lambda window shrinks like "
                "exp(-c/eps) and is not representable in double precision"
            )
        if self.abs_tol <= 0.0 or self.rel_tol <= 0.0 or self.max_step <= 0.0:
            raise ValueError("tolerances and max_step must be positive")
        if not (self.x_sigma_minus > 0.0 > self.x_sigma_plus):
            raise ValueError("sections must lie on opposite sides of the contact point")

    def resolved_max_time(self) -> float:
        return 1e4 / self.eps if self.max_time is None else self.max_time


@dataclass(frozen=True)
class CrossingResult:
    outcome: str
    s_plus: float | None
    t: float | None
    steps: int
    last_state: tuple[float, float]


@dataclass(frozen=True)
class ControlResult:
    lambda_c: float
    iterations: int
    exit_height: float | None
    bracket: tuple[float, float]


@dataclass(frozen=True)
class EnsembleRun:
    eps: float
    lambda_c: float
    entry: EmpiricalSample
    exits: EmpiricalSample
    outcomes: tuple[str, ...]
    exit_by_sample: np.ndarray = field(repr=False)  # nan where the orbit failed
    failures: dict
    flagged: bool

    def __post_init__(self):
        assert self.exits.count + sum(self.failures.values()) == self.entry.count


def default_sections(system: LienardSystem, s_c_minus: float, s_c_plus: float) -> tuple[float, float]:
    """Heuristic section abscissas: x_sigma_- is the attracting-branch root of
    f(x) = 1.5 s_c^- (capped at the midpoint toward the branch top so the
    section stays inside the domain), and symmetrically on the repelling side."""
    fnum, fden = system._f_rat
    top_right = float(system.f_at(system.x_max))
    top_left = float(system.f_at(system.x_min))
    if top_right <= s_c_minus:
        raise RangeError(f"s_c_minus={s_c_minus!r} at or above the attracting branch top")
    if top_left <= s_c_plus:
        raise RangeError(f"s_c_plus={s_c_plus!r} at or above the repelling branch top")
    target_minus = min(1.5 * s_c_minus, 0.5 * (s_c_minus + top_right))
    target_plus = min(1.5 * s_c_plus, 0.5 * (s_c_plus + top_left))
    x_minus, status1 = K.branch_root(fnum, fden, target_minus, system.x_max)
    x_plus, status2 = K.branch_root(fnum, fden, target_plus, system.x_min)
    if status1 != K.OK or status2 != K.OK:
        raise RangeError("could not place sections on the branches")
    return float(x_minus), float(x_plus)


def integrate_to_section(system: LienardSystem, cfg: SimConfig, lam: float,
                         start: tuple[float, float]) -> CrossingResult:
    """Integrate from a point on the entry section until the orbit crosses the
    exit section x = x_sigma_+ moving left, escapes, or exhausts the budget."""
    x0, y0 = float(start[0]), float(start[1])
    if x0 <= cfg.x_sigma_plus:
        raise ValueError("start must lie to the right of the exit section")
    fnum, fden = system._f_rat
    pnum, pden = system._p_rat
    x_right = system.x_max if cfg.x_escape_right is None else cfg.x_escape_right
    y_floor = -float(system.f_at(cfg.x_sigma_minus)) if cfg.y_floor is None else cfg.y_floor
    code, s_plus, t, steps, last_x, last_y = K.integrate_orbit(
        fnum, fden, pnum, pden, cfg.eps, lam, x0, y0,
        cfg.x_sigma_plus, x_right, y_floor,
        cfg.abs_tol, cfg.rel_tol, cfg.max_step, cfg.resolved_max_time(),
    )
    if code == K.STIFF:
        raise StiffnessError("step size underflow", t, last_x, last_y)
    outcome = _CODE_TO_OUTCOME[code]
    if outcome == CROSSED:
        if abs(last_x - cfg.x_sigma_plus) > 1e-10:
            raise StiffnessError("event localization failed", t, last_x, last_y)
        return CrossingResult(CROSSED, float(s_plus), float(t), int(steps), (last_x, last_y))
    return CrossingResult(outcome, None, float(t), int(steps), (last_x, last_y))


def _classify(res: CrossingResult, s_c_plus: float) -> str:
    """Which side of the connecting orbit a shot landed on.

    Exit heights increase with lambda until the orbit stops reaching the exit
    section at all (it turns back toward the attracting side, or parks at the
    equilibrium that exists for lambda > 0); every non-crossing outcome except
    a downward dive therefore sits on the high side of the dichotomy.
    """
    if res.outcome == CROSSED:
        return "high" if res.s_plus >= s_c_plus else "low"
    if res.outcome in (ESCAPED_RIGHT, TURNED_BACK, STATIONARY):
        return "high"
    if res.outcome == ESCAPED_DOWN:
        return "low"
    raise ConvergenceError("orbit exhausted its time budget before any section event")


def find_control_lambda(system: LienardSystem, cfg: SimConfig,
                        s_c_minus: float, s_c_plus: float,
                        bracket: tuple[float, float],
                        height_tol: float = 1e-8,
                        bracket_tol: float = 1e-15,
                        max_iter: int = 200) -> ControlResult:
    """lambda making the orbit through (x_sigma_-, s_c^-) exit at height s_c^+.

    Bisection on the monotone exit dichotomy; terminates when the exit height
    matches within height_tol or the bracket width falls below bracket_tol.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise BracketError(f"bracket {bracket!r} is empty")
    start = (cfg.x_sigma_minus, s_c_minus)
    c_lo = _classify(integrate_to_section(system, cfg, lo, start), s_c_plus)
    c_hi = _classify(integrate_to_section(system, cfg, hi, start), s_c_plus)
    if c_lo == c_hi:
        raise BracketError(
            f"bracket invalid: both ends classify as {c_lo!r} for sections "
            f"({s_c_minus!r}, {s_c_plus!r})"
        )
    iterations = 0
    exit_height = None
    mid = 0.5 * (lo + hi)
    while hi - lo > bracket_tol and iterations < max_iter:
        mid = 0.5 * (lo + hi)
        res = integrate_to_section(system, cfg, mid, start)
        iterations += 1
        if res.outcome == CROSSED:
            exit_height = res.s_plus
            if abs(res.s_plus - s_c_plus) <= height_tol:
                return ControlResult(mid, iterations, exit_height, (lo, hi))
        if _classify(res, s_c_plus) == c_lo:
            lo = mid
        else:
            hi = mid
    return ControlResult(0.5 * (lo + hi), iterations, exit_height, (lo, hi))


def transition_map(system: LienardSystem, cfg: SimConfig, lambda_c: float,
                   s_minus: float) -> float:
    """S_eps(s^-): exit height of the orbit entering at height s^- under the
    control parameter. Increasing in s^- on successful crossings."""
    res = integrate_to_section(system, cfg, lambda_c, (cfg.x_sigma_minus, s_minus))
    if res.outcome != CROSSED:
        raise TransitionError(
            f"orbit from s^-={s_minus!r} did not cross the exit section ({res.outcome})"
        )
    return res.s_plus


def worker_count() -> int:
    """Worker cap from CANARD_LAB_THREADS (0 or unset = auto)."""
    raw = os.environ.get("CANARD_LAB_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"CANARD_LAB_THREADS must be an integer, got {raw!r}")
    if n < 0:
        raise ValueError("CANARD_LAB_THREADS must be >= 0")
    if n == 0:
        return min(os.cpu_count() or 1, 8)
    return n


def ensemble_transport(system: LienardSystem, cfg: SimConfig, lambda_c: float,
                       entry: TransportMeasure, n: int, seed: int,
                       workers: int | None = None,
                       failure_flag_fraction: float = 0.10) -> EnsembleRun:
    """Sample n entry heights, integrate each to the exit section, and collect
    exit heights plus failure counts. Deterministic for a given seed: each
    sample has its own RNG stream and an independent orbit, so the worker
    count never changes the result."""
    entries = sample(entry, n, seed)
    heights = entries.values
    results: list[CrossingResult | None] = [None] * n

    def run_one(i: int) -> None:
        results[i] = integrate_to_section(
            system, cfg, lambda_c, (cfg.x_sigma_minus, float(heights[i]))
        )

    nworkers = worker_count() if workers is None else max(1, workers)
    if nworkers <= 1 or n == 1:
        for i in range(n):
            run_one(i)
    else:
        with ThreadPoolExecutor(max_workers=nworkers) as pool:
            list(pool.map(run_one, range(n)))

    exit_by_sample = np.full(n, np.nan)
    outcomes = []
    failures: dict[str, int] = {}
    exit_values = []
    for i, res in enumerate(results):
        outcomes.append(res.outcome)
        if res.outcome == CROSSED:
            exit_by_sample[i] = res.s_plus
            exit_values.append(res.s_plus)
        else:
            failures[res.outcome] = failures.get(res.outcome, 0) + 1
    n_failed = sum(failures.values())
    exits = EmpiricalSample(values=np.array(exit_values), seed=seed, count=len(exit_values))
    return EnsembleRun(
        eps=cfg.eps,
        lambda_c=lambda_c,
        entry=entries,
        exits=exits,
        outcomes=tuple(outcomes),
        exit_by_sample=exit_by_sample,
        failures=failures,
        flagged=n_failed > failure_flag_fraction * n,
    )
