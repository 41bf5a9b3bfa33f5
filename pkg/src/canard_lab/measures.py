"""Entry/exit probability measures: a tabulated density plus finitely many
Dirac atoms. Push-forward through the two-section slow relation map uses the
exit-density formula

    D_ex(s+) = -D_en(S0^{-1}(s+)) * I_plus'(s+) / I_minus'(S0^{-1}(s+))

cross-checked against its equivalent branch-root form
f'(alpha1(s+)) g(omega1(.)) / (f'(omega1(.)) g(alpha1(s+))) * D_en(.).
In the funnel case the exit limit is a mixture: the tunnel part pushed through
S0 plus a Dirac atom at s_c^+ carrying the entry mass at or above the buffer
point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AccuracyError, RangeError
from .relation import CASE_FUNNEL, SlowRelation
from .sdi import ATTRACTING, REPELLING

__all__ = [
    "TransportMeasure",
    "EmpiricalSample",
    "make_entry",
    "pushforward_density",
    "pushforward_measure",
    "cdf",
    "sample",
    "ks_distance",
    "histogram",
]

MASS_TOL = 1e-8
DEFAULT_GRID = 2001


@dataclass(frozen=True)
class TransportMeasure:
    """Probability measure: nonnegative density on a uniform grid (linear
    interpolation between nodes) plus Dirac atoms. Total mass must be 1
    within 1e-8. Immutable."""

    grid: np.ndarray
    density: np.ndarray
    atoms: tuple[tuple[float, float], ...] = ()
    _node_cdf: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        density = np.asarray(self.density, dtype=float)
        if grid.ndim != 1 or grid.shape != density.shape or len(grid) < 2:
            raise ValueError("grid and density must be 1-d arrays of equal length >= 2")
        if np.any(density < -1e-12):
            raise ValueError("density must be nonnegative at all nodes")
        density = np.maximum(density, 0.0)
        if any(mass < 0.0 for _, mass in self.atoms):
            raise ValueError("atom masses must be nonnegative")
        seg = 0.5 * (density[:-1] + density[1:]) * np.diff(grid)
        node_cdf = np.concatenate(([0.0], np.cumsum(seg)))
        total = node_cdf[-1] + sum(mass for _, mass in self.atoms)
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"total mass {total!r} differs from 1 by more than {MASS_TOL}")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "density", density)
        object.__setattr__(self, "atoms", tuple((float(l), float(m)) for l, m in self.atoms))
        object.__setattr__(self, "_node_cdf", node_cdf)

    @property
    def support(self) -> tuple[float, float]:
        lo = self.grid[0]
        hi = self.grid[-1]
        for loc, mass in self.atoms:
            if mass > 0.0:
                lo = min(lo, loc)
                hi = max(hi, loc)
        return float(lo), float(hi)

    @property
    def continuous_mass(self) -> float:
        return float(self._node_cdf[-1])

    @property
    def atom_mass(self) -> float:
        return float(sum(mass for _, mass in self.atoms))

    def density_at(self, s):
        """Linear interpolation on the grid, zero outside it."""
        return np.interp(s, self.grid, self.density, left=0.0, right=0.0)


@dataclass(frozen=True)
class EmpiricalSample:
    """Values drawn from a measure. Reproducible: each index gets its own
    counter-based stream keyed by (seed, index), so the result is independent
    of chunking or worker count."""

    values: np.ndarray
    seed: int
    count: int


# -- construction --------------------------------------------------------------


def _normalized(grid: np.ndarray, raw: np.ndarray) -> TransportMeasure:
    mass = float(np.trapezoid(raw, grid))
    if mass <= 0.0:
        raise ValueError("density table is identically zero: not normalizable")
    return TransportMeasure(grid, raw / mass)


def make_entry(kind: str, interval: tuple[float, float], *,
               location: float | None = None, scale: float | None = None,
               values=None, grid_points: int = DEFAULT_GRID) -> TransportMeasure:
    """Entry measure on an interval: 'uniform', 'truncated_cauchy' (location
    defaults to the interval midpoint, scale to |interval|/20) or 'table'
    (values on the uniform grid, normalized)."""
    lo, hi = float(interval[0]), float(interval[1])
    if not lo < hi:
        raise ValueError(f"interval {interval!r} must have positive length")
    grid = np.linspace(lo, hi, grid_points)
    if kind == "uniform":
        return _normalized(grid, np.ones_like(grid))
    if kind == "truncated_cauchy":
        loc = 0.5 * (lo + hi) if location is None else float(location)
        sc = (hi - lo) / 20.0 if scale is None else float(scale)
        if sc <= 0.0:
            raise ValueError("scale must be positive")
        return _normalized(grid, 1.0 / (1.0 + ((grid - loc) / sc) ** 2))
    if kind == "table":
        if values is None:
            raise ValueError("kind 'table' requires values")
        values = np.asarray(values, dtype=float)
        if len(values) != grid_points:
            grid = np.linspace(lo, hi, len(values))
        return _normalized(grid, values)
    raise ValueError(f"unknown entry kind {kind!r}")


# -- CDF and sampling -----------------------------------------------------------


def _continuous_cdf(measure: TransportMeasure, s: np.ndarray) -> np.ndarray:
    grid, density, node_cdf = measure.grid, measure.density, measure._node_cdf
    s = np.asarray(s, dtype=float)
    idx = np.clip(np.searchsorted(grid, s, side="right") - 1, 0, len(grid) - 2)
    x0 = grid[idx]
    dx = grid[idx + 1] - x0
    theta = np.clip((s - x0) / dx, 0.0, 1.0)
    d0 = density[idx]
    d1 = density[idx + 1]
    partial = dx * (d0 * theta + 0.5 * (d1 - d0) * theta**2)
    out = node_cdf[idx] + partial
    out = np.where(s <= grid[0], 0.0, out)
    out = np.where(s >= grid[-1], node_cdf[-1], out)
    return out


def cdf(measure: TransportMeasure, s) -> float | np.ndarray:
    """Right-continuous distribution function (density integral plus atoms)."""
    s_arr = np.asarray(s, dtype=float)
    out = _continuous_cdf(measure, s_arr)
    for loc, mass in measure.atoms:
        out = out + mass * (s_arr >= loc)
    if np.isscalar(s) or s_arr.ndim == 0:
        return float(out)
    return out


def _cdf_left(measure: TransportMeasure, s) -> np.ndarray:
    s_arr = np.asarray(s, dtype=float)
    out = _continuous_cdf(measure, s_arr)
    for loc, mass in measure.atoms:
        out = out + mass * (s_arr > loc)
    return out


def _uniform_stream(seed: int, count: int) -> np.ndarray:
    if seed < 0:
        raise ValueError("seed must be a nonnegative integer")
    out = np.empty(count)
    for i in range(count):
        bitgen = np.random.Philox(key=np.array([seed, i], dtype=np.uint64))
        out[i] = np.random.Generator(bitgen).random()
    return out


def _invert_continuous(measure: TransportMeasure, c: float) -> float:
    grid, density, node_cdf = measure.grid, measure.density, measure._node_cdf
    c = min(max(c, 0.0), node_cdf[-1])
    j = int(np.searchsorted(node_cdf, c, side="left"))
    if j <= 0:
        return float(grid[0])
    if j >= len(node_cdf):
        return float(grid[-1])
    resid = c - node_cdf[j - 1]
    dx = grid[j] - grid[j - 1]
    d0 = density[j - 1]
    d1 = density[j]
    dd = d1 - d0
    if abs(dd) * dx < 1e-15 * max(d0, 1.0):
        theta = resid / (d0 * dx) if d0 * dx > 0.0 else 0.0
    else:
        disc = max(d0 * d0 + 2.0 * dd * resid / dx, 0.0)
        theta = (math.sqrt(disc) - d0) / dd
    return float(grid[j - 1] + dx * min(max(theta, 0.0), 1.0))


def quantile(measure: TransportMeasure, u: float) -> float:
    """Generalized inverse CDF: smallest s with cdf(s) >= u."""
    for loc, mass in sorted(measure.atoms):
        if mass <= 0.0:
            continue
        f_left = float(_cdf_left(measure, np.array(loc)))
        if f_left < u <= f_left + mass:
            return loc
    # u lands in the continuous part; atoms wholly below the answer shift it
    shift = sum(mass for loc, mass in measure.atoms if float(cdf(measure, loc)) < u)
    return _invert_continuous(measure, u - shift)


def sample(measure: TransportMeasure, n: int, seed: int) -> EmpiricalSample:
    """Inverse-CDF sampling with per-index counter-based streams (seed, i)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    us = _uniform_stream(seed, n)
    values = np.array([quantile(measure, u) for u in us])
    return EmpiricalSample(values=values, seed=seed, count=n)


# -- distances and summaries -----------------------------------------------------


def ks_distance(samples: EmpiricalSample, target: TransportMeasure) -> float:
    """sup |empirical CDF - target CDF|, evaluating both one-sided limits at
    every sample point and atom location."""
    xs = np.sort(np.asarray(samples.values, dtype=float))
    n = len(xs)
    if n == 0:
        raise ValueError("samples must be nonempty")
    candidates = np.unique(np.concatenate([xs, [loc for loc, _ in target.atoms]]))
    fn_left = np.searchsorted(xs, candidates, side="left") / n
    fn_right = np.searchsorted(xs, candidates, side="right") / n
    f_right = np.asarray(cdf(target, candidates), dtype=float)
    f_left = _cdf_left(target, candidates)
    gap = np.maximum(np.abs(fn_left - f_left), np.abs(fn_right - f_right))
    return float(np.max(gap))


def histogram(samples: EmpiricalSample, bins: int = 10) -> list[tuple[float, float, int]]:
    """Equal-width bins over [min, max]; the last bin includes its right edge.
    All-equal samples collapse to a single bin."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    v = np.asarray(samples.values, dtype=float)
    lo, hi = float(np.min(v)), float(np.max(v))
    if lo == hi:
        return [(lo, hi, len(v))]
    counts, edges = np.histogram(v, bins=bins, range=(lo, hi))
    return [(float(edges[i]), float(edges[i + 1]), int(counts[i])) for i in range(bins)]


# -- push-forward -----------------------------------------------------------------


def _exit_density_values(entry: TransportMeasure, relation: SlowRelation,
                         t_grid: np.ndarray, cross_check_tol: float = 1e-9) -> np.ndarray:
    ev = relation.evaluator
    system = ev.system
    out = np.empty_like(t_grid)
    s_lo, s_hi = float(entry.grid[0]), float(entry.grid[-1])
    for j, t in enumerate(t_grid):
        s_inv = relation.relation_inverse(float(t))
        # the grid spans exactly S0(entry support); keep roundoff from pushing
        # the inverse outside it, where the interpolated density drops to 0
        s_inv = min(max(s_inv, s_lo), s_hi)
        d_en = float(entry.density_at(s_inv))
        d_plus = ev.sdi_derivative(float(t), REPELLING)
        d_minus = ev.sdi_derivative(s_inv, ATTRACTING)
        form_a = -d_en * d_plus / d_minus
        alpha = ev.branch_root(float(t), REPELLING)
        omega = ev.branch_root(s_inv, ATTRACTING)
        form_b = d_en * (system.f_prime_at(alpha) * system.g_at(omega)) / (
            system.f_prime_at(omega) * system.g_at(alpha))
        if abs(form_a - form_b) > cross_check_tol * max(1.0, abs(form_a)):
            raise AccuracyError(
                f"exit-density forms disagree at s+={t!r}: {form_a!r} vs {form_b!r}"
            )
        out[j] = form_a
    return out


def pushforward_density(entry: TransportMeasure, relation: SlowRelation,
                        grid_points: int = DEFAULT_GRID) -> TransportMeasure:
    """Analytic exit density of an entry density supported inside L, through
    the two-section map (tunnel case, or a funnel-case entry entirely below
    the buffer point)."""
    if relation.mode != "two":
        raise ValueError("pushforward_density requires a two-section relation")
    lo, hi = entry.grid[0], entry.grid[-1]
    l_lo, l_hi = relation.L
    if lo < l_lo - 1e-12 or hi > l_hi + 1e-12:
        raise RangeError(f"entry support [{lo!r}, {hi!r}] escapes L={relation.L!r}")
    if relation.case == CASE_FUNNEL and hi > relation.buffer + 1e-12:
        raise ValueError(
            "entry crosses the buffer point: use pushforward_measure for the mixture"
        )
    t_grid = np.linspace(relation.two_section_relation(float(lo)),
                         relation.two_section_relation(float(hi)), grid_points)
    return TransportMeasure(t_grid, _exit_density_values(entry, relation, t_grid))


def pushforward_measure(entry: TransportMeasure, relation: SlowRelation,
                        grid_points: int = DEFAULT_GRID) -> TransportMeasure:
    """ε -> 0 limit of the exit measure. Tunnel case: the analytic push-forward.
    Funnel case: entry mass below the buffer point is pushed through the map
    onto (.., s_c^+); the rest becomes the Dirac atom at s_c^+."""
    if relation.mode != "two":
        raise ValueError("pushforward_measure requires a two-section relation")
    if relation.case != CASE_FUNNEL:
        return pushforward_density(entry, relation, grid_points)
    lo, hi = entry.grid[0], entry.grid[-1]
    buffer = relation.buffer
    tunnel_mass = float(cdf(entry, buffer)) if lo < buffer else 0.0
    atom = (float(relation.s_c_plus), 1.0 - tunnel_mass)
    if tunnel_mass <= 1e-12:
        # funnel-only entry: pure Dirac at the exit cut
        grid = np.linspace(relation.s_c_plus - 1e-6, relation.s_c_plus, 8)
        return TransportMeasure(grid, np.zeros(8), atoms=(
            (float(relation.s_c_plus), 1.0),))
    t_lo = relation.two_section_relation(float(lo))
    t_hi = relation.s_c_plus if hi >= buffer else relation.two_section_relation(float(hi))
    t_grid = np.linspace(t_lo, t_hi, grid_points)
    density = _exit_density_values(entry, relation, t_grid)
    if atom[1] <= 1e-12:
        return TransportMeasure(t_grid, density)
    return TransportMeasure(t_grid, density, atoms=(atom,))
