import numpy as np
import pytest

import oracles
from canard_lab import measures as M
from canard_lab.relation import SlowRelation
from canard_lab.sdi import ATTRACTING, REPELLING


@pytest.fixture(scope="module")
def rel_a(vdp_eval):
    return SlowRelation.two_section(vdp_eval, oracles.L_CASE_A, *oracles.SECTIONS_A)


@pytest.fixture(scope="module")
def rel_b(vdp_eval):
    return SlowRelation.two_section(vdp_eval, oracles.L_CASE_B, *oracles.SECTIONS_B)


@pytest.fixture(scope="module")
def entry_a():
    return M.make_entry("uniform", oracles.L_CASE_A)


@pytest.fixture(scope="module")
def entry_b():
    return M.make_entry("uniform", oracles.L_CASE_B)


# -- construction ------------------------------------------------------------------


def test_uniform_density_value(entry_a):
    # 1/|L| = 1/(1/20 - 1/30 + 1/150) = 42.857142...
    assert entry_a.density[0] == pytest.approx(1.0 / (0.05 - (1.0 / 30.0 - 1.0 / 150.0)),
                                               rel=1e-12)
    assert entry_a.continuous_mass == pytest.approx(1.0, abs=1e-12)


def test_truncated_cauchy_symmetry():
    m = M.make_entry("truncated_cauchy", (0.2, 0.6))
    center = 0.4
    assert M.cdf(m, center) == pytest.approx(0.5, abs=1e-9)
    assert m.density_at(0.3) == pytest.approx(m.density_at(0.5), rel=1e-12)


def test_cauchy_explicit_parameters():
    m = M.make_entry("truncated_cauchy", (0.0, 1.0), location=0.25, scale=0.1)
    grid_peak = m.grid[np.argmax(m.density)]
    assert grid_peak == pytest.approx(0.25, abs=1e-3)


def test_table_of_ones_is_uniform():
    m = M.make_entry("table", (0.0, 1.0), values=np.ones(101))
    assert np.allclose(m.density, 1.0)
    assert M.cdf(m, 0.5) == pytest.approx(0.5, abs=1e-12)


def test_all_zero_table_rejected():
    with pytest.raises(ValueError):
        M.make_entry("table", (0.0, 1.0), values=np.zeros(11))


def test_mass_gate():
    grid = np.linspace(0.0, 1.0, 11)
    with pytest.raises(ValueError):
        M.TransportMeasure(grid, np.full(11, 2.0))
    with pytest.raises(ValueError):
        M.TransportMeasure(grid, np.full(11, -1.0))


# -- cdf ---------------------------------------------------------------------------


def test_cdf_bounds(entry_a):
    lo, hi = entry_a.support
    assert M.cdf(entry_a, lo - 1.0) == 0.0
    assert M.cdf(entry_a, hi + 1.0) == pytest.approx(1.0, abs=1e-8)


def test_cdf_atom_jump():
    grid = np.linspace(0.0, 1.0, 11)
    m = M.TransportMeasure(grid, np.full(11, 0.5), atoms=((0.5, 0.5),))
    assert M.cdf(m, 0.5 - 1e-12) == pytest.approx(0.25, abs=1e-9)
    assert M.cdf(m, 0.5) == pytest.approx(0.75, abs=1e-9)


def test_cdf_monotone_right_continuous(rel_b, entry_b):
    mix = M.pushforward_measure(entry_b, rel_b)
    lo, hi = mix.support
    probe = np.linspace(lo - 0.01, hi + 0.01, 10000)
    vals = np.asarray(M.cdf(mix, probe))
    assert np.all(np.diff(vals) >= -1e-14)
    loc, mass = mix.atoms[0]
    assert M.cdf(mix, loc) - M.cdf(mix, np.nextafter(loc, -1.0)) == pytest.approx(
        mass, abs=1e-9)


# -- sampling ----------------------------------------------------------------------


def test_uniform_sampling_is_inverse_cdf():
    m = M.make_entry("uniform", (0.0, 1.0))
    samp = M.sample(m, 256, seed=1)
    us = M._uniform_stream(1, 256)
    assert np.allclose(np.sort(samp.values), np.sort(us), atol=1e-12)


def test_pure_atom_sampling():
    grid = np.linspace(0.0, 1e-6, 8)
    m = M.TransportMeasure(grid, np.zeros(8), atoms=((0.25, 1.0),))
    samp = M.sample(m, 50, seed=9)
    assert np.all(samp.values == 0.25)


def test_sampling_reproducible():
    m = M.make_entry("uniform", (0.2, 0.9))
    a = M.sample(m, 100, seed=5)
    b = M.sample(m, 100, seed=5)
    c = M.sample(m, 100, seed=6)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_sampling_prefix_stable():
    # per-index streams: the first k draws do not depend on the total count
    m = M.make_entry("uniform", (0.0, 1.0))
    small = M.sample(m, 10, seed=3)
    big = M.sample(m, 50, seed=3)
    assert np.array_equal(small.values, big.values[:10])


def test_empirical_cdf_close_to_cdf():
    m = M.make_entry("truncated_cauchy", (0.0, 1.0), location=0.3, scale=0.15)
    samp = M.sample(m, 100_000, seed=17)
    assert M.ks_distance(samp, m) < 0.01


# -- KS distance -------------------------------------------------------------------


def test_ks_all_samples_at_atom():
    grid = np.linspace(0.0, 1e-6, 8)
    m = M.TransportMeasure(grid, np.zeros(8), atoms=((0.7, 1.0),))
    samp = M.EmpiricalSample(np.full(40, 0.7), seed=0, count=40)
    assert M.ks_distance(samp, m) == 0.0


def test_ks_disjoint_uniforms():
    target = M.make_entry("uniform", (0.5, 1.0))
    samp = M.sample(M.make_entry("uniform", (0.0, 1.0)), 2000, seed=2)
    assert M.ks_distance(samp, target) >= 0.45


def test_ks_detects_shift():
    m = M.make_entry("uniform", (0.0, 1.0))
    shifted = M.EmpiricalSample(M.sample(m, 5000, seed=4).values + 0.2, seed=4, count=5000)
    assert M.ks_distance(shifted, m) == pytest.approx(0.2, abs=0.03)


# -- histogram ---------------------------------------------------------------------


def test_histogram_even_spread():
    samp = M.EmpiricalSample(np.arange(0.05, 1.0, 0.1), seed=0, count=10)
    bins = M.histogram(samp, bins=10)
    assert len(bins) == 10
    assert all(count == 1 for _, _, count in bins)


def test_histogram_degenerate():
    samp = M.EmpiricalSample(np.full(7, 0.3), seed=0, count=7)
    assert M.histogram(samp, bins=10) == [(0.3, 0.3, 7)]


def test_histogram_counts_sum():
    samp = M.sample(M.make_entry("uniform", (0.0, 1.0)), 500, seed=8)
    bins = M.histogram(samp, bins=10)
    assert sum(count for _, _, count in bins) == 500
    assert bins[-1][1] >= np.max(samp.values)


# -- push-forward -------------------------------------------------------------------


def test_pushforward_quartic_identity(quartic_eval):
    rel = SlowRelation.two_section(quartic_eval, (0.01, 0.04), 0.05, 0.1)
    entry = M.make_entry("truncated_cauchy", (0.012, 0.038), location=0.02, scale=0.004)
    exit_measure = M.pushforward_density(entry, rel)
    for s in np.linspace(0.013, 0.037, 50):
        assert exit_measure.density_at(s) == pytest.approx(entry.density_at(s),
                                                           rel=1e-6, abs=1e-8)


def test_pushforward_uniform_formula(vdp_eval, rel_a, entry_a):
    # uniform entry: D_ex(t) = -(1/|L|) I+'(t) / I-'(S0^{-1}(t))
    exit_measure = M.pushforward_density(entry_a, rel_a)
    width = oracles.L_CASE_A[1] - oracles.L_CASE_A[0]
    for t in np.linspace(exit_measure.grid[0], exit_measure.grid[-1], 20):
        t = float(t)
        sinv = rel_a.relation_inverse(t)
        expected = -(1.0 / width) * vdp_eval.sdi_derivative(t, REPELLING) / \
            vdp_eval.sdi_derivative(sinv, ATTRACTING)
        assert exit_measure.density_at(t) == pytest.approx(expected, rel=1e-6)


def test_pushforward_mass_conserved_case_a(rel_a, entry_a):
    exit_measure = M.pushforward_density(entry_a, rel_a)
    assert exit_measure.continuous_mass + exit_measure.atom_mass == pytest.approx(
        1.0, abs=1e-8)
    assert exit_measure.atoms == ()


def test_pushforward_exit_interval(rel_a, entry_a):
    exit_measure = M.pushforward_density(entry_a, rel_a)
    assert exit_measure.grid[0] == pytest.approx(oracles.VDP_S0_L_LO, abs=1e-9)
    assert exit_measure.grid[-1] == pytest.approx(oracles.VDP_S0_005, abs=1e-9)


def test_pushforward_density_rejects_funnel_straddle(rel_b, entry_b):
    with pytest.raises(ValueError):
        M.pushforward_density(entry_b, rel_b)


def test_pushforward_measure_mixture(rel_b, entry_b):
    mix = M.pushforward_measure(entry_b, rel_b)
    assert len(mix.atoms) == 1
    loc, mass = mix.atoms[0]
    assert loc == oracles.SECTIONS_B[1]
    # atom mass = entry mass at or above the buffer point
    expected = (oracles.L_CASE_B[1] - rel_b.buffer) / (
        oracles.L_CASE_B[1] - oracles.L_CASE_B[0])
    assert mass == pytest.approx(expected, abs=1e-9)
    assert mix.continuous_mass + mix.atom_mass == pytest.approx(1.0, abs=1e-8)
    assert mix.grid[-1] == pytest.approx(loc, abs=1e-12)


def test_pushforward_measure_funnel_only(rel_b):
    entry = M.make_entry("uniform", (0.07, 0.08))
    mix = M.pushforward_measure(entry, rel_b)
    assert mix.atoms == ((oracles.SECTIONS_B[1], 1.0),)
    assert mix.continuous_mass == pytest.approx(0.0, abs=1e-12)


def test_pushforward_measure_tunnel_only(rel_b):
    entry = M.make_entry("uniform", (0.052, 0.06))
    mix = M.pushforward_measure(entry, rel_b)
    assert mix.atoms == ()
    assert mix.continuous_mass == pytest.approx(1.0, abs=1e-8)


def test_pushforward_support_check(rel_a):
    outside = M.make_entry("uniform", (0.01, 0.03))
    with pytest.raises(Exception):
        M.pushforward_density(outside, rel_a)


def test_monte_carlo_matches_analytic_case_a(rel_a, entry_a):
    # empirical push-forward: sample the entry, map pointwise through S0
    samp = M.sample(entry_a, 10_000, seed=11)
    mapped = np.array([rel_a.two_section_relation(float(v)) for v in samp.values])
    analytic = M.pushforward_density(entry_a, rel_a)
    ks = M.ks_distance(M.EmpiricalSample(mapped, 11, len(mapped)), analytic)
    assert ks < 0.02


def test_monte_carlo_matches_analytic_case_b(rel_b, entry_b):
    samp = M.sample(entry_b, 10_000, seed=12)
    mapped = np.array([rel_b.limit_map(float(v)) for v in samp.values])
    analytic = M.pushforward_measure(entry_b, rel_b)
    ks = M.ks_distance(M.EmpiricalSample(mapped, 12, len(mapped)), analytic)
    assert ks < 0.02
