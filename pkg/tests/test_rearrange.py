import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from potcap.geometry import CompactSetSpec, Domain, Grid
from potcap.potential import PotentialSpec
from potcap.rearrange import (
    WeightedSamples,
    decreasing_rearrangement,
    distribution_function,
    double_star,
    lorentz_norm,
    membership_diagnosis,
)
from potcap.sampling import graded_samples

TWO_CELL = WeightedSamples([1.0, 3.0], [0.75, 0.25])


def test_distribution_of_a_constant():
    u = WeightedSamples(np.full(4, 2.0), np.full(4, 0.25))
    assert distribution_function(u, 2.0) == 0.0
    assert distribution_function(u, 1.0) == 1.0


def test_distribution_of_an_indicator():
    u = WeightedSamples([1, 1, 0, 0], [0.25] * 4)
    assert distribution_function(u, 0.5) == 0.5


def test_two_cell_rearrangement():
    r = decreasing_rearrangement(TWO_CELL)
    assert list(r.breakpoints) == [3.0, 1.0]
    assert list(r.cumulative_measures) == [0.25, 1.0]
    assert r(0.1) == 3.0 and r(0.25) == 3.0 and r(0.5) == 1.0


def test_double_star_examples():
    r = decreasing_rearrangement(TWO_CELL)
    assert double_star(r, 0.5) == pytest.approx(2.0)
    assert double_star(r, 1.0) == pytest.approx(0.25 * 3 + 0.75 * 1)
    c = decreasing_rearrangement(WeightedSamples(np.full(3, 4.0), np.ones(3)))
    assert np.allclose(double_star(c, np.array([0.1, 1.5, 3.0])), 4.0)
    with pytest.raises(ValueError):
        double_star(r, 0.0)


def test_constant_rearrangement():
    r = decreasing_rearrangement(WeightedSamples(np.full(5, 1.5), np.full(5, 0.2)))
    assert np.all(r.breakpoints == 1.5) and r.total_measure == pytest.approx(1.0)


def test_lorentz_of_zero_and_invalid_exponents():
    z = WeightedSamples(np.zeros(3), np.ones(3))
    for p, q in [(1, 1), (2, 3), (1.5, np.inf), (np.inf, np.inf)]:
        assert lorentz_norm(z, p, q).value == 0
    for p, q in [(0.5, 1), (2, 0), (2, -1)]:
        with pytest.raises(ValueError):
            lorentz_norm(TWO_CELL, p, q)


def test_lorentz_special_cases():
    # p = q = inf is the ess-sup; L^{1,1} with the 1/|Omega| factor is the mean
    assert lorentz_norm(TWO_CELL, np.inf, np.inf).value == 3.0
    u = WeightedSamples([2.0, 1.0], [0.5, 1.5])
    # (1/|O|) int_0^|O| u_** dt with u_** = 2 on (0, 1/2] and (1/2 + t)/t after
    expected = (0.5 * 2 + 1.5 + 0.5 * np.log(2 / 0.5)) / 2.0
    assert lorentz_norm(u, 1, 1).value == pytest.approx(expected, rel=1e-13)


def test_lorentz_general_q_matches_closed_form():
    # single value c on measure |O|: ||c||_{p,q} = c (p/q)^(1/q) |O|^(1/p) / |O|^(1/q)
    u = WeightedSamples([2.0], [3.0])
    p, q = 2.0, 3.0
    expected = (2.0**q * 3.0 ** (q / p) / (q / p) / 3.0) ** (1 / q)
    assert lorentz_norm(u, p, q).value == pytest.approx(expected, rel=1e-12)


def _powerlaw_samples(scale_level):
    g = Grid(Domain.ball(np.zeros(3), 1.0), 1 / 16)
    s = graded_samples(g, [CompactSetSpec.point(np.zeros(3))], feature_scale=2.0**-scale_level, inner_octaves=0)
    return WeightedSamples(np.linalg.norm(s.points, axis=1) ** -1.5, s.weights)


def test_lorentz_of_a_power_law_matches_the_closed_form():
    # |x|^{-3/2} on the unit ball of R^3, (p, q) = (3/2, 1): u_* = (t/|O|)^{-1/2},
    # u_** = 2 u_*, norm = 12 |O|^{-1/3}; the graded rule omits the core below 2^-15
    omega = 4 * np.pi / 3
    exact = 12 * omega ** (-1 / 3)
    v = lorentz_norm(_powerlaw_samples(15), 1.5, 1).value
    assert v == pytest.approx(exact, rel=3e-3)
    assert v < exact


def test_lorentz_power_law_stable_under_refinement():
    vals = [lorentz_norm(_powerlaw_samples(k), 1.5, 1).value for k in (9, 10, 11)]
    assert abs(vals[2] - vals[0]) / vals[2] < 0.02


values = arrays(np.float64, st.integers(1, 40), elements=st.floats(-50, 50, allow_nan=False))


def _weights(n, seed):
    return np.random.default_rng(seed).uniform(0.1, 2.0, n)


@settings(max_examples=60, deadline=None)
@given(values, st.integers(0, 1000), st.floats(-60, 60))
def test_equimeasurability(v, seed, t):
    u = WeightedSamples(v, _weights(len(v), seed))
    r = decreasing_rearrangement(u)
    assert r.distribution(t) == pytest.approx(distribution_function(u, t), rel=1e-12, abs=1e-12)
    assert np.all(np.diff(r.breakpoints) <= 0)


@settings(max_examples=60, deadline=None)
@given(values, st.integers(0, 1000))
def test_power_integrals_preserved(v, seed):
    u = WeightedSamples(v, _weights(len(v), seed))
    r = decreasing_rearrangement(u.abs())
    for p in (1, 2):
        assert np.dot(r.breakpoints**p, r.cell_measures) == pytest.approx(
            np.dot(np.abs(v) ** p, u.weights), rel=1e-12, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(values, st.integers(0, 1000))
def test_double_star_dominates(v, seed):
    u = WeightedSamples(v, _weights(len(v), seed))
    r = decreasing_rearrangement(u.abs())
    t = np.concatenate([r.cumulative_measures, np.geomspace(r.total_measure * 1e-3, r.total_measure, 50)])
    assert np.all(double_star(r, t) >= r(t) * (1 - 1e-12) - 1e-12)


pq = st.sampled_from([(1.0, 1.0), (1.5, 1.0), (2.0, 2.0), (3.0, 0.5), (1.5, np.inf), (np.inf, np.inf)])


@settings(max_examples=60, deadline=None)
@given(values, st.integers(0, 1000), pq, st.floats(-5, 5).filter(lambda x: abs(x) > 1e-3))
def test_homogeneity(v, seed, pq, lam):
    u = WeightedSamples(v, _weights(len(v), seed))
    a = lorentz_norm(u.scaled(lam), *pq).value
    b = abs(lam) * lorentz_norm(u, *pq).value
    assert a == pytest.approx(b, rel=1e-10, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(values, st.integers(0, 1000), pq, st.integers(0, 1000))
def test_monotonicity(v, seed, pq, seed2):
    w = _weights(len(v), seed)
    bigger = np.abs(v) + np.random.default_rng(seed2).uniform(0, 3, len(v))
    a = lorentz_norm(WeightedSamples(v, w), *pq).value
    b = lorentz_norm(WeightedSamples(bigger, w), *pq).value
    assert a <= b * (1 + 1e-12) + 1e-12


@pytest.fixture(scope="module")
def grid3():
    return Grid(Domain.ball(np.zeros(3), 1.0), 1 / 16)


@pytest.mark.parametrize("m,expected", [(1.5, "finite"), (2.5, "divergent"), (2.0, "divergent")])
def test_membership_examples(grid3, m, expected):
    d = membership_diagnosis(PotentialSpec.point_power(np.zeros(3), m), grid3, 1.5, 1)
    assert d.classification == expected


def test_membership_growth_exponent(grid3):
    # increments of the norm scale like scale^(2 - m)
    for m in (1.5, 2.5, 3.0):
        d = membership_diagnosis(PotentialSpec.point_power(np.zeros(3), m), grid3, 1.5, 1)
        assert d.growth_exponent == pytest.approx(m - 2, abs=0.02)


def test_membership_needs_three_levels(grid3):
    with pytest.raises(ValueError):
        membership_diagnosis(PotentialSpec.point_power(np.zeros(3), 1.5), grid3, 1.5, 1, levels=2)


def test_membership_is_fast(grid3):
    t = time.perf_counter()
    membership_diagnosis(PotentialSpec.point_power(np.zeros(3), 1.9), grid3, 1.5, 1)
    assert time.perf_counter() - t < 10
