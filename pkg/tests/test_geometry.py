import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from potcap.geometry import (
    BOUNDARY,
    CompactSetSpec,
    Domain,
    Grid,
    clearance,
    distance_to_set,
    regularized_distance,
    smooth_distance,
    transition_H,
)


def test_distance_examples():
    assert distance_to_set([0.3, 0, 0], CompactSetSpec.point([0, 0, 0])) == pytest.approx(0.3)
    assert distance_to_set([0, 0, 0], CompactSetSpec.sphere([0, 0, 0], 0.5)) == pytest.approx(0.5)
    K = CompactSetSpec.union(CompactSetSpec.point([0.2, 0]), CompactSetSpec.point([-0.2, 0]))
    assert distance_to_set([0, 0], K) == pytest.approx(0.2)


coords = st.floats(-0.9, 0.9, allow_nan=False)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(coords, coords), min_size=1, max_size=5), coords, coords, st.floats(0.05, 0.5))
def test_union_distance_is_exact_minimum(pts, x, y, r):
    members = [CompactSetSpec.point(p) for p in pts] + [CompactSetSpec.sphere([0.1, -0.1], r)]
    U = CompactSetSpec.union(*members)
    q = np.array([x, y])
    assert distance_to_set(q, U) == min(distance_to_set(q, m) for m in members)


def test_transition_endpoints():
    H, dH, _ = transition_H(np.array([0.5]))
    assert H[0] == 0 and dH[0] == 0
    H, _, d2H = transition_H(np.array([3.0]))
    assert H[0] == 1 and d2H[0] == 0
    # symmetric quintic; polynomial value at the midpoint
    assert transition_H(np.array([1.5]))[0][0] == pytest.approx(0.5, abs=1e-15)


def test_transition_monotone_and_bounded():
    t = np.linspace(-1, 4, 5001)
    H, dH, _ = transition_H(t)
    assert np.all(np.diff(H) >= 0)
    assert np.all((0 <= H) & (H <= 1))
    assert np.all(dH >= 0)


def test_transition_derivatives_match_finite_differences():
    t = np.linspace(1.05, 1.95, 37)
    e = 1e-5
    H, dH, d2H = transition_H(t)
    fd1 = (transition_H(t + e)[0] - transition_H(t - e)[0]) / (2 * e)
    fd2 = (transition_H(t + e)[1] - transition_H(t - e)[1]) / (2 * e)
    assert np.allclose(fd1, dH, rtol=1e-6, atol=1e-9)
    assert np.allclose(fd2, d2H, rtol=1e-6, atol=1e-6)


def _one_sided_second(t0, e):
    # second-order one-sided stencil (2 f0 - 5 f1 + 4 f2 - f3) / e^2
    t = t0 + e * np.arange(4)
    f = transition_H(t)[0]
    return (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / e**2


@pytest.mark.parametrize("t0", [1.0, 2.0])
def test_transition_is_C2_at_the_knots(t0):
    e = 1e-4
    left = _one_sided_second(t0, -e)
    right = _one_sided_second(t0, e)
    assert abs(left - right) < 1e-4
    assert abs(transition_H(np.array([t0]))[2][0]) < 1e-12


def test_grid_nodes_strictly_inside(ball3, disk):
    for g in (ball3, disk):
        assert np.all(g.domain.boundary_distance(g.nodes) > 0)
        assert np.all(g.arm > 0) and np.all(g.arm <= g.h)
        assert g.cell_measure == g.h**g.n


def test_box_grid_requires_commensurate_spacing():
    with pytest.raises(ValueError):
        Grid(Domain.box([0, 0], [1, 1]), 0.3)
    g = Grid(Domain.box([0, 0], [1, 1]), 0.25)
    assert g.size == 9 and np.all(g.arm == 0.25)


def test_ball_lattice_avoids_the_centre(ball3):
    assert np.linalg.norm(ball3.nodes, axis=1).min() > 0


def test_regularized_distance_to_a_point(ball3, origin3):
    sd = regularized_distance(origin3, ball3)
    d = distance_to_set(ball3.nodes, origin3)
    assert sd.M <= 2
    assert np.all(sd.values >= 0)
    assert np.all(d / sd.M <= sd.values * (1 + 1e-12)) and np.all(sd.values <= sd.M * d * (1 + 1e-12))
    assert np.all(np.linalg.norm(sd.gradient, axis=1) <= sd.c1 * (1 + 1e-12))
    assert np.all(np.abs(sd.values * sd.laplacian) <= sd.c2 * (1 + 1e-12))


def test_regularized_distance_to_the_boundary(ball3):
    sd = regularized_distance(BOUNDARY, ball3)
    delta = ball3.domain.boundary_distance(ball3.nodes)
    r = sd.values / delta
    assert np.all(r <= sd.M) and np.all(1 / r <= sd.M)
    # equivalent to 1 - |x| with a modest constant
    assert sd.M < 2


def test_regularized_distance_sphere_and_union_bounds():
    grid = Grid(Domain.ball(np.zeros(3), 1.0), 1 / 24)
    for K in (CompactSetSpec.sphere([0, 0, 0], 0.5),
              CompactSetSpec.union(CompactSetSpec.point([0.3, 0, 0]), CompactSetSpec.point([-0.3, 0, 0]))):
        sd = regularized_distance(K, grid)
        d = distance_to_set(grid.nodes, K)
        assert np.all(d / sd.M <= sd.values * (1 + 1e-12))
        assert np.all(sd.values <= sd.M * d * (1 + 1e-12))
        assert sd.M <= 2


def test_regularized_distance_is_zero_only_on_the_set():
    rho = smooth_distance(np.array([[0.0, 0.0], [0.1, 0.0]]), CompactSetSpec.point([0, 0]))[0]
    assert rho[0] == 0 and rho[1] > 0


def test_regularized_distance_rejects_coarse_grids():
    g = Grid(Domain.ball([0, 0], 1.0), 1 / 8)
    with pytest.raises(ValueError):
        regularized_distance(CompactSetSpec.point([0.5, 0]), g)


def test_clearance_sign():
    dom = Domain.ball([0, 0], 1.0)
    assert clearance(CompactSetSpec.point([0.5, 0]), dom) == pytest.approx(0.5)
    assert clearance(CompactSetSpec.point([1.0, 0]), dom) <= 0
