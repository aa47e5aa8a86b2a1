"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with pytest (lines are collected into the terminal summary) or directly
with ``python3 tests/test_acceptance.py``.
"""

import time

import numpy as np

from potcap.capacity import (
    candidate,
    decay_rates,
    density_approximation,
    estimate_capacity,
    family_samples,
    union_bounds,
    vnorm,
)
from potcap.cli import density_instance
from potcap.experiments import dichotomy_experiment
from potcap.geometry import CompactSetSpec, Domain, Grid
from potcap.potential import PotentialSpec
from potcap.rearrange import membership_diagnosis
from potcap.solver import (
    MeasureData,
    RadialMesh,
    TransportField,
    kato_check,
    laplacian_operator,
    radial_solve,
    solve_truncated,
    weak_residual,
)

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # pragma: no cover - standalone run without the tests dir on the path
    ACCEPTANCE_LINES = []

ORIGIN = np.zeros(3)
BALL = Domain.ball(ORIGIN, 1.0)
GRID = Grid(BALL, 1 / 16)
ZERO_SCHEDULE = [2**k for k in range(4, 25, 2)]
LADDER = [10 * 2**k for k in range(11)]


def _record(k, name, ok, detail, seconds):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {k:2d} {name}: {detail} ({seconds:.2f} s)"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _within(value, target, rel):
    return abs(value - target) <= rel * abs(target)


def test_criterion_01_lorentz_membership():
    t0 = time.perf_counter()
    expected = {1.0: "finite", 1.5: "finite", 1.9: "finite", 2.0: "divergent", 2.5: "divergent", 3.0: "divergent"}
    got, slowest = {}, 0.0
    for m in expected:
        t = time.perf_counter()
        got[m] = membership_diagnosis(PotentialSpec.point_power(ORIGIN, m), GRID, 1.5, 1).classification
        slowest = max(slowest, time.perf_counter() - t)
    ok = got == expected and slowest < 10
    _record(1, "Lorentz criterion", ok, f"{got}, slowest case {slowest:.2f} s", time.perf_counter() - t0)


def test_criterion_02_decay_rates():
    t0 = time.perf_counter()
    js = [8, 16, 32, 64, 128, 256, 512, 1024]
    parts, ok = [], True
    for m in (3, 4):
        r = decay_rates(CompactSetSpec.point(ORIGIN), PotentialSpec.point_power(ORIGIN, m), GRID, js)
        ok &= _within(r.grad_slope, -(m / 2 - 1), 0.10) and _within(r.lap_slope, -(m - 2), 0.10)
        parts.append(f"m={m}: {r.grad_slope:.4f}/{r.lap_slope:.4f}")
    dt = time.perf_counter() - t0
    _record(2, "decay rates", ok and dt < 60, "; ".join(parts), dt)


def _zero_sets():
    return {
        "point": CompactSetSpec.point(ORIGIN),
        "sphere": CompactSetSpec.sphere(ORIGIN, 0.5),
        "two points": CompactSetSpec.union(CompactSetSpec.point([0.3, 0, 0]), CompactSetSpec.point([-0.3, 0, 0])),
    }


def test_criterion_03_zero_capacity_detection():
    t0 = time.perf_counter()
    parts, ok = [], True
    for name, K in _zero_sets().items():
        e = estimate_capacity(K, PotentialSpec.distance_power(K, 3), GRID, ZERO_SCHEDULE)
        final = e.family_trace[-1][1].total
        ok &= e.verdict == "zero_detected" and final < 1e-3
        parts.append(f"{name}: {e.verdict} final {final:.3e}")
    _record(3, "zero-capacity detection", ok, "; ".join(parts), time.perf_counter() - t0)


def test_criterion_04_positive_floor():
    t0 = time.perf_counter()
    K, V = CompactSetSpec.point(ORIGIN), PotentialSpec.point_power(ORIGIN, 1)
    e = estimate_capacity(K, V, GRID, ZERO_SCHEDULE)
    totals = np.array([nv.total for _, nv in e.family_trace])
    r = decay_rates(K, V, GRID, [8, 16, 32, 64, 128, 256, 512, 1024])
    ok = e.verdict == "positive_floor" and np.all(np.diff(totals) > 0) and _within(r.grad_slope, 0.5, 0.15)
    _record(4, "positive-floor detection", ok, f"{e.verdict}, grad slope {r.grad_slope:.4f}", time.perf_counter() - t0)


def test_criterion_05_capacity_properties():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240501)
    failures = []
    for case in range(20):
        # nested pair K1 = {a} inside K = {a, b}, potential singular on K
        d = rng.normal(size=3)
        a = rng.uniform(0.2, 0.35) * d / np.linalg.norm(d)
        b = -a + rng.uniform(-0.05, 0.05, 3)
        K1 = CompactSetSpec.point(a)
        K = CompactSetSpec.union(K1, CompactSetSpec.point(b))
        m = rng.uniform(2.2, 4.0)
        V1 = PotentialSpec.distance_power(K, m)
        V2 = V1 + PotentialSpec.point_power(rng.uniform(-0.5, 0.5, 3), rng.uniform(0.5, 3.0), rng.uniform(0.1, 5.0))
        js = sorted(int(x) for x in rng.choice([16, 32, 64, 128, 256, 512], size=3, replace=False))

        big = estimate_capacity(K, V1, GRID, js)
        small = estimate_capacity(K1, V1, GRID, js, inherited=[big.best_candidate])
        if not small.upper_bound <= big.upper_bound:
            failures.append(f"case {case}: monotonicity in K")
        for j in js:
            c = candidate(K, j, family_samples(K, GRID, j))
            n1, n2 = vnorm(c, V1), vnorm(c, V2)
            if not n1.l1 >= c.one_region_measure():
                failures.append(f"case {case} j={j}: lower bound")
            if not n2.total <= n1.total:
                failures.append(f"case {case} j={j}: anti-monotone in V")
        if not estimate_capacity(K, V2, GRID, js).upper_bound <= big.upper_bound:
            failures.append(f"case {case}: estimate anti-monotone in V")
    detail = "20 cases, all exact" if not failures else "; ".join(failures[:5])
    _record(5, "capacity properties", not failures, detail, time.perf_counter() - t0)


def test_criterion_06_union():
    t0 = time.perf_counter()
    members = [CompactSetSpec.point([0.3, 0, 0]), CompactSetSpec.point([-0.3, 0, 0])]
    K = CompactSetSpec.union(*members)
    V = PotentialSpec.distance_power(K, 3)
    finals = [estimate_capacity(M, V, GRID, ZERO_SCHEDULE).family_trace[-1][1].total for M in members]
    union = estimate_capacity(K, V, GRID, ZERO_SCHEDULE)
    bounds_hold = True
    for j in ZERO_SCHEDULE:
        Phi = candidate(K, j, family_samples(K, GRID, j))
        bounds_hold &= union_bounds(Phi, Phi.meta["member_fields"], V)["holds"]
    u_final = union.family_trace[-1][1].total
    ok = max(finals) < 1e-3 and u_final < 1e-3 and bounds_hold
    detail = f"members {finals[0]:.3e}, {finals[1]:.3e}; union {u_final:.3e}; bounds hold at every j: {bounds_hold}"
    _record(6, "union theorem", ok, detail, time.perf_counter() - t0)


def test_criterion_07_discrete_kato():
    t0 = time.perf_counter()
    disk = Grid(Domain.ball([0, 0], 1.0), 1 / 32)
    L = laplacian_operator(disk)
    rng = np.random.default_rng(7)
    worst = -np.inf
    for _ in range(50):
        w = rng.normal(size=disk.size) * 10.0 ** rng.integers(-3, 4)
        w[rng.random(disk.size) < 0.2] = 0.0
        worst = max(worst, kato_check(w, L.apply(w), disk).worst_violation)
    _record(7, "discrete Kato", worst <= 1e-12, f"worst violation {worst:.3e} over 50 pairs", time.perf_counter() - t0)


def _dichotomy(m):
    return dichotomy_experiment(PotentialSpec.point_power(ORIGIN, m), MeasureData.dirac(ORIGIN),
                                RadialMesh(3, 1.0, 1024), LADDER)


def test_criterion_08_apriori_bound():
    t0 = time.perf_counter()
    spreads = {m: _dichotomy(m).ratio_spread for m in (1, 3)}
    ok = all(s < 2 for s in spreads.values())
    _record(8, "a-priori bound", ok, ", ".join(f"m={m}: spread {s:.3f}" for m, s in spreads.items()),
            time.perf_counter() - t0)


def test_criterion_09_dichotomy():
    t0 = time.perf_counter()
    t = time.perf_counter()
    ex = _dichotomy(1)
    t_ex = time.perf_counter() - t
    t = time.perf_counter()
    no = _dichotomy(3)
    t_no = time.perf_counter() - t
    g = np.array(ex.cauchy_gaps)
    halving = g[1:] / g[:-1]
    ok = (ex.verdict == "exists" and np.all(halving <= 0.6)
          and no.verdict == "no_solution" and no.l1_trace[-1] < 0.1 * no.l1_trace[0]
          and max(t_ex, t_no) < 120)
    detail = (f"m=1 {ex.verdict}, gap ratios {halving.min():.3f}..{halving.max():.3f}; "
              f"m=3 {no.verdict}, l1 {no.l1_trace[0]:.4g} -> {no.l1_trace[-1]:.4g}")
    _record(9, "existence/non-existence dichotomy", ok, detail, time.perf_counter() - t0)


def test_criterion_10_density():
    t0 = time.perf_counter()
    K = CompactSetSpec.point(ORIGIN)
    Phi, g = density_instance(K, BALL)
    steps = density_approximation(Phi, K, PotentialSpec.point_power(ORIGIN, 3), g, GRID, [8, 16, 32, 64, 128, 256])
    r = np.array([[s.potential_residual, s.gradient_residual, s.laplacian_residual] for s in steps])
    ok = bool(np.all(np.diff(r[1:], axis=0) < 0) and np.all(r[-1] < 1e-2 * r[0]))
    ratios = ", ".join(f"{x:.2e}" for x in r[-1] / r[0])
    _record(10, "weak-strong density", ok, f"final/initial {ratios}", time.perf_counter() - t0)


class _SinSquared:
    def evaluate(self, x):
        x = np.atleast_2d(x)
        s, c = np.sin(np.pi * x), np.cos(np.pi * x)
        v = (s[:, 0] * s[:, 1]) ** 2
        g = np.stack([2 * np.pi * s[:, 0] * c[:, 0] * s[:, 1] ** 2,
                      2 * np.pi * s[:, 1] * c[:, 1] * s[:, 0] ** 2], axis=1)
        lap = 2 * np.pi**2 * (np.cos(2 * np.pi * x[:, 0]) * s[:, 1] ** 2 + np.cos(2 * np.pi * x[:, 1]) * s[:, 0] ** 2)
        return v, g, lap


def _box_orders(kappa):
    res = []
    for h in (1 / 16, 1 / 32, 1 / 64, 1 / 128, 1 / 256):
        grid = Grid(Domain.box([0, 0], [1, 1]), h)
        U = TransportField.cellular(grid, kappa) if kappa else None
        f = MeasureData.from_density(lambda x: np.ones(len(x)), grid)
        u = solve_truncated(grid, np.ones(grid.size), U, f).u
        res.append(abs(weak_residual(u, _SinSquared(), np.ones(grid.size), U, f, grid)))
    res = np.array(res)
    return np.log2(res[:-1] / res[1:])


def test_criterion_11_solver_verification():
    t0 = time.perf_counter()
    mesh = RadialMesh(3, 1.0, 1024)
    u = radial_solve(3, np.zeros(mesh.cells), 1.0, mesh).u
    band = (mesh.centers >= 0.2) & (mesh.centers <= 0.8)
    green = (1 / mesh.centers[band] - 1) / (4 * np.pi)
    err = float(np.abs(u[band] / green - 1).max())
    plain = _box_orders(0)
    moving = _box_orders(5.0)
    # observed orders are judged on the two finest halvings, where both have settled
    ok = err < 0.03 and np.all(np.abs(plain[-2:] - 2) < 0.1) and np.all(np.abs(moving[-2:] - 1) < 0.1)
    detail = (f"Green rel err {err:.2e}; orders without transport {np.round(plain, 3).tolist()}, "
              f"with transport {np.round(moving, 3).tolist()}")
    _record(11, "solver verification", ok, detail, time.perf_counter() - t0)


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    raise SystemExit(1 if failed else 0)
