"""The (V, inf)-capacity: norm, explicit cutoff families and estimators.

For ``psi`` in C^2_c equal to 1 near ``K``,

    ||psi||_{V,inf} = ||psi||_1 + ||grad psi / sqrt(V)||_inf + ||lap psi / V||_inf,

and the capacity of ``K`` is the infimum over such ``psi``.  The estimator
here only ever certifies upper bounds: it evaluates the norm along the
cutoff family ``psi_j = (1 - H(j rho_K)) H(j rho)`` and reports the trend.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fields import product
from .geometry import (
    CompactSetSpec,
    clearance,
    smooth_boundary_distance,
    smooth_distance,
    transition_H,
)
from .potential import PotentialSpec
from .sampling import Samples, as_samples, graded_samples

__all__ = [
    "CapacityEstimate",
    "DensityStep",
    "TestFunctionField",
    "VNorm",
    "build_cutoff",
    "candidate",
    "combine_cutoffs",
    "cutoff_bounds",
    "decay_rates",
    "density_approximation",
    "estimate_capacity",
    "family_samples",
    "fit_slope",
    "g_admissible",
    "irregular_set",
    "mu_schedule",
    "union_bounds",
    "vnorm",
]


@dataclass(eq=False)
class TestFunctionField:
    """A sampled C^2 field with analytic gradient and Laplacian."""

    psi: np.ndarray
    grad: np.ndarray
    lap: np.ndarray
    samples: Samples
    meta: dict = field(default_factory=dict)
    evaluator: Callable | None = None

    __test__ = False  # not a pytest class

    @property
    def one_region(self):
        return self.psi == 1.0

    @property
    def support(self):
        return (self.psi != 0) | np.any(self.grad != 0, axis=1) | (self.lap != 0)

    @property
    def derivative_support(self):
        return np.any(self.grad != 0, axis=1) | (self.lap != 0)

    def one_region_measure(self):
        return float(self.samples.weights[self.one_region].sum())

    def evaluate(self, points):
        if self.evaluator is None:
            raise ValueError("this field has no evaluator")
        return self.evaluator(points)


@dataclass(frozen=True)
class VNorm:
    l1: float
    grad_term: float
    lap_term: float

    @property
    def total(self):
        return self.l1 + self.grad_term + self.lap_term

    @property
    def divergent(self):
        return not np.isfinite(self.total)

    def as_row(self):
        return (self.l1, self.grad_term, self.lap_term, self.total)


def _potential_values(V, samples):
    if isinstance(V, PotentialSpec) or callable(V):
        return np.asarray(V(samples.points), dtype=float)
    V = np.asarray(V, dtype=float)
    if V.shape != (samples.size,):
        raise ValueError("potential array does not match the samples")
    return V


def _weighted_sup(num, V, power):
    """``max |num| / V^power`` over nodes with ``num != 0`` (inf where V = 0)."""
    active = num != 0
    if not np.any(active):
        return 0.0
    Va = V[active]
    if np.any(Va <= 0):
        return np.inf
    with np.errstate(over="ignore"):
        q = num[active] / (np.sqrt(Va) if power == 0.5 else Va)
    return float(q.max())


def vnorm(psi, V, grid=None):
    """``(V, inf)``-norm of a sampled test function.

    The L^1 part is the weighted sum of ``psi``; the two sup terms are maxima
    over the samples where the respective derivative is nonzero, so samples
    with vanishing derivatives contribute nothing whatever ``V`` is there.
    ``V`` may be a :class:`PotentialSpec`, a callable or an array of values.
    """
    samples = psi.samples if grid is None else as_samples(grid)
    Vv = _potential_values(V, samples)
    # summing the one-region first makes l1 >= its measure exactly in floating point
    one = psi.one_region
    l1 = float(samples.weights[one].sum() + np.dot(np.abs(psi.psi[~one]), samples.weights[~one]))
    gnorm = np.linalg.norm(psi.grad, axis=1)
    grad_term = _weighted_sup(gnorm, Vv, 0.5)
    lap_term = _weighted_sup(np.abs(psi.lap), Vv, 1.0)
    return VNorm(l1, grad_term, lap_term)


# ---------------------------------------------------------------------------
# cutoffs


def _equivalence_bound(A):
    """Upper bound on ``d(x; A) / rho_A(x)`` for the supported regularizations."""
    if A.kind == "points":
        return len(A.points) ** 0.25
    if A.kind == "sphere":
        return 1.5
    if A.kind == "union":
        live = [m for m in A.members if not m.is_empty]
        return len(live) ** 0.25 * max(_equivalence_bound(m) for m in live)
    raise ValueError(f"no cutoff for a {A.kind!r} set")


def _cutoff_triple(points, A, j, domain):
    rhoA, gA, lA = smooth_distance(points, A)
    Ha, dHa, d2Ha = transition_H(j * rhoA)
    inner = (1.0 - Ha, -j * dHa[:, None] * gA, -(j**2) * d2Ha * (gA**2).sum(axis=1) - j * dHa * lA)
    rho, gb, lb = smooth_boundary_distance(points, domain)
    Hb, dHb, d2Hb = transition_H(j * rho)
    outer = (Hb, j * dHb[:, None] * gb, (j**2) * d2Hb * (gb**2).sum(axis=1) + j * dHb * lb)
    return product(inner, outer)


def build_cutoff(A, j, grid):
    """Cutoff ``psi_j = (1 - H(j rho_A)) H(j rho)`` sampled on ``grid``.

    ``grid`` may be a :class:`~potcap.geometry.Grid` or a graded
    :class:`~potcap.sampling.Samples` set.  ``psi_j = 1`` where
    ``rho_A < 1/j`` and ``psi_j = 0`` where ``rho_A >= 2/j``.  The achieved
    constants of ``rho_A |grad psi_j|`` and ``rho_A^2 |lap psi_j|`` on the
    transition set are stored in ``meta``.
    """
    samples = as_samples(grid)
    domain = samples.domain
    if j <= 0:
        raise ValueError("j must be positive")
    cl = clearance(A, domain)
    if not (2.0 * _equivalence_bound(A) / j < cl):
        raise ValueError(f"j={j} too small: the cutoff support reaches the boundary (clearance {cl:g})")
    psi, grad, lap = _cutoff_triple(samples.points, A, j, domain)
    f = TestFunctionField(
        psi, grad, lap, samples,
        meta={"j": j, "set": A},
        evaluator=lambda x, A=A, j=j, d=domain: _cutoff_triple(np.atleast_2d(x), A, j, d),
    )
    f.meta.update(cutoff_bounds(f, A))
    return f


def cutoff_bounds(psi, A):
    """Sup of ``rho_A |grad psi|`` and ``rho_A^2 |lap psi|`` on ``{1/j < rho_A < 2/j}``."""
    j = psi.meta["j"]
    rhoA = smooth_distance(psi.samples.points, A)[0]
    D = (rhoA > 1.0 / j) & (rhoA < 2.0 / j)
    if not np.any(D):
        return {"c_grad": 0.0, "c_lap": 0.0}
    return {
        "c_grad": float((rhoA[D] * np.linalg.norm(psi.grad[D], axis=1)).max()),
        "c_lap": float((rhoA[D] ** 2 * np.abs(psi.lap[D])).max()),
    }


def _union_of(members):
    sets = [m.meta.get("set") for m in members]
    if any(s is None for s in sets):
        return None
    return sets[0] if len(sets) == 1 else CompactSetSpec.union(*sets)


def _combine_triples(triples, mu, points, domain):
    # 1 - prod(1 - psi_i), then times H(2 rho / mu)
    val = np.ones(len(points))
    grad = np.zeros_like(points, dtype=float)
    lap = np.zeros(len(points))
    acc = (val, grad, lap)
    for psi, g, l in triples:
        acc = product(acc, (1.0 - psi, -g, -l))
    comb = (1.0 - acc[0], -acc[1], -acc[2])
    rho, gb, lb = smooth_boundary_distance(points, domain)
    c = 2.0 / mu
    Hb, dHb, d2Hb = transition_H(c * rho)
    outer = (Hb, c * dHb[:, None] * gb, c**2 * d2Hb * (gb**2).sum(axis=1) + c * dHb * lb)
    return product(comb, outer)


def combine_cutoffs(members, mu_j, grid=None):
    """Union cutoff ``(1 - prod_i (1 - psi_i)) H(2 rho / mu_j)``.

    All members must be sampled on the same point set.  Requires
    ``3 mu_j < dist(union of the member sets; boundary)``.
    """
    if not members:
        raise ValueError("need at least one member cutoff")
    samples = members[0].samples if grid is None else as_samples(grid)
    for m in members:
        if m.samples.points.shape != samples.points.shape or not (
            m.samples is samples or np.array_equal(m.samples.points, samples.points)
        ):
            raise ValueError("member cutoffs must share one sample set")
    K = _union_of(members)
    if K is not None:
        cl = clearance(K, samples.domain)
        if not 3.0 * mu_j < cl:
            raise ValueError(f"3*mu_j = {3 * mu_j:g} must stay below the clearance {cl:g}")
    psi, grad, lap = _combine_triples([(m.psi, m.grad, m.lap) for m in members], mu_j, samples.points, samples.domain)

    evaluators = [m.evaluator for m in members]

    def evaluator(x, evaluators=evaluators, mu=mu_j, domain=samples.domain):
        x = np.atleast_2d(x)
        return _combine_triples([e(x) for e in evaluators], mu, x, domain)

    j = members[0].meta.get("j")
    return TestFunctionField(
        psi, grad, lap, samples,
        meta={"j": j, "mu": mu_j, "set": K, "members": len(members)},
        evaluator=evaluator if all(e is not None for e in evaluators) else None,
    )


def union_bounds(Phi, members, V):
    """Check the union bounds for the combined cutoff.

    ``grad_term(Phi) <= S`` and ``lap_term(Phi) <= S + S^2`` where ``S`` is
    the sum of the members' norms.  Returns the two sides and the slacks.
    """
    S = sum(vnorm(m, V).total for m in members)
    nPhi = vnorm(Phi, V)
    return {
        "sum_member_norms": S,
        "grad_term": nPhi.grad_term,
        "grad_bound": S,
        "grad_slack": S - nPhi.grad_term,
        "lap_term": nPhi.lap_term,
        "lap_bound": S + S**2,
        "lap_slack": S + S**2 - nPhi.lap_term,
        "holds": bool(nPhi.grad_term <= S and nPhi.lap_term <= S + S**2),
    }


# ---------------------------------------------------------------------------
# estimation


@dataclass(eq=False)
class CapacityEstimate:
    upper_bound: float
    best_candidate: TestFunctionField | None
    family_trace: list
    verdict: str
    inherited: list = field(default_factory=list)

    def trace_rows(self):
        return [(j, *nv.as_row()) for j, nv in self.family_trace]


def _is_union(K):
    return K.kind == "union" and len([m for m in K.members if not m.is_empty]) > 1


def mu_schedule(K, domain, j):
    """Boundary collar width ``mu_j = clearance / (4 j)``."""
    return clearance(K, domain) / (4.0 * j)


def candidate(K, j, samples):
    """Standard family member for ``K`` at level ``j`` (union-aware)."""
    if _is_union(K):
        members = [build_cutoff(m, j, samples) for m in K.members if not m.is_empty]
        Phi = combine_cutoffs(members, mu_schedule(K, samples.domain, j))
        Phi.meta["member_fields"] = members
        return Phi
    return build_cutoff(K, j, samples)


def family_samples(K, grid, j, **kw):
    return graded_samples(grid, [K], feature_scale=1.0 / j, **kw)


def _verdict(totals, tolerance, tail=3):
    if len(totals) < tail:
        return "inconclusive"
    t = np.asarray(totals[-tail:])
    decreasing = np.all(np.diff(t) < 0)
    increasing = np.all(np.diff(t) > 0)
    if decreasing and t[-1] < tolerance:
        return "zero_detected"
    if increasing:
        return "positive_floor"
    return "inconclusive"


def _admissible(c, K):
    pts = K.representative_points()
    if c.evaluator is None or len(pts) == 0:
        return False
    return bool(np.all(c.evaluate(pts)[0] == 1.0))


def estimate_capacity(K, V, grid, j_schedule, tolerance=1e-3, *, inherited=(), workers=None, sampler=None):
    """Upper bound for ``Cap_{V,inf}(K)`` along the standard cutoff family.

    Parameters
    ----------
    K : CompactSetSpec
    V : PotentialSpec or callable
    grid : Grid
        Domain and background resolution for the graded samples.
    j_schedule : increasing sequence of int
    tolerance : float
        Zero-detection threshold for the last total.
    inherited : sequence of TestFunctionField
        Candidates built for a superset of ``K``; each is checked to equal 1
        on ``K`` and then joins the minimum, which makes the estimate
        monotone under inclusion.

    Returns
    -------
    CapacityEstimate
        ``verdict`` is ``zero_detected`` when the last three totals decrease
        and the final total is below ``tolerance``, ``positive_floor`` when
        they increase, ``inconclusive`` otherwise.
    """
    js = list(j_schedule)
    if not js:
        raise ValueError("j_schedule is empty")
    if any(b <= a for a, b in zip(js, js[1:])):
        raise ValueError("j_schedule must be increasing")
    sampler = sampler or {}

    def one(j):
        smp = family_samples(K, grid, j, **sampler)
        c = candidate(K, j, smp)
        return c, vnorm(c, V)

    if workers and workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(one, js))
    else:
        results = [one(j) for j in js]

    trace = [(j, nv) for j, (_, nv) in zip(js, results)]
    cands = [c for c, _ in results]
    totals = [nv.total for _, nv in trace]
    extra = []
    for c in inherited:
        if not _admissible(c, K):
            raise ValueError("inherited candidate is not identically 1 on K")
        extra.append((c.meta.get("j"), vnorm(c, V), c))
    pool = [(nv.total, c) for c, (_, nv) in zip(cands, trace)] + [(nv.total, c) for _, nv, c in extra]
    best_total, best = min(pool, key=lambda tc: tc[0]) if pool else (np.inf, None)
    return CapacityEstimate(
        upper_bound=float(best_total),
        best_candidate=best,
        family_trace=trace,
        verdict=_verdict(totals, tolerance),
        inherited=[(j, nv) for j, nv, _ in extra],
    )


def fit_slope(x, y):
    """Least-squares slope of ``log y`` against ``log x`` over positive finite pairs."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = (x > 0) & (y > 0) & np.isfinite(y)
    if ok.sum() < 3:
        raise ValueError("degenerate fit: fewer than 3 usable points")
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


@dataclass(frozen=True)
class DecayRates:
    grad_slope: float
    lap_slope: float
    js: tuple
    grad_terms: tuple
    lap_terms: tuple


def decay_rates(K, V, grid, j_schedule, **sampler):
    """Log-log slopes of the two weighted sup terms along the cutoff family."""
    js = np.asarray(list(j_schedule), dtype=float)
    if js.max() / js.min() < 100:
        raise ValueError("j_schedule must span at least two decades")
    g, l = [], []
    for j in js:
        smp = family_samples(K, grid, j, **sampler)
        nv = vnorm(candidate(K, j, smp), V)
        g.append(nv.grad_term)
        l.append(nv.lap_term)
    return DecayRates(fit_slope(js, g), fit_slope(js, l), tuple(js), tuple(g), tuple(l))


def irregular_set(V):
    """Union of the singular sets carrying an exponent ``m >= 2``."""
    if not V.is_power_sum:
        raise ValueError("irregular_set needs a distance-power potential; use membership_diagnosis")
    sets = [t.set for t in V.terms if t.exponent >= 2]
    if not sets:
        return CompactSetSpec.empty()
    return sets[0] if len(sets) == 1 else CompactSetSpec.union(*sets)


# ---------------------------------------------------------------------------
# weak-strong density


def g_admissible(g, grid, *, fractions=(1 / 8, 1 / 16, 1 / 32), min_decrease=0.2, samples=None):
    """Collar test ``(1/eps) int_{delta <= eps} |g|`` shrinking under halving.

    Returns ``(ok, averages)``; ``ok`` requires each halving of ``eps`` to
    lower the average by at least ``min_decrease``.
    """
    domain = grid.domain
    diam = domain.diameter
    eps = np.array(fractions) * diam
    if samples is None:
        samples = graded_samples(grid, boundary_scale=float(eps.min()) / 8)
    delta = domain.boundary_distance(samples.points)
    absg = np.abs(g(samples.points))
    avgs = np.array([np.dot(absg * (delta <= e), samples.weights) / e for e in eps])
    ok = bool(np.all(avgs[1:] <= (1 - min_decrease) * avgs[:-1]))
    return ok, avgs


@dataclass(frozen=True)
class DensityStep:
    j: int
    mu: float
    potential_residual: float
    gradient_residual: float
    laplacian_residual: float
    collar_max: float

    def as_row(self):
        return (self.j, self.potential_residual, self.gradient_residual, self.laplacian_residual)


def approximant(Phi, K, j, samples):
    """``Phi_j = (1 - phi_j) H(2 rho / mu_j) Phi`` with its derivatives."""
    pts = samples.points
    domain = samples.domain
    mu = mu_schedule(K, domain, j)
    base = Phi.evaluate(pts)
    if K.is_empty:
        cut = (np.zeros(len(pts)), np.zeros_like(pts), np.zeros(len(pts)))
    else:
        c = candidate(K, j, samples)
        cut = (c.psi, c.grad, c.lap)
    rho, gb, lb = smooth_boundary_distance(pts, domain)
    s = 2.0 / mu
    Hb, dHb, d2Hb = transition_H(s * rho)
    outer = (Hb, s * dHb[:, None] * gb, s**2 * d2Hb * (gb**2).sum(axis=1) + s * dHb * lb)
    one_minus = (1.0 - cut[0], -cut[1], -cut[2])
    return product(product(one_minus, outer), base), base, mu, rho


def density_approximation(Phi, K, V, g, grid, j_schedule, *, check_g=True, sampler=None):
    """Residual integrals of the approximants ``Phi_j`` supported off ``K``.

    For each ``j`` returns the three integrals
    ``int |g| |Phi_j - Phi| V``, ``int |g| |grad(Phi_j - Phi)|`` and
    ``int |g| |lap(Phi_j - Phi)|`` on samples graded toward ``K`` (scale
    ``1/j``) and the boundary (scale ``mu_j``).
    """
    sampler = sampler or {}
    if check_g:
        ok, avgs = g_admissible(g, grid)
        if not ok:
            raise ValueError(f"g fails the boundary collar test (averages {avgs})")
    steps = []
    feats = [] if K.is_empty else [K]
    for j in j_schedule:
        mu = mu_schedule(K, grid.domain, j) if not K.is_empty else grid.domain.diameter / (8.0 * j)
        smp = graded_samples(grid, feats, feature_scale=1.0 / j, boundary_scale=mu / 2, **sampler)
        (pv, pg, pl), (bv, bg, bl), mu, rho = approximant(Phi, K, j, smp)
        absg = np.abs(g(smp.points))
        Vv = _potential_values(V, smp)
        w = smp.weights
        dv = np.abs(pv - bv)
        with np.errstate(invalid="ignore"):
            r0 = float(np.dot(absg * np.where(dv > 0, dv * Vv, 0.0), w))
        r1 = float(np.dot(absg * np.linalg.norm(pg - bg, axis=1), w))
        r2 = float(np.dot(absg * np.abs(pl - bl), w))
        collar = rho <= mu / 2
        collar_max = float(np.abs(pv[collar]).max()) if np.any(collar) else 0.0
        steps.append(DensityStep(int(j), float(mu), r0, r1, r2, collar_max))
    return steps
