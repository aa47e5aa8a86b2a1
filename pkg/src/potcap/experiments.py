"""Truncation ladders: the existence/non-existence dichotomy and removability."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .capacity import approximant, density_approximation, estimate_capacity, mu_schedule
from .fields import RadialPolynomial
from .sampling import graded_samples
from .solver import (
    RadialMesh,
    radial_solve,
    solve_truncated,
    truncate_potential,
    weak_residual,
)

__all__ = [
    "DichotomyReport",
    "RemovabilityReport",
    "classify_dichotomy",
    "dichotomy_experiment",
    "removability_check",
]


@dataclass(eq=False)
class DichotomyReport:
    """Traces of ``u_j`` along a truncation schedule and the resulting verdict.

    ``cauchy_gaps[i]`` is ``||u_{j_{i+1}} - u_{j_i}||_1``.  ``c0`` is the
    largest a-priori ratio ``(||u_j||_1 + int V_j u_j) / ||f||`` seen on the
    schedule and ``ratio_spread`` the max/min of those ratios.
    """

    j_schedule: list
    l1_trace: list
    mass_trace: list
    cauchy_gaps: list
    verdict: str
    apriori_ratios: list = field(default_factory=list)
    residual_trace: list = field(default_factory=list)
    weak_grad_trace: list = field(default_factory=list)
    c0: float = np.nan
    ratio_spread: float = np.nan
    results: list = field(default_factory=list, repr=False)

    def rows(self):
        gaps = [np.nan] + list(self.cauchy_gaps)
        return [
            (j, l1, ms, ra, gp, rs, wg)
            for j, l1, ms, ra, gp, rs, wg in zip(
                self.j_schedule, self.l1_trace, self.mass_trace, self.apriori_ratios,
                gaps, self.residual_trace, self.weak_grad_trace,
            )
        ]


def classify_dichotomy(l1_trace, gaps, *, decay_factor=0.1, keep_factor=0.5, halving=0.6, tail=3):
    """Verdict from the ``L^1`` trace and the Cauchy gaps.

    ``no_solution``: the final ``L^1`` norm is below ``decay_factor`` times
    the first and the last ``tail`` values strictly decrease.
    ``exists``: the final norm keeps at least ``keep_factor`` of the first
    and each of the last ``tail - 1`` gap ratios is at most ``halving``
    (or the gaps are already at round-off level).
    """
    l1 = np.asarray(l1_trace, dtype=float)
    gaps = np.asarray(gaps, dtype=float)
    if len(l1) < tail:
        return "inconclusive"
    if l1[-1] < decay_factor * l1[0] and np.all(np.diff(l1[-tail:]) < 0):
        return "no_solution"
    if l1[-1] >= keep_factor * l1[0] and len(gaps) >= tail - 1:
        g = gaps[-(tail - 1):]
        tiny = np.all(g <= 1e-14 * max(l1[-1], 1e-300))
        prev = gaps[-tail:-1] if len(gaps) >= tail else None
        if tiny or (prev is not None and np.all(g <= halving * prev)):
            return "exists"
    return "inconclusive"


def _radial_points(r, n):
    pts = np.zeros((len(r), n))
    pts[:, 0] = r
    return pts


def dichotomy_experiment(V, f, mesh, j_schedule, *, U=None, phi=None, workers=None):
    """Solve along ``j_schedule`` and classify the limit behaviour.

    Parameters
    ----------
    V : PotentialSpec
    f : MeasureData
    mesh : RadialMesh or Grid
    j_schedule : increasing truncation levels spanning at least three decades
    U : TransportField, optional (grid runs only)
    phi : field with ``evaluate``, optional
        Test function for the weak residuals; defaults to ``(1 - |x|^2/R^2)^2``
        about the domain centre.
    """
    js = [float(j) for j in j_schedule]
    if len(js) < 3:
        raise ValueError("dichotomy runs need at least 3 schedule points")
    if any(b <= a for a, b in zip(js, js[1:])):
        raise ValueError("j_schedule must be increasing")
    if js[-1] / js[0] < 1000:
        raise ValueError("j_schedule must span at least three decades")
    radial = isinstance(mesh, RadialMesh)
    if radial:
        n = mesh.n
        weights = mesh.volumes
        center, R = np.zeros(n), mesh.radius
    else:
        n = mesh.n
        weights = mesh.weights
        d = mesh.domain
        center = d.center if d.kind == "ball" else 0.5 * (d.lo + d.hi)
        R = d.radius if d.kind == "ball" else 0.5 * float((d.hi - d.lo).min())
    if phi is None:
        if not radial and mesh.domain.kind != "ball":
            raise ValueError("pass a test function for box domains")
        phi = RadialPolynomial.bump(center, R, 2)

    def one(j):
        if radial:
            Vj = np.minimum(j, V(_radial_points(mesh.centers, n)))
            res = radial_solve(n, Vj, f, mesh)
        else:
            Vj = truncate_potential(V, j, mesh)
            res = solve_truncated(mesh, Vj, U, f, j=j)
        res.j = j
        rr = weak_residual(res.u, phi, Vj, U, f, mesh)
        return res, rr

    if workers and workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(workers) as ex:
            out = list(ex.map(one, js))
    else:
        out = [one(j) for j in js]
    results = [r for r, _ in out]
    l1 = [r.l1_norm for r in results]
    mass = [r.potential_mass for r in results]
    ratios = [r.apriori_ratio for r in results]
    gaps = [float(np.dot(np.abs(b.u - a.u), weights)) for a, b in zip(results, results[1:])]
    pos = [x for x in ratios if x > 0]
    return DichotomyReport(
        j_schedule=js,
        l1_trace=l1,
        mass_trace=mass,
        cauchy_gaps=gaps,
        verdict=classify_dichotomy(l1, gaps),
        apriori_ratios=ratios,
        residual_trace=[rr for _, rr in out],
        weak_grad_trace=[r.weak_grad_proxy for r in results],
        c0=float(max(ratios)),
        ratio_spread=float(max(pos) / min(pos)) if pos else np.nan,
        results=results,
    )


# ---------------------------------------------------------------------------
# removability


@dataclass(eq=False)
class RemovabilityReport:
    """Residuals of ``w`` against full-domain probes and their off-``K`` approximants.

    ``full_residuals[i]`` is ``int w (-lap Phi_i + V Phi_i)``;
    ``off_residuals[i][k]`` the same for the approximant at ``j_schedule[k]``
    (supported away from ``K``); ``bridge_bounds[i][k]`` bounds their
    difference by the density residual integrals with ``g = w``.
    """

    worst_full_residual: float
    full_residuals: list
    off_residuals: list
    bridge_bounds: list
    j_schedule: list
    w_l1: float
    certificate: object = None


def _operator_integrand(val, lap, Vv):
    with np.errstate(invalid="ignore"):
        return -lap + np.where(val != 0, Vv * val, 0.0)


def removability_check(V, K, w, grid, probes, *, j_schedule=(16, 32, 64, 128, 256),
                       certificate_schedule=None, tolerance=1e-3):
    """Check that vanishing residuals off ``K`` carry over to full-domain probes.

    Parameters
    ----------
    V : PotentialSpec
    K : CompactSetSpec
    w : callable
        Candidate solution of the homogeneous equation, evaluated at points.
    grid : Grid
        Domain and background resolution for the quadrature.
    probes : sequence of fields vanishing on the boundary
        Full-domain test functions ``Phi``.

    Raises
    ------
    ValueError
        When the standard cutoff family does not certify zero capacity of
        ``K`` for ``V``.
    """
    sched = certificate_schedule or [2**k for k in range(4, 25, 2)]
    cert = estimate_capacity(K, V, grid, sched, tolerance)
    if cert.verdict != "zero_detected":
        raise ValueError(f"no zero-capacity certificate for K (verdict {cert.verdict})")
    js = list(j_schedule)
    feats = [] if K.is_empty else [K]
    smp = graded_samples(grid, feats, feature_scale=1.0 / js[-1])
    Vv = V(smp.points)
    wv = np.asarray(w(smp.points), dtype=float)
    w_l1 = float(np.dot(np.abs(wv), smp.weights))
    full, off, bridge = [], [], []
    for Phi in probes:
        val, _, lap = Phi.evaluate(smp.points)
        full.append(float(np.dot(wv * _operator_integrand(val, lap, Vv), smp.weights)))
        steps = density_approximation(Phi, K, V, w, grid, js, check_g=False)
        off_i = []
        for j in js:
            mu = grid.domain.diameter / (8.0 * j) if K.is_empty else mu_schedule(K, grid.domain, j)
            sj = graded_samples(grid, feats, feature_scale=1.0 / j, boundary_scale=mu / 2)
            (pv, _, pl), _, _, _ = approximant(Phi, K, j, sj)
            Vj = V(sj.points)
            wj = np.asarray(w(sj.points), dtype=float)
            off_i.append(float(np.dot(wj * _operator_integrand(pv, pl, Vj), sj.weights)))
        off.append(off_i)
        bridge.append([s.potential_residual + s.laplacian_residual for s in steps])
    worst = float(max((abs(x) for x in full), default=0.0))
    return RemovabilityReport(worst, full, off, bridge, js, w_l1, cert)
