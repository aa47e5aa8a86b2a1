"""Finite differences for ``-lap u + U . grad u + V_j u = f`` with measure data.

The grid operator uses the Shortley-Weller ``(2n+1)``-point Laplacian (exact
boundary crossings on balls) and first-order upwinding for the transport
term.  Both keep the matrix an M-matrix, so ``f >= 0`` gives ``u >= 0``.
Radial problems with the data at the centre go through a separate
finite-volume solver whose transmissibilities make the ``V = 0`` Green
function exact at the cell centres.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded
from scipy.sparse.linalg import spsolve

from .geometry import Grid, sphere_area
from .rearrange import WeightedSamples, lorentz_norm

__all__ = [
    "DiscreteOperator",
    "KatoReport",
    "MeasureData",
    "RadialMesh",
    "SolveError",
    "TransportField",
    "TruncatedSolveResult",
    "assemble_operator",
    "kato_check",
    "laplacian_operator",
    "radial_solve",
    "solve_truncated",
    "truncate_potential",
    "weak_residual",
]


class SolveError(RuntimeError):
    """The linear solve failed or missed the residual tolerance."""


# ---------------------------------------------------------------------------
# data


def _boundary_probe_points(domain, count=256):
    """Points on the boundary of ``domain`` paired with outward normals."""
    n = domain.dimension
    rng = np.random.default_rng(12345)
    if domain.kind == "ball":
        d = rng.normal(size=(count, n))
        d /= np.linalg.norm(d, axis=1)[:, None]
        return domain.center + domain.radius * d, d
    pts, nus = [], []
    per = max(count // (2 * n), 1)
    for k in range(n):
        for side, val in ((-1.0, domain.lo[k]), (1.0, domain.hi[k])):
            x = domain.lo + rng.random((per, n)) * (domain.hi - domain.lo)
            x[:, k] = val
            nu = np.zeros((per, n))
            nu[:, k] = side
            pts.append(x)
            nus.append(nu)
    return np.vstack(pts), np.vstack(nus)


@dataclass(eq=False)
class TransportField:
    """Drift ``U`` sampled on a grid, with its divergence-free/tangential claims checked.

    ``function`` maps points ``(N, n)`` to vectors ``(N, n)``.  The discrete
    divergence uses central differences at nodes whose neighbours are all
    inside; the normal component is checked on boundary probe points.
    """

    grid: Grid
    function: object
    values: np.ndarray
    divergence_free: bool = False
    tangential: bool = False
    max_divergence: float = 0.0
    max_normal: float = 0.0

    @classmethod
    def from_function(cls, grid, function, *, divergence_free=False, tangential=False, tol=1e-10):
        values = np.asarray(function(grid.nodes), dtype=float).reshape(grid.size, grid.n)
        div = discrete_divergence(grid, values)
        pts, nu = _boundary_probe_points(grid.domain)
        normal = np.abs((np.asarray(function(pts)) * nu).sum(axis=1))
        scale = max(1.0, float(np.abs(values).max(initial=0.0)))
        max_div = float(np.abs(div).max(initial=0.0))
        max_nrm = float(normal.max(initial=0.0))
        if divergence_free and max_div > tol * scale:
            raise ValueError(f"transport field is not discretely divergence free (max {max_div:.3g})")
        if tangential and max_nrm > tol * scale:
            raise ValueError(f"transport field is not tangential on the boundary (max {max_nrm:.3g})")
        return cls(grid, function, values, divergence_free, tangential, max_div, max_nrm)

    @classmethod
    def zero(cls, grid):
        return cls.from_function(grid, lambda x: np.zeros_like(np.atleast_2d(x), dtype=float),
                                 divergence_free=True, tangential=True)

    @classmethod
    def rotation(cls, grid, kappa=1.0):
        """``kappa (-y, x)`` about the domain centre; tangential on a disk."""
        if grid.n != 2:
            raise ValueError("the rotation field is two-dimensional")
        c = grid.domain.center if grid.domain.kind == "ball" else 0.5 * (grid.domain.lo + grid.domain.hi)

        def U(x, c=c, kappa=kappa):
            y = np.atleast_2d(x) - c
            return kappa * np.stack([-y[:, 1], y[:, 0]], axis=1)

        return cls.from_function(grid, U, divergence_free=True, tangential=grid.domain.kind == "ball")

    @classmethod
    def cellular(cls, grid, kappa=1.0):
        """``kappa (sin(pi x) cos(pi y), -cos(pi x) sin(pi y))`` in box coordinates.

        Divergence free and tangential on every side of a 2-D box.
        """
        d = grid.domain
        if grid.n != 2 or d.kind != "box":
            raise ValueError("the cellular field lives on a 2-D box")
        lo, L = d.lo, d.hi - d.lo

        def U(x, lo=lo, L=L, kappa=kappa):
            s = np.pi * (np.atleast_2d(x) - lo) / L
            return kappa * np.stack([np.sin(s[:, 0]) * np.cos(s[:, 1]) * L[0],
                                     -np.cos(s[:, 0]) * np.sin(s[:, 1]) * L[1]], axis=1)

        # the discrete divergence of this field is O(h^2), not zero
        return cls.from_function(grid, U, divergence_free=False, tangential=True)

    def __call__(self, points):
        return np.asarray(self.function(points), dtype=float)

    @property
    def is_zero(self):
        return not np.any(self.values)


def discrete_divergence(grid, values):
    """Central-difference divergence at nodes with all ``2n`` neighbours inside."""
    div = np.zeros(grid.size)
    full = np.all(grid.neighbors >= 0, axis=(1, 2))
    for k in range(grid.n):
        lo = grid.neighbors[:, k, 0]
        hi = grid.neighbors[:, k, 1]
        ok = full
        div[ok] += (values[hi[ok], k] - values[lo[ok], k]) / (2 * grid.h)
    return np.where(full, div, 0.0)


@dataclass(frozen=True, eq=False)
class MeasureData:
    """Finite measure: Dirac masses, a density, or a sum of both.

    Dirac masses are spread to the ``2^n`` lattice nodes around the point
    with multilinear (cloud-in-cell) weights, which reproduces affine test
    functions exactly.
    """

    points: np.ndarray
    masses: np.ndarray
    density: object = None
    density_variation: float = 0.0

    @classmethod
    def dirac(cls, point, mass=1.0):
        return cls(np.atleast_2d(np.asarray(point, dtype=float)), np.array([float(mass)]))

    @classmethod
    def from_density(cls, function, grid):
        """Density ``function(points)``; its variation is measured on ``grid``."""
        tv = float(np.abs(function(grid.nodes)).sum() * grid.cell_measure)
        return cls(np.empty((0, grid.n)), np.empty(0), function, tv)

    @classmethod
    def zero(cls, n):
        return cls(np.empty((0, n)), np.empty(0))

    def __add__(self, other):
        if self.density is not None and other.density is not None:
            f, g = self.density, other.density
            dens = lambda x, f=f, g=g: f(x) + g(x)  # noqa: E731
        else:
            dens = self.density if self.density is not None else other.density
        return MeasureData(
            np.vstack([self.points, other.points]) if len(self.points) or len(other.points) else self.points,
            np.concatenate([self.masses, other.masses]),
            dens,
            self.density_variation + other.density_variation,
        )

    @property
    def kind(self):
        if self.density is None:
            return "dirac" if len(self.masses) else "zero"
        return "density" if not len(self.masses) else "sum"

    @property
    def total_variation(self):
        return float(np.abs(self.masses).sum()) + self.density_variation

    @property
    def is_nonnegative(self):
        return bool(np.all(self.masses >= 0))

    def integrate(self, phi_values_at_points, density_integral=0.0):
        return float(np.dot(self.masses, phi_values_at_points)) + density_integral

    def discretize(self, grid):
        """Node values ``f_h`` with ``sum f_h h^n`` equal to the total mass."""
        f = np.zeros(grid.size)
        if self.density is not None:
            f += np.asarray(self.density(grid.nodes), dtype=float)
        n, h = grid.n, grid.h
        for a, mass in zip(self.points, self.masses):
            if not grid.domain.contains(a[None, :])[0]:
                raise ValueError("Dirac points must lie strictly inside the domain")
            t = (a - grid.origin) / h
            i0 = np.floor(t).astype(int)
            frac = t - i0
            for corner in range(2**n):
                bits = np.array([(corner >> k) & 1 for k in range(n)])
                idx = i0 + bits
                w = float(np.prod(np.where(bits == 1, frac, 1.0 - frac)))
                if w == 0.0:
                    continue
                if np.any(idx < 0) or np.any(idx >= np.array(grid.shape)) or grid.index[tuple(idx)] < 0:
                    raise ValueError("Dirac point too close to the boundary for this grid")
                f[grid.index[tuple(idx)]] += mass * w / grid.cell_measure
        return f


def truncate_potential(V, j, grid):
    """``min(j, V)`` at the nodes of ``grid`` (or the points of a sample set)."""
    pts = grid.nodes if isinstance(grid, Grid) else np.asarray(getattr(grid, "points", grid))
    with np.errstate(divide="ignore"):
        vals = np.asarray(V(pts), dtype=float)
    return np.minimum(float(j), vals)


# ---------------------------------------------------------------------------
# grid operator


@dataclass(eq=False)
class DiscreteOperator:
    """``(A u)_x = diag_x u_x - sum_y coef_xy u_y`` with nonnegative ``coef``.

    ``coef`` has shape ``(M, n, 2)`` aligned with ``grid.neighbors``; entries
    pointing outside the domain multiply the zero boundary value.
    """

    grid: Grid
    diag: np.ndarray
    coef: np.ndarray

    def apply(self, w):
        """Matrix-vector product with a fixed operation order."""
        w = np.asarray(w, dtype=float)
        nb = self.grid.neighbors
        out = self.diag * w
        for k in range(self.grid.n):
            for side in (0, 1):
                idx = nb[:, k, side]
                wn = np.where(idx >= 0, w[np.maximum(idx, 0)], 0.0)
                out = out - self.coef[:, k, side] * wn
        return out

    def to_sparse(self):
        g = self.grid
        M = g.size
        rows = [np.arange(M)]
        cols = [np.arange(M)]
        vals = [self.diag]
        for k in range(g.n):
            for side in (0, 1):
                idx = g.neighbors[:, k, side]
                ok = idx >= 0
                rows.append(np.nonzero(ok)[0])
                cols.append(idx[ok])
                vals.append(-self.coef[ok, k, side])
        return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(M, M))

    def is_m_matrix(self):
        """Sign pattern and weak diagonal dominance of an M-matrix."""
        return bool(np.all(self.coef >= 0) and np.all(self.diag >= self.coef.sum(axis=(1, 2)) - 1e-12 * self.diag))


def laplacian_operator(grid):
    """``-lap_h`` with Shortley-Weller arms and zero Dirichlet data."""
    a = grid.arm[:, :, 0]
    b = grid.arm[:, :, 1]
    coef = np.empty_like(grid.arm)
    coef[:, :, 0] = 2.0 / (a * (a + b))
    coef[:, :, 1] = 2.0 / (b * (a + b))
    diag = (2.0 / (a * b)).sum(axis=1)
    return DiscreteOperator(grid, diag, coef)


def assemble_operator(grid, V_j=None, U=None):
    """``-lap_h + U . grad_h (upwind) + V_j`` as a :class:`DiscreteOperator`."""
    op = laplacian_operator(grid)
    diag = op.diag.copy()
    coef = op.coef.copy()
    if U is not None and not U.is_zero:
        for k in range(grid.n):
            Uk = U.values[:, k]
            up = np.maximum(Uk, 0.0) / grid.arm[:, k, 0]
            dn = np.maximum(-Uk, 0.0) / grid.arm[:, k, 1]
            diag += up + dn
            coef[:, k, 0] += up
            coef[:, k, 1] += dn
    if V_j is not None:
        V_j = np.asarray(V_j, dtype=float)
        if np.any(V_j < 0) or not np.all(np.isfinite(V_j)):
            raise ValueError("V_j must be finite and nonnegative")
        diag += V_j
    return DiscreteOperator(grid, diag, coef)


def node_gradient(grid, u):
    """Centred gradient with Shortley-Weller arms and zero boundary values."""
    nb = grid.neighbors
    g = np.zeros((grid.size, grid.n))
    for k in range(grid.n):
        um = np.where(nb[:, k, 0] >= 0, u[np.maximum(nb[:, k, 0], 0)], 0.0)
        up = np.where(nb[:, k, 1] >= 0, u[np.maximum(nb[:, k, 1], 0)], 0.0)
        a, b = grid.arm[:, k, 0], grid.arm[:, k, 1]
        # second-order three-point derivative on an uneven stencil
        g[:, k] = (a * a * up - b * b * um + (b * b - a * a) * u) / (a * b * (a + b))
    return g


@dataclass(eq=False)
class TruncatedSolveResult:
    """Discrete ``u_j`` together with the a-priori quantities."""

    u: np.ndarray
    j: float
    l1_norm: float
    potential_mass: float
    weak_grad_proxy: float
    total_variation: float
    residual_report: dict = field(default_factory=dict)
    grid: object = None
    potential: np.ndarray | None = None
    rhs: np.ndarray | None = None

    @property
    def apriori_ratio(self):
        """``(||u||_1 + int V_j u) / ||f||``."""
        if self.total_variation == 0:
            return 0.0
        return (self.l1_norm + self.potential_mass) / self.total_variation


def _weak_grad_proxy(grad_norm, weights, n):
    if not np.any(grad_norm > 0):
        return 0.0
    p = n / (n - 1.0)
    return lorentz_norm(WeightedSamples(grad_norm, weights), p, np.inf).value


def solve_truncated(grid, V_j, U, f, *, j=np.inf, rtol=1e-10):
    """Solve ``(-lap_h + U . grad_h + V_j) u = f_h`` with zero Dirichlet data.

    Parameters
    ----------
    grid : Grid
    V_j : array of node values (bounded, nonnegative)
    U : TransportField or None
    f : MeasureData
    j : float
        Truncation level, recorded only.
    rtol : float
        Required relative residual ``|A u - f_h| / |f_h|``.
    """
    A = assemble_operator(grid, V_j, U)
    fh = f.discretize(grid)
    if not np.any(fh):
        u = np.zeros(grid.size)
    else:
        u = spsolve(A.to_sparse().tocsc(), fh)
        if not np.all(np.isfinite(u)):
            raise SolveError("linear solve returned non-finite values")
    res = A.apply(u) - fh
    scale = max(float(np.linalg.norm(fh)), np.finfo(float).tiny)
    rel = float(np.linalg.norm(res)) / scale
    if rel > rtol:
        raise SolveError(f"relative residual {rel:.3g} above {rtol:g}")
    w = grid.cell_measure
    Vv = np.zeros(grid.size) if V_j is None else np.asarray(V_j, dtype=float)
    gn = np.linalg.norm(node_gradient(grid, u), axis=1)
    return TruncatedSolveResult(
        u=u,
        j=float(j),
        l1_norm=float(np.abs(u).sum() * w),
        potential_mass=float((Vv * u).sum() * w),
        weak_grad_proxy=_weak_grad_proxy(gn, grid.weights, grid.n),
        total_variation=f.total_variation,
        residual_report={"relative_residual": rel, "min_u": float(u.min(initial=0.0))},
        grid=grid,
        potential=Vv,
        rhs=fh,
    )


# ---------------------------------------------------------------------------
# radial finite volumes


class RadialMesh:
    """Cell-centred mesh on ``(0, R)`` graded geometrically toward 0.

    Faces are ``0, r_min q^k, ..., R`` with ``cells`` cells in total.
    Centres are geometric means of the faces (the first centre is
    ``r_1 / 2``).
    """

    def __init__(self, n, radius=1.0, cells=1024, r_min=1e-8):
        if n < 2:
            raise ValueError("radial solves need n >= 2")
        if cells < 8:
            raise ValueError("need at least 8 cells")
        if not 0 < r_min < radius:
            raise ValueError("need 0 < r_min < radius")
        self.n = int(n)
        self.radius = float(radius)
        self.faces = np.concatenate([[0.0], np.geomspace(r_min, radius, cells)])
        f = self.faces
        self.centers = np.concatenate([[0.5 * f[1]], np.sqrt(f[1:-1] * f[2:])])
        self.omega = sphere_area(self.n)
        self.volumes = self.omega * (f[1:] ** self.n - f[:-1] ** self.n) / self.n

    @property
    def cells(self):
        return len(self.centers)

    @property
    def domain_measure(self):
        return self.omega * self.radius**self.n / self.n

    def _inv_r_integral(self, a, b):
        """``int_a^b r^(1-n) dr``."""
        if self.n == 2:
            return np.log(b / a)
        return (a ** (2 - self.n) - b ** (2 - self.n)) / (self.n - 2)

    def transmissibilities(self):
        """Face coefficients: interior faces, then the outer boundary face."""
        c = self.centers
        inner = self.omega / self._inv_r_integral(c[:-1], c[1:])
        outer = self.omega / self._inv_r_integral(c[-1], self.radius)
        return inner, float(outer)

    def points(self):
        pts = np.zeros((self.cells, self.n))
        pts[:, 0] = self.centers
        return pts


def radial_solve(n, V_j, f, mesh):
    """Radial reduction of the truncated problem with ``U = 0``.

    Solves ``-r^(1-n) (r^(n-1) u')' + V_j u = f`` with the mass of ``f`` at
    the origin entering as a flux through the first cell and ``u(R) = 0``.

    Parameters
    ----------
    n : int
    V_j : callable of r, or array of cell values
    f : MeasureData or float
        Dirac data at the origin (only the total mass is used).
    mesh : RadialMesh
    """
    if n < 2:
        raise ValueError("radial solves need n >= 2")
    if mesh.n != n:
        raise ValueError("mesh dimension does not match n")
    if isinstance(f, MeasureData):
        if f.density is not None or np.any(np.linalg.norm(f.points, axis=1) > 0):
            raise ValueError("radial_solve takes data concentrated at the origin")
        mass = float(f.masses.sum())
        tv = f.total_variation
    else:
        mass = float(f)
        tv = abs(mass)
    Vc = np.asarray(V_j(mesh.centers) if callable(V_j) else V_j, dtype=float)
    if Vc.shape != (mesh.cells,) or np.any(Vc < 0) or not np.all(np.isfinite(Vc)):
        raise ValueError("V_j must give finite nonnegative values at every cell")
    T, Tb = mesh.transmissibilities()
    N = mesh.cells
    diag = Vc * mesh.volumes
    diag[:-1] += T
    diag[1:] += T
    diag[-1] += Tb
    ab = np.zeros((3, N))
    ab[0, 1:] = -T
    ab[1] = diag
    ab[2, :-1] = -T
    rhs = np.zeros(N)
    rhs[0] = mass
    u = solve_banded((1, 1), ab, rhs) if mass != 0 else np.zeros(N)
    # residual of the tridiagonal system
    Au = diag * u
    Au[:-1] -= T * u[1:]
    Au[1:] -= T * u[:-1]
    rel = float(np.linalg.norm(Au - rhs) / max(abs(mass), np.finfo(float).tiny))
    du = np.abs(np.diff(u)) / np.diff(mesh.centers)
    shell = mesh.omega * (mesh.centers[1:] ** n - mesh.centers[:-1] ** n) / n
    return TruncatedSolveResult(
        u=u,
        j=np.nan,
        l1_norm=float(np.dot(np.abs(u), mesh.volumes)),
        potential_mass=float(np.dot(Vc * u, mesh.volumes)),
        weak_grad_proxy=_weak_grad_proxy(du, shell, n),
        total_variation=tv,
        residual_report={"relative_residual": rel, "min_u": float(u.min())},
        grid=mesh,
        potential=Vc,
        rhs=rhs,
    )


def radial_interpolant(result):
    """Piecewise-linear ``u(|x|)`` from a radial result, zero at ``R``."""
    mesh = result.grid
    r = np.concatenate([[0.0], mesh.centers, [mesh.radius]])
    u = np.concatenate([[result.u[0]], result.u, [0.0]])

    def w(points):
        rr = np.linalg.norm(np.atleast_2d(points), axis=1)
        return np.interp(rr, r, u, right=0.0)

    return w


# ---------------------------------------------------------------------------
# residuals and Kato


def weak_residual(u, phi, V, U, f, grid, *, boundary_tol=1e-8):
    """``int u (-lap phi - U . grad phi + V phi) - int phi df`` by quadrature.

    ``phi`` is any field with ``evaluate(points) -> (value, grad, lap)``
    vanishing on the boundary.  ``grid`` is a :class:`Grid` (node quadrature
    with weight ``h^n``) or a :class:`RadialMesh` (``phi`` radial, sampled
    along the first axis).  ``V`` is an array of node values or a callable;
    ``U`` may be ``None``.
    """
    u = np.asarray(u, dtype=float)
    if isinstance(grid, RadialMesh):
        pts = grid.points()
        weights = grid.volumes
        bpts = np.zeros((1, grid.n))
        bpts[0, 0] = grid.radius
    else:
        pts = grid.nodes
        weights = grid.weights
        bpts = _boundary_probe_points(grid.domain)[0]
    val, grad, lap = phi.evaluate(pts)
    bval = phi.evaluate(bpts)[0]
    ref = max(float(np.abs(val).max(initial=0.0)), 1.0)
    if np.abs(bval).max(initial=0.0) > boundary_tol * ref:
        raise ValueError("test function does not vanish on the boundary")
    Vv = np.zeros(len(pts)) if V is None else (np.asarray(V(pts), dtype=float) if callable(V) else np.asarray(V, dtype=float))
    integrand = -lap + Vv * val
    if U is not None:
        Uv = U(pts) if callable(U) else np.asarray(U, dtype=float)
        integrand = integrand - (Uv * grad).sum(axis=1)
    lhs = float(np.dot(u * integrand, weights))
    rhs = 0.0
    if len(f.masses):
        rhs += float(np.dot(f.masses, phi.evaluate(f.points)[0]))
    if f.density is not None:
        rhs += float(np.dot(np.asarray(f.density(pts)) * val, weights))
    return lhs - rhs


def discrete_adjoint_residual(result, phi_nodes, U=None):
    """``sum u (A^T phi) h^n - sum phi f_h h^n`` for a grid solve (algebraic identity)."""
    grid = result.grid
    A = assemble_operator(grid, result.potential, U).to_sparse()
    lhs = float(np.dot(result.u, A.T @ phi_nodes)) * grid.cell_measure
    rhs = float(np.dot(phi_nodes, result.rhs)) * grid.cell_measure
    return lhs - rhs


@dataclass(frozen=True)
class KatoReport:
    worst_violation: float
    pair_residual: float
    max_principle_holds: bool | None
    max_w_under_nonpositive_rhs: float | None


def kato_check(w, rhs, grid, *, pair_tol=1e-10):
    """Worst value of ``(-lap_h |w|)(x) - rhs(x) sign(w(x))`` over all nodes.

    The same routine evaluates ``-lap_h`` on ``w`` and on ``|w|`` so both
    sums run in the same order; the inequality then holds exactly in
    floating point whenever ``rhs`` is itself ``-lap_h w`` from
    :meth:`DiscreteOperator.apply`.  When ``rhs <= 0`` everywhere the weak
    maximum principle ``w <= 0`` is checked as well.
    """
    w = np.asarray(w, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    L = laplacian_operator(grid)
    Lw = L.apply(w)
    scale = max(float(np.abs(rhs).max(initial=0.0)), float(np.abs(L.diag * w).max(initial=0.0)), 1e-300)
    pair = float(np.abs(Lw - rhs).max(initial=0.0)) / scale
    if pair > pair_tol:
        raise ValueError(f"(w, rhs) is not a discrete pair: relative mismatch {pair:.3g}")
    viol = L.apply(np.abs(w)) - rhs * np.sign(w)
    mp = None
    wmax = None
    if np.all(rhs <= 0):
        wmax = float(w.max())
        mp = wmax <= 0
    return KatoReport(float(viol.max(initial=-np.inf)), pair, mp, wmax)
