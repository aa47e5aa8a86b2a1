"""Domains, compact sets, distances and the regularized distance.

Everything here works on arrays of points of shape ``(N, n)``.  Smooth
distances are returned as a triple ``(rho, grad, lap)`` so that cutoff
functions can be differentiated analytically by the chain rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gamma, pi

import numpy as np
from scipy.interpolate import RegularGridInterpolator

__all__ = [
    "BOUNDARY",
    "CompactSetSpec",
    "Domain",
    "Grid",
    "SmoothDistance",
    "clearance",
    "distance_to_set",
    "regularized_distance",
    "smooth_distance",
    "smooth_boundary_distance",
    "softmin",
    "sphere_area",
    "transition_H",
]

#: marker accepted by :func:`regularized_distance` for the distance to the boundary
BOUNDARY = "boundary"

_SOFTMIN_POWER = 4


def sphere_area(n):
    """Surface measure of the unit sphere in R^n."""
    return 2 * pi ** (n / 2) / gamma(n / 2)


def transition_H(t):
    """Quintic C^2 transition: 0 for t <= 1, 1 for t >= 2.

    Returns ``(H, H', H'')`` evaluated at ``t`` (scalar or array).
    """
    t = np.asarray(t, dtype=float)
    s = np.clip(t - 1.0, 0.0, 1.0)
    inside = (t > 1.0) & (t < 2.0)
    H = s**3 * (10.0 - 15.0 * s + 6.0 * s**2)
    dH = np.where(inside, 30.0 * s**2 * (1.0 - s) ** 2, 0.0)
    d2H = np.where(inside, 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s), 0.0)
    if t.ndim == 0:
        return float(H), float(dH), float(d2H)
    return H, dH, d2H


# ---------------------------------------------------------------------------
# domains and grids


@dataclass(frozen=True, eq=False)
class Domain:
    """A ball ``B(center, radius)`` or a box ``prod [lo_k, hi_k]``."""

    kind: str
    center: np.ndarray | None = None
    radius: float | None = None
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None

    @classmethod
    def ball(cls, center, radius):
        center = np.atleast_1d(np.asarray(center, dtype=float))
        if radius <= 0:
            raise ValueError("ball radius must be positive")
        return cls("ball", center=center, radius=float(radius))

    @classmethod
    def box(cls, lo, hi):
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if lo.shape != hi.shape or np.any(hi <= lo):
            raise ValueError("box needs lo < hi componentwise")
        return cls("box", lo=lo, hi=hi)

    @property
    def dimension(self):
        return len(self.center) if self.kind == "ball" else len(self.lo)

    @property
    def measure(self):
        n = self.dimension
        if self.kind == "ball":
            return sphere_area(n) * self.radius**n / n
        return float(np.prod(self.hi - self.lo))

    @property
    def diameter(self):
        if self.kind == "ball":
            return 2.0 * self.radius
        return float(np.linalg.norm(self.hi - self.lo))

    def boundary_distance(self, points):
        """Exact distance delta(x) to the boundary (positive inside)."""
        x = np.atleast_2d(points)
        if self.kind == "ball":
            return self.radius - np.linalg.norm(x - self.center, axis=1)
        return np.minimum((x - self.lo).min(axis=1), (self.hi - x).min(axis=1))

    def contains(self, points):
        return self.boundary_distance(points) > 0

    def to_dict(self):
        if self.kind == "ball":
            return {"kind": "ball", "center": self.center.tolist(), "radius": self.radius}
        return {"kind": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}


class Grid:
    """Uniform lattice of interior nodes with Shortley-Weller boundary data.

    Ball domains use the cell-centred lattice ``center + (i + 1/2) h`` so the
    centre is never a node.  Box domains use the interior vertices
    ``lo + i h`` (each is the centre of its dual cell); the box sides must be
    multiples of ``h``.

    For every node and axis the neighbour index (``-1`` when the neighbour
    lies outside) and the distance to it (or to the boundary crossing) are
    stored in ``neighbors`` and ``arm`` with shape ``(M, n, 2)``; the last
    axis is (minus side, plus side).
    """

    def __init__(self, domain, h):
        if h <= 0:
            raise ValueError("grid spacing must be positive")
        self.domain = domain
        self.h = float(h)
        n = self.n = domain.dimension
        if domain.kind == "ball":
            N = int(np.ceil(domain.radius / h))
            self.origin = domain.center - (N - 0.5) * h
            self.shape = (2 * N,) * n
        else:
            counts = (domain.hi - domain.lo) / h
            if np.any(np.abs(counts - np.round(counts)) > 1e-9):
                raise ValueError("box sides must be integer multiples of h")
            counts = np.round(counts).astype(int)
            if np.any(counts < 2):
                raise ValueError("grid too coarse for the box")
            self.origin = domain.lo + h
            self.shape = tuple(int(c) - 1 for c in counts)
        axes = [self.origin[k] + h * np.arange(self.shape[k]) for k in range(n)]
        self.axes = axes
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        inside = domain.contains(mesh.reshape(-1, n)).reshape(self.shape)
        self.mask = inside
        self.nodes = mesh[inside]
        self.index = np.full(self.shape, -1, dtype=np.int64)
        self.index[inside] = np.arange(self.nodes.shape[0])
        self.cell_measure = h**n
        self._build_arms()

    def _build_arms(self):
        n, h = self.n, self.h
        M = self.nodes.shape[0]
        ijk = np.argwhere(self.mask)
        nbr = np.full((M, n, 2), -1, dtype=np.int64)
        arm = np.full((M, n, 2), h)
        for k in range(n):
            for side, step in ((0, -1), (1, 1)):
                idx = ijk.copy()
                idx[:, k] += step
                valid = (idx[:, k] >= 0) & (idx[:, k] < self.shape[k])
                found = np.full(M, -1, dtype=np.int64)
                found[valid] = self.index[tuple(idx[valid].T)]
                nbr[:, k, side] = found
                out = found < 0
                if np.any(out):
                    arm[out, k, side] = self._boundary_arm(self.nodes[out], k, step)
        self.neighbors = nbr
        self.arm = arm

    def _boundary_arm(self, x, k, step):
        d = self.domain
        if d.kind == "ball":
            y = x - d.center
            yk = step * y[:, k]
            disc = yk**2 - (y**2).sum(axis=1) + d.radius**2
            s = -yk + np.sqrt(np.maximum(disc, 0.0))
        else:
            s = d.hi[k] - x[:, k] if step > 0 else x[:, k] - d.lo[k]
        return np.clip(s, 1e-12 * self.h, self.h)

    # the Grid doubles as a sample set with uniform weights
    @property
    def points(self):
        return self.nodes

    @property
    def weights(self):
        return np.full(self.nodes.shape[0], self.cell_measure)

    @property
    def size(self):
        return self.nodes.shape[0]

    def to_lattice(self, values, fill=0.0):
        """Scatter node values back onto the full lattice array."""
        values = np.asarray(values)
        out = np.full(self.shape + values.shape[1:], fill, dtype=values.dtype)
        out[self.mask] = values
        return out

    def __repr__(self):
        return f"Grid({self.domain.kind}, n={self.n}, h={self.h:g}, nodes={self.size})"


# ---------------------------------------------------------------------------
# compact sets


@dataclass(frozen=True, eq=False)
class CompactSetSpec:
    """A compact set: finite point set, sphere, union, tabulated distance, or empty."""

    kind: str
    points: np.ndarray | None = None
    center: np.ndarray | None = None
    radius: float | None = None
    members: tuple = ()
    grid: Grid | None = None
    values: np.ndarray | None = None
    _interp: object = field(default=None, repr=False)

    @classmethod
    def point(cls, a):
        return cls.from_points([a])

    @classmethod
    def from_points(cls, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return cls("points", points=pts)

    @classmethod
    def sphere(cls, center, radius):
        if radius <= 0:
            raise ValueError("sphere radius must be positive")
        return cls("sphere", center=np.asarray(center, dtype=float), radius=float(radius))

    @classmethod
    def union(cls, *members):
        if not members:
            raise ValueError("a union needs at least one member")
        return cls("union", members=tuple(members))

    @classmethod
    def from_field(cls, grid, distances):
        """Set given by a tabulated distance field on ``grid`` (zero on the set)."""
        lattice = grid.to_lattice(np.asarray(distances, dtype=float), fill=np.nan)
        # outside nodes take the value of the nearest inside node so the
        # interpolant is defined up to the boundary
        from scipy.ndimage import distance_transform_edt

        _, idx = distance_transform_edt(np.isnan(lattice), return_indices=True)
        lattice = lattice[tuple(idx)]
        interp = RegularGridInterpolator(grid.axes, lattice, bounds_error=False, fill_value=None)
        return cls("field", grid=grid, values=np.asarray(distances, dtype=float), _interp=interp)

    @classmethod
    def empty(cls):
        return cls("empty")

    @property
    def is_empty(self):
        if self.kind == "empty":
            return True
        if self.kind == "union":
            return all(m.is_empty for m in self.members)
        return False

    def primitives(self):
        """Flatten into a list of single points and spheres."""
        if self.kind == "points":
            return [CompactSetSpec.point(p) for p in self.points]
        if self.kind == "sphere":
            return [self]
        if self.kind == "union":
            return [p for m in self.members for p in m.primitives()]
        if self.kind == "empty":
            return []
        raise ValueError("a tabulated set has no analytic primitives")

    def representative_points(self, count=64):
        """Points lying on the set (used for admissibility checks)."""
        if self.kind == "points":
            return self.points
        if self.kind == "sphere":
            n = len(self.center)
            rng = np.random.default_rng(0)
            d = rng.standard_normal((count, n))
            d /= np.linalg.norm(d, axis=1, keepdims=True)
            return self.center + self.radius * d
        if self.kind == "union":
            return np.vstack([m.representative_points(count) for m in self.members if not m.is_empty])
        if self.kind == "field":
            g = self.grid
            return g.nodes[self.values <= 0.5 * g.h]
        return np.empty((0, 0))

    def to_dict(self):
        if self.kind == "points":
            return {"kind": "points", "points": self.points.tolist()}
        if self.kind == "sphere":
            return {"kind": "sphere", "center": self.center.tolist(), "radius": self.radius}
        if self.kind == "union":
            return {"kind": "union", "members": [m.to_dict() for m in self.members]}
        return {"kind": self.kind}


def distance_to_set(x, K):
    """Euclidean distance d(x; K) for one point or an ``(N, n)`` array."""
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if K.kind == "points":
        d = np.linalg.norm(pts[:, None, :] - K.points[None, :, :], axis=2).min(axis=1)
    elif K.kind == "sphere":
        d = np.abs(np.linalg.norm(pts - K.center, axis=1) - K.radius)
    elif K.kind == "union":
        live = [m for m in K.members if not m.is_empty]
        if not live:
            d = np.full(len(pts), np.inf)
        else:
            d = np.min([distance_to_set(pts, m) for m in live], axis=0)
    elif K.kind == "field":
        d = np.maximum(K._interp(pts), 0.0)
    elif K.kind == "empty":
        d = np.full(len(pts), np.inf)
    else:
        raise ValueError(f"unknown set kind {K.kind!r}")
    return float(d[0]) if single else d


def clearance(K, domain):
    """dist(K; boundary of the domain); negative when K leaves the domain."""
    if K.kind == "points":
        return float(domain.boundary_distance(K.points).min())
    if K.kind == "sphere":
        if domain.kind == "ball":
            return domain.radius - (np.linalg.norm(K.center - domain.center) + K.radius)
        return float(min((K.center - K.radius - domain.lo).min(), (domain.hi - K.center - K.radius).min()))
    if K.kind == "union":
        live = [m for m in K.members if not m.is_empty]
        return min(clearance(m, domain) for m in live) if live else np.inf
    if K.kind == "field":
        g = K.grid
        on_set = K.values <= 0.5 * g.h
        if not np.any(on_set):
            return np.inf
        return float(domain.boundary_distance(g.nodes[on_set]).min())
    return np.inf


# ---------------------------------------------------------------------------
# smooth distances


def softmin(parts, k=_SOFTMIN_POWER):
    """Smooth minimum ``(sum f_i^-k)^(-1/k)`` of smooth positive functions.

    ``parts`` is a list of ``(f, grad, lap)`` triples; the result satisfies
    ``N^(-1/k) min f_i <= F <= min f_i``.
    """
    if len(parts) == 1:
        return parts[0]
    f = np.stack([p[0] for p in parts])
    g = np.stack([p[1] for p in parts])
    lap = np.stack([p[2] for p in parts])
    fmin = f.min(axis=0)
    safe = np.where(fmin > 0, fmin, 1.0)
    t = np.where(fmin > 0, safe / np.where(f > 0, f, 1.0), (f == 0).astype(float))
    S = (t**k).sum(axis=0)
    T = (t[..., None] ** (k + 1) * g).sum(axis=0)
    F = np.where(fmin > 0, safe * S ** (-1.0 / k), 0.0)
    grad = S[:, None] ** (-(k + 1.0) / k) * T
    sq = (g**2).sum(axis=2)
    lapF = (k + 1.0) / safe * (
        S ** (-(2.0 * k + 1.0) / k) * (T**2).sum(axis=1) - S ** (-(k + 1.0) / k) * (t ** (k + 2) * sq).sum(axis=0)
    ) + S ** (-(k + 1.0) / k) * (t ** (k + 1) * lap).sum(axis=0)
    lapF = np.where(fmin > 0, lapF, 0.0)
    return F, grad, lapF


def _point_distance(x, a):
    y = x - a
    r = np.linalg.norm(y, axis=1)
    n = x.shape[1]
    pos = r > 0
    safe = np.where(pos, r, 1.0)
    grad = np.where(pos[:, None], y / safe[:, None], 0.0)
    lap = np.where(pos, (n - 1) / safe, 0.0)
    return r, grad, lap


def _sphere_distance(x, c, r0):
    # |r^2 - r0^2| / (sqrt(r^2 + eps^2) + r0): smooth off the sphere, also at the centre
    n = x.shape[1]
    eps = 0.5 * r0
    y = x - c
    r2 = (y**2).sum(axis=1)
    s = np.sqrt(r2 + eps**2)
    q = r2 - r0**2
    D = s + r0
    gq = 2.0 * y
    gD = y / s[:, None]
    lq = 2.0 * n
    lD = n / s - r2 / s**3
    g = q / D
    grad = gq / D[:, None] - (q / D**2)[:, None] * gD
    lap = lq / D - 2.0 * (gq * gD).sum(axis=1) / D**2 - q * lD / D**2 + 2.0 * q * (gD**2).sum(axis=1) / D**3
    sgn = np.sign(q)
    return np.abs(g), sgn[:, None] * grad, sgn * lap


def smooth_distance(points, K):
    """Regularized distance ``rho_K`` with its gradient and Laplacian.

    Exact distance for a single point; a rational regularization of
    ``| |x-c| - r0 |`` for spheres; the smooth minimum for several members.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    if K.kind == "points":
        return softmin([_point_distance(x, a) for a in K.points])
    if K.kind == "sphere":
        return _sphere_distance(x, K.center, K.radius)
    if K.kind == "union":
        live = [m for m in K.members if not m.is_empty]
        return softmin([smooth_distance(x, m) for m in live])
    raise ValueError(f"no regularized distance for a {K.kind!r} set")


def smooth_boundary_distance(points, domain):
    """Regularized boundary distance ``rho`` equivalent to delta(x)."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    n = x.shape[1]
    if domain.kind == "ball":
        R = domain.radius
        eps = 0.5 * R
        y = x - domain.center
        r2 = (y**2).sum(axis=1)
        s = np.sqrt(r2 + eps**2)
        rho = np.sqrt(R**2 + eps**2) - s
        grad = -y / s[:, None]
        lap = -(n / s - r2 / s**3)
        return rho, grad, lap
    parts = []
    zero = np.zeros(len(x))
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        parts.append((x[:, k] - domain.lo[k], np.broadcast_to(e, x.shape), zero))
        parts.append((domain.hi[k] - x[:, k], np.broadcast_to(-e, x.shape), zero))
    return softmin(parts)


@dataclass(frozen=True, eq=False)
class SmoothDistance:
    """Regularized distance on grid nodes with the achieved bound constants."""

    values: np.ndarray
    gradient: np.ndarray
    laplacian: np.ndarray
    M: float
    c1: float
    c2: float


def regularized_distance(A, grid):
    """Regularized distance to ``A`` (a compact set or :data:`BOUNDARY`) on ``grid``.

    Records ``M = max(rho/d, d/rho)``, ``c1 = max |grad rho|`` and
    ``c2 = max |rho * lap rho|`` over the nodes off ``A``.
    """
    x = grid.nodes
    if isinstance(A, str):
        if A != BOUNDARY:
            raise ValueError(f"unknown distance target {A!r}")
        rho, grad, lap = smooth_boundary_distance(x, grid.domain)
        d = grid.domain.boundary_distance(x)
    else:
        if A.kind in ("field", "empty"):
            raise ValueError(f"cannot build a regularized distance for a {A.kind!r} set")
        cl = clearance(A, grid.domain)
        if cl <= 0:
            raise ValueError("set is not strictly inside the domain")
        if grid.h >= cl / 8:
            raise ValueError(f"grid spacing {grid.h:g} does not resolve the set (clearance {cl:g})")
        rho, grad, lap = smooth_distance(x, A)
        d = distance_to_set(x, A)
    off = d > 0
    ratio = rho[off] / d[off]
    M = float(max(ratio.max(), (1.0 / ratio).max())) if off.any() else 1.0
    c1 = float(np.linalg.norm(grad[off], axis=1).max()) if off.any() else 0.0
    c2 = float(np.abs(rho[off] * lap[off]).max()) if off.any() else 0.0
    return SmoothDistance(rho, grad, lap, M, c1, c2)
