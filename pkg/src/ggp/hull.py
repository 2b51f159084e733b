"""Exact d-dimensional convex hulls with face counts and intrinsic volumes.

Hull construction is delegated to Qhull (scipy.spatial.ConvexHull), which
merges coplanar facets; the merged facet planes drive face counting, the
radial function and all containment checks. Two independent vertex oracles
(an LP feasibility test and a covering-balls test) cross-validate the hull.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError
from scipy.special import binom
from scipy.stats import norm as _normal
from scipy.stats.qmc import Sobol

from .errors import DegenerateInput, IndexOutOfRange, OriginOutside, OriginPoint
from .params import unit_ball_volume
from .sampling import PointCloud, _gen

__all__ = [
    "Facet",
    "Polytope",
    "KubotaEstimate",
    "convex_hull",
    "is_vertex_lp",
    "is_vertex_ball",
    "volume",
    "surface_area",
    "intrinsic_volume",
    "radial_function",
    "radial_function_batch",
]


@dataclass(frozen=True)
class Facet:
    """One (d-1)-face: outward unit normal, offset, and its vertex indices.

    Vertex indices point into the owning Polytope's vertex array; the facet
    plane is {x : <normal, x> = offset} with <normal, x> <= offset inside.
    """

    normal: np.ndarray
    offset: float
    vertex_indices: np.ndarray


@dataclass(frozen=True)
class Polytope:
    """Full-dimensional polytope with facet structure and f-vector.

    f_vector holds (f_0, ..., f_{d-1}); middle entries are None for d > 4
    where ridge enumeration is not performed. vertex_input_indices maps each
    vertex back to its row in the original (pre-deduplication) input.
    """

    dim: int
    vertices: np.ndarray
    facets: list
    f_vector: tuple
    vertex_input_indices: np.ndarray
    _volume: float
    _area: float

    @property
    def facet_normals(self) -> np.ndarray:
        return np.array([f.normal for f in self.facets])

    @property
    def facet_offsets(self) -> np.ndarray:
        return np.array([f.offset for f in self.facets])

    def scale(self) -> float:
        return float(np.max(np.abs(self.vertices))) or 1.0


def _dedup(points: np.ndarray):
    """Drop exact duplicate rows, keeping first occurrences in input order."""
    _, idx = np.unique(points, axis=0, return_index=True)
    keep = np.sort(idx)
    return points[keep], keep


def _as_points(cloud) -> np.ndarray:
    if isinstance(cloud, PointCloud):
        return cloud.points
    pts = np.asarray(cloud, dtype=float)
    if pts.ndim != 2:
        raise DegenerateInput("expected a 2-d array of points")
    return pts


def _count_faces(dim, n_vertices, facet_vertex_sets):
    """f-vector from merged facets; exact for d <= 4.

    A vertex pair spans an edge iff its pair of containing facets has size
    >= d-1 (>= 2 in d=3, >= 3 in d=4: the minimal common face of a non-edge
    pair is at least 2-dimensional and lies in fewer facets). A ridge in d=4
    is a facet pair sharing >= 3 vertices.
    """
    n_facets = len(facet_vertex_sets)
    if dim == 2:
        return (n_vertices, n_vertices)
    if dim == 3:
        pair_count = {}
        for vs in facet_vertex_sets:
            vs = sorted(vs)
            for i in range(len(vs)):
                for j in range(i + 1, len(vs)):
                    key = (vs[i], vs[j])
                    pair_count[key] = pair_count.get(key, 0) + 1
        f1 = sum(1 for c in pair_count.values() if c >= 2)
        return (n_vertices, f1, n_facets)
    if dim == 4:
        pair_count = {}
        for vs in facet_vertex_sets:
            vs = sorted(vs)
            for i in range(len(vs)):
                for j in range(i + 1, len(vs)):
                    key = (vs[i], vs[j])
                    pair_count[key] = pair_count.get(key, 0) + 1
        f1 = sum(1 for c in pair_count.values() if c >= 3)
        f2 = 0
        sets = [set(vs) for vs in facet_vertex_sets]
        for i in range(n_facets):
            for j in range(i + 1, n_facets):
                if len(sets[i] & sets[j]) >= 3:
                    f2 += 1
        return (n_vertices, f1, f2, n_facets)
    mid = (None,) * (dim - 2)
    return (n_vertices,) + mid + (n_facets,)


def convex_hull(cloud, assume_unique=False) -> Polytope:
    """Convex hull of a point cloud, with merged facets and f-vector.

    Input points are deduplicated (exact coordinate equality) first;
    assume_unique skips that sort, which callers drawing from continuous
    distributions use to avoid an O(n log n) pass over large clouds.
    Raises DegenerateInput when the points are affinely dependent.
    """
    if assume_unique:
        points = _as_points(cloud)
        orig_idx = np.arange(len(points))
    else:
        points, orig_idx = _dedup(_as_points(cloud))
    n, dim = points.shape
    if n < dim + 1:
        raise DegenerateInput(f"{n} points cannot span R^{dim}")
    try:
        qh = ConvexHull(points)
    except QhullError as exc:
        raise DegenerateInput(f"affinely dependent input: {exc}") from exc

    vert_idx = qh.vertices  # indices into deduped points
    vertices = points[vert_idx]
    to_local = {int(p): i for i, p in enumerate(vert_idx)}

    # Qhull assigns each output simplex the plane of its merged facet, so
    # grouping by exact equation equality recovers the merged facets.
    eqs, inverse = np.unique(qh.equations, axis=0, return_inverse=True)
    facet_members = [[] for _ in range(len(eqs))]
    for simplex_row, group in enumerate(inverse):
        facet_members[group].append(simplex_row)
    facets = []
    facet_vertex_sets = []
    for group, rows in enumerate(facet_members):
        pts = np.unique(qh.simplices[np.array(rows)])
        local = np.array(sorted(to_local[int(p)] for p in pts))
        facets.append(
            Facet(
                normal=eqs[group, :-1].copy(),
                offset=-float(eqs[group, -1]),
                vertex_indices=local,
            )
        )
        facet_vertex_sets.append(local.tolist())

    f_vec = _count_faces(dim, len(vertices), facet_vertex_sets)
    return Polytope(
        dim=dim,
        vertices=vertices,
        facets=facets,
        f_vector=f_vec,
        vertex_input_indices=orig_idx[vert_idx],
        _volume=float(qh.volume),
        _area=float(qh.area),
    )


def is_vertex_lp(cloud, index: int) -> bool:
    """LP vertex oracle: x_i is a vertex iff it is not a convex combination
    of the remaining points. Exact up to the LP solver tolerance (~1e-9)."""
    points = _as_points(cloud)
    n, dim = points.shape
    if not 0 <= index < n:
        raise IndexOutOfRange(f"index {index} out of range for {n} points")
    others = np.delete(points, index, axis=0)
    if len(others) == 0:
        return True
    target = points[index]
    a_eq = np.vstack([others.T, np.ones(len(others))])
    b_eq = np.concatenate([target, [1.0]])
    res = linprog(
        c=np.zeros(len(others)),
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=(0.0, None),
        method="highs",
    )
    if res.status == 0:
        return False  # representable: interior or on a face
    if res.status == 2:
        return True  # infeasible: extreme
    raise RuntimeError(f"LP solver failure: status {res.status} ({res.message})")


_sphere_cache: dict = {}


def _sphere_points(d: int, count: int) -> np.ndarray:
    """Deterministic low-discrepancy points on S^{d-1}.

    Equally spaced angles on the circle; Sobol points pushed through the
    Gaussian map in higher dimensions.
    """
    key = (d, count)
    if key not in _sphere_cache:
        if d == 2:
            angles = (np.arange(count) + 0.5) * (2 * np.pi / count)
            _sphere_cache[key] = np.column_stack([np.cos(angles), np.sin(angles)])
        else:
            m = int(np.ceil(np.log2(max(count, 2))))
            u = Sobol(d, scramble=False).random_base2(m)[:count]
            z = _normal.ppf(np.clip(u, 1e-12, 1 - 1e-12))
            norms = np.linalg.norm(z, axis=1)
            norms[norms == 0] = 1.0
            _sphere_cache[key] = z / norms[:, None]
    return _sphere_cache[key]


def is_vertex_ball(cloud, index: int) -> bool:
    """Covering-balls vertex oracle (approximate, for cross-validation).

    x' is a vertex iff the ball with diameter segment [o, x'] is not covered
    by the union of the corresponding balls of the other points. The decision
    samples 10 * 4^(d-1) deterministic points z on the candidate ball's
    boundary sphere; z lies outside the ball of y iff ||z||^2 > <z, y>.
    Exact duplicates of x' resolve to "not a vertex".
    """
    points = _as_points(cloud)
    n, dim = points.shape
    if not 0 <= index < n:
        raise IndexOutOfRange(f"index {index} out of range for {n} points")
    x = points[index]
    r = np.linalg.norm(x)
    if r == 0.0:
        raise OriginPoint("test point at the origin")
    others = np.delete(points, index, axis=0)
    if len(others) == 0:
        return True
    z = x / 2.0 + (r / 2.0) * _sphere_points(dim, 10 * 4 ** (dim - 1))
    # outside y's ball: ||z||^2 - <z, y> > 0; require a small positive margin
    # so duplicated points (margin exactly 0) count as covered
    margin = (z * z).sum(axis=1)[:, None] - z @ others.T
    eps = 1e-12 * max(1.0, r * r)
    return bool(np.any(np.all(margin > eps, axis=1)))


def volume(p: Polytope) -> float:
    """Volume of the full-dimensional polytope."""
    return p._volume


def surface_area(p: Polytope) -> float:
    """Sum of facet (d-1)-measures; the perimeter when d = 2."""
    return p._area


@dataclass(frozen=True)
class KubotaEstimate:
    """Monte Carlo intrinsic-volume estimate with its standard error."""

    value: float
    stderr: float
    n_directions: int

    def __float__(self):
        return self.value


def intrinsic_volume(p: Polytope, i: int, n_directions: int = 2000, rng=None,
                     force_mc: bool = False) -> KubotaEstimate:
    """i-th intrinsic volume V_i.

    i = d and i = d-1 fall through to the exact volume and half surface
    area (force_mc keeps the Monte Carlo route for cross-checks). Otherwise
    V_i is estimated as

        binom(d, i) * kappa_d / (kappa_i * kappa_{d-i})
            * mean of vol_i(projection onto a uniform random i-subspace),

    using orthonormalized Gaussian frames; projection hull volumes reuse
    this module's hull engine in i dimensions.
    """
    d = p.dim
    if not 1 <= i <= d:
        raise IndexOutOfRange(f"i = {i} not in 1..{d}")
    if i == d:
        return KubotaEstimate(volume(p), 0.0, 0)
    if i == d - 1 and not force_mc:
        return KubotaEstimate(surface_area(p) / 2.0, 0.0, 0)
    if n_directions < 1:
        raise ValueError("n_directions must be >= 1")
    g = _gen(rng) if rng is not None else np.random.default_rng(0)
    frames = g.standard_normal((n_directions, d, i))
    q, _ = np.linalg.qr(frames)
    vols = np.empty(n_directions)
    verts = p.vertices
    for k in range(n_directions):
        proj = verts @ q[k]
        if i == 1:
            vols[k] = float(proj.max() - proj.min())
        else:
            try:
                vols[k] = ConvexHull(proj).volume
            except QhullError:
                vols[k] = 0.0  # measure-zero degenerate projection
    coef = binom(d, i) * unit_ball_volume(d) / (unit_ball_volume(i) * unit_ball_volume(d - i))
    value = coef * float(vols.mean())
    stderr = coef * float(vols.std(ddof=1)) / math.sqrt(n_directions) if n_directions > 1 else 0.0
    return KubotaEstimate(value, stderr, n_directions)


def _require_origin_interior(p: Polytope):
    eps = 1e-12 * p.scale()
    if np.any(p.facet_offsets <= eps):
        raise OriginOutside("origin is not interior to the polytope")


def radial_function(p: Polytope, u: np.ndarray) -> float:
    """Distance from the origin to the boundary along direction u."""
    return float(radial_function_batch(p, np.asarray(u, dtype=float)[None, :])[0])


def radial_function_batch(p: Polytope, dirs: np.ndarray) -> np.ndarray:
    """Radial function for a batch of directions, shape (k, d) -> (k,).

    rho(u) = min over facets with <normal, u> > 0 of offset / <normal, u>;
    requires the origin strictly inside so every ray exits through a facet.
    """
    _require_origin_interior(p)
    dots = dirs @ p.facet_normals.T
    with np.errstate(divide="ignore"):
        t = np.where(dots > 1e-300, p.facet_offsets[None, :] / dots, np.inf)
    return t.min(axis=1)
