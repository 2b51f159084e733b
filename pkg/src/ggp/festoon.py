"""Limiting germ-grain objects: extreme points, the festoon boundary, the
upward paraboloid envelope, and their finite-intensity analogues.

The workhorse is the parabolic lifting (v, h) -> (v, s) with s = h + ||v||^2/2.
It sends the translated downward paraboloid with apex (v0, h0) to the affine
lower half-space {s <= s0 + <v0, v - v0>}, so a point admits an empty
downward paraboloid through it exactly when its lift is a vertex of the
lower convex hull of the lifted point set. The festoon boundary at v is the
lower hull height minus ||v||^2/2, a piecewise parabolic function.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from .errors import EmptyInput, OutsideSupport
from .hull import Polytope, radial_function_batch
from .params import ModelParams
from .rescale import QuasiGrain, ScaledPoint, exp_map, grain_boundary

__all__ = [
    "Festoon",
    "lift",
    "extreme_points",
    "phi_boundary",
    "phi_boundary_batch",
    "psi_boundary",
    "psi_lambda_boundary",
    "psi_lambda_envelope",
    "rescaled_hull_boundary",
    "sup_distance",
    "windowed_festoon",
    "ball_grid",
]


def _as_scaled_array(points) -> np.ndarray:
    """Normalize a list of ScaledPoint or an (n, m+1) array to an array."""
    if isinstance(points, np.ndarray):
        arr = points.astype(float, copy=False)
    else:
        rows = [p.as_array() if isinstance(p, ScaledPoint) else np.asarray(p, float) for p in points]
        if len(rows) == 0:
            raise EmptyInput("no scaled points")
        arr = np.vstack(rows)
    if arr.ndim != 2 or arr.shape[1] < 2:
        raise ValueError("expected rows (v_1..v_m, h) with m >= 1")
    if arr.shape[0] == 0:
        raise EmptyInput("no scaled points")
    return arr


def lift(w):
    """Parabolic lifting s = h + ||v||^2 / 2.

    Accepts a ScaledPoint, a single row (v.., h) or an (n, m+1) array and
    returns the same shape with h replaced by s.
    """
    if isinstance(w, ScaledPoint):
        arr = w.as_array()
        return np.concatenate([arr[:-1], [arr[-1] + 0.5 * float(arr[:-1] @ arr[:-1])]])
    arr = np.asarray(w, dtype=float)
    single = arr.ndim == 1
    a = arr[None, :] if single else arr
    out = a.copy()
    out[:, -1] = a[:, -1] + 0.5 * np.sum(a[:, :-1] ** 2, axis=1)
    return out[0] if single else out


def _lower_hull_1d(lifted: np.ndarray):
    """Monotone-chain lower hull for spatial dimension 1.

    Returns (vertex indices into `lifted`, sorted by spatial coordinate).
    Collinear interior points are not vertices; exact duplicates in the
    spatial coordinate keep only the lowest lift.
    """
    order = np.lexsort((lifted[:, 1], lifted[:, 0]))
    chain: list[int] = []
    last_v = None
    for idx in order:
        v, s = lifted[idx]
        if last_v is not None and v == last_v:
            continue  # same spatial location, higher lift
        last_v = v
        while len(chain) >= 2:
            v1, s1 = lifted[chain[-2]]
            v2, s2 = lifted[chain[-1]]
            # keep only strict right turns of the lower chain
            if (v2 - v1) * (s - s1) - (s2 - s1) * (v - v1) <= 0.0:
                chain.pop()
            else:
                break
        chain.append(int(idx))
    return np.array(chain, dtype=int)


def _lower_hull_vertex_lp(lifted: np.ndarray, index: int) -> bool:
    """Exact fallback: is lifted[index] a vertex of the lower hull?

    A point fails to be one iff it is a convex combination of the other
    lifted points plus a non-negative push straight up.
    """
    others = np.delete(lifted, index, axis=0)
    if len(others) == 0:
        return True
    m = lifted.shape[1]
    up = np.zeros(m)
    up[-1] = 1.0
    a_eq = np.vstack([np.column_stack([others.T, up]), np.append(np.ones(len(others)), 0.0)])
    b_eq = np.concatenate([lifted[index], [1.0]])
    res = linprog(
        c=np.zeros(len(others) + 1),
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=(0.0, None),
        method="highs",
    )
    if res.status == 0:
        return False
    if res.status == 2:
        return True
    raise RuntimeError(f"LP solver failure: status {res.status}")


@dataclass(frozen=True)
class Festoon:
    """Extreme points of a scaled point set plus the lifted lower-hull data.

    `points` are the input rows (v.., h); `extreme_indices` index into them.
    `lifted_lower_hull` stores what boundary evaluation needs: for spatial
    dimension 1 the sorted extreme (v, s) arrays, otherwise the affine
    pieces (gradients, intercepts) of the lower facets together with the
    spatial hull inequalities of the extreme points.
    """

    points: np.ndarray
    extreme_indices: np.ndarray
    spatial_dim: int
    lifted_lower_hull: dict

    @property
    def extreme_points(self) -> np.ndarray:
        return self.points[self.extreme_indices]


def extreme_points(points) -> Festoon:
    """Extreme points via the parabolic lifting.

    The extreme set is the vertex set of the lower convex hull of the lifted
    points (the hull extended upward in the lift direction). Exact duplicate
    rows are removed first; ties keep the first occurrence.
    """
    arr = _as_scaled_array(points)
    _, first = np.unique(arr, axis=0, return_index=True)
    keep = np.sort(first)
    arr = arr[keep]
    m = arr.shape[1] - 1
    lifted = lift(arr)

    if m == 1:
        chain = _lower_hull_1d(lifted)
        ext = np.sort(chain)
        hull_data = {
            "vx": lifted[chain, 0],
            "vs": lifted[chain, 1],
        }
        return Festoon(points=arr, extreme_indices=ext, spatial_dim=1, lifted_lower_hull=hull_data)

    ext_idx, planes = _lower_hull_nd(lifted)
    spatial = arr[ext_idx, :-1]
    hull_data = {"planes": planes, "spatial_hull": _spatial_hull(spatial)}
    return Festoon(
        points=arr, extreme_indices=np.sort(ext_idx), spatial_dim=m, lifted_lower_hull=hull_data
    )


def _lower_hull_nd(lifted: np.ndarray):
    """Lower-hull vertices and facet affine pieces for spatial dimension >= 2.

    Falls back to per-point LP tests when the lifted set is affinely
    degenerate (then no affine facet pieces are available).
    """
    n, mp1 = lifted.shape
    if n <= mp1:
        ext = np.array([i for i in range(n) if _lower_hull_vertex_lp(lifted, i)], dtype=int)
        return ext, None
    try:
        qh = ConvexHull(lifted)
    except QhullError:
        ext = np.array([i for i in range(n) if _lower_hull_vertex_lp(lifted, i)], dtype=int)
        return ext, None
    eqs, inverse = np.unique(qh.equations, axis=0, return_inverse=True)
    lower = eqs[:, mp1 - 1] < -1e-12  # outward normal points downward in s
    members = [[] for _ in range(len(eqs))]
    for row, grp in enumerate(inverse):
        members[grp].append(row)
    ext_set: set[int] = set()
    grads, icpts = [], []
    for grp in np.flatnonzero(lower):
        pts = np.unique(qh.simplices[np.array(members[grp])])
        ext_set.update(int(p) for p in pts)
        normal, off = eqs[grp, :-1], eqs[grp, -1]
        # n_v . v + n_s s + off = 0  ->  s = -(off + n_v . v)/n_s
        grads.append(-normal[:-1] / normal[-1])
        icpts.append(-off / normal[-1])
    planes = (np.array(grads), np.array(icpts))
    return np.array(sorted(ext_set), dtype=int), planes


def _spatial_hull(spatial: np.ndarray):
    """Inequalities <a, v> <= b describing the hull of the extreme spatial
    coordinates (None when degenerate; membership then checked by LP)."""
    if len(spatial) <= spatial.shape[1]:
        return None
    try:
        qh = ConvexHull(spatial)
    except QhullError:
        return None
    return qh.equations


def _inside_spatial_hull(f: Festoon, v: np.ndarray, tol: float) -> bool:
    spatial = f.extreme_points[:, :-1]
    eqs = f.lifted_lower_hull.get("spatial_hull")
    if eqs is not None:
        return bool(np.all(eqs[:, :-1] @ v + eqs[:, -1] <= tol))
    # degenerate spatial support: membership via convex-combination LP
    res = linprog(
        c=np.zeros(len(spatial)),
        A_eq=np.vstack([spatial.T, np.ones(len(spatial))]),
        b_eq=np.concatenate([v, [1.0]]),
        bounds=(0.0, None),
        method="highs",
    )
    return res.status == 0


def phi_boundary(f: Festoon, v):
    """Festoon boundary height at spatial location v.

    Equals the lifted lower-hull height minus ||v||^2/2; raises
    OutsideSupport when v leaves the spatial hull of the extreme points
    (there the boundary is unbounded).
    """
    v = np.atleast_1d(np.asarray(v, dtype=float))
    scale = max(1.0, float(np.max(np.abs(f.extreme_points[:, :-1]))) if f.extreme_indices.size else 1.0)
    tol = 1e-9 * scale
    if f.spatial_dim == 1:
        vx = f.lifted_lower_hull["vx"]
        vs = f.lifted_lower_hull["vs"]
        x = float(v[0])
        if x < vx[0] - tol or x > vx[-1] + tol:
            raise OutsideSupport(f"v = {x:.4g} outside [{vx[0]:.4g}, {vx[-1]:.4g}]")
        s = float(np.interp(x, vx, vs))
        return s - 0.5 * x * x
    if not _inside_spatial_hull(f, v, tol):
        raise OutsideSupport("query outside the extreme points' spatial hull")
    planes = f.lifted_lower_hull.get("planes")
    if planes is None or len(planes[0]) == 0:
        # degenerate lower hull: all extreme lifts lie on one affine piece
        lifted = lift(f.extreme_points)
        g, res, *_ = np.linalg.lstsq(
            np.column_stack([lifted[:, :-1], np.ones(len(lifted))]), lifted[:, -1], rcond=None
        )
        s = float(np.concatenate([v, [1.0]]) @ g)
    else:
        grads, icpts = planes
        s = float(np.max(grads @ v + icpts))
    return s - 0.5 * float(v @ v)


def phi_boundary_batch(f: Festoon, grid: np.ndarray) -> np.ndarray:
    """Festoon boundary over a (k, m) batch of spatial locations.

    Raises OutsideSupport if any location leaves the extreme points' spatial
    hull; the batch path avoids per-point Python overhead on dense grids.
    """
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    scale = max(1.0, float(np.max(np.abs(f.extreme_points[:, :-1]))))
    tol = 1e-9 * scale
    if f.spatial_dim == 1:
        vx = f.lifted_lower_hull["vx"]
        vs = f.lifted_lower_hull["vs"]
        x = grid[:, 0]
        if np.any(x < vx[0] - tol) or np.any(x > vx[-1] + tol):
            raise OutsideSupport("grid leaves the extreme points' spatial hull")
        return np.interp(x, vx, vs) - 0.5 * x * x
    eqs = f.lifted_lower_hull.get("spatial_hull")
    planes = f.lifted_lower_hull.get("planes")
    if eqs is None or planes is None or len(planes[0]) == 0:
        return np.array([phi_boundary(f, row) for row in grid])
    if np.any(grid @ eqs[:, :-1].T + eqs[None, :, -1] > tol):
        raise OutsideSupport("grid leaves the extreme points' spatial hull")
    grads, icpts = planes
    s = np.max(grid @ grads.T + icpts[None, :], axis=1)
    return s - 0.5 * np.sum(grid**2, axis=1)


def psi_boundary(points, v):
    """Lower envelope of upward unit paraboloids planted at the points."""
    arr = _as_scaled_array(points)
    v = np.atleast_1d(np.asarray(v, dtype=float))
    d2 = np.sum((arr[:, :-1] - v[None, :]) ** 2, axis=1)
    return float(np.min(arr[:, -1] + 0.5 * d2))


def psi_lambda_boundary(points, v, params: ModelParams, r_lambda: float):
    """Lower envelope of upward quasi-grains at finite intensity."""
    arr = _as_scaled_array(points)
    v = np.atleast_1d(np.asarray(v, dtype=float))
    vals = [
        grain_boundary(
            QuasiGrain(
                apex=ScaledPoint(v=row[:-1], h=float(row[-1])),
                orientation="up",
                r_lambda=r_lambda,
                beta=params.beta,
            ),
            v,
        )
        for row in arr
    ]
    return float(np.min(vals))


def psi_lambda_envelope(points, grid: np.ndarray, beta: float, r_lambda: float) -> np.ndarray:
    """Vectorized upward quasi-grain envelope over a grid of spatial points.

    Grid has shape (k, m); returns (k,). Uses 1 - cos(d) = 2 sin^2(d/2)
    computed from chord ratios, which stays accurate under the R^beta
    amplification.
    """
    arr = _as_scaled_array(points)
    rb = r_lambda**beta
    scale = r_lambda ** (-beta / 2.0)
    ug = exp_map(grid * scale)  # (k, m+1)
    ua = exp_map(arr[:, :-1] * scale)  # (n, m+1)
    d2 = np.sum((ug[:, None, :] - ua[None, :, :]) ** 2, axis=2)
    s2 = d2 / (d2 + np.sum((ug[:, None, :] + ua[None, :, :]) ** 2, axis=2))
    h0 = arr[None, :, -1]
    vals = (rb - h0) * 2.0 * s2 + h0
    return vals.min(axis=1)


def rescaled_hull_boundary(p: Polytope, v, params: ModelParams, r_lambda: float):
    """Height of the rescaled polytope boundary above spatial location v.

    h(v) = R^beta (1 - rho(u)/R) with u the exponential image of v and rho
    the hull's radial function; requires the origin interior to the hull.
    """
    v = np.asarray(v, dtype=float)
    single = v.ndim <= 1
    vv = np.atleast_2d(v)
    u = exp_map(vv * r_lambda ** (-params.beta / 2.0))
    rho = radial_function_batch(p, u)
    h = r_lambda ** (params.beta - 1.0) * (r_lambda - rho)
    return float(h[0]) if single else h


def ball_grid(L: float, grid_n: int, m: int) -> np.ndarray:
    """Deterministic grid of grid_n^m axis-aligned points inside the m-ball."""
    axes = [np.linspace(-L, L, grid_n) for _ in range(m)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([a.ravel() for a in mesh])
    return pts[np.linalg.norm(pts, axis=1) <= L + 1e-12]


def sup_distance(f, g, L: float, grid_n: int, spatial_dim: int = 1) -> float:
    """Max |f - g| over a deterministic grid of the spatial L-ball.

    f and g map a batch (k, m) of locations to (k,) heights; callables that
    only take single points are applied row by row.
    """
    grid = ball_grid(L, grid_n, spatial_dim)

    def evaluate(fun):
        try:
            out = np.asarray(fun(grid), dtype=float)
            if out.shape == (len(grid),):
                return out
        except Exception:
            pass
        return np.array([float(fun(row)) for row in grid])

    return float(np.max(np.abs(evaluate(f) - evaluate(g))))


def windowed_festoon(scaled_points: np.ndarray, L: float, spatial_limit: float | None = None):
    """Festoon of the points within a guard-banded spatial window.

    The construction window is B(o, L + guard) with guard 2 sqrt(2 |h_min|),
    h_min the lowest height seen inside B(o, L + 1); the band suppresses
    edge bias when the boundary is later evaluated on B(o, L) only.
    Returns (festoon, kept indices, window radius).
    """
    arr = _as_scaled_array(scaled_points)
    vnorm = np.linalg.norm(arr[:, :-1], axis=1)
    near = arr[vnorm <= L + 1.0, -1]
    h_min = float(near.min()) if near.size else -1.0
    guard = 2.0 * np.sqrt(2.0 * max(1.0, abs(h_min)))
    win = L + guard
    if spatial_limit is not None:
        win = min(win, spatial_limit)
    kept = np.flatnonzero(vnorm <= win)
    if kept.size == 0:
        raise EmptyInput("no scaled points inside the construction window")
    return extreme_points(arr[kept]), kept, win
