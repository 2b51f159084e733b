"""Reproducible random generation for all experiments.

Streams are addressed by (seed, stream_id): numpy's SeedSequence gives
statistically independent generators for distinct ids and bit-identical
output for repeated ids, which is what makes replications safe to run in
parallel and merge deterministically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .params import ModelParams, gumbel_centering, unit_ball_volume

__all__ = [
    "RngStream",
    "PointCloud",
    "ScaledWindow",
    "sample_radius",
    "sample_direction",
    "sample_polytope_input",
    "sample_limit_process",
    "sample_standardized_max",
]


@dataclass(frozen=True)
class RngStream:
    """Addressable random stream; stream_id is typically the replication index."""

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if self.seed < 0 or self.stream_id < 0:
            raise ValidationError("seed", "seed and stream_id must be non-negative")

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence([self.seed, self.stream_id]))


def _gen(rng) -> np.random.Generator:
    """Accept an RngStream or a ready Generator."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng)!r}")


@dataclass(frozen=True)
class PointCloud:
    """A sampled point set in R^dim; points has shape (n, dim)."""

    dim: int
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.dim:
            raise ValidationError("points", f"expected shape (n, {self.dim})")
        if pts.size and not np.all(np.isfinite(pts)):
            raise ValidationError("points", "coordinates must be finite")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True)
class ScaledWindow:
    """Spatial ball of radius L times height interval (h_min, h_max].

    h_min may be -inf; the window mass under intensity e^h stays finite.
    """

    spatial_radius: float
    h_min: float
    h_max: float

    def __post_init__(self):
        if not self.spatial_radius > 0:
            raise ValidationError("spatial_radius", "must be > 0")
        if not self.h_min < self.h_max:
            raise ValidationError("h_min", "must be < h_max")

    def mass(self, d: int) -> float:
        """Expected point count under the limiting intensity e^h dv dh."""
        vol = unit_ball_volume(d - 1) * self.spatial_radius ** (d - 1)
        low = 0.0 if math.isinf(self.h_min) else math.exp(self.h_min)
        return vol * (math.exp(self.h_max) - low)


def sample_radius(rng, d: int, alpha: float, beta: float, size=None):
    """Draw radii with density proportional to r^(d-1+alpha) exp(-r^beta/beta).

    Substituting t = r^beta/beta turns the law into Gamma((d+alpha)/beta),
    so r = (beta * G)^(1/beta) is exact.
    """
    g = _gen(rng)
    shape = (d + alpha) / beta
    t = g.gamma(shape, size=size)
    return (beta * t) ** (1.0 / beta)


def sample_direction(rng, d: int, size=None):
    """Uniform directions on S^{d-1} via normalized Gaussian vectors."""
    g = _gen(rng)
    if size is None:
        u = g.standard_normal(d)
        n = np.linalg.norm(u)
        while n == 0.0:  # probability-zero guard
            u = g.standard_normal(d)
            n = np.linalg.norm(u)
        return u / n
    u = g.standard_normal((size, d))
    n = np.linalg.norm(u, axis=1, keepdims=True)
    bad = n[:, 0] == 0.0
    while np.any(bad):
        u[bad] = g.standard_normal((int(bad.sum()), d))
        n = np.linalg.norm(u, axis=1, keepdims=True)
        bad = n[:, 0] == 0.0
    return u / n


def sample_polytope_input(rng, params: ModelParams) -> PointCloud:
    """Poisson(lambda) many isotropic points with the generalized gamma radial law."""
    g = _gen(rng)
    n = int(g.poisson(params.lam))
    if n == 0:
        return PointCloud(dim=params.d, points=np.empty((0, params.d)))
    r = sample_radius(g, params.d, params.alpha, params.beta, size=n)
    u = sample_direction(g, params.d, size=n)
    return PointCloud(dim=params.d, points=u * r[:, None])


def sample_limit_process(rng, d: int, window: ScaledWindow) -> np.ndarray:
    """Poisson process on the window with intensity e^h dv dh.

    Returns an array of shape (n, d) whose rows are (v_1..v_{d-1}, h).
    Heights use the exact inverse CDF of the truncated exponential-of-h law;
    spatial coordinates are uniform in the (d-1)-ball.
    """
    g = _gen(rng)
    n = int(g.poisson(window.mass(d)))
    out = np.empty((n, d))
    if n == 0:
        return out
    m = d - 1
    dirs = sample_direction(g, m, size=n)
    radii = window.spatial_radius * g.random(n) ** (1.0 / m)
    out[:, :m] = dirs * radii[:, None]
    u = g.random(n)
    if math.isinf(window.h_min):
        out[:, m] = window.h_max + np.log(u)
    else:
        lo, hi = math.exp(window.h_min), math.exp(window.h_max)
        out[:, m] = np.log(lo + u * (hi - lo))
    return out


def sample_standardized_max(rng, n: int, alpha: float, beta: float, size=None):
    """Standardized maximum of n iid draws from the 1-d generalized gamma density.

    The sign of each draw is symmetric, so the maximum is the largest of the
    Binomial(n, 1/2) many positive-side radii (or minus the smallest radius in
    the all-negative corner case). Returns
    (beta log n)^((beta-1)/beta) * (M_n - a_n).
    """
    if n < 2:
        raise ValidationError("n", f"n = {n} < 2")
    if not alpha > -1 or not beta >= 1:
        raise ValidationError("alpha/beta", "need alpha > -1 and beta >= 1")
    g = _gen(rng)
    a_n, scale = gumbel_centering(n, alpha, beta)
    shape = (1.0 + alpha) / beta

    def one() -> float:
        k = int(g.binomial(n, 0.5))
        if k == 0:
            # all points negative: the maximum is the least-negative one
            m = -(beta * np.min(g.gamma(shape, size=n))) ** (1.0 / beta)
        else:
            m = (beta * np.max(g.gamma(shape, size=k))) ** (1.0 / beta)
        return scale * (m - a_n)

    if size is None:
        return one()
    return np.array([one() for _ in range(size)])
