import math

import numpy as np
import pytest

from ggp.errors import EmptyInput, OutsideSupport
from ggp.festoon import (
    ball_grid,
    extreme_points,
    lift,
    phi_boundary,
    phi_boundary_batch,
    psi_boundary,
    psi_lambda_boundary,
    rescaled_hull_boundary,
    sup_distance,
    windowed_festoon,
)
from ggp.hull import convex_hull
from ggp.params import critical_radius, validate_params
from ggp.rescale import ScaledPoint, transform, transform_batch
from ggp.sampling import RngStream, sample_direction, sample_polytope_input


def brute_force_extremes(points, tie_tol=1e-7):
    """Apex-scan oracle for the extreme set, independent of any hull code.

    For a candidate apex a, the downward paraboloid lowered until it touches
    the point set touches exactly the minimizers of h_j + ||v_j - a||^2 / 2,
    and each touched point admits an empty paraboloid through it. Scanning
    the apices where two (spatial dim 1) or three (dim 2) points tie, plus a
    far ring for the unbounded witness regions, reaches every extreme
    point's witness region for generic inputs.
    """
    pts = np.asarray(points, dtype=float)
    v, h = pts[:, :-1], pts[:, -1]
    n, m = v.shape
    apices = [np.zeros(m)]
    if m == 1:
        for i in range(n):
            for j in range(i + 1, n):
                if v[i, 0] != v[j, 0]:
                    s_i, s_j = h[i] + v[i, 0] ** 2 / 2, h[j] + v[j, 0] ** 2 / 2
                    apices.append(np.array([(s_j - s_i) / (v[j, 0] - v[i, 0])]))
    else:
        lifted_s = h + 0.5 * np.sum(v**2, axis=1)
        for i in range(n):
            for j in range(i + 1, n):
                for k in range(j + 1, n):
                    a_mat = np.vstack([v[j] - v[i], v[k] - v[i]])
                    rhs = np.array([lifted_s[j] - lifted_s[i], lifted_s[k] - lifted_s[i]])
                    if abs(np.linalg.det(a_mat)) < 1e-12:
                        continue
                    apices.append(np.linalg.solve(a_mat, rhs))
    finite = np.array(apices)
    radius = 10.0 * (np.max(np.abs(finite)) + np.max(np.abs(v)) + 1.0)
    angles = np.linspace(0, 2 * np.pi, 256, endpoint=False)
    if m == 1:
        ring = np.array([[radius], [-radius]])
    else:
        ring = radius * np.column_stack([np.cos(angles), np.sin(angles)])
    apices = np.vstack([finite, ring])

    scale = 1.0 + float(np.max(np.abs(pts)))
    found = set()
    for start in range(0, len(apices), 4096):
        a = apices[start:start + 4096]
        depth = h[None, :] + 0.5 * np.sum((v[None, :, :] - a[:, None, :]) ** 2, axis=2)
        tied = depth <= depth.min(axis=1, keepdims=True) + tie_tol * scale**2
        found.update(np.flatnonzero(tied.any(axis=0)).tolist())
    return sorted(found)


class TestLift:
    def test_examples(self):
        assert np.allclose(lift(np.array([0.0, -1.0])), [0.0, -1.0])
        assert np.allclose(lift(np.array([1.0, 0.0])), [1.0, 0.5])

    def test_scaled_point_input(self):
        out = lift(ScaledPoint(v=np.array([2.0]), h=1.0))
        assert np.allclose(out, [2.0, 3.0])

    def test_membership_equivalence(self):
        # (v,h) in the downward paraboloid at w0 iff the lift lies in the
        # lifted half-space s <= s0 + <v0, v - v0>
        rng = np.random.default_rng(0)
        for _ in range(10**4):
            m = rng.integers(1, 3)
            w0 = rng.uniform(-2, 2, m + 1)
            w = rng.uniform(-2, 2, m + 1)
            in_paraboloid = w[-1] <= w0[-1] - 0.5 * np.sum((w[:-1] - w0[:-1]) ** 2)
            lw, lw0 = lift(w), lift(w0)
            in_halfspace = lw[-1] <= lw0[-1] + w0[:-1] @ (lw[:-1] - lw0[:-1])
            assert in_paraboloid == in_halfspace


class TestExtremePoints:
    def test_single_point(self):
        f = extreme_points(np.array([[0.3, -1.0]]))
        assert list(f.extreme_indices) == [0]

    def test_vertical_pair_keeps_lower(self):
        f = extreme_points(np.array([[0.0, 0.0], [0.0, -1.0]]))
        assert np.allclose(f.extreme_points, [[0.0, -1.0]])

    def test_three_point_example(self):
        pts = np.array([[-1.0, 0.0], [0.0, -0.4], [1.0, 0.0]])
        f = extreme_points(pts)
        assert list(f.extreme_indices) == [0, 1, 2]
        raised = pts.copy()
        raised[1, 1] = 0.6  # lifted to 0.6, above the chord level 0.5
        f2 = extreme_points(raised)
        assert list(f2.extreme_indices) == [0, 2]

    def test_duplicates_collapse(self):
        pts = np.array([[0.0, -1.0], [0.0, -1.0], [2.0, 0.0]])
        f = extreme_points(pts)
        assert len(f.points) == 2
        assert len(f.extreme_indices) == 2

    def test_empty_rejected(self):
        with pytest.raises(EmptyInput):
            extreme_points(np.empty((0, 2)))

    @pytest.mark.parametrize("spatial_dim", [1, 2])
    def test_duality_against_brute_force(self, spatial_dim):
        rng = np.random.default_rng(10 + spatial_dim)
        for _ in range(30):
            n = int(rng.integers(1, 41))
            pts = np.column_stack([
                rng.uniform(-2, 2, (n, spatial_dim)),
                rng.uniform(-3, 1, n),
            ])
            f = extreme_points(pts)
            assert list(f.extreme_indices) == brute_force_extremes(pts), pts

    def test_insertion_never_raises_boundary(self):
        rng = np.random.default_rng(3)
        anchors = np.array([[-2.5, 1.0], [2.5, 1.0]])  # keep [-1, 1] in support
        for _ in range(20):
            pts = np.vstack([anchors,
                             np.column_stack([rng.uniform(-2, 2, 12), rng.uniform(-2, 1, 12)])])
            f = extreme_points(pts)
            grid = np.linspace(-1, 1, 11)[:, None]
            base = phi_boundary_batch(f, grid)
            extra = np.array([[rng.uniform(-2, 2), rng.uniform(-2, 1)]])
            f2 = extreme_points(np.vstack([pts, extra]))
            after = phi_boundary_batch(f2, grid)
            assert np.all(after <= base + 1e-12)


class TestPhiBoundary:
    def test_single_point_support(self):
        f = extreme_points(np.array([[0.0, -1.0]]))
        assert phi_boundary(f, np.array([0.0])) == pytest.approx(-1.0, abs=1e-12)
        with pytest.raises(OutsideSupport):
            phi_boundary(f, np.array([0.5]))

    def test_three_point_interpolation(self):
        pts = np.array([[-1.0, 0.0], [0.0, -0.4], [1.0, 0.0]])
        f = extreme_points(pts)
        # lifted chord from (0, -0.4) to (1, 0.5) has height 0.05 at v = 0.5
        assert phi_boundary(f, np.array([0.5])) == pytest.approx(0.05 - 0.125, abs=1e-12)

    def test_boundary_passes_through_extremes(self):
        rng = np.random.default_rng(4)
        for spatial_dim in (1, 2):
            pts = np.column_stack([
                rng.uniform(-2, 2, (25, spatial_dim)),
                rng.uniform(-3, 0, 25),
            ])
            f = extreme_points(pts)
            for row in f.extreme_points:
                assert phi_boundary(f, row[:-1]) == pytest.approx(row[-1], abs=1e-9)

    def test_boundary_below_all_points(self):
        rng = np.random.default_rng(5)
        pts = np.column_stack([rng.uniform(-2, 2, 40), rng.uniform(-3, 1, 40)])
        f = extreme_points(pts)
        for row in pts:
            assert phi_boundary(f, row[:-1]) <= row[-1] + 1e-12

    def test_psi_dominated_by_phi(self):
        # on the support the upward envelope lies below the festoon: any
        # supporting paraboloid at v touches an extreme point e with
        # <v - e, v - apex> <= 0, whose upward paraboloid at v sits below it
        rng = np.random.default_rng(6)
        for spatial_dim in (1, 2):
            for _ in range(10):
                pts = np.column_stack([
                    rng.uniform(-2, 2, (30, spatial_dim)),
                    rng.uniform(-3, 1, 30),
                ])
                f = extreme_points(pts)
                for _ in range(20):
                    va = rng.uniform(-1.5, 1.5, spatial_dim)
                    try:
                        phi = phi_boundary(f, va)
                    except OutsideSupport:
                        continue
                    assert psi_boundary(pts, va) <= phi + 1e-9

    def test_festoon_can_exceed_envelope_over_pits(self):
        # explicit configuration where the festoon arc rides above the
        # upward envelope of a deep interior point
        pts = np.array([[-2.0, 0.0], [0.0, -3.0], [2.0, 0.0]])
        f = extreme_points(pts)
        assert list(f.extreme_indices) == [0, 1, 2]
        v = np.array([-1.5])
        assert phi_boundary(f, v) == pytest.approx(-0.375, abs=1e-12)
        assert psi_boundary(pts, v) == pytest.approx(-1.875, abs=1e-12)


class TestPsiBoundaries:
    def test_single_point(self):
        pts = np.array([[0.0, 0.0]])
        for v in (0.0, 0.7, -1.3):
            assert psi_boundary(pts, np.array([v])) == pytest.approx(v**2 / 2, rel=1e-12)

    def test_two_point_envelope(self):
        pts = np.array([[-1.0, 0.0], [1.0, 0.0]])
        assert psi_boundary(pts, np.array([0.0])) == pytest.approx(0.5, rel=1e-12)

    def test_brute_force_grid_equality(self):
        rng = np.random.default_rng(7)
        pts = np.column_stack([rng.uniform(-2, 2, (30, 2)), rng.uniform(-2, 1, 30)])
        for _ in range(100):
            v = rng.uniform(-2, 2, 2)
            direct = min(h + 0.5 * np.sum((v - vv) ** 2) for *vv, h in pts.tolist())
            assert psi_boundary(pts, v) == pytest.approx(direct, rel=1e-12)

    def test_quasi_envelope_at_apex(self):
        params = validate_params(2, 0, 2, 1e5)
        r = critical_radius(params)
        pts = np.array([[0.4, -0.7]])
        assert psi_lambda_boundary(pts, np.array([0.4]), params, r) == pytest.approx(-0.7,
                                                                                     abs=1e-9)

    def test_quasi_envelope_converges_to_ideal(self):
        rng = np.random.default_rng(8)
        params = validate_params(2, 0, 2, 1e5)
        gaps = {rl: [] for rl in (5.0, 10.0, 20.0)}
        for _ in range(50):
            pts = np.column_stack([rng.uniform(-2, 2, 15), rng.uniform(-2, 1, 15)])
            for rl in gaps:
                sup = max(
                    abs(
                        psi_lambda_boundary(pts, np.array([v]), params, rl)
                        - psi_boundary(pts, np.array([v]))
                    )
                    for v in np.linspace(-1, 1, 21)
                )
                gaps[rl].append(sup)
        med = {rl: np.median(g) for rl, g in gaps.items()}
        assert med[20.0] < med[10.0] < med[5.0]

    def test_quasi_envelope_formal_limit(self):
        rng = np.random.default_rng(9)
        params = validate_params(2, 0, 2, 1e5)
        pts = np.column_stack([rng.uniform(-2, 2, 20), rng.uniform(-2, 1, 20)])
        for v in np.linspace(-1, 1, 9):
            quasi = psi_lambda_boundary(pts, np.array([v]), params, 1e9)
            ideal = psi_boundary(pts, np.array([v]))
            assert quasi == pytest.approx(ideal, abs=1e-6)


class TestRescaledHullBoundary:
    def test_discretized_critical_ball(self):
        params = validate_params(3, 0, 2, 1e5)
        r = critical_radius(params)
        dirs = sample_direction(RngStream(1, 0), 3, size=2000)
        poly = convex_hull(dirs * r)
        grid = ball_grid(1.0, 9, 2)
        heights = rescaled_hull_boundary(poly, grid, params, r)
        assert np.max(np.abs(heights)) < 0.05 * r**2  # discretization error only

    def test_compositional_identity(self):
        params = validate_params(2, 0, 2, 1e4)
        r = critical_radius(params)
        cloud = sample_polytope_input(RngStream(2, 0), params)
        poly = convex_hull(cloud)
        from ggp.hull import radial_function
        from ggp.rescale import exp_map
        for v in np.linspace(-1, 1, 7):
            u = exp_map(np.array([v]) / r)
            rho = radial_function(poly, u)
            w = transform(rho * u, params, r)
            assert rescaled_hull_boundary(poly, np.array([v]), params, r) == pytest.approx(
                w.h, abs=1e-9
            )

    def test_far_point_pushes_boundary_down(self):
        params = validate_params(2, 0, 2, 1e4)
        r = critical_radius(params)
        cloud = sample_polytope_input(RngStream(3, 0), params)
        base = convex_hull(cloud)
        h0 = rescaled_hull_boundary(base, np.array([0.0]), params, r)
        spiked = convex_hull(np.vstack([cloud.points, [[0.0, 10.0 * r]]]))
        h1 = rescaled_hull_boundary(spiked, np.array([0.0]), params, r)
        assert h1 < h0 - 5.0


class TestSupDistance:
    def test_identical_functions(self):
        f = lambda g: np.zeros(len(g))
        assert sup_distance(f, f, 1.0, 21, 1) == 0.0

    def test_constant_shift(self):
        f = lambda g: np.sum(g**2, axis=1)
        g = lambda x: np.sum(x**2, axis=1) + 0.75
        assert sup_distance(f, g, 1.0, 21, 2) == pytest.approx(0.75, rel=1e-12)

    def test_grid_refinement_stability(self):
        rng = np.random.default_rng(11)
        pts = np.column_stack([rng.uniform(-4, 4, 30), rng.uniform(-3, 0, 30)])
        f = extreme_points(pts)
        phi = lambda grid: phi_boundary_batch(f, grid)
        psi = lambda grid: np.array([psi_boundary(pts, row) for row in grid])
        coarse = sup_distance(phi, psi, 1.0, 20, 1)
        fine = sup_distance(phi, psi, 1.0, 40, 1)
        assert abs(fine - coarse) <= 0.1 * max(fine, 1e-9)


class TestWindowedFestoon:
    def test_vertex_correspondence_smoke(self):
        params = validate_params(2, 0, 2, 1e4)
        r = critical_radius(params)
        rates = []
        for rep in range(5):
            cloud = sample_polytope_input(RngStream(12, rep), params)
            poly = convex_hull(cloud)
            w = transform_batch(cloud.points, params.beta, r)
            fest, kept, _ = windowed_festoon(w, 1.0)
            vnorm = np.linalg.norm(w[:, :-1], axis=1)
            hull_set = {int(i) for i in poly.vertex_input_indices if vnorm[i] <= 1.0}
            ext_set = {int(i) for i in kept[fest.extreme_indices] if vnorm[i] <= 1.0}
            union = hull_set | ext_set
            if union:
                rates.append(len(hull_set & ext_set) / len(union))
        assert np.mean(rates) > 0.8
