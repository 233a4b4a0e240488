"""Median-plane fitting and model mirroring."""

import numpy as np
import pytest

from craniofit.core import Plane, mesh_stats, reflect_point, unit
from craniofit.mirrorfit import LandmarkPair, MedianPlaneFit, fit_median_plane, mirror_model
from craniofit.synthetic import icosphere


def make_symmetric_pairs(plane, rng, count, noise=0.0):
    """Oracle construction: place left points 15-60 mm off a known plane
    (anatomical landmark scale), reflect for the right points, then add
    optional Gaussian noise."""
    n = plane.normal
    a = unit(np.cross(n, (1, 0, 0) if abs(n[0]) < 0.9 else (0, 1, 0)))
    b = np.cross(n, a)
    pairs = []
    for _ in range(count):
        p = (
            plane.origin
            + rng.uniform(-60, 60) * a
            + rng.uniform(-60, 60) * b
            + rng.uniform(15, 60) * n
        )
        q = reflect_point(p, plane)
        if noise > 0:
            p = p + rng.normal(0, noise, 3)
            q = q + rng.normal(0, noise, 3)
        pairs.append(LandmarkPair(p, q))
    return pairs


def angle_between(a, b):
    # asin of the cross norm stays accurate for tiny angles, unlike
    # arccos of the dot.
    a, b = unit(a), unit(b)
    if a @ b < 0:
        b = -b
    return np.degrees(np.arcsin(min(float(np.linalg.norm(np.cross(a, b))), 1.0)))


class TestFitMedianPlane:
    def test_exact_axis_aligned(self):
        pairs = [
            LandmarkPair((1, 0, 0), (-1, 0, 0)),
            LandmarkPair((1, 1, 0), (-1, 1, 0)),
            LandmarkPair((1, 0, 1), (-1, 0, 1)),
        ]
        fit = fit_median_plane(pairs)
        assert np.allclose(np.abs(fit.plane.normal), (1, 0, 0), atol=1e-12)
        assert abs(fit.plane.origin @ fit.plane.normal) < 1e-12
        assert fit.residual_rms == pytest.approx(0.0, abs=1e-12)
        assert fit.pair_count == 3
        assert fit.warning is None

    def test_recovers_oblique_plane_two_pairs(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            plane = Plane(rng.uniform(-10, 10, 3), unit(rng.normal(size=3)))
            pairs = make_symmetric_pairs(plane, rng, 2)
            fit = fit_median_plane(pairs)
            assert angle_between(fit.plane.normal, plane.normal) < 1e-7
            assert abs(plane.signed_distance(fit.plane.origin)) < 1e-9
            assert fit.residual_rms < 1e-9
            assert fit.warning is not None  # fewer than 3 pairs

    def test_noise_monte_carlo(self):
        rng = np.random.default_rng(42)
        ok = 0
        for _ in range(100):
            plane = Plane(rng.uniform(-20, 20, 3), unit(rng.normal(size=3)))
            pairs = make_symmetric_pairs(plane, rng, 6, noise=0.5)
            fit = fit_median_plane(pairs)
            if angle_between(fit.plane.normal, plane.normal) < 2.0:
                ok += 1
        assert ok >= 95

    def test_single_pair_accepted_with_warning(self):
        fit = fit_median_plane([LandmarkPair((2, 1, 1), (-2, 1, 1))])
        assert fit.pair_count == 1
        assert fit.warning is not None
        assert np.allclose(np.abs(fit.plane.normal), (1, 0, 0), atol=1e-12)
        assert np.allclose(fit.plane.origin, (0, 1, 1))

    def test_no_pairs_rejected(self):
        with pytest.raises(ValueError):
            fit_median_plane([])

    def test_degenerate_pair_rejected(self):
        with pytest.raises(ValueError):
            LandmarkPair((1, 1, 1), (1, 1, 1))

    def test_opposed_differences_rejected(self):
        # After sign-aligning to the first difference, the lone upward
        # pair still opposes the mean of the two downward ones: no
        # single normal is consistent with every pair.
        pairs = [
            LandmarkPair((1, 0, 0), (-1, 0, 0)),
            LandmarkPair((0.01, 1, 0), (-0.01, -1, 0)),
            LandmarkPair((0.01, -1, 0), (-0.01, 1, 0)),
            LandmarkPair((0.01, -1, 0.1), (-0.01, 1, 0.1)),
        ]
        with pytest.raises(ValueError):
            fit_median_plane(pairs)

    def test_swap_invariance(self):
        rng = np.random.default_rng(5)
        plane = Plane((1, 2, 3), unit((1, -2, 0.5)))
        pairs = make_symmetric_pairs(plane, rng, 5, noise=0.1)
        fit_a = fit_median_plane(pairs)
        swapped = [LandmarkPair(p.right, p.left, p.label) for p in pairs]
        fit_b = fit_median_plane(swapped)
        same = np.allclose(fit_a.plane.normal, fit_b.plane.normal, atol=1e-9)
        flipped = np.allclose(fit_a.plane.normal, -fit_b.plane.normal, atol=1e-9)
        assert same or flipped
        assert np.allclose(fit_a.plane.origin, fit_b.plane.origin, atol=1e-9)
        assert fit_a.residual_rms == pytest.approx(fit_b.residual_rms, abs=1e-12)

    def test_scaling_property(self):
        rng = np.random.default_rng(6)
        plane = Plane((0.5, -1, 2), unit((2, 1, -1)))
        pairs = make_symmetric_pairs(plane, rng, 4, noise=0.3)
        fit1 = fit_median_plane(pairs)
        s = 2.5
        scaled = [LandmarkPair(p.left * s, p.right * s, p.label) for p in pairs]
        fit2 = fit_median_plane(scaled)
        assert np.allclose(fit2.plane.normal, fit1.plane.normal, atol=1e-9)
        assert np.allclose(fit2.plane.origin, fit1.plane.origin * s, atol=1e-9)
        assert fit2.residual_rms == pytest.approx(fit1.residual_rms * s, rel=1e-9)

    def test_normal_points_right_to_left(self):
        fit = fit_median_plane(
            [
                LandmarkPair((3, 0, 0), (-3, 0, 0)),
                LandmarkPair((2.5, 1, 0), (-2.5, 1, 0)),
                LandmarkPair((2.5, 0, 1), (-2.5, 0, 1)),
            ]
        )
        # left - right points along +x.
        assert fit.plane.normal[0] > 0


class TestMirrorModel:
    def _fit(self):
        return fit_median_plane(
            [
                LandmarkPair((1, 0, 0), (-1, 0, 0)),
                LandmarkPair((1, 1, 0), (-1, 1, 0)),
                LandmarkPair((1, 0, 1), (-1, 0, 1)),
            ]
        )

    def test_symmetric_mesh_fixed_point_set(self):
        mesh = icosphere(center=(0, 2, 3), radius=1.5, subdivisions=2)
        mirrored = mirror_model(mesh, self._fit())
        a = np.array(sorted(map(tuple, np.round(mesh.vertices, 9))))
        b = np.array(sorted(map(tuple, np.round(mirrored.vertices, 9))))
        assert np.allclose(a, b, atol=1e-9)

    def test_mirror_twice_restores(self):
        mesh = icosphere(center=(4, -1, 2), radius=2.0, subdivisions=2)
        fit = self._fit()
        back = mirror_model(mirror_model(mesh, fit), fit)
        assert np.allclose(back.vertices, mesh.vertices, atol=1e-9)
        assert np.array_equal(back.faces, mesh.faces)

    def test_centroid_negated(self):
        mesh = icosphere(center=(-5, 1, 1), radius=1.0, subdivisions=2)
        mirrored = mirror_model(mesh, self._fit())
        c0 = mesh.vertices.mean(axis=0)
        c1 = mirrored.vertices.mean(axis=0)
        assert c1[0] == pytest.approx(-c0[0], abs=1e-9)
        assert np.allclose(c1[1:], c0[1:], atol=1e-9)

    def test_preserves_counts_area_volume(self):
        mesh = icosphere(center=(2, 2, 2), radius=1.2, subdivisions=3)
        fit = fit_median_plane(
            [
                LandmarkPair((5, 1, 0), (1, -3, 0)),
                LandmarkPair((6, 2, 1), (2, -2, 1)),
                LandmarkPair((5, 1, 4), (1, -3, 4)),
            ]
        )
        mirrored = mirror_model(mesh, fit)
        s0, s1 = mesh_stats(mesh), mesh_stats(mirrored)
        assert s1.n_faces == s0.n_faces
        assert s1.area == pytest.approx(s0.area, rel=1e-9)
        assert abs(s1.signed_volume) == pytest.approx(abs(s0.signed_volume), rel=1e-9)
        assert s1.signed_volume == pytest.approx(s0.signed_volume, rel=1e-6)
