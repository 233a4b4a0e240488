"""Volume container, segmentation ops, and file IO."""

import numpy as np
import pytest

from craniofit.synthetic import sphere_field
from craniofit.volume import (
    ScalarVolume,
    VoxelMask,
    auto_seed,
    read_volume,
    region_grow,
    threshold_segment,
    write_volume,
)


def brute_force_flood(mask: np.ndarray, seed, connectivity: int) -> np.ndarray:
    """Oracle: queue flood fill with explicit neighbor offsets."""
    if connectivity == 6:
        offs = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
    else:
        offs = [
            (dx, dy, dz)
            for dx in (-1, 0, 1)
            for dy in (-1, 0, 1)
            for dz in (-1, 0, 1)
            if (dx, dy, dz) != (0, 0, 0)
        ]
    out = np.zeros_like(mask)
    stack = [tuple(seed)]
    out[tuple(seed)] = True
    while stack:
        x, y, z = stack.pop()
        for dx, dy, dz in offs:
            p = (x + dx, y + dy, z + dz)
            if all(0 <= p[i] < mask.shape[i] for i in range(3)):
                if mask[p] and not out[p]:
                    out[p] = True
                    stack.append(p)
    return out


class TestScalarVolume:
    def test_rejects_nonfinite(self):
        d = np.zeros((2, 2, 2))
        d[0, 0, 0] = np.inf
        with pytest.raises(ValueError):
            ScalarVolume(d, (1, 1, 1), (0, 0, 0))

    def test_rejects_bad_spacing(self):
        with pytest.raises(ValueError):
            ScalarVolume(np.zeros((2, 2, 2)), (1, 0, 1), (0, 0, 0))

    def test_grid_points_positions(self):
        v = ScalarVolume(np.zeros((2, 3, 2)), (2, 1, 3), (10, 20, 30))
        pts = v.grid_points()
        assert pts.shape == (2, 3, 2, 3)
        assert np.allclose(pts[0, 0, 0], (10, 20, 30))
        assert np.allclose(pts[1, 2, 1], (12, 22, 33))


class TestThreshold:
    def test_full_and_empty(self):
        v = ScalarVolume(np.full((3, 3, 3), 5.0), (1, 1, 1), (0, 0, 0))
        assert threshold_segment(v, 0, 10).count() == 27
        assert threshold_segment(v, 6, 10).count() == 0

    def test_inclusive_bounds(self):
        v = ScalarVolume(np.full((2, 2, 2), 5.0), (1, 1, 1), (0, 0, 0))
        assert threshold_segment(v, 5, 5).count() == 8

    def test_lo_above_hi_rejected(self):
        v = ScalarVolume(np.zeros((2, 2, 2)), (1, 1, 1), (0, 0, 0))
        with pytest.raises(ValueError):
            threshold_segment(v, 1, 0)

    def test_sphere_voxel_count(self):
        r = 20.0
        vol = sphere_field(dims=(64, 64, 64), radius=r)
        mask = threshold_segment(vol, 0.0, np.inf)
        expected = 4 / 3 * np.pi * r**3
        assert mask.count() == pytest.approx(expected, rel=0.03)


class TestRegionGrow:
    def test_single_component_identity(self):
        m = np.zeros((4, 4, 4), dtype=bool)
        m[1:3, 1:3, 1:3] = True
        out = region_grow(VoxelMask(m), (1, 1, 1), 6)
        assert np.array_equal(out.data, m)

    def test_two_blobs_selects_seeded(self):
        m = np.zeros((6, 4, 4), dtype=bool)
        m[0:2, :2, :2] = True
        m[4:6, :2, :2] = True
        out = region_grow(VoxelMask(m), (0, 0, 0), 6)
        assert out.data[:2].any() and not out.data[4:].any()

    def test_diagonal_touch_connectivity(self):
        m = np.zeros((5, 5, 5), dtype=bool)
        m[1, 1, 1] = True
        m[2, 2, 2] = True
        six = region_grow(VoxelMask(m), (1, 1, 1), 6)
        assert six.count() == 1
        tw6 = region_grow(VoxelMask(m), (1, 1, 1), 26)
        assert tw6.count() == 2

    def test_matches_flood_oracle(self):
        rng = np.random.default_rng(5)
        m = rng.random((7, 7, 7)) < 0.4
        m[3, 3, 3] = True
        for conn in (6, 26):
            got = region_grow(VoxelMask(m), (3, 3, 3), conn)
            want = brute_force_flood(m, (3, 3, 3), conn)
            assert np.array_equal(got.data, want)

    def test_output_subset_and_idempotent(self):
        rng = np.random.default_rng(9)
        m = rng.random((6, 6, 6)) < 0.5
        m[0, 0, 0] = True
        out = region_grow(VoxelMask(m), (0, 0, 0), 6)
        assert not (out.data & ~m).any()
        again = region_grow(out, (0, 0, 0), 6)
        assert np.array_equal(out.data, again.data)

    def test_bad_seed(self):
        m = np.zeros((3, 3, 3), dtype=bool)
        m[0, 0, 0] = True
        with pytest.raises(ValueError):
            region_grow(VoxelMask(m), (1, 1, 1), 6)
        with pytest.raises(IndexError):
            region_grow(VoxelMask(m), (5, 0, 0), 6)

    def test_auto_seed_picks_max(self):
        vol = ScalarVolume(np.arange(8.0).reshape(2, 2, 2), (1, 1, 1), (0, 0, 0))
        mask = VoxelMask(np.ones((2, 2, 2), dtype=bool))
        assert auto_seed(mask, vol) == (1, 1, 1)
        # Restrict the mask: best masked value wins.
        m2 = np.ones((2, 2, 2), dtype=bool)
        m2[1, 1, 1] = False
        assert auto_seed(VoxelMask(m2), vol) == (1, 1, 0)


class TestVolumeIO:
    def test_roundtrip(self, tmp_path):
        vol = sphere_field(dims=(16, 12, 10), spacing=(1, 2, 0.5), origin=(-3, 0, 7))
        write_volume(vol, tmp_path / "vol.json")
        back = read_volume(tmp_path / "vol.json")
        assert back.dims == vol.dims
        assert np.allclose(back.spacing, vol.spacing)
        assert np.allclose(back.origin, vol.origin)
        assert np.allclose(back.data, vol.data)

    def test_blob_is_x_fastest(self, tmp_path):
        data = np.arange(24.0).reshape(2, 3, 4)  # [x,y,z]
        vol = ScalarVolume(data, (1, 1, 1), (0, 0, 0))
        write_volume(vol, tmp_path / "v.json")
        raw = np.frombuffer((tmp_path / "v.raw").read_bytes(), dtype="<f8")
        # First two samples step in x, next steps in y.
        assert raw[0] == data[0, 0, 0]
        assert raw[1] == data[1, 0, 0]
        assert raw[2] == data[0, 1, 0]

    def test_header_keys(self, tmp_path):
        import json

        vol = sphere_field(dims=(4, 4, 4))
        write_volume(vol, tmp_path / "h.json")
        hdr = json.loads((tmp_path / "h.json").read_text())
        assert set(hdr) == {"dims", "spacing", "origin", "dtype", "byte_order", "data_file"}
        assert hdr["byte_order"] == "little"

    def test_size_mismatch_rejected(self, tmp_path):
        vol = sphere_field(dims=(4, 4, 4))
        write_volume(vol, tmp_path / "h.json")
        blob = (tmp_path / "h.raw").read_bytes()
        (tmp_path / "h.raw").write_bytes(blob[:-8])
        with pytest.raises(ValueError):
            read_volume(tmp_path / "h.json")

    def test_float32_dtype_roundtrip(self, tmp_path):
        data = np.random.default_rng(1).random((3, 3, 3)).astype(np.float32)
        vol = ScalarVolume(data, (1, 1, 1), (0, 0, 0))
        write_volume(vol, tmp_path / "f.json")
        back = read_volume(tmp_path / "f.json")
        assert np.allclose(back.data, data.astype(np.float64))
