"""STL reader/writer round trips and error handling."""

import numpy as np
import pytest

from craniofit.core import mesh_stats
from craniofit.stl import StlError, read_stl, write_stl, write_stl_ascii
from craniofit.synthetic import box_mesh, icosphere


def test_binary_length_formula():
    data = write_stl(box_mesh())
    assert len(data) == 84 + 50 * 12


def test_cube_roundtrip_watertight():
    m = read_stl(write_stl(box_mesh()))
    s = mesh_stats(m)
    assert s.n_faces == 12
    assert s.n_vertices == 8
    assert s.is_watertight
    assert s.signed_volume == pytest.approx(1.0, abs=1e-6)


def test_sphere_roundtrip_displacement():
    mesh = icosphere(center=(5, -3, 2), radius=40.0, subdivisions=4)
    assert mesh.n_faces > 5000
    back = read_stl(write_stl(mesh))
    # Face order and corner order survive the roundtrip, so compare the
    # triangle soups directly.
    assert back.n_vertices == mesh.n_vertices
    disp = np.linalg.norm(mesh.corners() - back.corners(), axis=2)
    assert np.max(disp) < 1e-5


def test_write_is_byte_stable():
    first = write_stl(icosphere(subdivisions=2))
    again = write_stl(read_stl(first))
    assert first == again


def test_ascii_roundtrip():
    m = box_mesh(hi=(2.0, 1.0, 1.0))
    back = read_stl(write_stl_ascii(m))
    s = mesh_stats(back)
    assert s.n_faces == 12
    assert s.signed_volume == pytest.approx(2.0, abs=1e-5)
    assert s.is_watertight


def test_truncated_binary_rejected():
    data = write_stl(box_mesh())
    with pytest.raises(StlError):
        read_stl(data[:100])


def test_count_mismatch_rejected():
    data = bytearray(write_stl(box_mesh()))
    data[80:84] = np.uint32(99).tobytes()
    with pytest.raises(StlError):
        read_stl(bytes(data))


def test_nonfinite_rejected():
    data = bytearray(write_stl(box_mesh()))
    # Overwrite the first vertex x with NaN.
    data[84 + 12 : 84 + 16] = np.float32(np.nan).tobytes()
    with pytest.raises(StlError):
        read_stl(bytes(data))


def test_empty_mesh_writes_and_reads():
    from craniofit.core import TriMesh

    empty = TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    back = read_stl(write_stl(empty))
    assert back.n_faces == 0


def test_header_not_solid_prefixed():
    assert not write_stl(box_mesh())[:5].startswith(b"solid")
