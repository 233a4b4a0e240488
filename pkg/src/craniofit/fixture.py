"""Deterministic demo case: a spherical-shell skull stand-in with an
elliptical defect, plus the drawn inputs a user would supply by hand.

Everything derives from closed-form geometry, so the case regenerates
bit-for-bit anywhere. The repository commits only the project file;
the volume is rebuilt on demand (a test pins committed == regenerated).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .camera import ViewCamera, default_contour_camera
from .contour import SurfaceContour
from .core import unit
from .mirrorfit import LandmarkPair
from .project import Project, save_project
from .synthetic import direction_frame, shell_defect_field
from .volume import write_volume

OUTER_RADIUS = 80.0
SHELL_THICKNESS = 6.0
HOLE_DIRECTION = (1.2, 0.4, 1.0)
HOLE_RADII_DEG = (14.0, 11.0)

# Right-side landmark directions; each left partner mirrors across
# x = 0, so the median plane is known exactly: normal (-1, 0, 0)
# through the origin, residual 0.
_LANDMARK_DIRS = (
    (0.35, 0.82, 0.45),
    (0.55, -0.2, 0.81),
    (0.28, 0.95, -0.12),
    (0.6, 0.1, -0.79),
)


def _ellipse_ring(radius: float, a_deg: float, b_deg: float, n: int = 64):
    """Closed ring around the hole axis: an angular ellipse with the
    given semi-axes, lifted onto the sphere of the given radius.
    Normals are radial, exact for a sphere."""
    w, e1, e2 = direction_frame(HOLE_DIRECTION)
    t = 2.0 * np.pi * np.arange(n) / n
    u = np.sin(np.radians(a_deg)) * np.cos(t)
    v = np.sin(np.radians(b_deg)) * np.sin(t)
    d = (
        np.sqrt(1.0 - u**2 - v**2)[:, None] * w
        + u[:, None] * e1
        + v[:, None] * e2
    )
    return SurfaceContour(points=radius * d, normals=d)


def shell_landmarks() -> list[LandmarkPair]:
    pairs = []
    for i, d in enumerate(_LANDMARK_DIRS):
        right = OUTER_RADIUS * unit(np.asarray(d, dtype=np.float64))
        left = right * np.array([-1.0, 1.0, 1.0])
        pairs.append(LandmarkPair(left=left, right=right, label=f"pair{i}"))
    return pairs


def defect_contour() -> SurfaceContour:
    """Drawn around the defect margin, on intact bone (3 degrees outside
    the carved opening), at the outer table radius."""
    return _ellipse_ring(OUTER_RADIUS, HOLE_RADII_DEG[0] + 3.0, HOLE_RADII_DEG[1] + 3.0)


def inner_edge_contour() -> SurfaceContour:
    """Drawn along the defect's inner-table edge: the carve cone itself,
    at the inner shell radius."""
    return _ellipse_ring(OUTER_RADIUS - SHELL_THICKNESS, *HOLE_RADII_DEG)


def shell_camera() -> ViewCamera:
    return default_contour_camera(defect_contour())


def make_shell_case(dest: str | Path) -> Path:
    """Write volume files and project.json into dest.

    Returns the project path. The project is ready for run_all: volume
    input, four landmark pairs, both contours, a head-on camera and a
    6 mm implant thickness matching the shell.
    """
    root = Path(dest)
    root.mkdir(parents=True, exist_ok=True)
    write_volume(shell_defect_field(), root / "volume.json")
    project = Project(
        id="shell-case",
        root=root,
        inputs={"volume": "volume.json"},
        landmarks=shell_landmarks(),
        contour_defect=defect_contour(),
        contour_inner_edge=inner_edge_contour(),
        camera=shell_camera(),
    )
    project.params["thickness"] = SHELL_THICKNESS
    return save_project(project)
