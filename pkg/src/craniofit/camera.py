"""View cameras: world-to-display projection for screen-space fitting.

Display coordinates are pixels with x to the right and y up; a world
point maps to the pixel containing floor(px), floor(py). Depth grows
away from the eye along the viewing direction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import unit


@dataclass(frozen=True)
class ViewCamera:
    eye: np.ndarray
    look_at: np.ndarray
    up: np.ndarray
    viewport: tuple[int, int] = (512, 512)
    projection: str = "parallel"
    scale: float = 1.0  # parallel: world units per pixel
    fov_deg: float = 40.0  # perspective: vertical field of view

    def __post_init__(self):
        eye = np.asarray(self.eye, dtype=np.float64)
        look = np.asarray(self.look_at, dtype=np.float64)
        up = np.asarray(self.up, dtype=np.float64)
        if np.linalg.norm(look - eye) < 1e-12:
            raise ValueError("eye and look_at coincide")
        fwd = unit(look - eye)
        if np.linalg.norm(np.cross(fwd, up)) < 1e-9:
            raise ValueError("up vector is parallel to the view direction")
        w, h = int(self.viewport[0]), int(self.viewport[1])
        if w < 1 or h < 1:
            raise ValueError("viewport dims must be >= 1")
        if self.projection not in ("parallel", "perspective"):
            raise ValueError("projection must be parallel or perspective")
        if self.projection == "parallel" and self.scale <= 0:
            raise ValueError("parallel scale must be positive")
        object.__setattr__(self, "eye", eye)
        object.__setattr__(self, "look_at", look)
        object.__setattr__(self, "up", unit(up))
        object.__setattr__(self, "viewport", (w, h))

    def basis(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(right, up_cam, forward); (right, up_cam) is the image frame."""
        forward = unit(self.look_at - self.eye)
        right = unit(np.cross(forward, self.up))
        up_cam = np.cross(right, forward)
        return right, up_cam, forward

    def view_side(self) -> np.ndarray:
        """Unit vector from the scene toward the camera."""
        return unit(self.eye - self.look_at)

    def world_to_display(self, pts) -> tuple[np.ndarray, np.ndarray]:
        """Continuous display coords (N,2) and depths (N,)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        right, up_cam, forward = self.basis()
        rel = pts - self.eye
        u = rel @ right
        v = rel @ up_cam
        depth = rel @ forward
        w, h = self.viewport
        if self.projection == "parallel":
            px = u / self.scale + w / 2.0
            py = v / self.scale + h / 2.0
        else:
            if np.any(depth <= 0):
                raise ValueError("point behind a perspective camera")
            focal = (h / 2.0) / np.tan(np.radians(self.fov_deg) / 2.0)
            px = u / depth * focal + w / 2.0
            py = v / depth * focal + h / 2.0
        return np.stack([px, py], axis=1), depth

    def to_dict(self) -> dict:
        return {
            "eye": [float(x) for x in self.eye],
            "look_at": [float(x) for x in self.look_at],
            "up": [float(x) for x in self.up],
            "viewport": list(self.viewport),
            "projection": self.projection,
            "scale": float(self.scale),
            "fov_deg": float(self.fov_deg),
        }

    @staticmethod
    def from_dict(d: dict) -> "ViewCamera":
        return ViewCamera(
            eye=d["eye"],
            look_at=d["look_at"],
            up=d["up"],
            viewport=tuple(d.get("viewport", (512, 512))),
            projection=d.get("projection", "parallel"),
            scale=float(d.get("scale", 1.0)),
            fov_deg=float(d.get("fov_deg", 40.0)),
        )


def default_contour_camera(contour, viewport: int = 512) -> ViewCamera:
    """Head-on parallel view of a contour for headless runs.

    Looks along the contour's sweep direction at its centroid, framed to
    the projected bounding box plus a 5% margin.
    """
    from .contour import build_implicit

    region = build_implicit(contour)
    direction = region.direction
    centroid = contour.points.mean(axis=0)
    diag = max(contour.bbox_diagonal(), 1e-6)
    eye = centroid + direction * (2.0 * diag)

    axis = int(np.argmin(np.abs(direction)))
    e = np.zeros(3)
    e[axis] = 1.0
    up = unit(e - (e @ direction) * direction)

    cam = ViewCamera(eye, centroid, up, (viewport, viewport), "parallel", 1.0)
    right, up_cam, _ = cam.basis()
    rel = contour.points - centroid
    span_u = float(np.ptp(rel @ right))
    span_v = float(np.ptp(rel @ up_cam))
    span = max(span_u, span_v, 1e-6) * 1.05
    return ViewCamera(eye, centroid, up, (viewport, viewport), "parallel", span / viewport)
