"""Median-plane fitting from symmetric landmark pairs, and mirroring.

The plane is estimated from anatomically symmetric point pairs: its
normal is the sign-aligned mean of the unit left-right difference
vectors and it passes through the centroid of the pair midpoints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Plane, TriMesh, reflection_transform, transform_mesh

_MIN_PAIR_SEPARATION = 1e-6  # same scale as the default weld tolerance


@dataclass(frozen=True)
class LandmarkPair:
    left: np.ndarray
    right: np.ndarray
    label: str = ""

    def __post_init__(self):
        l = np.asarray(self.left, dtype=np.float64)
        r = np.asarray(self.right, dtype=np.float64)
        if l.shape != (3,) or r.shape != (3,):
            raise ValueError("landmarks must be 3-vectors")
        if np.linalg.norm(l - r) <= _MIN_PAIR_SEPARATION:
            raise ValueError(
                f"degenerate landmark pair {self.label!r}: left equals right"
            )
        object.__setattr__(self, "left", l)
        object.__setattr__(self, "right", r)


@dataclass(frozen=True)
class MedianPlaneFit:
    plane: Plane
    residual_rms: float
    pair_count: int
    warning: str | None = None


def fit_median_plane(pairs: list[LandmarkPair]) -> MedianPlaneFit:
    """Least-squares median plane from symmetric landmark pairs.

    Accepts a single pair (plane fully determined by one mirror pair)
    but flags fits from fewer than 3 pairs with a quality warning.
    """
    if len(pairs) < 1:
        raise ValueError("at least one landmark pair is required")

    lefts = np.array([p.left for p in pairs])
    rights = np.array([p.right for p in pairs])
    diffs = lefts - rights
    lens = np.linalg.norm(diffs, axis=1)
    if np.all(lens <= _MIN_PAIR_SEPARATION):
        raise ValueError("all landmark pairs are degenerate")
    units = diffs / lens[:, None]

    # Sign-align to the first pair, then require consensus.
    ref = units[0]
    signs = np.where(units @ ref >= 0, 1.0, -1.0)
    aligned = units * signs[:, None]
    mean = aligned.mean(axis=0)
    norm = np.linalg.norm(mean)
    if norm < 1e-6:
        raise ValueError("landmark difference vectors cancel; no consistent normal")
    normal = mean / norm
    if np.any(aligned @ normal <= 0):
        raise ValueError(
            "landmark difference vectors are mutually opposed; no consistent sign"
        )

    # Convention: normal points from the right side to the left. Flip if
    # the majority of raw differences disagree (e.g. labels swapped).
    if np.sum(np.sign(units @ normal)) < 0:
        normal = -normal

    mids = 0.5 * (lefts + rights)
    origin = mids.mean(axis=0)
    plane = Plane(origin, normal)
    residuals = plane.signed_distance(mids)
    rms = float(np.sqrt(np.mean(residuals**2)))

    warning = None
    if len(pairs) < 3:
        warning = (
            f"median plane fit uses only {len(pairs)} pair(s); "
            "3 or more are recommended"
        )
    return MedianPlaneFit(plane, rms, len(pairs), warning)


def mirror_model(mesh: TriMesh, fit: MedianPlaneFit) -> TriMesh:
    """Reflect the model across the fitted median plane."""
    return transform_mesh(mesh, reflection_transform(fit.plane))
