"""Cranial implant design pipeline.

From a CT-like scalar volume to a printable implant: segmentation,
isosurface extraction, median-plane mirroring, defect-margin contour
clipping, view-dependent surface fitting, and offset-solid implant
construction, with metrics and a small HTTP service on top.
"""

__version__ = "0.1.0"

from .core import (  # noqa: F401
    Plane,
    Transform4,
    TriMesh,
    mesh_stats,
    reflect_point,
    reflection_transform,
    transform_mesh,
    weld_vertices,
)
from .stl import read_stl, write_stl  # noqa: F401
from .volume import (  # noqa: F401
    ScalarVolume,
    VoxelMask,
    read_volume,
    region_grow,
    threshold_segment,
    write_volume,
)
from .project import (  # noqa: F401
    SCHEMA_VERSION,
    STAGES,
    Project,
    ProjectError,
    evaluate_against_ct,
    load_project,
    run_all,
    run_stage,
    save_project,
    stage_states,
)
from .fixture import make_shell_case  # noqa: F401
