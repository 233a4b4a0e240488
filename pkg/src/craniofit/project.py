"""Project persistence and the staged pipeline runner.

A project lives in its own directory: one project.json plus the stage
artifacts it references by relative path. Stages form a small DAG
(segment -> mirror -> clip -> fit -> initial -> final, with evaluate
reading segment, mirror and final) and every stage records a content
signature over everything that can change its output. Reruns are no-ops
until an input actually changes, and editing an input invalidates
exactly the stages downstream of it.

Meshes cross stage boundaries through their STL bytes: a stage writes
its artifact, and downstream consumers see the mesh re-read from those
bytes, the same view a fresh process gets. That keeps full pipeline
runs byte-identical across processes.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .camera import ViewCamera
from .contour import SurfaceContour, build_implicit, clip_mesh_by_implicit
from .core import TriMesh, mesh_stats, split_components, weld_vertices
from .fitting import FittedPatch, fit_patch
from .implant import build_final_implant, build_initial_implant
from .isosurface import extract_isosurface
from .metrics import implant_fit_report
from .mirrorfit import LandmarkPair, fit_median_plane, mirror_model
from .stl import read_stl, write_stl
from .volume import auto_seed, read_volume, region_grow, threshold_segment

SCHEMA_VERSION = 1
STAGES = ("segment", "mirror", "clip", "fit", "initial", "final", "evaluate")

_DEPS = {
    "segment": (),
    "mirror": ("segment",),
    "clip": ("mirror",),
    "fit": ("clip",),
    "initial": ("fit",),
    "final": ("segment", "initial"),
    "evaluate": ("segment", "mirror", "final"),
}


class ProjectError(RuntimeError):
    """Precondition, schema or artifact-reference problem."""


def default_params() -> dict:
    return {
        "thresholds": {"lo": 0.0, "hi": None},
        "thickness": 4.0,
        "weld_tolerance": 1e-6,
        "voxel_size": None,
        "smoothing": {"k": 10, "lambda": 0.5},
    }


@dataclass
class Project:
    """One design case: inputs, drawn geometry, parameters, stage cache.

    `inputs` holds a relative "volume" (JSON header) or "mesh" (STL)
    path. `stage_outputs` maps stage name to its recorded signature,
    artifact paths and summary info. `_mem` is a per-process object
    cache keyed by (stage, key) and guarded by the stage signature, so
    a stale entry can never be served.
    """

    id: str
    root: Path
    inputs: dict = field(default_factory=dict)
    landmarks: list[LandmarkPair] = field(default_factory=list)
    contour_defect: SurfaceContour | None = None
    contour_inner_edge: SurfaceContour | None = None
    camera: ViewCamera | None = None
    params: dict = field(default_factory=default_params)
    stage_outputs: dict = field(default_factory=dict)
    _mem: dict = field(default_factory=dict, repr=False, compare=False)


def landmark_to_dict(pair: LandmarkPair) -> dict:
    return {
        "left": [float(x) for x in pair.left],
        "right": [float(x) for x in pair.right],
        "label": pair.label,
    }


def landmark_from_dict(d: dict) -> LandmarkPair:
    return LandmarkPair(
        np.asarray(d["left"], dtype=np.float64),
        np.asarray(d["right"], dtype=np.float64),
        str(d.get("label", "")),
    )


def contour_to_dict(c: SurfaceContour) -> dict:
    out = {
        "points": [[float(x) for x in row] for row in c.points],
        "normals": [[float(x) for x in row] for row in c.normals],
    }
    if c.host is not None:
        out["host"] = c.host
    return out


def contour_from_dict(d: dict) -> SurfaceContour:
    return SurfaceContour(
        np.asarray(d["points"], dtype=np.float64),
        np.asarray(d["normals"], dtype=np.float64),
        host=d.get("host"),
    )


def project_to_dict(project: Project) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "id": project.id,
        "inputs": dict(project.inputs),
        "landmarks": [landmark_to_dict(p) for p in project.landmarks],
        "contour_defect": (
            contour_to_dict(project.contour_defect)
            if project.contour_defect is not None
            else None
        ),
        "contour_inner_edge": (
            contour_to_dict(project.contour_inner_edge)
            if project.contour_inner_edge is not None
            else None
        ),
        "camera": project.camera.to_dict() if project.camera is not None else None,
        "params": project.params,
        "stage_outputs": project.stage_outputs,
    }


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def save_project(project: Project, path: str | Path | None = None) -> Path:
    """Write project.json (atomically; readers never see a torn file)."""
    path = Path(path) if path is not None else project.root / "project.json"
    text = json.dumps(project_to_dict(project), indent=2, sort_keys=True) + "\n"
    _atomic_write(path, text.encode())
    return path


def load_project(path: str | Path) -> Project:
    path = Path(path)
    data = json.loads(path.read_text())
    ver = data.get("schema_version")
    if ver != SCHEMA_VERSION:
        raise ProjectError(
            f"unsupported schema version {ver!r}, this build reads {SCHEMA_VERSION}"
        )
    params = default_params()
    for k, v in (data.get("params") or {}).items():
        if isinstance(v, dict) and isinstance(params.get(k), dict):
            params[k].update(v)
        else:
            params[k] = v
    project = Project(
        id=str(data["id"]),
        root=path.parent,
        inputs=dict(data.get("inputs") or {}),
        landmarks=[landmark_from_dict(d) for d in data.get("landmarks") or []],
        contour_defect=(
            contour_from_dict(data["contour_defect"])
            if data.get("contour_defect")
            else None
        ),
        contour_inner_edge=(
            contour_from_dict(data["contour_inner_edge"])
            if data.get("contour_inner_edge")
            else None
        ),
        camera=ViewCamera.from_dict(data["camera"]) if data.get("camera") else None,
        params=params,
        stage_outputs=dict(data.get("stage_outputs") or {}),
    )
    for stage, entry in project.stage_outputs.items():
        for rel in entry.get("artifacts", {}).values():
            if not (project.root / rel).exists():
                raise ProjectError(
                    f"stage '{stage}' references a missing artifact: {rel}"
                )
    return project


def create_project(root: str | Path, project_id: str) -> Project:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    project = Project(id=str(project_id), root=root)
    save_project(project)
    return project


def _digest(obj) -> str:
    return hashlib.sha256(
        json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()


def _volume_digest(project: Project, rel: str) -> str:
    header_path = project.root / rel
    if not header_path.exists():
        raise ProjectError(f"volume file missing: {rel}")
    h = hashlib.sha256()
    raw = header_path.read_bytes()
    h.update(raw)
    blob = json.loads(raw).get("data_file")
    if blob:
        blob_path = header_path.parent / blob
        if not blob_path.exists():
            raise ProjectError(f"volume file missing: {blob}")
        h.update(blob_path.read_bytes())
    return h.hexdigest()


def _segment_inputs(project: Project) -> dict:
    sig = {
        "thresholds": project.params["thresholds"],
        "weld_tolerance": project.params["weld_tolerance"],
    }
    if project.inputs.get("volume"):
        sig["volume"] = _volume_digest(project, project.inputs["volume"])
    elif project.inputs.get("mesh"):
        rel = project.inputs["mesh"]
        mesh_path = project.root / rel
        if not mesh_path.exists():
            raise ProjectError(f"mesh file missing: {rel}")
        sig["mesh"] = hashlib.sha256(mesh_path.read_bytes()).hexdigest()
    else:
        raise ProjectError("volume or mesh input absent")
    return sig


def _mirror_inputs(project: Project) -> dict:
    if not project.landmarks:
        raise ProjectError("landmarks absent")
    return {"landmarks": [landmark_to_dict(p) for p in project.landmarks]}


def _clip_inputs(project: Project) -> dict:
    if project.contour_defect is None:
        raise ProjectError("contour_defect absent")
    if project.camera is None:
        raise ProjectError("camera absent")
    return {
        "contour_defect": contour_to_dict(project.contour_defect),
        "camera": project.camera.to_dict(),
    }


def _fit_inputs(project: Project) -> dict:
    # Presence is this stage's own precondition; the values already feed
    # the clip signature it depends on, so they are not re-digested.
    if project.contour_defect is None:
        raise ProjectError("contour_defect absent")
    if project.camera is None:
        raise ProjectError("camera absent")
    return {}


def _initial_inputs(project: Project) -> dict:
    return {
        "thickness": project.params["thickness"],
        "smoothing": project.params["smoothing"],
    }


def _final_inputs(project: Project) -> dict:
    if project.contour_inner_edge is None:
        raise ProjectError("contour_inner_edge absent")
    return {"contour_inner_edge": contour_to_dict(project.contour_inner_edge)}


def _evaluate_inputs(project: Project) -> dict:
    return {"voxel_size": project.params["voxel_size"]}


_INPUTS = {
    "segment": _segment_inputs,
    "mirror": _mirror_inputs,
    "clip": _clip_inputs,
    "fit": _fit_inputs,
    "initial": _initial_inputs,
    "final": _final_inputs,
    "evaluate": _evaluate_inputs,
}


def stage_signature(project: Project, stage: str, _memo: dict | None = None) -> str:
    """Content hash over everything that can change this stage's output.

    Covers the stage's own inputs plus (recursively) the signatures of
    its upstream stages; raises a named ProjectError when a required
    input is absent.
    """
    if stage not in STAGES:
        raise ProjectError(f"unknown stage {stage!r}")
    memo = {} if _memo is None else _memo
    if stage not in memo:
        memo[stage] = _digest(
            {
                "stage": stage,
                "deps": [stage_signature(project, d, memo) for d in _DEPS[stage]],
                "inputs": _INPUTS[stage](project),
            }
        )
    return memo[stage]


def stage_artifact_path(project: Project, stage: str, key: str) -> Path:
    entry = project.stage_outputs.get(stage)
    if entry is None:
        raise ProjectError(f"stage '{stage}' has not run")
    try:
        rel = entry["artifacts"][key]
    except KeyError:
        raise ProjectError(f"stage '{stage}' has no artifact {key!r}") from None
    return project.root / rel


def load_stage_mesh(project: Project, stage: str, key: str) -> TriMesh:
    entry = project.stage_outputs.get(stage)
    if entry is None:
        raise ProjectError(f"stage '{stage}' has not run")
    hit = project._mem.get((stage, key))
    if hit is not None and hit[0] == entry["signature"]:
        return hit[1]
    path = stage_artifact_path(project, stage, key)
    if not path.exists():
        raise ProjectError(
            f"stage '{stage}' references a missing artifact: {path.name}"
        )
    mesh = read_stl(path.read_bytes())
    project._mem[(stage, key)] = (entry["signature"], mesh)
    return mesh


def load_stage_report(project: Project) -> dict:
    entry = project.stage_outputs.get("evaluate")
    if entry is None:
        raise ProjectError("stage 'evaluate' has not run")
    hit = project._mem.get(("evaluate", "report"))
    if hit is not None and hit[0] == entry["signature"]:
        return hit[1]
    path = stage_artifact_path(project, "evaluate", "report")
    if not path.exists():
        raise ProjectError(
            f"stage 'evaluate' references a missing artifact: {path.name}"
        )
    report = json.loads(path.read_text())
    project._mem[("evaluate", "report")] = (entry["signature"], report)
    return report


def _run_segment(project: Project):
    tol = float(project.params["weld_tolerance"])
    if project.inputs.get("volume"):
        vol = read_volume(project.root / project.inputs["volume"])
        th = project.params["thresholds"]
        lo = float(th["lo"])
        hi = float(np.inf) if th.get("hi") is None else float(th["hi"])
        mask = threshold_segment(vol, lo, hi)
        grown = region_grow(mask, auto_seed(mask, vol))
        # Fields that vanish exactly at lattice points leave coincident
        # marching-cubes vertices; welding collapses them and drops the
        # zero-area faces they carried.
        crania = weld_vertices(extract_isosurface(vol, lo, mask=grown), tol)
        info = {"source": "volume", "mask_voxels": int(grown.data.sum())}
    else:
        data = (project.root / project.inputs["mesh"]).read_bytes()
        crania = read_stl(data, weld_tol=tol)
        info = {"source": "mesh"}
    st = mesh_stats(crania)
    info.update(
        vertices=st.n_vertices, faces=st.n_faces, watertight=st.is_watertight
    )
    return {"crania": crania}, info


def _run_mirror(project: Project):
    crania = load_stage_mesh(project, "segment", "crania")
    fit = fit_median_plane(project.landmarks)
    mirrored = mirror_model(crania, fit)
    info = {
        "pair_count": fit.pair_count,
        "residual_rms": float(fit.residual_rms),
        "plane_origin": [float(x) for x in fit.plane.origin],
        "plane_normal": [float(x) for x in fit.plane.normal],
    }
    if fit.warning:
        info["warning"] = fit.warning
    return {"mirrored": mirrored}, info


def _run_clip(project: Project):
    mirrored = load_stage_mesh(project, "mirror", "mirrored")
    region = build_implicit(project.contour_defect)
    clipped = clip_mesh_by_implicit(mirrored, region, keep="inside")
    comps = split_components(clipped)
    if not comps:
        raise ProjectError("contour_defect selects nothing on the mirrored model")
    # The loop prism is unbounded both ways, so the far side of the
    # skull comes through too; the wanted sheet is the one nearest the
    # drawing camera.
    depth = [
        float(project.camera.world_to_display(c.vertices)[1].mean()) for c in comps
    ]
    front = comps[int(np.argmin(depth))]
    info = {
        "components": len(comps),
        "vertices": front.n_vertices,
        "faces": front.n_faces,
    }
    return {"front": front}, info


def _run_fit(project: Project):
    front = load_stage_mesh(project, "clip", "front")
    patch = fit_patch(front, project.contour_defect, cam=project.camera)
    info = {"vertices": patch.mesh.n_vertices, "faces": patch.mesh.n_faces}
    return {"patch": patch.mesh}, info


def _fitted_patch(project: Project) -> FittedPatch:
    return FittedPatch(
        load_stage_mesh(project, "fit", "patch"),
        project.contour_defect,
        project.camera,
    )


def _run_initial(project: Project):
    sm = project.params["smoothing"]
    model = build_initial_implant(
        _fitted_patch(project),
        float(project.params["thickness"]),
        smooth_k=int(sm["k"]),
        smooth_lam=float(sm["lambda"]),
    )
    st = mesh_stats(model.solid)
    info = {
        "thickness": model.thickness,
        "vertices": st.n_vertices,
        "faces": st.n_faces,
        "volume": st.signed_volume,
    }
    return {"implant": model.solid}, info


def _run_final(project: Project):
    crania = load_stage_mesh(project, "segment", "crania")
    thickness = float(project.params["thickness"])
    sm = project.params["smoothing"]
    k, lam = int(sm["k"]), float(sm["lambda"])
    # Rebuilt from the fit artifact rather than re-read: the final build
    # consumes the initial implant's outer patch, and the solid artifact
    # does not carry patch topology.
    initial = build_initial_implant(
        _fitted_patch(project), thickness, smooth_k=k, smooth_lam=lam
    )
    final = build_final_implant(
        crania,
        initial,
        project.contour_inner_edge,
        thickness,
        smooth_k=k,
        smooth_lam=lam,
    )
    st = mesh_stats(final.solid)
    info = {
        key: final.provenance[key]
        for key in ("thickness", "rim_max_gap", "rim_fit_tolerance", "rim_fit_ok")
    }
    info.update(vertices=st.n_vertices, faces=st.n_faces, volume=st.signed_volume)
    return {"implant": final.solid, "patch": final.outer_patch.mesh}, info


def _run_evaluate(project: Project):
    report = implant_fit_report(
        load_stage_mesh(project, "segment", "crania"),
        load_stage_mesh(project, "mirror", "mirrored"),
        load_stage_mesh(project, "final", "patch"),
        load_stage_mesh(project, "final", "implant"),
        float(project.params["thickness"]),
        voxel_size=project.params.get("voxel_size"),
    )
    info = {
        "pass": report["pass"],
        "rim_gap_max": report["rim_gap"]["max"],
        "rim_gap_tolerance": report["rim_gap"]["tolerance"],
        "mirror_p95": report["mirror_agreement"]["p95"],
    }
    return {"report": report}, info


_RUNNERS = {
    "segment": _run_segment,
    "mirror": _run_mirror,
    "clip": _run_clip,
    "fit": _run_fit,
    "initial": _run_initial,
    "final": _run_final,
    "evaluate": _run_evaluate,
}


def _drop_stale(project: Project, memo: dict) -> None:
    for name in list(project.stage_outputs):
        if name not in STAGES:
            del project.stage_outputs[name]
            continue
        try:
            cur = stage_signature(project, name, memo)
        except ProjectError:
            cur = None
        if project.stage_outputs[name]["signature"] != cur:
            del project.stage_outputs[name]


def run_stage(project: Project, stage: str) -> Project:
    """Run one stage, or reuse its cached output, and persist the project.

    Returns the same project, mutated: stage_outputs gains (or keeps)
    this stage's entry, and recorded entries whose signatures no longer
    match current inputs are dropped. Identical project state yields
    byte-identical artifacts.
    """
    if stage not in STAGES:
        raise ProjectError(f"unknown stage {stage!r}")
    memo: dict = {}
    # Own inputs first: "contour_defect absent" is more actionable than
    # a missing-upstream message when both hold.
    sig = stage_signature(project, stage, memo)
    for dep in _DEPS[stage]:
        entry = project.stage_outputs.get(dep)
        if entry is None:
            raise ProjectError(f"stage '{dep}' has not run")
        if entry["signature"] != stage_signature(project, dep, memo):
            raise ProjectError(f"stage '{dep}' is stale, rerun it")
        for rel in entry["artifacts"].values():
            if not (project.root / rel).exists():
                raise ProjectError(
                    f"stage '{dep}' references a missing artifact: {rel}"
                )
    entry = project.stage_outputs.get(stage)
    if (
        entry is not None
        and entry["signature"] == sig
        and all((project.root / rel).exists() for rel in entry["artifacts"].values())
    ):
        return project

    try:
        artifacts, info = _RUNNERS[stage](project)
    except ProjectError:
        raise
    except Exception as exc:
        raise ProjectError(f"stage '{stage}': {exc}") from exc

    rels = {}
    for key, obj in artifacts.items():
        if isinstance(obj, dict):
            name = f"{stage}_{key}.json"
            _atomic_write(
                project.root / name,
                (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode(),
            )
            project._mem[(stage, key)] = (sig, obj)
        else:
            name = f"{stage}_{key}.stl"
            data = write_stl(obj)
            _atomic_write(project.root / name, data)
            # Downstream consumers see the mesh as re-read from the file
            # bytes, the same view a fresh process gets.
            project._mem[(stage, key)] = (sig, read_stl(data))
        rels[key] = name
    project.stage_outputs[stage] = {"signature": sig, "artifacts": rels, "info": info}
    _drop_stale(project, memo)
    save_project(project)
    return project


def run_all(project: Project) -> Project:
    for stage in STAGES:
        run_stage(project, stage)
    return project


def stage_states(project: Project) -> dict:
    """Validity map the CLI and service gate on.

    Per stage: ran (an entry exists), valid (entry matches the current
    signature and its artifacts exist), runnable (deps valid and inputs
    present), blocker (why not runnable, else None).
    """
    memo: dict = {}
    out: dict = {}
    for stage in STAGES:
        blocker = None
        for dep in _DEPS[stage]:
            if not out[dep]["valid"]:
                blocker = (
                    f"stage '{dep}' has not run"
                    if project.stage_outputs.get(dep) is None
                    else f"stage '{dep}' is stale, rerun it"
                )
                break
        sig = None
        if blocker is None:
            try:
                sig = stage_signature(project, stage, memo)
            except ProjectError as exc:
                blocker = str(exc)
        entry = project.stage_outputs.get(stage)
        valid = (
            entry is not None
            and sig is not None
            and entry["signature"] == sig
            and all(
                (project.root / rel).exists() for rel in entry["artifacts"].values()
            )
        )
        out[stage] = {
            "ran": entry is not None,
            "valid": valid,
            "runnable": blocker is None,
            "blocker": blocker,
        }
    return out


def evaluate_against_ct(project: Project) -> dict:
    """Run (or reuse) the evaluate stage and return its report."""
    if not stage_states(project)["final"]["valid"]:
        raise ProjectError("final implant absent, run the 'final' stage first")
    run_stage(project, "evaluate")
    return load_stage_report(project)
