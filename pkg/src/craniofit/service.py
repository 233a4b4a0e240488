"""HTTP facade over the project pipeline for the designer UI.

State lives on disk: every request loads the project file fresh, and
mutating requests write it back before responding, serialized by a
per-project lock. GET endpoints take no lock and never write. Meshes
travel as binary STL bodies; everything else is JSON with
machine-readable error codes in the detail payload.
"""

from __future__ import annotations

import re
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException, Response

from . import __version__
from . import project as proj

_ID_RE = re.compile(r"[A-Za-z0-9][A-Za-z0-9._-]*")


def _error(status: int, code: str, message: str, **extra):
    raise HTTPException(status, detail={"code": code, "message": message, **extra})


def create_app(root: str | Path) -> FastAPI:
    root = Path(root)
    app = FastAPI(title="craniofit", version=__version__)
    locks: dict[str, threading.Lock] = {}
    locks_guard = threading.Lock()

    def lock_for(pid: str) -> threading.Lock:
        with locks_guard:
            return locks.setdefault(pid, threading.Lock())

    def project_path(pid: str) -> Path:
        return root / pid / "project.json"

    def load(pid: str) -> proj.Project:
        if not _ID_RE.fullmatch(pid):
            _error(422, "invalid_id", f"invalid project id {pid!r}")
        path = project_path(pid)
        if not path.exists():
            _error(404, "not_found", f"project '{pid}' does not exist")
        try:
            return proj.load_project(path)
        except proj.ProjectError as exc:
            _error(409, "bad_project", str(exc))

    def summary(pr: proj.Project) -> dict:
        d = proj.project_to_dict(pr)
        d["stages"] = proj.stage_states(pr)
        return d

    @app.get("/projects")
    def list_projects():
        ids = sorted(p.parent.name for p in root.glob("*/project.json"))
        return {"projects": ids}

    @app.post("/projects", status_code=201)
    def create_project(payload: dict):
        pid = str(payload.get("id", ""))
        if not _ID_RE.fullmatch(pid):
            _error(422, "invalid_id", f"invalid project id {pid!r}")
        with lock_for(pid):
            if project_path(pid).exists():
                _error(409, "exists", f"project '{pid}' already exists")
            pr = proj.create_project(root / pid, pid)
            if payload.get("inputs"):
                pr.inputs = dict(payload["inputs"])
            if payload.get("params"):
                _merge_params(pr, payload["params"])
            proj.save_project(pr)
        return summary(pr)

    @app.get("/projects/{pid}")
    def get_project(pid: str):
        return summary(load(pid))

    @app.put("/projects/{pid}/landmarks")
    def put_landmarks(pid: str, payload: dict):
        with lock_for(pid):
            pr = load(pid)
            try:
                pr.landmarks = [
                    proj.landmark_from_dict(d) for d in payload.get("pairs", [])
                ]
            except (ValueError, KeyError, TypeError) as exc:
                _error(422, "invalid", f"bad landmark payload: {exc}")
            proj.save_project(pr)
            return summary(pr)

    @app.put("/projects/{pid}/contours/{name}")
    def put_contour(pid: str, name: str, payload: dict):
        if name not in ("defect", "inner_edge"):
            _error(404, "unknown_contour", f"no contour named '{name}'")
        with lock_for(pid):
            pr = load(pid)
            try:
                contour = proj.contour_from_dict(payload)
            except (ValueError, KeyError, TypeError) as exc:
                _error(422, "invalid", f"bad contour payload: {exc}")
            if name == "defect":
                pr.contour_defect = contour
            else:
                pr.contour_inner_edge = contour
            proj.save_project(pr)
            return summary(pr)

    @app.put("/projects/{pid}/camera")
    def put_camera(pid: str, payload: dict):
        with lock_for(pid):
            pr = load(pid)
            try:
                pr.camera = proj.ViewCamera.from_dict(payload)
            except (ValueError, KeyError, TypeError) as exc:
                _error(422, "invalid", f"bad camera payload: {exc}")
            proj.save_project(pr)
            return summary(pr)

    def _merge_params(pr: proj.Project, payload: dict) -> None:
        for k, v in payload.items():
            if isinstance(v, dict) and isinstance(pr.params.get(k), dict):
                pr.params[k].update(v)
            else:
                pr.params[k] = v

    @app.put("/projects/{pid}/params")
    def put_params(pid: str, payload: dict):
        with lock_for(pid):
            pr = load(pid)
            _merge_params(pr, payload)
            proj.save_project(pr)
            return summary(pr)

    @app.get("/projects/{pid}/stages")
    def get_stages(pid: str):
        return {"stages": proj.stage_states(load(pid))}

    @app.post("/projects/{pid}/stages/{stage}/run")
    def run_stage(pid: str, stage: str):
        if stage not in proj.STAGES:
            _error(404, "unknown_stage", f"unknown stage {stage!r}")
        with lock_for(pid):
            pr = load(pid)
            ran = not proj.stage_states(pr)[stage]["valid"]
            try:
                proj.run_stage(pr, stage)
            except proj.ProjectError as exc:
                _error(409, "precondition", str(exc), stage=stage)
            return {
                "stage": stage,
                "ran": ran,
                "info": pr.stage_outputs[stage]["info"],
            }

    def _why_invalid(stage: str, state: dict) -> str:
        if state["blocker"]:
            return state["blocker"]
        if not state["ran"]:
            return f"stage '{stage}' has not run"
        return f"stage '{stage}' is stale, rerun it"

    @app.get("/projects/{pid}/stages/{stage}/meshes/{key}")
    def get_stage_mesh(pid: str, stage: str, key: str):
        if stage not in proj.STAGES:
            _error(404, "unknown_stage", f"unknown stage {stage!r}")
        pr = load(pid)
        state = proj.stage_states(pr)[stage]
        if not state["valid"]:
            _error(
                409,
                "not_ready",
                f"stage '{stage}' has no valid output",
                stage=stage,
                blocker=_why_invalid(stage, state),
            )
        try:
            path = proj.stage_artifact_path(pr, stage, key)
        except proj.ProjectError as exc:
            _error(404, "unknown_artifact", str(exc))
        if path.suffix != ".stl":
            _error(404, "unknown_artifact", f"stage '{stage}' artifact {key!r} is not a mesh")
        return Response(content=path.read_bytes(), media_type="model/stl")

    @app.get("/projects/{pid}/report")
    def get_report(pid: str):
        pr = load(pid)
        state = proj.stage_states(pr)["evaluate"]
        if not state["valid"]:
            _error(
                409,
                "not_ready",
                "evaluation has no valid output",
                stage="evaluate",
                blocker=_why_invalid("evaluate", state),
            )
        return proj.load_stage_report(pr)

    return app


def serve_api(root: str | Path, port: int, host: str = "127.0.0.1"):
    """Blocking uvicorn server over create_app(root)."""
    import uvicorn

    uvicorn.run(create_app(root), host=host, port=int(port))
