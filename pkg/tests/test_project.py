"""Project persistence, content signatures and stage gating.

Everything runs on the synthetic shell case. The fully-run pipeline is
session-scoped (conftest.shell_ran); tests that mutate state work on
private copies so the shared run stays pristine.
"""

import json
from pathlib import Path

import numpy as np
import pytest

from craniofit.core import TriMesh, mesh_stats
from craniofit.fixture import (
    defect_contour,
    make_shell_case,
    shell_landmarks,
)
from craniofit.mirrorfit import LandmarkPair
from craniofit.project import (
    STAGES,
    ProjectError,
    create_project,
    evaluate_against_ct,
    load_project,
    load_stage_mesh,
    load_stage_report,
    project_to_dict,
    run_stage,
    save_project,
    stage_artifact_path,
    stage_states,
)
from craniofit.stl import write_stl
from craniofit.synthetic import icosphere

REPO = Path(__file__).resolve().parents[1]


def test_save_load_roundtrip_is_byte_stable(shell_case, tmp_path):
    pr = load_project(shell_case)
    echo = save_project(pr, tmp_path / "echo.json")
    assert echo.read_bytes() == shell_case.read_bytes()
    assert project_to_dict(load_project(echo)) == project_to_dict(pr)


def test_partial_params_merge_onto_defaults(tmp_path):
    pr = create_project(tmp_path / "p", "p")
    data = project_to_dict(pr)
    data["params"] = {"thresholds": {"lo": 100.0}}
    (tmp_path / "p" / "project.json").write_text(json.dumps(data))
    loaded = load_project(tmp_path / "p" / "project.json")
    assert loaded.params["thresholds"] == {"lo": 100.0, "hi": None}
    assert loaded.params["thickness"] == 4.0


def test_schema_version_mismatch_rejected(tmp_path):
    path = tmp_path / "project.json"
    path.write_text(json.dumps({"schema_version": 99, "id": "x"}))
    with pytest.raises(ProjectError, match="unsupported schema version 99"):
        load_project(path)


def test_dangling_artifact_reference_rejected(shell_ran_copy):
    (shell_ran_copy.parent / "segment_crania.stl").unlink()
    with pytest.raises(
        ProjectError, match="stage 'segment' references a missing artifact: segment_crania.stl"
    ):
        load_project(shell_ran_copy)


def test_unknown_stage_rejected(shell_case):
    with pytest.raises(ProjectError, match="unknown stage 'polish'"):
        run_stage(load_project(shell_case), "polish")


def test_stage_out_of_order_names_missing_dep(shell_case):
    # All inputs are present, so the gate trips on the unrun upstream
    # stage, not on an input check.
    with pytest.raises(ProjectError, match="stage 'clip' has not run"):
        run_stage(load_project(shell_case), "fit")


def test_missing_inputs_named_in_order(tmp_path):
    pr = create_project(tmp_path / "p", "p")
    with pytest.raises(ProjectError, match="volume or mesh input absent"):
        run_stage(pr, "segment")

    ball = icosphere(radius=50.0, subdivisions=3)
    (pr.root / "ball.stl").write_bytes(write_stl(ball))
    pr.inputs = {"mesh": "ball.stl"}
    assert run_stage(pr, "segment") is pr
    entry = pr.stage_outputs["segment"]
    assert entry["info"]["source"] == "mesh"
    assert entry["info"]["vertices"] == ball.n_vertices

    with pytest.raises(ProjectError, match="landmarks absent"):
        run_stage(pr, "mirror")
    pr.landmarks = shell_landmarks()
    run_stage(pr, "mirror")

    with pytest.raises(ProjectError, match="contour_defect absent"):
        run_stage(pr, "clip")
    pr.contour_defect = defect_contour()
    with pytest.raises(ProjectError, match="camera absent"):
        run_stage(pr, "clip")


def test_final_requires_inner_edge_before_dep_checks(shell_case):
    pr = load_project(shell_case)
    pr.contour_inner_edge = None
    # Nothing has run either, but the absent input is the more
    # actionable message and wins.
    with pytest.raises(ProjectError, match="contour_inner_edge absent"):
        run_stage(pr, "final")


def test_missing_volume_file_named(shell_case):
    (shell_case.parent / "volume.json").unlink()
    with pytest.raises(ProjectError, match="volume file missing: volume.json"):
        run_stage(load_project(shell_case), "segment")


def test_missing_volume_blob_named(shell_case):
    (shell_case.parent / "volume.raw").unlink()
    with pytest.raises(ProjectError, match="volume file missing: volume.raw"):
        run_stage(load_project(shell_case), "segment")


def test_fresh_project_states(shell_case):
    states = stage_states(load_project(shell_case))
    assert set(states) == set(STAGES)
    assert all(not s["ran"] and not s["valid"] for s in states.values())
    assert states["segment"]["runnable"] and states["segment"]["blocker"] is None
    assert states["mirror"]["blocker"] == "stage 'segment' has not run"
    assert states["evaluate"]["blocker"] == "stage 'segment' has not run"


def test_rerun_without_changes_touches_nothing(shell_ran_copy):
    pr = load_project(shell_ran_copy)
    tracked = [shell_ran_copy] + [
        pr.root / rel
        for entry in pr.stage_outputs.values()
        for rel in entry["artifacts"].values()
    ]
    before = {p: (p.stat().st_mtime_ns, p.read_bytes()) for p in tracked}
    for stage in STAGES:
        run_stage(pr, stage)
    for p, (mtime, data) in before.items():
        assert p.stat().st_mtime_ns == mtime
        assert p.read_bytes() == data


def test_landmark_edit_invalidates_downstream(shell_ran_copy):
    pr = load_project(shell_ran_copy)
    p0 = pr.landmarks[0]
    pr.landmarks[0] = LandmarkPair(p0.left + [0.0, 0.5, 0.0], p0.right, p0.label)
    save_project(pr)
    states = stage_states(pr)
    assert states["segment"]["valid"]
    for stage in ("mirror", "clip", "fit", "initial", "final", "evaluate"):
        assert not states[stage]["valid"], stage
    # Rerunning mirror drops every recorded stage that no longer matches
    # its signature; only segment and the fresh mirror remain.
    run_stage(pr, "mirror")
    assert set(pr.stage_outputs) == {"segment", "mirror"}


def test_thickness_edit_spares_the_fit(shell_ran_copy):
    pr = load_project(shell_ran_copy)
    pr.params["thickness"] = 5.5
    states = stage_states(pr)
    for stage in ("segment", "mirror", "clip", "fit"):
        assert states[stage]["valid"], stage
    for stage in ("initial", "final", "evaluate"):
        assert not states[stage]["valid"], stage


def test_run_all_products(shell_ran):
    pr = load_project(shell_ran)
    states = stage_states(pr)
    assert all(states[s]["valid"] for s in STAGES)
    expected = {
        "segment_crania.stl",
        "mirror_mirrored.stl",
        "clip_front.stl",
        "fit_patch.stl",
        "initial_implant.stl",
        "final_implant.stl",
        "final_patch.stl",
        "evaluate_report.json",
    }
    assert expected <= {p.name for p in pr.root.iterdir()}
    st = mesh_stats(load_stage_mesh(pr, "final", "implant"))
    assert st.is_watertight and st.euler_characteristic == 2
    assert st.signed_volume > 0
    report = load_stage_report(pr)
    assert report["pass"] is True
    assert report["rim_gap"]["max"] <= report["rim_gap"]["tolerance"]


def test_evaluate_requires_final(shell_case):
    with pytest.raises(
        ProjectError, match="final implant absent, run the 'final' stage first"
    ):
        evaluate_against_ct(load_project(shell_case))


def test_evaluate_against_ct_returns_report(shell_ran_copy):
    report = evaluate_against_ct(load_project(shell_ran_copy))
    assert report["pass"] is True
    assert set(report) >= {"rim_gap", "mirror_agreement", "clearance", "thickness"}


def test_committed_fixture_matches_generator(tmp_path):
    fresh = make_shell_case(tmp_path / "case")
    committed = REPO / "fixtures" / "shell_case" / "project.json"
    assert json.loads(committed.read_text()) == json.loads(fresh.read_text())


def test_translated_implant_fails_evaluation(shell_ran_copy):
    pr = load_project(shell_ran_copy)
    base_max = load_stage_report(pr)["rim_gap"]["max"]
    shift = np.array([5.0, 0.0, 0.0])
    for key in ("implant", "patch"):
        mesh = load_stage_mesh(pr, "final", key)
        moved = TriMesh(mesh.vertices + shift, mesh.faces)
        stage_artifact_path(pr, "final", key).write_bytes(write_stl(moved))
    del pr.stage_outputs["evaluate"]
    pr._mem.clear()
    save_project(pr)
    run_stage(pr, "evaluate")
    report = load_stage_report(pr)
    assert report["pass"] is False
    # Triangle inequality around the 5 mm shift: the perturbed rim gap
    # can differ from 5 by at most the baseline gap.
    assert 5.0 - base_max <= report["rim_gap"]["max"] <= 5.0 + base_max
