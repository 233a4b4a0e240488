"""Shared fixtures around the synthetic shell case.

Running the full pipeline costs ~30s, so one session-scoped run is shared
by everything that only reads its outputs. Tests that mutate state get a
copy (shell_ran_copy) or a pristine unrun case (shell_case).
"""

import shutil

import pytest

from craniofit.fixture import make_shell_case
from craniofit.project import load_project, run_all


@pytest.fixture(scope="session")
def shell_ran(tmp_path_factory):
    """Path to a project.json whose every stage has run. Read-only: tests
    must not write into this directory."""
    root = tmp_path_factory.mktemp("shell_ran")
    path = make_shell_case(root / "case")
    run_all(load_project(path))
    return path


@pytest.fixture
def shell_case(tmp_path):
    """Fresh unrun case, safe to mutate."""
    return make_shell_case(tmp_path / "case")


@pytest.fixture
def shell_ran_copy(shell_ran, tmp_path):
    """Private copy of the fully-run case, safe to mutate."""
    dst = tmp_path / "case"
    shutil.copytree(shell_ran.parent, dst)
    return dst / "project.json"
