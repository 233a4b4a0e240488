"""Command-line pipeline runner.

Every verb takes a project file and runs exactly its own stage; upstream
stages must already be valid (run-all does the whole chain). Stage
outputs land next to the project file and rerunning an unchanged stage
is a no-op.
"""

from __future__ import annotations

import json
import os
import shutil

import click

from . import project as proj


def _load(project_file: str) -> proj.Project:
    try:
        return proj.load_project(project_file)
    except (proj.ProjectError, json.JSONDecodeError, OSError) as exc:
        raise click.ClickException(str(exc))


def _run(project_file: str, stages: tuple[str, ...], export: str | None) -> None:
    pr = _load(project_file)
    for stage in stages:
        cached = proj.stage_states(pr)[stage]["valid"]
        try:
            proj.run_stage(pr, stage)
        except proj.ProjectError as exc:
            raise click.ClickException(str(exc))
        info = pr.stage_outputs[stage]["info"]
        detail = " ".join(f"{k}={v}" for k, v in sorted(info.items()))
        click.echo(f"{stage}: {'cached' if cached else 'computed'} {detail}")
    if export:
        stage, key = _EXPORTS[stages[-1]]
        shutil.copyfile(proj.stage_artifact_path(pr, stage, key), export)
        click.echo(f"exported {export}")


# Which artifact --export ships, per verb's last stage.
_EXPORTS = {
    "segment": ("segment", "crania"),
    "mirror": ("mirror", "mirrored"),
    "clip": ("clip", "front"),
    "fit": ("fit", "patch"),
    "final": ("final", "implant"),
    "evaluate": ("final", "implant"),
}

_project_arg = click.argument(
    "project_file", type=click.Path(exists=True, dir_okay=False)
)
_export_opt = click.option(
    "--export",
    type=click.Path(dir_okay=False),
    default=None,
    help="Also write the resulting mesh as binary STL.",
)


@click.group()
@click.version_option()
def main() -> None:
    """Cranial implant pipeline: volume to printable implant."""


@main.command()
@_project_arg
@_export_opt
def segment(project_file, export):
    """Threshold, region-grow and extract the skull surface."""
    _run(project_file, ("segment",), export)


@main.command()
@_project_arg
@_export_opt
def mirror(project_file, export):
    """Fit the median plane from landmark pairs and mirror the model."""
    _run(project_file, ("mirror",), export)


@main.command()
@_project_arg
@_export_opt
def clip(project_file, export):
    """Clip the mirrored model to the defect contour's loop region."""
    _run(project_file, ("clip",), export)


@main.command()
@_project_arg
@_export_opt
def fit(project_file, export):
    """Fit the smooth outer patch over the clipped fragment."""
    _run(project_file, ("fit",), export)


@main.command()
@_project_arg
@_export_opt
def implant(project_file, export):
    """Build the initial and final implant solids."""
    _run(project_file, ("initial", "final"), export)


@main.command()
@_project_arg
@_export_opt
def evaluate(project_file, export):
    """Score the final implant against the segmented anatomy."""
    pr = _load(project_file)
    try:
        report = proj.evaluate_against_ct(pr)
    except proj.ProjectError as exc:
        raise click.ClickException(str(exc))
    click.echo(json.dumps(report, indent=2, sort_keys=True))
    click.echo("PASS" if report["pass"] else "FAIL")
    if export:
        stage, key = _EXPORTS["evaluate"]
        shutil.copyfile(proj.stage_artifact_path(pr, stage, key), export)
        click.echo(f"exported {export}")


@main.command(name="run-all")
@_project_arg
@_export_opt
def run_all(project_file, export):
    """Run every stage in order and report the evaluation verdict."""
    _run(project_file, proj.STAGES, export)
    pr = _load(project_file)
    click.echo("PASS" if proj.load_stage_report(pr)["pass"] else "FAIL")


@main.command(name="make-fixture")
@click.argument("dest", type=click.Path(file_okay=False))
def make_fixture(dest):
    """Write the synthetic shell demo case (volume + project) into DEST."""
    from .fixture import make_shell_case

    click.echo(str(make_shell_case(dest)))


@main.command()
@click.argument("root", type=click.Path(exists=True, file_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option(
    "--port",
    type=int,
    default=None,
    help="Defaults to the CRANIOFIT_PORT environment variable, else 8077.",
)
def serve(root, host, port):
    """Serve the project API over HTTP for the designer UI."""
    from .service import serve_api

    if port is None:
        port = int(os.environ.get("CRANIOFIT_PORT", "8077"))
    serve_api(root, port, host=host)


if __name__ == "__main__":
    main()
