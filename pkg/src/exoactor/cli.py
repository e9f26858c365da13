"""exo: staged pipeline runs, single stages, replay scoring, latency tables.

Exit codes: 0 success, 2 config error, 3 stage failure, 4 replay classified
non-SUCCESS.
"""
from __future__ import annotations

import sys
from pathlib import Path

import click

from .errors import ConfigError, ExoError
from .pipeline import (
    STAGE_ORDER,
    PipelineConfig,
    RunManifest,
    StageFailure,
    latency_report_text,
    regen_video,
    run_pipeline,
)
from .planner import TaskInstruction
from .simulator import TargetSpec, Tolerances, default_model, per_frame_table, render_report, replay
from .simulator.replay import FailureClass, GraspTarget

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STAGE = 3
EXIT_REPLAY = 4


def _load_config(path: str | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    return PipelineConfig.from_file(path)


def _finish(manifest: RunManifest) -> int:
    click.echo(f"run {manifest.run_id}: "
               + ", ".join(f"{r.name}={r.status}" for r in manifest.stages))
    if manifest.report is not None:
        classification = manifest.report.get("classification")
        click.echo(f"replay classification: {classification}")
        if classification != FailureClass.SUCCESS.value:
            return EXIT_REPLAY
    return EXIT_OK


@click.group()
def main():
    """Instruction + scene image -> generated video -> motion -> command stream."""


@main.command()
@click.option("--task", "task_text", required=True, help="High-level goal text.")
@click.option("--image", "image_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Third-person scene image (PNG).")
@click.option("--scene", "scene_summary", default="",
              help="Structured initial-state summary; defaults to a generic one.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--run-id", default=None)
@click.option("--resume", "resume_id", default=None, help="Resume an existing run id.")
def run(task_text, image_path, scene_summary, config_path, run_id, resume_id):
    """Execute the full staged pipeline."""
    try:
        config = _load_config(config_path)
        scene = scene_summary or ("the target person stands front-facing at the "
                                  "initial position on an open floor")
        task = TaskInstruction(goal_text=task_text, scene_summary=scene)
        manifest = run_pipeline(config, task, image_path,
                                run_id=run_id, resume=resume_id)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except StageFailure as exc:
        click.echo(f"stage failure: {exc}", err=True)
        sys.exit(EXIT_STAGE)
    sys.exit(_finish(manifest))


@main.command()
@click.argument("name", type=click.Choice(STAGE_ORDER))
@click.option("--task", "task_text", required=True)
@click.option("--image", "image_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--scene", "scene_summary", default="")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--run-id", default=None)
@click.option("--resume", "resume_id", default=None)
def stage(name, task_text, image_path, scene_summary, config_path, run_id, resume_id):
    """Run the pipeline up to and including one stage."""
    try:
        config = _load_config(config_path)
        scene = scene_summary or ("the target person stands front-facing at the "
                                  "initial position on an open floor")
        task = TaskInstruction(goal_text=task_text, scene_summary=scene)
        manifest = run_pipeline(config, task, image_path, run_id=run_id,
                                resume=resume_id, until=name)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except StageFailure as exc:
        click.echo(f"stage failure: {exc}", err=True)
        sys.exit(EXIT_STAGE)
    click.echo(f"run {manifest.run_id}: "
               + ", ".join(f"{r.name}={r.status}" for r in manifest.stages))
    sys.exit(EXIT_OK)


def _parse_model_file(path: str | None):
    model = default_model()
    if path is None:
        return model
    from dataclasses import replace
    overrides = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = (p.strip() for p in line.partition("="))
        overrides[key] = float(value)
    return replace(model, **overrides)


@main.command("replay")
@click.argument("stream_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False),
              help="Key-value file of humanoid model overrides.")
@click.option("--target-x", type=float, default=None)
@click.option("--target-y", type=float, default=None)
@click.option("--grasp", "grasps", multiple=True,
              help="Declared grasp height as hand:height, e.g. right:0.9.")
@click.option("--height-tol", type=float, default=0.03)
@click.option("--dist-tol", type=float, default=0.10)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
def replay_cmd(stream_path, model_path, target_x, target_y, grasps,
               height_tol, dist_tol, out_dir):
    """Kinematically replay a .exoq stream and classify the execution."""
    try:
        model = _parse_model_file(model_path)
        target = (target_x, target_y) if target_x is not None and target_y is not None \
            else None
        grasp_targets = []
        for item in grasps:
            hand, _, height = item.partition(":")
            if hand not in ("left", "right"):
                raise ConfigError(f"grasp hand must be left or right, got {hand!r}")
            grasp_targets.append(GraspTarget(hand=hand, height_m=float(height)))
        spec = TargetSpec(target_position=target, grasp_targets=tuple(grasp_targets))
        report = replay(stream_path, model,
                        spec, Tolerances(height_tol_m=height_tol, dist_tol_m=dist_tol))
    except (ExoError, ValueError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    text = render_report(report)
    click.echo(text, nl=False)
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(text)
        (out / "frames.csv").write_text(per_frame_table(report))
    sys.exit(EXIT_OK if report.classification is FailureClass.SUCCESS else EXIT_REPLAY)


@main.command()
@click.argument("run_id")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--video-seconds", type=float, default=10.0,
              help="Clip length d for the projected total(d).")
def latency(run_id, config_path, video_seconds):
    """Render the run's latency table and projected end-to-end time."""
    try:
        config = _load_config(config_path)
        manifest = RunManifest.load(config.runs_dir, run_id)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    click.echo(latency_report_text(manifest, video_seconds), nl=False)
    sys.exit(EXIT_OK)


@main.command("regen-video")
@click.argument("run_id")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
def regen(run_id, config_path):
    """Regenerate the video stage (and everything downstream) for a run."""
    try:
        config = _load_config(config_path)
        manifest = regen_video(config, run_id)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except StageFailure as exc:
        click.echo(f"stage failure: {exc}", err=True)
        sys.exit(EXIT_STAGE)
    sys.exit(_finish(manifest))


if __name__ == "__main__":
    main()
