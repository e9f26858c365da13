"""Staged, resumable pipeline runs: instruction + scene image in, streamed
command sequence and feasibility report out.

Stages execute strictly in order (the upstream services are offline-style:
each stage must finish before the next begins), persisting the manifest
after every stage so a killed run resumes at the first non-succeeded stage
using cached artifacts.
"""
from __future__ import annotations

import json
import time
import uuid
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .bridge.hands import default_calibration
from .bridge.stream import FileSink, stream
from .errors import ConfigError, ExoError
from .estimation import (
    EstimatorDescriptor,
    ScenarioFamily,
    ScenarioScript,
    TransportKind,
    VideoClip,
    assemble,
    estimate_body,
    estimate_hands,
    ground_truth,
    quantize_states,
    resolve_estimator,
)
from .estimation.adapter import OracleEstimator
from .gateway import (
    ArtifactRef,
    ArtifactStore,
    Gateway,
    LatencyLedger,
    LiveImageBackend,
    LiveTextBackend,
    LiveVideoBackend,
    MediaType,
    MetricKind,
    MockImageBackend,
    MockTextBackend,
    MockVideoBackend,
    report_latency,
)
from .gateway.ops import STAGE_BODY, STAGE_HANDS
from .motion.archive import read_archive, write_archive
from .motion.types import (
    BodyMotionSequence,
    FacingMode,
    FrameClock,
    HandPoseSequence,
    InteractionAwareMotion,
    InteractionStateSequence,
)
from .planner import (
    ActionChain,
    ActionStep,
    DifficultyTier,
    TaskInstruction,
    build_embodiment_prompt,
    build_video_prompt,
    classify_difficulty,
    construct_description,
    decompose,
    parse_chain_paragraph,
    render_chain_paragraph,
    validate_chain,
)
from .simulator import TargetSpec, Tolerances, default_model, replay, render_report, per_frame_table
from .simulator.replay import FailureClass, GraspTarget

STAGE_ORDER = ("transfer", "decompose", "fuse", "video",
               "body_est", "hand_est", "assemble", "stream_replay")

_OK_STATUSES = ("SUCCEEDED", "SKIPPED_CACHED")


class StageFailure(ExoError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineConfig:
    image_backend: str = "mock"
    text_backend: str = "mock"
    video_backend: str = "mock"
    estimator: str = "oracle:WALK_LINE"
    store_dir: str = "exo-store"
    runs_dir: str = "exo-runs"
    control_fps: float = 50.0
    window_horizon: int = 24
    open_thresh: float = 0.7
    closed_thresh: float = 0.3
    min_dwell_frames: int = 5
    height_tol_m: float = 0.03
    dist_tol_m: float = 0.10
    facing: str = "FRONT"
    seed: int = 0
    video_timeout_s: float = 900.0
    replay_enabled: bool = True
    target_x: float | None = None
    target_y: float | None = None

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        values: dict = {}
        for raw in Path(path).read_text().splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"config line is not key = value: {raw!r}")
            key, _, value = (p.strip() for p in line.partition("="))
            values[key] = value
        return cls.from_dict(values)

    @classmethod
    def from_dict(cls, values: dict) -> "PipelineConfig":
        cfg = cls()
        fields = {f: getattr(cfg, f) for f in cfg.__dataclass_fields__}
        out = {}
        for key, value in values.items():
            if key not in fields:
                raise ConfigError(f"unknown config key {key!r}")
            default = fields[key]
            if isinstance(value, str):
                if isinstance(default, bool):
                    value = value.lower() in ("1", "true", "yes", "on")
                elif key in ("target_x", "target_y"):
                    value = float(value)
                elif isinstance(default, float):
                    value = float(value)
                elif isinstance(default, int):
                    value = int(value)
            out[key] = value
        return cls(**out)

    def to_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}

    def validate(self, env) -> None:
        for name in ("image_backend", "text_backend", "video_backend"):
            mode = getattr(self, name)
            if mode not in ("mock", "live"):
                raise ConfigError(f"{name} must be 'mock' or 'live', got {mode!r}")
        if self.image_backend == "live" and not env.get("EXO_IMAGE_KEY"):
            raise ConfigError("live image backend requires EXO_IMAGE_KEY")
        if self.text_backend == "live" and not env.get("EXO_TEXT_KEY"):
            raise ConfigError("live text backend requires EXO_TEXT_KEY")
        if self.video_backend == "live" and not env.get("EXO_VIDEO_KEY"):
            raise ConfigError("live video backend requires EXO_VIDEO_KEY")
        if self.estimator.startswith("remote:"):
            if not self.estimator.partition(":")[2]:
                raise ConfigError("remote estimator requires an endpoint URL")
        elif not self.estimator.startswith("oracle:"):
            raise ConfigError("estimator must be 'oracle:<FAMILY>[...]' or 'remote:<url>'")
        if not self.control_fps > 0:
            raise ConfigError("control_fps must be positive")
        if not 0.0 < self.closed_thresh < self.open_thresh < 1.0:
            raise ConfigError("thresholds must satisfy 0 < closed < open < 1")
        try:
            FacingMode(self.facing)
        except ValueError:
            raise ConfigError(f"facing must be FRONT or BACK, got {self.facing!r}") from None

    def estimator_descriptor(self) -> EstimatorDescriptor:
        if self.estimator.startswith("remote:"):
            return EstimatorDescriptor(name="remote",
                                       transport=TransportKind.REMOTE_SERVICE,
                                       endpoint=self.estimator.partition(":")[2])
        return EstimatorDescriptor(name=self.estimator,
                                   transport=TransportKind.IN_PROCESS_MOCK)


@dataclass
class StageRecord:
    name: str
    status: str  # SUCCEEDED | FAILED | SKIPPED_CACHED | INVALIDATED
    input_digests: list[str] = field(default_factory=list)
    artifacts: list[dict] = field(default_factory=list)
    elapsed_s: float = 0.0
    error: str | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "status": self.status,
                "input_digests": self.input_digests, "artifacts": self.artifacts,
                "elapsed_s": self.elapsed_s, "error": self.error, "extra": self.extra}

    @classmethod
    def from_dict(cls, d: dict) -> "StageRecord":
        return cls(name=d["name"], status=d["status"],
                   input_digests=d.get("input_digests", []),
                   artifacts=d.get("artifacts", []), elapsed_s=d.get("elapsed_s", 0.0),
                   error=d.get("error"), extra=d.get("extra", {}))


@dataclass
class RunManifest:
    """Append-only run record: stage history, ledger, and config snapshot."""

    run_id: str
    goal_text: str
    scene_summary: str
    config_snapshot: dict
    tier: str | None = None
    stages: list[StageRecord] = field(default_factory=list)
    ledger_entries: list[dict] = field(default_factory=list)
    report: dict | None = None
    regen_nonce: int = 0

    def latest(self, name: str) -> StageRecord | None:
        for record in reversed(self.stages):
            if record.name == name:
                return record
        return None

    def append(self, record: StageRecord) -> None:
        if record.status != "INVALIDATED":
            for pred in STAGE_ORDER[:STAGE_ORDER.index(record.name)]:
                latest = self.latest(pred)
                if latest is None or latest.status not in _OK_STATUSES:
                    raise ExoError(
                        f"stage {record.name} recorded before predecessor {pred} succeeded")
        self.stages.append(record)

    def to_dict(self) -> dict:
        return {"run_id": self.run_id, "goal_text": self.goal_text,
                "scene_summary": self.scene_summary, "tier": self.tier,
                "config": self.config_snapshot,
                "stages": [s.to_dict() for s in self.stages],
                "ledger": self.ledger_entries, "report": self.report,
                "regen_nonce": self.regen_nonce}

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        return cls(run_id=d["run_id"], goal_text=d["goal_text"],
                   scene_summary=d.get("scene_summary", ""),
                   config_snapshot=d.get("config", {}), tier=d.get("tier"),
                   stages=[StageRecord.from_dict(s) for s in d.get("stages", [])],
                   ledger_entries=d.get("ledger", []), report=d.get("report"),
                   regen_nonce=d.get("regen_nonce", 0))

    def save(self, runs_dir) -> Path:
        run_dir = Path(runs_dir) / self.run_id
        run_dir.mkdir(parents=True, exist_ok=True)
        path = run_dir / "manifest.json"
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))
        tmp.replace(path)
        return path

    @classmethod
    def load(cls, runs_dir, run_id: str) -> "RunManifest":
        path = Path(runs_dir) / run_id / "manifest.json"
        if not path.exists():
            raise ConfigError(f"no manifest for run {run_id!r} under {runs_dir}")
        return cls.from_dict(json.loads(path.read_text()))


def _backends(config: PipelineConfig):
    image = MockImageBackend() if config.image_backend == "mock" else LiveImageBackend()
    text = MockTextBackend() if config.text_backend == "mock" else LiveTextBackend()
    video = MockVideoBackend() if config.video_backend == "mock" else LiveVideoBackend()
    return image, text, video


def _empty_hands(clock: FrameClock, facing: FacingMode) -> HandPoseSequence:
    t = clock.frame_count
    return HandPoseSequence(clock, np.zeros((t, 2, 3)), np.zeros((t, 2)),
                            np.zeros((t, 2)), facing)


def _empty_states(clock: FrameClock) -> InteractionStateSequence:
    return InteractionStateSequence(clock, np.zeros((clock.frame_count, 2), dtype=np.uint8))


def _empty_body(clock: FrameClock) -> BodyMotionSequence:
    return BodyMotionSequence(clock, np.zeros((clock.frame_count, 24, 3)),
                              np.zeros((clock.frame_count, 3)))


class PipelineRun:
    """One staged execution bound to a manifest."""

    def __init__(self, config: PipelineConfig, task: TaskInstruction,
                 scene_image_path: str | None, manifest: RunManifest):
        self.config = config
        self.task = task
        self.manifest = manifest
        self.store = ArtifactStore(config.store_dir)
        self.ledger = LatencyLedger.from_entries(manifest.ledger_entries)
        self.gateway = Gateway(self.store, self.ledger)
        self.image_backend, self.text_backend, self.video_backend = _backends(config)
        self.estimator = config.estimator_descriptor()
        self.facing = FacingMode(config.facing)
        self.scene_image_path = scene_image_path
        self.run_dir = Path(config.runs_dir) / manifest.run_id
        # in-memory stage outputs, reloaded from artifacts on resume
        self.values: dict[str, object] = {}

    # --- artifact plumbing ----------------------------------------------------

    def _persist(self):
        self.manifest.ledger_entries = [e.to_dict() for e in self.ledger.entries()]
        self.manifest.save(self.config.runs_dir)

    def _ref_from_record(self, record: StageRecord, idx: int = 0) -> ArtifactRef:
        return ArtifactRef.from_dict(record.artifacts[idx])

    # --- stage bodies ----------------------------------------------------------

    def _do_transfer(self, record: StageRecord):
        if self.scene_image_path is None:
            raise ConfigError("scene image required for the transfer stage")
        scene_ref = self.store.import_file(self.scene_image_path, MediaType.PNG_IMAGE)
        prompt = build_embodiment_prompt(self.task)
        human = self.gateway.edit_image(scene_ref, prompt, self.image_backend)
        record.input_digests = [scene_ref.digest]
        record.artifacts = [human.to_dict()]
        self.values["human_image"] = human

    def _load_transfer(self, record: StageRecord):
        self.values["human_image"] = self._ref_from_record(record)

    def _do_decompose(self, record: StageRecord):
        client = self.gateway.text_client(self.text_backend)
        chain = decompose(self.task, client)
        chain_report = validate_chain(chain)
        if not chain_report.ok:
            raise ExoError(f"decomposed chain invalid: {chain_report}")
        tier = classify_difficulty(self.task, client)
        paragraph = render_chain_paragraph(chain.phrases())
        ref = self.store.put(paragraph.encode(), MediaType.TEXT)
        record.artifacts = [ref.to_dict()]
        record.extra = {"tier": tier.value, "steps": chain.phrases()}
        self.manifest.tier = tier.value
        self.values["chain"] = chain
        self.values["tier"] = tier

    def _load_decompose(self, record: StageRecord):
        steps = record.extra.get("steps")
        if steps is None:
            paragraph = self._ref_from_record(record).read_bytes().decode()
            steps = parse_chain_paragraph(paragraph)
        self.values["chain"] = ActionChain(
            steps=tuple(ActionStep.from_phrase(s) for s in steps),
            source_goal=self.task.goal_text)
        tier = record.extra.get("tier") or self.manifest.tier or "B"
        self.values["tier"] = DifficultyTier(tier)
        self.manifest.tier = tier

    def _do_fuse(self, record: StageRecord):
        client = self.gateway.text_client(self.text_backend)
        description = construct_description(self.task, self.values["chain"], client)
        ref = self.store.put(description.encode(), MediaType.TEXT)
        record.artifacts = [ref.to_dict()]
        self.values["description"] = description

    def _load_fuse(self, record: StageRecord):
        self.values["description"] = self._ref_from_record(record).read_bytes().decode()

    def _do_video(self, record: StageRecord):
        human: ArtifactRef = self.values["human_image"]
        prompt = build_video_prompt(self.values["tier"], self.values["description"])
        if self.manifest.regen_nonce:
            # salting the cache key forces a fresh generation on regen
            prompt = replace(prompt, preamble=prompt.preamble
                             + f"\n[candidate {self.manifest.regen_nonce}]")
        clip = self.gateway.run_video_job(human, prompt, self.video_backend,
                                          timeout_s=self.config.video_timeout_s)
        record.input_digests = [human.digest]
        record.artifacts = [clip.to_dict()]
        self.values["clip_ref"] = clip

    def _load_video(self, record: StageRecord):
        self.values["clip_ref"] = self._ref_from_record(record)

    def _clip(self) -> VideoClip:
        ref: ArtifactRef = self.values["clip_ref"]
        return VideoClip(artifact=ref, fps=ref.fps or 24.0,
                         frame_count=ref.frame_count or 240,
                         facing_hint=self.facing)

    def _do_body_est(self, record: StageRecord):
        clip = self._clip()
        start = time.monotonic()
        body = estimate_body(clip, self.estimator)
        self.ledger.add(STAGE_BODY, MetricKind.PER_VIDEO_SECOND,
                        max(time.monotonic() - start, 1e-6),
                        video_seconds=clip.duration_s)
        archive = write_archive(InteractionAwareMotion(
            body, _empty_hands(body.clock, self.facing), _empty_states(body.clock),
            source_fps=clip.fps))
        ref = self.store.put(archive, MediaType.MOTION_ARCHIVE)
        record.input_digests = [self.values["clip_ref"].digest]
        record.artifacts = [ref.to_dict()]
        self.values["body"] = body

    def _load_body_est(self, record: StageRecord):
        data = self._ref_from_record(record).read_bytes()
        self.values["body"] = read_archive(data).body

    def _do_hand_est(self, record: StageRecord):
        clip = self._clip()
        start = time.monotonic()
        hands = estimate_hands(clip, self.facing, self.estimator)
        self.ledger.add(STAGE_HANDS, MetricKind.PER_VIDEO_SECOND,
                        max(time.monotonic() - start, 1e-6),
                        video_seconds=clip.duration_s)
        if self.estimator.transport is TransportKind.IN_PROCESS_MOCK:
            # scripted oracles carry their own exact states
            impl = resolve_estimator(self.estimator)
            states = impl.states(clip, self.facing)
        else:
            states = quantize_states(hands, self.config.open_thresh,
                                     self.config.closed_thresh)
        archive = write_archive(InteractionAwareMotion(
            _empty_body(hands.clock), hands, states, source_fps=clip.fps))
        ref = self.store.put(archive, MediaType.MOTION_ARCHIVE)
        record.input_digests = [self.values["clip_ref"].digest]
        record.artifacts = [ref.to_dict()]
        self.values["hands"] = hands
        self.values["states"] = states

    def _load_hand_est(self, record: StageRecord):
        data = self._ref_from_record(record).read_bytes()
        motion = read_archive(data)
        self.values["hands"] = motion.hands
        self.values["states"] = motion.states

    def _do_assemble(self, record: StageRecord):
        motion = assemble(self.values["body"], self.values["hands"],
                          self.values["states"],
                          min_dwell_frames=self.config.min_dwell_frames)
        archive = write_archive(motion)
        ref = self.store.put(archive, MediaType.MOTION_ARCHIVE)
        record.artifacts = [ref.to_dict()]
        record.extra = {"frame_count": motion.clock.frame_count,
                        "fps": motion.clock.fps}
        self.values["motion"] = motion

    def _load_assemble(self, record: StageRecord):
        self.values["motion"] = read_archive(self._ref_from_record(record).read_bytes())

    def _target_spec(self) -> TargetSpec:
        if self.config.target_x is not None and self.config.target_y is not None:
            return TargetSpec(target_position=(self.config.target_x, self.config.target_y))
        impl = resolve_estimator(self.estimator)
        if isinstance(impl, OracleEstimator):
            clip = self._clip()
            script = replace(impl.script, fps=clip.fps, frame_count=clip.frame_count,
                             facing=self.facing)
            gt = ground_truth(script, control_fps=self.config.control_fps)
            grasps = tuple(GraspTarget(hand=e.hand, height_m=e.target_height_m)
                           for e in gt.grasp_events)
            return TargetSpec(
                target_position=(float(gt.final_root_position[0]),
                                 float(gt.final_root_position[1])),
                grasp_targets=grasps)
        return TargetSpec()

    def _do_stream_replay(self, record: StageRecord):
        motion: InteractionAwareMotion = self.values["motion"]
        self.run_dir.mkdir(parents=True, exist_ok=True)
        stream_path = self.run_dir / "stream.exoq"
        calib = default_calibration()
        with FileSink(stream_path) as sink:
            summary = stream(motion, self.config.control_fps, calib, sink)
        record.extra["frames_sent"] = summary.frames_sent
        if self.config.replay_enabled:
            model = default_model()
            tolerances = Tolerances(height_tol_m=self.config.height_tol_m,
                                    dist_tol_m=self.config.dist_tol_m)
            report = replay(str(stream_path), model, self._target_spec(), tolerances)
            (self.run_dir / "report.txt").write_text(render_report(report))
            (self.run_dir / "frames.csv").write_text(per_frame_table(report))
            record.extra["classification"] = report.classification.value
            self.manifest.report = {
                "classification": report.classification.value,
                "frame_count": report.frame_count,
                "foot_slide_total_m": report.foot_slide_total,
                "final_position_error_m": report.final_position_error,
                "joint_limit_violations": len(report.joint_limit_violations),
                "velocity_violations": len(report.velocity_violations),
                "hand_height_errors": [
                    {"hand": e.hand, "frame": e.frame, "error_m": e.error_m}
                    for e in report.hand_height_errors],
            }
        self.values["stream_path"] = str(stream_path)

    def _load_stream_replay(self, record: StageRecord):
        self.values["stream_path"] = str(self.run_dir / "stream.exoq")

    # --- driver ----------------------------------------------------------------

    _DO = {"transfer": _do_transfer, "decompose": _do_decompose, "fuse": _do_fuse,
           "video": _do_video, "body_est": _do_body_est, "hand_est": _do_hand_est,
           "assemble": _do_assemble, "stream_replay": _do_stream_replay}
    _LOAD = {"transfer": _load_transfer, "decompose": _load_decompose,
             "fuse": _load_fuse, "video": _load_video, "body_est": _load_body_est,
             "hand_est": _load_hand_est, "assemble": _load_assemble,
             "stream_replay": _load_stream_replay}

    def execute(self, until: str | None = None) -> RunManifest:
        for name in STAGE_ORDER:
            prior = self.manifest.latest(name)
            if prior is not None and prior.status in _OK_STATUSES:
                self._LOAD[name](self, prior)
                self.manifest.append(StageRecord(
                    name=name, status="SKIPPED_CACHED",
                    input_digests=prior.input_digests, artifacts=prior.artifacts,
                    extra=prior.extra))
                self._persist()
            else:
                record = StageRecord(name=name, status="SUCCEEDED")
                start = time.monotonic()
                try:
                    self._DO[name](self, record)
                except Exception as exc:
                    record.status = "FAILED"
                    record.error = f"{type(exc).__name__}: {exc}"
                    record.elapsed_s = time.monotonic() - start
                    self.manifest.append(record)
                    self._persist()
                    raise StageFailure(name, exc) from exc
                record.elapsed_s = time.monotonic() - start
                self.manifest.append(record)
                self._persist()
            if until is not None and name == until:
                break
        return self.manifest


def run_pipeline(config: PipelineConfig, task: TaskInstruction,
                 scene_image: str | None, run_id: str | None = None,
                 resume: str | None = None, until: str | None = None,
                 env: dict | None = None) -> RunManifest:
    """Execute (or resume) a full pipeline run; returns the final manifest."""
    import os
    config.validate(env if env is not None else os.environ)
    if until is not None and until not in STAGE_ORDER:
        raise ConfigError(f"unknown stage {until!r}")
    if resume is not None:
        manifest = RunManifest.load(config.runs_dir, resume)
    else:
        manifest = RunManifest(
            run_id=run_id or uuid.uuid4().hex[:12],
            goal_text=task.goal_text, scene_summary=task.scene_summary,
            config_snapshot=config.to_dict())
        manifest.save(config.runs_dir)
    run = PipelineRun(config, task, scene_image, manifest)
    return run.execute(until=until)


def regen_video(config: PipelineConfig, run_id: str,
                env: dict | None = None) -> RunManifest:
    """Operator-driven regeneration: invalidate the video stage and
    everything downstream, bump the cache salt, and re-run."""
    manifest = RunManifest.load(config.runs_dir, run_id)
    manifest.regen_nonce += 1
    start = STAGE_ORDER.index("video")
    for name in reversed(STAGE_ORDER[start:]):
        if manifest.latest(name) is not None:
            manifest.append(StageRecord(name=name, status="INVALIDATED",
                                        extra={"reason": "regen-video"}))
    manifest.save(config.runs_dir)
    task = TaskInstruction(manifest.goal_text, manifest.scene_summary)
    run = PipelineRun(config, task, None, manifest)
    return run.execute()


def latency_report_text(manifest: RunManifest, video_seconds: float = 10.0) -> str:
    """Render the two-metric latency table plus the projected total(d)."""
    ledger = LatencyLedger.from_entries(manifest.ledger_entries)
    return report_latency(ledger).render(video_seconds)
