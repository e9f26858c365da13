"""Kinematic replay of a command stream: feasibility checks, execution-error
metrics, and failure classification.

Replay is deterministic and purely kinematic: it validates joint/velocity
limits and task-space geometry (foot slide, grasp-height alignment, final
position), which is what separates execution failures from upstream
generation/estimation failures.
"""
from __future__ import annotations

import enum
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from ..errors import CodecError
from ..motion.types import SMPL_JOINT_COUNT
from ..bridge.stream import iter_exoq
from .metrics import foot_slide_increments, stance_mask
from .model import HumanoidModel, ankle_positions, wrist_positions


class FailureClass(enum.Enum):
    SUCCESS = "SUCCESS"
    EXECUTION_HEIGHT = "EXECUTION_HEIGHT"
    EXECUTION_DISTANCE = "EXECUTION_DISTANCE"
    INFEASIBLE_LIMITS = "INFEASIBLE_LIMITS"
    STREAM_FAULT = "STREAM_FAULT"


@dataclass(frozen=True)
class GraspTarget:
    hand: str          # "left" | "right"
    height_m: float    # expected wrist height at grasp onset


@dataclass(frozen=True)
class TargetSpec:
    """Declared task geometry the replay is scored against."""

    target_position: tuple[float, float] | None = None  # world (x, y)
    grasp_targets: tuple[GraspTarget, ...] = ()


@dataclass(frozen=True)
class Tolerances:
    height_tol_m: float = 0.03   # scale of the hand-height compensation shims
    dist_tol_m: float = 0.10


@dataclass(frozen=True)
class LimitViolation:
    frame: int
    joint: int
    magnitude: float
    lo: float
    hi: float


@dataclass(frozen=True)
class VelocityViolation:
    frame: int
    joint: int
    rate: float
    limit: float


@dataclass(frozen=True)
class HandHeightEvent:
    event_index: int
    hand: str
    frame: int
    wrist_height_m: float
    target_height_m: float
    error_m: float


@dataclass
class FeasibilityReport:
    frame_count: int = 0
    joint_limit_violations: list[LimitViolation] = field(default_factory=list)
    velocity_violations: list[VelocityViolation] = field(default_factory=list)
    foot_slide_increments: np.ndarray = field(default_factory=lambda: np.zeros(0))
    foot_slide_total: float = 0.0
    final_position_error: float | None = None
    hand_height_errors: list[HandHeightEvent] = field(default_factory=list)
    closure_event_counts: dict[str, int] = field(default_factory=dict)
    stream_fault: str | None = None
    classification: FailureClass = FailureClass.SUCCESS
    per_frame: dict[str, np.ndarray] = field(default_factory=dict)


def classify(report: FeasibilityReport, tolerances: Tolerances) -> FailureClass:
    """Precedence: stream fault > limit infeasibility > grasp-height error >
    travel-distance error > success."""
    if report.stream_fault is not None:
        return FailureClass.STREAM_FAULT
    if report.joint_limit_violations or report.velocity_violations:
        return FailureClass.INFEASIBLE_LIMITS
    if any(abs(e.error_m) > tolerances.height_tol_m for e in report.hand_height_errors):
        return FailureClass.EXECUTION_HEIGHT
    if (report.final_position_error is not None
            and report.final_position_error > tolerances.dist_tol_m):
        return FailureClass.EXECUTION_DISTANCE
    return FailureClass.SUCCESS


def _nearest_pose_labels(hand_joints: np.ndarray, model: HumanoidModel) -> np.ndarray:
    """Classify [T, 7] hand joints by nearest calibrated pose: 0/1/2."""
    calib = model.hand_calibration
    poses = np.stack([calib.open_pose.joints, calib.half_pose.joints,
                      calib.closed_pose.joints]).astype(np.float64)
    dists = np.linalg.norm(hand_joints[:, None, :] - poses[None, :, :], axis=2)
    return np.argmin(dists, axis=1)


def replay(source, model: HumanoidModel, task_spec: TargetSpec,
           tolerances: Tolerances | None = None) -> FeasibilityReport:
    """Integrate a stream and score it against the declared task geometry.

    `source` is a .exoq path, raw bytes, or an iterable of decoded frames.
    A codec failure mid-stream yields a STREAM_FAULT report that retains the
    metrics of the frames decoded so far.
    """
    tolerances = tolerances or Tolerances()
    report = FeasibilityReport()
    frames = []
    try:
        for frame in iter_exoq(source) if not _is_frame_iterable(source) else source:
            frames.append(frame)
    except CodecError as exc:
        report.stream_fault = str(exc)

    report.frame_count = len(frames)
    if not frames:
        report.classification = classify(report, tolerances)
        return report

    rots = np.stack([f.rotations for f in frames]).astype(np.float64)
    pos = np.stack([f.root_position for f in frames]).astype(np.float64)
    times = np.array([f.timestamp_s for f in frames])

    # joint angle limits on rotation magnitude
    mags = np.linalg.norm(rots, axis=2)
    lo = model.joint_angle_limits[:, 0]
    hi = model.joint_angle_limits[:, 1]
    bad = (mags < lo[None, :] - 1e-9) | (mags > hi[None, :] + 1e-9)
    for f, j in np.argwhere(bad).tolist():
        report.joint_limit_violations.append(
            LimitViolation(f, j, float(mags[f, j]), float(lo[j]), float(hi[j])))

    # velocity limits by finite differences at the stream rate
    if len(frames) >= 2:
        dts = np.diff(times)
        safe = dts > 0
        for j in range(SMPL_JOINT_COUNT):
            rj = Rotation.from_rotvec(rots[:, j])
            ang = (rj[:-1].inv() * rj[1:]).magnitude()
            rates = np.where(safe, ang / np.where(safe, dts, 1.0), 0.0)
            over = rates > model.joint_velocity_limits[j] + 1e-9
            for i in np.nonzero(over)[0].tolist():
                report.velocity_violations.append(
                    VelocityViolation(i + 1, j, float(rates[i]),
                                      float(model.joint_velocity_limits[j])))

    slide = foot_slide_increments(frames, model)
    report.foot_slide_increments = slide
    report.foot_slide_total = float(slide.sum())

    ankles = {side: ankle_positions(rots, pos, model, side) for side in ("left", "right")}
    wrists = {side: wrist_positions(rots, pos, model, side) for side in ("left", "right")}

    # grasp closure events: nearest-calibration-pose label transitions into closed
    pending = {"left": [g.height_m for g in task_spec.grasp_targets if g.hand == "left"],
               "right": [g.height_m for g in task_spec.grasp_targets if g.hand == "right"]}
    event_index = 0
    for side in ("left", "right"):
        joints = np.stack([
            (f.left_hand if side == "left" else f.right_hand).joints for f in frames
        ]).astype(np.float64)
        labels = _nearest_pose_labels(joints, model)
        onsets = np.nonzero((labels[1:] == 2) & (labels[:-1] != 2))[0] + 1
        report.closure_event_counts[side] = int(len(onsets))
        for k, f in enumerate(onsets.tolist()):
            if k < len(pending[side]):
                target_h = pending[side][k]
                wrist_h = float(wrists[side][f, 2])
                report.hand_height_errors.append(HandHeightEvent(
                    event_index=event_index, hand=side, frame=f,
                    wrist_height_m=wrist_h, target_height_m=target_h,
                    error_m=wrist_h - target_h))
            event_index += 1

    if task_spec.target_position is not None:
        tx, ty = task_spec.target_position
        report.final_position_error = float(np.hypot(pos[-1, 0] - tx, pos[-1, 1] - ty))

    report.per_frame = {
        "timestamp_s": times,
        "root_x": pos[:, 0], "root_y": pos[:, 1], "root_z": pos[:, 2],
        "left_ankle_z": ankles["left"][:, 2],
        "right_ankle_z": ankles["right"][:, 2],
        "left_stance": stance_mask(ankles["left"], model).astype(np.int8),
        "right_stance": stance_mask(ankles["right"], model).astype(np.int8),
        "foot_slide_m": slide,
    }
    report.classification = classify(report, tolerances)
    return report


def _is_frame_iterable(source) -> bool:
    if isinstance(source, (str, bytes, bytearray)) or hasattr(source, "__fspath__"):
        return False
    return True


def render_report(report: FeasibilityReport) -> str:
    """Deterministic text rendering (no wall-clock content)."""
    out = io.StringIO()
    out.write("feasibility report\n")
    out.write(f"classification: {report.classification.value}\n")
    out.write(f"frames: {report.frame_count}\n")
    out.write(f"joint_limit_violations: {len(report.joint_limit_violations)}\n")
    for v in report.joint_limit_violations[:20]:
        out.write(f"  frame {v.frame} joint {v.joint} "
                  f"magnitude {v.magnitude:.4f} outside [{v.lo:.3f}, {v.hi:.3f}]\n")
    out.write(f"velocity_violations: {len(report.velocity_violations)}\n")
    for v in report.velocity_violations[:20]:
        out.write(f"  frame {v.frame} joint {v.joint} "
                  f"rate {v.rate:.3f} > {v.limit:.3f} rad/s\n")
    out.write(f"foot_slide_total_m: {report.foot_slide_total:.6f}\n")
    if report.final_position_error is not None:
        out.write(f"final_position_error_m: {report.final_position_error:.6f}\n")
    out.write(f"closure_events: left={report.closure_event_counts.get('left', 0)} "
              f"right={report.closure_event_counts.get('right', 0)}\n")
    for e in report.hand_height_errors:
        out.write(f"  grasp {e.event_index} {e.hand} frame {e.frame} "
                  f"wrist {e.wrist_height_m:.4f} target {e.target_height_m:.4f} "
                  f"error {e.error_m:+.4f}\n")
    if report.stream_fault is not None:
        out.write(f"stream_fault: {report.stream_fault}\n")
    return out.getvalue()


def per_frame_table(report: FeasibilityReport) -> str:
    """Flat per-frame metrics as CSV, suitable for plotting."""
    cols = list(report.per_frame)
    if not cols:
        return "frame\n"
    out = io.StringIO()
    out.write("frame," + ",".join(cols) + "\n")
    n = len(next(iter(report.per_frame.values())))
    for i in range(n):
        row = [f"{report.per_frame[c][i]:.6f}" if report.per_frame[c].dtype.kind == "f"
               else str(int(report.per_frame[c][i])) for c in cols]
        out.write(f"{i}," + ",".join(row) + "\n")
    return out.getvalue()
