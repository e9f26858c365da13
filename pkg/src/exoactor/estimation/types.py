"""Estimator-facing datatypes: clips, backend descriptors, and the scripted
scenario family used by the synthetic oracle."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgument
from ..motion.types import FacingMode


class TransportKind(enum.Enum):
    IN_PROCESS_MOCK = "IN_PROCESS_MOCK"
    REMOTE_SERVICE = "REMOTE_SERVICE"


@dataclass(frozen=True)
class EstimatorDescriptor:
    """Names an estimation backend.

    IN_PROCESS_MOCK names read "oracle:<FAMILY>[:key=value,...]", e.g.
    "oracle:WALK_LINE:walk_speed=0.6".  REMOTE_SERVICE requires an endpoint.
    """

    name: str
    transport: TransportKind
    endpoint: str | None = None

    def __post_init__(self):
        if self.transport is TransportKind.REMOTE_SERVICE and not self.endpoint:
            raise InvalidArgument("REMOTE_SERVICE descriptor requires an endpoint")


@dataclass(frozen=True)
class VideoClip:
    """A generated clip plus its declared timing (fps * duration must agree
    with frame_count to within one frame)."""

    artifact: object  # gateway ArtifactRef (duck-typed to avoid the import)
    fps: float
    frame_count: int
    facing_hint: FacingMode | None = None

    def __post_init__(self):
        if not self.fps > 0:
            raise InvalidArgument(f"clip fps must be positive, got {self.fps}")
        if self.frame_count < 1:
            raise InvalidArgument(f"clip frame_count must be >= 1, got {self.frame_count}")
        declared_fps = getattr(self.artifact, "fps", None)
        declared_frames = getattr(self.artifact, "frame_count", None)
        if declared_fps and declared_frames:
            implied = declared_fps * (self.frame_count / self.fps)
            if abs(implied - declared_frames) > declared_fps / self.fps + 1.0:
                raise InvalidArgument(
                    f"clip timing inconsistent: artifact declares {declared_frames} frames "
                    f"@ {declared_fps} fps vs clip {self.frame_count} @ {self.fps}")

    @property
    def duration_s(self) -> float:
        return self.frame_count / self.fps


class ScenarioFamily(enum.Enum):
    STAND = "STAND"
    WALK_LINE = "WALK_LINE"
    WALK_TURN = "WALK_TURN"
    REACH_GRASP_PLACE = "REACH_GRASP_PLACE"


@dataclass(frozen=True)
class ScenarioScript:
    """Closed-form motion script with exact known ground truth.

    Deterministic given (scenario, seed): the same script always produces
    bit-identical output.  When frame_count is given it overrides duration_s
    (frames sampled at i / fps), matching clip-sized estimation.
    """

    family: ScenarioFamily
    fps: float = 24.0
    duration_s: float = 10.0
    frame_count: int | None = None
    seed: int = 0
    facing: FacingMode = FacingMode.FRONT
    walk_speed: float = 0.6            # m/s
    turn_rate_deg_s: float = 15.0      # WALK_TURN heading rate
    grasp_hand: str = "right"          # anatomical side performing the grasp
    grasp_target_height: float = 0.90  # declared target wrist height (m)
    wrist_height_offset: float = 0.0   # scripted error injected on top
    reach_forward: float = 0.25        # grasp point ahead of the shoulder (m)

    def __post_init__(self):
        if not self.fps > 0:
            raise InvalidArgument("fps must be positive")
        if self.frame_count is None and not self.duration_s > 0:
            raise InvalidArgument("duration_s must be positive")
        if self.grasp_hand not in ("left", "right"):
            raise InvalidArgument("grasp_hand must be 'left' or 'right'")

    @property
    def resolved_frame_count(self) -> int:
        if self.frame_count is not None:
            return int(self.frame_count)
        return int(round(self.fps * self.duration_s)) + 1

    def times(self) -> np.ndarray:
        return np.arange(self.resolved_frame_count, dtype=np.float64) / self.fps


@dataclass(frozen=True)
class GraspEvent:
    hand: str               # robot side after handedness resolution
    onset_time_s: float
    wrist_height_m: float   # scripted actual height (includes any offset)
    target_height_m: float  # declared task height (offset excluded)


@dataclass(frozen=True)
class GroundTruth:
    """Analytic truth for a scenario, for scoring replays against."""

    final_root_position: np.ndarray          # [3]
    final_displacement_m: float              # horizontal travel
    state_transitions: dict = field(default_factory=dict)  # robot side -> count
    grasp_events: tuple[GraspEvent, ...] = ()
    foot_slide_bound_m: float | None = None  # None when no bound is promised
