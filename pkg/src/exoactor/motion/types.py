"""Motion stream datatypes.

All arrays are stored as little-endian float32 (uint8 for grasp states) so
that archive serialization round-trips bit-exactly.  Instances are immutable
after construction and safe to share across threads; operations return new
objects.

Stated invariants (checked by :func:`exoactor.motion.ops.validate`, not by
constructors, so that corrupted values coming off the wire can be inspected
rather than crashing):

* all sequence lengths equal their clock's frame_count
* axis-angle magnitudes are canonical (<= pi), no NaN/Inf anywhere
* apertures and confidences lie in [0, 1]
* grasp states are in {0, 1, 2}
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgument

SMPL_JOINT_COUNT = 24
HAND_COLUMNS = 2


class FacingMode(enum.Enum):
    """Camera-relative subject orientation.

    FRONT: hand columns are anatomical left/right.
    BACK: hand columns are image-plane left/right (mirror of anatomical).
    """

    FRONT = "FRONT"
    BACK = "BACK"


class HandState(enum.IntEnum):
    OPEN = 0
    HALF_OPEN = 1
    CLOSED = 2


@dataclass(frozen=True)
class FrameClock:
    """Uniform sampling grid: frame i sits at time i / fps."""

    fps: float
    frame_count: int

    def __post_init__(self):
        if not self.fps > 0:
            raise InvalidArgument(f"fps must be positive, got {self.fps}")
        if int(self.frame_count) < 1 or int(self.frame_count) != self.frame_count:
            raise InvalidArgument(f"frame_count must be an integer >= 1, got {self.frame_count}")
        object.__setattr__(self, "fps", float(self.fps))
        object.__setattr__(self, "frame_count", int(self.frame_count))

    @property
    def duration_s(self) -> float:
        return (self.frame_count - 1) / self.fps

    def times(self) -> np.ndarray:
        return np.arange(self.frame_count, dtype=np.float64) / self.fps


@dataclass(frozen=True)
class HandPoseDescriptor:
    """Single-hand single-frame descriptor.

    wrist_rotation: axis-angle, radians, camera frame.
    aperture: normalized fingertip spread, 0 = fully closed, 1 = fully open.
    confidence: estimator confidence in [0, 1]; below 0.5 means the frame
    should not be trusted for state quantization.
    """

    wrist_rotation: np.ndarray
    aperture: float
    confidence: float


def _as_f32(a, shape, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float32)
    if arr.shape != shape:
        raise InvalidArgument(f"{name} must have shape {shape}, got {arr.shape}")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class BodyMotionSequence:
    """Whole-body kinematics: per-frame joint rotations plus root positions.

    joint_rotations: [T, 24, 3] axis-angle radians, SMPL joint order,
    row 0 is the root (pelvis) orientation.
    root_positions: [T, 3] meters, world frame: z-up, +x along the initial
    facing direction of the subject.
    """

    clock: FrameClock
    joint_rotations: np.ndarray
    root_positions: np.ndarray

    def __post_init__(self):
        t = self.clock.frame_count
        object.__setattr__(self, "joint_rotations",
                           _as_f32(self.joint_rotations, (t, SMPL_JOINT_COUNT, 3), "joint_rotations"))
        object.__setattr__(self, "root_positions",
                           _as_f32(self.root_positions, (t, 3), "root_positions"))


@dataclass(frozen=True, eq=False)
class HandPoseSequence:
    """Bilateral hand descriptors over time, stored column-wise ([T, 2]).

    Column meaning depends on `facing` (see FacingMode).  Struct-of-arrays
    layout; use descriptor() for a single-frame view.
    """

    clock: FrameClock
    wrist_rotations: np.ndarray  # [T, 2, 3] axis-angle
    apertures: np.ndarray        # [T, 2]
    confidences: np.ndarray      # [T, 2]
    facing: FacingMode

    def __post_init__(self):
        t = self.clock.frame_count
        object.__setattr__(self, "wrist_rotations",
                           _as_f32(self.wrist_rotations, (t, HAND_COLUMNS, 3), "wrist_rotations"))
        object.__setattr__(self, "apertures",
                           _as_f32(self.apertures, (t, HAND_COLUMNS), "apertures"))
        object.__setattr__(self, "confidences",
                           _as_f32(self.confidences, (t, HAND_COLUMNS), "confidences"))
        if not isinstance(self.facing, FacingMode):
            raise InvalidArgument(f"facing must be a FacingMode, got {self.facing!r}")

    def descriptor(self, frame: int, column: int) -> HandPoseDescriptor:
        return HandPoseDescriptor(
            wrist_rotation=self.wrist_rotations[frame, column].copy(),
            aperture=float(self.apertures[frame, column]),
            confidence=float(self.confidences[frame, column]),
        )


@dataclass(frozen=True, eq=False)
class InteractionStateSequence:
    """Discrete per-hand grasp states: 0 open, 1 half-open, 2 closed."""

    clock: FrameClock
    states: np.ndarray  # [T, 2] uint8

    def __post_init__(self):
        t = self.clock.frame_count
        arr = np.asarray(self.states, dtype=np.uint8)
        if arr.shape != (t, HAND_COLUMNS):
            raise InvalidArgument(f"states must have shape {(t, HAND_COLUMNS)}, got {arr.shape}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "states", arr)


@dataclass(frozen=True, eq=False)
class InteractionAwareMotion:
    """Synchronized body kinematics, hand descriptors, and grasp states.

    After synchronize()/assemble() all three clocks are identical; validate()
    reports any divergence on hand-built instances.
    """

    body: BodyMotionSequence
    hands: HandPoseSequence
    states: InteractionStateSequence
    source_fps: float = field(default=0.0)

    def __post_init__(self):
        if self.source_fps == 0.0:
            object.__setattr__(self, "source_fps", float(self.hands.clock.fps))

    @property
    def clock(self) -> FrameClock:
        return self.body.clock

    @property
    def facing(self) -> FacingMode:
        return self.hands.facing
