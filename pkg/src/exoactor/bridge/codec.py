"""Fixed-layout binary codec for executor command frames.

Every frame encodes to exactly FRAME_SIZE bytes, little-endian:

    offset  size  field
    0       4     magic b"EXO1"
    4       4     frame_index    uint32
    8       8     timestamp_s    float64
    16      12    root_position  3 x float32
    28      288   rotations      24 x 3 x float32 (row 0 = root orientation)
    316     56    hand targets   2 x 7 x float32 (left then right)
    372     2     zero padding

Constant frame size lets consumers preallocate and detect loss by length.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from ..errors import CodecError
from .hands import HandJointTargets

FRAME_MAGIC = b"EXO1"
_STRUCT = struct.Struct("<4sId3f72f14f2x")
FRAME_SIZE = _STRUCT.size  # 374


@dataclass(frozen=True, eq=False)
class RobotCommandFrame:
    """One executor message: root pose, joint rotations, both hand targets."""

    frame_index: int
    timestamp_s: float
    root_position: np.ndarray   # [3] f32, meters
    rotations: np.ndarray       # [24, 3] f32 axis-angle; row 0 = root orientation
    left_hand: HandJointTargets
    right_hand: HandJointTargets

    def __post_init__(self):
        pos = np.asarray(self.root_position, dtype=np.float32).reshape(3).copy()
        rot = np.asarray(self.rotations, dtype=np.float32).reshape(24, 3).copy()
        pos.flags.writeable = False
        rot.flags.writeable = False
        object.__setattr__(self, "root_position", pos)
        object.__setattr__(self, "rotations", rot)

    @property
    def root_orientation(self) -> np.ndarray:
        return self.rotations[0]

    def __eq__(self, other):
        return (isinstance(other, RobotCommandFrame)
                and self.frame_index == other.frame_index
                and self.timestamp_s == other.timestamp_s
                and np.array_equal(self.root_position, other.root_position)
                and np.array_equal(self.rotations, other.rotations)
                and self.left_hand == other.left_hand
                and self.right_hand == other.right_hand)


def encode_frame(frame: RobotCommandFrame) -> bytes:
    return _STRUCT.pack(
        FRAME_MAGIC,
        frame.frame_index,
        frame.timestamp_s,
        *frame.root_position.tolist(),
        *frame.rotations.reshape(-1).tolist(),
        *frame.left_hand.joints.tolist(),
        *frame.right_hand.joints.tolist(),
    )


def decode_frame(data: bytes) -> RobotCommandFrame:
    if len(data) != FRAME_SIZE:
        raise CodecError(f"frame buffer must be {FRAME_SIZE} bytes, got {len(data)}",
                         expected=FRAME_SIZE, actual=len(data))
    fields = _STRUCT.unpack(data)
    if fields[0] != FRAME_MAGIC:
        raise CodecError(f"bad frame magic {fields[0]!r}")
    values = np.asarray(fields[3:], dtype=np.float32)
    return RobotCommandFrame(
        frame_index=fields[1],
        timestamp_s=fields[2],
        root_position=values[:3],
        rotations=values[3:75].reshape(24, 3),
        left_hand=HandJointTargets(values[75:82]),
        right_hand=HandJointTargets(values[82:89]),
    )
