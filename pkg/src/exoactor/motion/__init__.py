from .types import (
    FrameClock,
    FacingMode,
    HandState,
    HandPoseDescriptor,
    BodyMotionSequence,
    HandPoseSequence,
    InteractionStateSequence,
    InteractionAwareMotion,
    SMPL_JOINT_COUNT,
)
from .ops import resample, synchronize, smooth_states, validate
from .archive import read_archive, write_archive, ARCHIVE_MAGIC

__all__ = [
    "FrameClock",
    "FacingMode",
    "HandState",
    "HandPoseDescriptor",
    "BodyMotionSequence",
    "HandPoseSequence",
    "InteractionStateSequence",
    "InteractionAwareMotion",
    "SMPL_JOINT_COUNT",
    "resample",
    "synchronize",
    "smooth_states",
    "validate",
    "read_archive",
    "write_archive",
    "ARCHIVE_MAGIC",
]
