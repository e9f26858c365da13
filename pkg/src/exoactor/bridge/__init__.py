from .hands import (
    HandJointTargets,
    HandCalibration,
    RobotHandTrack,
    default_calibration,
    resolve_handedness,
    state_to_joints,
)
from .codec import RobotCommandFrame, encode_frame, decode_frame, FRAME_SIZE, FRAME_MAGIC
from .stream import (
    FrameSink,
    FileSink,
    BoundedQueueSink,
    ReferenceWindow,
    StreamSummary,
    make_reference_window,
    stream,
    iter_exoq,
    read_exoq,
)

__all__ = [
    "HandJointTargets",
    "HandCalibration",
    "RobotHandTrack",
    "default_calibration",
    "resolve_handedness",
    "state_to_joints",
    "RobotCommandFrame",
    "encode_frame",
    "decode_frame",
    "FRAME_SIZE",
    "FRAME_MAGIC",
    "FrameSink",
    "FileSink",
    "BoundedQueueSink",
    "ReferenceWindow",
    "StreamSummary",
    "make_reference_window",
    "stream",
    "iter_exoq",
    "read_exoq",
]
