"""Event-queue streaming: resample, resolve hands, encode, emit.

The sink contract is single-producer/single-consumer with bounded capacity
and blocking backpressure; a .exoq file is just the same frames concatenated.
"""
from __future__ import annotations

import os
import queue
from dataclasses import dataclass
from typing import Iterable, Iterator, Protocol

from ..errors import InvalidArgument, StreamError
from ..motion.ops import resample
from ..motion.types import InteractionAwareMotion
from .codec import FRAME_SIZE, RobotCommandFrame, decode_frame, encode_frame
from .hands import HandCalibration, state_to_joints, resolve_handedness


class FrameSink(Protocol):
    def put(self, data: bytes) -> None: ...

    @property
    def backlog(self) -> int: ...


class FileSink:
    """Writes concatenated FRAME_SIZE frames to a .exoq file."""

    def __init__(self, path):
        self._fh = open(path, "wb")

    @property
    def backlog(self) -> int:
        return 0

    def put(self, data: bytes) -> None:
        self._fh.write(data)

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class BoundedQueueSink:
    """In-memory bounded queue with blocking backpressure.

    put() blocks until space frees up or deadline_s elapses; a missed
    deadline surfaces as queue.Full and the producer raises StreamError.
    """

    def __init__(self, capacity: int, deadline_s: float = 5.0):
        self._q: queue.Queue[bytes] = queue.Queue(maxsize=capacity)
        self.deadline_s = deadline_s

    @property
    def backlog(self) -> int:
        return self._q.qsize()

    def put(self, data: bytes) -> None:
        self._q.put(data, timeout=self.deadline_s)

    def get(self, timeout: float | None = None) -> bytes:
        return self._q.get(timeout=timeout)

    def empty(self) -> bool:
        return self._q.empty()


@dataclass(frozen=True)
class StreamSummary:
    frames_sent: int
    peak_backlog: int
    control_fps: float


@dataclass(frozen=True)
class ReferenceWindow:
    """Contiguous future-reference horizon: frames t .. t+k inclusive."""

    start_index: int
    horizon: int
    frames: tuple[RobotCommandFrame, ...]


def make_reference_window(frames: list[RobotCommandFrame], t: int, k: int) -> ReferenceWindow:
    if t < 0 or k < 0 or t + k >= len(frames):
        raise IndexError(f"window [{t}, {t}+{k}] out of range for {len(frames)} frames")
    return ReferenceWindow(start_index=t, horizon=k, frames=tuple(frames[t:t + k + 1]))


def stream(motion: InteractionAwareMotion, control_fps: float, calib: HandCalibration,
           sink: FrameSink, rate_limit_hands: bool = True) -> StreamSummary:
    """Emit the motion as command frames at the control rate.

    Timestamps are exactly frame_index / control_fps.  Hand targets follow
    the grasp-state poses; with rate limiting on, per-joint motion is capped
    at the calibration's max speed (frame 0 starts on its state's pose).
    """
    if not control_fps > 0:
        raise InvalidArgument(f"control_fps must be positive, got {control_fps}")
    m = resample(motion, control_fps)
    left, right = resolve_handedness(m.hands, m.states)
    dt = 1.0 / control_fps
    left_pose = calib.pose_for(int(left.states[0]))
    right_pose = calib.pose_for(int(right.states[0]))
    peak = 0
    count = m.clock.frame_count
    for i in range(count):
        if i > 0:
            if rate_limit_hands:
                left_pose = state_to_joints(int(left.states[i]), left_pose, dt, calib)
                right_pose = state_to_joints(int(right.states[i]), right_pose, dt, calib)
            else:
                left_pose = calib.pose_for(int(left.states[i]))
                right_pose = calib.pose_for(int(right.states[i]))
        frame = RobotCommandFrame(
            frame_index=i,
            timestamp_s=i / control_fps,
            root_position=m.body.root_positions[i],
            rotations=m.body.joint_rotations[i],
            left_hand=left_pose,
            right_hand=right_pose,
        )
        data = encode_frame(frame)
        peak = max(peak, sink.backlog)
        try:
            sink.put(data)
        except queue.Full:
            raise StreamError(f"sink backpressure deadline exceeded at frame {i}",
                              frame_index=i) from None
    return StreamSummary(frames_sent=count, peak_backlog=peak, control_fps=control_fps)


def iter_frame_bytes(data: bytes) -> Iterator[bytes]:
    if len(data) % FRAME_SIZE != 0:
        # yield the whole frames first; the ragged tail raises on decode
        pass
    for off in range(0, len(data) - len(data) % FRAME_SIZE, FRAME_SIZE):
        yield data[off:off + FRAME_SIZE]
    tail = len(data) % FRAME_SIZE
    if tail:
        yield data[len(data) - tail:]


def iter_exoq(source) -> Iterator[RobotCommandFrame]:
    """Decode frames from a .exoq path, raw bytes, or an iterable of buffers."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
        chunks: Iterable[bytes] = iter_frame_bytes(data)
    elif isinstance(source, (bytes, bytearray)):
        chunks = iter_frame_bytes(bytes(source))
    else:
        chunks = source
    for chunk in chunks:
        yield decode_frame(chunk)


def read_exoq(source) -> list[RobotCommandFrame]:
    return list(iter_exoq(source))
