"""Motion archive container: one file per InteractionAwareMotion.

Layout (also the estimation wire-protocol response body):

    bytes 0..7   magic b"EXOARCH1"
    ASCII header lines, each "key=value\\n", terminated by "end\\n":
        fps, frame_count, facing, source_fps
    binary payload, little-endian, in field order:
        joint_rotations   T*24*3 float32
        root_positions    T*3    float32
        wrist_rotations   T*2*3  float32
        apertures         T*2    float32
        confidences       T*2    float32
        states            T*2    uint8

Floats are serialized with repr() in the header and stored as float32 in the
payload, so write -> read -> write round-trips byte-exactly.
"""
from __future__ import annotations

import io

import numpy as np

from ..errors import CodecError
from .types import (
    HAND_COLUMNS,
    SMPL_JOINT_COUNT,
    BodyMotionSequence,
    FacingMode,
    FrameClock,
    HandPoseSequence,
    InteractionAwareMotion,
    InteractionStateSequence,
)

ARCHIVE_MAGIC = b"EXOARCH1"
_MAX_HEADER = 4096


def write_archive(motion: InteractionAwareMotion) -> bytes:
    clock = motion.clock
    buf = io.BytesIO()
    buf.write(ARCHIVE_MAGIC)
    header = (
        f"fps={clock.fps!r}\n"
        f"frame_count={clock.frame_count}\n"
        f"facing={motion.facing.value}\n"
        f"source_fps={float(motion.source_fps)!r}\n"
        "end\n"
    )
    buf.write(header.encode("ascii"))
    for arr in (motion.body.joint_rotations, motion.body.root_positions,
                motion.hands.wrist_rotations, motion.hands.apertures,
                motion.hands.confidences):
        buf.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    buf.write(np.ascontiguousarray(motion.states.states, dtype=np.uint8).tobytes())
    return buf.getvalue()


def _take(data: bytes, offset: int, count: int, dtype, shape) -> tuple[np.ndarray, int]:
    nbytes = count * np.dtype(dtype).itemsize
    if offset + nbytes > len(data):
        raise CodecError("archive payload truncated",
                         expected=offset + nbytes, actual=len(data))
    arr = np.frombuffer(data, dtype=dtype, count=count, offset=offset).reshape(shape)
    return arr, offset + nbytes


def read_archive(data: bytes) -> InteractionAwareMotion:
    if not data.startswith(ARCHIVE_MAGIC):
        raise CodecError("bad archive magic")
    try:
        head_end = data.index(b"end\n", len(ARCHIVE_MAGIC), len(ARCHIVE_MAGIC) + _MAX_HEADER)
    except ValueError:
        raise CodecError("archive header terminator not found") from None
    fields: dict[str, str] = {}
    for line in data[len(ARCHIVE_MAGIC):head_end].decode("ascii").splitlines():
        if line:
            key, _, value = line.partition("=")
            fields[key] = value
    try:
        fps = float(fields["fps"])
        frame_count = int(fields["frame_count"])
        facing = FacingMode(fields["facing"])
        source_fps = float(fields["source_fps"])
    except (KeyError, ValueError) as exc:
        raise CodecError(f"malformed archive header: {exc}") from None

    t = frame_count
    offset = head_end + 4
    rots, offset = _take(data, offset, t * SMPL_JOINT_COUNT * 3, "<f4", (t, SMPL_JOINT_COUNT, 3))
    pos, offset = _take(data, offset, t * 3, "<f4", (t, 3))
    wrists, offset = _take(data, offset, t * HAND_COLUMNS * 3, "<f4", (t, HAND_COLUMNS, 3))
    apertures, offset = _take(data, offset, t * HAND_COLUMNS, "<f4", (t, HAND_COLUMNS))
    confidences, offset = _take(data, offset, t * HAND_COLUMNS, "<f4", (t, HAND_COLUMNS))
    states, offset = _take(data, offset, t * HAND_COLUMNS, np.uint8, (t, HAND_COLUMNS))
    if offset != len(data):
        raise CodecError("trailing bytes after archive payload",
                         expected=offset, actual=len(data))

    clock = FrameClock(fps=fps, frame_count=frame_count)
    return InteractionAwareMotion(
        body=BodyMotionSequence(clock, rots, pos),
        hands=HandPoseSequence(clock, wrists, apertures, confidences, facing),
        states=InteractionStateSequence(clock, states),
        source_fps=source_fps,
    )
