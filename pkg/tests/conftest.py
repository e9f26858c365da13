import numpy as np
import pytest

from exoactor.motion import (
    BodyMotionSequence,
    FacingMode,
    FrameClock,
    HandPoseSequence,
    InteractionAwareMotion,
    InteractionStateSequence,
)


def make_body(frame_count=240, fps=24.0, seed=None):
    clock = FrameClock(fps=fps, frame_count=frame_count)
    if seed is None:
        rots = np.zeros((frame_count, 24, 3), dtype=np.float32)
        pos = np.zeros((frame_count, 3), dtype=np.float32)
    else:
        rng = np.random.RandomState(seed)
        rots = rng.uniform(-1.0, 1.0, size=(frame_count, 24, 3)).astype(np.float32)
        pos = rng.uniform(-2.0, 2.0, size=(frame_count, 3)).astype(np.float32)
    return BodyMotionSequence(clock, rots, pos)


def make_hands(frame_count=240, fps=24.0, facing=FacingMode.FRONT, seed=None):
    clock = FrameClock(fps=fps, frame_count=frame_count)
    if seed is None:
        wrists = np.zeros((frame_count, 2, 3), dtype=np.float32)
        apertures = np.ones((frame_count, 2), dtype=np.float32)
        conf = np.ones((frame_count, 2), dtype=np.float32)
    else:
        rng = np.random.RandomState(seed)
        wrists = rng.uniform(-1.0, 1.0, size=(frame_count, 2, 3)).astype(np.float32)
        apertures = rng.uniform(0.0, 1.0, size=(frame_count, 2)).astype(np.float32)
        conf = rng.uniform(0.0, 1.0, size=(frame_count, 2)).astype(np.float32)
    return HandPoseSequence(clock, wrists, apertures, conf, facing)


def make_states(frame_count=240, fps=24.0, value=0):
    clock = FrameClock(fps=fps, frame_count=frame_count)
    return InteractionStateSequence(clock, np.full((frame_count, 2), value, dtype=np.uint8))


def make_motion(frame_count=240, fps=24.0, seed=None, facing=FacingMode.FRONT):
    return InteractionAwareMotion(
        body=make_body(frame_count, fps, seed),
        hands=make_hands(frame_count, fps, facing, seed),
        states=make_states(frame_count, fps),
        source_fps=fps,
    )


@pytest.fixture
def motion_10s_24fps():
    return make_motion(frame_count=241, fps=24.0, seed=7)
