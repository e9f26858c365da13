"""Temporal operations on motion streams: resampling, synchronization,
state smoothing, and invariant validation."""
from __future__ import annotations

import math

import numpy as np

from ..errors import InvalidArgument, SyncError
from ..validation import ValidationReport
from .rotation import _interp_weights, lerp_track, nearest_track, slerp_track
from .types import (
    HAND_COLUMNS,
    SMPL_JOINT_COUNT,
    BodyMotionSequence,
    FrameClock,
    HandPoseSequence,
    InteractionAwareMotion,
    InteractionStateSequence,
)

# Maximum duration disagreement between streams before we assume the
# estimators ran on different clips.  Generous for codec frame-count jitter.
SYNC_TOLERANCE_S = 0.5

# Guards float round-down when the rational frame count lands on an integer.
_COUNT_EPS = 1e-9


def resampled_clock(clock: FrameClock, fps_out: float) -> FrameClock:
    if not fps_out > 0:
        raise InvalidArgument(f"fps_out must be positive, got {fps_out}")
    count = int(math.floor(clock.duration_s * fps_out + _COUNT_EPS)) + 1
    return FrameClock(fps=fps_out, frame_count=count)


def resample_body(body: BodyMotionSequence, fps_out: float) -> BodyMotionSequence:
    """Rotations by per-joint shortest-arc slerp, positions linearly."""
    if fps_out == body.clock.fps:
        return body
    clock = resampled_clock(body.clock, fps_out)
    lo, w = _interp_weights(body.clock.frame_count, body.clock.fps,
                            clock.frame_count, fps_out)
    rots = np.stack(
        [slerp_track(body.joint_rotations[:, j, :], lo, w) for j in range(SMPL_JOINT_COUNT)],
        axis=1,
    )
    pos = lerp_track(body.root_positions, lo, w)
    return BodyMotionSequence(clock=clock, joint_rotations=rots, root_positions=pos)


def resample_hands(hands: HandPoseSequence, fps_out: float) -> HandPoseSequence:
    if fps_out == hands.clock.fps:
        return hands
    clock = resampled_clock(hands.clock, fps_out)
    lo, w = _interp_weights(hands.clock.frame_count, hands.clock.fps,
                            clock.frame_count, fps_out)
    wrists = np.stack(
        [slerp_track(hands.wrist_rotations[:, c, :], lo, w) for c in range(HAND_COLUMNS)],
        axis=1,
    )
    return HandPoseSequence(
        clock=clock,
        wrist_rotations=wrists,
        apertures=np.clip(lerp_track(hands.apertures, lo, w), 0.0, 1.0),
        confidences=np.clip(lerp_track(hands.confidences, lo, w), 0.0, 1.0),
        facing=hands.facing,
    )


def resample_states(states: InteractionStateSequence, fps_out: float) -> InteractionStateSequence:
    """Nearest-neighbor only: grasp states are categorical, a fabricated
    intermediate state is meaningless."""
    if fps_out == states.clock.fps:
        return states
    clock = resampled_clock(states.clock, fps_out)
    lo, w = _interp_weights(states.clock.frame_count, states.clock.fps,
                            clock.frame_count, fps_out)
    return InteractionStateSequence(clock=clock, states=nearest_track(states.states, lo, w))


def resample(seq: InteractionAwareMotion, fps_out: float) -> InteractionAwareMotion:
    """Resample all three streams onto a common fps_out grid.

    Output frame_count = floor(duration_s * fps_out) + 1, so duration is
    preserved to within one output frame period.  A single-frame sequence
    resamples to a single-frame copy at the new rate.
    """
    if not fps_out > 0:
        raise InvalidArgument(f"fps_out must be positive, got {fps_out}")
    if fps_out == seq.clock.fps:
        return seq
    return InteractionAwareMotion(
        body=resample_body(seq.body, fps_out),
        hands=resample_hands(seq.hands, fps_out),
        states=resample_states(seq.states, fps_out),
        source_fps=seq.source_fps,
    )


def synchronize(body: BodyMotionSequence, hands: HandPoseSequence,
                states: InteractionStateSequence) -> InteractionAwareMotion:
    """Resample hand and state streams onto the body clock (timing master).

    Raises SyncError when any pair of streams disagrees in duration by more
    than SYNC_TOLERANCE_S, which signals upstream estimation ran on
    different clips rather than mere rate mismatch.
    """
    durations = {
        "body": body.clock.duration_s,
        "hands": hands.clock.duration_s,
        "states": states.clock.duration_s,
    }
    names = list(durations)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            gap = abs(durations[a] - durations[b])
            if gap > SYNC_TOLERANCE_S:
                raise SyncError(
                    f"duration mismatch {a}={durations[a]:.3f}s vs {b}={durations[b]:.3f}s "
                    f"(gap {gap:.3f}s > {SYNC_TOLERANCE_S}s)")
    fps = body.clock.fps
    hands_rs = resample_hands(hands, fps)
    states_rs = resample_states(states, fps)
    # rate-matched streams may still differ in count by a frame; trim/pad to
    # the master grid so the clocks come out bit-identical
    hands_rs = _fit_hands(hands_rs, body.clock)
    states_rs = _fit_states(states_rs, body.clock)
    return InteractionAwareMotion(body=body, hands=hands_rs, states=states_rs,
                                  source_fps=hands.clock.fps)


def _fit_hands(hands: HandPoseSequence, clock: FrameClock) -> HandPoseSequence:
    t = clock.frame_count
    if hands.clock.frame_count == t:
        return HandPoseSequence(clock, hands.wrist_rotations, hands.apertures,
                                hands.confidences, hands.facing)
    take = min(t, hands.clock.frame_count)
    pad = t - take

    def fit(a):
        out = a[:take]
        if pad:
            out = np.concatenate([out, np.repeat(out[-1:], pad, axis=0)], axis=0)
        return out

    return HandPoseSequence(clock, fit(hands.wrist_rotations), fit(hands.apertures),
                            fit(hands.confidences), hands.facing)


def _fit_states(states: InteractionStateSequence, clock: FrameClock) -> InteractionStateSequence:
    t = clock.frame_count
    if states.clock.frame_count == t:
        return InteractionStateSequence(clock, states.states)
    take = min(t, states.clock.frame_count)
    arr = states.states[:take]
    if t > take:
        arr = np.concatenate([arr, np.repeat(arr[-1:], t - take, axis=0)], axis=0)
    return InteractionStateSequence(clock, arr)


def _smooth_column(col: np.ndarray, min_dwell: int) -> np.ndarray:
    """Run-length smoothing of one hand's state track.

    Runs shorter than min_dwell are absorbed into the preceding run; a short
    leading run (no predecessor) is absorbed forward into its successor; the
    final run is exempt, since a state change near the clip end may simply be
    truncated.  Idempotent by construction.
    """
    runs: list[list[int]] = []  # [state, length]
    for s in col.tolist():
        if runs and runs[-1][0] == s:
            runs[-1][1] += 1
        else:
            runs.append([s, 1])
    # leading short runs merge forward (taking the successor's state)
    while len(runs) > 1 and runs[0][1] < min_dwell:
        runs[1][1] += runs[0][1]
        runs.pop(0)
    i = 1
    while i < len(runs) - 1:
        if runs[i][1] < min_dwell:
            runs[i - 1][1] += runs[i][1]
            runs.pop(i)
            if i < len(runs) and runs[i][0] == runs[i - 1][0]:
                runs[i - 1][1] += runs[i][1]
                runs.pop(i)
        else:
            i += 1
    out = np.empty(col.shape[0], dtype=np.uint8)
    pos = 0
    for state, length in runs:
        out[pos:pos + length] = state
        pos += length
    return out


def smooth_states(states: InteractionStateSequence, min_dwell_frames: int) -> InteractionStateSequence:
    """Suppress estimator flicker: every run in the output (except possibly
    the final one) lasts at least min_dwell_frames."""
    if min_dwell_frames < 1:
        raise InvalidArgument(f"min_dwell_frames must be >= 1, got {min_dwell_frames}")
    cols = [_smooth_column(states.states[:, c], min_dwell_frames)
            for c in range(states.states.shape[1])]
    return InteractionStateSequence(states.clock, np.stack(cols, axis=1))


# validate() tolerates float32 rounding right at the pi boundary
_PI_TOL = 1e-5


def _check_finite(report: ValidationReport, name: str, arr: np.ndarray) -> None:
    bad = ~np.isfinite(arr)
    if bad.any():
        frames = np.unique(np.argwhere(bad)[:, 0])
        for f in frames.tolist():
            report.add(name, "non-finite value", frame=f)


def validate(motion: InteractionAwareMotion) -> ValidationReport:
    """Check every stated invariant; returns an empty report iff all hold.

    Never raises: the report names each offending field, frame, and hand
    column so corrupted wire data can be diagnosed.
    """
    report = ValidationReport()
    body, hands, states = motion.body, motion.hands, motion.states

    for name, clk in (("hands", hands.clock), ("states", states.clock)):
        if clk.fps != body.clock.fps or clk.frame_count != body.clock.frame_count:
            report.add(f"{name}.clock",
                       f"mismatches body clock ({clk.fps} fps x {clk.frame_count} "
                       f"vs {body.clock.fps} fps x {body.clock.frame_count})")

    _check_finite(report, "joint_rotations", body.joint_rotations)
    _check_finite(report, "root_positions", body.root_positions)
    _check_finite(report, "wrist_rotations", hands.wrist_rotations)
    _check_finite(report, "apertures", hands.apertures)
    _check_finite(report, "confidences", hands.confidences)

    finite = np.isfinite(body.joint_rotations).all(axis=2)
    mags = np.linalg.norm(np.where(finite[..., None], body.joint_rotations, 0.0), axis=2)
    over = mags > np.pi + _PI_TOL
    for f, j in np.argwhere(over).tolist():
        report.add("joint_rotations", f"axis-angle magnitude {mags[f, j]:.6f} > pi (joint {j})",
                   frame=f)

    for name, arr in (("apertures", hands.apertures), ("confidences", hands.confidences)):
        finite_arr = np.isfinite(arr)
        bad = finite_arr & ((arr < 0.0) | (arr > 1.0))
        for f, c in np.argwhere(bad).tolist():
            report.add(name, "outside [0, 1]", frame=f, column=c, value=float(arr[f, c]))

    bad_states = states.states > 2
    for f, c in np.argwhere(bad_states).tolist():
        report.add("states", "not in {0, 1, 2}", frame=f, column=c,
                   value=int(states.states[f, c]))

    return report
