import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exoactor.errors import CodecError, InvalidArgument, SyncError
from exoactor.motion import (
    BodyMotionSequence,
    FacingMode,
    FrameClock,
    HandPoseSequence,
    InteractionAwareMotion,
    InteractionStateSequence,
    read_archive,
    resample,
    smooth_states,
    synchronize,
    validate,
    write_archive,
)
from exoactor.motion.rotation import canonicalize_axis_angle

from .conftest import make_body, make_hands, make_motion, make_states


# --- independent slerp oracle (quaternion closed form, test-local) ---------

def _quat_from_rotvec(v):
    theta = math.sqrt(v[0] ** 2 + v[1] ** 2 + v[2] ** 2)
    if theta < 1e-12:
        return (1.0, 0.0, 0.0, 0.0)
    s = math.sin(theta / 2.0) / theta
    return (math.cos(theta / 2.0), v[0] * s, v[1] * s, v[2] * s)


def _quat_slerp(q0, q1, t):
    dot = sum(a * b for a, b in zip(q0, q1))
    if dot < 0.0:
        q1 = tuple(-x for x in q1)
        dot = -dot
    dot = min(dot, 1.0)
    theta = math.acos(dot)
    if theta < 1e-9:
        return q0
    s0 = math.sin((1.0 - t) * theta) / math.sin(theta)
    s1 = math.sin(t * theta) / math.sin(theta)
    return tuple(s0 * a + s1 * b for a, b in zip(q0, q1))


def _rotvec_from_quat(q):
    w, x, y, z = q
    n = math.sqrt(x * x + y * y + z * z)
    if n < 1e-12:
        return (0.0, 0.0, 0.0)
    angle = 2.0 * math.atan2(n, w)
    if angle > math.pi:
        angle -= 2.0 * math.pi
    return (x / n * angle, y / n * angle, z / n * angle)


def slerp_oracle(v0, v1, t):
    return _rotvec_from_quat(_quat_slerp(_quat_from_rotvec(v0), _quat_from_rotvec(v1), t))


# --- resample ---------------------------------------------------------------

def test_resample_frame_count_241_at_24_to_50():
    m = make_motion(frame_count=241, fps=24.0, seed=3)
    out = resample(m, 50.0)
    assert out.clock.frame_count == 501  # floor(10.0 * 50) + 1
    assert out.clock.fps == 50.0


def test_resample_identity_at_own_fps(motion_10s_24fps):
    out = resample(motion_10s_24fps, 24.0)
    assert out.clock == motion_10s_24fps.clock
    assert np.array_equal(out.body.joint_rotations, motion_10s_24fps.body.joint_rotations)
    assert np.array_equal(out.body.root_positions, motion_10s_24fps.body.root_positions)
    assert np.array_equal(out.states.states, motion_10s_24fps.states.states)


def test_resample_slerp_midpoint_matches_oracle():
    clock = FrameClock(fps=10.0, frame_count=2)
    rots = np.zeros((2, 24, 3), dtype=np.float32)
    rots[1, :, 2] = 0.4
    body = BodyMotionSequence(clock, rots, np.zeros((2, 3), dtype=np.float32))
    m = InteractionAwareMotion(body, make_hands(2, 10.0), make_states(2, 10.0), source_fps=10.0)
    out = resample(m, 20.0)
    assert out.clock.frame_count == 3
    expected = slerp_oracle((0.0, 0.0, 0.0), (0.0, 0.0, 0.4), 0.5)
    np.testing.assert_allclose(out.body.joint_rotations[1, 0], expected, atol=1e-6)
    np.testing.assert_allclose(out.body.joint_rotations[1, 0], [0.0, 0.0, 0.2], atol=1e-6)


def test_resample_against_oracle_random_rotations():
    rng = np.random.RandomState(11)
    clock = FrameClock(fps=8.0, frame_count=5)
    rots = rng.uniform(-1.5, 1.5, size=(5, 24, 3)).astype(np.float32)
    body = BodyMotionSequence(clock, rots, np.zeros((5, 3), dtype=np.float32))
    m = InteractionAwareMotion(body, make_hands(5, 8.0), make_states(5, 8.0), source_fps=8.0)
    out = resample(m, 16.0)
    # odd output frames sit halfway between input nodes
    for k in range(4):
        got = out.body.joint_rotations[2 * k + 1]
        for j in range(24):
            expected = slerp_oracle(rots[k, j].astype(np.float64),
                                    rots[k + 1, j].astype(np.float64), 0.5)
            np.testing.assert_allclose(got[j], expected, atol=1e-5)


def test_resample_positions_linear():
    clock = FrameClock(fps=10.0, frame_count=2)
    pos = np.array([[0, 0, 0], [1.0, 2.0, 3.0]], dtype=np.float32)
    body = BodyMotionSequence(clock, np.zeros((2, 24, 3), dtype=np.float32), pos)
    m = InteractionAwareMotion(body, make_hands(2, 10.0), make_states(2, 10.0), source_fps=10.0)
    out = resample(m, 20.0)
    np.testing.assert_allclose(out.body.root_positions[1], [0.5, 1.0, 1.5], atol=1e-7)


def test_resample_states_nearest_never_fabricates():
    clock = FrameClock(fps=4.0, frame_count=5)
    arr = np.array([[0, 0], [0, 0], [2, 2], [2, 2], [0, 0]], dtype=np.uint8)
    states = InteractionStateSequence(clock, arr)
    m = InteractionAwareMotion(make_body(5, 4.0), make_hands(5, 4.0), states, source_fps=4.0)
    out = resample(m, 13.0)
    assert set(np.unique(out.states.states).tolist()) <= {0, 2}


def test_resample_single_frame_copy():
    m = make_motion(frame_count=1, fps=24.0, seed=5)
    out = resample(m, 50.0)
    assert out.clock.frame_count == 1
    assert out.clock.fps == 50.0
    assert np.array_equal(out.body.joint_rotations, m.body.joint_rotations)


def test_resample_rejects_bad_fps(motion_10s_24fps):
    with pytest.raises(InvalidArgument):
        resample(motion_10s_24fps, 0.0)
    with pytest.raises(InvalidArgument):
        resample(motion_10s_24fps, -24.0)


def test_resample_duration_round_trip_quantified():
    # duration is quantized to the coarser grid in each hop, so the round
    # trip can lose up to one frame period per hop; the single-hop loss is
    # strictly below one output frame period
    rng = np.random.RandomState(42)
    m = make_motion(frame_count=48, fps=24.0)
    for _ in range(1000):
        f1, f2 = rng.uniform(10.0, 120.0, size=2)
        mid = resample(m, f2)
        assert abs(mid.clock.duration_s - m.clock.duration_s) <= 1.0 / f2 + 1e-9
        out = resample(mid, f1)
        assert abs(out.clock.duration_s - m.clock.duration_s) <= 1.0 / f1 + 1.0 / f2 + 1e-9


def test_resample_round_trip_back_to_original_rate_tight():
    # upsample then return to the native rate loses at most one native frame
    m = make_motion(frame_count=48, fps=24.0)
    rng = np.random.RandomState(43)
    for _ in range(200):
        f2 = rng.uniform(24.0, 120.0)
        out = resample(resample(m, f2), 24.0)
        assert abs(out.clock.duration_s - m.clock.duration_s) <= 1.0 / 24.0 + 1e-9


def test_resample_constant_rotation_fixed_point_exact():
    clock = FrameClock(fps=24.0, frame_count=25)
    rots = np.tile(np.float32([0.3, -0.2, 0.9]), (25, 24, 1))
    body = BodyMotionSequence(clock, rots, np.zeros((25, 3), dtype=np.float32))
    m = InteractionAwareMotion(body, make_hands(25, 24.0), make_states(25, 24.0), source_fps=24.0)
    for fps_out in (11.0, 50.0, 87.3, 120.0):
        out = resample(m, fps_out)
        assert np.all(out.body.joint_rotations == rots[0])


# --- synchronize ------------------------------------------------------------

def test_synchronize_passthrough_when_aligned():
    body = make_body(240, 24.0, seed=2)
    hands = make_hands(240, 24.0, seed=2)
    states = make_states(240, 24.0)
    m = synchronize(body, hands, states)
    assert m.body.clock == m.hands.clock == m.states.clock
    assert np.array_equal(m.hands.apertures, hands.apertures)


def test_synchronize_resamples_to_body_clock():
    body = make_body(500, 50.0, seed=2)
    hands = make_hands(240, 24.0, seed=2)
    states = make_states(240, 24.0)
    m = synchronize(body, hands, states)
    assert m.hands.clock.frame_count == 500
    assert m.hands.clock.fps == 50.0
    assert m.states.clock == m.body.clock


def test_synchronize_duration_mismatch_raises():
    body = make_body(241, 24.0)  # 10.0 s
    hands = make_hands(121, 24.0)  # 5.0 s
    states = make_states(241, 24.0)
    with pytest.raises(SyncError):
        synchronize(body, hands, states)


def test_synchronize_clocks_bit_identical_random_rates():
    rng = np.random.RandomState(9)
    for _ in range(50):
        f_body, f_hand = rng.uniform(10.0, 120.0, size=2)
        dur = rng.uniform(2.0, 6.0)
        nb = int(dur * f_body) + 1
        nh = int(dur * f_hand) + 1
        body = make_body(nb, f_body)
        hands = make_hands(nh, f_hand)
        states = make_states(nh, f_hand)
        m = synchronize(body, hands, states)
        assert m.body.clock == m.hands.clock == m.states.clock
        assert validate(m).ok


# --- smooth_states ----------------------------------------------------------

def _smooth_oracle(col, dwell):
    """Brute-force run-length reference."""
    runs = []
    for s in col:
        if runs and runs[-1][0] == s:
            runs[-1][1] += 1
        else:
            runs.append([s, 1])
    while len(runs) > 1 and runs[0][1] < dwell:
        runs[1][1] += runs[0][1]
        runs.pop(0)
    i = 1
    while i < len(runs) - 1:
        if runs[i][1] < dwell:
            runs[i - 1][1] += runs[i][1]
            runs.pop(i)
            if i < len(runs) and runs[i][0] == runs[i - 1][0]:
                runs[i - 1][1] += runs[i][1]
                runs.pop(i)
        else:
            i += 1
    out = []
    for s, n in runs:
        out.extend([s] * n)
    return out


def _states_from_lists(left, right=None):
    right = left if right is None else right
    arr = np.stack([np.array(left, dtype=np.uint8), np.array(right, dtype=np.uint8)], axis=1)
    clock = FrameClock(fps=24.0, frame_count=len(left))
    return InteractionStateSequence(clock, arr)


def test_smooth_states_absorbs_single_frame_flicker():
    s = _states_from_lists([0, 0, 0, 2, 0, 0, 0])
    out = smooth_states(s, 3)
    assert out.states[:, 0].tolist() == [0, 0, 0, 0, 0, 0, 0]
    assert out.states[:, 1].tolist() == [0, 0, 0, 0, 0, 0, 0]


def test_smooth_states_keeps_already_smooth():
    s = _states_from_lists([0, 0, 2, 2, 2, 0, 0])
    out = smooth_states(s, 2)
    assert out.states[:, 0].tolist() == [0, 0, 2, 2, 2, 0, 0]


def test_smooth_states_rejects_bad_dwell():
    with pytest.raises(InvalidArgument):
        smooth_states(_states_from_lists([0, 0, 0]), 0)


@settings(max_examples=300, derandomize=True)
@given(st.lists(st.integers(0, 2), min_size=1, max_size=60), st.integers(1, 8))
def test_smooth_states_idempotent_and_min_dwell(col, dwell):
    s = _states_from_lists(col)
    once = smooth_states(s, dwell)
    twice = smooth_states(once, dwell)
    assert np.array_equal(once.states, twice.states)
    assert once.states[:, 0].tolist() == _smooth_oracle(col, dwell)
    # every maximal run except the last is >= dwell
    out = once.states[:, 0].tolist()
    runs = []
    for v in out:
        if runs and runs[-1][0] == v:
            runs[-1][1] += 1
        else:
            runs.append([v, 1])
    for state, length in runs[:-1]:
        assert length >= dwell


# --- validate ---------------------------------------------------------------

def test_validate_clean_motion(motion_10s_24fps):
    assert validate(motion_10s_24fps).ok


def test_validate_flags_bad_state():
    m = make_motion(frame_count=50, fps=24.0)
    arr = np.array(m.states.states)
    arr[17, 1] = 3
    object.__setattr__(m.states, "states", arr)
    report = validate(m)
    assert not report.ok
    v = report.violations[0]
    assert v.field_name == "states" and v.frame == 17 and v.column == 1 and v.value == 3


def test_validate_flags_nan_root_position():
    m = make_motion(frame_count=50, fps=24.0)
    arr = np.array(m.body.root_positions)
    arr[7, 0] = np.nan
    object.__setattr__(m.body, "root_positions", arr)
    report = validate(m)
    assert any(v.field_name == "root_positions" and v.frame == 7 for v in report.violations)


def test_validate_flags_clock_mismatch():
    m = InteractionAwareMotion(make_body(50, 24.0), make_hands(49, 24.0),
                               make_states(50, 24.0), source_fps=24.0)
    report = validate(m)
    assert any("clock" in v.field_name for v in report.violations)


@pytest.mark.parametrize("field,mutate", [
    ("joint_rotations", lambda a: _set(a, (3, 5, 0), np.inf)),
    ("joint_rotations", lambda a: _set(a, (3, 5, 0), 4.0)),   # magnitude > pi
    ("root_positions", lambda a: _set(a, (2, 1), np.nan)),
    ("apertures", lambda a: _set(a, (4, 0), 1.5)),
    ("apertures", lambda a: _set(a, (4, 0), -0.1)),
    ("confidences", lambda a: _set(a, (6, 1), 2.0)),
    ("wrist_rotations", lambda a: _set(a, (1, 0, 2), np.nan)),
])
def test_validate_flags_single_field_corruptions(field, mutate):
    m = make_motion(frame_count=20, fps=24.0)
    owner = m.body if hasattr(m.body, field) else m.hands
    arr = np.array(getattr(owner, field))
    mutate(arr)
    object.__setattr__(owner, field, arr)
    report = validate(m)
    assert any(v.field_name == field for v in report.violations)


def _set(arr, idx, value):
    arr[idx] = value


# --- canonicalization -------------------------------------------------------

def test_canonicalize_wraps_large_angles():
    v = np.array([[0.0, 0.0, 3.5 * math.pi]])
    out = canonicalize_axis_angle(v)
    mag = np.linalg.norm(out[0])
    assert mag <= math.pi + 1e-12
    # 3.5*pi about +z is the same rotation as -0.5*pi about +z
    np.testing.assert_allclose(out[0], [0.0, 0.0, -0.5 * math.pi], atol=1e-12)


def test_canonicalize_preserves_small_angles():
    v = np.array([[0.1, -0.2, 0.3]])
    np.testing.assert_array_equal(canonicalize_axis_angle(v), v)


# --- archive ----------------------------------------------------------------

def test_archive_round_trip_bit_exact(motion_10s_24fps):
    data = write_archive(motion_10s_24fps)
    m2 = read_archive(data)
    assert m2.clock == motion_10s_24fps.clock
    assert m2.facing == motion_10s_24fps.facing
    assert m2.source_fps == motion_10s_24fps.source_fps
    assert np.array_equal(m2.body.joint_rotations, motion_10s_24fps.body.joint_rotations)
    assert np.array_equal(m2.body.root_positions, motion_10s_24fps.body.root_positions)
    assert np.array_equal(m2.hands.wrist_rotations, motion_10s_24fps.hands.wrist_rotations)
    assert np.array_equal(m2.hands.apertures, motion_10s_24fps.hands.apertures)
    assert np.array_equal(m2.hands.confidences, motion_10s_24fps.hands.confidences)
    assert np.array_equal(m2.states.states, motion_10s_24fps.states.states)
    assert write_archive(m2) == data


def test_archive_bytes_round_trip(motion_10s_24fps):
    data = write_archive(motion_10s_24fps)
    assert write_archive(read_archive(data)) == data


def test_archive_truncation_raises():
    data = write_archive(make_motion(frame_count=10, fps=24.0, seed=1))
    with pytest.raises(CodecError):
        read_archive(data[:-1])
    with pytest.raises(CodecError):
        read_archive(data + b"\x00")
    with pytest.raises(CodecError):
        read_archive(b"NOTANARCH" + data)


def test_archive_back_facing_metadata():
    m = make_motion(frame_count=5, fps=30.0, facing=FacingMode.BACK)
    assert read_archive(write_archive(m)).facing == FacingMode.BACK
