import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exoactor.errors import EstimationError, InputError, InvalidArgument, SyncError, TransportError
from exoactor.estimation import (
    EstimatorDescriptor,
    OracleEstimator,
    RemoteEstimator,
    ScenarioFamily,
    ScenarioScript,
    TransportKind,
    VideoClip,
    assemble,
    estimate_body,
    estimate_hands,
    ground_truth,
    quantize_states,
    resolve_estimator,
    synthetic_oracle,
    wrist_axis_deviation,
)
from exoactor.motion import (
    FacingMode,
    FrameClock,
    HandPoseSequence,
    InteractionAwareMotion,
    read_archive,
    validate,
    write_archive,
)

from .conftest import make_body, make_hands, make_states


class FakeArtifact:
    def __init__(self, fps=24.0, frame_count=240, path=None):
        self.fps = fps
        self.frame_count = frame_count
        self.path = path
        self.digest = "fake"


def _clip(fps=24.0, frames=240, facing=None):
    return VideoClip(artifact=FakeArtifact(fps, frames), fps=fps, frame_count=frames,
                     facing_hint=facing)


def _oracle(family=ScenarioFamily.WALK_LINE, **kw):
    return OracleEstimator(ScenarioScript(family=family, **kw))


# --- synthetic oracle ---------------------------------------------------------

def test_stand_is_stationary_and_open():
    body, hands, states = synthetic_oracle(
        ScenarioScript(family=ScenarioFamily.STAND, fps=24.0, duration_s=10.0))
    assert body.clock.frame_count == 241
    vel = np.diff(body.root_positions, axis=0)
    assert np.all(vel == 0)
    assert np.all(states.states == 0)
    assert np.all(hands.apertures == 1.0)


def test_walk_line_displacement():
    script = ScenarioScript(family=ScenarioFamily.WALK_LINE, walk_speed=0.6,
                            duration_s=10.0)
    body, _, _ = synthetic_oracle(script)
    assert float(body.root_positions[-1, 0]) == pytest.approx(6.0, abs=1e-5)
    assert float(body.root_positions[-1, 1]) == 0.0
    gt = ground_truth(script)
    assert gt.final_displacement_m == pytest.approx(6.0, abs=1e-9)


def test_walk_turn_follows_arc():
    script = ScenarioScript(family=ScenarioFamily.WALK_TURN, walk_speed=0.5,
                            turn_rate_deg_s=18.0, duration_s=10.0)
    body, _, _ = synthetic_oracle(script)
    gt = ground_truth(script)
    np.testing.assert_allclose(body.root_positions[-1, :2],
                               gt.final_root_position[:2], atol=1e-4)
    # heading followed the scripted rate
    assert float(body.joint_rotations[-1, 0, 2]) == pytest.approx(np.radians(180.0),
                                                                  abs=1e-4)


def test_reach_grasp_place_two_transitions():
    script = ScenarioScript(family=ScenarioFamily.REACH_GRASP_PLACE)
    _, hands, states = synthetic_oracle(script)
    acting = states.states[:, 1]  # right hand, FRONT facing
    other = states.states[:, 0]
    transitions = int((np.diff(acting.astype(int)) != 0).sum())
    assert transitions == 2
    assert np.all(other == 0)
    # aperture ramps 1 -> 0 across the scripted grasp interval
    apertures = hands.apertures[:, 1]
    assert apertures[0] == 1.0 and apertures.min() == 0.0


def test_oracle_determinism_bit_identical():
    script = ScenarioScript(family=ScenarioFamily.WALK_LINE, seed=3)
    a = synthetic_oracle(script)
    b = synthetic_oracle(script)
    assert np.array_equal(a[0].joint_rotations, b[0].joint_rotations)
    assert np.array_equal(a[0].root_positions, b[0].root_positions)
    assert np.array_equal(a[1].apertures, b[1].apertures)
    assert np.array_equal(a[2].states, b[2].states)


def test_oracle_outputs_validate_clean():
    for family in ScenarioFamily:
        script = ScenarioScript(family=family, duration_s=4.0)
        body, hands, states = synthetic_oracle(script)
        motion = InteractionAwareMotion(body, hands, states, source_fps=script.fps)
        report = validate(motion)
        assert report.ok, f"{family}: {report}"


def test_oracle_unknown_scenario_rejected():
    with pytest.raises(InvalidArgument):
        synthetic_oracle(ScenarioScript.__new__(ScenarioScript))  # bypass init
    desc = EstimatorDescriptor(name="oracle:FLY", transport=TransportKind.IN_PROCESS_MOCK)
    with pytest.raises(InvalidArgument):
        resolve_estimator(desc)


# --- adapters -------------------------------------------------------------------

def test_estimate_body_walk_clip():
    body = estimate_body(_clip(), _oracle())
    assert body.clock.frame_count == 240
    # pelvis advances at the scripted speed
    dx = float(body.root_positions[-1, 0] - body.root_positions[0, 0])
    assert dx == pytest.approx(0.6 * 239 / 24.0, abs=1e-4)


def test_estimate_body_preserves_clip_frame_counts_fuzzed():
    rng = np.random.RandomState(2)
    for _ in range(10):
        frames = int(rng.randint(2, 400))
        fps = float(rng.uniform(10, 60))
        body = estimate_body(_clip(fps, frames), _oracle())
        assert body.clock.frame_count == frames
        hands = estimate_hands(_clip(fps, frames), FacingMode.FRONT, _oracle())
        assert hands.clock.frame_count == frames


def test_estimate_body_zero_length_clip():
    with pytest.raises(InvalidArgument):
        _clip(frames=0)
    bad = VideoClip.__new__(VideoClip)
    object.__setattr__(bad, "artifact", FakeArtifact())
    object.__setattr__(bad, "fps", 24.0)
    object.__setattr__(bad, "frame_count", 0)
    object.__setattr__(bad, "facing_hint", None)
    with pytest.raises(InputError):
        estimate_body(bad, _oracle())


def test_estimate_body_rejects_nan_backend():
    class NanBackend:
        def estimate_body(self, clip):
            body = make_body(clip.frame_count, clip.fps)
            rots = np.array(body.joint_rotations)
            rots[3, 0, 0] = np.nan
            object.__setattr__(body, "joint_rotations", rots)
            return body

    with pytest.raises(EstimationError) as err:
        estimate_body(_clip(frames=10), NanBackend())
    assert 3 in err.value.frames


def test_estimate_body_rejects_frame_count_mismatch():
    class ShortBackend:
        def estimate_body(self, clip):
            return make_body(clip.frame_count - 1, clip.fps)

    with pytest.raises(EstimationError):
        estimate_body(_clip(frames=10), ShortBackend())


def test_estimate_hands_facing_recorded():
    hands = estimate_hands(_clip(), FacingMode.BACK, _oracle())
    assert hands.facing is FacingMode.BACK
    assert hands.clock.fps == 24.0


def test_estimate_hands_grasp_ramp():
    clip = _clip()
    hands = estimate_hands(clip, FacingMode.FRONT,
                           _oracle(ScenarioFamily.REACH_GRASP_PLACE))
    apertures = hands.apertures[:, 1]
    assert apertures[0] == 1.0
    assert apertures.min() == 0.0


# --- quantization -----------------------------------------------------------------

def _hands_from_apertures(apertures, confidences=None):
    apertures = np.asarray(apertures, dtype=np.float32)
    t = apertures.shape[0]
    clock = FrameClock(fps=24.0, frame_count=t)
    conf = np.ones((t, 2), dtype=np.float32) if confidences is None \
        else np.asarray(confidences, dtype=np.float32)
    return HandPoseSequence(clock, np.zeros((t, 2, 3), dtype=np.float32),
                            apertures, conf, FacingMode.FRONT)


def test_quantize_states_direct_thresholds():
    hands = _hands_from_apertures([[1.0, 1.0], [0.5, 0.5], [0.1, 0.1]])
    states = quantize_states(hands, 0.7, 0.3)
    assert states.states[:, 0].tolist() == [0, 1, 2]


def test_quantize_all_open():
    hands = _hands_from_apertures(np.ones((10, 2)))
    assert np.all(quantize_states(hands).states == 0)


def test_quantize_low_confidence_carries_previous():
    apertures = [[0.1, 1.0], [1.0, 1.0], [0.1, 1.0]]
    conf = [[1.0, 1.0], [0.0, 1.0], [1.0, 1.0]]
    states = quantize_states(_hands_from_apertures(apertures, conf), 0.7, 0.3)
    assert states.states[:, 0].tolist() == [2, 2, 2]  # frame 1 inherits closed


def test_quantize_first_frame_low_confidence_defaults_open():
    apertures = [[0.1, 1.0], [0.1, 1.0]]
    conf = [[0.2, 1.0], [1.0, 1.0]]
    states = quantize_states(_hands_from_apertures(apertures, conf), 0.7, 0.3)
    assert states.states[:, 0].tolist() == [0, 2]


def test_quantize_threshold_ordering_enforced():
    hands = _hands_from_apertures(np.ones((3, 2)))
    with pytest.raises(InvalidArgument):
        quantize_states(hands, 0.3, 0.7)
    with pytest.raises(InvalidArgument):
        quantize_states(hands, 1.0, 0.3)


def _quantize_oracle(apertures, confidences, open_t, closed_t):
    """Frame-by-frame reference quantizer."""
    out = []
    prev = 0
    for a, c in zip(apertures, confidences):
        if c < 0.5:
            out.append(prev)
            continue
        if a > open_t:
            prev = 0
        elif a < closed_t:
            prev = 2
        else:
            prev = 1
        out.append(prev)
    return out


def test_quantize_matches_bruteforce_on_10k_traces():
    rng = np.random.RandomState(0)
    for _ in range(10_000 // 20):
        t = 20
        apertures = rng.uniform(0, 1, (t, 2)).astype(np.float32)
        conf = rng.choice([0.1, 0.9], size=(t, 2)).astype(np.float32)
        closed_t = float(rng.uniform(0.05, 0.45))
        open_t = float(rng.uniform(closed_t + 0.05, 0.95))
        hands = _hands_from_apertures(apertures, conf)
        got = quantize_states(hands, open_t, closed_t)
        for c in range(2):
            expected = _quantize_oracle(apertures[:, c].astype(float).tolist(),
                                        conf[:, c].astype(float).tolist(),
                                        open_t, closed_t)
            assert got.states[:, c].tolist() == expected


@settings(max_examples=200, derandomize=True)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=30),
       st.floats(0.35, 0.6), st.floats(0.05, 0.25))
def test_quantize_monotone_in_open_threshold(trace, open_t, closed_t):
    apertures = np.array([[a, a] for a in trace], dtype=np.float32)
    hands = _hands_from_apertures(apertures)
    low = quantize_states(hands, open_t, closed_t).states
    high = quantize_states(hands, min(open_t + 0.3, 0.99), closed_t).states
    # raising open_thresh never maps a frame from {1,2} back to 0
    assert not np.any((low > 0) & (high == 0))


# --- assemble --------------------------------------------------------------------

def test_assemble_oracle_grasp_cycle():
    script = ScenarioScript(family=ScenarioFamily.REACH_GRASP_PLACE)
    body, hands, states = synthetic_oracle(script)
    motion = assemble(body, hands, states)
    assert validate(motion).ok
    acting = motion.states.states[:, 1].astype(int)
    assert int((np.diff(acting) != 0).sum()) == 2  # one 0 -> 2 -> 0 cycle


def test_assemble_mismatched_durations():
    with pytest.raises(SyncError):
        assemble(make_body(241, 24.0), make_hands(121, 24.0), make_states(121, 24.0))


def test_assemble_smooths_flicker():
    body = make_body(50, 24.0)
    hands = make_hands(50, 24.0)
    arr = np.zeros((50, 2), dtype=np.uint8)
    arr[10, 0] = 2  # single-frame flicker
    arr[30:50, 1] = 2
    states = InteractionAwareMotionStates = None
    from exoactor.motion import InteractionStateSequence
    states = InteractionStateSequence(FrameClock(24.0, 50), arr)
    motion = assemble(body, hands, states, min_dwell_frames=5)
    assert np.all(motion.states.states[:, 0] == 0)
    runs = np.diff(np.flatnonzero(np.diff(motion.states.states[:, 1].astype(int))))
    assert motion.states.states[-1, 1] == 2


def test_assemble_output_validates_composition_property():
    rng = np.random.RandomState(5)
    for _ in range(20):
        fps_b = float(rng.uniform(10, 60))
        fps_h = float(rng.uniform(10, 60))
        dur = float(rng.uniform(1.0, 4.0))
        body = make_body(int(dur * fps_b) + 1, fps_b, seed=1)
        hands = make_hands(int(dur * fps_h) + 1, fps_h, seed=1)
        states = make_states(int(dur * fps_h) + 1, fps_h)
        motion = assemble(body, hands, states)
        assert validate(motion).ok


# --- remote estimator -------------------------------------------------------------

class _FakeResponse:
    def __init__(self, status_code=200, content=b"", json_body=None):
        self.status_code = status_code
        self.content = content
        self.text = content[:60].decode("latin1") if content else ""
        self._json = json_body

    def json(self):
        return self._json


class _FakeSession:
    """Answers the wire protocol with a fixed archive payload."""

    def __init__(self, archive_bytes):
        self.archive = archive_bytes
        self.requests = []

    def post(self, url, files=None, timeout=None):
        self.requests.append((url, files))
        return _FakeResponse(content=self.archive)

    def get(self, url, timeout=None):
        return _FakeResponse(json_body={"mode": "STUB", "version": "test"})


def _stub_archive(frames=240, fps=24.0):
    body, hands, states = synthetic_oracle(
        ScenarioScript(family=ScenarioFamily.WALK_LINE, fps=fps, frame_count=frames))
    return write_archive(InteractionAwareMotion(body, hands, states, source_fps=fps))


def test_remote_estimator_round_trip(tmp_path):
    video = tmp_path / "clip.mp4"
    video.write_bytes(b"fake mp4 payload")
    session = _FakeSession(_stub_archive())
    remote = RemoteEstimator("http://shim.local", session=session)
    clip = VideoClip(artifact=FakeArtifact(path=str(video)), fps=24.0, frame_count=240)
    body = estimate_body(clip, remote)
    assert body.clock.frame_count == 240
    url, files = session.requests[0]
    assert url.endswith("/estimate/body")
    assert files["params"][1].startswith(b"facing=")
    hands = estimate_hands(clip, FacingMode.FRONT, remote)
    assert hands.clock.frame_count == 240
    assert remote.health()["mode"] == "STUB"


def test_remote_estimator_unreachable():
    import requests as _requests

    class DownSession:
        def post(self, *a, **k):
            raise _requests.ConnectionError("refused")

    remote = RemoteEstimator("http://nowhere.invalid", session=DownSession())
    clip = VideoClip(artifact=FakeArtifact(path=None), fps=24.0, frame_count=10)
    with pytest.raises(TransportError):
        estimate_body(clip, remote)


def test_remote_estimator_http_error():
    class ErrSession:
        def post(self, *a, **k):
            return _FakeResponse(status_code=500, content=b"boom")

    remote = RemoteEstimator("http://shim.local", session=ErrSession())
    clip = VideoClip(artifact=FakeArtifact(path=None), fps=24.0, frame_count=10)
    with pytest.raises(TransportError):
        estimate_body(clip, remote)


def test_resolve_estimator_parses_params():
    desc = EstimatorDescriptor(name="oracle:WALK_LINE:walk_speed=1.2",
                               transport=TransportKind.IN_PROCESS_MOCK)
    impl = resolve_estimator(desc)
    assert isinstance(impl, OracleEstimator)
    assert impl.script.walk_speed == 1.2
    with pytest.raises(InvalidArgument):
        EstimatorDescriptor(name="remote", transport=TransportKind.REMOTE_SERVICE)


def test_wrist_axis_deviation_zero_for_identical():
    hands = make_hands(20, 24.0, seed=4)
    dev = wrist_axis_deviation(hands, hands)
    assert np.all(dev < 1e-9)


def test_wrist_axis_deviation_detects_rotation():
    a = make_hands(5, 24.0)
    wrists = np.array(a.wrist_rotations)
    wrists[:, 0, 0] = np.pi / 2  # horizontal-wrist style error on column 0
    b = HandPoseSequence(a.clock, wrists, a.apertures, a.confidences, a.facing)
    dev = wrist_axis_deviation(b, a)
    assert np.all(dev[:, 0] == pytest.approx(np.pi / 2, abs=1e-6))
    assert np.all(dev[:, 1] < 1e-9)
