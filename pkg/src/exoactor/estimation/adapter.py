"""Estimator adapters: in-process synthetic oracle and the remote-service
client, plus aperture quantization and final assembly of the synchronized
interaction-aware motion."""
from __future__ import annotations

import numpy as np
import requests

from ..errors import EstimationError, InputError, InvalidArgument, TransportError
from ..motion.archive import read_archive
from ..motion.ops import smooth_states, synchronize, validate
from ..motion.rotation import canonicalize_axis_angle
from ..motion.types import (
    BodyMotionSequence,
    FacingMode,
    HandPoseSequence,
    InteractionAwareMotion,
    InteractionStateSequence,
)
from .oracle import synthetic_oracle
from .types import EstimatorDescriptor, ScenarioFamily, ScenarioScript, TransportKind, VideoClip

DEFAULT_OPEN_THRESH = 0.7
DEFAULT_CLOSED_THRESH = 0.3
LOW_CONFIDENCE = 0.5
ASSEMBLE_MIN_DWELL = 5  # ~0.2 s at 24 fps, below human grasp-transition time


class OracleEstimator:
    """Serves scripted scenario output sized to whatever clip is presented."""

    def __init__(self, script: ScenarioScript):
        self.script = script

    def _sized(self, clip: VideoClip, facing: FacingMode | None = None) -> ScenarioScript:
        from dataclasses import replace
        kwargs = dict(fps=clip.fps, frame_count=clip.frame_count)
        if facing is not None:
            kwargs["facing"] = facing
        return replace(self.script, **kwargs)

    def estimate_body(self, clip: VideoClip) -> BodyMotionSequence:
        body, _, _ = synthetic_oracle(self._sized(clip))
        return body

    def estimate_hands(self, clip: VideoClip, facing: FacingMode) -> HandPoseSequence:
        _, hands, _ = synthetic_oracle(self._sized(clip, facing))
        return hands

    def states(self, clip: VideoClip, facing: FacingMode) -> InteractionStateSequence:
        _, _, states = synthetic_oracle(self._sized(clip, facing))
        return states


class RemoteEstimator:
    """Client for the estimation wire protocol.

    Request: multipart POST with a `video` file part (MP4 bytes) and a
    `params` text part ("facing=...\\nfps=...\\nframe_count=...\\n").
    Response: motion archive bytes.
    """

    def __init__(self, endpoint: str, timeout_s: float = 60.0, session=None):
        self.endpoint = endpoint.rstrip("/")
        self.timeout_s = timeout_s
        self.session = session or requests.Session()

    def _call(self, path: str, clip: VideoClip, facing: FacingMode) -> bytes:
        params = f"facing={facing.value}\nfps={clip.fps!r}\nframe_count={clip.frame_count}\n"
        video_bytes = _clip_bytes(clip)
        try:
            resp = self.session.post(
                self.endpoint + path,
                files={"video": ("clip.mp4", video_bytes, "video/mp4"),
                       "params": ("params.txt", params.encode(), "text/plain")},
                timeout=self.timeout_s,
            )
        except requests.RequestException as exc:
            raise TransportError(f"estimator endpoint unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise TransportError(
                f"estimator returned {resp.status_code}: {resp.text[:200]}")
        return resp.content

    def estimate_body(self, clip: VideoClip) -> BodyMotionSequence:
        facing = clip.facing_hint or FacingMode.FRONT
        return read_archive(self._call("/estimate/body", clip, facing)).body

    def estimate_hands(self, clip: VideoClip, facing: FacingMode) -> HandPoseSequence:
        return read_archive(self._call("/estimate/hands", clip, facing)).hands

    def health(self) -> dict:
        try:
            resp = self.session.get(self.endpoint + "/health", timeout=self.timeout_s)
        except requests.RequestException as exc:
            raise TransportError(f"estimator endpoint unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise TransportError(f"health check returned {resp.status_code}")
        return resp.json()


def _clip_bytes(clip: VideoClip) -> bytes:
    path = getattr(clip.artifact, "path", None)
    if path is None:
        return b""
    with open(path, "rb") as fh:
        return fh.read()


def resolve_estimator(backend: EstimatorDescriptor):
    """Turn a descriptor into a callable backend; objects pass through."""
    if not isinstance(backend, EstimatorDescriptor):
        return backend
    if backend.transport is TransportKind.REMOTE_SERVICE:
        return RemoteEstimator(backend.endpoint)
    parts = backend.name.split(":")
    if parts[0] != "oracle" or len(parts) < 2:
        raise InvalidArgument(
            f"in-process estimator name must read 'oracle:<FAMILY>[...]', got {backend.name!r}")
    try:
        family = ScenarioFamily(parts[1])
    except ValueError:
        raise InvalidArgument(f"unknown scenario family {parts[1]!r}") from None
    kwargs = {}
    for item in parts[2:]:
        key, _, value = item.partition("=")
        kwargs[key] = float(value) if key != "grasp_hand" else value
    return OracleEstimator(ScenarioScript(family=family, **kwargs))


def _check_clip(clip: VideoClip) -> None:
    if clip.frame_count < 1:
        raise InputError(f"zero-length clip ({clip.frame_count} frames)")


def estimate_body(clip: VideoClip, backend) -> BodyMotionSequence:
    """Whole-body estimation with adapter-level guarantees: frame count
    preserved, no NaN frames, canonical axis-angles."""
    _check_clip(clip)
    impl = resolve_estimator(backend)
    body = impl.estimate_body(clip)
    if body.clock.frame_count != clip.frame_count:
        raise EstimationError(
            f"backend returned {body.clock.frame_count} frames for a "
            f"{clip.frame_count}-frame clip")
    bad = ~np.isfinite(body.joint_rotations).all(axis=(1, 2))
    bad |= ~np.isfinite(body.root_positions).all(axis=1)
    if bad.any():
        frames = np.nonzero(bad)[0].tolist()
        raise EstimationError(f"backend returned non-finite frames {frames[:10]}",
                              frames=frames)
    rots = canonicalize_axis_angle(body.joint_rotations)
    return BodyMotionSequence(body.clock, rots, body.root_positions)


def estimate_hands(clip: VideoClip, facing: FacingMode, backend) -> HandPoseSequence:
    """Bilateral hand estimation at the clip rate (one row per video frame)."""
    _check_clip(clip)
    if not isinstance(facing, FacingMode):
        raise InvalidArgument(f"facing must be a FacingMode, got {facing!r}")
    impl = resolve_estimator(backend)
    hands = impl.estimate_hands(clip, facing)
    if hands.clock.frame_count != clip.frame_count:
        raise EstimationError(
            f"backend returned {hands.clock.frame_count} hand frames for a "
            f"{clip.frame_count}-frame clip")
    if hands.facing is not facing:
        hands = HandPoseSequence(hands.clock, hands.wrist_rotations, hands.apertures,
                                 hands.confidences, facing)
    return hands


def quantize_states(hands: HandPoseSequence,
                    open_thresh: float = DEFAULT_OPEN_THRESH,
                    closed_thresh: float = DEFAULT_CLOSED_THRESH) -> InteractionStateSequence:
    """Threshold apertures into {open, half-open, closed}.

    aperture > open_thresh -> 0; aperture < closed_thresh -> 2; else 1.
    Frames with confidence below 0.5 inherit the previous frame's state
    (grasp state is categorical; carrying the last confident state avoids
    inventing transitions), with the first frame defaulting to open.
    """
    if not (0.0 < closed_thresh < open_thresh < 1.0):
        raise InvalidArgument(
            f"thresholds must satisfy 0 < closed < open < 1, got "
            f"closed={closed_thresh}, open={open_thresh}")
    ap = hands.apertures.astype(np.float64)
    conf = hands.confidences.astype(np.float64)
    raw = np.ones(ap.shape, dtype=np.uint8)
    raw[ap > open_thresh] = 0
    raw[ap < closed_thresh] = 2
    out = np.empty_like(raw)
    low = conf < LOW_CONFIDENCE
    for c in range(ap.shape[1]):
        prev = np.uint8(0)
        for f in range(ap.shape[0]):
            prev = prev if low[f, c] else raw[f, c]
            out[f, c] = prev
    return InteractionStateSequence(hands.clock, out)


def assemble(body: BodyMotionSequence, hands: HandPoseSequence,
             states: InteractionStateSequence,
             min_dwell_frames: int = ASSEMBLE_MIN_DWELL) -> InteractionAwareMotion:
    """Synchronize onto the body clock, then de-flicker the grasp states.

    The result always passes motion validation; a failure here means a
    backend handed us something the adapter checks should have caught.
    """
    motion = synchronize(body, hands, states)
    smoothed = smooth_states(motion.states, min_dwell_frames)
    out = InteractionAwareMotion(motion.body, motion.hands, smoothed,
                                 source_fps=motion.source_fps)
    report = validate(out)
    if not report.ok:
        raise EstimationError(f"assembled motion failed validation:\n{report}")
    return out


def wrist_axis_deviation(estimated: HandPoseSequence,
                         reference: HandPoseSequence) -> np.ndarray:
    """[T, 2] geodesic angle (radians) between estimated and reference wrist
    rotations.  Diagnostic for the known vertical-grasp-estimated-as-
    horizontal wrist failure mode; reported, never silently corrected."""
    from scipy.spatial.transform import Rotation

    t = min(estimated.clock.frame_count, reference.clock.frame_count)
    out = np.zeros((t, 2))
    for c in range(2):
        re = Rotation.from_rotvec(estimated.wrist_rotations[:t, c].astype(np.float64))
        rr = Rotation.from_rotvec(reference.wrist_rotations[:t, c].astype(np.float64))
        out[:, c] = (re.inv() * rr).magnitude()
    return out
