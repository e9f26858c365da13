"""Synthetic motion oracle: closed-form scripted scenarios with exact ground
truth, standing in for the neural estimators during desk-scale runs.

All scenarios are analytic and noise-free: linear pelvis translation,
IK-scripted stepping with exact footfalls (the stance ankle is pinned to its
anchor, so true foot slide is zero up to float rounding), and scripted
aperture ramps.  Output is bit-deterministic given (scenario, seed).
"""
from __future__ import annotations

import math

import numpy as np

from ..motion.types import (
    BodyMotionSequence,
    FacingMode,
    FrameClock,
    HandPoseSequence,
    InteractionStateSequence,
)
from ..errors import InvalidArgument
from ..simulator.model import (
    HumanoidModel,
    L_ELBOW,
    L_HIP,
    L_KNEE,
    L_SHOULDER,
    R_ELBOW,
    R_HIP,
    R_KNEE,
    R_SHOULDER,
    default_model,
    two_link_ik,
)
from .types import GraspEvent, GroundTruth, ScenarioFamily, ScenarioScript

GAIT_CYCLE_S = 0.8
SWING_LIFT = 0.06
SWING_RISE_FRAC = 0.2   # vertical-only fraction at each end of swing
NEUTRAL_SHOULDER = 0.15  # forward tilt, radians
NEUTRAL_ELBOW = 0.40

# reach/grasp/release timeline as fractions of the clip duration
_REACH = (0.15, 0.35)
_CLOSE_RAMP = (0.35, 0.45)
_OPEN_RAMP = (0.60, 0.70)
_RETRACT = (0.70, 0.90)


def _planar_ik(forward, down, l1: float, l2: float, bend_sign: float):
    """Vectorized 2-link IK in a vertical plane; returns (q1, q2)."""
    forward = np.asarray(forward, dtype=np.float64)
    down = np.asarray(down, dtype=np.float64)
    r = np.hypot(forward, down)
    r = np.clip(r, abs(l1 - l2) + 1e-9, l1 + l2 - 1e-9)
    cos_q2 = (r * r - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)
    q2 = bend_sign * np.arccos(np.clip(cos_q2, -1.0, 1.0))
    q1 = np.arctan2(forward, down) - np.arctan2(l2 * np.sin(q2), l1 + l2 * np.cos(q2))
    return q1, q2


def _planar_fk(q1, q2, l1: float, l2: float):
    """(forward, down) end position of the planar 2-link chain."""
    return (l1 * np.sin(q1) + l2 * np.sin(q1 + q2),
            l1 * np.cos(q1) + l2 * np.cos(q1 + q2))


def _smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def _leg_ankle_track(times: np.ndarray, speed: float, side: str,
                     model: HumanoidModel) -> tuple[np.ndarray, np.ndarray]:
    """Scripted world ankle (x, z) for straight-line walking.

    Left leg swings in the first half of each gait cycle, right in the
    second; anchors are placed so the stance ankle is exactly stationary.
    """
    half = GAIT_CYCLE_S / 2.0
    mid_frac = 0.75 if side == "left" else 0.25  # stance midpoint within cycle

    def anchor(k):
        return speed * (k * GAIT_CYCLE_S + mid_frac * GAIT_CYCLE_S)

    x = np.empty_like(times)
    z = np.empty_like(times)
    for i, t in enumerate(times):
        k = math.floor(t / GAIT_CYCLE_S)
        tau = t / GAIT_CYCLE_S - k
        swinging = tau < 0.5 if side == "left" else tau >= 0.5
        if not swinging:
            x[i] = anchor(k)
            z[i] = model.sole_height
        else:
            s = tau / 0.5 if side == "left" else (tau - 0.5) / 0.5
            a = anchor(k - 1) if side == "left" else anchor(k)
            b = anchor(k) if side == "left" else anchor(k + 1)
            if s < SWING_RISE_FRAC:
                x[i] = a
                z[i] = model.sole_height + SWING_LIFT * math.sin(
                    0.5 * math.pi * s / SWING_RISE_FRAC)
            elif s > 1.0 - SWING_RISE_FRAC:
                x[i] = b
                z[i] = model.sole_height + SWING_LIFT * math.sin(
                    0.5 * math.pi * (1.0 - s) / SWING_RISE_FRAC)
            else:
                u = (s - SWING_RISE_FRAC) / (1.0 - 2.0 * SWING_RISE_FRAC)
                x[i] = a + (b - a) * float(_smoothstep(u))
                z[i] = model.sole_height + SWING_LIFT
    return x, z


def _walk_line_angles(times: np.ndarray, speed: float, side: str,
                      model: HumanoidModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(q1, q2, ankle_x) for one leg of straight-line walking."""
    ankle_x, ankle_z = _leg_ankle_track(times, speed, side, model)
    hip_x = speed * times
    hip_z = model.pelvis_height
    q1, q2 = _planar_ik(ankle_x - hip_x, hip_z - ankle_z,
                        model.thigh_len, model.shin_len, bend_sign=-1.0)
    return q1, q2, ankle_x


def _planted_leg_angles(model: HumanoidModel) -> tuple[float, float]:
    q1, q2 = _planar_ik(0.0, model.pelvis_height - model.sole_height,
                        model.thigh_len, model.shin_len, bend_sign=-1.0)
    return float(q1), float(q2)


def _neutral_wrist_point(model: HumanoidModel) -> tuple[float, float]:
    """(forward, height) of the wrist in the relaxed arm pose."""
    fwd, down = _planar_fk(NEUTRAL_SHOULDER, NEUTRAL_ELBOW,
                           model.upper_arm_len, model.forearm_len)
    shoulder_z = model.pelvis_height + model.shoulder_height
    return float(fwd), float(shoulder_z - down)


def _acting_column(script: ScenarioScript) -> int:
    """Hand column carrying the grasp, given anatomical side and facing."""
    anatomical_right = script.grasp_hand == "right"
    if script.facing is FacingMode.FRONT:
        return 1 if anatomical_right else 0
    return 0 if anatomical_right else 1


def _reach_tracks(script: ScenarioScript, model: HumanoidModel):
    """Per-frame (q1, q2) of the acting arm, apertures, and states."""
    times = script.times()
    d = float(times[-1]) if times[-1] > 0 else 1.0
    nx, nz = _neutral_wrist_point(model)
    gx = script.reach_forward
    gz = script.grasp_target_height + script.wrist_height_offset
    shoulder_z = model.pelvis_height + model.shoulder_height

    reach_u = _smoothstep((times - _REACH[0] * d) / ((_REACH[1] - _REACH[0]) * d))
    retract_u = _smoothstep((times - _RETRACT[0] * d) / ((_RETRACT[1] - _RETRACT[0]) * d))
    blend = reach_u * (1.0 - retract_u)
    wx = nx + (gx - nx) * blend
    wz = nz + (gz - nz) * blend
    q1, q2 = _planar_ik(wx, shoulder_z - wz, model.upper_arm_len,
                        model.forearm_len, bend_sign=1.0)

    aperture = np.ones_like(times)
    closing = (times - _CLOSE_RAMP[0] * d) / ((_CLOSE_RAMP[1] - _CLOSE_RAMP[0]) * d)
    opening = (times - _OPEN_RAMP[0] * d) / ((_OPEN_RAMP[1] - _OPEN_RAMP[0]) * d)
    aperture = np.minimum(1.0 - np.clip(closing, 0.0, 1.0) + np.clip(opening, 0.0, 1.0), 1.0)
    states = (aperture < 0.5).astype(np.uint8) * 2
    return q1, q2, aperture, states


def synthetic_oracle(scenario: ScenarioScript) -> tuple[
        BodyMotionSequence, HandPoseSequence, InteractionStateSequence]:
    """Generate the scripted (body, hands, states) triple for a scenario."""
    if not isinstance(scenario.family, ScenarioFamily):
        raise InvalidArgument(f"unknown scenario family {scenario.family!r}")
    model = default_model()
    times = scenario.times()
    t = len(times)
    clock = FrameClock(fps=scenario.fps, frame_count=t)

    rots = np.zeros((t, 24, 3), dtype=np.float64)
    pos = np.zeros((t, 3), dtype=np.float64)
    pos[:, 2] = model.pelvis_height
    apertures = np.ones((t, 2), dtype=np.float64)
    confidences = np.ones((t, 2), dtype=np.float64)
    states = np.zeros((t, 2), dtype=np.uint8)

    # relaxed arms unless a reach overrides one side
    for sh, el in ((L_SHOULDER, L_ELBOW), (R_SHOULDER, R_ELBOW)):
        rots[:, sh, 1] = -NEUTRAL_SHOULDER
        rots[:, el, 1] = -NEUTRAL_ELBOW

    family = scenario.family
    if family is ScenarioFamily.STAND or family is ScenarioFamily.REACH_GRASP_PLACE:
        q1, q2 = _planted_leg_angles(model)
        for hip, knee in ((L_HIP, L_KNEE), (R_HIP, R_KNEE)):
            rots[:, hip, 1] = -q1
            rots[:, knee, 1] = -q2
        if family is ScenarioFamily.REACH_GRASP_PLACE:
            aq1, aq2, aperture, col_states = _reach_tracks(scenario, model)
            sh, el = (R_SHOULDER, R_ELBOW) if scenario.grasp_hand == "right" \
                else (L_SHOULDER, L_ELBOW)
            rots[:, sh, 1] = -aq1
            rots[:, el, 1] = -aq2
            col = _acting_column(scenario)
            apertures[:, col] = aperture
            states[:, col] = col_states
    elif family is ScenarioFamily.WALK_LINE:
        pos[:, 0] = scenario.walk_speed * times
        for side, hip, knee in (("left", L_HIP, L_KNEE), ("right", R_HIP, R_KNEE)):
            q1, q2, _ = _walk_line_angles(times, scenario.walk_speed, side, model)
            rots[:, hip, 1] = -q1
            rots[:, knee, 1] = -q2
    elif family is ScenarioFamily.WALK_TURN:
        omega = math.radians(scenario.turn_rate_deg_s)
        path_x, path_y, psi = _turn_path(times, scenario.walk_speed, omega)
        pos[:, 0] = path_x
        pos[:, 1] = path_y
        rots[:, 0, 2] = psi
        _fill_turn_legs(rots, pos, times, scenario.walk_speed, omega, model)

    body = BodyMotionSequence(clock, rots, pos)
    hands = HandPoseSequence(clock, np.zeros((t, 2, 3)), apertures, confidences,
                             scenario.facing)
    state_seq = InteractionStateSequence(clock, states)
    return body, hands, state_seq


def _turn_path(times, speed: float, omega: float):
    if abs(omega) < 1e-9:
        return speed * times, np.zeros_like(times), np.zeros_like(times)
    psi = omega * times
    return (speed / omega) * np.sin(psi), (speed / omega) * (1.0 - np.cos(psi)), psi


def _fill_turn_legs(rots, pos, times, speed, omega, model: HumanoidModel):
    """Arc-walking legs: anchors on the path, full 3D IK per frame."""
    half = GAIT_CYCLE_S / 2.0

    def anchor(side, k):
        mid_frac = 0.75 if side == "left" else 0.25
        tm = k * GAIT_CYCLE_S + mid_frac * GAIT_CYCLE_S
        x, y, psi = _turn_path(np.array([tm]), speed, omega)
        sign = 1.0 if side == "left" else -1.0
        lx = x[0] - math.sin(psi[0]) * sign * model.hip_half_width
        ly = y[0] + math.cos(psi[0]) * sign * model.hip_half_width
        return np.array([lx, ly, model.sole_height])

    for i, t in enumerate(times):
        k = math.floor(t / GAIT_CYCLE_S)
        tau = t / GAIT_CYCLE_S - k
        root_rv = rots[i, 0]
        psi = root_rv[2]
        cos_p, sin_p = math.cos(psi), math.sin(psi)
        for side, hip_j, knee_j in (("left", L_HIP, L_KNEE), ("right", R_HIP, R_KNEE)):
            swinging = tau < 0.5 if side == "left" else tau >= 0.5
            if not swinging:
                target = anchor(side, k)
            else:
                s = tau / 0.5 if side == "left" else (tau - 0.5) / 0.5
                a = anchor(side, k - 1) if side == "left" else anchor(side, k)
                b = anchor(side, k) if side == "left" else anchor(side, k + 1)
                target = a.copy()
                if s < SWING_RISE_FRAC:
                    target[2] += SWING_LIFT * math.sin(0.5 * math.pi * s / SWING_RISE_FRAC)
                elif s > 1.0 - SWING_RISE_FRAC:
                    target = b.copy()
                    target[2] += SWING_LIFT * math.sin(
                        0.5 * math.pi * (1.0 - s) / SWING_RISE_FRAC)
                else:
                    u = (s - SWING_RISE_FRAC) / (1.0 - 2.0 * SWING_RISE_FRAC)
                    w = float(_smoothstep(u))
                    target = a + (b - a) * w
                    target[2] = model.sole_height + SWING_LIFT
            sign = 1.0 if side == "left" else -1.0
            hip_world = pos[i] + np.array([-sin_p * sign * model.hip_half_width,
                                           cos_p * sign * model.hip_half_width, 0.0])
            delta = target - hip_world
            d_local = np.array([cos_p * delta[0] + sin_p * delta[1],
                                -sin_p * delta[0] + cos_p * delta[1],
                                delta[2]])
            j1, j2 = two_link_ik(d_local, model.thigh_len, model.shin_len, bend_sign=-1.0)
            rots[i, hip_j] = j1
            rots[i, knee_j] = j2


def _dense_walk_slide(script: ScenarioScript, control_fps: float,
                      model: HumanoidModel) -> float:
    """Foot slide of the linearly-interpolated walk at the control rate.

    Planar trig evaluation, independent of the production resample/FK path:
    joint angles are single-axis so slerp reduces to linear angle
    interpolation between script samples.
    """
    times = script.times()
    n_in = len(times)
    if n_in < 2:
        return 0.0
    duration = float(times[-1])
    n_out = int(math.floor(duration * control_fps + 1e-9)) + 1
    x = np.clip(np.arange(n_out, dtype=np.float64) * (script.fps / control_fps),
                0.0, n_in - 1)
    lo = np.minimum(np.floor(x).astype(int), n_in - 2)
    w = x - lo
    total = 0.0
    for side in ("left", "right"):
        q1, q2, _ = _walk_line_angles(times, script.walk_speed, side, model)
        hip_x = script.walk_speed * times
        q1_i = q1[lo] * (1.0 - w) + q1[lo + 1] * w
        q2_i = q2[lo] * (1.0 - w) + q2[lo + 1] * w
        hip_i = hip_x[lo] * (1.0 - w) + hip_x[lo + 1] * w
        fwd, down = _planar_fk(q1_i, q2_i, model.thigh_len, model.shin_len)
        ax = hip_i + fwd
        az = model.pelvis_height - down
        stance = az < model.stance_threshold
        both = stance[1:] & stance[:-1]
        total += float(np.abs(np.diff(ax))[both].sum())
    return total


def ground_truth(scenario: ScenarioScript, control_fps: float | None = None) -> GroundTruth:
    """Analytic truth for scoring: final pose, grasp events, slide bound.

    The foot-slide bound covers the interpolation wobble introduced by
    resampling to `control_fps` (defaults to the script rate); WALK_TURN
    promises no bound.
    """
    model = default_model()
    times = scenario.times()
    t_last = float(times[-1])
    control = control_fps if control_fps is not None else scenario.fps
    slack = 1.5e-3  # float32 storage + codec rounding

    final = np.array([0.0, 0.0, model.pelvis_height])
    transitions = {"left": 0, "right": 0}
    events: tuple[GraspEvent, ...] = ()
    slide_bound: float | None = slack

    family = scenario.family
    if family is ScenarioFamily.WALK_LINE:
        final[0] = scenario.walk_speed * t_last
        slide_bound = _dense_walk_slide(scenario, control, model) * 1.25 + slack
    elif family is ScenarioFamily.WALK_TURN:
        omega = math.radians(scenario.turn_rate_deg_s)
        x, y, _ = _turn_path(np.array([t_last]), scenario.walk_speed, omega)
        final[0], final[1] = float(x[0]), float(y[0])
        slide_bound = None
    elif family is ScenarioFamily.REACH_GRASP_PLACE:
        acting_robot = scenario.grasp_hand if scenario.facing is FacingMode.FRONT \
            else ("left" if scenario.grasp_hand == "right" else "right")
        transitions[acting_robot] = 2
        onset = (_CLOSE_RAMP[0] + 0.5 * (_CLOSE_RAMP[1] - _CLOSE_RAMP[0])) * t_last
        events = (GraspEvent(
            hand=acting_robot,
            onset_time_s=onset,
            wrist_height_m=scenario.grasp_target_height + scenario.wrist_height_offset,
            target_height_m=scenario.grasp_target_height,
        ),)

    displacement = float(np.hypot(final[0], final[1]))
    return GroundTruth(
        final_root_position=final,
        final_displacement_m=displacement,
        state_transitions=transitions,
        grasp_events=events,
        foot_slide_bound_m=slide_bound,
    )
