"""Simplified humanoid kinematics used by the replay checker and by the
synthetic motion generator.

The model is a stand-in for a real tracking stack: pelvis-rooted 2-link legs
and arms, enough for ankle/wrist forward kinematics, joint/velocity limit
checks, and stance detection.  The leg and arm chains hang rigidly off the
pelvis frame (no spine articulation) - a documented simplification.

World frame: z-up, +x along the subject's initial facing.  Joint rotations
are SMPL-ordered local axis-angle; a joint's world rotation is the root
rotation composed with its chain parents.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from ..bridge.hands import HandCalibration, default_calibration
from ..errors import InvalidArgument
from ..motion.types import SMPL_JOINT_COUNT

# SMPL joint indices used by the simplified chains
L_HIP, R_HIP = 1, 2
L_KNEE, R_KNEE = 4, 5
L_ANKLE, R_ANKLE = 7, 8
L_SHOULDER, R_SHOULDER = 16, 17
L_ELBOW, R_ELBOW = 18, 19
L_WRIST, R_WRIST = 20, 21


@dataclass(frozen=True, eq=False)
class HumanoidModel:
    """Geometry, joint limits, and hand calibration of the replay humanoid."""

    # per-joint allowed rotation magnitude interval [lo, hi] (radians)
    joint_angle_limits: np.ndarray = field(
        default_factory=lambda: np.tile(np.array([0.0, 2.9]), (SMPL_JOINT_COUNT, 1)))
    # per-joint angular speed cap (rad/s, geodesic rate between frames)
    joint_velocity_limits: np.ndarray = field(
        default_factory=lambda: np.full(SMPL_JOINT_COUNT, 12.0))
    hip_half_width: float = 0.09
    thigh_len: float = 0.40
    shin_len: float = 0.40
    shoulder_half_width: float = 0.15
    shoulder_height: float = 0.35   # above pelvis
    upper_arm_len: float = 0.22
    forearm_len: float = 0.22
    pelvis_height: float = 0.75    # nominal standing pelvis height
    sole_height: float = 0.05      # ankle height when the foot is planted
    stance_margin: float = 0.01    # ankle below sole+margin counts as stance
    hand_calibration: HandCalibration = field(default_factory=default_calibration)

    def __post_init__(self):
        limits = np.asarray(self.joint_angle_limits, dtype=np.float64)
        if limits.shape != (SMPL_JOINT_COUNT, 2) or np.any(limits[:, 0] > limits[:, 1]):
            raise InvalidArgument("joint_angle_limits must be [24, 2] with lo <= hi")
        vel = np.asarray(self.joint_velocity_limits, dtype=np.float64)
        if vel.shape != (SMPL_JOINT_COUNT,) or np.any(vel <= 0):
            raise InvalidArgument("joint_velocity_limits must be 24 positive rates")
        for name in ("thigh_len", "shin_len", "upper_arm_len", "forearm_len"):
            if not getattr(self, name) > 0:
                raise InvalidArgument(f"{name} must be positive")
        object.__setattr__(self, "joint_angle_limits", limits)
        object.__setattr__(self, "joint_velocity_limits", vel)

    @property
    def stance_threshold(self) -> float:
        return self.sole_height + self.stance_margin

    def hip_offset(self, side: str) -> np.ndarray:
        sign = 1.0 if side == "left" else -1.0
        return np.array([0.0, sign * self.hip_half_width, 0.0])

    def shoulder_offset(self, side: str) -> np.ndarray:
        sign = 1.0 if side == "left" else -1.0
        return np.array([0.0, sign * self.shoulder_half_width, self.shoulder_height])


def default_model() -> HumanoidModel:
    return HumanoidModel()


def _chain_end(root_pos: np.ndarray, root_rotvec: np.ndarray, offset: np.ndarray,
               joint1_rotvec: np.ndarray, joint2_rotvec: np.ndarray,
               l1: float, l2: float) -> np.ndarray:
    """End position of a 2-link chain for [T] stacked frames."""
    r0 = Rotation.from_rotvec(np.asarray(root_rotvec, dtype=np.float64))
    r1 = r0 * Rotation.from_rotvec(np.asarray(joint1_rotvec, dtype=np.float64))
    r2 = r1 * Rotation.from_rotvec(np.asarray(joint2_rotvec, dtype=np.float64))
    base = np.asarray(root_pos, dtype=np.float64) + r0.apply(offset)
    mid = base + r1.apply(np.array([0.0, 0.0, -l1]))
    return mid + r2.apply(np.array([0.0, 0.0, -l2]))


def ankle_positions(rotations: np.ndarray, root_positions: np.ndarray,
                    model: HumanoidModel, side: str) -> np.ndarray:
    """World ankle positions, [T, 3], from [T, 24, 3] rotations."""
    hip, knee = (L_HIP, L_KNEE) if side == "left" else (R_HIP, R_KNEE)
    rots = np.atleast_3d(np.asarray(rotations, dtype=np.float64))
    pos = np.atleast_2d(np.asarray(root_positions, dtype=np.float64))
    return _chain_end(pos, rots[:, 0], model.hip_offset(side),
                      rots[:, hip], rots[:, knee], model.thigh_len, model.shin_len)


def wrist_positions(rotations: np.ndarray, root_positions: np.ndarray,
                    model: HumanoidModel, side: str) -> np.ndarray:
    """World wrist positions, [T, 3]."""
    sh, el = (L_SHOULDER, L_ELBOW) if side == "left" else (R_SHOULDER, R_ELBOW)
    rots = np.atleast_3d(np.asarray(rotations, dtype=np.float64))
    pos = np.atleast_2d(np.asarray(root_positions, dtype=np.float64))
    return _chain_end(pos, rots[:, 0], model.shoulder_offset(side),
                      rots[:, sh], rots[:, el], model.upper_arm_len, model.forearm_len)


def two_link_ik(target_local: np.ndarray, l1: float, l2: float,
                bend_sign: float = -1.0) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form 2-link IK in the chain-base local frame.

    target_local: [3] vector from the chain base (hip/shoulder) to the end
    effector, expressed in the parent (pelvis) frame.  Returns (joint1_rotvec,
    joint2_rotvec) such that the forward chain in _chain_end reaches the
    target (clamped into the annulus of reachable radii).

    bend_sign -1 bends the middle joint like a human knee (segment apex
    forward of the chain line); +1 bends like an elbow reaching forward.
    """
    d = np.asarray(target_local, dtype=np.float64)
    rho = float(np.hypot(d[0], d[1]))
    azim = float(np.arctan2(d[1], d[0])) if rho > 1e-9 else 0.0
    depth = -float(d[2])  # positive downward
    r = float(np.hypot(rho, depth))
    r = min(max(r, abs(l1 - l2) + 1e-9), l1 + l2 - 1e-9)
    cos_q2 = (r * r - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)
    q2 = bend_sign * float(np.arccos(np.clip(cos_q2, -1.0, 1.0)))
    q1 = float(np.arctan2(rho, depth)) - float(
        np.arctan2(l2 * np.sin(q2), l1 + l2 * np.cos(q2)))
    joint1 = (Rotation.from_euler("z", azim) * Rotation.from_euler("y", -q1)).as_rotvec()
    joint2 = np.array([0.0, -q2, 0.0])
    return joint1, joint2
