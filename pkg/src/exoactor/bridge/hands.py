"""Hand-side command mapping: viewpoint-conditioned handedness resolution,
grasp-state to 7-DoF joint targets, and rate limiting.

Joint order (7 DoF, thumb first): thumb rotation, thumb MCP, thumb IP,
index MCP, index PIP, middle MCP, middle PIP.  The shipped calibration uses
placeholder symmetric values and must be recalibrated against real hardware.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgument
from ..motion.types import FacingMode, HandPoseSequence, InteractionStateSequence

HAND_DOF = 7


@dataclass(frozen=True, eq=False)
class HandJointTargets:
    """One hand command: 7 joint positions in radians."""

    joints: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.joints, dtype=np.float32).reshape(HAND_DOF).copy()
        arr.flags.writeable = False
        object.__setattr__(self, "joints", arr)

    def __eq__(self, other):
        return isinstance(other, HandJointTargets) and np.array_equal(self.joints, other.joints)

    def __hash__(self):
        return hash(self.joints.tobytes())


@dataclass(frozen=True, eq=False)
class HandCalibration:
    """Per-state joint poses plus limits and speed cap for one hand model."""

    open_pose: HandJointTargets
    half_pose: HandJointTargets
    closed_pose: HandJointTargets
    joint_limits: np.ndarray  # [7, 2] (lo, hi) radians
    max_joint_speed: float    # rad/s

    def __post_init__(self):
        limits = np.asarray(self.joint_limits, dtype=np.float64).reshape(HAND_DOF, 2).copy()
        if np.any(limits[:, 0] > limits[:, 1]):
            raise InvalidArgument("joint limit intervals must satisfy lo <= hi")
        limits.flags.writeable = False
        object.__setattr__(self, "joint_limits", limits)
        if not self.max_joint_speed > 0:
            raise InvalidArgument("max_joint_speed must be positive")
        poses = [self.open_pose, self.half_pose, self.closed_pose]
        for pose in poses:
            j = pose.joints.astype(np.float64)
            if np.any(j < limits[:, 0] - 1e-9) or np.any(j > limits[:, 1] + 1e-9):
                raise InvalidArgument("calibration pose outside joint limits")
        for i in range(3):
            for k in range(i + 1, 3):
                if poses[i] == poses[k]:
                    raise InvalidArgument("calibration poses must be pairwise distinct")

    def pose_for(self, state: int) -> HandJointTargets:
        if state == 0:
            return self.open_pose
        if state == 1:
            return self.half_pose
        if state == 2:
            return self.closed_pose
        raise InvalidArgument(f"grasp state must be 0, 1 or 2, got {state}")


def default_calibration() -> HandCalibration:
    # placeholder symmetric values; real joint maps come from hardware bring-up
    return HandCalibration(
        open_pose=HandJointTargets(np.zeros(HAND_DOF)),
        half_pose=HandJointTargets([0.0, 0.35, 0.35, 0.5, 0.5, 0.5, 0.5]),
        closed_pose=HandJointTargets([0.0, 0.8, 0.8, 1.2, 1.2, 1.2, 1.2]),
        joint_limits=np.array([[-1.6, 1.6]] + [[-0.3, 1.7]] * 6),
        max_joint_speed=8.0,
    )


@dataclass(frozen=True, eq=False)
class RobotHandTrack:
    """One robot hand's time series after handedness resolution."""

    side: str  # "left" | "right"
    wrist_rotations: np.ndarray  # [T, 3]
    apertures: np.ndarray        # [T]
    confidences: np.ndarray      # [T]
    states: np.ndarray           # [T] uint8


def resolve_handedness(hands: HandPoseSequence,
                       states: InteractionStateSequence) -> tuple[RobotHandTrack, RobotHandTrack]:
    """Map hand columns onto robot hands using the recorded facing.

    FRONT: columns are anatomical, column 0 drives the robot's left hand.
    BACK: columns are image-plane, so image-plane left (column 0) is the
    subject's anatomical right and drives the robot's right hand.
    """
    def track(side: str, col: int) -> RobotHandTrack:
        return RobotHandTrack(
            side=side,
            wrist_rotations=hands.wrist_rotations[:, col, :],
            apertures=hands.apertures[:, col],
            confidences=hands.confidences[:, col],
            states=states.states[:, col],
        )

    if hands.facing is FacingMode.FRONT:
        return track("left", 0), track("right", 1)
    return track("left", 1), track("right", 0)


def state_to_joints(state: int, previous: HandJointTargets, dt: float,
                    calib: HandCalibration) -> HandJointTargets:
    """Advance one control step toward the calibrated pose for `state`.

    Each joint moves at most max_joint_speed * dt per call and lands exactly
    on the target once within one step, so a held state converges in
    ceil(max_delta / (max_speed * dt)) steps and then stays fixed.
    """
    if state not in (0, 1, 2):
        raise InvalidArgument(f"grasp state must be 0, 1 or 2, got {state}")
    if not dt > 0:
        raise InvalidArgument(f"dt must be positive, got {dt}")
    target = calib.pose_for(state).joints.astype(np.float64)
    prev = previous.joints.astype(np.float64)
    step = calib.max_joint_speed * dt
    delta = np.clip(target - prev, -step, step)
    return HandJointTargets(prev + delta)
