"""Per-frame execution-quality metrics computed from command frames."""
from __future__ import annotations

import numpy as np

from .model import HumanoidModel, ankle_positions


def _frame_arrays(frames) -> tuple[np.ndarray, np.ndarray]:
    rots = np.stack([f.rotations for f in frames]).astype(np.float64)
    pos = np.stack([f.root_position for f in frames]).astype(np.float64)
    return rots, pos


def stance_mask(ankles: np.ndarray, model: HumanoidModel) -> np.ndarray:
    """True where the foot counts as planted (ankle below sole + margin).

    Height-threshold contact is a proxy; feet sliding just above the
    threshold go uncounted.  Documented limitation.
    """
    return ankles[:, 2] < model.stance_threshold


def foot_slide_increments(frames, model: HumanoidModel) -> np.ndarray:
    """[T] per-frame slide: horizontal ankle travel summed over feet whose
    stance covers both endpoints of the step.  Element 0 is always zero."""
    if len(frames) < 2:
        return np.zeros(len(frames))
    rots, pos = _frame_arrays(frames)
    total = np.zeros(len(frames))
    for side in ("left", "right"):
        ankles = ankle_positions(rots, pos, model, side)
        stance = stance_mask(ankles, model)
        both = stance[1:] & stance[:-1]
        disp = np.linalg.norm(ankles[1:, :2] - ankles[:-1, :2], axis=1)
        total[1:] += np.where(both, disp, 0.0)
    return total


def foot_slide_metric(frames, model: HumanoidModel) -> float:
    """Total stance-phase horizontal foot travel in meters."""
    return float(foot_slide_increments(frames, model).sum())
