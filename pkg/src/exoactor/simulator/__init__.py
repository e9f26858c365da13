from .model import (
    HumanoidModel,
    default_model,
    two_link_ik,
    ankle_positions,
    wrist_positions,
    L_HIP, R_HIP, L_KNEE, R_KNEE, L_ANKLE, R_ANKLE,
    L_SHOULDER, R_SHOULDER, L_ELBOW, R_ELBOW,
)
from .replay import (
    FailureClass,
    FeasibilityReport,
    TargetSpec,
    Tolerances,
    classify,
    replay,
    render_report,
    per_frame_table,
)
from .metrics import foot_slide_metric, stance_mask

__all__ = [
    "HumanoidModel",
    "default_model",
    "two_link_ik",
    "ankle_positions",
    "wrist_positions",
    "FailureClass",
    "FeasibilityReport",
    "TargetSpec",
    "Tolerances",
    "classify",
    "replay",
    "render_report",
    "per_frame_table",
    "foot_slide_metric",
    "stance_mask",
    "L_HIP", "R_HIP", "L_KNEE", "R_KNEE", "L_ANKLE", "R_ANKLE",
    "L_SHOULDER", "R_SHOULDER", "L_ELBOW", "R_ELBOW",
]
