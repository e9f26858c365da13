from .types import (
    VideoClip,
    EstimatorDescriptor,
    TransportKind,
    ScenarioFamily,
    ScenarioScript,
    GroundTruth,
)
from .oracle import synthetic_oracle, ground_truth
from .adapter import (
    OracleEstimator,
    RemoteEstimator,
    resolve_estimator,
    estimate_body,
    estimate_hands,
    quantize_states,
    assemble,
    wrist_axis_deviation,
)

__all__ = [
    "VideoClip",
    "EstimatorDescriptor",
    "TransportKind",
    "ScenarioFamily",
    "ScenarioScript",
    "GroundTruth",
    "synthetic_oracle",
    "ground_truth",
    "OracleEstimator",
    "RemoteEstimator",
    "resolve_estimator",
    "estimate_body",
    "estimate_hands",
    "quantize_states",
    "assemble",
    "wrist_axis_deviation",
]
