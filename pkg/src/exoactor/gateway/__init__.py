from .types import (
    JobKind,
    JobStatus,
    GenerationJob,
    MediaType,
    ArtifactRef,
    MetricKind,
    LedgerEntry,
    LatencyLedger,
    LatencyReport,
)
from .store import ArtifactStore
from .backends import (
    MockImageBackend,
    MockTextBackend,
    MockVideoBackend,
    FixedTextBackend,
    LiveImageBackend,
    LiveTextBackend,
    LiveVideoBackend,
    VideoFetchResult,
)
from .ops import Gateway, report_latency

__all__ = [
    "JobKind",
    "JobStatus",
    "GenerationJob",
    "MediaType",
    "ArtifactRef",
    "MetricKind",
    "LedgerEntry",
    "LatencyLedger",
    "LatencyReport",
    "ArtifactStore",
    "MockImageBackend",
    "MockTextBackend",
    "MockVideoBackend",
    "FixedTextBackend",
    "LiveImageBackend",
    "LiveTextBackend",
    "LiveVideoBackend",
    "VideoFetchResult",
    "Gateway",
    "report_latency",
]
