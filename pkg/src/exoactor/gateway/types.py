"""Gateway datatypes: job lifecycle, artifact references, latency ledger."""
from __future__ import annotations

import enum
import hashlib
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import InvalidArgument


class JobKind(enum.Enum):
    IMAGE_EDIT = "IMAGE_EDIT"
    TEXT = "TEXT"
    VIDEO = "VIDEO"


class JobStatus(enum.Enum):
    PENDING = "PENDING"
    RUNNING = "RUNNING"
    SUCCEEDED = "SUCCEEDED"
    FAILED = "FAILED"
    TIMED_OUT = "TIMED_OUT"


_STATUS_RANK = {
    JobStatus.PENDING: 0,
    JobStatus.RUNNING: 1,
    JobStatus.SUCCEEDED: 2,
    JobStatus.FAILED: 2,
    JobStatus.TIMED_OUT: 2,
}

TERMINAL_STATUSES = frozenset(
    {JobStatus.SUCCEEDED, JobStatus.FAILED, JobStatus.TIMED_OUT})


class MediaType(enum.Enum):
    PNG_IMAGE = "PNG_IMAGE"
    MP4_VIDEO = "MP4_VIDEO"
    TEXT = "TEXT"
    MOTION_ARCHIVE = "MOTION_ARCHIVE"


@dataclass(frozen=True)
class ArtifactRef:
    """Content-addressed artifact: the path encodes the payload digest."""

    path: str
    media: MediaType
    digest: str
    size_bytes: int
    fps: float | None = None
    frame_count: int | None = None

    def read_bytes(self) -> bytes:
        return Path(self.path).read_bytes()

    def verify(self) -> bool:
        p = Path(self.path)
        if not p.exists():
            return False
        return hashlib.sha256(p.read_bytes()).hexdigest() == self.digest

    def to_dict(self) -> dict:
        return {"path": self.path, "media": self.media.value, "digest": self.digest,
                "size_bytes": self.size_bytes, "fps": self.fps,
                "frame_count": self.frame_count}

    @classmethod
    def from_dict(cls, d: dict) -> "ArtifactRef":
        return cls(path=d["path"], media=MediaType(d["media"]), digest=d["digest"],
                   size_bytes=d["size_bytes"], fps=d.get("fps"),
                   frame_count=d.get("frame_count"))


@dataclass
class GenerationJob:
    """Lifecycle record of one asynchronous generation request.

    Status only moves forward along PENDING -> RUNNING -> terminal; backward
    reports from a flaky provider are clamped.
    """

    job_id: str
    kind: JobKind
    request_digest: str
    submitted_at: float
    status: JobStatus = JobStatus.PENDING
    completed_at: float | None = None
    artifact: ArtifactRef | None = None

    def advance(self, status: JobStatus, now: float) -> None:
        if self.status in TERMINAL_STATUSES:
            return
        if _STATUS_RANK[status] < _STATUS_RANK[self.status]:
            return
        self.status = status
        if status in TERMINAL_STATUSES:
            self.completed_at = max(now, self.submitted_at)


class MetricKind(enum.Enum):
    PER_REQUEST = "PER_REQUEST"
    PER_VIDEO_SECOND = "PER_VIDEO_SECOND"


@dataclass(frozen=True)
class LedgerEntry:
    stage: str
    kind: MetricKind
    elapsed_s: float
    video_seconds: float | None = None

    def __post_init__(self):
        if self.elapsed_s < 0:
            raise InvalidArgument("elapsed_s must be >= 0")
        if self.kind is MetricKind.PER_VIDEO_SECOND and not (
                self.video_seconds and self.video_seconds > 0):
            raise InvalidArgument("PER_VIDEO_SECOND entries need video_seconds > 0")

    def rate(self) -> float:
        if self.kind is MetricKind.PER_VIDEO_SECOND:
            return self.elapsed_s / self.video_seconds
        return self.elapsed_s

    def to_dict(self) -> dict:
        return {"stage": self.stage, "kind": self.kind.value,
                "elapsed_s": self.elapsed_s, "video_seconds": self.video_seconds}

    @classmethod
    def from_dict(cls, d: dict) -> "LedgerEntry":
        return cls(stage=d["stage"], kind=MetricKind(d["kind"]),
                   elapsed_s=d["elapsed_s"], video_seconds=d.get("video_seconds"))


class LatencyLedger:
    """Append-only latency records; thread-safe; optionally persisted as
    newline-delimited JSON."""

    def __init__(self, persist_path: str | None = None):
        self._entries: list[LedgerEntry] = []
        self._lock = threading.Lock()
        self._persist = Path(persist_path) if persist_path else None

    def add(self, stage: str, kind: MetricKind, elapsed_s: float,
            video_seconds: float | None = None) -> LedgerEntry:
        entry = LedgerEntry(stage, kind, elapsed_s, video_seconds)
        with self._lock:
            self._entries.append(entry)
            if self._persist:
                with open(self._persist, "a") as fh:
                    fh.write(json.dumps(entry.to_dict()) + "\n")
        return entry

    def entries(self) -> list[LedgerEntry]:
        with self._lock:
            return list(self._entries)

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    @classmethod
    def from_entries(cls, entries) -> "LatencyLedger":
        ledger = cls()
        ledger._entries = [e if isinstance(e, LedgerEntry) else LedgerEntry.from_dict(e)
                           for e in entries]
        return ledger


@dataclass(frozen=True)
class LatencyReport:
    """Per-stage means in the two metric kinds, plus the projected
    end-to-end time total(d) for a d-second clip."""

    stage_means: tuple[tuple[str, MetricKind, float, int], ...]  # stage, kind, mean, n

    def per_request_total(self) -> float:
        return sum(mean for _, kind, mean, _ in self.stage_means
                   if kind is MetricKind.PER_REQUEST)

    def per_video_second_total(self) -> float:
        return sum(mean for _, kind, mean, _ in self.stage_means
                   if kind is MetricKind.PER_VIDEO_SECOND)

    def total(self, video_seconds: float) -> float:
        return self.per_request_total() + video_seconds * self.per_video_second_total()

    def render(self, video_seconds: float = 10.0) -> str:
        lines = [f"{'stage':<28} {'metric':<18} {'mean (s)':>9} {'n':>4}"]
        for stage, kind, mean, n in self.stage_means:
            metric = "per request" if kind is MetricKind.PER_REQUEST else "per sec (video)"
            lines.append(f"{stage:<28} {metric:<18} {mean:>9.1f} {n:>4}")
        lines.append(f"projected total for a {video_seconds:g} s clip: "
                     f"{self.total(video_seconds):.1f} s")
        return "\n".join(lines) + "\n"
