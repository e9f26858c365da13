"""Gateway operations: uniform client layer over the three generation
services, with job lifecycle, caching, and latency bookkeeping."""
from __future__ import annotations

import time
import uuid
from collections import defaultdict

from ..errors import ArtifactIntegrityError, GatewayError, InputError, InvalidArgument
from ..planner.types import PromptDocument, PromptKind
from .backends import PNG_SIGNATURE, VideoFetchResult
from .store import ArtifactStore, request_digest
from .types import (
    ArtifactRef,
    GenerationJob,
    JobKind,
    JobStatus,
    LatencyLedger,
    LatencyReport,
    MediaType,
    MetricKind,
)

BACKOFF_BASE_S = 2.0
BACKOFF_CAP_S = 30.0

STAGE_TRANSFER = "embodiment_transfer"
STAGE_TEXT = "task_decomposition"
STAGE_VIDEO = "video_generation"
STAGE_BODY = "body_estimation"
STAGE_HANDS = "hand_estimation"


class Gateway:
    """Shared client state: artifact store, request cache, ledger, jobs.

    Multiple jobs may be in flight concurrently; the store and ledger
    serialize internally.  Clock and sleep are injectable for tests.
    """

    def __init__(self, store: ArtifactStore, ledger: LatencyLedger | None = None,
                 clock=time.monotonic, sleep=time.sleep):
        self.store = store
        self.ledger = ledger if ledger is not None else LatencyLedger()
        self.clock = clock
        self.sleep = sleep
        self.jobs: list[GenerationJob] = []

    def _new_job(self, kind: JobKind, digest: str) -> GenerationJob:
        job = GenerationJob(job_id=uuid.uuid4().hex[:12], kind=kind,
                            request_digest=digest, submitted_at=self.clock())
        self.jobs.append(job)
        return job

    # --- image editing -------------------------------------------------------

    def edit_image(self, image: ArtifactRef, prompt: PromptDocument,
                   backend) -> ArtifactRef:
        """Robot-to-human transfer of the scene image; cached by request."""
        if prompt.kind is not PromptKind.EMBODIMENT_TRANSFER:
            raise InputError(f"edit_image needs an EMBODIMENT_TRANSFER prompt, "
                             f"got {prompt.kind.value}")
        rendered = prompt.render()
        data = image.read_bytes()
        if not data.startswith(PNG_SIGNATURE):
            raise InputError("scene image is not a PNG")
        digest = request_digest("IMAGE_EDIT", rendered, image.digest)
        cached = self.store.cache_lookup(digest)
        if cached is not None:
            return cached
        job = self._new_job(JobKind.IMAGE_EDIT, digest)
        job.advance(JobStatus.RUNNING, self.clock())
        start = self.clock()
        try:
            out = backend.edit(data, rendered)
        except TimeoutError as exc:
            job.advance(JobStatus.TIMED_OUT, self.clock())
            raise GatewayError(f"image edit timed out: {exc}") from exc
        except GatewayError:
            job.advance(JobStatus.FAILED, self.clock())
            raise
        self.ledger.add(STAGE_TRANSFER, MetricKind.PER_REQUEST, self.clock() - start)
        ref = self.store.put(out, MediaType.PNG_IMAGE)
        self.store.cache_record(digest, ref)
        job.artifact = ref
        job.advance(JobStatus.SUCCEEDED, self.clock())
        return ref

    # --- text completion -----------------------------------------------------

    def complete_text(self, prompt: PromptDocument, backend,
                      stage: str = STAGE_TEXT) -> str:
        rendered = prompt.render()
        if not rendered.strip():
            raise InputError("empty prompt")
        digest = request_digest("TEXT", rendered)
        cached = self.store.cache_lookup(digest)
        if cached is not None:
            return cached.read_bytes().decode("utf-8")
        job = self._new_job(JobKind.TEXT, digest)
        job.advance(JobStatus.RUNNING, self.clock())
        start = self.clock()
        try:
            text = backend.complete(rendered)
        except TimeoutError as exc:
            job.advance(JobStatus.TIMED_OUT, self.clock())
            raise GatewayError(f"text completion timed out: {exc}") from exc
        except GatewayError:
            job.advance(JobStatus.FAILED, self.clock())
            raise
        self.ledger.add(stage, MetricKind.PER_REQUEST, self.clock() - start)
        ref = self.store.put(text.encode("utf-8"), MediaType.TEXT)
        self.store.cache_record(digest, ref)
        job.artifact = ref
        job.advance(JobStatus.SUCCEEDED, self.clock())
        return text

    def text_client(self, backend, stage: str = STAGE_TEXT):
        """A TextBackend wrapper that routes raw prompt text through the
        gateway (ledger + cache); lets planner ops stay gateway-agnostic."""
        return _GatewayTextClient(self, backend, stage)

    # --- video jobs ----------------------------------------------------------

    def run_video_job(self, reference_image: ArtifactRef, prompt: PromptDocument,
                      backend, timeout_s: float = 900.0) -> ArtifactRef:
        """Submit, poll with capped exponential backoff, fetch, verify."""
        if prompt.kind not in (PromptKind.VIDEO_B, PromptKind.VIDEO_AS):
            raise InputError(f"run_video_job needs a VIDEO_B or VIDEO_AS prompt, "
                             f"got {prompt.kind.value}")
        if not timeout_s > 0:
            raise InvalidArgument("timeout_s must be positive")
        rendered = prompt.render()
        digest = request_digest("VIDEO", rendered, reference_image.digest)
        cached = self.store.cache_lookup(digest)
        if cached is not None:
            return cached
        job = self._new_job(JobKind.VIDEO, digest)
        start = self.clock()
        job_id = backend.submit(reference_image.read_bytes(), rendered)
        delay = BACKOFF_BASE_S
        while True:
            status, detail = backend.poll(job_id)
            if status is JobStatus.SUCCEEDED:
                break
            job.advance(status, self.clock())
            if job.status is JobStatus.FAILED:
                raise GatewayError(f"video backend failed: {detail or 'no detail'}")
            if self.clock() - start > timeout_s:
                job.advance(JobStatus.TIMED_OUT, self.clock())
                raise GatewayError(f"video job {job_id} timed out after {timeout_s}s")
            self.sleep(delay)
            delay = min(delay * 2.0, BACKOFF_CAP_S)
        result = backend.fetch(job_id)
        _check_clip_integrity(result)
        self.ledger.add(STAGE_VIDEO, MetricKind.PER_VIDEO_SECOND,
                        self.clock() - start, video_seconds=result.duration_s)
        ref = self.store.put(result.data, MediaType.MP4_VIDEO,
                             fps=result.fps, frame_count=result.frame_count)
        self.store.cache_record(digest, ref)
        job.artifact = ref
        job.advance(JobStatus.SUCCEEDED, self.clock())
        return ref


class _GatewayTextClient:
    def __init__(self, gateway: Gateway, backend, stage: str):
        self._gateway = gateway
        self._backend = backend
        self._stage = stage

    def complete(self, prompt_text: str) -> str:
        doc = PromptDocument(kind=PromptKind.DECOMPOSITION, preamble=prompt_text,
                             sections=())
        return self._gateway.complete_text(doc, self._backend, stage=self._stage)


def _check_clip_integrity(result: VideoFetchResult) -> None:
    if result.frame_count < 1 or result.fps <= 0 or result.duration_s <= 0:
        raise ArtifactIntegrityError(
            f"clip metadata invalid: fps={result.fps} frames={result.frame_count} "
            f"duration={result.duration_s}")
    implied = result.fps * result.duration_s
    if abs(implied - result.frame_count) > 1.0 + 1e-9:
        raise ArtifactIntegrityError(
            f"clip declares {result.frame_count} frames but fps*duration = {implied:.2f}")


def report_latency(ledger: LatencyLedger) -> LatencyReport:
    """Aggregate per-stage means; PER_VIDEO_SECOND entries average their
    per-second rates."""
    groups: dict[tuple[str, MetricKind], list[float]] = defaultdict(list)
    order: list[tuple[str, MetricKind]] = []
    for entry in ledger.entries():
        key = (entry.stage, entry.kind)
        if key not in groups:
            order.append(key)
        groups[key].append(entry.rate())
    means = tuple((stage, kind, sum(vals) / len(vals), len(vals))
                  for (stage, kind), vals in ((k, groups[k]) for k in order))
    return LatencyReport(stage_means=means)
