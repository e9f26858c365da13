import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exoactor.errors import ArtifactIntegrityError, GatewayError, InputError
from exoactor.gateway import (
    ArtifactStore,
    FixedTextBackend,
    Gateway,
    JobStatus,
    LatencyLedger,
    MediaType,
    MetricKind,
    MockImageBackend,
    MockTextBackend,
    MockVideoBackend,
    report_latency,
)
from exoactor.gateway.backends import PNG_SIGNATURE, VideoFetchResult
from exoactor.gateway.types import GenerationJob, JobKind
from exoactor.planner import (
    DifficultyTier,
    TaskInstruction,
    build_embodiment_prompt,
    build_video_prompt,
)

TASK = TaskInstruction("walk to the table", "a table near the window; person front-facing")


@pytest.fixture
def store(tmp_path):
    return ArtifactStore(tmp_path / "store")


@pytest.fixture
def gateway(store):
    return Gateway(store, sleep=lambda s: None)


def _scene(store):
    return store.put(PNG_SIGNATURE + b"scene-bytes", MediaType.PNG_IMAGE)


# --- artifact store -----------------------------------------------------------

def test_store_content_addressing_round_trip(store):
    ref = store.put(b"payload", MediaType.TEXT)
    assert ref.verify()
    assert ref.read_bytes() == b"payload"
    assert ref.digest[2:] in ref.path and f"/{ref.digest[:2]}/" in ref.path
    again = store.put(b"payload", MediaType.TEXT)
    assert again.path == ref.path


def test_store_cache_round_trip(store):
    ref = store.put(b"cached", MediaType.TEXT)
    store.cache_record("digest-a", ref)
    hit = store.cache_lookup("digest-a")
    assert hit is not None and hit.digest == ref.digest
    assert store.cache_lookup("missing") is None
    store.cache_evict("digest-a")
    assert store.cache_lookup("digest-a") is None


def test_store_cache_survives_reopen(store, tmp_path):
    ref = store.put(b"persist", MediaType.TEXT)
    store.cache_record("digest-b", ref)
    reopened = ArtifactStore(tmp_path / "store")
    assert reopened.cache_lookup("digest-b").digest == ref.digest


# --- image editing --------------------------------------------------------------

def test_edit_image_deterministic_and_ledgered(gateway, store):
    prompt = build_embodiment_prompt(TASK)
    backend = MockImageBackend()
    ref = gateway.edit_image(_scene(store), prompt, backend)
    assert ref.read_bytes().startswith(PNG_SIGNATURE)
    entries = gateway.ledger.entries()
    assert len(entries) == 1
    assert entries[0].stage == "embodiment_transfer"
    assert entries[0].kind is MetricKind.PER_REQUEST


def test_edit_image_cache_hit_skips_backend(gateway, store):
    prompt = build_embodiment_prompt(TASK)
    backend = MockImageBackend()
    scene = _scene(store)
    first = gateway.edit_image(scene, prompt, backend)
    second = gateway.edit_image(scene, prompt, backend)
    assert backend.calls == 1
    assert first.digest == second.digest
    assert len(gateway.ledger.entries()) == 1  # cache hits add no latency rows


def test_edit_image_rejects_non_png(gateway, store):
    bad = store.put(b"not a png", MediaType.PNG_IMAGE)
    with pytest.raises(InputError):
        gateway.edit_image(bad, build_embodiment_prompt(TASK), MockImageBackend())


def test_edit_image_rejects_wrong_prompt_kind(gateway, store):
    prompt = build_video_prompt(DifficultyTier.B, "walk to the table")
    with pytest.raises(InputError):
        gateway.edit_image(_scene(store), prompt, MockImageBackend())


def test_successful_jobs_carry_verified_artifacts(gateway, store):
    gateway.edit_image(_scene(store), build_embodiment_prompt(TASK), MockImageBackend())
    done = [j for j in gateway.jobs if j.status is JobStatus.SUCCEEDED]
    assert done
    for job in done:
        assert job.artifact is not None and job.artifact.verify()
        assert job.completed_at >= job.submitted_at


# --- text completion ------------------------------------------------------------

def test_complete_text_mock_and_ledger(gateway):
    doc = build_embodiment_prompt(TASK)
    text = gateway.complete_text(doc, FixedTextBackend("fixed reply"))
    assert text == "fixed reply"
    entries = gateway.ledger.entries()
    assert entries[-1].stage == "task_decomposition"


def test_complete_text_caches(gateway):
    doc = build_embodiment_prompt(TASK)
    backend = FixedTextBackend("one")
    a = gateway.complete_text(doc, backend)
    b = gateway.complete_text(doc, backend)
    assert a == b and backend.calls == 1


# --- video jobs -----------------------------------------------------------------

def _video_prompt():
    return build_video_prompt(DifficultyTier.B, "walk to the table")


def test_run_video_job_mock_contract(gateway, store):
    clip = gateway.run_video_job(_scene(store), _video_prompt(), MockVideoBackend())
    assert clip.media is MediaType.MP4_VIDEO
    assert clip.fps == 24.0 and clip.frame_count == 240
    entry = gateway.ledger.entries()[-1]
    assert entry.stage == "video_generation"
    assert entry.kind is MetricKind.PER_VIDEO_SECOND and entry.video_seconds == 10.0


def test_run_video_job_poll_trace_two_backoff_sleeps(store):
    sleeps = []
    gw = Gateway(store, sleep=sleeps.append)
    backend = MockVideoBackend(poll_statuses=[JobStatus.PENDING, JobStatus.RUNNING,
                                              JobStatus.SUCCEEDED])
    gw.run_video_job(_scene(store), _video_prompt(), backend)
    assert sleeps == [2.0, 4.0]
    assert backend.poll_calls == 3


def test_run_video_job_backoff_caps_at_30(store):
    sleeps = []
    gw = Gateway(store, sleep=sleeps.append)
    statuses = [JobStatus.RUNNING] * 7 + [JobStatus.SUCCEEDED]
    gw.run_video_job(_scene(store), _video_prompt(), MockVideoBackend(poll_statuses=statuses))
    assert sleeps == [2.0, 4.0, 8.0, 16.0, 30.0, 30.0, 30.0]


def test_run_video_job_failure_carries_provider_message(gateway, store):
    backend = MockVideoBackend(poll_statuses=[JobStatus.FAILED],
                               fail_detail="content policy refusal")
    with pytest.raises(GatewayError, match="content policy refusal"):
        gateway.run_video_job(_scene(store), _video_prompt(), backend)


def test_run_video_job_timeout(store):
    fake_now = [0.0]

    def clock():
        return fake_now[0]

    def sleep(s):
        fake_now[0] += s

    gw = Gateway(store, clock=clock, sleep=sleep)
    backend = MockVideoBackend(poll_statuses=[JobStatus.RUNNING] * 100)
    with pytest.raises(GatewayError, match="timed out"):
        gw.run_video_job(_scene(store), _video_prompt(), backend, timeout_s=10.0)
    assert gw.jobs[-1].status is JobStatus.TIMED_OUT


def test_run_video_job_integrity_check(gateway, store):
    backend = MockVideoBackend(fps=24.0, frame_count=240)
    backend.fetch = lambda job_id: VideoFetchResult(b"x", fps=24.0, frame_count=240,
                                                    duration_s=5.0)
    with pytest.raises(ArtifactIntegrityError):
        gateway.run_video_job(_scene(store), _video_prompt(), backend)


def test_run_video_job_cache(gateway, store):
    backend = MockVideoBackend()
    scene = _scene(store)
    a = gateway.run_video_job(scene, _video_prompt(), backend)
    b = gateway.run_video_job(scene, _video_prompt(), backend)
    assert backend.submit_calls == 1
    assert a.digest == b.digest


# --- job lifecycle ---------------------------------------------------------------

_STATUS_LIST = [JobStatus.PENDING, JobStatus.RUNNING, JobStatus.SUCCEEDED,
                JobStatus.FAILED, JobStatus.TIMED_OUT]
_RANK = {JobStatus.PENDING: 0, JobStatus.RUNNING: 1, JobStatus.SUCCEEDED: 2,
         JobStatus.FAILED: 2, JobStatus.TIMED_OUT: 2}


@settings(max_examples=300, derandomize=True)
@given(st.lists(st.sampled_from(_STATUS_LIST), max_size=12))
def test_job_status_never_moves_backward(trace):
    job = GenerationJob(job_id="j", kind=JobKind.VIDEO, request_digest="d",
                        submitted_at=0.0)
    seen_rank = 0
    now = 0.0
    terminal = None
    for status in trace:
        now += 1.0
        job.advance(status, now)
        assert _RANK[job.status] >= seen_rank
        seen_rank = _RANK[job.status]
        if terminal is None and job.status in (JobStatus.SUCCEEDED, JobStatus.FAILED,
                                               JobStatus.TIMED_OUT):
            terminal = job.status
        if terminal is not None:
            assert job.status is terminal  # terminal states absorb


# --- latency ledger --------------------------------------------------------------

def _table1_ledger():
    ledger = LatencyLedger()
    ledger.add("embodiment_transfer", MetricKind.PER_REQUEST, 10.7)
    ledger.add("task_decomposition", MetricKind.PER_REQUEST, 2.5)
    ledger.add("video_generation", MetricKind.PER_VIDEO_SECOND, 132.0, video_seconds=10.0)
    ledger.add("body_estimation", MetricKind.PER_VIDEO_SECOND, 29.0, video_seconds=10.0)
    ledger.add("hand_estimation", MetricKind.PER_VIDEO_SECOND, 164.0, video_seconds=10.0)
    return ledger


def test_report_latency_reference_totals():
    report = report_latency(_table1_ledger())
    assert round(report.total(10.0), 1) == 338.2
    assert "338.2" in report.render(10.0)


def test_report_latency_empty():
    report = report_latency(LatencyLedger())
    assert report.total(10.0) == 0.0
    assert report.render(10.0).startswith("stage")


def test_report_latency_single_stage_mean():
    ledger = LatencyLedger()
    ledger.add("embodiment_transfer", MetricKind.PER_REQUEST, 1.0)
    ledger.add("embodiment_transfer", MetricKind.PER_REQUEST, 3.0)
    report = report_latency(ledger)
    assert report.stage_means[0][2] == pytest.approx(2.0)
    assert report.stage_means[0][3] == 2


def test_report_latency_additivity():
    report = report_latency(_table1_ledger())
    d1, d2 = 3.7, 6.3
    lhs = report.total(d1 + d2)
    rhs = report.total(d1) + report.total(d2) - report.per_request_total()
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_ledger_persists_jsonl(tmp_path):
    path = tmp_path / "ledger.jsonl"
    ledger = LatencyLedger(persist_path=path)
    ledger.add("video_generation", MetricKind.PER_VIDEO_SECOND, 132.0, video_seconds=10.0)
    ledger.add("embodiment_transfer", MetricKind.PER_REQUEST, 10.7)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 2 and '"video_generation"' in lines[0]
