"""Generation backends: deterministic mocks for hermetic runs and thin HTTP
clients for live providers.

The video seam is provider-shaped (submit / poll / fetch) so models can be
swapped without touching the pipeline.  Live credentials come from the
environment: EXO_IMAGE_KEY / EXO_TEXT_KEY / EXO_VIDEO_KEY, with base URLs in
EXO_IMAGE_URL / EXO_TEXT_URL / EXO_VIDEO_URL.
"""
from __future__ import annotations

import base64
import hashlib
import os
import re
from dataclasses import dataclass
from typing import Protocol

import requests

from ..errors import GatewayError
from ..planner.ops import (
    extract_object_nouns,
    keyword_tier,
    parse_chain_paragraph,
    render_chain_paragraph,
)
from .types import JobStatus

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


class ImageBackend(Protocol):
    def edit(self, image_bytes: bytes, prompt_text: str) -> bytes: ...


class TextBackend(Protocol):
    def complete(self, prompt_text: str) -> str: ...


@dataclass(frozen=True)
class VideoFetchResult:
    data: bytes
    fps: float
    frame_count: int
    duration_s: float


class VideoBackend(Protocol):
    def submit(self, image_bytes: bytes, prompt_text: str) -> str: ...

    def poll(self, job_id: str) -> tuple[JobStatus, str]: ...

    def fetch(self, job_id: str) -> VideoFetchResult: ...


# --- deterministic mocks ------------------------------------------------------


class MockImageBackend:
    """Returns a deterministic PNG-tagged stub derived from the inputs."""

    def __init__(self):
        self.calls = 0

    def edit(self, image_bytes: bytes, prompt_text: str) -> bytes:
        self.calls += 1
        digest = hashlib.sha256(image_bytes + prompt_text.encode()).digest()
        return PNG_SIGNATURE + b"mock-human-image:" + digest.hex().encode()


class FixedTextBackend:
    """Echoes one canned response; handy for parser tests."""

    def __init__(self, response: str):
        self.response = response
        self.calls = 0

    def complete(self, prompt_text: str) -> str:
        self.calls += 1
        return self.response


def _mock_chain_steps(goal: str) -> list[str]:
    g = goal.lower()
    objs = extract_object_nouns(goal)
    obj = objs[0] if objs else None
    container = objs[1] if len(objs) > 1 else None
    if obj and ("pick up" in g or g.startswith("pick")):
        return [f"approach the {obj}", "bend down", f"grasp the {obj}",
                f"lift the {obj}", "stand upright"]
    if any(w in g for w in ("place", "put", "insert", "throw")):
        if obj and container:
            return [f"approach the {obj}", f"reach toward the {obj}",
                    f"grasp the {obj}", f"carry the {obj} to the {container}",
                    f"place the {obj} into the {container}", "stand upright"]
        if obj:
            return [f"approach the {obj}", f"grasp the {obj}", f"lift the {obj}",
                    f"place the {obj} down", "stand upright"]
    if "sit" in g:
        if obj:
            return [f"walk to the {obj}", "turn around", f"align with the {obj}",
                    "sit down"]
        return ["walk forward", "turn around", "steady the stance", "sit down"]
    if any(w in g for w in ("walk", "move", "go ", "navigate", "approach", "reach ")):
        if obj:
            return [f"turn toward the {obj}", f"walk to the {obj}",
                    f"slow down near the {obj}", f"stop at the {obj}", "stand still"]
        return ["look ahead", "walk forward", "continue straight", "stop", "stand still"]
    return ["prepare the stance", "move into position", "perform the task",
            "return to a stable posture"]


class MockTextBackend:
    """Deterministic stand-in for the text model.

    Recognizes the pipeline's prompt documents by their title line and
    produces grounded, parseable responses derived only from the prompt's
    own content.
    """

    def __init__(self):
        self.calls = 0

    def complete(self, prompt_text: str) -> str:
        self.calls += 1
        title = prompt_text.strip().splitlines()[0] if prompt_text.strip() else ""
        if title.startswith("Action Decomposition Prompt"):
            goal = _first_match(prompt_text, r"^Task goal: (.+)$")
            return render_chain_paragraph(_mock_chain_steps(goal))
        if title.startswith("Multimodal Action Description Construction"):
            chain = _first_match(prompt_text, r"^Action chain: (.+)$")
            steps = parse_chain_paragraph(chain)
            return ("Starting from the initial position, the person "
                    + ", then ".join(steps) + ", completing the goal.")
        if title.startswith("Task Difficulty Classification"):
            goal = _first_match(prompt_text, r"^Task\.\n(.+)$")
            return keyword_tier(goal).value
        return render_chain_paragraph(
            ["prepare the stance", "move into position", "perform the task",
             "return to a stable posture"])


def _first_match(text: str, pattern: str) -> str:
    m = re.search(pattern, text, re.MULTILINE)
    if not m:
        raise GatewayError(f"mock backend could not find {pattern!r} in prompt")
    return m.group(1).strip()


class MockVideoBackend:
    """Submits instantly; poll walks a scripted status sequence; fetch
    returns a 10 s 24 fps stub clip descriptor."""

    def __init__(self, fps: float = 24.0, frame_count: int = 240,
                 poll_statuses: list[JobStatus] | None = None,
                 fail_detail: str = "provider failure"):
        self.fps = fps
        self.frame_count = frame_count
        self.poll_statuses = list(poll_statuses or [JobStatus.SUCCEEDED])
        self.fail_detail = fail_detail
        self.submit_calls = 0
        self.poll_calls = 0
        self._cursor: dict[str, int] = {}
        self._payloads: dict[str, bytes] = {}

    def submit(self, image_bytes: bytes, prompt_text: str) -> str:
        self.submit_calls += 1
        job_id = hashlib.sha256(image_bytes + prompt_text.encode()).hexdigest()[:16]
        self._cursor[job_id] = 0
        self._payloads[job_id] = (b"MOCKMP4\x00" + job_id.encode()
                                  + b"\x00" + prompt_text.encode()[:64])
        return job_id

    def poll(self, job_id: str) -> tuple[JobStatus, str]:
        self.poll_calls += 1
        i = self._cursor.get(job_id, 0)
        status = self.poll_statuses[min(i, len(self.poll_statuses) - 1)]
        self._cursor[job_id] = i + 1
        detail = self.fail_detail if status is JobStatus.FAILED else ""
        return status, detail

    def fetch(self, job_id: str) -> VideoFetchResult:
        return VideoFetchResult(
            data=self._payloads[job_id],
            fps=self.fps,
            frame_count=self.frame_count,
            duration_s=self.frame_count / self.fps,
        )


# --- live HTTP clients --------------------------------------------------------


def _require(value: str | None, name: str) -> str:
    if not value:
        raise GatewayError(f"{name} is not set")
    return value


class LiveImageBackend:
    """Generic image-edit provider: POST multipart to <base>/v1/images/edits."""

    def __init__(self, base_url: str | None = None, api_key: str | None = None,
                 session=None, timeout_s: float = 120.0):
        self.base_url = (base_url or os.environ.get("EXO_IMAGE_URL", "")).rstrip("/")
        self.api_key = api_key or os.environ.get("EXO_IMAGE_KEY", "")
        self.session = session or requests.Session()
        self.timeout_s = timeout_s

    def edit(self, image_bytes: bytes, prompt_text: str) -> bytes:
        base = _require(self.base_url, "EXO_IMAGE_URL")
        key = _require(self.api_key, "EXO_IMAGE_KEY")
        try:
            resp = self.session.post(
                f"{base}/v1/images/edits",
                headers={"Authorization": f"Bearer {key}"},
                files={"image": ("scene.png", image_bytes, "image/png")},
                data={"prompt": prompt_text},
                timeout=self.timeout_s,
            )
        except requests.RequestException as exc:
            raise GatewayError(f"image backend unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise GatewayError(f"image backend returned {resp.status_code}: {resp.text[:200]}")
        return resp.content


class LiveTextBackend:
    """Generic completion provider: POST JSON to <base>/v1/completions."""

    def __init__(self, base_url: str | None = None, api_key: str | None = None,
                 session=None, timeout_s: float = 120.0):
        self.base_url = (base_url or os.environ.get("EXO_TEXT_URL", "")).rstrip("/")
        self.api_key = api_key or os.environ.get("EXO_TEXT_KEY", "")
        self.session = session or requests.Session()
        self.timeout_s = timeout_s

    def complete(self, prompt_text: str) -> str:
        base = _require(self.base_url, "EXO_TEXT_URL")
        key = _require(self.api_key, "EXO_TEXT_KEY")
        try:
            resp = self.session.post(
                f"{base}/v1/completions",
                headers={"Authorization": f"Bearer {key}"},
                json={"prompt": prompt_text},
                timeout=self.timeout_s,
            )
        except requests.RequestException as exc:
            raise GatewayError(f"text backend unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise GatewayError(f"text backend returned {resp.status_code}: {resp.text[:200]}")
        return resp.json()["text"]


_PROVIDER_STATUS = {
    "pending": JobStatus.PENDING, "queued": JobStatus.PENDING,
    "running": JobStatus.RUNNING, "processing": JobStatus.RUNNING,
    "succeeded": JobStatus.SUCCEEDED, "completed": JobStatus.SUCCEEDED,
    "failed": JobStatus.FAILED, "error": JobStatus.FAILED,
}


class LiveVideoBackend:
    """Generic async video provider:

    submit: POST <base>/v1/videos {prompt, image_b64} -> {"id": ...}
    poll:   GET  <base>/v1/videos/<id> -> {"status", "error"?}
    fetch:  GET  <base>/v1/videos/<id>/content (bytes) plus the poll body's
            fps / frame_count / duration metadata.
    """

    def __init__(self, base_url: str | None = None, api_key: str | None = None,
                 session=None, timeout_s: float = 120.0):
        self.base_url = (base_url or os.environ.get("EXO_VIDEO_URL", "")).rstrip("/")
        self.api_key = api_key or os.environ.get("EXO_VIDEO_KEY", "")
        self.session = session or requests.Session()
        self.timeout_s = timeout_s
        self._meta: dict[str, dict] = {}

    def _headers(self):
        return {"Authorization": f"Bearer {_require(self.api_key, 'EXO_VIDEO_KEY')}"}

    def submit(self, image_bytes: bytes, prompt_text: str) -> str:
        base = _require(self.base_url, "EXO_VIDEO_URL")
        try:
            resp = self.session.post(
                f"{base}/v1/videos", headers=self._headers(),
                json={"prompt": prompt_text,
                      "image_b64": base64.b64encode(image_bytes).decode()},
                timeout=self.timeout_s,
            )
        except requests.RequestException as exc:
            raise GatewayError(f"video backend unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise GatewayError(f"video submit returned {resp.status_code}: {resp.text[:200]}")
        return resp.json()["id"]

    def poll(self, job_id: str) -> tuple[JobStatus, str]:
        base = _require(self.base_url, "EXO_VIDEO_URL")
        try:
            resp = self.session.get(f"{base}/v1/videos/{job_id}",
                                    headers=self._headers(), timeout=self.timeout_s)
        except requests.RequestException as exc:
            raise GatewayError(f"video backend unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise GatewayError(f"video poll returned {resp.status_code}: {resp.text[:200]}")
        body = resp.json()
        self._meta[job_id] = body
        status = _PROVIDER_STATUS.get(str(body.get("status", "")).lower())
        if status is None:
            raise GatewayError(f"unknown provider status {body.get('status')!r}")
        return status, str(body.get("error") or "")

    def fetch(self, job_id: str) -> VideoFetchResult:
        base = _require(self.base_url, "EXO_VIDEO_URL")
        try:
            resp = self.session.get(f"{base}/v1/videos/{job_id}/content",
                                    headers=self._headers(), timeout=self.timeout_s)
        except requests.RequestException as exc:
            raise GatewayError(f"video backend unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise GatewayError(f"video fetch returned {resp.status_code}")
        meta = self._meta.get(job_id, {})
        return VideoFetchResult(
            data=resp.content,
            fps=float(meta.get("fps", 24.0)),
            frame_count=int(meta.get("frame_count", 0)),
            duration_s=float(meta.get("duration_s", 0.0)),
        )
