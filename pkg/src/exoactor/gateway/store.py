"""Content-addressed artifact store plus the request cache.

Artifacts land at <root>/<first two hex digits>/<rest of digest><ext>, so
expensive stages are resumable: a re-run with the same request digest reuses
the stored artifact without touching the backend.
"""
from __future__ import annotations

import hashlib
import json
import threading
from pathlib import Path

from .types import ArtifactRef, MediaType

_EXT = {MediaType.PNG_IMAGE: ".png", MediaType.MP4_VIDEO: ".mp4",
        MediaType.TEXT: ".txt", MediaType.MOTION_ARCHIVE: ".exoarch"}


class ArtifactStore:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._index_path = self.root / "request_index.json"
        self._lock = threading.Lock()
        self._index: dict[str, dict] = {}
        if self._index_path.exists():
            self._index = json.loads(self._index_path.read_text())

    def put(self, data: bytes, media: MediaType, fps: float | None = None,
            frame_count: int | None = None) -> ArtifactRef:
        digest = hashlib.sha256(data).hexdigest()
        subdir = self.root / digest[:2]
        subdir.mkdir(exist_ok=True)
        path = subdir / (digest[2:] + _EXT[media])
        if not path.exists():
            tmp = path.with_suffix(path.suffix + ".tmp")
            tmp.write_bytes(data)
            tmp.replace(path)
        return ArtifactRef(path=str(path), media=media, digest=digest,
                           size_bytes=len(data), fps=fps, frame_count=frame_count)

    def import_file(self, path, media: MediaType) -> ArtifactRef:
        return self.put(Path(path).read_bytes(), media)

    # --- request cache ------------------------------------------------------

    def cache_lookup(self, request_digest: str) -> ArtifactRef | None:
        with self._lock:
            entry = self._index.get(request_digest)
        if entry is None:
            return None
        ref = ArtifactRef.from_dict(entry)
        return ref if ref.verify() else None

    def cache_record(self, request_digest: str, ref: ArtifactRef) -> None:
        with self._lock:
            self._index[request_digest] = ref.to_dict()
            tmp = self._index_path.with_suffix(".tmp")
            tmp.write_text(json.dumps(self._index, indent=0, sort_keys=True))
            tmp.replace(self._index_path)

    def cache_evict(self, request_digest: str) -> None:
        with self._lock:
            if self._index.pop(request_digest, None) is not None:
                tmp = self._index_path.with_suffix(".tmp")
                tmp.write_text(json.dumps(self._index, indent=0, sort_keys=True))
                tmp.replace(self._index_path)


def request_digest(kind: str, prompt_text: str, *input_digests: str) -> str:
    h = hashlib.sha256()
    h.update(kind.encode())
    h.update(b"\x00")
    h.update(prompt_text.encode())
    for d in input_digests:
        h.update(b"\x00")
        h.update(d.encode())
    return h.hexdigest()
