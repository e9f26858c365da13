"""Prompt templates live as versioned data files with ${SLOT} markers, so
wording changes stay diffable.  A file is a preamble followed by sections
introduced by '## Header' lines."""
from __future__ import annotations

from importlib import resources

from .types import PromptDocument, PromptKind

_FILES = {
    PromptKind.EMBODIMENT_TRANSFER: "embodiment_transfer.txt",
    PromptKind.DECOMPOSITION: "decomposition.txt",
    PromptKind.DESCRIPTION_FUSION: "description_fusion.txt",
    PromptKind.VIDEO_B: "video_b.txt",
    PromptKind.VIDEO_AS: "video_as.txt",
    PromptKind.DIFFICULTY: "difficulty.txt",
}


def _parse(kind: PromptKind, text: str) -> PromptDocument:
    preamble_lines: list[str] = []
    sections: list[tuple[str, list[str]]] = []
    current: list[str] | None = None
    for line in text.splitlines():
        if line.startswith("## "):
            current = []
            sections.append((line[3:].strip(), current))
        elif current is None:
            preamble_lines.append(line)
        else:
            current.append(line)
    preamble = "\n".join(preamble_lines).strip()
    packed = tuple((h, "\n".join(body).strip()) for h, body in sections)
    return PromptDocument(
        kind=kind, preamble=preamble, sections=packed,
        placeholders=PromptDocument._find_slots(preamble, *(b for _, b in packed)),
    )


def load_template(kind: PromptKind) -> PromptDocument:
    name = _FILES[kind]
    text = resources.files(__package__).joinpath("templates", name).read_text("utf-8")
    return _parse(kind, text)
