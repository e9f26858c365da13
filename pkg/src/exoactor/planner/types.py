"""Planner datatypes: task instructions, action chains, prompt documents."""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

from ..errors import InvalidArgument, TemplateError

_SLOT_RE = re.compile(r"\$\{([A-Z_]+)\}")

# prepositions that open a spatial qualifier inside a step phrase
_PREPOSITIONS = (
    "in front of", "into", "onto", "toward", "towards", "under", "over",
    "behind", "beside", "near", "around", "across", "along", "through",
    "in", "on", "at", "to", "from", "with",
)


@dataclass(frozen=True)
class TaskInstruction:
    """High-level goal plus a structured summary of the initial observation
    (subject position/pose/orientation, salient objects, spatial relations)."""

    goal_text: str
    scene_summary: str = ""

    def __post_init__(self):
        if not self.goal_text.strip():
            raise InvalidArgument("goal_text must be non-empty")


@dataclass(frozen=True)
class ActionStep:
    """One atomic, visually observable sub-action."""

    phrase: str
    verb_phrase: str = ""
    target_object: str = ""
    spatial_qualifier: str = ""

    @classmethod
    def from_phrase(cls, phrase: str) -> "ActionStep":
        text = " ".join(phrase.split())
        lower = text.lower()
        qualifier = ""
        body = text
        for prep in _PREPOSITIONS:
            idx = _word_index(lower, prep)
            if idx is not None:
                qualifier = text[idx:]
                body = text[:idx].rstrip()
                break
        words = body.split()
        verb = words[0] if words else ""
        target = " ".join(words[1:])
        return cls(phrase=text, verb_phrase=verb, target_object=target,
                   spatial_qualifier=qualifier)

    def __str__(self) -> str:
        return self.phrase


def _word_index(lower: str, prep: str) -> int | None:
    for m in re.finditer(r"\b" + re.escape(prep) + r"\b", lower):
        if m.start() > 0:  # a step never begins with its qualifier
            return m.start()
    return None


@dataclass(frozen=True)
class ActionChain:
    """Temporally ordered sub-actions decomposed from a goal.

    A well-formed chain has 4..8 distinct ordered steps; deliberately not
    enforced here so validate_chain can report violations on raw parses.
    """

    steps: tuple[ActionStep, ...]
    source_goal: str = ""

    def __len__(self) -> int:
        return len(self.steps)

    def phrases(self) -> list[str]:
        return [s.phrase for s in self.steps]


class DifficultyTier(enum.Enum):
    B = "B"  # navigation only
    A = "A"  # coarse whole-body interaction
    S = "S"  # fine multi-step manipulation


class PromptKind(enum.Enum):
    EMBODIMENT_TRANSFER = "EMBODIMENT_TRANSFER"
    DECOMPOSITION = "DECOMPOSITION"
    DESCRIPTION_FUSION = "DESCRIPTION_FUSION"
    VIDEO_B = "VIDEO_B"
    VIDEO_AS = "VIDEO_AS"
    DIFFICULTY = "DIFFICULTY"


@dataclass(frozen=True)
class PromptDocument:
    """Structured prompt: preamble plus ordered (header, body) sections.

    Rendering is a pure function of the content; a document with unresolved
    placeholders cannot be submitted to a backend.
    """

    kind: PromptKind
    preamble: str
    sections: tuple[tuple[str, str], ...]
    placeholders: frozenset[str] = field(default_factory=frozenset)

    @staticmethod
    def _find_slots(*texts: str) -> frozenset[str]:
        found = set()
        for text in texts:
            found.update(_SLOT_RE.findall(text))
        return frozenset(found)

    def fill(self, **values: str) -> "PromptDocument":
        """Substitute ${NAME} slots; empty or whitespace values are rejected
        (an unfillable slot must fail loudly, not render blank)."""
        for name, value in values.items():
            if value is None or not str(value).strip():
                raise TemplateError(f"slot {name} given an empty value", slot=name)

        def sub(text: str) -> str:
            def repl(m):
                name = m.group(1)
                return str(values[name]) if name in values else m.group(0)
            return _SLOT_RE.sub(repl, text)

        preamble = sub(self.preamble)
        sections = tuple((h, sub(b)) for h, b in self.sections)
        return PromptDocument(
            kind=self.kind, preamble=preamble, sections=sections,
            placeholders=self._find_slots(preamble, *(b for _, b in sections)),
        )

    @property
    def resolved(self) -> bool:
        return not self.placeholders

    def require_resolved(self) -> None:
        if self.placeholders:
            slot = sorted(self.placeholders)[0]
            raise TemplateError(f"unresolved template slot {slot}", slot=slot)

    def render(self) -> str:
        self.require_resolved()
        parts = [self.preamble.strip()] if self.preamble.strip() else []
        for header, body in self.sections:
            parts.append(f"{header}.\n{body.strip()}")
        return "\n\n".join(parts) + "\n"

    def section(self, header: str) -> str:
        for h, body in self.sections:
            if h == header:
                return body
        raise KeyError(header)

    def headers(self) -> list[str]:
        return [h for h, _ in self.sections]
