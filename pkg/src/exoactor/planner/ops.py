"""Planner operations: decomposition, difficulty routing, description fusion,
and prompt construction."""
from __future__ import annotations

import re

from ..errors import (
    DecompositionError,
    FormatError,
    GroundingError,
    MissingStateError,
    TemplateError,
)
from ..validation import ValidationReport
from .templates import load_template
from .types import ActionChain, ActionStep, DifficultyTier, PromptDocument, PromptKind, TaskInstruction

# transition words the decomposition output format mandates
_TRANSITIONS = ("first", "then", "next", "finally", "afterwards", "lastly", "after that")
_INLINE_SPLIT = re.compile(
    r",?\s+(?:and\s+)?(?:then|next|finally|afterwards|lastly|after\s+that)[,\s]+",
    re.IGNORECASE)
_SENTENCE_SPLIT = re.compile(r"[.;]+\s*")
_LIST_MARKER = re.compile(r"^\s*(?:[-*•]|\d+[.)])\s+", re.MULTILINE)

# words that never count as scene objects in the grounding check
ABSTRACT_NOUNS = frozenset("""
    target goal location position destination path direction task action step
    steps scene area surroundings environment person man woman subject robot
    body stance posture pose hand hands foot feet arm arms leg legs ground
    floor way side front back left right center middle end start beginning
    moment time order sequence manner motion movement pace gait balance
    contact grip grasp state frame view camera distance height stand
    """.split())

_NOUN_STOP = frozenset("""
    in on at to into onto under over behind beside near from with of toward
    towards around across along through by for and or that which then next
    while until before after the a an is are was be been its his her their
    """.split())

_ARTICLES = ("the", "a", "an")


def render_chain_paragraph(steps: list[str]) -> str:
    """Render steps as the mandated single transition-word paragraph."""
    if not steps:
        return ""
    if len(steps) == 1:
        return f"First, {steps[0]}."
    parts = [f"First, {steps[0]}."]
    middles = ("Then", "Next")
    for i, step in enumerate(steps[1:-1]):
        parts.append(f"{middles[i % 2]} {step}.")
    parts.append(f"Finally {steps[-1]}.")
    return " ".join(parts)


def parse_chain_paragraph(text: str) -> list[str]:
    """Extract ordered sub-action phrases from a single-paragraph response.

    Raises FormatError for multi-paragraph or list-formatted responses; the
    caller enforces the 4..8 step count.
    """
    stripped = text.strip()
    if not stripped:
        raise FormatError("empty response where one paragraph was required")
    if re.search(r"\n\s*\n", stripped):
        raise FormatError("response must be exactly one paragraph")
    if _LIST_MARKER.search(stripped):
        raise FormatError("response must not use bullet or numbered lists")
    flat = " ".join(stripped.split())
    steps: list[str] = []
    for sentence in _SENTENCE_SPLIT.split(flat):
        if not sentence.strip():
            continue
        for fragment in _INLINE_SPLIT.split(sentence):
            phrase = _strip_transitions(fragment)
            if phrase:
                steps.append(phrase)
    return steps


def _strip_transitions(fragment: str) -> str:
    words = fragment.strip(" ,").split()
    i = 0
    while i < len(words):
        w = words[i].lower().strip(",")
        if w in ("first", "then", "next", "finally", "afterwards", "lastly", "and"):
            i += 1
        elif w == "after" and i + 1 < len(words) and words[i + 1].lower().strip(",") == "that":
            i += 2
        else:
            break
    return " ".join(words[i:]).strip(" ,")


def build_decomposition_prompt(task: TaskInstruction) -> PromptDocument:
    doc = load_template(PromptKind.DECOMPOSITION)
    return doc.fill(TASK_GOAL=task.goal_text,
                    SCENE_INFO=task.scene_summary or "none provided")


def decompose(task: TaskInstruction, text_backend) -> ActionChain:
    """Backend decomposition of the goal into a 4..8 step action chain."""
    doc = build_decomposition_prompt(task)
    response = text_backend.complete(doc.render())
    steps = parse_chain_paragraph(response)
    if not 4 <= len(steps) <= 8:
        raise DecompositionError(
            f"expected 4..8 sub-actions, parsed {len(steps)}", raw_text=response)
    return ActionChain(steps=tuple(ActionStep.from_phrase(s) for s in steps),
                       source_goal=task.goal_text)


# deterministic keyword fallback: stems checked against goal words
_S_STEMS = ("plac", "insert", "throw")
_A_STEMS = ("sit", "lift", "sweep", "wipe", "duck", "pick", "carr")


def keyword_tier(goal_text: str) -> DifficultyTier:
    words = re.findall(r"[a-z]+", goal_text.lower())
    if any(w.startswith(s) for w in words for s in _S_STEMS):
        return DifficultyTier.S
    if any(w.startswith(s) for w in words for s in _A_STEMS):
        return DifficultyTier.A
    return DifficultyTier.B


def build_difficulty_prompt(task: TaskInstruction) -> PromptDocument:
    return load_template(PromptKind.DIFFICULTY).fill(TASK_GOAL=task.goal_text)


def classify_difficulty(task: TaskInstruction, text_backend=None) -> DifficultyTier:
    """Tier the task via the backend rubric, falling back to deterministic
    keywords when no backend is available or its reply is unusable."""
    if text_backend is not None:
        try:
            reply = text_backend.complete(build_difficulty_prompt(task).render())
            m = re.search(r"\b([BAS])\b", reply)
            if m:
                return DifficultyTier(m.group(1))
        except Exception:
            pass
    return keyword_tier(task.goal_text)


def extract_object_nouns(text: str) -> list[str]:
    """Head nouns of article-introduced noun phrases, abstract words excluded.

    Surface heuristic: after an article, collect up to 4 words until a
    preposition/conjunction or another article; the last collected word is
    the head.  Phrases containing an abstract word are not objects.
    """
    words = [w.lower() for w in re.findall(r"[A-Za-z]+", text)]
    heads = []
    i = 0
    while i < len(words):
        if words[i] not in _ARTICLES:
            i += 1
            continue
        kept: list[str] = []
        j = i + 1
        while j < len(words) and len(kept) < 4:
            w = words[j]
            if w in _NOUN_STOP or w in _ARTICLES:
                break
            kept.append(w)
            j += 1
        i = j if kept else i + 1
        if kept and not any(w in ABSTRACT_NOUNS for w in kept):
            heads.append(kept[-1])
    return heads


def _allowed_words(task: TaskInstruction) -> set[str]:
    words = set(re.findall(r"[a-z]+", (task.goal_text + " " + task.scene_summary).lower()))
    return words | {w + "s" for w in words} | {w.rstrip("s") for w in words}


def grounding_offenders(description: str, task: TaskInstruction) -> list[str]:
    allowed = _allowed_words(task)
    return sorted({h for h in extract_object_nouns(description) if h not in allowed})


def build_fusion_prompt(task: TaskInstruction, chain: ActionChain) -> PromptDocument:
    doc = load_template(PromptKind.DESCRIPTION_FUSION)
    return doc.fill(
        VISUAL_OBSERVATION=task.scene_summary or "an empty scene with no salient objects",
        ACTION_CHAIN=render_chain_paragraph(chain.phrases()),
        ACTION_GOAL=task.goal_text,
    )


def construct_description(task: TaskInstruction, chain: ActionChain, text_backend) -> str:
    """Fuse chain + scene into a scene- and task-aware action description.

    The output is checked by surface noun containment: any article-introduced
    object noun absent from the scene summary and goal is a hallucination and
    raises GroundingError.
    """
    doc = build_fusion_prompt(task, chain)
    response = " ".join(text_backend.complete(doc.render()).split())
    offenders = grounding_offenders(response, task)
    if offenders:
        raise GroundingError(
            f"description introduces objects absent from the scene: {', '.join(offenders)}",
            nouns=offenders)
    return response


def build_embodiment_prompt(task: TaskInstruction) -> PromptDocument:
    """Robot-to-human image edit prompt with the initial state resolved."""
    if not task.scene_summary.strip():
        raise MissingStateError("embodiment transfer requires a scene summary")
    return load_template(PromptKind.EMBODIMENT_TRANSFER).fill(
        INITIAL_STATE_INFORMATION=task.scene_summary)


_DEFAULT_EXECUTION_BLOCK = (
    "Perform each sub-action of the given chain in its stated order, completing "
    "one before beginning the next, with precise alignment to the involved "
    "objects before every contact."
)


def build_video_prompt(tier: DifficultyTier, description: str,
                       execution_block: str | None = None) -> PromptDocument:
    """Tier-routed video prompt: B fills the navigation slot; A/S fill the
    task chain plus execution block."""
    if not description or not description.strip():
        slot = "NAVIGATION_ACTION" if tier is DifficultyTier.B else "TASK_ACTION_CHAIN"
        raise TemplateError(f"empty description cannot fill {slot}", slot=slot)
    if tier is DifficultyTier.B:
        return load_template(PromptKind.VIDEO_B).fill(NAVIGATION_ACTION=description)
    return load_template(PromptKind.VIDEO_AS).fill(
        TASK_ACTION_CHAIN=description,
        TASK_SPECIFIC_EXECUTION_BLOCK=execution_block or _DEFAULT_EXECUTION_BLOCK,
    )


def validate_chain(chain: ActionChain) -> ValidationReport:
    """Flag length violations, empty steps, and duplicate adjacent steps."""
    report = ValidationReport()
    n = len(chain.steps)
    if not 4 <= n <= 8:
        report.add("steps", f"chain must have 4..8 steps, has {n}", value=n)
    for i, step in enumerate(chain.steps):
        if not step.phrase.strip():
            report.add("steps", "empty step", frame=i)
    for i in range(1, n):
        if chain.steps[i].phrase.lower() == chain.steps[i - 1].phrase.lower():
            report.add("steps", f"duplicate adjacent step {chain.steps[i].phrase!r}", frame=i)
    return report
