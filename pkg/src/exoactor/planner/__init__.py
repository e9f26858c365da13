from .types import (
    TaskInstruction,
    ActionStep,
    ActionChain,
    DifficultyTier,
    PromptKind,
    PromptDocument,
)
from .templates import load_template
from .ops import (
    decompose,
    classify_difficulty,
    keyword_tier,
    construct_description,
    build_embodiment_prompt,
    build_decomposition_prompt,
    build_fusion_prompt,
    build_difficulty_prompt,
    build_video_prompt,
    validate_chain,
    render_chain_paragraph,
    parse_chain_paragraph,
    extract_object_nouns,
    grounding_offenders,
)

__all__ = [
    "TaskInstruction",
    "ActionStep",
    "ActionChain",
    "DifficultyTier",
    "PromptKind",
    "PromptDocument",
    "load_template",
    "decompose",
    "classify_difficulty",
    "keyword_tier",
    "construct_description",
    "build_embodiment_prompt",
    "build_decomposition_prompt",
    "build_fusion_prompt",
    "build_difficulty_prompt",
    "build_video_prompt",
    "validate_chain",
    "render_chain_paragraph",
    "parse_chain_paragraph",
    "extract_object_nouns",
    "grounding_offenders",
]
