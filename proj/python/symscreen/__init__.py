"""Python bindings for the symscreen pipeline."""

import json

from ._symscreen import (
    ConflictError,
    NotFoundError,
    RuntimeFailure,
    ValidationError,
    auc,
    category_ids,
    entailment_prompt,
    parse_chat_response,
    parse_entailment_response,
    run_cli,
    score_counts,
    taxonomy_toml,
    truncate,
)
from . import _symscreen

__all__ = [
    "ConflictError",
    "NotFoundError",
    "RuntimeFailure",
    "ValidationError",
    "auc",
    "category_ids",
    "chat_prompt",
    "entailment_prompt",
    "evaluate",
    "parse_chat_response",
    "parse_entailment_response",
    "run_cli",
    "score_counts",
    "taxonomy_toml",
    "truncate",
]


def chat_prompt(category_id, note_text):
    """Chat messages for one (category, note) pair as a list of dicts."""
    return json.loads(_symscreen.chat_prompt(category_id, note_text))


def evaluate(gold, detections, na_as_zero=False):
    """Score detections against gold labels.

    Both arguments are JSONL strings or lists of dicts. Returns the per-category
    rows followed by the average row.
    """
    def as_jsonl(x):
        if isinstance(x, str):
            return x
        return "".join(json.dumps(r) + "\n" for r in x)

    out = _symscreen.evaluate(as_jsonl(gold), as_jsonl(detections), "jsonl", na_as_zero)
    return [json.loads(line) for line in out.splitlines() if line]
