"""Prompt rendering for the two pairwise relevance scorers.

Rendering is pure string substitution; truncation happens upstream so the
rendered prompt is exactly what the model sees.
"""

from __future__ import annotations

__all__ = ["DUOPROMPT_TEMPLATE", "DUOT5_TEMPLATE", "render_duoprompt", "render_duot5"]

# The instruction prompt asks whether passage B reaches passage A's
# relevance; the answer is teacher-forced to "yes"/"no".
DUOPROMPT_TEMPLATE = (
    "Determine if passage B is as relevant as passage A. "
    "Passage A: {passage_a} Passage B: {passage_b} Query: {query} "
    "Is passage B as relevant as passage A?"
)

# Native input of the pairwise reranker family; it emits "true" when
# Document0 is the more relevant of the two.
DUOT5_TEMPLATE = "Query: {query} Document0: {document0} Document1: {document1} Relevant:"


def render_duoprompt(query: str, passage_a: str, passage_b: str) -> str:
    """Instruction prompt with the known relevant passage in slot A."""
    return DUOPROMPT_TEMPLATE.format(passage_a=passage_a, passage_b=passage_b, query=query)


def render_duot5(query: str, passage_a: str, passage_b: str) -> str:
    """Pairwise input with the unknown passage as Document0, so the "true"
    probability reads as: the unknown passage outranks the known one."""
    return DUOT5_TEMPLATE.format(query=query, document0=passage_b, document1=passage_a)
