"""Scorers: stub (deterministic, model-free) and seq2seq checkpoint backed.

Both pairwise scorers reduce to the same mechanics: render a prompt, run
one decoder step under teacher forcing, and take the two-way softmax over a
positive/negative token pair ("yes"/"no" for the instruction prompt,
"true"/"false" for the native pairwise reranker input). The softmax of two
logits is computed as sigmoid(pos - neg), which is exact at equal logits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .prompts import render_duoprompt, render_duot5
from .protocol import ScoringTask

__all__ = ["BridgeError", "StubScorer", "Seq2SeqScorer", "load_scorer"]

# query token cap; the rest of the window splits evenly between passages
MAX_QUERY_TOKENS = 64
DEFAULT_MAX_LENGTH = 512


class BridgeError(RuntimeError):
    """Scoring failed for a specific task."""

    def __init__(self, message: str, task_id: str | None = None):
        self.task_id = task_id
        if task_id is not None:
            message = f"task {task_id!r}: {message}"
        super().__init__(message)


_RENDERERS = {"duoprompt": render_duoprompt, "duot5": render_duot5}
_TARGET_TOKENS = {"duoprompt": ("yes", "no"), "duot5": ("true", "false")}


@dataclass
class StubScorer:
    """Fixed-logit scorer for protocol tests: no model, fully deterministic.

    Renders the instruction prompt (so the full path is exercised) and
    scores every task at sigmoid(logit_gap); the equal-logit stub gives
    exactly 0.5.
    """

    logit_gap: float = 0.0

    def score(self, tasks: Sequence[ScoringTask], batch_size: int = 8) -> list[float]:
        scores = []
        for task in tasks:
            render_duoprompt(task.query, task.passage_a, task.passage_b)
            scores.append(1.0 / (1.0 + math.exp(-self.logit_gap)))
        return scores


class Seq2SeqScorer:
    """Checkpoint-backed pairwise scorer (instruction or native template).

    Truncation policy: the query is capped at MAX_QUERY_TOKENS; whatever
    remains of the window after the template overhead splits evenly between
    the two passages, each cut at the tail. A prompt that still exceeds the
    window after that is an error carrying the task id.

    Needs a fast tokenizer (truncation uses character offsets).
    """

    def __init__(
        self,
        model_path: str,
        kind: str,
        max_length: int | None = None,
        device: str = "cpu",
    ):
        if kind not in _RENDERERS:
            raise ValueError(f"unknown scorer kind {kind!r}")
        import torch
        from transformers import AutoModelForSeq2SeqLM, AutoTokenizer

        self.kind = kind
        self._render = _RENDERERS[kind]
        self._torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(model_path, use_fast=True)
        if not self.tokenizer.is_fast:
            raise ValueError("a fast tokenizer is required (offset-based truncation)")
        self.model = AutoModelForSeq2SeqLM.from_pretrained(model_path).to(device)
        self.model.eval()
        self.device = device
        if max_length is None:
            limit = getattr(self.tokenizer, "model_max_length", DEFAULT_MAX_LENGTH)
            max_length = min(int(limit), DEFAULT_MAX_LENGTH)
        self.max_length = max_length
        pos, neg = _TARGET_TOKENS[kind]
        self.pos_id = self._first_token_id(pos)
        self.neg_id = self._first_token_id(neg)
        # token cost of the template itself, special tokens included
        empty = self._render("", "", "")
        self._overhead = len(self.tokenizer(empty).input_ids)

    def _first_token_id(self, word: str) -> int:
        ids = self.tokenizer(word, add_special_tokens=False).input_ids
        if not ids:
            raise ValueError(f"tokenizer produces no tokens for {word!r}")
        return ids[0]

    def _truncate(self, text: str, max_tokens: int) -> str:
        enc = self.tokenizer(text, add_special_tokens=False, return_offsets_mapping=True)
        if len(enc.input_ids) <= max_tokens:
            return text
        end = enc.offset_mapping[max_tokens - 1][1]
        return text[:end]

    def _prepare(self, task: ScoringTask) -> str:
        query = self._truncate(task.query, MAX_QUERY_TOKENS)
        q_len = len(self.tokenizer(query, add_special_tokens=False).input_ids)
        budget = self.max_length - self._overhead - q_len
        per_passage = budget // 2
        if per_passage < 1:
            raise BridgeError(
                f"no window left for passages (max_length={self.max_length}, "
                f"template overhead {self._overhead}, query {q_len} tokens)",
                task.id,
            )
        prompt = self._render(
            query,
            self._truncate(task.passage_a, per_passage),
            self._truncate(task.passage_b, per_passage),
        )
        if len(self.tokenizer(prompt).input_ids) > self.max_length:
            raise BridgeError("prompt exceeds the model window after truncation", task.id)
        return prompt

    def score(self, tasks: Sequence[ScoringTask], batch_size: int = 8) -> list[float]:
        torch = self._torch
        scores: list[float] = []
        for start in range(0, len(tasks), batch_size):
            batch = tasks[start : start + batch_size]
            prompts = [self._prepare(task) for task in batch]
            enc = self.tokenizer(prompts, return_tensors="pt", padding=True).to(self.device)
            decoder_start = self.model.config.decoder_start_token_id
            decoder_input = torch.full((len(batch), 1), decoder_start, device=self.device)
            with torch.no_grad():
                out = self.model(
                    input_ids=enc.input_ids,
                    attention_mask=enc.attention_mask,
                    decoder_input_ids=decoder_input,
                )
            logits = out.logits[:, 0, :].double()
            gap = logits[:, self.pos_id] - logits[:, self.neg_id]
            scores.extend(torch.sigmoid(gap).tolist())
        return scores


def load_scorer(spec: str):
    """Resolve a model spec string.

    `stub:equal` / `stub:gap=<float>` need no model files;
    `duoprompt:<path>` and `duot5:<path>` load a seq2seq checkpoint.
    """
    if spec == "stub:equal":
        return StubScorer(0.0)
    if spec.startswith("stub:gap="):
        return StubScorer(float(spec.split("=", 1)[1]))
    for kind in ("duoprompt", "duot5"):
        if spec.startswith(kind + ":"):
            return Seq2SeqScorer(spec.split(":", 1)[1], kind)
    raise ValueError(f"unknown model spec {spec!r}")
