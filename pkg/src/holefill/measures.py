"""Recall-agnostic evaluation measures over per-rank gains.

Three utility-style measures that need no knowledge of the total relevant
set: scaled DCG against an ideal of k fully relevant documents, weighted
precision (mean gain over the top k), and rank-biased precision. Each maps
a ranking's gain vector [g1..gn], gi in [0, 1], to a value in [0, 1].
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .labelers import GainTable
from .trec_io import Run

__all__ = [
    "gains_for",
    "sdcg",
    "weighted_precision",
    "rbp",
    "MeasureSpec",
    "parse_measure",
    "EvalResult",
    "evaluate",
]


def gains_for(run: Run, table: GainTable, query_id: str) -> list[float]:
    """Gain vector for one query in ranking order; unlisted docs read 0."""
    return [table.gain(query_id, docid) for docid, _score in run.ranking(query_id)]


def sdcg(gains: Sequence[float], k: int = 10) -> float:
    """Scaled DCG@k: DCG normalized by an ideal of k fully relevant documents.

    The normalizer always uses the full k, so the value never moves when new
    relevant documents are discovered, and short rankings are penalized.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    num = 0.0
    for i, g in enumerate(gains[:k], start=1):
        num += g / math.log2(i + 1)
    den = 0.0
    for i in range(1, k + 1):
        den += 1.0 / math.log2(i + 1)
    return num / den


def weighted_precision(gains: Sequence[float], k: int = 10) -> float:
    """Mean gain over the top k positions; the denominator is always k."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    total = 0.0
    for g in gains[:k]:
        total += g
    return total / k


def rbp(gains: Sequence[float], p: float = 0.8) -> float:
    """Rank-biased precision with persistence p over the finite ranking.

    Base value only, no residual; truncating a ranking at rank m changes the
    value by at most p**m.
    """
    if not (0.0 < p < 1.0):
        raise ValueError(f"p must be in (0,1), got {p}")
    total = 0.0
    weight = 1.0 - p
    for g in gains:
        total += weight * g
        weight *= p
    return total


@dataclass(frozen=True)
class MeasureSpec:
    """A parsed measure string: SDCG@k, WP@k, or RBP(p=x)."""

    kind: str  # "sdcg" | "wp" | "rbp"
    k: int = 10
    p: float = 0.8

    @property
    def measure_id(self) -> str:
        if self.kind == "sdcg":
            return f"SDCG@{self.k}"
        if self.kind == "wp":
            return f"WP@{self.k}"
        return f"RBP(p={self.p:g})"

    def compute(self, gains: Sequence[float]) -> float:
        if self.kind == "sdcg":
            return sdcg(gains, self.k)
        if self.kind == "wp":
            return weighted_precision(gains, self.k)
        return rbp(gains, self.p)


_MEASURE_RES = [
    (re.compile(r"^SDCG@(\d+)$"), "sdcg"),
    (re.compile(r"^WP@(\d+)$"), "wp"),
    (re.compile(r"^RBP\(p=(0?\.\d+|0|1(?:\.0+)?)\)$"), "rbp"),
]


def parse_measure(text: str) -> MeasureSpec:
    """Parse `SDCG@10`, `WP@10`, or `RBP(p=0.8)`."""
    for pattern, kind in _MEASURE_RES:
        m = pattern.match(text.strip())
        if m:
            if kind == "rbp":
                p = float(m.group(1))
                if not (0.0 < p < 1.0):
                    raise ValueError(f"RBP persistence must be in (0,1), got {p}")
                return MeasureSpec(kind="rbp", p=p)
            k = int(m.group(1))
            if k < 1:
                raise ValueError(f"cutoff must be >= 1 in {text!r}")
            return MeasureSpec(kind=kind, k=k)
    raise ValueError(f"unknown measure {text!r} (expected SDCG@k, WP@k, or RBP(p=x))")


@dataclass(frozen=True)
class EvalResult:
    measure_id: str
    per_query: Mapping[str, float]
    mean: float


def evaluate(run: Run, table: GainTable, measure: MeasureSpec, query_ids: Iterable[str]) -> EvalResult:
    """Score one run over exactly the pool's query set.

    Queries the run did not answer score 0 and still count in the mean, so
    dropping hard queries never inflates a system.
    """
    per_query: dict[str, float] = {}
    for qid in sorted(query_ids):
        per_query[qid] = measure.compute(gains_for(run, table, qid))
    if not per_query:
        raise ValueError("empty query set")
    mean = sum(per_query.values()) / len(per_query)
    return EvalResult(measure_id=measure.measure_id, per_query=per_query, mean=mean)
