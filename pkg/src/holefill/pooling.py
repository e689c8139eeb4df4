"""Shallow-pool simulation and hole discovery.

A shallow pool records, per query, the single known relevant document d+
taken as the first relevant document in a baseline run, plus how many
documents had to be examined to reach it. Holes are the unjudged
(query, doc) pairs in the top ranks of candidate runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, NamedTuple

from .trec_io import Qrels, Run

__all__ = [
    "PoolEntry",
    "ShallowPool",
    "HoleSet",
    "simulate_shallow_pool",
    "find_holes",
    "judged_at_k",
    "pool_qrels_lines",
    "pool_sidecar_json",
    "pool_from_files",
]


@dataclass(frozen=True)
class PoolEntry:
    rel_doc_id: str
    examined: int  # 1-based rank of rel_doc_id in the baseline run


@dataclass(frozen=True)
class ShallowPool:
    """Per-query d+ entries plus the queries that could not be pooled.

    `dropped` holds queries whose baseline ranking contains no document at
    or above the relevance threshold; `unjudged` holds queries absent from
    the source qrels entirely. Both are excluded from all downstream
    evaluation.
    """

    entries: Mapping[str, PoolEntry]
    dropped: tuple[str, ...] = ()
    unjudged: tuple[str, ...] = ()

    @property
    def query_ids(self) -> list[str]:
        return sorted(self.entries)

    def rel_doc(self, query_id: str) -> str:
        return self.entries[query_id].rel_doc_id

    def mean_examined(self) -> float:
        if not self.entries:
            return 0.0
        return sum(e.examined for e in self.entries.values()) / len(self.entries)


def simulate_shallow_pool(baseline: Run, qrels: Qrels, rel_threshold: int = 2) -> ShallowPool:
    """Pick the first document with grade >= rel_threshold per baseline query.

    Queries whose ranking has no such document are dropped (reported, not an
    error); queries with no qrels rows at all are reported separately.
    """
    if rel_threshold < 1:
        raise ValueError(f"rel_threshold must be >= 1, got {rel_threshold}")
    judged_queries = qrels.query_ids
    entries: dict[str, PoolEntry] = {}
    dropped: list[str] = []
    unjudged: list[str] = []
    for qid in sorted(baseline.rankings):
        if qid not in judged_queries:
            unjudged.append(qid)
            continue
        for rank, (docid, _score) in enumerate(baseline.rankings[qid], start=1):
            if qrels.grade(qid, docid) >= rel_threshold:
                entries[qid] = PoolEntry(rel_doc_id=docid, examined=rank)
                break
        else:
            dropped.append(qid)
    return ShallowPool(entries=entries, dropped=tuple(dropped), unjudged=tuple(unjudged))


@dataclass(frozen=True)
class HoleSet:
    """Unjudged (query, doc) pairs found in the top `depth` of the input runs."""

    holes: frozenset[tuple[str, str]]
    depth: int

    def __len__(self) -> int:
        return len(self.holes)

    def sorted(self) -> list[tuple[str, str]]:
        return sorted(self.holes)


def find_holes(runs: Iterable[Run], pool: ShallowPool, depth: int = 10) -> HoleSet:
    """Collect the union of top-`depth` documents over all runs, minus each
    query's d+. Queries outside the pool contribute nothing."""
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    holes: set[tuple[str, str]] = set()
    for run in runs:
        for qid, ranking in run.rankings.items():
            entry = pool.entries.get(qid)
            if entry is None:
                continue
            for docid, _score in ranking[:depth]:
                if docid != entry.rel_doc_id:
                    holes.add((qid, docid))
    return HoleSet(holes=frozenset(holes), depth=depth)


class JudgedAtK(NamedTuple):
    per_query: dict[str, float]
    mean: float


def judged_at_k(run: Run, judged: set[tuple[str, str]], k: int = 10) -> JudgedAtK:
    """Fraction of each query's top-k (denominator min(k, ranking length))
    that appears in `judged`, and the mean over the run's queries."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    per_query: dict[str, float] = {}
    for qid in sorted(run.rankings):
        top = run.rankings[qid][:k]
        hits = sum(1 for docid, _ in top if (qid, docid) in judged)
        per_query[qid] = hits / len(top)
    mean = sum(per_query.values()) / len(per_query) if per_query else 0.0
    return JudgedAtK(per_query=per_query, mean=mean)


def pool_qrels_lines(pool: ShallowPool) -> Iterator[str]:
    """Serialize pool entries as a qrels file with the grade fixed at 1."""
    for qid in pool.query_ids:
        yield f"{qid} 0 {pool.entries[qid].rel_doc_id} 1\n"


def pool_sidecar_json(pool: ShallowPool) -> str:
    """JSON sidecar `{qid: examined}` carrying the examined counts."""
    return json.dumps(
        {qid: pool.entries[qid].examined for qid in pool.query_ids},
        sort_keys=True,
        indent=2,
    ) + "\n"


def pool_from_files(qrels_lines: Iterable[str], sidecar_text: str) -> ShallowPool:
    """Rebuild a pool from its qrels-format file and examined-count sidecar."""
    from .trec_io import parse_qrels

    marks = parse_qrels(qrels_lines)
    examined = json.loads(sidecar_text)
    entries: dict[str, PoolEntry] = {}
    for (qid, docid), _grade in marks.grades.items():
        if qid in entries:
            raise ValueError(f"pool file has multiple documents for query {qid!r}")
        if qid not in examined:
            raise ValueError(f"sidecar missing examined count for query {qid!r}")
        entries[qid] = PoolEntry(rel_doc_id=docid, examined=int(examined[qid]))
    return ShallowPool(entries=entries)
