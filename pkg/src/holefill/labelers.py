"""One-shot gain estimators and gain-table assembly.

A labeler estimates, for each hole (q, d?), how relevant d? is given the
single known relevant document d+ for q, as a score in [0, 1]. The gain
table then pins d+ to gain 1 and fills the holes with the estimates; ranked
documents absent from the table read as gain 0.

The MaxRep variants propagate relevance from d+ to its k nearest neighbors
(lexical BM25 or dense inner product) with linearly degrading gain: the
i-th neighbor gets (k - i) / k. They never look at the query text.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .pooling import HoleSet, ShallowPool
from .trec_io import Corpus, EmbeddingStore, Qrels, Run, ScoreCache, ScoreRecord

__all__ = [
    "tokenize",
    "LexicalIndex",
    "build_lexical_index",
    "bm25_neighbors",
    "embed_neighbors",
    "maxrep_gains",
    "GainTable",
    "build_gain_table",
    "gain_table_from_qrels",
    "Labeler",
    "ZeroLabeler",
    "OracleLabeler",
    "MaxRepBM25Labeler",
    "MaxRepEmbedLabeler",
    "BridgeLabeler",
    "MissingScoresError",
    "make_labeler",
    "label",
    "pin_examined_nonrelevant",
    "bridge_task_records",
    "DEFAULT_NEIGHBORS",
]

DEFAULT_NEIGHBORS = 128
# Cap on unique terms when a document is issued as a BM25 query; keeps
# doc-as-query scoring from going quadratic on pathological inputs.
MAX_QUERY_TERMS = 1024

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Unicode-lowercase and split on non-alphanumeric runs."""
    return _TOKEN_RE.findall(text.lower())


Neighbor = tuple[str, float]
NeighborList = tuple[Neighbor, ...]


@dataclass(frozen=True)
class LexicalIndex:
    """In-memory inverted index over tokenized passage texts."""

    postings: Mapping[str, tuple[tuple[str, int], ...]]  # term -> ((doc_id, tf), ...)
    doc_lengths: Mapping[str, int]
    avg_doc_length: float
    doc_count: int

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self.doc_lengths


def build_lexical_index(corpus: Corpus) -> LexicalIndex:
    if not corpus.texts:
        raise ValueError("empty corpus")
    postings: dict[str, list[tuple[str, int]]] = {}
    doc_lengths: dict[str, int] = {}
    for docid in sorted(corpus.texts):
        tokens = tokenize(corpus.texts[docid])
        doc_lengths[docid] = len(tokens)
        for term, tf in sorted(Counter(tokens).items()):
            postings.setdefault(term, []).append((docid, tf))
    avg = sum(doc_lengths.values()) / len(doc_lengths)
    return LexicalIndex(
        postings={t: tuple(p) for t, p in postings.items()},
        doc_lengths=doc_lengths,
        avg_doc_length=avg,
        doc_count=len(doc_lengths),
    )


def _bm25_idf(n_docs: int, df: int) -> float:
    # Non-negative log variant, as used by the mainstream TREC baselines.
    return math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))


def bm25_neighbors(
    index: LexicalIndex,
    probe_doc_id: str,
    k: int = DEFAULT_NEIGHBORS,
    corpus: Corpus | None = None,
    probe_tokens: Sequence[str] | None = None,
    k1: float = 0.9,
    b: float = 0.4,
) -> NeighborList:
    """Top-k BM25 results when the probe document itself is the query.

    The query is the probe's token multiset with term frequencies as
    weights, capped at MAX_QUERY_TERMS highest-tf terms. The probe is
    excluded from the results; ties break by doc_id ascending.

    Token source: `probe_tokens` if given, otherwise the corpus text.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if probe_doc_id not in index:
        raise KeyError(f"unknown probe document {probe_doc_id!r}")
    if probe_tokens is None:
        if corpus is None or probe_doc_id not in corpus.texts:
            raise KeyError(f"no text available for probe document {probe_doc_id!r}")
        probe_tokens = tokenize(corpus.texts[probe_doc_id])
    query = Counter(probe_tokens)
    if len(query) > MAX_QUERY_TERMS:
        kept = sorted(query.items(), key=lambda t: (-t[1], t[0]))[:MAX_QUERY_TERMS]
        query = Counter(dict(kept))

    scores: dict[str, float] = {}
    for term in sorted(query):
        plist = index.postings.get(term)
        if not plist:
            continue
        idf = _bm25_idf(index.doc_count, len(plist))
        qtf = query[term]
        for docid, tf in plist:
            if docid == probe_doc_id:
                continue
            dl = index.doc_lengths[docid]
            norm = k1 * (1.0 - b + b * dl / index.avg_doc_length)
            scores[docid] = scores.get(docid, 0.0) + qtf * idf * tf * (k1 + 1.0) / (tf + norm)
    ranked = sorted(scores.items(), key=lambda t: (-t[1], t[0]))
    return tuple(ranked[:k])


def embed_neighbors(store: EmbeddingStore, probe_doc_id: str, k: int = DEFAULT_NEIGHBORS) -> NeighborList:
    """Exact top-k by inner product over the full store, probe excluded.

    Inner product, not cosine: the dual encoders this store is meant for
    are trained against it. Ties break by doc_id ascending.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    probe_row = store.row(probe_doc_id)  # raises KeyError if unknown
    sims = store.matrix @ store.matrix[probe_row]
    ranked = sorted(
        ((docid, float(sims[i])) for i, docid in enumerate(store.doc_ids) if i != probe_row),
        key=lambda t: (-t[1], t[0]),
    )
    return tuple(ranked[:k])


def maxrep_gains(neighbors: NeighborList, k: int = DEFAULT_NEIGHBORS) -> dict[str, float]:
    """Linearly degrading gains: the i-th neighbor (1-based) gets (k - i) / k.

    Documents not in the neighbor list are simply absent (gain 0 to readers).
    """
    if len(neighbors) > k:
        raise ValueError(f"neighbor list longer than k ({len(neighbors)} > {k})")
    return {docid: (k - i) / k for i, (docid, _score) in enumerate(neighbors, start=1)}


@dataclass(frozen=True)
class GainTable:
    """Per-query doc gains in [0, 1] with d+ pinned to exactly 1."""

    gains: Mapping[str, Mapping[str, float]]

    def gain(self, query_id: str, doc_id: str) -> float:
        return self.gains.get(query_id, {}).get(doc_id, 0.0)


def build_gain_table(pool: ShallowPool, records: Iterable[ScoreRecord], labeler_id: str) -> GainTable:
    """Assemble gains: d+ -> 1, scored holes -> their scores.

    Records must carry `labeler_id`, belong to pooled queries, and never
    target a query's d+ (that would overwrite the pinned 1).
    """
    gains: dict[str, dict[str, float]] = {qid: {e.rel_doc_id: 1.0} for qid, e in pool.entries.items()}
    for rec in records:
        if rec.labeler != labeler_id:
            raise ValueError(f"record from labeler {rec.labeler!r}, expected {labeler_id!r}")
        entry = pool.entries.get(rec.qid)
        if entry is None:
            raise ValueError(f"record for unpooled query {rec.qid!r}")
        if rec.unk_docid == entry.rel_doc_id:
            raise ValueError(
                f"record for ({rec.qid!r}, {rec.unk_docid!r}) would overwrite the known relevant document"
            )
        if not (0.0 <= rec.score <= 1.0):
            raise ValueError(f"score {rec.score} outside [0,1]")
        gains[rec.qid][rec.unk_docid] = rec.score
    return GainTable(gains)


def gain_table_from_qrels(qrels: Qrels, query_ids: Iterable[str], max_grade: int | None = None) -> GainTable:
    """Reference table for full-judgment evaluation: gain = grade / max_grade."""
    if max_grade is None:
        max_grade = qrels.max_grade()
    if max_grade < 1:
        raise ValueError("qrels contain no positive grades")
    wanted = set(query_ids)
    gains: dict[str, dict[str, float]] = {qid: {} for qid in sorted(wanted)}
    for (qid, docid), grade in qrels.grades.items():
        if qid in wanted:
            gains[qid][docid] = grade / max_grade
    return GainTable(gains)


class Labeler:
    """Base one-shot gain estimator; subclasses score one query's holes."""

    labeler_id: str = "base"

    def score_query(self, qid: str, rel_docid: str, unk_docids: Sequence[str]) -> dict[str, float]:
        raise NotImplementedError


class ZeroLabeler(Labeler):
    """Treat every hole as non-relevant (the zero-gain baseline)."""

    labeler_id = "zero"

    def score_query(self, qid: str, rel_docid: str, unk_docids: Sequence[str]) -> dict[str, float]:
        return {d: 0.0 for d in unk_docids}


class OracleLabeler(Labeler):
    """Test fixture: read the true grade from reference qrels, normalized
    linearly to grade / max_grade."""

    labeler_id = "oracle"

    def __init__(self, reference: Qrels, max_grade: int | None = None):
        self.reference = reference
        self.max_grade = max_grade if max_grade is not None else reference.max_grade()
        if self.max_grade < 1:
            raise ValueError("reference qrels contain no positive grades")

    def score_query(self, qid: str, rel_docid: str, unk_docids: Sequence[str]) -> dict[str, float]:
        return {d: self.reference.grade(qid, d) / self.max_grade for d in unk_docids}


class MaxRepBM25Labeler(Labeler):
    labeler_id = "maxrep-bm25"

    def __init__(self, corpus: Corpus, k: int = DEFAULT_NEIGHBORS, k1: float = 0.9, b: float = 0.4):
        self.corpus = corpus
        self.index = build_lexical_index(corpus)
        self.k = k
        self.k1 = k1
        self.b = b

    def score_query(self, qid: str, rel_docid: str, unk_docids: Sequence[str]) -> dict[str, float]:
        neighbors = bm25_neighbors(
            self.index, rel_docid, self.k, corpus=self.corpus, k1=self.k1, b=self.b
        )
        gains = maxrep_gains(neighbors, self.k)
        return {d: gains.get(d, 0.0) for d in unk_docids}


class MaxRepEmbedLabeler(Labeler):
    labeler_id = "maxrep-embed"

    def __init__(self, store: EmbeddingStore, k: int = DEFAULT_NEIGHBORS):
        self.store = store
        self.k = k

    def score_query(self, qid: str, rel_docid: str, unk_docids: Sequence[str]) -> dict[str, float]:
        neighbors = embed_neighbors(self.store, rel_docid, self.k)
        gains = maxrep_gains(neighbors, self.k)
        return {d: gains.get(d, 0.0) for d in unk_docids}


class MissingScoresError(ValueError):
    """A model-backed labeler has no score for some holes; lists them all."""

    def __init__(self, labeler_id: str, missing: list[tuple[str, str]]):
        self.labeler_id = labeler_id
        self.missing = sorted(missing)
        shown = ", ".join(f"({q!r}, {d!r})" for q, d in self.missing[:10])
        more = "" if len(self.missing) <= 10 else f" and {len(self.missing) - 10} more"
        super().__init__(f"labeler {labeler_id!r} missing scores for {len(self.missing)} holes: {shown}{more}")


class BridgeLabeler(Labeler):
    """Read scores produced out-of-process, keyed by task id `qid unk_docid`.

    Coverage gaps are hard errors (MissingScoresError) rather than silent
    zero-fill, so a forgotten score never masquerades as "scored zero".
    """

    def __init__(self, scores: Mapping[str, float], labeler_id: str):
        self.scores = dict(scores)
        self.labeler_id = labeler_id

    def score_query(self, qid: str, rel_docid: str, unk_docids: Sequence[str]) -> dict[str, float]:
        out: dict[str, float] = {}
        missing: list[tuple[str, str]] = []
        for d in unk_docids:
            score = self.scores.get(f"{qid} {d}")
            if score is None:
                missing.append((qid, d))
            else:
                out[d] = score
        if missing:
            raise MissingScoresError(self.labeler_id, missing)
        return out


def make_labeler(
    spec: str,
    *,
    corpus: Corpus | None = None,
    embeddings: EmbeddingStore | None = None,
    reference_qrels: Qrels | None = None,
    bridge_scores: Mapping[str, float] | None = None,
    k: int = DEFAULT_NEIGHBORS,
) -> Labeler:
    """Resolve a labeler selection string.

    Accepted: `zero | oracle | maxrep-bm25 | maxrep-embed | bridge:<path>`.
    For `bridge:` the caller loads the score file and passes it in; the
    full spec string becomes the labeler id so distinct score files never
    collide in a cache.
    """
    if spec == "zero":
        return ZeroLabeler()
    if spec == "oracle":
        if reference_qrels is None:
            raise ValueError("oracle labeler needs reference qrels")
        return OracleLabeler(reference_qrels)
    if spec == "maxrep-bm25":
        if corpus is None:
            raise ValueError("maxrep-bm25 labeler needs a corpus")
        return MaxRepBM25Labeler(corpus, k=k)
    if spec == "maxrep-embed":
        if embeddings is None:
            raise ValueError("maxrep-embed labeler needs an embedding store")
        return MaxRepEmbedLabeler(embeddings, k=k)
    if spec.startswith("bridge:"):
        if bridge_scores is None:
            raise ValueError("bridge labeler needs a loaded score file")
        return BridgeLabeler(bridge_scores, labeler_id=spec)
    raise ValueError(f"unknown labeler {spec!r}")


def label(
    labeler: Labeler,
    pool: ShallowPool,
    holes: HoleSet | Iterable[tuple[str, str]],
    cache: ScoreCache | None = None,
) -> list[ScoreRecord]:
    """Score every hole, reusing cached records where available.

    Output order is canonical (qid, then unk_docid) regardless of how the
    work was scheduled, so identical inputs give bitwise-identical records.
    """
    hole_pairs = holes.sorted() if isinstance(holes, HoleSet) else sorted(holes)
    records: list[ScoreRecord] = []
    to_compute: dict[str, list[str]] = {}
    for qid, docid in hole_pairs:
        entry = pool.entries.get(qid)
        if entry is None:
            raise ValueError(f"hole ({qid!r}, {docid!r}) has no pool entry")
        cached = cache.get(labeler.labeler_id, qid, docid) if cache is not None else None
        if cached is not None:
            records.append(cached)
        else:
            to_compute.setdefault(qid, []).append(docid)
    all_missing: list[tuple[str, str]] = []
    for qid, docids in to_compute.items():
        rel = pool.entries[qid].rel_doc_id
        try:
            scores = labeler.score_query(qid, rel, docids)
        except MissingScoresError as exc:
            all_missing.extend(exc.missing)
            continue
        for docid in docids:
            score = scores[docid]
            if not (0.0 <= score <= 1.0):
                raise ValueError(f"labeler {labeler.labeler_id!r} produced score {score} outside [0,1]")
            records.append(
                ScoreRecord(labeler=labeler.labeler_id, qid=qid, rel_docid=rel, unk_docid=docid, score=score)
            )
    if all_missing:
        raise MissingScoresError(labeler.labeler_id, all_missing)
    records.sort(key=lambda r: (r.qid, r.unk_docid))
    return records


def pin_examined_nonrelevant(
    records: Iterable[ScoreRecord], baseline: Run, pool: ShallowPool
) -> list[ScoreRecord]:
    """Zero the scores of documents the simulated assessor already passed over.

    Those are the baseline documents ranked above d+; the assessor examined
    them and implicitly found them non-relevant. Off by default: the gain
    substitution is defined over every non-d+ document.
    """
    examined: set[tuple[str, str]] = set()
    for qid, entry in pool.entries.items():
        for docid, _score in baseline.ranking(qid)[: entry.examined - 1]:
            examined.add((qid, docid))
    out = []
    for rec in records:
        if (rec.qid, rec.unk_docid) in examined:
            rec = ScoreRecord(rec.labeler, rec.qid, rec.rel_docid, rec.unk_docid, 0.0)
        out.append(rec)
    return out


def bridge_task_records(
    pool: ShallowPool,
    holes: Iterable[tuple[str, str]],
    corpus: Corpus,
) -> list[dict[str, str]]:
    """Build bridge scoring tasks for the given holes, in canonical order.

    Task ids are `qid unk_docid`; ids from whitespace-delimited TREC files
    cannot contain spaces, so the join is unambiguous.
    """
    tasks: list[dict[str, str]] = []
    for qid, docid in sorted(holes):
        entry = pool.entries.get(qid)
        if entry is None:
            raise ValueError(f"hole ({qid!r}, {docid!r}) has no pool entry")
        if qid not in corpus.queries:
            raise KeyError(f"no query text for {qid!r}")
        for needed in (entry.rel_doc_id, docid):
            if needed not in corpus.texts:
                raise KeyError(f"no passage text for {needed!r}")
        tasks.append(
            {
                "id": f"{qid} {docid}",
                "query": corpus.queries[qid],
                "passage_a": corpus.texts[entry.rel_doc_id],
                "passage_b": corpus.texts[docid],
            }
        )
    return tasks
