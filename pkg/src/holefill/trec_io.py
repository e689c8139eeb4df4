"""Interchange formats: TREC runs, qrels, corpora, embeddings, score caches.

All parsers take an iterable of text lines (an open file in text mode works)
and all serializers yield text lines, so callers control file handling.
Everything returned here is immutable after load and safe to share.

Ids are opaque strings. Because run and qrels files are whitespace-delimited,
ids parsed from them can never contain whitespace; downstream code relies on
this (e.g. the bridge task protocol joins `qid unk_docid` with a space).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

__all__ = [
    "ParseError",
    "Run",
    "Qrels",
    "Corpus",
    "EmbeddingStore",
    "ScoreRecord",
    "ScoreCache",
    "parse_run",
    "serialize_run",
    "parse_qrels",
    "serialize_qrels",
    "load_corpus",
    "load_queries",
    "load_embeddings",
    "read_score_cache",
    "write_score_cache",
    "read_bridge_scores",
    "write_bridge_tasks",
]


class ParseError(ValueError):
    """Malformed input; carries the 1-based line/record number."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


def _ranked(items: list[tuple[str, float]]) -> tuple[tuple[str, float], ...]:
    """Normalize a ranking: score descending, ties by doc_id descending."""
    items = sorted(items, key=lambda t: t[0], reverse=True)
    items.sort(key=lambda t: t[1], reverse=True)
    return tuple(items)


@dataclass(frozen=True)
class Run:
    """One system's ranked output: query_id -> ordered (doc_id, score).

    The stored order is the evaluation order (score desc, doc_id desc on
    ties), regardless of any rank column in the source file.
    """

    system_id: str
    rankings: Mapping[str, tuple[tuple[str, float], ...]]

    @staticmethod
    def from_rankings(system_id: str, rankings: Mapping[str, list[tuple[str, float]]]) -> "Run":
        """Build a normalized Run from unsorted per-query (doc_id, score) lists."""
        return Run(system_id, {qid: _ranked(list(items)) for qid, items in rankings.items()})

    def ranking(self, query_id: str) -> tuple[tuple[str, float], ...]:
        return self.rankings.get(query_id, ())


def parse_run(lines: Iterable[str]) -> Run:
    """Parse a TREC run file: `qid Q0 docid rank score tag` per line.

    The rank column is ignored; ordering is recomputed from scores. The
    system id is the tag field of the first line.
    """
    system_id: str | None = None
    rankings: dict[str, list[tuple[str, float]]] = {}
    seen: set[tuple[str, str]] = set()
    n = 0
    for line_no, line in enumerate(lines, start=1):
        n = line_no
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != 6:
            raise ParseError(f"expected 6 fields, got {len(fields)}", line_no)
        qid, _q0, docid, _rank, score_s, tag = fields
        try:
            score = float(score_s)
        except ValueError:
            raise ParseError(f"unparseable score {score_s!r}", line_no) from None
        if not math.isfinite(score):
            raise ParseError(f"non-finite score {score_s!r}", line_no)
        if (qid, docid) in seen:
            raise ParseError(f"duplicate document {docid!r} for query {qid!r}", line_no)
        seen.add((qid, docid))
        if system_id is None:
            system_id = tag
        rankings.setdefault(qid, []).append((docid, score))
    if system_id is None:
        raise ParseError("empty run file", n or None)
    return Run(system_id, {qid: _ranked(items) for qid, items in rankings.items()})


def serialize_run(run: Run) -> Iterator[str]:
    """Emit TREC run lines in normalized order, queries sorted by id.

    Scores are written with repr so they round-trip bit-exactly.
    """
    for qid in sorted(run.rankings):
        for rank, (docid, score) in enumerate(run.rankings[qid], start=1):
            yield f"{qid} Q0 {docid} {rank} {score!r} {run.system_id}\n"


@dataclass(frozen=True)
class Qrels:
    """Graded relevance judgments: (query_id, doc_id) -> grade >= 0."""

    grades: Mapping[tuple[str, str], int]

    def grade(self, query_id: str, doc_id: str, default: int = 0) -> int:
        return self.grades.get((query_id, doc_id), default)

    def has(self, query_id: str, doc_id: str) -> bool:
        return (query_id, doc_id) in self.grades

    @property
    def query_ids(self) -> set[str]:
        return {qid for qid, _ in self.grades}

    def max_grade(self) -> int:
        return max(self.grades.values(), default=0)

    def docs_for(self, query_id: str) -> dict[str, int]:
        return {d: g for (q, d), g in self.grades.items() if q == query_id}


def parse_qrels(lines: Iterable[str]) -> Qrels:
    """Parse a TREC qrels file: `qid iter docid grade` per line.

    The iteration column is ignored. Duplicate pairs are allowed only when
    the grades agree.
    """
    grades: dict[tuple[str, str], int] = {}
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != 4:
            raise ParseError(f"expected 4 fields, got {len(fields)}", line_no)
        qid, _iter, docid, grade_s = fields
        try:
            grade = int(grade_s)
        except ValueError:
            raise ParseError(f"unparseable grade {grade_s!r}", line_no) from None
        if grade < 0:
            raise ParseError(f"negative grade {grade}", line_no)
        key = (qid, docid)
        if key in grades and grades[key] != grade:
            raise ParseError(
                f"conflicting duplicate for ({qid!r}, {docid!r}): {grades[key]} vs {grade}", line_no
            )
        grades[key] = grade
    return Qrels(grades)


def serialize_qrels(qrels: Qrels) -> Iterator[str]:
    for (qid, docid), grade in sorted(qrels.grades.items()):
        yield f"{qid} 0 {docid} {grade}\n"


@dataclass(frozen=True)
class Corpus:
    """Passage and query texts keyed by id."""

    texts: Mapping[str, str]
    queries: Mapping[str, str] = field(default_factory=dict)


def _read_text_records(lines: Iterable[str], fmt: str, id_field: str) -> dict[str, str]:
    """Read `id -> text` records in TSV or JSON-lines form.

    TSV is `id<TAB>text`; JSONL objects carry `id_field` and `text` keys.
    Missing fields, empty texts, and duplicate ids are errors.
    """
    if fmt not in ("tsv", "jsonl"):
        raise ValueError(f"unknown corpus format {fmt!r} (expected 'tsv' or 'jsonl')")
    out: dict[str, str] = {}
    for rec_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        if fmt == "tsv":
            parts = line.rstrip("\n").split("\t", 1)
            if len(parts) != 2:
                raise ParseError("expected `id<TAB>text`", rec_no)
            rid, text = parts
        else:
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"bad JSON: {exc}", rec_no) from None
            if id_field not in obj or "text" not in obj:
                raise ParseError(f"missing {id_field!r} or 'text' field", rec_no)
            rid, text = str(obj[id_field]), str(obj["text"])
        if not text:
            raise ParseError(f"empty text for {rid!r}", rec_no)
        if rid in out:
            raise ParseError(f"duplicate id {rid!r}", rec_no)
        out[rid] = text
    return out


def load_corpus(lines: Iterable[str], fmt: str = "tsv") -> Corpus:
    """Load passage texts; see `_read_text_records` for formats."""
    return Corpus(texts=_read_text_records(lines, fmt, "docid"))


def load_queries(lines: Iterable[str], fmt: str = "tsv") -> dict[str, str]:
    """Load query texts (JSONL uses a `qid` field)."""
    return _read_text_records(lines, fmt, "qid")


class EmbeddingStore:
    """Dense document vectors with exact inner-product lookup.

    Rows are stored in a float64 matrix in load order; `vector` returns a
    read-only view.
    """

    def __init__(self, doc_ids: list[str], matrix):
        import numpy as np

        if len(doc_ids) == 0:
            raise ValueError("empty store")
        self.doc_ids: tuple[str, ...] = tuple(doc_ids)
        self.matrix = np.asarray(matrix, dtype=np.float64)
        self.matrix.setflags(write=False)
        self.dim: int = int(self.matrix.shape[1])
        self._row = {d: i for i, d in enumerate(self.doc_ids)}

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._row

    def __len__(self) -> int:
        return len(self.doc_ids)

    def row(self, doc_id: str) -> int:
        if doc_id not in self._row:
            raise KeyError(f"unknown document {doc_id!r}")
        return self._row[doc_id]

    def vector(self, doc_id: str):
        return self.matrix[self.row(doc_id)]


def load_embeddings(lines: Iterable[str]) -> EmbeddingStore:
    """Load JSONL `{"docid": str, "vector": [...]}` records.

    The dimension is fixed by the first record; mismatches and non-finite
    components are errors, as is an empty stream.
    """
    doc_ids: list[str] = []
    rows: list[list[float]] = []
    dim: int | None = None
    seen: set[str] = set()
    for rec_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON: {exc}", rec_no) from None
        if "docid" not in obj or "vector" not in obj:
            raise ParseError("missing 'docid' or 'vector' field", rec_no)
        docid = str(obj["docid"])
        vec = [float(v) for v in obj["vector"]]
        if dim is None:
            dim = len(vec)
            if dim == 0:
                raise ParseError("zero-length vector", rec_no)
        elif len(vec) != dim:
            raise ParseError(f"dimension mismatch: expected {dim}, got {len(vec)}", rec_no)
        if any(not math.isfinite(v) for v in vec):
            raise ParseError(f"non-finite component in vector for {docid!r}", rec_no)
        if docid in seen:
            raise ParseError(f"duplicate docid {docid!r}", rec_no)
        seen.add(docid)
        doc_ids.append(docid)
        rows.append(vec)
    if not doc_ids:
        raise ParseError("empty store")
    return EmbeddingStore(doc_ids, rows)


@dataclass(frozen=True, order=True)
class ScoreRecord:
    """One labeler output for a single hole."""

    labeler: str
    qid: str
    rel_docid: str
    unk_docid: str
    score: float


class ScoreCache:
    """Score records indexed by (labeler, qid, unk_docid).

    Conflicting duplicates are rejected; bitwise-equal duplicates collapse.
    """

    def __init__(self, records: Iterable[ScoreRecord]):
        self.index: dict[tuple[str, str, str], ScoreRecord] = {}
        for rec in records:
            key = (rec.labeler, rec.qid, rec.unk_docid)
            prior = self.index.get(key)
            if prior is not None and prior != rec:
                raise ValueError(f"conflicting duplicate cache entry for {key}")
            self.index[key] = rec

    def __len__(self) -> int:
        return len(self.index)

    def get(self, labeler: str, qid: str, unk_docid: str) -> ScoreRecord | None:
        return self.index.get((labeler, qid, unk_docid))

    @property
    def records(self) -> list[ScoreRecord]:
        return sorted(self.index.values())


def read_score_cache(lines: Iterable[str]) -> ScoreCache:
    """Read JSONL `{"labeler","qid","rel_docid","unk_docid","score"}` records."""
    records: list[ScoreRecord] = []
    for rec_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON: {exc}", rec_no) from None
        missing = {"labeler", "qid", "rel_docid", "unk_docid", "score"} - obj.keys()
        if missing:
            raise ParseError(f"missing fields {sorted(missing)}", rec_no)
        score = float(obj["score"])
        if not (0.0 <= score <= 1.0):
            raise ParseError(f"score {score} outside [0,1]", rec_no)
        records.append(
            ScoreRecord(
                labeler=str(obj["labeler"]),
                qid=str(obj["qid"]),
                rel_docid=str(obj["rel_docid"]),
                unk_docid=str(obj["unk_docid"]),
                score=score,
            )
        )
    try:
        return ScoreCache(records)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def write_score_cache(records: Iterable[ScoreRecord]) -> Iterator[str]:
    """Emit cache records as JSONL in canonical order.

    json writes floats with repr, so the read/write round trip is lossless.
    """
    for rec in sorted(records):
        yield json.dumps(
            {
                "labeler": rec.labeler,
                "qid": rec.qid,
                "rel_docid": rec.rel_docid,
                "unk_docid": rec.unk_docid,
                "score": rec.score,
            },
            sort_keys=True,
        ) + "\n"


def read_bridge_scores(lines: Iterable[str]) -> dict[str, float]:
    """Read a bridge score file: JSONL `{"id","score"}` plus a final footer.

    The footer `{"done": true, "count": N}` guards against truncated output:
    files without it, or whose line count disagrees, are rejected.
    """
    scores: dict[str, float] = {}
    footer: dict | None = None
    for rec_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        if footer is not None:
            raise ParseError("records found after footer", rec_no)
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON: {exc}", rec_no) from None
        if "done" in obj:
            footer = obj
            continue
        if "id" not in obj or "score" not in obj:
            raise ParseError("missing 'id' or 'score' field", rec_no)
        tid = str(obj["id"])
        score = float(obj["score"])
        if not (0.0 <= score <= 1.0):
            raise ParseError(f"score {score} outside [0,1]", rec_no)
        if tid in scores:
            raise ParseError(f"duplicate task id {tid!r}", rec_no)
        scores[tid] = score
    if footer is None:
        raise ParseError("missing footer record; bridge output may be truncated")
    if footer.get("done") is not True or footer.get("count") != len(scores):
        raise ParseError(
            f"footer mismatch: says count={footer.get('count')}, file has {len(scores)} scores"
        )
    return scores


def write_bridge_tasks(tasks: Iterable[Mapping[str, str]]) -> Iterator[str]:
    """Emit bridge task records `{"id","query","passage_a","passage_b"}` as JSONL."""
    for task in tasks:
        yield json.dumps(
            {
                "id": task["id"],
                "query": task["query"],
                "passage_a": task["passage_a"],
                "passage_b": task["passage_b"],
            },
            sort_keys=True,
        ) + "\n"
