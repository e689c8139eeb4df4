"""Deterministic synthetic tracks for tests and desk-scale experiments.

A track is a small self-consistent bundle: topical passage corpus, graded
judgments, a baseline run plus a spread of stronger and weaker systems, and
dense embeddings aligned with the topics. Generation is fully seeded, so a
given seed always yields byte-identical files.

Two constraints are built in so the oracle-labeler pipeline reproduces the
full-judgment evaluation exactly: every baseline ranking contains a
relevant document, and the first relevant document in the baseline carries
the maximum grade (its pinned gain of 1 then equals its normalized grade).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .trec_io import Corpus, EmbeddingStore, Qrels, Run

__all__ = ["SyntheticTrack", "make_track", "write_track", "make_pool_bias_fixture"]

MAX_GRADE = 3
_REL_GRADES = [3, 3, 2, 2, 1, 1]
# runs[0] doubles as the pool-contributing baseline; keep it mid-quality so
# simulated assessors usually examine more than one document. The two
# near-twin pairs (0.95/0.94 and 0.5/0.5) keep some top-vs-other t-tests
# non-significant, so both t-error denominators stay populated.
_QUALITIES = [0.7, 0.95, 0.94, 0.8, 0.6, 0.5, 0.5, 0.3, 0.2, 0.1]


@dataclass
class SyntheticTrack:
    corpus: Corpus
    qrels: Qrels
    runs: list[Run]  # runs[0] is the baseline
    embeddings: EmbeddingStore

    @property
    def baseline(self) -> Run:
        return self.runs[0]


def make_track(
    seed: int = 0,
    n_queries: int = 20,
    n_docs: int = 200,
    n_systems: int = 10,
    run_len: int = 10,
    embed_dim: int = 16,
) -> SyntheticTrack:
    if n_docs < n_queries * len(_REL_GRADES) + 20:
        raise ValueError("need enough documents for disjoint relevant sets plus distractors")
    rng = random.Random(seed)
    nprng = np.random.default_rng(seed)

    doc_ids = [f"d{i:04d}" for i in range(n_docs)]
    query_ids = [f"q{i:03d}" for i in range(n_queries)]

    rel_docs: dict[str, list[str]] = {}
    grades: dict[tuple[str, str], int] = {}
    cursor = 0
    for qid in query_ids:
        docs = doc_ids[cursor : cursor + len(_REL_GRADES)]
        cursor += len(_REL_GRADES)
        rel_docs[qid] = docs
        for docid, grade in zip(docs, _REL_GRADES):
            grades[(qid, docid)] = grade
    distractors = doc_ids[cursor:]

    # judged non-relevant pairs, so PR analysis sees explicit negatives
    for qid in query_ids:
        for docid in rng.sample(distractors, 10):
            grades.setdefault((qid, docid), 0)

    topic_terms = {qid: [f"t{qid}w{j}" for j in range(8)] for qid in query_ids}
    common_terms = [f"common{j}" for j in range(40)]

    texts: dict[str, str] = {}
    for qid in query_ids:
        for docid in rel_docs[qid]:
            grade = grades[(qid, docid)]
            n_topic = 6 + 4 * grade
            words = rng.choices(topic_terms[qid], k=n_topic) + rng.choices(common_terms, k=24 - 2 * grade)
            rng.shuffle(words)
            texts[docid] = " ".join(words)
    for docid in distractors:
        texts[docid] = " ".join(rng.choices(common_terms, k=rng.randint(20, 36)))
    queries = {qid: " ".join(rng.sample(topic_terms[qid], 3)) for qid in query_ids}

    topic_axes = {qid: nprng.normal(size=embed_dim) for qid in query_ids}
    for qid in query_ids:
        topic_axes[qid] /= np.linalg.norm(topic_axes[qid])
    vectors: dict[str, np.ndarray] = {}
    for qid in query_ids:
        for docid in rel_docs[qid]:
            grade = grades[(qid, docid)]
            vectors[docid] = (0.4 + 0.25 * grade) * topic_axes[qid] + 0.05 * nprng.normal(size=embed_dim)
    for docid in distractors:
        vectors[docid] = 0.25 * nprng.normal(size=embed_dim)

    qualities = (_QUALITIES * ((n_systems + len(_QUALITIES) - 1) // len(_QUALITIES)))[:n_systems]
    raw_rankings: list[dict[str, list[tuple[str, float]]]] = []
    for quality in qualities:
        # exponential noise: weak systems occasionally float junk above
        # genuinely relevant documents, like real lexical matchers do
        noise = (1.0 - quality) * 0.9 + 0.03
        rankings: dict[str, list[tuple[str, float]]] = {}
        for qid in query_ids:
            candidates = rel_docs[qid] + rng.sample(distractors, 3 * run_len)
            scored = [
                (docid, grades.get((qid, docid), 0) / MAX_GRADE + noise * rng.expovariate(1.0))
                for docid in candidates
            ]
            scored.sort(key=lambda t: (-t[1], t[0]))
            rankings[qid] = scored[:run_len]
        raw_rankings.append(rankings)

    base = raw_rankings[0]
    for qid in query_ids:
        first_rel = next(
            (docid for docid, _ in base[qid] if grades.get((qid, docid), 0) >= 2), None
        )
        if first_rel is None:
            # splice the query's strongest document into the bottom rank
            forced = rel_docs[qid][0]
            items = [(d, s) for d, s in base[qid] if d != forced]
            items[-1] = (forced, items[-1][1])
            base[qid] = items
            first_rel = forced
        # the pinned d+ gain of 1 must equal its normalized grade
        grades[(qid, first_rel)] = MAX_GRADE

    runs = [
        Run.from_rankings(f"sys{s:02d}", rankings) for s, rankings in enumerate(raw_rankings)
    ]

    corpus = Corpus(texts=texts, queries=queries)
    ids = sorted(vectors)
    store = EmbeddingStore(ids, np.stack([vectors[d] for d in ids]))
    return SyntheticTrack(corpus=corpus, qrels=Qrels(grades), runs=runs, embeddings=store)


def write_track(track: SyntheticTrack, out_dir: str | Path) -> dict[str, str]:
    """Write a track as the interchange files the CLI consumes."""
    import json

    from .trec_io import serialize_qrels, serialize_run

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "runs").mkdir(exist_ok=True)

    paths = {
        "corpus": str(out / "corpus.tsv"),
        "queries": str(out / "queries.tsv"),
        "qrels": str(out / "qrels.txt"),
        "baseline_run": str(out / "baseline.run"),
        "run_dir": str(out / "runs"),
        "embeddings": str(out / "embeddings.jsonl"),
    }
    with open(paths["corpus"], "w", encoding="utf-8") as fh:
        for docid in sorted(track.corpus.texts):
            fh.write(f"{docid}\t{track.corpus.texts[docid]}\n")
    with open(paths["queries"], "w", encoding="utf-8") as fh:
        for qid in sorted(track.corpus.queries):
            fh.write(f"{qid}\t{track.corpus.queries[qid]}\n")
    with open(paths["qrels"], "w", encoding="utf-8") as fh:
        fh.writelines(serialize_qrels(track.qrels))
    with open(paths["baseline_run"], "w", encoding="utf-8") as fh:
        fh.writelines(serialize_run(track.baseline))
    for run in track.runs:
        with open(Path(paths["run_dir"]) / f"{run.system_id}.run", "w", encoding="utf-8") as fh:
            fh.writelines(serialize_run(run))
    with open(paths["embeddings"], "w", encoding="utf-8") as fh:
        for docid in track.embeddings.doc_ids:
            vec = [float(v) for v in track.embeddings.vector(docid)]
            fh.write(json.dumps({"docid": docid, "vector": vec}) + "\n")
    return paths


def make_pool_bias_fixture() -> tuple[list[Run], Qrels]:
    """A track where the pool-contributing baseline is mid-pack on merit.

    The baseline finds exactly one relevant document per query at rank 1;
    two systems find several relevant documents (but not that one early),
    two find none. Under the zero labeler only the baseline's d+ carries
    gain, so the baseline unfairly outranks the genuinely better systems.
    runs[0] is the baseline.
    """
    query_ids = [f"q{i}" for i in range(1, 5)]
    grades: dict[tuple[str, str], int] = {}
    rankings_by_system: dict[str, dict[str, list[tuple[str, float]]]] = {
        s: {} for s in ("base", "good1", "good2", "weak1", "weak2")
    }
    for qid in query_ids:
        rel = [f"{qid}-r{j}" for j in range(5)]
        junk = [f"{qid}-j{j}" for j in range(12)]
        for docid in rel:
            grades[(qid, docid)] = 3
        for docid in junk:
            grades[(qid, docid)] = 0

        def ranked(docids: list[str]) -> list[tuple[str, float]]:
            return [(d, float(20 - i)) for i, d in enumerate(docids)]

        rankings_by_system["base"][qid] = ranked([rel[0]] + junk[:9])
        rankings_by_system["good1"][qid] = ranked(rel[1:5] + junk[:6])
        rankings_by_system["good2"][qid] = ranked([rel[1], rel[2], junk[0], rel[3]] + junk[1:7])
        rankings_by_system["weak1"][qid] = ranked(junk[:10])
        rankings_by_system["weak2"][qid] = ranked(junk[2:12])
    runs = [Run.from_rankings(s, rankings_by_system[s]) for s in ("base", "good1", "good2", "weak1", "weak2")]
    return runs, Qrels(grades)
