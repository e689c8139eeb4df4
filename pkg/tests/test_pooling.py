import pytest

from holefill.pooling import (
    find_holes,
    judged_at_k,
    pool_from_files,
    pool_qrels_lines,
    pool_sidecar_json,
    simulate_shallow_pool,
)
from holefill.trec_io import Qrels, Run


def _run(system_id, rankings):
    return Run.from_rankings(system_id, rankings)


class TestSimulateShallowPool:
    def test_first_relevant_above_threshold(self):
        baseline = _run("b", {"q1": [("dA", 3.0), ("dB", 2.0), ("dC", 1.0)]})
        qrels = Qrels({("q1", "dA"): 0, ("q1", "dB"): 2, ("q1", "dC"): 3})
        pool = simulate_shallow_pool(baseline, qrels, rel_threshold=2)
        assert pool.entries["q1"].rel_doc_id == "dB"
        assert pool.entries["q1"].examined == 2

    def test_single_doc_run(self):
        baseline = _run("b", {"q1": [("dA", 1.0)]})
        qrels = Qrels({("q1", "dA"): 2})
        pool = simulate_shallow_pool(baseline, qrels, rel_threshold=2)
        assert pool.entries["q1"].rel_doc_id == "dA"
        assert pool.entries["q1"].examined == 1

    def test_no_relevant_reachable_is_dropped(self):
        baseline = _run("b", {"q1": [("dA", 1.0)]})
        qrels = Qrels({("q1", "dA"): 1})
        pool = simulate_shallow_pool(baseline, qrels, rel_threshold=2)
        assert "q1" not in pool.entries
        assert pool.dropped == ("q1",)

    def test_query_absent_from_qrels_reported(self):
        baseline = _run("b", {"q1": [("dA", 1.0)], "q2": [("dB", 1.0)]})
        qrels = Qrels({("q1", "dA"): 2})
        pool = simulate_shallow_pool(baseline, qrels, rel_threshold=2)
        assert pool.unjudged == ("q2",)
        assert set(pool.entries) == {"q1"}

    def test_threshold_one_accepts_grade_one(self):
        baseline = _run("b", {"q1": [("dA", 2.0), ("dB", 1.0)]})
        qrels = Qrels({("q1", "dA"): 1, ("q1", "dB"): 3})
        assert simulate_shallow_pool(baseline, qrels, 1).entries["q1"].rel_doc_id == "dA"
        assert simulate_shallow_pool(baseline, qrels, 2).entries["q1"].rel_doc_id == "dB"

    def test_idempotent_on_renormalized_baseline(self, track, pool):
        renormalized = Run.from_rankings(
            track.baseline.system_id,
            {q: list(items) for q, items in track.baseline.rankings.items()},
        )
        again = simulate_shallow_pool(renormalized, track.qrels, 2)
        assert again.entries == pool.entries

    def test_bad_threshold(self):
        with pytest.raises(ValueError):
            simulate_shallow_pool(_run("b", {}), Qrels({}), 0)


class TestFindHoles:
    def test_basic(self):
        run = _run("s", {"q1": [("dA", 3.0), ("dB", 2.0), ("dC", 1.0)]})
        baseline = _run("b", {"q1": [("dB", 1.0)]})
        qrels = Qrels({("q1", "dB"): 2})
        pool = simulate_shallow_pool(baseline, qrels, 2)
        holes = find_holes([run], pool, depth=3)
        assert holes.holes == {("q1", "dA"), ("q1", "dC")}

    def test_depth_one_with_rel_at_rank_one(self):
        run = _run("s", {"q1": [("dB", 3.0), ("dA", 2.0)]})
        baseline = _run("b", {"q1": [("dB", 1.0)]})
        pool = simulate_shallow_pool(baseline, Qrels({("q1", "dB"): 2}), 2)
        assert len(find_holes([run], pool, depth=1)) == 0

    def test_union_without_duplicates(self):
        r1 = _run("s1", {"q1": [("dA", 2.0), ("dB", 1.0)]})
        r2 = _run("s2", {"q1": [("dA", 9.0), ("dC", 8.0)]})
        baseline = _run("b", {"q1": [("dB", 1.0)]})
        pool = simulate_shallow_pool(baseline, Qrels({("q1", "dB"): 2}), 2)
        holes = find_holes([r1, r2], pool, depth=2)
        assert holes.holes == {("q1", "dA"), ("q1", "dC")}

    def test_never_contains_pooled_rel_doc(self, track, pool, holes):
        for qid, entry in pool.entries.items():
            assert (qid, entry.rel_doc_id) not in holes.holes

    def test_size_bound(self, track, pool, holes):
        bound = sum(len(run.rankings) * holes.depth for run in track.runs)
        assert len(holes) <= bound

    def test_queries_outside_pool_ignored(self):
        run = _run("s", {"q9": [("dA", 1.0)]})
        baseline = _run("b", {"q1": [("dB", 1.0)]})
        pool = simulate_shallow_pool(baseline, Qrels({("q1", "dB"): 2}), 2)
        assert len(find_holes([run], pool, depth=5)) == 0


class TestJudgedAtK:
    def test_fraction(self):
        run = _run("s", {"q1": [(f"d{i}", float(20 - i)) for i in range(10)]})
        judged = {("q1", f"d{i}") for i in range(4)}
        result = judged_at_k(run, judged, k=10)
        assert result.per_query["q1"] == pytest.approx(0.4)

    def test_all_judged(self):
        run = _run("s", {"q1": [("dA", 2.0), ("dB", 1.0)]})
        judged = {("q1", "dA"), ("q1", "dB")}
        assert judged_at_k(run, judged, k=2).per_query["q1"] == 1.0

    def test_short_ranking_uses_min_denominator(self):
        run = _run("s", {"q1": [(f"d{i}", float(9 - i)) for i in range(5)]})
        judged = {("q1", f"d{i}") for i in range(5)}
        assert judged_at_k(run, judged, k=10).per_query["q1"] == 1.0

    def test_judged_plus_hole_is_one(self, track, pool, holes):
        judged = set(holes.holes) | {
            (qid, e.rel_doc_id) for qid, e in pool.entries.items()
        }
        run = track.runs[3]
        ranked = {(q, d) for q in run.rankings for d, _ in run.rankings[q][:10]}
        j = judged_at_k(run, judged, k=10)
        hole_frac = judged_at_k(run, ranked - judged, k=10)
        for qid in j.per_query:
            assert j.per_query[qid] + hole_frac.per_query[qid] == pytest.approx(1.0)


class TestPoolSerialization:
    def test_round_trip(self, pool):
        lines = list(pool_qrels_lines(pool))
        sidecar = pool_sidecar_json(pool)
        rebuilt = pool_from_files(lines, sidecar)
        assert rebuilt.entries == pool.entries

    def test_qrels_lines_have_grade_one(self, pool):
        for line in pool_qrels_lines(pool):
            assert line.split()[3] == "1"
