import itertools
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as scipy_stats

from holefill.labelers import GainTable
from holefill.measures import parse_measure
from holefill.meta import (
    PRCurve,
    SystemScores,
    format_comparison_table,
    kendall_tau,
    labeler_pr_analysis,
    paired_ttest,
    rank_systems,
    rbo,
    significance_report,
    spearman_rho,
    t_error_rates,
)
from holefill.trec_io import Qrels, Run, ScoreRecord


class TestKendallTau:
    def test_identity(self):
        assert kendall_tau([1, 2, 3], [1, 2, 3]) == 1.0

    def test_reversal(self):
        assert kendall_tau([1, 2, 3], [3, 2, 1]) == -1.0

    def test_one_discordant_pair(self):
        assert kendall_tau([1, 2, 3], [1, 3, 2]) == pytest.approx(1 / 3, abs=1e-12)

    def test_constant_vector_rejected(self):
        with pytest.raises(ValueError, match="tied"):
            kendall_tau([1, 1, 1], [1, 2, 3])
        with pytest.raises(ValueError, match="tied"):
            kendall_tau([1, 2, 3], [5, 5, 5])

    def test_invariant_under_increasing_transform(self):
        x = [0.3, 0.1, 0.9, 0.5, 0.5, 0.2]
        y = [1.0, 2.0, 0.5, 0.7, 0.1, 0.9]
        base = kendall_tau(x, y)
        assert kendall_tau([math.exp(v) for v in x], y) == base
        assert kendall_tau(x, [3 * v + 7 for v in y]) == base

    @settings(max_examples=150, deadline=None)
    @given(st.lists(st.integers(0, 5), min_size=2, max_size=30))
    def test_matches_scipy_with_ties(self, x):
        rng = random.Random(sum(x))
        y = [rng.randint(0, 5) for _ in x]
        if len(set(x)) == 1 or len(set(y)) == 1:
            return
        expected = scipy_stats.kendalltau(x, y).statistic
        assert kendall_tau(x, y) == pytest.approx(expected, abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(0, 4), min_size=2, max_size=15))
    def test_symmetry(self, x):
        rng = random.Random(len(x) * 31 + sum(x))
        y = [rng.randint(0, 4) for _ in x]
        if len(set(x)) == 1 or len(set(y)) == 1:
            return
        assert kendall_tau(x, y) == kendall_tau(y, x)


class TestSpearmanRho:
    def test_identity(self):
        assert spearman_rho([1, 2, 3], [1, 2, 3]) == 1.0

    def test_reversal(self):
        assert spearman_rho([1, 2, 3], [3, 2, 1]) == -1.0

    def test_closed_form_fixture(self):
        assert spearman_rho([1, 2, 3, 4], [1, 2, 4, 3]) == pytest.approx(0.8, abs=1e-12)

    def test_zero_variance_rejected(self):
        with pytest.raises(ValueError, match="variance"):
            spearman_rho([2, 2, 2], [1, 2, 3])

    def test_invariant_under_increasing_transform(self):
        x = [0.3, 0.1, 0.9, 0.5, 0.5, 0.2]
        y = [1.0, 2.0, 0.5, 0.7, 0.1, 0.9]
        base = spearman_rho(x, y)
        assert spearman_rho([math.exp(v) for v in x], y) == base
        assert spearman_rho(x, [3 * v + 7 for v in y]) == base

    @settings(max_examples=150, deadline=None)
    @given(st.lists(st.integers(0, 6), min_size=2, max_size=30))
    def test_matches_scipy_with_ties(self, x):
        rng = random.Random(sum(x) + len(x))
        y = [rng.randint(0, 6) for _ in x]
        if len(set(x)) == 1 or len(set(y)) == 1:
            return
        expected = scipy_stats.spearmanr(x, y).statistic
        assert spearman_rho(x, y) == pytest.approx(expected, abs=1e-12)


def _rbo_direct(a, b, p):
    """Direct summation of the extrapolated formula, naive set intersections."""
    l = len(a)
    total = 0.0
    for d in range(1, l + 1):
        xd = len(set(a[:d]) & set(b[:d]))
        total += (xd / d) * p**d
    xl = len(set(a) & set(b))
    return (xl / l) * p**l + ((1 - p) / p) * total


class TestRbo:
    def test_identity_exact(self):
        items = [f"s{i}" for i in range(17)]
        assert rbo(items, items, 0.9) == 1.0

    def test_two_item_swap_exact(self):
        assert rbo(["s1", "s2"], ["s2", "s1"], 0.9) == 0.9

    def test_symmetry_exact(self):
        rng = random.Random(3)
        items = [f"s{i}" for i in range(20)]
        other = items[:]
        rng.shuffle(other)
        assert rbo(items, other, 0.9) == rbo(other, items, 0.9)

    def test_matches_direct_summation(self):
        rng = random.Random(11)
        items = [f"s{i}" for i in range(50)]
        for _ in range(25):
            a = items[:]
            b = items[:]
            rng.shuffle(a)
            rng.shuffle(b)
            assert rbo(a, b, 0.9) == pytest.approx(_rbo_direct(a, b, 0.9), abs=1e-12)

    def test_different_item_sets_rejected(self):
        with pytest.raises(ValueError, match="different item sets"):
            rbo(["a", "b"], ["a", "c"])

    def test_duplicates_rejected(self):
        with pytest.raises(ValueError, match="duplicates"):
            rbo(["a", "a"], ["a", "a"])

    def test_in_unit_interval(self):
        rng = random.Random(5)
        items = [f"s{i}" for i in range(10)]
        for _ in range(50):
            a = items[:]
            b = items[:]
            rng.shuffle(a)
            rng.shuffle(b)
            assert 0.0 <= rbo(a, b, 0.9) <= 1.0


class TestPairedTtest:
    def test_identical_vectors_not_significant(self):
        t, p = paired_ttest([0.1, 0.2, 0.3], [0.1, 0.2, 0.3])
        assert (t, p) == (0.0, 1.0)

    def test_constant_nonzero_differences_not_significant(self):
        # zero variance: t undefined, reported as "not significant" by decision
        # (binary-exact values so the differences are bitwise identical)
        t, p = paired_ttest([1.25, 2.25, 3.25], [1.0, 2.0, 3.0])
        assert (t, p) == (0.0, 1.0)

    def test_hand_derived_fixture(self):
        a = [0.1, 0.2, 0.15, 0.05]
        b = [0.0, 0.0, 0.0, 0.0]
        t, p = paired_ttest(a, b)
        assert t == pytest.approx(3.873, abs=1e-3)
        assert p == pytest.approx(0.030, abs=1e-3)

    def test_antisymmetry(self):
        a = [0.5, 0.1, 0.9, 0.3]
        b = [0.2, 0.4, 0.6, 0.1]
        t1, p1 = paired_ttest(a, b)
        t2, p2 = paired_ttest(b, a)
        assert t1 == -t2
        assert p1 == p2

    def test_matches_scipy_on_random_fixtures(self):
        rng = random.Random(23)
        for _ in range(100):
            n = rng.randint(2, 40)
            a = [rng.random() for _ in range(n)]
            b = [rng.random() for _ in range(n)]
            t, p = paired_ttest(a, b)
            ref = scipy_stats.ttest_rel(a, b)
            assert t == pytest.approx(ref.statistic, abs=1e-9)
            assert p == pytest.approx(ref.pvalue, abs=1e-9)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            paired_ttest([1.0], [1.0, 2.0])


def _alternating(magnitude, n):
    return [magnitude if i % 2 == 0 else -magnitude for i in range(n)]


def _scores(vectors):
    n = len(next(iter(vectors.values())))
    qids = tuple(f"q{i}" for i in range(n))
    return SystemScores(query_ids=qids, vectors={s: tuple(v) for s, v in vectors.items()})


class TestSignificanceReport:
    def test_identical_systems_never_significant(self):
        scores = _scores({"a": [0.5, 0.6, 0.7], "b": [0.5, 0.6, 0.7]})
        report = significance_report(scores)
        assert report.m == 1
        assert not report.comparisons["b"].significant

    def test_clear_separation_significant_with_bonferroni(self):
        n = 10
        top = [0.9 + e for e in _alternating(0.001, n)]
        low = [0.1 + e for e in _alternating(0.001, n)]
        mid = [0.5 + e for e in _alternating(0.001, n)]
        report = significance_report(_scores({"top": top, "low": low, "mid": mid}))
        assert report.top_system == "top"
        assert report.m == 2
        assert report.comparisons["low"].significant
        assert report.comparisons["mid"].significant

    def test_bonferroni_threshold_scales_with_m(self):
        # raw p ~= 0.0305 (the hand fixture): significant with m=1, not with m=5
        base = [0.0, 0.0, 0.0, 0.0]
        near = [0.1, 0.2, 0.15, 0.05]
        two = _scores({"top": near, "other": base})
        assert significance_report(two).comparisons["other"].significant  # 0.0305 < 0.05/1
        six = {"top": near}
        for i in range(5):
            six[f"s{i}"] = base
        report = significance_report(_scores(six))
        assert report.m == 5
        assert not report.comparisons["s0"].significant  # 0.0305 > 0.05/5

    def test_top_ties_broken_by_system_id(self):
        scores = _scores({"b": [0.5, 0.5], "a": [0.5, 0.5], "c": [0.1, 0.1]})
        assert significance_report(scores).top_system == "a"

    def test_matches_scipy_decision_rule(self):
        rng = random.Random(99)
        n = 16
        vectors = {f"s{i}": [rng.random() for _ in range(n)] for i in range(6)}
        scores = _scores(vectors)
        report = significance_report(scores, alpha=0.05)
        top = report.top_system
        for other, test in report.comparisons.items():
            ref = scipy_stats.ttest_rel(vectors[top], vectors[other])
            assert test.significant == (ref.pvalue < 0.05 / 5)


class TestTErrorRates:
    def test_identical_evaluations_zero_where_defined(self):
        n = 12
        vectors = {
            "top": [0.9 + e for e in _alternating(0.0006, n)],
            "near": [0.9 - 0.001 + e for e in _alternating(0.002, n)],
            "low": [0.1 + e for e in _alternating(0.0007, n)],
        }
        scores = _scores(vectors)
        rates = t_error_rates(scores, scores)
        assert rates.t_fpr in (0.0, None)
        assert rates.t_fnr in (0.0, None)
        assert rates.false_positives == 0 and rates.false_negatives == 0

    def test_candidate_all_significant_full_none(self):
        n = 12
        top = [0.9 + e for e in _alternating(0.0005, n)]
        cand = {
            "top": top,
            "s1": [0.1 + e for e in _alternating(0.0005, n)],
            "s2": [0.2 + e for e in _alternating(0.0005, n)],
        }
        # under full labels every system looks like the top
        full = {
            "top": top,
            "s1": [0.9 + e for e in _alternating(0.002, n)],
            "s2": [0.9 + e for e in _alternating(0.003, n)],
        }
        rates = t_error_rates(_scores(cand), _scores(full))
        assert rates.t_fpr == 1.0
        assert rates.t_fnr is None  # no full-significant pairs: denominator absent

    def test_planted_confusion_cells_hand_counted(self):
        """10 systems: 2 TP, 2 FP, 2 FN, 3 TN against the top -> fpr 0.4, fnr 0.5."""
        n = 12
        top = [0.9 + e for e in _alternating(0.0004, n)]
        sig_low = lambda base, mag: [base + e for e in _alternating(mag, n)]
        near_top = lambda mag: [0.9 - 0.0001 + e for e in _alternating(mag, n)]
        cand = {
            "top": top,
            "tp1": sig_low(0.1, 0.0005),
            "tp2": sig_low(0.15, 0.0006),
            "fp1": sig_low(0.1, 0.0004),
            "fp2": sig_low(0.12, 0.0007),
            "fn1": near_top(0.002),
            "fn2": near_top(0.003),
            "tn1": near_top(0.002),
            "tn2": near_top(0.0025),
            "tn3": near_top(0.0015),
        }
        full = {
            "top": top,
            "tp1": sig_low(0.1, 0.0005),
            "tp2": sig_low(0.2, 0.0005),
            "fp1": near_top(0.002),
            "fp2": near_top(0.004),
            "fn1": sig_low(0.1, 0.0008),
            "fn2": sig_low(0.3, 0.0005),
            "tn1": near_top(0.003),
            "tn2": near_top(0.002),
            "tn3": near_top(0.004),
        }
        rates = t_error_rates(_scores(cand), _scores(full))
        assert rates.top_system == "top"
        assert (rates.true_positives, rates.false_positives) == (2, 2)
        assert (rates.false_negatives, rates.true_negatives) == (2, 3)
        assert rates.t_fpr == pytest.approx(0.4)
        assert rates.t_fnr == pytest.approx(0.5)

    def test_mismatched_systems_rejected(self):
        a = _scores({"x": [0.1, 0.2], "y": [0.3, 0.4]})
        b = _scores({"x": [0.1, 0.2], "z": [0.3, 0.4]})
        with pytest.raises(ValueError, match="different systems"):
            t_error_rates(a, b)

    def test_top_from_full_flag(self):
        n = 8
        cand = {
            "a": [0.9 + e for e in _alternating(0.001, n)],
            "b": [0.5 + e for e in _alternating(0.001, n)],
        }
        full = {
            "a": [0.5 + e for e in _alternating(0.001, n)],
            "b": [0.9 + e for e in _alternating(0.001, n)],
        }
        assert t_error_rates(_scores(cand), _scores(full)).top_system == "a"
        assert t_error_rates(_scores(cand), _scores(full), top_from_full=True).top_system == "b"


class TestRankSystems:
    def test_singleton(self):
        run = Run.from_rankings("only", {"q1": [("dA", 1.0)]})
        table = GainTable({"q1": {"dA": 1.0}})
        scores, ranking = rank_systems([run], table, parse_measure("WP@10"), ["q1"])
        assert ranking == ["only"]

    def test_duplicate_system_rejected(self):
        run = Run.from_rankings("dup", {"q1": [("dA", 1.0)]})
        with pytest.raises(ValueError, match="duplicate system"):
            rank_systems([run, run], GainTable({}), parse_measure("WP@10"), ["q1"])

    def test_same_table_same_ranking(self, track, pool, oracle_records):
        from holefill.labelers import build_gain_table, gain_table_from_qrels

        oracle_table = build_gain_table(pool, oracle_records, "oracle")
        full_table = gain_table_from_qrels(track.qrels, pool.query_ids)
        spec = parse_measure("SDCG@10")
        _, r1 = rank_systems(track.runs, oracle_table, spec, pool.query_ids)
        _, r2 = rank_systems(track.runs, full_table, spec, pool.query_ids)
        assert r1 == r2

    def test_ordering_invariant_under_positive_affine_transform(self):
        rng = random.Random(4)
        vectors = {f"s{i}": [rng.random() for _ in range(6)] for i in range(5)}
        scores = _scores(vectors)
        transformed = _scores({s: [3.0 * v + 0.25 for v in vec] for s, vec in vectors.items()})
        assert scores.ranking() == transformed.ranking()


def _pr_oracle(scored, tie_key):
    """Brute-force confusion sweep plus rank-based AP, all recounted per step."""
    ordered = sorted(scored, key=tie_key)
    n_rel = sum(1 for item in ordered if item[3])
    ap = 0.0
    for idx, item in enumerate(ordered, start=1):
        if item[3]:
            hits = sum(1 for other in ordered[:idx] if other[3])
            ap += hits / idx
    ap /= n_rel
    best_f1 = 0.0
    for threshold in sorted({item[0] for item in ordered}, reverse=True):
        tp = sum(1 for item in ordered if item[0] >= threshold and item[3])
        fp = sum(1 for item in ordered if item[0] >= threshold and not item[3])
        fn = n_rel - tp
        if tp:
            best_f1 = max(best_f1, 2 * tp / (2 * tp + fp + fn))
    return ap, best_f1


def _records(scores_labels):
    records, qrels = [], {}
    for i, (score, label) in enumerate(scores_labels):
        docid = f"d{i:03d}"
        records.append(ScoreRecord("m", "q1", "dR", docid, score))
        qrels[("q1", docid)] = 2 if label else 0
    return records, Qrels(qrels)


class TestLabelerPrAnalysis:
    def test_three_item_fixture(self):
        records, qrels = _records([(0.9, True), (0.8, False), (0.7, True)])
        curve = labeler_pr_analysis(records, qrels, rel_threshold=2)
        assert curve.average_precision == pytest.approx((1.0 + 2 / 3) / 2, abs=1e-12)
        assert curve.best_f1 == 0.8

    def test_perfect_scorer(self):
        records, qrels = _records([(0.9, True), (0.8, True), (0.2, False), (0.1, False)])
        curve = labeler_pr_analysis(records, qrels, rel_threshold=2)
        assert curve.average_precision == 1.0
        assert curve.best_f1 == 1.0

    def test_recall_nondecreasing_as_threshold_drops(self):
        rng = random.Random(8)
        records, qrels = _records([(rng.random(), rng.random() < 0.4) for _ in range(60)])
        curve = labeler_pr_analysis(records, qrels, rel_threshold=2)
        recalls = [r for _, _, r in curve.points]
        assert recalls == sorted(recalls)

    def test_unjudged_pairs_excluded_and_counted(self):
        records, qrels = _records([(0.9, True), (0.5, False)])
        records.append(ScoreRecord("m", "q1", "dR", "dZZZ", 0.7))  # not in qrels
        curve = labeler_pr_analysis(records, qrels, rel_threshold=2)
        assert curve.num_excluded == 1
        assert curve.num_scored == 2

    def test_no_relevant_rejected(self):
        records, qrels = _records([(0.9, False), (0.5, False)])
        with pytest.raises(ValueError, match="no relevant"):
            labeler_pr_analysis(records, qrels, rel_threshold=2)

    def test_matches_bruteforce_oracle_with_ties(self):
        rng = random.Random(17)
        for _ in range(50):
            n = rng.randint(3, 40)
            items = [(rng.choice([0.1, 0.3, 0.5, 0.7, 0.9]), rng.random() < 0.5) for _ in range(n)]
            if not any(label for _, label in items):
                items[0] = (items[0][0], True)
            records, qrels = _records(items)
            curve = labeler_pr_analysis(records, qrels, rel_threshold=2)
            scored = [(r.score, r.qid, r.unk_docid, qrels.grade(r.qid, r.unk_docid) >= 2) for r in records]
            ap, best_f1 = _pr_oracle(scored, lambda t: (-t[0], t[1], t[2]))
            assert curve.average_precision == pytest.approx(ap, abs=1e-12)
            assert curve.best_f1 == pytest.approx(best_f1, abs=1e-12)


class TestFormatTable:
    def test_alignment_and_na(self):
        rows = [
            {"measure": "SDCG@10", "tau": 1.0, "rho": 1.0, "rbo": 1.0, "t_fnr": 0.0, "t_fpr": None}
        ]
        text = format_comparison_table(rows)
        lines = text.splitlines()
        assert lines[0].startswith("Measure")
        assert "n/a" in lines[2]
        assert "1.000" in lines[2]
