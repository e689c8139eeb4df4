"""Meta-evaluation: compare an evaluation against a reference evaluation.

Given per-system, per-query scores under candidate labels (e.g. filled
holes) and under full human labels, this module answers: do the two agree
on the ranking of systems (Kendall tau-b, Spearman rho, rank-biased
overlap), and do paired t-tests against the top system reach the same
conclusions (t-FPR / t-FNR with the full labels as ground truth)?

It also grades labelers directly as binary classifiers against held-out
judgments (precision-recall sweep, average precision, best F1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .labelers import GainTable
from .measures import MeasureSpec, evaluate
from .stats import student_t_two_sided_p
from .trec_io import Qrels, Run, ScoreRecord

__all__ = [
    "kendall_tau",
    "spearman_rho",
    "rbo",
    "paired_ttest",
    "SystemScores",
    "rank_systems",
    "PairTest",
    "SignificanceReport",
    "significance_report",
    "TErrorRates",
    "t_error_rates",
    "PRCurve",
    "labeler_pr_analysis",
    "format_comparison_table",
]


def kendall_tau(x: Sequence[float], y: Sequence[float]) -> float:
    """Kendall's tau-b: (C - D) / sqrt((C + D + Tx) (C + D + Ty)).

    C/D count concordant/discordant pairs; Tx/Ty count pairs tied only in
    x/only in y. Undefined (error) when either vector is constant.
    """
    n = len(x)
    if n != len(y):
        raise ValueError(f"length mismatch: {n} vs {len(y)}")
    if n < 2:
        raise ValueError("need at least 2 observations")
    if len(set(x)) == 1 or len(set(y)) == 1:
        raise ValueError("tau undefined: all values tied in one vector")
    c = d = tx = ty = 0
    for i in range(n - 1):
        xi = x[i]
        yi = y[i]
        for j in range(i + 1, n):
            dx = xi - x[j]
            dy = yi - y[j]
            if dx == 0:
                if dy != 0:
                    tx += 1
            elif dy == 0:
                ty += 1
            elif (dx > 0) == (dy > 0):
                c += 1
            else:
                d += 1
    return (c - d) / math.sqrt((c + d + tx) * (c + d + ty))


def _average_ranks(values: Sequence[float]) -> list[float]:
    """1-based ranks with ties assigned the mean of their rank range."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman's rho: Pearson correlation of average-rank transforms."""
    n = len(x)
    if n != len(y):
        raise ValueError(f"length mismatch: {n} vs {len(y)}")
    if n < 2:
        raise ValueError("need at least 2 observations")
    rx = _average_ranks(x)
    ry = _average_ranks(y)
    mx = sum(rx) / n
    my = sum(ry) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    sxx = sum((a - mx) ** 2 for a in rx)
    syy = sum((b - my) ** 2 for b in ry)
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("rho undefined: zero variance in ranks")
    return sxy / math.sqrt(sxx * syy)


def rbo(a: Sequence[str], b: Sequence[str], p: float = 0.9) -> float:
    """Extrapolated rank-biased overlap of two complete rankings.

    Both lists must be permutations of the same item set; with that, the
    extrapolated form (X_l/l) p^l + ((1-p)/p) sum_d (X_d/d) p^d is exact.

    Computed as 1 minus the weighted disagreement (the weights sum to 1),
    so identical rankings score exactly 1.0 in floating point.
    """
    if not (0.0 < p < 1.0):
        raise ValueError(f"p must be in (0,1), got {p}")
    l = len(a)
    if l != len(b):
        raise ValueError(f"length mismatch: {l} vs {len(b)}")
    if len(set(a)) != l or len(set(b)) != l:
        raise ValueError("rankings contain duplicates")
    if set(a) != set(b):
        raise ValueError("rankings are over different item sets")
    if l == 0:
        raise ValueError("empty rankings")
    seen_a: set[str] = set()
    seen_b: set[str] = set()
    overlap = 0
    deficit = 0.0
    w = 1.0 - p  # (1-p) p^(d-1), the weight the agreement at depth d carries
    pd = 1.0  # p^d
    for d in range(1, l + 1):
        ia, ib = a[d - 1], b[d - 1]
        if ia == ib:
            overlap += 1
        else:
            # No duplicates, so an equal-rank match never reappears later.
            if ia in seen_b:
                overlap += 1
            if ib in seen_a:
                overlap += 1
            seen_a.add(ia)
            seen_b.add(ib)
        pd *= p
        deficit += w * (1.0 - overlap / d)
        w *= p
    deficit += pd * (1.0 - overlap / l)
    return 1.0 - deficit


def paired_ttest(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Paired t-test on a - b, two-sided p from Student's t with n-1 df.

    Zero-variance differences make t undefined; identical systems must never
    be declared different, so that case returns (0.0, 1.0).
    """
    n = len(a)
    if n != len(b):
        raise ValueError(f"length mismatch: {n} vs {len(b)}")
    if n < 2:
        raise ValueError("need at least 2 paired observations")
    diffs = [ai - bi for ai, bi in zip(a, b)]
    mean = sum(diffs) / n
    var = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    if var == 0.0:
        return (0.0, 1.0)
    t = mean / math.sqrt(var / n)
    return (t, student_t_two_sided_p(t, n - 1))


@dataclass(frozen=True)
class SystemScores:
    """Per-system per-query score vectors over one shared ordered query list."""

    query_ids: tuple[str, ...]
    vectors: Mapping[str, tuple[float, ...]]

    def mean(self, system_id: str) -> float:
        vec = self.vectors[system_id]
        return sum(vec) / len(vec)

    def means(self) -> dict[str, float]:
        return {s: self.mean(s) for s in self.vectors}

    def ranking(self) -> list[str]:
        """Systems by mean descending, ties by system_id ascending."""
        return sorted(self.vectors, key=lambda s: (-self.mean(s), s))

    def top_system(self) -> str:
        return self.ranking()[0]


def rank_systems(
    runs: Iterable[Run], table: GainTable, measure: MeasureSpec, query_ids: Iterable[str]
) -> tuple[SystemScores, list[str]]:
    """Evaluate every run over the pool's query set and order the systems."""
    qids = tuple(sorted(query_ids))
    vectors: dict[str, tuple[float, ...]] = {}
    for run in runs:
        if run.system_id in vectors:
            raise ValueError(f"duplicate system id {run.system_id!r}")
        result = evaluate(run, table, measure, qids)
        vectors[run.system_id] = tuple(result.per_query[q] for q in qids)
    if not vectors:
        raise ValueError("no runs given")
    scores = SystemScores(query_ids=qids, vectors=vectors)
    return scores, scores.ranking()


@dataclass(frozen=True)
class PairTest:
    t: float
    p: float
    significant: bool


@dataclass(frozen=True)
class SignificanceReport:
    """Top system vs. every other system, Bonferroni-corrected."""

    top_system: str
    alpha: float
    m: int  # number of pairwise comparisons (S - 1)
    comparisons: Mapping[str, PairTest]


def _pair_significant(p: float, alpha: float, m: int, correction: str) -> bool:
    threshold = alpha / m if correction == "bonferroni" else alpha
    return p < threshold


def significance_report(
    scores: SystemScores,
    alpha: float = 0.05,
    correction: str = "bonferroni",
    top_system: str | None = None,
) -> SignificanceReport:
    """Paired t-tests of the top system against each other system.

    Significance requires raw p < alpha / m with m = S - 1 comparisons
    (or raw alpha when correction is "none").
    """
    if correction not in ("bonferroni", "none"):
        raise ValueError(f"unknown correction {correction!r}")
    systems = sorted(scores.vectors)
    if len(systems) < 2:
        raise ValueError("need at least 2 systems")
    top = top_system if top_system is not None else scores.top_system()
    if top not in scores.vectors:
        raise ValueError(f"unknown top system {top!r}")
    m = len(systems) - 1
    comparisons: dict[str, PairTest] = {}
    for other in systems:
        if other == top:
            continue
        t, p = paired_ttest(scores.vectors[top], scores.vectors[other])
        comparisons[other] = PairTest(t=t, p=p, significant=_pair_significant(p, alpha, m, correction))
    return SignificanceReport(top_system=top, alpha=alpha, m=m, comparisons=comparisons)


@dataclass(frozen=True)
class TErrorRates:
    """Disagreement rates of candidate-label t-tests vs. full-label t-tests.

    Rates with an empty denominator are None ("absent"), never 0.
    """

    t_fpr: float | None
    t_fnr: float | None
    false_positives: int
    true_negatives: int
    false_negatives: int
    true_positives: int
    top_system: str


def t_error_rates(
    candidate: SystemScores,
    full: SystemScores,
    alpha: float = 0.05,
    correction: str = "bonferroni",
    top_from_full: bool = False,
) -> TErrorRates:
    """Compare significance decisions pair by pair, full labels as truth.

    The top system is identified under the candidate evaluation (the
    operational setting: only candidate labels exist when the test is run);
    `top_from_full` flips that reading. The same top-vs-other pairs are then
    tested under both score sets.
    """
    if set(candidate.vectors) != set(full.vectors):
        raise ValueError("candidate and full evaluations cover different systems")
    if candidate.query_ids != full.query_ids:
        raise ValueError("candidate and full evaluations cover different query sets")
    top = full.top_system() if top_from_full else candidate.top_system()
    cand_report = significance_report(candidate, alpha, correction, top_system=top)
    full_report = significance_report(full, alpha, correction, top_system=top)
    fp = tn = fn = tp = 0
    for other, cand_test in cand_report.comparisons.items():
        truth = full_report.comparisons[other].significant
        if cand_test.significant and truth:
            tp += 1
        elif cand_test.significant and not truth:
            fp += 1
        elif not cand_test.significant and truth:
            fn += 1
        else:
            tn += 1
    t_fpr = fp / (fp + tn) if (fp + tn) > 0 else None
    t_fnr = fn / (fn + tp) if (fn + tp) > 0 else None
    return TErrorRates(
        t_fpr=t_fpr,
        t_fnr=t_fnr,
        false_positives=fp,
        true_negatives=tn,
        false_negatives=fn,
        true_positives=tp,
        top_system=top,
    )


@dataclass(frozen=True)
class PRCurve:
    """Precision-recall sweep of labeler scores against binary judgments."""

    points: tuple[tuple[float, float, float], ...]  # (threshold, precision, recall)
    average_precision: float
    best_f1: float
    num_scored: int
    num_relevant: int
    num_excluded: int  # scored pairs with no judgment in the reference


def labeler_pr_analysis(
    records: Iterable[ScoreRecord], reference: Qrels, rel_threshold: int = 2
) -> PRCurve:
    """Grade labeler scores as a binary classifier against reference qrels.

    Pairs without a reference judgment are excluded (and counted). Records
    are ordered by score descending with (qid, docid) tie-breaking; average
    precision is the rank-based mean of precision at each relevant item, and
    the threshold sweep visits every distinct score value.
    """
    judged: list[tuple[float, str, str, bool]] = []
    excluded = 0
    for rec in records:
        if reference.has(rec.qid, rec.unk_docid):
            label = reference.grade(rec.qid, rec.unk_docid) >= rel_threshold
            judged.append((rec.score, rec.qid, rec.unk_docid, label))
        else:
            excluded += 1
    judged.sort(key=lambda t: (-t[0], t[1], t[2]))
    n_rel = sum(1 for item in judged if item[3])
    if n_rel == 0:
        raise ValueError("no relevant items among the judged scored pairs")

    ap_sum = 0.0
    tp = 0
    for rank, (_score, _qid, _docid, label) in enumerate(judged, start=1):
        if label:
            tp += 1
            ap_sum += tp / rank
    average_precision = ap_sum / n_rel

    points: list[tuple[float, float, float]] = []
    best_f1 = 0.0
    tp = 0
    i = 0
    n = len(judged)
    while i < n:
        threshold = judged[i][0]
        # advance through the whole tied-score block
        while i < n and judged[i][0] == threshold:
            if judged[i][3]:
                tp += 1
            i += 1
        k = i  # predictions at this threshold: everything with score >= it
        fp = k - tp
        fn = n_rel - tp
        precision = tp / k
        recall = tp / n_rel
        # integer-count form: exact when the ratio is representable
        f1 = 2 * tp / (2 * tp + fp + fn) if tp > 0 else 0.0
        points.append((threshold, precision, recall))
        if f1 > best_f1:
            best_f1 = f1
    return PRCurve(
        points=tuple(points),
        average_precision=average_precision,
        best_f1=best_f1,
        num_scored=n,
        num_relevant=n_rel,
        num_excluded=excluded,
    )


def format_comparison_table(rows: list[dict[str, object]]) -> str:
    """Aligned text table with one row per measure.

    Expects dicts with keys measure, tau, rho, rbo, t_fnr, t_fpr; None
    renders as n/a (a rate whose denominator was empty).
    """
    headers = ["Measure", "tau", "rho", "RBO", "t-FNR", "t-FPR"]

    def fmt(value: object) -> str:
        if value is None:
            return "n/a"
        if isinstance(value, float):
            return f"{value:.3f}"
        return str(value)

    table = [headers] + [
        [fmt(r["measure"]), fmt(r["tau"]), fmt(r["rho"]), fmt(r["rbo"]), fmt(r["t_fnr"]), fmt(r["t_fpr"])]
        for r in rows
    ]
    widths = [max(len(row[c]) for row in table) for c in range(len(headers))]
    lines = []
    for idx, row in enumerate(table):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if idx == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
