"""Hole filling for shallow relevance judgments.

Estimate the relevance of unjudged documents from a single known relevant
document per query, plug the estimates into recall-agnostic evaluation
measures, and check how well the resulting system rankings and significance
tests track the ones computed from full judgments.
"""

from .labelers import (
    GainTable,
    Labeler,
    build_gain_table,
    gain_table_from_qrels,
    label,
    make_labeler,
)
from .measures import EvalResult, MeasureSpec, evaluate, parse_measure, rbp, sdcg, weighted_precision
from .meta import (
    PRCurve,
    SignificanceReport,
    SystemScores,
    TErrorRates,
    kendall_tau,
    labeler_pr_analysis,
    paired_ttest,
    rank_systems,
    rbo,
    significance_report,
    spearman_rho,
    t_error_rates,
)
from .pooling import HoleSet, ShallowPool, find_holes, judged_at_k, simulate_shallow_pool
from .trec_io import (
    Corpus,
    EmbeddingStore,
    ParseError,
    Qrels,
    Run,
    ScoreCache,
    ScoreRecord,
    load_corpus,
    load_embeddings,
    load_queries,
    parse_qrels,
    parse_run,
    read_score_cache,
    serialize_qrels,
    serialize_run,
    write_score_cache,
)

__version__ = "0.1.0"
