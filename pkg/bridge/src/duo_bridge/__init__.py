"""Pairwise relevance scoring behind a JSON-lines task/score protocol.

Given a query, one known relevant passage, and one unknown passage, each
scorer estimates the probability that the unknown passage is as relevant as
the known one. The consumer never touches model runtime concerns: it writes
a task file, invokes `duo-bridge run`, and reads back a score file.
"""

from .models import BridgeError, Seq2SeqScorer, StubScorer, load_scorer
from .prompts import DUOPROMPT_TEMPLATE, DUOT5_TEMPLATE, render_duoprompt, render_duot5
from .protocol import ProtocolError, ScoringTask, read_scores, read_tasks, run_bridge, score_lines

__version__ = "0.1.0"
