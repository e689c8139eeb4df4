"""JSON-lines task/score protocol.

Input: one `{"id","query","passage_a","passage_b"}` object per line.
Output: one `{"id","score"}` per task, in input order, terminated by a
footer `{"done": true, "count": N}`. The footer is the crash detector: a
consumer must reject any file that lacks it or whose count disagrees.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

__all__ = ["ProtocolError", "ScoringTask", "read_tasks", "score_lines", "read_scores", "run_bridge"]


class ProtocolError(ValueError):
    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class ScoringTask:
    id: str
    query: str
    passage_a: str  # the known relevant passage
    passage_b: str  # the passage whose relevance is unknown


def read_tasks(lines: Iterable[str]) -> list[ScoringTask]:
    """Parse and validate a task file: unique ids, all texts non-empty."""
    tasks: list[ScoringTask] = []
    seen: set[str] = set()
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"bad JSON: {exc}", line_no) from None
        missing = {"id", "query", "passage_a", "passage_b"} - obj.keys()
        if missing:
            raise ProtocolError(f"missing fields {sorted(missing)}", line_no)
        task = ScoringTask(
            id=str(obj["id"]),
            query=str(obj["query"]),
            passage_a=str(obj["passage_a"]),
            passage_b=str(obj["passage_b"]),
        )
        if task.id in seen:
            raise ProtocolError(f"duplicate task id {task.id!r}", line_no)
        if not (task.query and task.passage_a and task.passage_b):
            raise ProtocolError(f"empty text in task {task.id!r}", line_no)
        seen.add(task.id)
        tasks.append(task)
    return tasks


def score_lines(ids: Sequence[str], scores: Sequence[float]) -> Iterator[str]:
    """Score records in input order plus the trailing footer."""
    if len(ids) != len(scores):
        raise ValueError(f"{len(ids)} ids vs {len(scores)} scores")
    for task_id, score in zip(ids, scores):
        if not (0.0 <= score <= 1.0):
            raise ValueError(f"score {score} for task {task_id!r} outside [0,1]")
        yield json.dumps({"id": task_id, "score": score}, sort_keys=True) + "\n"
    yield json.dumps({"count": len(ids), "done": True}, sort_keys=True) + "\n"


def read_scores(lines: Iterable[str]) -> dict[str, float]:
    """Read a score file back, enforcing the footer contract."""
    scores: dict[str, float] = {}
    footer = None
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        if footer is not None:
            raise ProtocolError("records found after footer", line_no)
        obj = json.loads(line)
        if "done" in obj:
            footer = obj
            continue
        scores[str(obj["id"])] = float(obj["score"])
    if footer is None:
        raise ProtocolError("missing footer record; output may be truncated")
    if footer.get("done") is not True or footer.get("count") != len(scores):
        raise ProtocolError(
            f"footer mismatch: says count={footer.get('count')}, file has {len(scores)} scores"
        )
    return scores


def run_bridge(task_path: str, output_path: str, scorer, batch_size: int = 8) -> int:
    """Score a task file and stream results to `output_path`.

    Scores are written batch by batch and the footer only at the end, so a
    crash leaves a detectably incomplete file. Returns the task count.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    with open(task_path, "r", encoding="utf-8") as fh:
        tasks = read_tasks(fh)
    with open(output_path, "w", encoding="utf-8", newline="") as out:
        done = 0
        for start in range(0, len(tasks), batch_size):
            batch = tasks[start : start + batch_size]
            scores = scorer.score(batch, batch_size=batch_size)
            if len(scores) != len(batch):
                raise ValueError(f"scorer returned {len(scores)} scores for {len(batch)} tasks")
            for task, score in zip(batch, scores):
                if not (0.0 <= score <= 1.0):
                    raise ValueError(f"score {score} for task {task.id!r} outside [0,1]")
                out.write(json.dumps({"id": task.id, "score": score}, sort_keys=True) + "\n")
            out.flush()
            done += len(batch)
        out.write(json.dumps({"count": done, "done": True}, sort_keys=True) + "\n")
    return len(tasks)
