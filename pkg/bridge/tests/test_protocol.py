import json

import pytest

from duo_bridge.models import StubScorer
from duo_bridge.protocol import (
    ProtocolError,
    ScoringTask,
    read_scores,
    read_tasks,
    run_bridge,
    score_lines,
)


def _write_tasks(path, tasks):
    with open(path, "w", encoding="utf-8") as fh:
        for task in tasks:
            fh.write(
                json.dumps(
                    {
                        "id": task.id,
                        "query": task.query,
                        "passage_a": task.passage_a,
                        "passage_b": task.passage_b,
                    }
                )
                + "\n"
            )


class TestReadTasks:
    def test_valid_file(self, tmp_path):
        path = tmp_path / "tasks.jsonl"
        tasks = [ScoringTask("a", "q", "pa", "pb"), ScoringTask("b", "q2", "pa2", "pb2")]
        _write_tasks(path, tasks)
        with open(path) as fh:
            assert read_tasks(fh) == tasks

    def test_duplicate_id_rejected(self):
        line = '{"id": "a", "query": "q", "passage_a": "x", "passage_b": "y"}\n'
        with pytest.raises(ProtocolError, match="duplicate"):
            read_tasks([line, line])

    def test_empty_text_rejected(self):
        line = '{"id": "a", "query": "", "passage_a": "x", "passage_b": "y"}\n'
        with pytest.raises(ProtocolError, match="empty text"):
            read_tasks([line])

    def test_missing_field_rejected(self):
        with pytest.raises(ProtocolError, match="missing fields"):
            read_tasks(['{"id": "a", "query": "q"}\n'])


class TestScoreLines:
    def test_footer_count(self):
        lines = list(score_lines(["a", "b", "c"], [0.1, 0.2, 0.3]))
        assert len(lines) == 4
        footer = json.loads(lines[-1])
        assert footer == {"count": 3, "done": True}

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError, match="outside"):
            list(score_lines(["a"], [1.5]))

    def test_read_back(self):
        text = "".join(score_lines(["a", "b"], [0.25, 0.75]))
        assert read_scores(text.splitlines()) == {"a": 0.25, "b": 0.75}

    def test_missing_footer_rejected(self):
        text = "".join(score_lines(["a"], [0.5]))
        truncated = text.splitlines()[:-1]
        with pytest.raises(ProtocolError, match="footer"):
            read_scores(truncated)


class TestRunBridge:
    def test_three_tasks_three_lines_plus_footer(self, tmp_path):
        task_path = tmp_path / "tasks.jsonl"
        out_path = tmp_path / "scores.jsonl"
        _write_tasks(
            task_path,
            [ScoringTask(f"t{i}", "q", "pa", "pb") for i in range(3)],
        )
        assert run_bridge(str(task_path), str(out_path), StubScorer(), batch_size=2) == 3
        lines = out_path.read_text().splitlines()
        assert len(lines) == 4
        assert json.loads(lines[-1]) == {"count": 3, "done": True}
        assert [json.loads(l)["id"] for l in lines[:-1]] == ["t0", "t1", "t2"]

    def test_empty_task_file_footer_only(self, tmp_path):
        task_path = tmp_path / "tasks.jsonl"
        out_path = tmp_path / "scores.jsonl"
        task_path.write_text("")
        assert run_bridge(str(task_path), str(out_path), StubScorer()) == 0
        lines = out_path.read_text().splitlines()
        assert len(lines) == 1
        assert json.loads(lines[0]) == {"count": 0, "done": True}

    def test_output_order_matches_input_order(self, tmp_path):
        task_path = tmp_path / "tasks.jsonl"
        out_path = tmp_path / "scores.jsonl"
        ids = [f"x{i:02d}" for i in (5, 1, 9, 3, 7)]
        _write_tasks(task_path, [ScoringTask(i, "q", "a", "b") for i in ids])
        run_bridge(str(task_path), str(out_path), StubScorer(), batch_size=2)
        got = [json.loads(l)["id"] for l in out_path.read_text().splitlines()[:-1]]
        assert got == ids

    def test_stub_round_trip_bit_reproducible(self, tmp_path):
        task_path = tmp_path / "tasks.jsonl"
        _write_tasks(task_path, [ScoringTask(f"t{i}", "q", "a", "b") for i in range(5)])
        out1 = tmp_path / "scores1.jsonl"
        out2 = tmp_path / "scores2.jsonl"
        run_bridge(str(task_path), str(out1), StubScorer(), batch_size=3)
        run_bridge(str(task_path), str(out2), StubScorer(), batch_size=3)
        assert out1.read_bytes() == out2.read_bytes()

    def test_equal_logit_stub_emits_exactly_half(self, tmp_path):
        task_path = tmp_path / "tasks.jsonl"
        out_path = tmp_path / "scores.jsonl"
        _write_tasks(task_path, [ScoringTask(f"t{i}", "q", "a", "b") for i in range(4)])
        run_bridge(str(task_path), str(out_path), StubScorer(0.0))
        for line in out_path.read_text().splitlines()[:-1]:
            assert json.loads(line)["score"] == 0.5
