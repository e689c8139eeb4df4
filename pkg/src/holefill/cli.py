"""Command-line pipeline: simulate-pool, label, evaluate, compare, pr-curve.

Every command is deterministic: identical inputs produce byte-identical
output files (fixed key order, canonical record order, atomic writes).
Exit codes: 0 success, 1 runtime/data error, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import labelers, measures, meta, pooling, trec_io
from .config import ConfigError, JobConfig, load_config

SCHEMA_VERSION = 1

__all__ = ["main", "SCHEMA_VERSION"]


def _json_text(obj: object) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _read_lines(path: str) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.readlines()


def _safe_filename(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9@()=.,_-]", "_", name)


def _require_paths(config: JobConfig, keys: Sequence[str]) -> None:
    """Fail-fast existence check for every input the command will touch."""
    missing: list[str] = []
    for key in keys:
        value = getattr(config, key)
        if key == "runs":
            continue
        if value is None:
            missing.append(f"{key} (not set)")
        elif key == "run_dir":
            if not Path(value).is_dir():
                missing.append(f"{key}: {value}")
        elif not Path(value).is_file():
            missing.append(f"{key}: {value}")
    for path in config.runs:
        if not Path(path).is_file():
            missing.append(f"runs: {path}")
    if missing:
        raise ConfigError("missing inputs: " + "; ".join(missing))


def _run_paths(config: JobConfig) -> list[str]:
    paths = list(config.runs)
    if config.run_dir is not None:
        paths.extend(str(p) for p in sorted(Path(config.run_dir).iterdir()) if p.is_file())
    if not paths:
        raise ConfigError("no runs given: set run_dir or runs")
    return paths


def _load_runs(config: JobConfig) -> list[trec_io.Run]:
    runs: list[trec_io.Run] = []
    seen: set[str] = set()
    for path in _run_paths(config):
        run = trec_io.parse_run(_read_lines(path))
        if run.system_id in seen:
            raise ValueError(f"duplicate system id {run.system_id!r} (from {path})")
        seen.add(run.system_id)
        runs.append(run)
    runs.sort(key=lambda r: r.system_id)
    return runs


@dataclass
class _LabelContext:
    pool: pooling.ShallowPool
    holes: pooling.HoleSet
    runs: list[trec_io.Run]
    baseline: trec_io.Run
    labeler: labelers.Labeler
    cache: trec_io.ScoreCache
    cache_path: str | None


def _labeler_input_keys(config: JobConfig) -> list[str]:
    keys = ["qrels", "baseline_run"]
    if config.labeler == "maxrep-bm25":
        keys.append("corpus")
    elif config.labeler == "maxrep-embed":
        keys.append("embeddings")
    elif config.labeler == "oracle" and config.full_qrels is not None:
        keys.append("full_qrels")
    return keys


def _build_label_context(config: JobConfig) -> _LabelContext:
    _require_paths(config, _labeler_input_keys(config))
    if config.run_dir is None and not config.runs:
        raise ConfigError("no runs given: set run_dir or runs")
    if config.labeler.startswith("bridge:"):
        score_path = config.labeler.split(":", 1)[1]
        if not Path(score_path).is_file():
            raise ConfigError(f"missing inputs: bridge score file: {score_path}")

    qrels = trec_io.parse_qrels(_read_lines(config.qrels))
    baseline = trec_io.parse_run(_read_lines(config.baseline_run))
    runs = _load_runs(config)
    pool = pooling.simulate_shallow_pool(baseline, qrels, config.rel_threshold)
    holes = pooling.find_holes(runs, pool, config.hole_depth)

    corpus = None
    embeddings = None
    reference = None
    bridge_scores = None
    if config.labeler == "maxrep-bm25":
        corpus = trec_io.load_corpus(_read_lines(config.corpus), config.corpus_format)
    elif config.labeler == "maxrep-embed":
        embeddings = trec_io.load_embeddings(_read_lines(config.embeddings))
    elif config.labeler == "oracle":
        ref_path = config.full_qrels if config.full_qrels is not None else config.qrels
        reference = trec_io.parse_qrels(_read_lines(ref_path))
    elif config.labeler.startswith("bridge:"):
        score_path = config.labeler.split(":", 1)[1]
        bridge_scores = trec_io.read_bridge_scores(_read_lines(score_path))

    labeler = labelers.make_labeler(
        config.labeler,
        corpus=corpus,
        embeddings=embeddings,
        reference_qrels=reference,
        bridge_scores=bridge_scores,
        k=config.maxrep_k,
    )
    cache_path = config.resolved_cache_path()
    if cache_path is not None and Path(cache_path).is_file():
        cache = trec_io.read_score_cache(_read_lines(cache_path))
    else:
        cache = trec_io.ScoreCache([])
    return _LabelContext(
        pool=pool,
        holes=holes,
        runs=runs,
        baseline=baseline,
        labeler=labeler,
        cache=cache,
        cache_path=cache_path,
    )


def _write_bridge_task_file(
    config: JobConfig, ctx: _LabelContext, missing: list[tuple[str, str]], out_dir: Path
) -> Path:
    """Emit the tasks a bridge must score to close the coverage gap."""
    _require_paths(config, ["corpus", "queries"])
    corpus = trec_io.load_corpus(_read_lines(config.corpus), config.corpus_format)
    queries = trec_io.load_queries(_read_lines(config.queries), config.queries_format)
    full = trec_io.Corpus(texts=corpus.texts, queries=queries)
    tasks = labelers.bridge_task_records(ctx.pool, missing, full)
    task_path = out_dir / "bridge_tasks.jsonl"
    _write_atomic(task_path, "".join(trec_io.write_bridge_tasks(tasks)))
    return task_path


def _resolve_records(
    config: JobConfig, ctx: _LabelContext
) -> tuple[list[trec_io.ScoreRecord], int]:
    """Score all holes, reusing the cache; returns (records, cache_hits)."""
    hits = sum(
        1
        for qid, docid in ctx.holes.sorted()
        if ctx.cache.get(ctx.labeler.labeler_id, qid, docid) is not None
    )
    records = labelers.label(ctx.labeler, ctx.pool, ctx.holes, ctx.cache)
    return records, hits


def _records_for_tables(
    config: JobConfig, ctx: _LabelContext, records: list[trec_io.ScoreRecord]
) -> list[trec_io.ScoreRecord]:
    if config.pin_examined_nonrelevant:
        return labelers.pin_examined_nonrelevant(records, ctx.baseline, ctx.pool)
    return records


def _parse_measures(config: JobConfig) -> list[measures.MeasureSpec]:
    try:
        specs = [measures.parse_measure(m) for m in config.measures]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not specs:
        raise ConfigError("no measures configured")
    return specs


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------


def cmd_simulate_pool(config: JobConfig) -> int:
    _require_paths(config, ["qrels", "baseline_run"])
    qrels = trec_io.parse_qrels(_read_lines(config.qrels))
    baseline = trec_io.parse_run(_read_lines(config.baseline_run))
    pool = pooling.simulate_shallow_pool(baseline, qrels, config.rel_threshold)
    out_dir = Path(config.output_dir)
    pool_path = out_dir / "pool.qrels"
    sidecar_path = out_dir / "pool_examined.json"
    _write_atomic(pool_path, "".join(pooling.pool_qrels_lines(pool)))
    _write_atomic(sidecar_path, pooling.pool_sidecar_json(pool))
    summary = {
        "command": "simulate-pool",
        "schema_version": SCHEMA_VERSION,
        "queries_kept": len(pool.entries),
        "queries_dropped": list(pool.dropped),
        "queries_unjudged": list(pool.unjudged),
        "mean_examined": pool.mean_examined(),
        "pool_file": str(pool_path),
        "examined_file": str(sidecar_path),
        "config": config.as_dict(),
    }
    print(_json_text(summary), end="")
    return 0


def cmd_label(config: JobConfig) -> int:
    ctx = _build_label_context(config)
    out_dir = Path(config.output_dir)
    try:
        records, hits = _resolve_records(config, ctx)
    except labelers.MissingScoresError as exc:
        task_path = _write_bridge_task_file(config, ctx, exc.missing, out_dir)
        print(f"{exc}\nwrote {len(exc.missing)} tasks to {task_path}", file=sys.stderr)
        return 2
    cache_path = ctx.cache_path
    if cache_path is None:
        cache_path = str(out_dir / "cache.jsonl")
    merged = trec_io.ScoreCache(list(ctx.cache.index.values()) + records)
    _write_atomic(Path(cache_path), "".join(trec_io.write_score_cache(merged.records)))
    summary = {
        "command": "label",
        "schema_version": SCHEMA_VERSION,
        "labeler": ctx.labeler.labeler_id,
        "holes": len(ctx.holes),
        "cache_hits": hits,
        "computed": len(records) - hits,
        "cache_file": cache_path,
        "config": config.as_dict(),
    }
    print(_json_text(summary), end="")
    return 0


def cmd_evaluate(config: JobConfig) -> int:
    specs = _parse_measures(config)
    ctx = _build_label_context(config)
    out_dir = Path(config.output_dir)
    try:
        records, _hits = _resolve_records(config, ctx)
    except labelers.MissingScoresError as exc:
        task_path = _write_bridge_task_file(config, ctx, exc.missing, out_dir)
        print(f"{exc}\nwrote {len(exc.missing)} tasks to {task_path}", file=sys.stderr)
        return 2
    records = _records_for_tables(config, ctx, records)
    table = labelers.build_gain_table(ctx.pool, records, ctx.labeler.labeler_id)
    query_ids = ctx.pool.query_ids
    mean_summary: dict[str, dict[str, float]] = {}
    for spec in specs:
        for run in ctx.runs:
            result = measures.evaluate(run, table, spec, query_ids)
            payload = {
                "schema_version": SCHEMA_VERSION,
                "measure": result.measure_id,
                "system_id": run.system_id,
                "labeler": ctx.labeler.labeler_id,
                "mean": result.mean,
                "per_query": dict(sorted(result.per_query.items())),
                "config": config.as_dict(),
            }
            path = out_dir / "eval" / _safe_filename(spec.measure_id) / (
                _safe_filename(run.system_id) + ".json"
            )
            _write_atomic(path, _json_text(payload))
            mean_summary.setdefault(spec.measure_id, {})[run.system_id] = result.mean
    summary = {
        "command": "evaluate",
        "schema_version": SCHEMA_VERSION,
        "labeler": ctx.labeler.labeler_id,
        "queries": len(query_ids),
        "means": mean_summary,
        "output_dir": str(out_dir / "eval"),
        "config": config.as_dict(),
    }
    print(_json_text(summary), end="")
    return 0


def cmd_compare(config: JobConfig) -> int:
    specs = _parse_measures(config)
    _require_paths(config, ["full_qrels"])
    ctx = _build_label_context(config)
    out_dir = Path(config.output_dir)
    try:
        records, _hits = _resolve_records(config, ctx)
    except labelers.MissingScoresError as exc:
        task_path = _write_bridge_task_file(config, ctx, exc.missing, out_dir)
        print(f"{exc}\nwrote {len(exc.missing)} tasks to {task_path}", file=sys.stderr)
        return 2
    records = _records_for_tables(config, ctx, records)
    candidate_table = labelers.build_gain_table(ctx.pool, records, ctx.labeler.labeler_id)
    full_qrels = trec_io.parse_qrels(_read_lines(config.full_qrels))
    query_ids = ctx.pool.query_ids
    full_table = labelers.gain_table_from_qrels(full_qrels, query_ids)

    rows: list[dict[str, object]] = []
    detail: dict[str, object] = {}
    for spec in specs:
        cand_scores, cand_ranking = meta.rank_systems(ctx.runs, candidate_table, spec, query_ids)
        full_scores, full_ranking = meta.rank_systems(ctx.runs, full_table, spec, query_ids)
        systems = sorted(cand_scores.vectors)
        cand_means = [cand_scores.mean(s) for s in systems]
        full_means = [full_scores.mean(s) for s in systems]
        tau = meta.kendall_tau(cand_means, full_means)
        rho = meta.spearman_rho(cand_means, full_means)
        overlap = meta.rbo(cand_ranking, full_ranking, config.rbo_p)
        rates = meta.t_error_rates(
            cand_scores,
            full_scores,
            alpha=config.alpha,
            correction=config.correction,
            top_from_full=config.top_from_full,
        )
        rows.append(
            {
                "measure": spec.measure_id,
                "tau": tau,
                "rho": rho,
                "rbo": overlap,
                "t_fnr": rates.t_fnr,
                "t_fpr": rates.t_fpr,
            }
        )
        detail[spec.measure_id] = {
            "tau": tau,
            "rho": rho,
            "rbo": overlap,
            "t_fnr": rates.t_fnr,
            "t_fpr": rates.t_fpr,
            "t_counts": {
                "true_positives": rates.true_positives,
                "false_positives": rates.false_positives,
                "true_negatives": rates.true_negatives,
                "false_negatives": rates.false_negatives,
            },
            "top_system": rates.top_system,
            "candidate_ranking": cand_ranking,
            "full_ranking": full_ranking,
            "candidate_means": {s: m for s, m in zip(systems, cand_means)},
            "full_means": {s: m for s, m in zip(systems, full_means)},
        }
    report = {
        "command": "compare",
        "schema_version": SCHEMA_VERSION,
        "labeler": ctx.labeler.labeler_id,
        "queries": len(query_ids),
        "measures": detail,
        "config": config.as_dict(),
    }
    report_path = out_dir / "compare_report.json"
    table_path = out_dir / "compare_table.txt"
    _write_atomic(report_path, _json_text(report))
    _write_atomic(table_path, meta.format_comparison_table(rows))
    summary = {
        "command": "compare",
        "schema_version": SCHEMA_VERSION,
        "report_file": str(report_path),
        "table_file": str(table_path),
        "measures": {r["measure"]: {k: r[k] for k in ("tau", "rho", "rbo", "t_fnr", "t_fpr")} for r in rows},
        "config": config.as_dict(),
    }
    print(_json_text(summary), end="")
    return 0


def cmd_pr_curve(config: JobConfig) -> int:
    _require_paths(config, ["full_qrels"])
    ctx = _build_label_context(config)
    out_dir = Path(config.output_dir)
    try:
        records, _hits = _resolve_records(config, ctx)
    except labelers.MissingScoresError as exc:
        task_path = _write_bridge_task_file(config, ctx, exc.missing, out_dir)
        print(f"{exc}\nwrote {len(exc.missing)} tasks to {task_path}", file=sys.stderr)
        return 2
    full_qrels = trec_io.parse_qrels(_read_lines(config.full_qrels))
    curve = meta.labeler_pr_analysis(records, full_qrels, config.rel_threshold)
    csv_lines = ["threshold,precision,recall\n"]
    for threshold, precision, recall in curve.points:
        csv_lines.append(f"{threshold!r},{precision!r},{recall!r}\n")
    csv_path = out_dir / "pr_curve.csv"
    summary_path = out_dir / "pr_summary.json"
    payload = {
        "schema_version": SCHEMA_VERSION,
        "labeler": ctx.labeler.labeler_id,
        "average_precision": curve.average_precision,
        "best_f1": curve.best_f1,
        "num_scored": curve.num_scored,
        "num_relevant": curve.num_relevant,
        "num_excluded": curve.num_excluded,
        "config": config.as_dict(),
    }
    _write_atomic(csv_path, "".join(csv_lines))
    _write_atomic(summary_path, _json_text(payload))
    summary = {
        "command": "pr-curve",
        "schema_version": SCHEMA_VERSION,
        "curve_file": str(csv_path),
        "summary_file": str(summary_path),
        "average_precision": curve.average_precision,
        "best_f1": curve.best_f1,
        "num_excluded": curve.num_excluded,
        "config": config.as_dict(),
    }
    print(_json_text(summary), end="")
    return 0


# ----------------------------------------------------------------------
# argument parsing
# ----------------------------------------------------------------------

_OVERRIDE_KEYS = [
    "corpus",
    "corpus_format",
    "queries",
    "queries_format",
    "embeddings",
    "qrels",
    "full_qrels",
    "baseline_run",
    "run_dir",
    "runs",
    "cache",
    "labeler",
    "maxrep_k",
    "pin_examined_nonrelevant",
    "rel_threshold",
    "hole_depth",
    "measures",
    "alpha",
    "rbo_p",
    "correction",
    "top_from_full",
    "output_dir",
]

_COMMANDS = {
    "simulate-pool": cmd_simulate_pool,
    "label": cmd_label,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
    "pr-curve": cmd_pr_curve,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="holefill",
        description="Fill judgment holes with one-shot labelers and meta-evaluate system rankings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file; flags override its keys")
        for key in _OVERRIDE_KEYS:
            p.add_argument("--" + key.replace("_", "-"), dest=key, default=None)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {key: getattr(args, key) for key in _OVERRIDE_KEYS}
    try:
        config = load_config(args.config, overrides)
        return _COMMANDS[args.command](config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (trec_io.ParseError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
