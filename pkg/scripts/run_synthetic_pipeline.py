#!/usr/bin/env python3
"""End-to-end demo on a synthetic track: how well does each labeler's
evaluation agree with the full-judgment evaluation?

Generates a track, simulates the shallow pool, fills holes with each
labeler, and prints a comparison table (tau / rho / RBO / t-error rates)
per measure, plus each labeler's PR quality against the full judgments.
"""

import argparse

from holefill import labelers, measures, meta, pooling, synthetic


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--queries", type=int, default=20)
    parser.add_argument("--docs", type=int, default=200)
    parser.add_argument("--systems", type=int, default=10)
    parser.add_argument("--depth", type=int, default=10)
    parser.add_argument("--neighbors", type=int, default=128)
    args = parser.parse_args()

    track = synthetic.make_track(
        seed=args.seed, n_queries=args.queries, n_docs=args.docs, n_systems=args.systems
    )
    pool = pooling.simulate_shallow_pool(track.baseline, track.qrels, rel_threshold=2)
    holes = pooling.find_holes(track.runs, pool, depth=args.depth)
    print(
        f"pool: {len(pool.entries)} queries (mean examined {pool.mean_examined():.2f}), "
        f"{len(holes)} holes at depth {args.depth}"
    )

    named_labelers = {
        "zero": labelers.ZeroLabeler(),
        "maxrep-bm25": labelers.MaxRepBM25Labeler(track.corpus, k=args.neighbors),
        "maxrep-embed": labelers.MaxRepEmbedLabeler(track.embeddings, k=args.neighbors),
        "oracle": labelers.OracleLabeler(track.qrels),
    }
    full_table = labelers.gain_table_from_qrels(track.qrels, pool.query_ids)
    specs = [measures.parse_measure(m) for m in ("SDCG@10", "WP@10", "RBP(p=0.8)")]

    for name, labeler in named_labelers.items():
        records = labelers.label(labeler, pool, holes)
        table = labelers.build_gain_table(pool, records, labeler.labeler_id)
        rows = []
        for spec in specs:
            cand_scores, cand_ranking = meta.rank_systems(track.runs, table, spec, pool.query_ids)
            full_scores, full_ranking = meta.rank_systems(track.runs, full_table, spec, pool.query_ids)
            systems = sorted(cand_scores.vectors)
            x = [cand_scores.mean(s) for s in systems]
            y = [full_scores.mean(s) for s in systems]
            rates = meta.t_error_rates(cand_scores, full_scores)
            rows.append(
                {
                    "measure": spec.measure_id,
                    "tau": meta.kendall_tau(x, y),
                    "rho": meta.spearman_rho(x, y),
                    "rbo": meta.rbo(cand_ranking, full_ranking, 0.9),
                    "t_fnr": rates.t_fnr,
                    "t_fpr": rates.t_fpr,
                }
            )
        print(f"\n=== labeler: {name} ===")
        print(meta.format_comparison_table(rows), end="")
        if name != "zero":
            curve = meta.labeler_pr_analysis(records, track.qrels, rel_threshold=2)
            print(
                f"label quality vs full qrels: AP={curve.average_precision:.3f} "
                f"best-F1={curve.best_f1:.3f} "
                f"({curve.num_scored} scored, {curve.num_excluded} unjudged excluded)"
            )


if __name__ == "__main__":
    main()
