"""Command-line entry point.

Subcommands: attack, sweep, threshold, survey-pack, survey-score, report.
Each prints a machine-readable JSON summary to stdout and exits 0 on
success.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from advface.attacks import AttackConfig, run_attack, write_trace_jsonl, read_trace_jsonl
from advface.harness import (
    OracleSpec,
    SweepConfig,
    cell_seed,
    emit_figure_data,
    load_pairs,
    run_sweep,
)
from advface.imageops import EpsilonBudget, FacePair, load_image, to_channels
from advface.metrics import read_summary_csv, summary_to_csv, SummaryRow
from advface.survey import SurveyManifest, build_packet, read_votes_csv, score_votes
from advface.threshold import curve_to_csv, score_pairs, select_threshold


def _add_oracle_flags(parser):
    parser.add_argument("--oracle", default="toy", choices=["toy", "external"])
    parser.add_argument("--oracle-seed", type=int, default=0)
    parser.add_argument("--oracle-dims", default="8x8x3",
                        help="toy oracle input dims, HxWxC")
    parser.add_argument("--embed-dim", type=int, default=128)
    parser.add_argument("--endpoint", default=None,
                        help="external oracle endpoint (cmd:... or tcp:host:port)")


def _oracle_spec(args) -> OracleSpec:
    dims = tuple(int(x) for x in args.oracle_dims.split("x"))
    return OracleSpec(kind=args.oracle, seed=args.oracle_seed, dims=dims,
                      embed_dim=args.embed_dim, endpoint=args.endpoint)


def _cmd_attack(args) -> int:
    oracle = _oracle_spec(args).build()
    channels = oracle.input_dims[2]
    pair = FacePair(to_channels(load_image(args.source), channels),
                    to_channels(load_image(args.target), channels))
    cfg = AttackConfig(budget=EpsilonBudget(args.epsilon), d_b=args.d_b,
                       query_limit=args.query_limit, step_rate=args.step_rate,
                       seed=args.seed)
    trace = run_attack(args.attack, pair, oracle, cfg)
    if args.out:
        with open(args.out, "w") as fh:
            write_trace_jsonl(trace, fh)
    print(json.dumps({
        "attack": trace.attack, "outcome": trace.outcome,
        "queries_used": trace.queries_used,
        "final_distance": trace.final_distance,
        "trace": args.out,
    }))
    return 0


def _cmd_sweep(args) -> int:
    cfg = SweepConfig.from_toml(args.config)
    rows = run_sweep(cfg)
    print(json.dumps({
        "output_dir": cfg.output_dir,
        "config_hash": cfg.config_hash(),
        "cells": len(rows),
        "summary": os.path.join(cfg.output_dir, "summary.csv"),
    }))
    return 0


def _cmd_threshold(args) -> int:
    oracle = _oracle_spec(args).build()
    channels = oracle.input_dims[2]
    pairs = [FacePair(to_channels(p.source, channels),
                      to_channels(p.target, channels), p.label)
             for p in load_pairs(args.pairs)]
    d_b, curve = select_threshold(score_pairs(pairs, oracle))
    curve_to_csv(curve, args.out)
    print(json.dumps({"d_b": d_b, "curve": args.out}))
    return 0


def _cmd_survey_pack(args) -> int:
    traces_dir = os.path.join(args.sweep_dir, "traces")
    images_dir = os.path.join(args.sweep_dir, "adv_images")
    pairs = load_pairs(args.pairs)
    traces, originals = [], []
    prefix = f"{args.attack}_eps{args.epsilon:g}_pair"
    for name in sorted(os.listdir(traces_dir)):
        if not (name.startswith(prefix) and name.endswith(".jsonl")):
            continue
        with open(os.path.join(traces_dir, name)) as fh:
            trace = read_trace_jsonl(fh)
        if trace.outcome != "SUCCESS":
            continue
        idx = int(name[len(prefix):-len(".jsonl")])
        trace.final_image = load_image(
            os.path.join(images_dir, name.replace(".jsonl", ".png")))
        traces.append(trace)
        originals.append(to_channels(pairs[idx].target, trace.final_image.shape[2]))
    manifest = build_packet(traces, originals, args.n, args.seed, args.out)
    print(json.dumps({"packet": args.out, "entries": len(manifest.entries)}))
    return 0


def _cmd_survey_score(args) -> int:
    with open(args.manifest) as fh:
        manifest = SurveyManifest.from_json(fh.read())
    accuracy = score_votes(manifest, read_votes_csv(args.votes))
    print(json.dumps({"human_accuracy": accuracy}))
    return 0


def _cmd_report(args) -> int:
    rows = read_summary_csv(os.path.join(args.sweep_dir, "summary.csv"))
    scores = {}
    if args.scores:
        with open(args.scores, newline="") as fh:
            for rec in csv.DictReader(fh):
                scores[(rec["attack"], float(rec["epsilon"]))] = \
                    float(rec["human_accuracy"])
    merged = [SummaryRow(r.attack, r.epsilon_255, r.success_rate,
                         r.avg_magnitude, r.avg_dssim, r.avg_queries,
                         scores.get((r.attack, r.epsilon_255), r.human_accuracy))
              for r in rows]
    summary_to_csv(merged, os.path.join(args.sweep_dir, "summary.csv"))
    emit_figure_data(merged, args.sweep_dir)
    print(json.dumps({"rows": len(merged), "sweep_dir": args.sweep_dir}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="advface",
        description="Black-box adversarial attacks on face verification.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("attack", help="run one attack on one pair")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--attack", required=True,
                   choices=["nes", "bandits", "simba", "square"])
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--d-b", type=float, default=1.14)
    p.add_argument("--query-limit", type=int, default=10_000)
    p.add_argument("--step-rate", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="trace JSONL path")
    _add_oracle_flags(p)
    p.set_defaults(func=_cmd_attack)

    p = sub.add_parser("sweep", help="run a full attack x epsilon sweep")
    p.add_argument("--config", required=True, help="sweep config TOML")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("threshold", help="select d_b by precision-recall analysis")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", default="pr_curve.csv")
    _add_oracle_flags(p)
    p.set_defaults(func=_cmd_threshold)

    p = sub.add_parser("survey-pack", help="build an anonymized survey packet")
    p.add_argument("--sweep-dir", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--attack", required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_survey_pack)

    p = sub.add_parser("survey-score", help="compute human accuracy from votes")
    p.add_argument("--manifest", required=True)
    p.add_argument("--votes", required=True)
    p.set_defaults(func=_cmd_survey_score)

    p = sub.add_parser("report", help="merge human accuracy into a sweep report")
    p.add_argument("--sweep-dir", required=True)
    p.add_argument("--scores", default=None,
                   help="CSV attack,epsilon,human_accuracy")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
