"""End-to-end perceptibility survey: pack images, collect votes, score.

Builds a packet of altered/unaltered images from successful attacks,
simulates 11 workers voting on each image, and scores the majority labels
against ground truth. In a real study the votes CSV comes from human
raters; everything else is identical.
"""

import csv
import tempfile

import numpy as np

from advface import (
    AttackConfig,
    EpsilonBudget,
    FacePair,
    ToyEmbedder,
    VerifierConfig,
    annotate_trace,
    run_attack,
    verify,
)
from advface.survey import ALTERED, NOT_ALTERED, SurveyManifest, build_packet, score_votes
from advface.survey import read_votes_csv

DIMS = (8, 8, 3)
N_IMAGES = 6

oracle = ToyEmbedder(seed=0, input_dims=DIMS, embed_dim=128)
rng = np.random.default_rng(5)

traces, originals = [], []
while len(traces) < N_IMAGES:
    src = rng.uniform(0.1, 0.9, DIMS)
    tgt = np.clip(src + rng.normal(0, 0.03, DIMS), 0, 1)
    pair = FacePair(src, tgt)
    _, d0 = verify(oracle, pair, VerifierConfig(1.9))
    cfg = AttackConfig(budget=EpsilonBudget(16.0), d_b=d0 + 0.03,
                       query_limit=2000, step_rate=0.2, seed=len(traces))
    trace = annotate_trace(run_attack("square", pair, oracle, cfg), tgt)
    if trace.outcome == "SUCCESS":
        traces.append(trace)
        originals.append(tgt)

with tempfile.TemporaryDirectory() as tmp:
    manifest = build_packet(traces, originals, n=N_IMAGES, seed=9, out_dir=tmp)
    print(f"packet: {len(manifest.entries)} images "
          f"({sum(e.altered for e in manifest.entries)} altered)")

    # simulate 11 workers: 80% accurate on altered, 70% on unaltered
    votes_path = f"{tmp}/votes.csv"
    vote_rng = np.random.default_rng(123)
    with open(votes_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_id", "worker_id", "answer"])
        for entry in manifest.entries:
            truth = ALTERED if entry.altered else NOT_ALTERED
            other = NOT_ALTERED if entry.altered else ALTERED
            p = 0.8 if entry.altered else 0.7
            for worker in range(11):
                answer = truth if vote_rng.random() < p else other
                writer.writerow([entry.image_id, f"w{worker}", answer])

    acc = score_votes(manifest, read_votes_csv(votes_path))
    print(f"human accuracy over the packet: {acc:.3f}")
