"""Decision-boundary selection via precision-recall analysis.

A pair is predicted MATCH iff its feature distance is strictly below the
threshold. Candidate thresholds are midpoints between consecutive distinct
distances plus sentinels outside the observed range; the max-F1 candidate
wins, ties broken toward the smallest threshold.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from advface.oracle import QueryLedger, VerifierConfig, verify


@dataclass(frozen=True)
class ScoredPair:
    distance: float
    label: int  # 1 = same identity

    def __post_init__(self):
        if self.distance < 0:
            raise ValueError("distance must be non-negative")


@dataclass(frozen=True)
class PRPoint:
    threshold: float
    precision: float
    recall: float
    f1: float


class DegenerateScoresError(ValueError):
    """Scores contain only one class; no threshold is defined."""


def score_pairs(pairs, oracle) -> list[ScoredPair]:
    """Feature distance + label for each pair. Queries are not charged to
    any attack ledger."""
    if not pairs:
        raise ValueError("empty pair list")
    out = []
    for i, pair in enumerate(pairs):
        try:
            _, dist = verify(pair=pair, oracle=oracle, cfg=VerifierConfig(1.0),
                             ledger=QueryLedger())
        except Exception as exc:
            raise RuntimeError(f"oracle failed on pair {i}: {exc}") from exc
        out.append(ScoredPair(dist, pair.label))
    return out


def _pr_at(threshold: float, distances: np.ndarray, labels: np.ndarray) -> PRPoint:
    predicted = distances < threshold
    tp = int(np.sum(predicted & (labels == 1)))
    fp = int(np.sum(predicted & (labels == 0)))
    fn = int(np.sum(~predicted & (labels == 1)))
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return PRPoint(threshold, precision, recall, f1)


def select_threshold(scores) -> tuple[float, list[PRPoint]]:
    """Pick the max-F1 threshold over midpoint candidates; returns the full curve."""
    labels = np.array([s.label for s in scores])
    distances = np.array([s.distance for s in scores])
    if len(set(labels.tolist())) < 2:
        raise DegenerateScoresError("need at least one positive and one negative")
    distinct = np.unique(distances)
    candidates = [float(distinct[0]) - 1.0]
    candidates += [float((a + b) / 2.0) for a, b in zip(distinct[:-1], distinct[1:])]
    candidates.append(float(distinct[-1]) + 1.0)
    curve = [_pr_at(t, distances, labels) for t in candidates]
    best = max(curve, key=lambda p: (p.f1, -p.threshold))
    return best.threshold, curve


def curve_to_csv(curve, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "precision", "recall", "f1"])
        for p in curve:
            writer.writerow([repr(p.threshold), repr(p.precision),
                             repr(p.recall), repr(p.f1)])
