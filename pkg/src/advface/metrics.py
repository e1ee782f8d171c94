"""Attack-quality metrics: l2 magnitude, SSIM/DSSIM, summary rows, correlation.

SSIM uses the canonical 11x11 Gaussian window (sigma 1.5) with k1=0.01,
k2=0.03 on dynamic range 1.0, averaged over all valid window centers and
channels. DSSIM is (1 - SSIM) / 2.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from advface.attacks import SUCCESS, AttackTrace
from advface.imageops import as_image, l2_diff


@dataclass(frozen=True)
class SsimConfig:
    window_size: int = 11
    sigma: float = 1.5
    dynamic_range: float = 1.0  # L
    k1: float = 0.01
    k2: float = 0.03

    @property
    def c1(self) -> float:
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.dynamic_range) ** 2

    def window(self) -> np.ndarray:
        """2D Gaussian weights, normalized to sum to 1."""
        half = (self.window_size - 1) / 2.0
        coords = np.arange(self.window_size) - half
        g = np.exp(-(coords**2) / (2.0 * self.sigma**2))
        w = np.outer(g, g)
        return w / w.sum()


@dataclass(frozen=True)
class SummaryRow:
    attack: str
    epsilon_255: float
    success_rate: float
    avg_magnitude: float | None  # over successful traces; None when none succeed
    avg_dssim: float | None
    avg_queries: float
    human_accuracy: float | None = None


def magnitude(adv, orig) -> float:
    """l2 norm of the final perturbation on the [0,1] scale."""
    return l2_diff(adv, orig)


def ssim(a, b, cfg: SsimConfig = SsimConfig()) -> float:
    a = as_image(a)
    b = as_image(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    k = cfg.window_size
    if min(a.shape[0], a.shape[1]) < k:
        raise ValueError(f"image smaller than {k}x{k} SSIM window")
    w = cfg.window()
    values = []
    for ch in range(a.shape[2]):
        x = sliding_window_view(a[:, :, ch], (k, k))
        y = sliding_window_view(b[:, :, ch], (k, k))
        mu_x = np.tensordot(x, w, axes=([2, 3], [0, 1]))
        mu_y = np.tensordot(y, w, axes=([2, 3], [0, 1]))
        xx = np.tensordot(x * x, w, axes=([2, 3], [0, 1]))
        yy = np.tensordot(y * y, w, axes=([2, 3], [0, 1]))
        xy = np.tensordot(x * y, w, axes=([2, 3], [0, 1]))
        var_x = xx - mu_x**2
        var_y = yy - mu_y**2
        cov = xy - mu_x * mu_y
        num = (2 * mu_x * mu_y + cfg.c1) * (2 * cov + cfg.c2)
        den = (mu_x**2 + mu_y**2 + cfg.c1) * (var_x + var_y + cfg.c2)
        values.append(num / den)
    return float(np.mean(values))


def dssim(a, b, cfg: SsimConfig = SsimConfig()) -> float:
    return (1.0 - ssim(a, b, cfg)) / 2.0


def annotate_trace(trace: AttackTrace, original, cfg: SsimConfig = SsimConfig()) -> AttackTrace:
    """Fill the trace's magnitude and (when the image is large enough) DSSIM."""
    if trace.final_image is None:
        raise ValueError("trace has no final image to measure")
    trace.magnitude = magnitude(trace.final_image, original)
    original = as_image(original)
    if min(original.shape[0], original.shape[1]) >= cfg.window_size:
        trace.dssim = dssim(trace.final_image, original, cfg)
    return trace


def aggregate_summary(traces, votes: float | None = None) -> SummaryRow:
    """One Table-style row for traces sharing (attack, epsilon).

    Success rate is over all traces; magnitude/DSSIM averages cover
    successful traces only. ``votes`` is a precomputed human accuracy.
    """
    traces = list(traces)
    if not traces:
        raise ValueError("empty trace list")
    keys = {(t.attack, t.epsilon_255) for t in traces}
    if len(keys) != 1:
        raise ValueError(f"traces mix (attack, epsilon) cells: {sorted(keys)}")
    attack, eps = keys.pop()
    successes = [t for t in traces if t.outcome == SUCCESS]
    mags = [t.magnitude for t in successes if t.magnitude is not None]
    dssims = [t.dssim for t in successes if t.dssim is not None]
    return SummaryRow(
        attack=attack,
        epsilon_255=eps,
        success_rate=len(successes) / len(traces),
        avg_magnitude=float(np.mean(mags)) if mags else None,
        avg_dssim=float(np.mean(dssims)) if dssims else None,
        avg_queries=float(np.mean([t.queries_used for t in traces])),
        human_accuracy=votes,
    )


def pearson(xs, ys) -> float:
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1 or len(xs) < 3:
        raise ValueError("need two equal-length 1D sequences of length >= 3")
    xc = xs - xs.mean()
    yc = ys - ys.mean()
    sx = np.sqrt(np.sum(xc**2))
    sy = np.sqrt(np.sum(yc**2))
    if sx == 0.0 or sy == 0.0:
        raise ValueError("degenerate variance")
    return float(np.sum(xc * yc) / (sx * sy))


SUMMARY_COLUMNS = [
    "attack", "epsilon", "success_rate", "human_accuracy",
    "avg_magnitude", "avg_dssim", "avg_queries",
]


def _fmt(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


def summary_to_csv(rows, path) -> None:
    """Write summary rows in the canonical column order."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for r in rows:
            writer.writerow([
                r.attack, _fmt(r.epsilon_255), _fmt(r.success_rate),
                _fmt(r.human_accuracy), _fmt(r.avg_magnitude),
                _fmt(r.avg_dssim), _fmt(r.avg_queries),
            ])


def read_summary_csv(path) -> list[SummaryRow]:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(SummaryRow(
                attack=rec["attack"],
                epsilon_255=float(rec["epsilon"]),
                success_rate=float(rec["success_rate"]),
                human_accuracy=float(rec["human_accuracy"]) if rec["human_accuracy"] else None,
                avg_magnitude=float(rec["avg_magnitude"]) if rec["avg_magnitude"] else None,
                avg_dssim=float(rec["avg_dssim"]) if rec["avg_dssim"] else None,
                avg_queries=float(rec["avg_queries"]),
            ))
    return rows
