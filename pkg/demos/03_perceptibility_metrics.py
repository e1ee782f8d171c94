"""How perceptible is a perturbation? Magnitude vs DSSIM.

Runs the Square attack at increasing epsilon on one pair and reports the
l2 magnitude and structural-dissimilarity of each adversarial image. The
two track each other closely: larger pixel budgets are more visible.
"""

import numpy as np

from advface import (
    AttackConfig,
    EpsilonBudget,
    FacePair,
    ToyEmbedder,
    VerifierConfig,
    annotate_trace,
    pearson,
    run_attack,
    verify,
)

DIMS = (16, 16, 3)  # large enough for the 11x11 SSIM window

oracle = ToyEmbedder(seed=0, input_dims=DIMS, embed_dim=128)
rng = np.random.default_rng(3)
source = rng.uniform(0.1, 0.9, DIMS)
target = np.clip(source + rng.normal(0, 0.03, DIMS), 0, 1)
pair = FacePair(source, target)
_, d0 = verify(oracle, pair, VerifierConfig(1.9))

print(f"{'epsilon':>7} {'outcome':<8} {'magnitude':>10} {'dssim':>8}")
mags, dssims = [], []
for eps in (6, 10, 14, 18, 22, 26):
    cfg = AttackConfig(budget=EpsilonBudget(float(eps)), d_b=d0 + 0.05,
                       query_limit=2000, step_rate=0.2, seed=1)
    trace = annotate_trace(run_attack("square", pair, oracle, cfg), pair.target)
    print(f"{eps:>7} {trace.outcome:<8} {trace.magnitude:>10.4f} {trace.dssim:>8.5f}")
    mags.append(trace.magnitude)
    dssims.append(trace.dssim)

print(f"\nPearson correlation(magnitude, dssim) = {pearson(mags, dssims):.4f}")
