"""Pick a verification decision boundary from labeled pair distances.

Scores synthetic genuine and impostor pairs against the toy oracle, sweeps
all candidate thresholds, and selects the one maximizing F1 on the MATCH
class. The full precision-recall curve is printed as CSV.
"""

import sys
import tempfile

import numpy as np

from advface import FacePair, ToyEmbedder, score_pairs, select_threshold
from advface.threshold import curve_to_csv

DIMS = (8, 8, 3)

oracle = ToyEmbedder(seed=0, input_dims=DIMS, embed_dim=128)
rng = np.random.default_rng(42)

pairs = []
for _ in range(30):  # genuine: target is a small perturbation of source
    src = rng.uniform(0.1, 0.9, DIMS)
    pairs.append(FacePair(src, np.clip(src + rng.normal(0, 0.03, DIMS), 0, 1),
                          label=1))
for _ in range(30):  # impostor: two unrelated images
    pairs.append(FacePair(rng.uniform(0, 1, DIMS), rng.uniform(0, 1, DIMS),
                          label=0))

scored = score_pairs(pairs, oracle)
threshold, curve = select_threshold(scored)

best = max(curve, key=lambda p: p.f1)
print(f"selected d_b = {threshold:.4f} with F1 = {best.f1:.4f}", file=sys.stderr)
with tempfile.NamedTemporaryFile("r", suffix=".csv") as tmp:
    curve_to_csv(curve, tmp.name)
    sys.stdout.write(open(tmp.name).read())
