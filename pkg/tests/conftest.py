import csv
import os

import numpy as np
import pytest

from advface.imageops import FacePair, save_image
from advface.oracle import ToyEmbedder

TOY_DIMS = (8, 8, 3)


def make_pair(rng, dims=TOY_DIMS, noise=0.03) -> FacePair:
    """A matching pair: target is the source plus small pixel noise."""
    src = rng.uniform(0.1, 0.9, dims)
    tgt = np.clip(src + rng.normal(0.0, noise, dims), 0.0, 1.0)
    return FacePair(src, tgt)


def make_pair_files(root, n_pairs, dims, seed, noise=0.03) -> str:
    """Write a PNG pair set plus pairs.csv; returns the CSV path."""
    rng = np.random.default_rng(seed)
    os.makedirs(root, exist_ok=True)
    rows = []
    for i in range(n_pairs):
        pair = make_pair(rng, dims, noise)
        save_image(pair.source, os.path.join(root, f"src{i}.png"))
        save_image(pair.target, os.path.join(root, f"tgt{i}.png"))
        rows.append((f"src{i}.png", f"tgt{i}.png", 1))
    path = os.path.join(root, "pairs.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source", "target", "label"])
        writer.writerows(rows)
    return path


@pytest.fixture(scope="session")
def toy_oracle():
    return ToyEmbedder(seed=0, input_dims=TOY_DIMS, embed_dim=128)
